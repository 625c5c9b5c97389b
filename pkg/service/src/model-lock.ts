// Checkpoint pinning for golden/smoke tests: hash every file under the
// local model cache and compare against models.lock.json. When the lock is
// missing or the cache has changed, dependent tests skip instead of
// asserting against unknown weights.

import { createHash } from "node:crypto";
import { promises as fs } from "node:fs";
import path from "node:path";

export interface ModelLock {
  cacheDir: string;
  files: Record<string, string>;
}

export const DEFAULT_CACHE_DIR = process.env.MODEL_CACHE_DIR ?? "models";
export const DEFAULT_LOCK_PATH = "models.lock.json";

async function* walk(dir: string): AsyncGenerator<string> {
  for (const entry of await fs.readdir(dir, { withFileTypes: true })) {
    const full = path.join(dir, entry.name);
    if (entry.isDirectory()) {
      yield* walk(full);
    } else if (entry.isFile()) {
      yield full;
    }
  }
}

export async function computeLock(cacheDir: string): Promise<ModelLock> {
  const files: Record<string, string> = {};
  for await (const file of walk(cacheDir)) {
    const digest = createHash("sha256").update(await fs.readFile(file)).digest("hex");
    files[path.relative(cacheDir, file)] = digest;
  }
  return { cacheDir, files };
}

export type LockStatus =
  | { kind: "match" }
  | { kind: "no-lock"; detail: string }
  | { kind: "no-cache"; detail: string }
  | { kind: "mismatch"; detail: string };

export async function verifyLock(
  lockPath: string = DEFAULT_LOCK_PATH,
  cacheDir: string = DEFAULT_CACHE_DIR,
): Promise<LockStatus> {
  let lock: ModelLock;
  try {
    lock = JSON.parse(await fs.readFile(lockPath, "utf-8")) as ModelLock;
  } catch {
    return { kind: "no-lock", detail: `no pinned checkpoint at ${lockPath}` };
  }
  let current: ModelLock;
  try {
    current = await computeLock(cacheDir);
  } catch {
    return { kind: "no-cache", detail: `no model cache at ${cacheDir}` };
  }
  const expected = Object.entries(lock.files).sort();
  const actual = Object.entries(current.files).sort();
  if (JSON.stringify(expected) !== JSON.stringify(actual)) {
    return { kind: "mismatch", detail: "model cache differs from pinned checksums" };
  }
  return { kind: "match" };
}

export async function writeLock(
  lockPath: string = DEFAULT_LOCK_PATH,
  cacheDir: string = DEFAULT_CACHE_DIR,
): Promise<ModelLock> {
  const lock = await computeLock(cacheDir);
  await fs.writeFile(lockPath, JSON.stringify(lock, null, 2) + "\n", "utf-8");
  return lock;
}
