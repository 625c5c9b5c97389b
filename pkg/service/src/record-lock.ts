// Pin the current local model cache: npm run record-lock [-- <cacheDir>]
import { DEFAULT_CACHE_DIR, DEFAULT_LOCK_PATH, writeLock } from "./model-lock.js";

const cacheDir = process.argv[2] ?? DEFAULT_CACHE_DIR;
writeLock(DEFAULT_LOCK_PATH, cacheDir)
  .then((lock) => {
    console.log(`pinned ${Object.keys(lock.files).length} file(s) from ${cacheDir}`);
  })
  .catch((error) => {
    console.error(`failed: ${(error as Error).message}`);
    process.exit(1);
  });
