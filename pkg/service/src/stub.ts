// Deterministic offline model: frequency-based question templates and
// hash-seeded unit vectors. Exists so the wire protocol and the client's
// ordering/retry machinery can be exercised without model weights.

const STOPWORDS = new Set([
  "a", "about", "an", "and", "are", "as", "at", "be", "been", "but", "by",
  "can", "could", "did", "do", "does", "for", "from", "had", "has", "have",
  "he", "i", "if", "in", "is", "it", "its", "no", "not", "of", "on", "or",
  "she", "that", "the", "their", "these", "they", "this", "those", "to",
  "was", "we", "were", "what", "will", "with", "would", "you",
]);

export const FALLBACK_QUESTION = "what is this text about";

export function tokenize(text: string): string[] {
  return text.toLowerCase().match(/[a-z0-9]+/g) ?? [];
}

export function stubQuestions(text: string, numReturn: number): string[] {
  const counts = new Map<string, number>();
  for (const token of tokenize(text)) {
    if (STOPWORDS.has(token)) continue;
    counts.set(token, (counts.get(token) ?? 0) + 1);
  }
  const ranked = [...counts.entries()].sort(
    (a, b) => b[1] - a[1] || (a[0] < b[0] ? -1 : 1),
  );
  const questions = ranked.slice(0, numReturn).map(([token]) => `what is ${token}`);
  while (questions.length < numReturn) questions.push(FALLBACK_QUESTION);
  return questions;
}

// 32-bit FNV-1a; stable across platforms and runs.
function fnv1a(input: string): number {
  let hash = 0x811c9dc5;
  for (let i = 0; i < input.length; i++) {
    hash ^= input.charCodeAt(i);
    hash = Math.imul(hash, 0x01000193);
  }
  return hash >>> 0;
}

function mulberry32(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state + 0x6d2b79f5) >>> 0;
    let t = state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export function stubVector(token: string, dim: number, seed = 0): number[] {
  const next = mulberry32(fnv1a(`${seed}|${token}`));
  const raw = Array.from({ length: dim }, () => next() * 2 - 1);
  const norm = Math.hypot(...raw);
  return raw.map((value) => value / (norm || 1));
}

export function stubEmbedding(
  text: string,
  dim: number,
  seed = 0,
): { tokens: string[]; vectors: number[][] } {
  const tokens = tokenize(text);
  if (tokens.length === 0) {
    throw new Error(`text has no embeddable tokens: ${JSON.stringify(text)}`);
  }
  return { tokens, vectors: tokens.map((token) => stubVector(token, dim, seed)) };
}
