// Wire protocol shared with the Python client. Shapes are fixed:
//   POST /generate  {texts, beams, max_tokens, num_return} -> {questions: string[][], truncated: boolean[]}
//   POST /embed     {texts}                                -> {tokens: string[][], vectors: number[][][]}
// All outer arrays are parallel to the request's `texts`.

export class ProtocolError extends Error {
  constructor(
    public readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ProtocolError";
  }
}

export interface GenerateRequest {
  texts: string[];
  beams: number;
  maxTokens: number;
  numReturn: number;
}

export interface GenerateResponse {
  questions: string[][];
  truncated: boolean[];
}

export interface EmbedRequest {
  texts: string[];
}

export interface EmbedResponse {
  tokens: string[][];
  vectors: number[][][];
}

function requireTexts(body: Record<string, unknown>): string[] {
  const texts = body.texts;
  if (!Array.isArray(texts)) {
    throw new ProtocolError(400, "'texts' must be an array of strings");
  }
  for (const [i, text] of texts.entries()) {
    if (typeof text !== "string") {
      throw new ProtocolError(400, `texts[${i}] is not a string`);
    }
    if (text.trim().length === 0) {
      throw new ProtocolError(400, `texts[${i}] is empty`);
    }
  }
  return texts as string[];
}

function optionalPositiveInt(
  body: Record<string, unknown>,
  key: string,
  fallback: number,
): number {
  const value = body[key];
  if (value === undefined || value === null) return fallback;
  if (typeof value !== "number" || !Number.isInteger(value) || value < 1) {
    throw new ProtocolError(400, `'${key}' must be a positive integer`);
  }
  return value;
}

export function parseGenerateRequest(body: unknown): GenerateRequest {
  if (typeof body !== "object" || body === null || Array.isArray(body)) {
    throw new ProtocolError(400, "request body must be a JSON object");
  }
  const record = body as Record<string, unknown>;
  return {
    texts: requireTexts(record),
    beams: optionalPositiveInt(record, "beams", 4),
    maxTokens: optionalPositiveInt(record, "max_tokens", 64),
    numReturn: optionalPositiveInt(record, "num_return", 1),
  };
}

export function parseEmbedRequest(body: unknown): EmbedRequest {
  if (typeof body !== "object" || body === null || Array.isArray(body)) {
    throw new ProtocolError(400, "request body must be a JSON object");
  }
  return { texts: requireTexts(body as Record<string, unknown>) };
}
