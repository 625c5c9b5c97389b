import { ProtocolError } from "./protocol.js";
import { stubEmbedding, stubQuestions, tokenize } from "./stub.js";

export interface GenerateOptions {
  beams: number;
  maxTokens: number;
  numReturn: number;
}

export interface ModelBackend {
  readonly id: string;
  readonly generationModel: string;
  readonly embeddingModel: string;
  generate(
    texts: string[],
    options: GenerateOptions,
  ): Promise<{ questions: string[][]; truncated: boolean[] }>;
  embed(texts: string[]): Promise<{ tokens: string[][]; vectors: number[][][] }>;
}

export interface StubOptions {
  embeddingDim?: number;
  seed?: number;
  maxInputTokens?: number;
}

export function createStubBackend(options: StubOptions = {}): ModelBackend {
  const dim = options.embeddingDim ?? 32;
  const seed = options.seed ?? 0;
  const maxInputTokens = options.maxInputTokens ?? 512;
  return {
    id: "stub",
    generationModel: "stub-frequency-v1",
    embeddingModel: `stub-hash-${dim}d`,
    async generate(texts, { numReturn }) {
      const truncated = texts.map((text) => tokenize(text).length > maxInputTokens);
      const questions = texts.map((text) => stubQuestions(text, numReturn));
      return { questions, truncated };
    },
    async embed(texts) {
      const tokens: string[][] = [];
      const vectors: number[][][] = [];
      for (const text of texts) {
        let embedded;
        try {
          embedded = stubEmbedding(text, dim, seed);
        } catch (error) {
          throw new ProtocolError(400, (error as Error).message);
        }
        tokens.push(embedded.tokens);
        vectors.push(embedded.vectors);
      }
      return { tokens, vectors };
    },
  };
}

export interface TransformersOptions {
  generationModel?: string;
  embeddingModel?: string;
  maxInputTokens?: number;
}

export const DEFAULT_GENERATION_MODEL = "castorini/doc2query-t5-base-msmarco";
export const DEFAULT_EMBEDDING_MODEL = "Xenova/bert-base-uncased";

/**
 * Real-model backend on top of transformers.js. The dependency is optional:
 * loading fails cleanly when the package or the model weights are
 * unavailable, and the caller decides whether that is fatal (server
 * startup) or a reason to skip (guarded smoke tests).
 */
export async function createTransformersBackend(
  options: TransformersOptions = {},
): Promise<ModelBackend> {
  const generationModel = options.generationModel ?? DEFAULT_GENERATION_MODEL;
  const embeddingModel = options.embeddingModel ?? DEFAULT_EMBEDDING_MODEL;
  const maxInputTokens = options.maxInputTokens ?? 512;

  // Optional dependency: typings are absent when only the stub backend is
  // installed, and the import itself fails without the package or weights.
  // @ts-ignore
  const transformers: any = await import("@huggingface/transformers");
  const generator = await transformers.pipeline("text2text-generation", generationModel);
  const extractor = await transformers.pipeline("feature-extraction", embeddingModel);

  return {
    id: "transformers",
    generationModel,
    embeddingModel,
    async generate(texts, { beams, maxTokens, numReturn }) {
      const questions: string[][] = [];
      const truncated: boolean[] = [];
      for (const text of texts) {
        const inputIds = generator.tokenizer.encode(text);
        truncated.push(inputIds.length > maxInputTokens);
        const outputs = (await generator(text, {
          max_new_tokens: maxTokens,
          num_beams: beams,
          num_return_sequences: numReturn,
          do_sample: false,
        })) as Array<{ generated_text: string }>;
        questions.push(outputs.map((output) => output.generated_text.trim()));
      }
      return { questions, truncated };
    },
    async embed(texts) {
      const tokens: string[][] = [];
      const vectors: number[][][] = [];
      for (const text of texts) {
        const textTokens = extractor.tokenizer.tokenize(text) as string[];
        if (textTokens.length === 0) {
          throw new ProtocolError(400, `text has no embeddable tokens: ${JSON.stringify(text)}`);
        }
        const output = await extractor(text);
        // Output dims are [tokens, hidden] or [1, tokens, hidden]
        // depending on the model; flatten to one row per token. Special
        // tokens ([CLS]/[SEP]) are dropped so rows parallel textTokens.
        const dims = output.dims as number[];
        const data = output.data as Float32Array;
        const hidden = dims[dims.length - 1];
        const rows = data.length / hidden;
        const all: number[][] = [];
        for (let row = 0; row < rows; row++) {
          all.push(Array.from(data.slice(row * hidden, (row + 1) * hidden)));
        }
        const body = all.length === textTokens.length + 2 ? all.slice(1, -1) : all;
        if (body.length !== textTokens.length) {
          throw new Error(
            `token/vector mismatch: ${textTokens.length} tokens, ${body.length} vectors`,
          );
        }
        tokens.push(textTokens);
        vectors.push(body);
      }
      return { tokens, vectors };
    },
  };
}
