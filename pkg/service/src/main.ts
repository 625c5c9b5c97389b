import {
  DEFAULT_EMBEDDING_MODEL,
  DEFAULT_GENERATION_MODEL,
  createStubBackend,
  createTransformersBackend,
} from "./backends.js";
import { createServer } from "./server.js";

async function main(): Promise<void> {
  const port = Number(process.env.PORT ?? 8080);
  const kind = process.env.QG_BACKEND ?? "transformers";
  const maxBatchSize = Number(process.env.MAX_BATCH_SIZE ?? 64);

  let backend;
  if (kind === "stub") {
    backend = createStubBackend({
      embeddingDim: Number(process.env.STUB_EMBED_DIM ?? 32),
      seed: Number(process.env.STUB_SEED ?? 0),
    });
  } else if (kind === "transformers") {
    try {
      backend = await createTransformersBackend({
        generationModel: process.env.GEN_MODEL_ID ?? DEFAULT_GENERATION_MODEL,
        embeddingModel: process.env.EMBED_MODEL_ID ?? DEFAULT_EMBEDDING_MODEL,
      });
    } catch (error) {
      // Models must load at startup; a service that cannot serve refuses to start.
      console.error(`failed to load models: ${(error as Error).message}`);
      console.error("set QG_BACKEND=stub for the deterministic offline backend");
      process.exit(1);
    }
  } else {
    console.error(`unknown QG_BACKEND: ${kind} (expected 'transformers' or 'stub')`);
    process.exit(1);
  }

  const server = createServer(backend, { maxBatchSize });
  server.listen(port, () => {
    const address = server.address();
    const actual = typeof address === "object" && address ? address.port : port;
    console.log(`listening on :${actual} (backend=${backend.id})`);
  });
}

main();
