import http from "node:http";

import type { ModelBackend } from "./backends.js";
import {
  ProtocolError,
  parseEmbedRequest,
  parseGenerateRequest,
} from "./protocol.js";

export const SERVICE_VERSION = "0.1.0";

export interface ServerOptions {
  maxBatchSize?: number;
  maxBodyBytes?: number;
}

function sendJson(res: http.ServerResponse, status: number, payload: unknown): void {
  const body = JSON.stringify(payload);
  res.writeHead(status, {
    "Content-Type": "application/json",
    "Content-Length": Buffer.byteLength(body),
  });
  res.end(body);
}

function readBody(req: http.IncomingMessage, limit: number): Promise<string> {
  return new Promise((resolve, reject) => {
    const chunks: Buffer[] = [];
    let size = 0;
    req.on("data", (chunk: Buffer) => {
      size += chunk.length;
      if (size > limit) {
        reject(new ProtocolError(413, `request body exceeds ${limit} bytes`));
        req.destroy();
        return;
      }
      chunks.push(chunk);
    });
    req.on("end", () => resolve(Buffer.concat(chunks).toString("utf-8")));
    req.on("error", reject);
  });
}

export function createServer(
  backend: ModelBackend,
  options: ServerOptions = {},
): http.Server {
  const maxBatchSize = options.maxBatchSize ?? 64;
  const maxBodyBytes = options.maxBodyBytes ?? 8 * 1024 * 1024;

  return http.createServer(async (req, res) => {
    try {
      const url = new URL(req.url ?? "/", "http://localhost");
      if (url.pathname === "/health") {
        if (req.method !== "GET") throw new ProtocolError(405, "use GET /health");
        sendJson(res, 200, {
          status: "ok",
          backend: backend.id,
          models: {
            generation: backend.generationModel,
            embedding: backend.embeddingModel,
          },
          versions: { service: SERVICE_VERSION, node: process.version },
        });
        return;
      }
      if (url.pathname !== "/generate" && url.pathname !== "/embed") {
        throw new ProtocolError(404, `no such endpoint: ${url.pathname}`);
      }
      if (req.method !== "POST") {
        throw new ProtocolError(405, `use POST ${url.pathname}`);
      }

      const raw = await readBody(req, maxBodyBytes);
      let body: unknown;
      try {
        body = JSON.parse(raw);
      } catch {
        throw new ProtocolError(400, "request body is not valid JSON");
      }

      if (url.pathname === "/generate") {
        const request = parseGenerateRequest(body);
        if (request.texts.length > maxBatchSize) {
          throw new ProtocolError(
            413,
            `batch of ${request.texts.length} exceeds max batch size ${maxBatchSize}`,
          );
        }
        const { questions, truncated } = await backend.generate(request.texts, {
          beams: request.beams,
          maxTokens: request.maxTokens,
          numReturn: request.numReturn,
        });
        sendJson(res, 200, { questions, truncated });
      } else {
        const request = parseEmbedRequest(body);
        if (request.texts.length > maxBatchSize) {
          throw new ProtocolError(
            413,
            `batch of ${request.texts.length} exceeds max batch size ${maxBatchSize}`,
          );
        }
        const { tokens, vectors } = await backend.embed(request.texts);
        sendJson(res, 200, { tokens, vectors });
      }
    } catch (error) {
      if (error instanceof ProtocolError) {
        sendJson(res, error.status, { error: error.message });
      } else {
        sendJson(res, 500, { error: (error as Error).message });
      }
    }
  });
}
