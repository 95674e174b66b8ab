#!/usr/bin/env node
/**
 * Bridge server: NDJSON over stdio (default) or HTTP POST /judge.
 *
 * Stdio mode emits a hello handshake, then answers one JSON response per
 * request line; malformed input produces {"id", "error"} instead of
 * killing the stream. Requests are handled serially (max_in_flight: 1).
 */

import { createServer } from 'node:http';
import { createInterface } from 'node:readline';

import { DEFAULT_CONFIG, ModelConfig, generateTokens, judgePair, tokenize } from './model.js';
import { WatermarkSpec, WireResponse, hello } from './protocol.js';

interface LooseRequest {
  id?: string;
  type?: string;
  task?: string;
  context?: string;
  a?: string;
  b?: string;
  prompt?: string;
  wm?: WatermarkSpec | null;
  max_tokens?: number;
}

export function handleRequest(cfg: ModelConfig, raw: unknown): WireResponse {
  const req = raw as LooseRequest;
  const id = typeof req.id === 'string' ? req.id : null;
  try {
    if (req.type === 'judge') {
      if (typeof req.a !== 'string' || typeof req.b !== 'string') {
        throw new RangeError('judge request needs string fields a and b');
      }
      return { id: req.id!, p_a: judgePair(cfg, req.context ?? '', req.a, req.b) };
    }
    if (req.type === 'generate') {
      if (typeof req.prompt !== 'string') {
        throw new RangeError('generate request needs a string prompt');
      }
      const tokens = generateTokens(
        cfg,
        tokenize(req.prompt, cfg.vocabSize),
        req.wm ?? null,
        req.max_tokens ?? 60,
      );
      return { id: req.id!, token_ids: tokens, text: tokens.join(' ') };
    }
    throw new RangeError(`unknown request type ${String(req.type)}`);
  } catch (err) {
    return { id, error: err instanceof Error ? err.message : String(err) };
  }
}

export async function runStdioServer(cfg: ModelConfig = DEFAULT_CONFIG): Promise<void> {
  process.stdout.write(JSON.stringify(hello()) + '\n');
  const rl = createInterface({ input: process.stdin });
  for await (const line of rl) {
    if (!line.trim()) continue;
    let parsed: unknown;
    try {
      parsed = JSON.parse(line);
    } catch {
      process.stdout.write(JSON.stringify({ id: null, error: 'invalid JSON' }) + '\n');
      continue;
    }
    process.stdout.write(JSON.stringify(handleRequest(cfg, parsed)) + '\n');
  }
}

export function runHttpServer(port: number, cfg: ModelConfig = DEFAULT_CONFIG): void {
  const server = createServer((req, res) => {
    if (req.method !== 'POST' || req.url !== '/judge') {
      res.writeHead(404).end();
      return;
    }
    const chunks: Buffer[] = [];
    req.on('data', (c) => chunks.push(c));
    req.on('end', () => {
      let body: unknown;
      try {
        body = JSON.parse(Buffer.concat(chunks).toString('utf-8'));
      } catch {
        res.writeHead(400, { 'Content-Type': 'application/json' });
        res.end(JSON.stringify({ id: null, error: 'invalid JSON' }));
        return;
      }
      const response = handleRequest(cfg, body);
      res.writeHead('error' in response ? 400 : 200, {
        'Content-Type': 'application/json',
      });
      res.end(JSON.stringify(response));
    });
  });
  server.listen(port, () => {
    process.stderr.write(`bridge listening on :${port}\n`);
  });
}

const isMain = import.meta.url === `file://${process.argv[1]}`;
if (isMain) {
  const portFlag = process.argv.indexOf('--http');
  if (portFlag >= 0) {
    runHttpServer(Number(process.argv[portFlag + 1] ?? 8077));
  } else {
    void runStdioServer();
  }
}
