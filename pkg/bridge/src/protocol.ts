/**
 * Wire protocol types: newline-delimited JSON over a byte stream, or
 * HTTP POST /judge. Unknown fields are ignored; u64 seeds travel as
 * decimal strings because JSON numbers lose precision past 2^53.
 */

export interface WatermarkSpec {
  seed: string;
  g: number;
  delta: number;
}

export interface JudgeRequest {
  id: string;
  type: 'judge';
  task?: string;
  context?: string;
  a: string;
  b: string;
}

export interface GenerateRequest {
  id: string;
  type: 'generate';
  prompt: string;
  wm: WatermarkSpec | null;
  max_tokens: number;
}

export type WireRequest = JudgeRequest | GenerateRequest;

export interface JudgeResponse {
  id: string;
  p_a: number;
}

export interface GenerateResponse {
  id: string;
  token_ids: number[];
  text: string;
}

export interface ErrorResponse {
  id: string | null;
  error: string;
}

export type WireResponse = JudgeResponse | GenerateResponse | ErrorResponse;

export interface Hello {
  type: 'hello';
  capabilities: string[];
  max_in_flight: number;
}

export function hello(): Hello {
  return { type: 'hello', capabilities: ['judge', 'generate'], max_in_flight: 1 };
}
