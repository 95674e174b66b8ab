/**
 * Deterministic stand-in model behind the bridge.
 *
 * A real deployment would put a transformer here; this implementation
 * derives its logits from the same keyed hash family as the watermark so
 * the whole wire pipeline (generation with in-pipeline biasing, both-order
 * judging) runs hermetically and reproducibly. The protocol surface is
 * identical either way.
 */

import {
  GreenListRule,
  greenMask,
  mix64,
  pairHashUnit,
  unitStream,
} from './hash.js';
import { WatermarkSpec } from './protocol.js';

export interface ModelConfig {
  vocabSize: number;
  modelSeed: bigint;
  /** logit spread; larger means a more peaked next-token distribution */
  sharpness: number;
  /** slope of the likelihood-gap to preference squashing in the judge */
  judgeScale: number;
}

export const DEFAULT_CONFIG: ModelConfig = {
  vocabSize: 128,
  modelSeed: 7777n,
  sharpness: 4.0,
  judgeScale: 8.0,
};

export function parseRule(wm: WatermarkSpec, vocabSize: number): GreenListRule {
  const seed = BigInt(wm.seed);
  if (seed < 0n || seed >= 1n << 64n) throw new RangeError('seed outside u64 range');
  if (!(wm.g >= 0 && wm.g <= 1)) throw new RangeError(`g=${wm.g} outside [0, 1]`);
  if (!(wm.delta >= 0)) throw new RangeError(`delta=${wm.delta} must be non-negative`);
  return { globalSeed: seed, g: wm.g, vocabSize, mode: 'hash_threshold' };
}

export function tokenize(text: string, vocabSize: number): number[] {
  const parts = text.split(/\s+/).filter((p) => p.length > 0);
  return parts.map((p) => {
    const n = Number(p);
    if (Number.isInteger(n) && n >= 0 && n < vocabSize) return n;
    // non-numeric piece: fold its code points into the vocabulary
    let acc = 0n;
    for (const ch of p) acc = mix64(acc ^ BigInt(ch.codePointAt(0)!));
    return Number(acc % BigInt(vocabSize));
  });
}

function logits(cfg: ModelConfig, prev: number): Float64Array {
  const out = new Float64Array(cfg.vocabSize);
  for (let k = 0; k < cfg.vocabSize; k++) {
    out[k] = cfg.sharpness * pairHashUnit(cfg.modelSeed, prev, k);
  }
  return out;
}

function softmax(values: Float64Array): Float64Array {
  let max = -Infinity;
  for (const v of values) if (v > max) max = v;
  const out = new Float64Array(values.length);
  let total = 0;
  for (let i = 0; i < values.length; i++) {
    out[i] = Math.exp(values[i] - max);
    total += out[i];
  }
  for (let i = 0; i < values.length; i++) out[i] /= total;
  return out;
}

/**
 * Sample a continuation; biasing happens inside the logit pipeline, before
 * the softmax, exactly as a real model integration would do it.
 *
 * The sampling stream is keyed only by the prompt, so the same prompt with
 * wm=null and wm={delta: 0} yields identical token ids.
 */
export function generateTokens(
  cfg: ModelConfig,
  promptTokens: number[],
  wm: WatermarkSpec | null,
  maxTokens: number,
): number[] {
  if (promptTokens.length === 0) throw new RangeError('prompt must be non-empty');
  if (!(Number.isInteger(maxTokens) && maxTokens > 0)) {
    throw new RangeError(`max_tokens=${maxTokens} must be a positive integer`);
  }
  const rule = wm ? parseRule(wm, cfg.vocabSize) : null;
  const delta = wm ? wm.delta : 0;

  let streamSeed = cfg.modelSeed;
  for (const tok of promptTokens) streamSeed = mix64(streamSeed ^ BigInt(tok + 1));
  const draw = unitStream(streamSeed);

  const out: number[] = [];
  let prev = promptTokens[promptTokens.length - 1];
  for (let step = 0; step < maxTokens; step++) {
    const l = logits(cfg, prev);
    if (rule && delta > 0) {
      const mask = greenMask(rule, prev);
      for (let k = 0; k < l.length; k++) if (mask[k]) l[k] += delta;
    }
    const probs = softmax(l);
    const u = draw();
    let acc = 0;
    let tok = probs.length - 1;
    for (let k = 0; k < probs.length; k++) {
      acc += probs[k];
      if (u < acc) {
        tok = k;
        break;
      }
    }
    out.push(tok);
    prev = tok;
  }
  return out;
}

/** Average per-token log-likelihood of a tokenized text under the model. */
function meanLogLikelihood(cfg: ModelConfig, context: number[], tokens: number[]): number {
  if (tokens.length === 0) return 0;
  let prev = context.length > 0 ? context[context.length - 1] : 0;
  let total = 0;
  for (const tok of tokens) {
    total += Math.log(softmax(logits(cfg, prev))[tok]);
    prev = tok;
  }
  return total / tokens.length;
}

/**
 * Preference for the first-presented candidate, one order only.
 *
 * Stands in for querying the model's likelihood of emitting label "A"
 * versus "B" and normalizing over the two labels (first-piece likelihood
 * when a label tokenizes to several pieces). Here the label likelihoods
 * are driven by each candidate's mean log-likelihood under the model.
 */
export function rawPreference(
  cfg: ModelConfig,
  context: string,
  first: string,
  second: string,
): number {
  const ctx = tokenize(context, cfg.vocabSize);
  const gap =
    meanLogLikelihood(cfg, ctx, tokenize(first, cfg.vocabSize)) -
    meanLogLikelihood(cfg, ctx, tokenize(second, cfg.vocabSize));
  return 1 / (1 + Math.exp(-cfg.judgeScale * gap));
}

/** Order-normalized preference: averages both presentation orders. */
export function judgePair(
  cfg: ModelConfig,
  context: string,
  a: string,
  b: string,
): number {
  const forward = rawPreference(cfg, context, a, b);
  const reverse = rawPreference(cfg, context, b, a);
  return 0.5 * (forward + (1 - reverse));
}
