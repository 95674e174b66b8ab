import { readFileSync } from 'node:fs';
import { dirname, join } from 'node:path';
import { fileURLToPath } from 'node:url';

import { describe, expect, it } from 'vitest';

import { GreenListRule, greenMask, greenMembership, mix64 } from '../src/hash.js';

const here = dirname(fileURLToPath(import.meta.url));

interface Vector {
  seed: string;
  g: number;
  vocab_size: number;
  prev: number;
  cand: number;
  green: boolean;
}

describe('hash compatibility', () => {
  it('matches all golden membership vectors from the primary toolkit', () => {
    const payload = JSON.parse(
      readFileSync(join(here, '..', 'golden', 'hash_vectors.json'), 'utf-8'),
    ) as { count: number; vectors: Vector[] };
    expect(payload.vectors.length).toBe(payload.count);
    expect(payload.count).toBeGreaterThanOrEqual(10_000);

    let mismatches = 0;
    for (const v of payload.vectors) {
      const rule: GreenListRule = {
        globalSeed: BigInt(v.seed),
        g: v.g,
        vocabSize: v.vocab_size,
        mode: 'hash_threshold',
      };
      if (greenMembership(rule, v.prev, v.cand) !== v.green) mismatches++;
    }
    expect(mismatches).toBe(0);
  });

  it('mix64 is a bijective-looking 64-bit mix with known fixed inputs', () => {
    // the zero input maps to zero by construction of the finalizer
    expect(mix64(0n)).toBe(0n);
    expect(mix64(1n)).not.toBe(1n);
    expect(mix64((1n << 64n) - 1n)).toBeLessThan(1n << 64n);
  });

  it('g extremes are total and empty', () => {
    const base = { globalSeed: 42n, vocabSize: 64, mode: 'hash_threshold' as const };
    const all = greenMask({ ...base, g: 1.0 }, 3);
    const none = greenMask({ ...base, g: 0.0 }, 3);
    expect(all.every(Boolean)).toBe(true);
    expect(none.some(Boolean)).toBe(false);
  });

  it('exact_partition yields exact green cardinality', () => {
    for (const g of [0.1, 0.25, 0.5, 0.9]) {
      const rule: GreenListRule = {
        globalSeed: 9n,
        g,
        vocabSize: 64,
        mode: 'exact_partition',
      };
      const count = greenMask(rule, 11).filter(Boolean).length;
      expect(count).toBe(Math.ceil(g * 64));
    }
  });

  it('rejects out-of-range tokens', () => {
    const rule: GreenListRule = {
      globalSeed: 1n,
      g: 0.5,
      vocabSize: 8,
      mode: 'hash_threshold',
    };
    expect(() => greenMembership(rule, 8, 0)).toThrow(RangeError);
    expect(() => greenMembership(rule, 0, -1)).toThrow(RangeError);
  });
});
