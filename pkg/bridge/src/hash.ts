/**
 * Green-list membership hashing, bit-exact with the Python toolkit.
 *
 * Everything is built on the splitmix64 finalizer over BigInt arithmetic;
 * the golden vectors shipped under golden/hash_vectors.json pin the
 * convention across implementations.
 */

const MASK64 = (1n << 64n) - 1n;
const PHI64 = 0x9e3779b97f4a7c15n; // splitmix64 stream increment
const MIX_A = 0xbf58476d1ce4e5b9n;
const MIX_B = 0x94d049bb133111ebn;
const TWO53 = 9007199254740992; // 2^53

export type PartitionMode = 'hash_threshold' | 'exact_partition';

export interface GreenListRule {
  /** 64-bit unsigned seed, kept as BigInt (JSON carries it as a decimal string). */
  globalSeed: bigint;
  g: number;
  vocabSize: number;
  mode: PartitionMode;
}

export function mix64(x: bigint): bigint {
  x &= MASK64;
  x ^= x >> 30n;
  x = (x * MIX_A) & MASK64;
  x ^= x >> 27n;
  x = (x * MIX_B) & MASK64;
  x ^= x >> 31n;
  return x;
}

/** Uniform [0, 1) keyed by (seed, prev, cand); top 53 bits of the mix. */
export function pairHashUnit(seed: bigint, prev: number, cand: number): number {
  const h = mix64(
    seed ^ ((BigInt(prev) * PHI64) & MASK64) ^ ((BigInt(cand) * MIX_A) & MASK64),
  );
  return Number(h >> 11n) / TWO53;
}

class SplitMix64 {
  private state: bigint;

  constructor(seed: bigint) {
    this.state = seed & MASK64;
  }

  next(): bigint {
    this.state = (this.state + PHI64) & MASK64;
    return mix64(this.state);
  }
}

// permutation positions are independent of g; memoize per (seed, prev)
const positionCache = new Map<string, Int32Array>();

function exactPositions(rule: GreenListRule, prev: number): Int32Array {
  const key = `${rule.globalSeed}:${rule.vocabSize}:${prev}`;
  const hit = positionCache.get(key);
  if (hit) return hit;

  const stream = new SplitMix64(
    mix64(rule.globalSeed ^ ((BigInt(prev) * PHI64) & MASK64)),
  );
  const perm = new Int32Array(rule.vocabSize);
  for (let i = 0; i < rule.vocabSize; i++) perm[i] = i;
  for (let i = rule.vocabSize - 1; i > 0; i--) {
    const j = Number(stream.next() % BigInt(i + 1));
    const tmp = perm[i];
    perm[i] = perm[j];
    perm[j] = tmp;
  }
  const pos = new Int32Array(rule.vocabSize);
  for (let i = 0; i < rule.vocabSize; i++) pos[perm[i]] = i;
  if (positionCache.size > 1024) positionCache.clear();
  positionCache.set(key, pos);
  return pos;
}

function checkToken(rule: GreenListRule, tok: number, name: string): void {
  if (!Number.isInteger(tok) || tok < 0 || tok >= rule.vocabSize) {
    throw new RangeError(`${name}=${tok} out of range for vocab_size=${rule.vocabSize}`);
  }
}

export function greenMembership(rule: GreenListRule, prev: number, cand: number): boolean {
  checkToken(rule, prev, 'prev');
  checkToken(rule, cand, 'cand');
  if (rule.mode === 'hash_threshold') {
    if (rule.g >= 1.0) return true; // hash values never reach 1.0 exactly
    return pairHashUnit(rule.globalSeed, prev, cand) < rule.g;
  }
  return exactPositions(rule, prev)[cand] < Math.ceil(rule.g * rule.vocabSize);
}

/** Membership over the full vocabulary for one conditioning token. */
export function greenMask(rule: GreenListRule, prev: number): boolean[] {
  const mask = new Array<boolean>(rule.vocabSize);
  for (let cand = 0; cand < rule.vocabSize; cand++) {
    mask[cand] = greenMembership(rule, prev, cand);
  }
  return mask;
}

/** Deterministic [0, 1) stream for sampling, seeded by a 64-bit value. */
export function unitStream(seed: bigint): () => number {
  const stream = new SplitMix64(seed);
  return () => Number(stream.next() >> 11n) / TWO53;
}
