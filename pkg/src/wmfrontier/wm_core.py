"""Green/red vocabulary partitioning, logit biasing, and watermark scoring.

The previous token seeds a keyed hash that splits the vocabulary into a
green list and its red complement. Watermarked decoding adds a bias delta
to green logits; detection counts the fraction of green transitions in a
token sequence.

Two partition modes:

* ``hash_threshold`` (canonical): each (prev, cand) pair hashes to a
  uniform value in [0, 1); cand is green iff the value is below the green
  fraction g. Green lists for smaller g are subsets of those for larger g
  at the same seed, and membership is O(1) per pair.
* ``exact_partition``: a seeded Fisher-Yates shuffle of the vocabulary per
  prev token; the first ceil(g * vocab_size) positions are green. Gives
  exact green-list cardinality at the cost of O(vocab) work.

All hashing is built on the splitmix64 finalizer with fixed constants so
that independent implementations agree bit for bit.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .errors import CapacityError, DomainError

_MASK64 = (1 << 64) - 1
# splitmix64 stream increment / finalizer multipliers
_PHI64 = 0x9E3779B97F4A7C15
_MIX_A = 0xBF58476D1CE4E5B9
_MIX_B = 0x94D049BB133111EB

#: largest vocab for which green_list() materializes the full set
GREEN_LIST_VOCAB_CAP = 1 << 16

MODES = ("hash_threshold", "exact_partition")


def mix64(x: int) -> int:
    """splitmix64 finalizer; bijective 64-bit mix."""
    x &= _MASK64
    x ^= x >> 30
    x = (x * _MIX_A) & _MASK64
    x ^= x >> 27
    x = (x * _MIX_B) & _MASK64
    x ^= x >> 31
    return x


class _SplitMix64:
    """Deterministic 64-bit stream used for exact_partition shuffles."""

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next(self) -> int:
        self.state = (self.state + _PHI64) & _MASK64
        return mix64(self.state)


@dataclass(frozen=True)
class GreenListRule:
    """Seeded definition of the per-context green/red vocabulary split."""

    global_seed: int
    g: float
    vocab_size: int
    mode: str = "hash_threshold"

    def __post_init__(self):
        if not 0.0 <= self.g <= 1.0:
            raise DomainError(f"green fraction g={self.g} outside [0, 1]")
        if self.vocab_size < 2:
            raise DomainError(f"vocab_size={self.vocab_size} must be >= 2")
        if self.mode not in MODES:
            raise DomainError(f"unknown partition mode {self.mode!r}")
        if not 0 <= self.global_seed <= _MASK64:
            raise DomainError("global_seed must fit in 64 unsigned bits")

    def to_json(self) -> dict:
        # seed as decimal string: JSON numbers lose u64 precision
        return {
            "seed": str(self.global_seed),
            "g": self.g,
            "vocab_size": self.vocab_size,
            "mode": self.mode,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "GreenListRule":
        try:
            return cls(
                global_seed=int(obj["seed"]),
                g=float(obj["g"]),
                vocab_size=int(obj["vocab_size"]),
                mode=obj.get("mode", "hash_threshold"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DomainError(f"malformed green-list rule: {exc}") from exc

    def dumps(self) -> str:
        return json.dumps(self.to_json())

    @classmethod
    def loads(cls, text: str) -> "GreenListRule":
        return cls.from_json(json.loads(text))


def _check_token(rule: GreenListRule, tok: int, name: str) -> int:
    tok = int(tok)  # accept numpy integers
    if not 0 <= tok < rule.vocab_size:
        raise DomainError(
            f"{name}={tok} out of range for vocab_size={rule.vocab_size}"
        )
    return tok


def _pair_hash_unit(seed: int, prev: int, cand: int) -> float:
    """Uniform value in [0, 1) keyed by (seed, prev, cand); top 53 bits."""
    h = mix64(seed ^ ((prev * _PHI64) & _MASK64) ^ ((cand * _MIX_A) & _MASK64))
    return (h >> 11) / float(1 << 53)


@lru_cache(maxsize=4096)
def _exact_positions_cached(global_seed: int, vocab_size: int, prev: int):
    stream = _SplitMix64(mix64(global_seed ^ ((prev * _PHI64) & _MASK64)))
    perm = list(range(vocab_size))
    for i in range(vocab_size - 1, 0, -1):
        j = stream.next() % (i + 1)
        perm[i], perm[j] = perm[j], perm[i]
    pos = np.empty(vocab_size, dtype=np.int64)
    pos[perm] = np.arange(vocab_size)
    pos.setflags(write=False)
    return pos


def _exact_positions(rule: GreenListRule, prev: int) -> np.ndarray:
    """Position of each token in the seeded Fisher-Yates permutation.

    Independent of g, so cached across rules differing only in g.
    """
    return _exact_positions_cached(rule.global_seed, rule.vocab_size, prev)


def green_membership(rule: GreenListRule, prev: int, cand: int) -> bool:
    """True iff cand is on prev's green list under rule. Deterministic."""
    prev = _check_token(rule, prev, "prev")
    cand = _check_token(rule, cand, "cand")
    if rule.mode == "hash_threshold":
        if rule.g >= 1.0:
            return True  # hash values never reach 1.0 exactly
        return _pair_hash_unit(rule.global_seed, prev, cand) < rule.g
    pos = _exact_positions(rule, prev)
    return int(pos[cand]) < math.ceil(rule.g * rule.vocab_size)


def green_mask(rule: GreenListRule, prev: int) -> np.ndarray:
    """Boolean green membership over the whole vocabulary for one prev.

    Vectorized; the workhorse behind green_list, apply_bias, and the
    sampler's per-step bias.
    """
    prev = _check_token(rule, prev, "prev")
    n = rule.vocab_size
    if rule.mode == "exact_partition":
        return _exact_positions(rule, prev) < math.ceil(rule.g * n)
    if rule.g >= 1.0:
        return np.ones(n, dtype=bool)
    cand = np.arange(n, dtype=np.uint64)
    base = np.uint64(rule.global_seed ^ ((prev * _PHI64) & _MASK64))
    x = base ^ (cand * np.uint64(_MIX_A))
    x ^= x >> np.uint64(30)
    x *= np.uint64(_MIX_A)
    x ^= x >> np.uint64(27)
    x *= np.uint64(_MIX_B)
    x ^= x >> np.uint64(31)
    unit = (x >> np.uint64(11)).astype(np.float64) / float(1 << 53)
    return unit < rule.g


def green_list(rule: GreenListRule, prev: int) -> set:
    """Materialize prev's green list. Desk-scale vocabularies only."""
    if rule.vocab_size > GREEN_LIST_VOCAB_CAP:
        raise CapacityError(
            f"vocab_size={rule.vocab_size} exceeds green_list cap "
            f"{GREEN_LIST_VOCAB_CAP}"
        )
    mask = green_mask(rule, prev)
    return set(int(i) for i in np.nonzero(mask)[0])


def apply_bias(
    logits: np.ndarray, rule: GreenListRule, prev: int, delta: float
) -> np.ndarray:
    """Add delta to green logits; returns a new array, input untouched."""
    if delta < 0:
        raise DomainError(f"delta={delta} must be non-negative")
    logits = np.asarray(logits, dtype=np.float64)
    if logits.shape != (rule.vocab_size,):
        raise DomainError(
            f"logit vector length {logits.shape} != vocab_size {rule.vocab_size}"
        )
    out = logits.copy()
    out[green_mask(rule, prev)] += delta
    return out


def green_count(tokens: Sequence[int], rule: GreenListRule, prefix_last: int) -> int:
    """Green-transition count (the numerator of the watermark score)."""
    if len(tokens) == 0:
        raise DomainError("watermark score undefined on an empty sequence")
    prefix_last = _check_token(rule, prefix_last, "prefix_last")
    prevs = [prefix_last] + [int(t) for t in tokens[:-1]]
    if rule.mode == "hash_threshold":
        toks = np.asarray(tokens, dtype=np.int64)
        if (toks < 0).any() or (toks >= rule.vocab_size).any():
            raise DomainError("token id out of range")
        if rule.g >= 1.0:
            return len(tokens)
        # vectorized pair hash over all transitions
        toks = toks.astype(np.uint64)
        pv = np.asarray(prevs, dtype=np.uint64)
        x = (
            np.uint64(rule.global_seed)
            ^ (pv * np.uint64(_PHI64))
            ^ (toks * np.uint64(_MIX_A))
        )
        x ^= x >> np.uint64(30)
        x *= np.uint64(_MIX_A)
        x ^= x >> np.uint64(27)
        x *= np.uint64(_MIX_B)
        x ^= x >> np.uint64(31)
        unit = (x >> np.uint64(11)).astype(np.float64) / float(1 << 53)
        return int((unit < rule.g).sum())
    hits = 0
    for p, c in zip(prevs, tokens):
        if green_membership(rule, p, c):
            hits += 1
    return hits


def watermark_score(
    tokens: Sequence[int], rule: GreenListRule, prefix_last: int
) -> float:
    """Fraction of tokens that are green given their predecessor.

    prefix_last conditions the first token; every generated token counts,
    repeats included.
    """
    return green_count(tokens, rule, prefix_last) / len(tokens)


def grouped_score(
    token_groups: Iterable[tuple], rule: GreenListRule
) -> float:
    """Pooled green fraction across groups of (tokens, prefix_last).

    Counts and lengths are pooled before dividing; this is not the mean of
    per-group scores.
    """
    groups = list(token_groups)
    if not groups:
        raise DomainError("grouped_score requires at least one group")
    hits = 0
    total = 0
    for tokens, prefix_last in groups:
        if len(tokens) == 0:
            raise DomainError("grouped_score: empty sequence in group")
        hits += green_count(tokens, rule, prefix_last)
        total += len(tokens)
    return hits / total
