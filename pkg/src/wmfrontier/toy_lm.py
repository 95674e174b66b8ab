"""Add-alpha smoothed n-gram language model over small integer vocabularies.

Stands in for a real generator so the whole watermarking pipeline runs
offline: training from token-id corpora, logit lookup, temperature
sampling (plain or green-list biased), and an exact likelihood oracle.

Corpus file format: one whitespace-separated token-id sequence per line.
Model serialization: versioned JSON with counts as nested arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import json

import numpy as np

from .errors import DomainError
from .wm_core import green_mask

LM_FORMAT_VERSION = 1


@dataclass(frozen=True)
class SamplerConfig:
    temperature: float = 1.0
    rng_seed: int = 0
    max_tokens: int = 60
    eos_token: int = 0

    def __post_init__(self):
        if self.temperature <= 0:
            raise DomainError(f"temperature={self.temperature} must be > 0")
        if self.max_tokens < 1:
            raise DomainError(f"max_tokens={self.max_tokens} must be >= 1")


@dataclass
class NGramLM:
    """Immutable after training; all query methods are read-only."""

    order: int
    vocab_size: int
    alpha: float
    counts: dict = field(repr=False)  # context tuple -> np.ndarray[vocab_size]
    bos_token: int = -1  # resolved to vocab_size - 1 when negative

    def __post_init__(self):
        if self.bos_token < 0:
            self.bos_token = self.vocab_size - 1

    def context_key(self, context: Sequence[int]) -> tuple:
        """Last order-1 tokens, left-padded with the BOS id."""
        k = self.order - 1
        ctx = list(context)[-k:] if k > 0 else []
        while len(ctx) < k:
            ctx.insert(0, self.bos_token)
        return tuple(ctx)

    def probs(self, context: Sequence[int]) -> np.ndarray:
        """Smoothed conditional distribution; sums to 1."""
        key = self.context_key(context)
        c = self.counts.get(key)
        if c is None:
            c = np.zeros(self.vocab_size)
        num = c + self.alpha
        return num / num.sum()

    def to_json(self) -> dict:
        return {
            "version": LM_FORMAT_VERSION,
            "order": self.order,
            "vocab_size": self.vocab_size,
            "alpha": self.alpha,
            "bos_token": self.bos_token,
            "counts": [
                [[int(t) for t in ctx], [int(v) for v in vec]]
                for ctx, vec in sorted(self.counts.items())
            ],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "NGramLM":
        if obj.get("version") != LM_FORMAT_VERSION:
            raise DomainError(f"unsupported LM format version {obj.get('version')!r}")
        counts = {
            tuple(ctx): np.asarray(vec, dtype=np.float64)
            for ctx, vec in obj["counts"]
        }
        return cls(
            order=int(obj["order"]),
            vocab_size=int(obj["vocab_size"]),
            alpha=float(obj["alpha"]),
            counts=counts,
            bos_token=int(obj["bos_token"]),
        )

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(), fh)

    @classmethod
    def load(cls, path) -> "NGramLM":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))


def train(
    corpus: Sequence[Sequence[int]],
    order: int,
    alpha: float,
    vocab_size: Optional[int] = None,
    bos_token: Optional[int] = None,
) -> NGramLM:
    """Count n-grams with left BOS padding and return the smoothed model.

    When vocab_size is omitted it is inferred as max token id + 2, keeping
    the top id free for the reserved BOS padding token.
    """
    corpus = [[int(t) for t in seq] for seq in corpus]
    if not corpus or all(len(s) == 0 for s in corpus):
        raise DomainError("training corpus is empty")
    if order < 1:
        raise DomainError(f"order={order} must be >= 1")
    if alpha <= 0:
        raise DomainError(f"alpha={alpha} must be > 0")
    max_id = max(max(s) for s in corpus if s)
    if vocab_size is None:
        vocab_size = max_id + 2
    elif max_id >= vocab_size:
        raise DomainError(f"token id {max_id} >= vocab_size {vocab_size}")
    if bos_token is None:
        bos_token = vocab_size - 1

    lm = NGramLM(order=order, vocab_size=vocab_size, alpha=alpha, counts={},
                 bos_token=bos_token)
    k = order - 1
    for seq in corpus:
        padded = [bos_token] * k + list(seq)
        for i in range(len(seq)):
            ctx = tuple(padded[i:i + k])
            vec = lm.counts.get(ctx)
            if vec is None:
                vec = np.zeros(vocab_size)
                lm.counts[ctx] = vec
            vec[seq[i]] += 1
    return lm


def logits(lm: NGramLM, context: Sequence[int]) -> np.ndarray:
    """Log of the smoothed conditional next-token distribution."""
    return np.log(lm.probs(context))


def _step_cdf(lm, context, prev, wm, temperature, cache):
    """Cumulative next-token distribution for one decoding step.

    cache (optional dict) is keyed by (context, prev); callers sharing a
    cache must hold (lm, wm, temperature) fixed across calls.
    """
    key = (tuple(context), prev)
    if cache is not None:
        hit = cache.get(key)
        if hit is not None:
            return hit
    lg = logits(lm, context)
    if wm is not None:
        rule, delta = wm
        lg = lg + delta * green_mask(rule, prev)
    lg = lg / temperature
    lg -= lg.max()
    p = np.exp(lg)
    cdf = np.cumsum(p / p.sum())
    if cache is not None:
        cache[key] = cdf
    return cdf


def generate(
    lm: NGramLM,
    prompt: Sequence[int],
    cfg: SamplerConfig,
    wm: Optional[tuple] = None,
    cache: Optional[dict] = None,
) -> list:
    """Sample tokens until eos or max_tokens; deterministic per rng_seed.

    wm is an optional (GreenListRule, delta) pair applied to the logits
    before temperature scaling. One uniform draw per step through an
    inverse-CDF lookup, so runs with equal step distributions and equal
    seeds produce identical outputs.
    """
    prompt = list(prompt)
    if not prompt:
        raise DomainError("generation prompt must be non-empty")
    if wm is not None:
        rule, delta = wm
        if delta < 0:
            raise DomainError(f"delta={delta} must be non-negative")
        if rule.vocab_size != lm.vocab_size:
            raise DomainError("watermark rule vocab_size differs from LM")
    rng = np.random.default_rng(cfg.rng_seed)
    seq = list(prompt)
    out = []
    k = lm.order - 1
    for _ in range(cfg.max_tokens):
        ctx = lm.context_key(seq)
        cdf = _step_cdf(lm, ctx, seq[-1], wm, cfg.temperature, cache)
        u = rng.random()
        tok = int(np.searchsorted(cdf, u, side="right"))
        if tok >= lm.vocab_size:  # guard against cdf top < 1 by rounding
            tok = lm.vocab_size - 1
        seq.append(tok)
        out.append(tok)
        if tok == cfg.eos_token:
            break
    return out


def log_likelihood(
    lm: NGramLM, tokens: Sequence[int], prompt: Sequence[int] = ()
) -> float:
    """Sum of log conditional probabilities of tokens given the prompt.

    Always finite: smoothing keeps every conditional strictly positive.
    """
    tokens = list(tokens)
    if not tokens:
        raise DomainError("log_likelihood of an empty sequence is undefined")
    seq = list(prompt)
    total = 0.0
    for t in tokens:
        p = lm.probs(seq)
        total += float(np.log(p[t]))
        seq.append(t)
    return total


def load_corpus(path) -> list:
    """Read a token-id corpus: one whitespace-separated sequence per line."""
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            out.append([int(tok) for tok in line.split()])
    if not out:
        raise DomainError(f"corpus file {path} contains no sequences")
    return out


def save_corpus(corpus, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for seq in corpus:
            fh.write(" ".join(str(t) for t in seq) + "\n")
