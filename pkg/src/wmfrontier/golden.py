"""Golden hash-compatibility vectors for cross-implementation checks.

Any external component that applies the green-list bias itself (it owns
the logit pipeline) must agree with this package's hash bit for bit.
`python3 -m wmfrontier.golden out.json` emits randomized membership
triples that such implementations verify against.
"""

from __future__ import annotations

import json
import sys

import numpy as np

from .wm_core import GreenListRule, green_membership

DEFAULT_COUNT = 10_000
DEFAULT_RNG_SEED = 20240
VOCAB_CHOICES = (64, 128, 1024, 50_000)


def generate_hash_vectors(count: int = DEFAULT_COUNT,
                          rng_seed: int = DEFAULT_RNG_SEED) -> list:
    """Randomized (seed, g, vocab_size, prev, cand) -> green triples."""
    rng = np.random.default_rng(rng_seed)
    out = []
    for _ in range(count):
        vocab = int(rng.choice(VOCAB_CHOICES))
        seed = int(rng.integers(0, 2 ** 64, dtype=np.uint64))
        g = float(rng.choice([0.0, 0.001, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0]))
        prev = int(rng.integers(0, vocab))
        cand = int(rng.integers(0, vocab))
        rule = GreenListRule(global_seed=seed, g=g, vocab_size=vocab)
        out.append({
            "seed": str(seed),
            "g": g,
            "vocab_size": vocab,
            "prev": prev,
            "cand": cand,
            "green": green_membership(rule, prev, cand),
        })
    return out


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    path = argv[0] if argv else "-"
    vectors = generate_hash_vectors()
    payload = {"version": 1, "count": len(vectors), "vectors": vectors}
    if path == "-":
        json.dump(payload, sys.stdout)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh)
    return 0


if __name__ == "__main__":
    sys.exit(main())
