"""Detectability metrics over labeled watermark-score samples.

A text is flagged as watermarked when its score clears a threshold; the
operating threshold is picked to maximize F-beta (beta=0.5 by default,
weighting precision over recall).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError

#: sentinel threshold above any valid score, so "flag nothing" is a candidate
ABOVE_MAX_SCORE = 1.0 + 1e-9

DEFAULT_BETA = 0.5


@dataclass(frozen=True)
class ScoredSample:
    score: float
    is_watermarked: bool

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise DomainError(f"score={self.score} outside [0, 1]")


@dataclass(frozen=True)
class DetectionReport:
    threshold: float
    precision: float
    recall: float
    f_beta: float
    beta: float
    counts: tuple  # (tp, fp, tn, fn)

    def to_json(self) -> dict:
        tp, fp, tn, fn = self.counts
        return {
            "threshold": self.threshold,
            "precision": self.precision,
            "recall": self.recall,
            "f_beta": self.f_beta,
            "beta": self.beta,
            "counts": {"tp": tp, "fp": fp, "tn": tn, "fn": fn},
        }


def f_beta(precision: float, recall: float, beta: float) -> float:
    """Weighted harmonic mean of precision and recall; 0 when both are 0."""
    if beta <= 0:
        raise DomainError(f"beta={beta} must be > 0")
    if not (0.0 <= precision <= 1.0 and 0.0 <= recall <= 1.0):
        raise DomainError("precision and recall must lie in [0, 1]")
    if precision == 0.0 and recall == 0.0:
        return 0.0
    b2 = beta * beta
    denom = b2 * precision + recall
    if denom == 0.0:
        return 0.0
    return (1.0 + b2) * precision * recall / denom


def _check_two_classes(samples: Sequence[ScoredSample]) -> None:
    if not samples:
        raise DomainError("no samples provided")
    labels = {s.is_watermarked for s in samples}
    if len(labels) < 2:
        raise DomainError("both watermarked and unwatermarked samples required")


def confusion_at(
    samples: Sequence[ScoredSample], threshold: float, beta: float = DEFAULT_BETA
) -> DetectionReport:
    """Classify score >= threshold as watermarked and tabulate the result."""
    _check_two_classes(samples)
    tp = fp = tn = fn = 0
    for s in samples:
        flagged = s.score >= threshold
        if flagged and s.is_watermarked:
            tp += 1
        elif flagged:
            fp += 1
        elif s.is_watermarked:
            fn += 1
        else:
            tn += 1
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn)  # tp + fn > 0: both classes present
    return DetectionReport(
        threshold=threshold,
        precision=precision,
        recall=recall,
        f_beta=f_beta(precision, recall, beta),
        beta=beta,
        counts=(tp, fp, tn, fn),
    )


def best_threshold(
    samples: Sequence[ScoredSample], beta: float = DEFAULT_BETA
) -> DetectionReport:
    """Report at the F-beta-maximizing threshold.

    Candidates are the distinct observed scores plus a sentinel above the
    score range; F-beta is piecewise constant between observed scores, so
    this sweep is exhaustive. Ties go to the largest threshold (fewest
    false positives).
    """
    _check_two_classes(samples)
    wm = np.sort([s.score for s in samples if s.is_watermarked])
    base = np.sort([s.score for s in samples if not s.is_watermarked])
    n_wm, n_base = len(wm), len(base)
    candidates = sorted(set(s.score for s in samples)) + [ABOVE_MAX_SCORE]
    best = None
    for t in candidates:
        tp = n_wm - int(np.searchsorted(wm, t, side="left"))
        fp = n_base - int(np.searchsorted(base, t, side="left"))
        fn = n_wm - tp
        tn = n_base - fp
        precision = tp / (tp + fp) if tp + fp > 0 else 0.0
        recall = tp / n_wm
        fb = f_beta(precision, recall, beta)
        if best is None or fb >= best.f_beta:  # >= : ties -> larger threshold
            best = DetectionReport(
                threshold=t,
                precision=precision,
                recall=recall,
                f_beta=fb,
                beta=beta,
                counts=(tp, fp, tn, fn),
            )
    return best
