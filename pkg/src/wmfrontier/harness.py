"""Grid-sweep experiment driver.

For every (green fraction, bias) operating point and hash seed the harness
generates a base and a watermarked continuation per input (sharing the
per-input sampler seed, so delta=0 reproduces the base text exactly),
calibrates the max-F0.5 detection threshold over the pooled score samples,
judges quality pairwise, and records length and perplexity. Results land
in a CSV with one row per (point, seed), checkpointed per point so an
aborted sweep resumes where it stopped.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence

import numpy as np

from . import __version__
from .detection import ScoredSample, best_threshold
from .errors import DomainError
from .judge import JudgeBackend, corpus_quality, likelihood_judge, \
    external_judge_client, perplexity_metric
from .toy_lm import NGramLM, SamplerConfig, generate
from .wm_core import GreenListRule, grouped_score, mix64

CSV_HEADER = ["g", "delta", "seed", "f05", "threshold", "s_q", "mean_len",
              "mean_score_wm", "mean_score_base", "ppl_wm"]

#: points whose mean watermarked length exceeds this multiple of the
#: delta=0 baseline get flagged (EOS-stuck-in-red-list pathology)
LENGTH_FLAG_RATIO = 1.5

DEFAULT_GRID_G = [0.001, 0.01, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]
DEFAULT_GRID_DELTA = [0.5, 1.0, 2.0, 3.0, 4.0, 6.0, 8.0]


@dataclass(frozen=True)
class OperatingPoint:
    g: float
    delta: float

    def __post_init__(self):
        if not 0.0 <= self.g <= 1.0:
            raise DomainError(f"g={self.g} outside [0, 1]")
        if self.delta < 0:
            raise DomainError(f"delta={self.delta} must be non-negative")


def default_grid() -> List[OperatingPoint]:
    return [OperatingPoint(g, d) for g in DEFAULT_GRID_G for d in DEFAULT_GRID_DELTA]


@dataclass
class SweepConfig:
    grid: List[OperatingPoint] = field(default_factory=default_grid)
    corpus: Optional[str] = None  # path to token-id corpus of prompts
    n_inputs: int = 100
    group_size: int = 1  # 3 for translation-style short outputs
    hash_seeds: List[int] = field(default_factory=lambda: [42])
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    judge: dict = field(default_factory=lambda: {"kind": "likelihood", "scale": 1.0})
    mode: str = "hash_threshold"
    task_tag: str = "generic"

    def config_hash(self) -> str:
        blob = json.dumps(self.to_json(), sort_keys=True).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()[:16]

    def to_json(self) -> dict:
        return {
            "grid": [{"g": p.g, "delta": p.delta} for p in self.grid],
            "corpus": self.corpus,
            "n_inputs": self.n_inputs,
            "group_size": self.group_size,
            "hash_seeds": [str(s) for s in self.hash_seeds],
            "sampler": {
                "temperature": self.sampler.temperature,
                "rng_seed": self.sampler.rng_seed,
                "max_tokens": self.sampler.max_tokens,
                "eos_token": self.sampler.eos_token,
            },
            "judge": self.judge,
            "mode": self.mode,
            "task_tag": self.task_tag,
        }


@dataclass
class SweepRow:
    point: OperatingPoint
    seed: int
    f05: float
    threshold: float
    s_q: float
    mean_len: float
    mean_score_wm: float
    mean_score_base: float
    ppl_wm: float
    wm_lengths: tuple = ()    # per-output lengths; not serialized
    base_lengths: tuple = ()

    def key(self):
        return (self.point.g, self.point.delta, self.seed)

    def csv_values(self) -> list:
        return [
            _fmt(self.point.g), _fmt(self.point.delta), str(self.seed),
            _fmt(self.f05), _fmt(self.threshold), _fmt(self.s_q),
            _fmt(self.mean_len), _fmt(self.mean_score_wm),
            _fmt(self.mean_score_base), _fmt(self.ppl_wm),
        ]


def _fmt(v: float) -> str:
    return f"{v:.10g}"


def _input_seed(base_seed: int, index: int) -> int:
    # stable per-input stream: identical for base and watermarked runs
    return mix64(base_seed ^ mix64(index + 1))


def make_judge_backend(descriptor: dict, lm: NGramLM) -> JudgeBackend:
    kind = descriptor.get("kind", "likelihood")
    if kind == "likelihood":
        return likelihood_judge(lm, scale=float(descriptor.get("scale", 1.0)))
    if kind == "external":
        return external_judge_client(descriptor["endpoint"])
    raise DomainError(f"unknown judge backend kind {kind!r}")


def _grouped_samples(outputs, prefixes, rule, group_size, watermarked):
    samples = []
    for i in range(0, len(outputs), group_size):
        groups = [
            (outputs[j], prefixes[j])
            for j in range(i, min(i + group_size, len(outputs)))
        ]
        samples.append(ScoredSample(score=grouped_score(groups, rule),
                                    is_watermarked=watermarked))
    return samples


def run_point(
    point: OperatingPoint,
    hash_seed: int,
    cfg: SweepConfig,
    lm: NGramLM,
    prompts: Sequence[Sequence[int]],
    backend: JudgeBackend,
) -> SweepRow:
    """Evaluate one operating point under one hash seed."""
    rule = GreenListRule(global_seed=hash_seed, g=point.g,
                         vocab_size=lm.vocab_size, mode=cfg.mode)
    cache_base: dict = {}
    cache_wm: dict = {}
    base_outputs, wm_outputs, prefixes = [], [], []
    for i, prompt in enumerate(prompts):
        scfg = replace(cfg.sampler, rng_seed=_input_seed(cfg.sampler.rng_seed, i))
        base_outputs.append(generate(lm, prompt, scfg, None, cache=cache_base))
        wm_outputs.append(
            generate(lm, prompt, scfg, (rule, point.delta), cache=cache_wm))
        prefixes.append(prompt[-1])

    samples = (
        _grouped_samples(wm_outputs, prefixes, rule, cfg.group_size, True)
        + _grouped_samples(base_outputs, prefixes, rule, cfg.group_size, False)
    )
    report = best_threshold(samples, beta=0.5)

    pairs = [
        (" ".join(map(str, prompt)),
         " ".join(map(str, wm)),
         " ".join(map(str, base)))
        for prompt, wm, base in zip(prompts, wm_outputs, base_outputs)
    ]
    quality = corpus_quality(backend, pairs, task_tag=cfg.task_tag)

    wm_scores = [s.score for s in samples if s.is_watermarked]
    base_scores = [s.score for s in samples if not s.is_watermarked]
    ppl = perplexity_metric(lm, wm_outputs, prompts)

    return SweepRow(
        point=point,
        seed=hash_seed,
        f05=report.f_beta,
        threshold=report.threshold,
        s_q=quality.s_q,
        mean_len=float(np.mean([len(o) for o in wm_outputs])),
        mean_score_wm=float(np.mean(wm_scores)),
        mean_score_base=float(np.mean(base_scores)),
        ppl_wm=ppl,
        wm_lengths=tuple(len(o) for o in wm_outputs),
        base_lengths=tuple(len(o) for o in base_outputs),
    )


def run_sweep(
    cfg: SweepConfig,
    lm: NGramLM,
    prompts: Sequence[Sequence[int]],
    backend: Optional[JudgeBackend] = None,
    on_row=None,
) -> List[SweepRow]:
    """Full grid x seeds sweep; on_row (if given) is called after each row.

    Deterministic for a fixed config: per-input sampler seeds are derived
    from the config seed, and aggregation is keyed by (point, seed).
    """
    if not cfg.grid:
        raise DomainError("sweep grid is empty")
    prompts = [list(p) for p in prompts][: cfg.n_inputs]
    if not prompts:
        raise DomainError("no prompts available for the sweep")
    if any(len(p) == 0 for p in prompts):
        raise DomainError("sweep prompts must be non-empty")
    if backend is None:
        backend = make_judge_backend(cfg.judge, lm)
    rows = []
    for point in cfg.grid:
        for seed in cfg.hash_seeds:
            row = run_point(point, seed, cfg, lm, prompts, backend)
            rows.append(row)
            if on_row is not None:
                on_row(row)
    return rows


# --- seed consistency ---------------------------------------------------------


@dataclass(frozen=True)
class SeedSpread:
    point: OperatingPoint
    max_delta_f05: float
    max_delta_s_q: float


def seed_consistency(cfg: SweepConfig, lm: NGramLM, prompts,
                     backend: Optional[JudgeBackend] = None):
    """Per-seed rows plus max pairwise |dF0.5| and |ds_q| per grid point."""
    if len(cfg.hash_seeds) < 2:
        raise DomainError("seed consistency needs at least 2 hash seeds")
    rows = run_sweep(cfg, lm, prompts, backend)
    spreads = []
    for point in cfg.grid:
        at_point = [r for r in rows if r.point == point]
        f05s = [r.f05 for r in at_point]
        sqs = [r.s_q for r in at_point]
        spreads.append(SeedSpread(
            point=point,
            max_delta_f05=max(f05s) - min(f05s),
            max_delta_s_q=max(sqs) - min(sqs),
        ))
    return rows, spreads


# --- length statistics ----------------------------------------------------------


@dataclass(frozen=True)
class LengthStat:
    point: OperatingPoint
    seed: int
    mean: float
    variance: float
    flagged: bool


def length_stats(rows: Sequence[SweepRow]) -> List[LengthStat]:
    """Per-row mean/variance of watermarked output lengths.

    The baseline is the pooled mean base-output length (identical to the
    delta=0 watermarked length by the shared-seed construction); rows
    whose mean exceeds LENGTH_FLAG_RATIO times it are flagged.
    """
    rows = list(rows)
    if not rows:
        raise DomainError("length_stats requires at least one row")
    base_lengths = [l for r in rows for l in r.base_lengths]
    baseline = float(np.mean(base_lengths)) if base_lengths else float("nan")
    out = []
    for r in rows:
        lengths = np.asarray(r.wm_lengths if r.wm_lengths else [r.mean_len],
                             dtype=np.float64)
        mean = float(lengths.mean())
        out.append(LengthStat(
            point=r.point,
            seed=r.seed,
            mean=mean,
            variance=float(lengths.var()),
            flagged=bool(np.isfinite(baseline)
                         and r.point.delta > 0
                         and mean > LENGTH_FLAG_RATIO * baseline),
        ))
    return out


# --- CSV / manifest I/O ---------------------------------------------------------


def rows_to_csv(rows: Sequence[SweepRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow(r.csv_values())
    return buf.getvalue()


def write_rows(rows: Sequence[SweepRow], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(rows_to_csv(rows))


def read_rows(path) -> List[SweepRow]:
    """Read a sweep CSV back; per-output length samples are not recoverable."""
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for rec in csv.DictReader(fh):
            rows.append(SweepRow(
                point=OperatingPoint(float(rec["g"]), float(rec["delta"])),
                seed=int(rec["seed"]),
                f05=float(rec["f05"]),
                threshold=float(rec["threshold"]),
                s_q=float(rec["s_q"]),
                mean_len=float(rec["mean_len"]),
                mean_score_wm=float(rec["mean_score_wm"]),
                mean_score_base=float(rec["mean_score_base"]),
                ppl_wm=float(rec["ppl_wm"]),
            ))
    return rows


def write_manifest(cfg: SweepConfig, path) -> None:
    manifest = {
        "toolkit_version": __version__,
        "config_hash": cfg.config_hash(),
        "config": cfg.to_json(),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
