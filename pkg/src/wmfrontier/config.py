"""Sweep configuration loading, validation, and normalization.

Every problem is reported with its field path; unknown keys warn instead
of failing, so configs stay forward compatible. Normalization is
idempotent: normalizing an already-normalized config is a no-op.
"""

from __future__ import annotations

import json
from typing import List, Tuple

from .errors import ConfigError
from .harness import DEFAULT_GRID_DELTA, DEFAULT_GRID_G, OperatingPoint, SweepConfig
from .toy_lm import SamplerConfig
from .wm_core import MODES

_KNOWN_KEYS = {"grid", "corpus", "n_inputs", "group_size", "hash_seeds",
               "sampler", "judge", "mode", "task_tag"}
_SAMPLER_KEYS = {"temperature", "rng_seed", "max_tokens", "eos_token"}

_DEFAULTS = {
    "corpus": None,
    "n_inputs": 100,
    "group_size": 1,
    "hash_seeds": ["42"],
    "mode": "hash_threshold",
    "task_tag": "generic",
    "judge": {"kind": "likelihood", "scale": 1.0},
}
_SAMPLER_DEFAULTS = {"temperature": 1.0, "rng_seed": 0, "max_tokens": 60,
                     "eos_token": 0}


def _default_grid_json() -> list:
    return [{"g": g, "delta": d} for g in DEFAULT_GRID_G for d in DEFAULT_GRID_DELTA]


def normalize_config(raw: dict) -> Tuple[dict, List[str], List[str]]:
    """Fill defaults and type-check; returns (normalized, errors, warnings)."""
    errors: List[str] = []
    warnings: List[str] = []
    if not isinstance(raw, dict):
        return {}, ["config root must be a JSON object"], []

    for key in raw:
        if key not in _KNOWN_KEYS:
            warnings.append(f"unknown key {key!r} ignored")

    out = dict(_DEFAULTS)
    out["judge"] = dict(_DEFAULTS["judge"])
    out["hash_seeds"] = list(_DEFAULTS["hash_seeds"])

    grid = raw.get("grid", _default_grid_json())
    norm_grid = []
    if not isinstance(grid, list) or not grid:
        errors.append("grid: must be a non-empty list of {g, delta} objects")
    else:
        for i, cell in enumerate(grid):
            if not isinstance(cell, dict):
                errors.append(f"grid[{i}]: must be an object")
                continue
            try:
                g = float(cell["g"])
                delta = float(cell["delta"])
            except (KeyError, TypeError, ValueError):
                errors.append(f"grid[{i}]: needs numeric g and delta")
                continue
            if not 0.0 <= g <= 1.0:
                errors.append(f"grid[{i}].g: {g} outside [0, 1]")
            if delta < 0:
                errors.append(f"grid[{i}].delta: {delta} must be >= 0")
            norm_grid.append({"g": g, "delta": delta})
    out["grid"] = norm_grid

    corpus = raw.get("corpus", None)
    if corpus is not None and not isinstance(corpus, str):
        errors.append("corpus: must be a path string or null")
    else:
        out["corpus"] = corpus

    for key, kind in (("n_inputs", int), ("group_size", int)):
        if key in raw:
            v = raw[key]
            if not isinstance(v, int) or isinstance(v, bool) or v < 1:
                errors.append(f"{key}: must be a positive integer")
            else:
                out[key] = v

    if "hash_seeds" in raw:
        seeds = raw["hash_seeds"]
        if not isinstance(seeds, list) or not seeds:
            errors.append("hash_seeds: must be a non-empty list")
        else:
            norm_seeds = []
            for i, s in enumerate(seeds):
                try:
                    v = int(s)
                except (TypeError, ValueError):
                    errors.append(f"hash_seeds[{i}]: not an integer")
                    continue
                if not 0 <= v < 2 ** 64:
                    errors.append(f"hash_seeds[{i}]: outside u64 range")
                else:
                    norm_seeds.append(str(v))  # decimal strings: JSON-safe u64
            out["hash_seeds"] = norm_seeds or out["hash_seeds"]

    sampler = dict(_SAMPLER_DEFAULTS)
    raw_sampler = raw.get("sampler", {})
    if not isinstance(raw_sampler, dict):
        errors.append("sampler: must be an object")
        raw_sampler = {}
    for key in raw_sampler:
        if key not in _SAMPLER_KEYS:
            warnings.append(f"unknown key sampler.{key!r} ignored")
    if "temperature" in raw_sampler:
        try:
            t = float(raw_sampler["temperature"])
            if t <= 0:
                errors.append("sampler.temperature: must be > 0")
            else:
                sampler["temperature"] = t
        except (TypeError, ValueError):
            errors.append("sampler.temperature: not a number")
    for key in ("rng_seed", "max_tokens", "eos_token"):
        if key in raw_sampler:
            v = raw_sampler[key]
            try:
                v = int(v)
            except (TypeError, ValueError):
                errors.append(f"sampler.{key}: not an integer")
                continue
            if key == "max_tokens" and v < 1:
                errors.append("sampler.max_tokens: must be >= 1")
            elif key != "max_tokens" and v < 0:
                errors.append(f"sampler.{key}: must be >= 0")
            else:
                sampler[key] = v
    out["sampler"] = sampler

    judge = raw.get("judge", out["judge"])
    if not isinstance(judge, dict):
        errors.append("judge: must be an object")
    else:
        kind = judge.get("kind", "likelihood")
        if kind not in ("likelihood", "external"):
            errors.append(f"judge.kind: unknown kind {kind!r}")
        elif kind == "external" and "endpoint" not in judge:
            errors.append("judge.endpoint: required for external judge")
        out["judge"] = judge

    mode = raw.get("mode", out["mode"])
    if mode not in MODES:
        errors.append(f"mode: must be one of {MODES}")
    else:
        out["mode"] = mode

    task_tag = raw.get("task_tag", out["task_tag"])
    if task_tag not in ("summary", "translation", "generic"):
        errors.append(f"task_tag: unknown tag {task_tag!r}")
    else:
        out["task_tag"] = task_tag

    return out, errors, warnings


def config_from_dict(norm: dict) -> SweepConfig:
    return SweepConfig(
        grid=[OperatingPoint(c["g"], c["delta"]) for c in norm["grid"]],
        corpus=norm["corpus"],
        n_inputs=norm["n_inputs"],
        group_size=norm["group_size"],
        hash_seeds=[int(s) for s in norm["hash_seeds"]],
        sampler=SamplerConfig(**norm["sampler"]),
        judge=norm["judge"],
        mode=norm["mode"],
        task_tag=norm["task_tag"],
    )


def validate_config(path, overrides=None, warn=None) -> SweepConfig:
    """Load, override, and validate a JSON config file.

    An empty file means "all defaults". Raises ConfigError carrying every
    problem found, not just the first; warnings go through `warn`.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError([f"cannot read config {path}: {exc}"])
    if not text.strip():
        raw = {}
    else:
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError([f"config is not valid JSON: {exc}"])
    if overrides:
        raw = apply_overrides(raw, overrides)
    norm, errors, warnings = normalize_config(raw)
    if warn is not None:
        for w in warnings:
            warn(w)
    if errors:
        raise ConfigError(errors)
    return config_from_dict(norm)


def apply_overrides(raw: dict, overrides) -> dict:
    """Apply repeatable `--set dotted.path=value` overrides.

    Values parse as JSON when possible, otherwise stay strings.
    """
    raw = json.loads(json.dumps(raw))  # deep copy
    for item in overrides:
        if "=" not in item:
            raise ConfigError([f"override {item!r} is not key=value"])
        key, _, value = item.partition("=")
        try:
            parsed = json.loads(value)
        except json.JSONDecodeError:
            parsed = value
        node = raw
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError([f"override {key!r} crosses a non-object"])
        node[parts[-1]] = parsed
    return raw
