"""Command-line entry point.

One subcommand per pipeline stage (train-lm, generate, score, detect,
judge, sweep, fit, transfer, plot-data); diagnostics on stderr, data only
to the declared output paths or stdout. Exit codes: 0 success, 1 domain
error, 2 config error, 3 backend/transport error.

Set WMFRONTIER_LOG=debug|info|warning to control log verbosity.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .analysis import (Point2D, TanhCurve, fit_tanh_curve,
                       fit_truncated_linear, transfer_curve)
from .config import validate_config
from .detection import ScoredSample, best_threshold
from .errors import ConfigError, DomainError, TransportError, WmfrontierError
from .harness import (SweepRow, make_judge_backend, read_rows, rows_to_csv,
                      run_point, write_manifest)
from .judge import corpus_quality, external_judge_client, likelihood_judge
from .plotting import render_tradeoff, series_to_csv, tradeoff_series
from .toy_lm import (NGramLM, SamplerConfig, generate, load_corpus,
                     save_corpus, train)
from .wm_core import GreenListRule, grouped_score

log = logging.getLogger("wmfrontier")


def _setup_logging():
    level = os.environ.get("WMFRONTIER_LOG", "warning").upper()
    logging.basicConfig(
        stream=sys.stderr,
        level=getattr(logging, level, logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
    )


def _write_json(obj, path):
    if path is None or path == "-":
        json.dump(obj, sys.stdout, indent=2, sort_keys=True)
        sys.stdout.write("\n")
    else:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(obj, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _load_rule(path) -> GreenListRule:
    with open(path, "r", encoding="utf-8") as fh:
        return GreenListRule.from_json(json.load(fh))


# --- subcommand handlers ------------------------------------------------------


def cmd_train_lm(args) -> int:
    corpus = load_corpus(args.corpus)
    lm = train(corpus, order=args.order, alpha=args.alpha,
               vocab_size=args.vocab_size)
    lm.save(args.out)
    log.info("trained order-%d LM over vocab %d from %d sequences",
             lm.order, lm.vocab_size, len(corpus))
    return 0


def cmd_generate(args) -> int:
    lm = NGramLM.load(args.lm)
    prompts = load_corpus(args.prompts)[: args.n] if args.n else load_corpus(args.prompts)
    wm = None
    if args.rule:
        rule = _load_rule(args.rule)
        wm = (rule, args.delta)
    outputs = []
    cache: dict = {}
    for i, prompt in enumerate(prompts):
        cfg = SamplerConfig(temperature=args.temperature,
                            rng_seed=args.seed + i,
                            max_tokens=args.max_tokens,
                            eos_token=args.eos_token)
        outputs.append(generate(lm, prompt, cfg, wm, cache=cache))
    save_corpus(outputs, args.out)
    return 0


def cmd_score(args) -> int:
    """Score token sequences: first id per line is the conditioning token."""
    rule = _load_rule(args.rule)
    lines = load_corpus(args.infile)
    seqs = []
    for i, line in enumerate(lines):
        if len(line) < 2:
            raise DomainError(
                f"line {i + 1}: need a prefix token plus at least one scored token")
        seqs.append((line[1:], line[0]))
    if args.group_size > 1:
        scores = [
            grouped_score(seqs[i:i + args.group_size], rule)
            for i in range(0, len(seqs), args.group_size)
        ]
    else:
        scores = [grouped_score([s], rule) for s in seqs]
    _write_json({"scores": scores, "mean": sum(scores) / len(scores)}, args.out)
    return 0


def cmd_detect(args) -> int:
    samples = []
    with open(args.infile, "r", encoding="utf-8", newline="") as fh:
        for rec in csv.DictReader(fh):
            samples.append(ScoredSample(
                score=float(rec["score"]),
                is_watermarked=rec["label"].strip().lower() in ("1", "true", "wm"),
            ))
    report = best_threshold(samples, beta=args.beta)
    _write_json(report.to_json(), args.out)
    return 0


def cmd_judge(args) -> int:
    if args.endpoint:
        backend = external_judge_client(args.endpoint)
    else:
        backend = likelihood_judge(NGramLM.load(args.lm), scale=args.scale)
    pairs = []
    with open(args.pairs, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            pairs.append((obj.get("context", ""), obj["wm"], obj["base"]))
    quality = corpus_quality(backend, pairs, task_tag=args.task)
    _write_json(quality.to_json(), args.out)
    return 0


def cmd_sweep(args) -> int:
    cfg = validate_config(args.config, overrides=args.set or [],
                          warn=lambda w: log.warning("config: %s", w))
    if cfg.corpus is None:
        raise ConfigError(["corpus: required for the sweep command"])
    lm = NGramLM.load(args.lm)
    prompts = load_corpus(cfg.corpus)[: cfg.n_inputs]
    backend = make_judge_backend(cfg.judge, lm)

    out = Path(args.out)
    manifest_path = out.with_suffix(out.suffix + ".manifest.json")
    done = {}
    if out.exists() and args.resume:
        if manifest_path.exists():
            with open(manifest_path, "r", encoding="utf-8") as fh:
                manifest = json.load(fh)
            if manifest.get("config_hash") != cfg.config_hash():
                raise ConfigError(
                    ["existing checkpoint was produced by a different config; "
                     "remove the output file or pass a matching config"])
        done = {r.key(): r for r in read_rows(out)}
        log.info("resuming: %d rows already present", len(done))

    work = [(p, s) for p in cfg.grid for s in cfg.hash_seeds
            if (p.g, p.delta, s) not in done]
    jobs = max(1, args.jobs)
    if jobs > 1 and backend.max_in_flight < 2:
        log.warning("judge backend is serial; running with --jobs 1")
        jobs = 1

    rows = dict(done)

    def record(row: SweepRow):
        rows[row.key()] = row
        ordered = [rows[(p.g, p.delta, s)] for p in cfg.grid
                   for s in cfg.hash_seeds if (p.g, p.delta, s) in rows]
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(rows_to_csv(ordered))

    if jobs == 1:
        for point, seed in work:
            record(run_point(point, seed, cfg, lm, prompts, backend))
    else:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            for row in pool.map(
                    lambda ps: run_point(ps[0], ps[1], cfg, lm, prompts, backend),
                    work):
                record(row)

    write_manifest(cfg, manifest_path)
    log.info("sweep complete: %d rows -> %s", len(rows), out)
    return 0


def _rows_to_points(rows):
    return [Point2D(r.f05, r.s_q) for r in rows]


def cmd_fit(args) -> int:
    rows = read_rows(args.infile)
    curve = fit_tanh_curve(_rows_to_points(rows))
    if not curve.converged:
        log.warning("tanh fit did not converge; reporting best parameters found")
    _write_json(curve.to_json(), args.out)
    return 0


def cmd_transfer(args) -> int:
    with open(args.base_fit, "r", encoding="utf-8") as fh:
        base = TanhCurve.from_json(json.load(fh))
    rows_a = {r.key(): r for r in read_rows(args.pairs_a)}
    rows_b = {r.key(): r for r in read_rows(args.pairs_b)}
    shared = sorted(set(rows_a) & set(rows_b))
    if len(shared) < 3:
        raise DomainError(
            f"transfer maps need >= 3 shared operating points, got {len(shared)}")
    detect_map = fit_truncated_linear(
        [rows_a[k].f05 for k in shared], [rows_b[k].f05 for k in shared])
    quality_map = fit_truncated_linear(
        [rows_a[k].s_q for k in shared], [rows_b[k].s_q for k in shared])
    predicted = transfer_curve(base, quality_map, detect_map)
    out = Path(args.out)
    with open(out, "w", encoding="utf-8", newline="") as fh:
        fh.write(series_to_csv([(p.x, p.y, "predicted") for p in predicted]))
    _write_json(
        {"detect_map": detect_map.to_json(), "quality_map": quality_map.to_json()},
        out.with_suffix(out.suffix + ".maps.json"),
    )
    return 0


def cmd_plot_data(args) -> int:
    rows = read_rows(args.infile)
    fit = None
    if args.fit:
        with open(args.fit, "r", encoding="utf-8") as fh:
            fit = TanhCurve.from_json(json.load(fh))
    records = tradeoff_series(rows, fit=fit)
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        fh.write(series_to_csv(records))
    figure = args.figure or str(Path(args.out).with_suffix(".svg"))
    render_tradeoff(rows, figure, fit=fit)
    log.info("plot data -> %s, figure -> %s", args.out, figure)
    return 0


# --- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="wmfrontier",
        description="Soft green-list watermark sweep and trade-off analysis toolkit",
    )
    p.add_argument("--version", action="version", version=f"wmfrontier {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("train-lm", help="train the n-gram LM from a token corpus")
    sp.add_argument("--corpus", required=True)
    sp.add_argument("--order", type=int, default=3)
    sp.add_argument("--alpha", type=float, default=0.1)
    sp.add_argument("--vocab-size", type=int, default=None)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_train_lm)

    sp = sub.add_parser("generate", help="sample continuations, optionally watermarked")
    sp.add_argument("--lm", required=True)
    sp.add_argument("--prompts", required=True)
    sp.add_argument("--rule", help="green-list rule JSON; omit for unwatermarked")
    sp.add_argument("--delta", type=float, default=2.0)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--temperature", type=float, default=1.0)
    sp.add_argument("--max-tokens", type=int, default=60)
    sp.add_argument("--eos-token", type=int, default=0)
    sp.add_argument("-n", type=int, default=0, help="limit number of prompts")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_generate)

    sp = sub.add_parser("score", help="watermark-score token sequences")
    sp.add_argument("--rule", required=True)
    sp.add_argument("--in", dest="infile", required=True,
                    help="one sequence per line: prefix token, then scored tokens")
    sp.add_argument("--group-size", type=int, default=1)
    sp.add_argument("--out", default="-")
    sp.set_defaults(func=cmd_score)

    sp = sub.add_parser("detect", help="max-F-beta threshold over labeled scores")
    sp.add_argument("--in", dest="infile", required=True,
                    help="CSV with columns score,label")
    sp.add_argument("--beta", type=float, default=0.5)
    sp.add_argument("--out", default="-")
    sp.set_defaults(func=cmd_detect)

    sp = sub.add_parser("judge", help="pairwise quality over (context, wm, base) pairs")
    sp.add_argument("--pairs", required=True, help="JSON lines: context, wm, base")
    sp.add_argument("--lm", help="LM for the likelihood judge")
    sp.add_argument("--scale", type=float, default=1.0)
    sp.add_argument("--endpoint", help="external judge URL instead of --lm")
    sp.add_argument("--task", default="generic",
                    choices=["summary", "translation", "generic"])
    sp.add_argument("--out", default="-")
    sp.set_defaults(func=cmd_judge)

    sp = sub.add_parser("sweep", help="grid sweep over operating points")
    sp.add_argument("--config", required=True)
    sp.add_argument("--lm", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--resume", action="store_true",
                    help="continue an interrupted sweep from its CSV")
    sp.add_argument("--set", action="append", metavar="KEY=VALUE",
                    help="config override, repeatable")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("fit", help="fit the tanh frontier to a sweep CSV")
    sp.add_argument("--in", dest="infile", required=True)
    sp.add_argument("--out", default="-")
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("transfer", help="predict another model's frontier")
    sp.add_argument("--base-fit", required=True, help="tanh fit JSON of the base model")
    sp.add_argument("--pairs-a", required=True, help="base model sweep CSV")
    sp.add_argument("--pairs-b", required=True, help="target model sweep CSV")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_transfer)

    sp = sub.add_parser("plot-data", help="plot-ready CSV and figure from a sweep")
    sp.add_argument("--in", dest="infile", required=True)
    sp.add_argument("--fit", help="optional tanh fit JSON to overlay")
    sp.add_argument("--figure", help="figure path (default: output stem .svg)")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_plot_data)

    return p


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        for e in exc.errors:
            print(f"config error: {e}", file=sys.stderr)
        return 2
    except TransportError as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return 3
    except WmfrontierError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
