import json

import numpy as np
import pytest

from wmfrontier.errors import DomainError
from wmfrontier.harness import (
    CSV_HEADER,
    OperatingPoint,
    SweepConfig,
    SweepRow,
    default_grid,
    length_stats,
    read_rows,
    rows_to_csv,
    run_point,
    run_sweep,
    seed_consistency,
    write_manifest,
    write_rows,
)
from wmfrontier.judge import likelihood_judge
from wmfrontier.toy_lm import SamplerConfig, train
from wmfrontier.wm_core import GreenListRule, watermark_score


@pytest.fixture(scope="module")
def lm():
    rng = np.random.default_rng(7)
    corpus = []
    for _ in range(40):
        seq, tok = [], int(rng.integers(1, 16))
        for _ in range(80):
            seq.append(tok)
            tok = int((tok * 5 + rng.integers(0, 3)) % 15) + 1
        corpus.append(seq)
    return train(corpus, order=2, alpha=0.1, vocab_size=16)


@pytest.fixture(scope="module")
def prompts(lm):
    rng = np.random.default_rng(11)
    return [[int(t) for t in rng.integers(1, 15, size=2)] for _ in range(12)]


def tiny_config(**kw):
    defaults = dict(
        grid=[OperatingPoint(0.5, 2.0)],
        n_inputs=12,
        hash_seeds=[42],
        sampler=SamplerConfig(rng_seed=3, max_tokens=20, eos_token=0),
    )
    defaults.update(kw)
    return SweepConfig(**defaults)


class TestRunPoint:
    def test_zero_bias_point_is_chance_level(self, lm, prompts):
        # delta=0 with shared sampler seeds makes the watermarked outputs
        # byte-identical to base, so quality is exactly 1/2 and detection
        # can do no better than flagging everything
        cfg = tiny_config(grid=[OperatingPoint(0.5, 0.0)])
        backend = likelihood_judge(lm)
        row = run_point(OperatingPoint(0.5, 0.0), 42, cfg, lm, prompts, backend)
        assert row.s_q == 0.5
        assert row.mean_score_wm == row.mean_score_base
        n = len(prompts)
        chance = (2 * n / (2 * n + 0.25 * n)) * 1.25 / 2  # F0.5 flagging all
        assert row.f05 == pytest.approx(chance)
        assert row.wm_lengths == row.base_lengths

    def test_scores_match_direct_recount(self, lm, prompts):
        cfg = tiny_config()
        backend = likelihood_judge(lm)
        point = OperatingPoint(0.5, 2.0)
        row = run_point(point, 42, cfg, lm, prompts, backend)
        # regenerate the watermarked outputs and rescore them independently
        from dataclasses import replace

        from wmfrontier.harness import _input_seed
        from wmfrontier.toy_lm import generate

        rule = GreenListRule(global_seed=42, g=0.5, vocab_size=lm.vocab_size)
        scores = []
        for i, prompt in enumerate(prompts):
            scfg = replace(cfg.sampler, rng_seed=_input_seed(cfg.sampler.rng_seed, i))
            out = generate(lm, prompt, scfg, (rule, 2.0))
            scores.append(watermark_score(out, rule, prompt[-1]))
        assert row.mean_score_wm == pytest.approx(float(np.mean(scores)))

    def test_bias_separates_scores(self, lm, prompts):
        cfg = tiny_config(grid=[OperatingPoint(0.25, 6.0)])
        backend = likelihood_judge(lm)
        row = run_point(OperatingPoint(0.25, 6.0), 42, cfg, lm, prompts, backend)
        assert row.mean_score_wm > row.mean_score_base + 0.2
        assert row.f05 > 0.9


class TestRunSweep:
    def test_reproducible_byte_identical(self, lm, prompts, tmp_path):
        cfg = tiny_config(grid=[OperatingPoint(0.25, 2.0), OperatingPoint(0.5, 4.0)])
        a = rows_to_csv(run_sweep(cfg, lm, prompts))
        b = rows_to_csv(run_sweep(cfg, lm, prompts))
        assert a == b
        p = tmp_path / "sweep.csv"
        write_rows(run_sweep(cfg, lm, prompts), p)
        assert p.read_text() == a

    def test_row_per_point_and_seed(self, lm, prompts):
        cfg = tiny_config(grid=[OperatingPoint(0.25, 2.0), OperatingPoint(0.5, 2.0)],
                          hash_seeds=[1, 2, 3])
        rows = run_sweep(cfg, lm, prompts)
        assert len(rows) == 6
        assert len({r.key() for r in rows}) == 6

    def test_grouping_changes_sample_count_not_order(self, lm, prompts):
        solo = tiny_config(group_size=1)
        pooled = tiny_config(group_size=3)
        r1 = run_sweep(solo, lm, prompts)[0]
        r3 = run_sweep(pooled, lm, prompts)[0]
        # pooling changes the detection statistics but not generation
        assert r1.mean_len == r3.mean_len
        assert r1.s_q == r3.s_q

    def test_empty_grid_rejected(self, lm, prompts):
        with pytest.raises(DomainError):
            run_sweep(tiny_config(grid=[]), lm, prompts)

    def test_no_prompts_rejected(self, lm):
        with pytest.raises(DomainError):
            run_sweep(tiny_config(), lm, [])


class TestSeedConsistency:
    def test_duplicate_seeds_have_zero_spread(self, lm, prompts):
        cfg = tiny_config(hash_seeds=[42, 42])
        _, spreads = seed_consistency(cfg, lm, prompts)
        assert spreads[0].max_delta_f05 == 0.0
        assert spreads[0].max_delta_s_q == 0.0

    def test_spread_matches_manual_max(self, lm, prompts):
        cfg = tiny_config(hash_seeds=[1, 2, 3])
        rows, spreads = seed_consistency(cfg, lm, prompts)
        f05s = [r.f05 for r in rows]
        assert spreads[0].max_delta_f05 == pytest.approx(max(f05s) - min(f05s))

    def test_single_seed_rejected(self, lm, prompts):
        with pytest.raises(DomainError):
            seed_consistency(tiny_config(), lm, prompts)


def fake_row(g, delta, wm_lengths, base_lengths):
    return SweepRow(
        point=OperatingPoint(g, delta), seed=0, f05=0.5, threshold=0.5,
        s_q=0.5, mean_len=float(np.mean(wm_lengths)), mean_score_wm=0.5,
        mean_score_base=0.5, ppl_wm=1.0,
        wm_lengths=tuple(wm_lengths), base_lengths=tuple(base_lengths),
    )


class TestLengthStats:
    def test_identical_lengths_not_flagged(self):
        stats = length_stats([fake_row(0.5, 2.0, [10, 12, 11], [10, 12, 11])])
        assert not stats[0].flagged
        assert stats[0].mean == pytest.approx(11.0)
        assert stats[0].variance == pytest.approx(np.var([10, 12, 11]))

    def test_elongated_point_is_flagged(self):
        rows = [
            fake_row(0.5, 0.0, [10, 10], [10, 10]),
            fake_row(0.01, 8.0, [40, 40], [10, 10]),  # EOS stuck in the red list
        ]
        stats = length_stats(rows)
        assert not stats[0].flagged
        assert stats[1].flagged

    def test_zero_bias_never_flagged(self):
        rows = [fake_row(0.5, 0.0, [40, 40], [10, 10])]
        assert not length_stats(rows)[0].flagged

    def test_empty_rejected(self):
        with pytest.raises(DomainError):
            length_stats([])


class TestSerialization:
    def test_csv_round_trip(self, lm, prompts, tmp_path):
        cfg = tiny_config(grid=[OperatingPoint(0.3, 1.0)], hash_seeds=[7])
        rows = run_sweep(cfg, lm, prompts)
        p = tmp_path / "rows.csv"
        write_rows(rows, p)
        loaded = read_rows(p)
        assert loaded[0].key() == rows[0].key()
        for name in ("f05", "threshold", "s_q", "mean_len",
                     "mean_score_wm", "mean_score_base", "ppl_wm"):
            assert getattr(loaded[0], name) == pytest.approx(
                getattr(rows[0], name), rel=1e-9)

    def test_csv_header(self):
        assert rows_to_csv([]).strip() == ",".join(CSV_HEADER)

    def test_manifest_hash_stability(self, tmp_path):
        cfg = tiny_config()
        p = tmp_path / "manifest.json"
        write_manifest(cfg, p)
        manifest = json.loads(p.read_text())
        assert manifest["config_hash"] == cfg.config_hash()
        assert manifest["config"]["hash_seeds"] == ["42"]
        # changing any field changes the hash
        other = tiny_config(hash_seeds=[43])
        assert other.config_hash() != cfg.config_hash()

    def test_default_grid_shape(self):
        grid = default_grid()
        assert len(grid) == 77
        assert OperatingPoint(0.001, 0.5) in grid
        assert OperatingPoint(0.9, 8.0) in grid
