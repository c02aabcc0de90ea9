import dataclasses
import json
import math

import numpy as np
import pytest

from epitrial import (CoefficientMode, Design, DesignSpec, ExperimentConfig,
                      HorizonSpec, SizeSpec, heatmap_mask, run_replicate,
                      run_sweep, run_trial_detail, verify_propositions,
                      write_sweep_csv)
from epitrial.experiments import _parse_grid

SMALL = ExperimentConfig(n_clusters=40, n_replicates=20,
                         gammas=(-1.0, 0.0, 1.0), seed=5)


class TestConfig:
    def test_grid_from_bounds(self):
        grid = _parse_grid({"min": -2.0, "max": 2.0, "step": 0.1})
        assert len(grid) == 41
        assert grid[0] == -2.0 and grid[-1] == 2.0
        assert grid[20] == 0.0

    def test_grid_from_list(self):
        assert _parse_grid([0.5, -1]) == (0.5, -1.0)

    def test_bad_grid_rejected(self):
        with pytest.raises(ValueError):
            _parse_grid({"min": 0.0, "max": 1.0, "step": 0.0})
        with pytest.raises(ValueError):
            _parse_grid([])

    def test_json_round_trip(self, tmp_path):
        config = ExperimentConfig(
            design=DesignSpec(Design.BLOCK, 0.5),
            size_dist=SizeSpec(kind="fixed", n=4),
            horizon_dist=HorizonSpec(kind="exponential", value=10.0),
            n_clusters=123, n_replicates=7, gammas=(0.0, 1.0),
            betas=(-1.0, 1.0), seed=99,
            coefficient_mode=CoefficientMode.FIXED)
        path = tmp_path / "config.json"
        path.write_text(json.dumps(config.to_dict()))
        assert ExperimentConfig.from_json_file(path) == config

    def test_paper_scale(self):
        scaled = ExperimentConfig().paper_scale()
        assert scaled.n_clusters == 1000
        assert scaled.n_replicates == 500

    def test_counts_validated(self):
        with pytest.raises(ValueError):
            ExperimentConfig(n_clusters=0)
        with pytest.raises(ValueError):
            ExperimentConfig(n_replicates=0)


class TestRunReplicate:
    def test_deterministic(self):
        a = run_replicate(SMALL, 0.0, -1.0, 3)
        b = run_replicate(SMALL, 0.0, -1.0, 3)
        assert a.de_hat == b.de_hat

    def test_distinct_replicates_differ(self):
        a = run_replicate(SMALL, 0.0, -1.0, 0)
        b = run_replicate(SMALL, 0.0, -1.0, 1)
        assert a.de_hat != b.de_hat

    def test_fixed_mode_shares_population(self):
        cfg = dataclasses.replace(SMALL, coefficient_mode=CoefficientMode.FIXED,
                                  size_dist=SizeSpec(kind="fixed", n=3))
        d0 = run_trial_detail(cfg, 0.0, 0.0, 0)
        d1 = run_trial_detail(cfg, 0.0, 0.0, 1)
        assert d0["clusters"][0]["eta"] == d1["clusters"][0]["eta"]
        assert d0["clusters"][0]["xi"] == d1["clusters"][0]["xi"]

    def test_redraw_mode_redraws_population(self):
        d0 = run_trial_detail(SMALL, 0.0, 0.0, 0)
        d1 = run_trial_detail(SMALL, 0.0, 0.0, 1)
        assert d0["clusters"][0]["eta"] != d1["clusters"][0]["eta"]

    def test_detail_consistent_with_estimate(self):
        detail = run_trial_detail(SMALL, 0.0, -1.0, 2)
        result = run_replicate(SMALL, 0.0, -1.0, 2)
        assert detail["de_hat"] == result.de_hat
        assert len(detail["clusters"]) == SMALL.n_clusters
        for cl in detail["clusters"]:
            assert cl["outcome"] == [1 if t < cl["horizon"] else 0
                                     for t in cl["infection_time"]]


class TestRunSweep:
    def test_single_point_matches_run_replicate(self):
        cfg = dataclasses.replace(SMALL, gammas=(0.0,))
        rows = run_sweep(cfg).rows
        assert len(rows) == 1
        values = np.array([run_replicate(cfg, 0.0, 0.0, r).de_hat
                           for r in range(cfg.n_replicates)])
        assert rows[0].de_mean == pytest.approx(values.mean(), abs=1e-15)
        assert rows[0].de_sd == pytest.approx(values.std(ddof=1), abs=1e-15)

    def test_ci_brackets_mean(self):
        for row in run_sweep(SMALL).rows:
            assert row.ci_low <= row.de_mean <= row.ci_high

    def test_replicate_accounting(self):
        # cluster randomization with 2 clusters degenerates half the time
        cfg = ExperimentConfig(design=DesignSpec(Design.CLUSTER, 0.5),
                               n_clusters=2, n_replicates=40, gammas=(0.0,),
                               seed=3)
        row = run_sweep(cfg).rows[0]
        assert 0 < row.n_degenerate < row.n_reps
        values = np.array([run_replicate(cfg, 0.0, 0.0, r).de_hat
                           for r in range(cfg.n_replicates)])
        assert row.n_degenerate == int(np.isnan(values).sum())
        assert row.n_reps == cfg.n_replicates

    def test_csv_deterministic(self, tmp_path):
        p1 = tmp_path / "a.csv"
        p2 = tmp_path / "b.csv"
        run_sweep(SMALL, out_path=p1)
        run_sweep(SMALL, out_path=p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_csv_identical_across_worker_counts(self, tmp_path):
        p1 = tmp_path / "t1.csv"
        p2 = tmp_path / "t2.csv"
        run_sweep(SMALL, threads=1, out_path=p1)
        run_sweep(SMALL, threads=2, out_path=p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_csv_schema(self, tmp_path):
        path = tmp_path / "sweep.csv"
        run_sweep(dataclasses.replace(SMALL, gammas=(0.5,)), out_path=path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "design,beta,gamma,de_mean,de_sd,ci_low,ci_high,n_reps,n_degenerate"
        fields = lines[1].split(",")
        assert fields[0] == "bernoulli"
        assert float(fields[2]) == 0.5
        assert int(fields[7]) == SMALL.n_replicates


class TestNullPreservationBand:
    def test_bernoulli_full_gamma_grid_stays_in_band(self):
        # across the whole gamma grid the Bernoulli replicate means stay
        # within a global 4-SE band around zero; per-point 95% CIs would be
        # expected to miss somewhere among 41 simultaneous intervals
        cfg = ExperimentConfig(n_clusters=200, n_replicates=50, seed=7)
        rows = run_sweep(cfg, threads=2).rows
        assert len(rows) == 41
        max_mean = max(abs(r.de_mean) for r in rows)
        max_se = max((r.ci_high - r.ci_low) / (2 * 1.96) for r in rows)
        assert max_mean < 4.0 * max_se


class TestHeatmap:
    def test_requires_beta_grid(self):
        from epitrial import run_heatmap
        with pytest.raises(ValueError):
            run_heatmap(SMALL)

    def test_mask_semantics(self):
        rows = [
            # decisive positive mean under positive beta: no mismatch
            dict(beta=1.0, gamma=0.0, de_mean=0.5, ci_low=0.4, ci_high=0.6),
            # decisive negative mean under positive beta: mismatch
            dict(beta=1.0, gamma=2.0, de_mean=-0.5, ci_low=-0.6, ci_high=-0.4),
            # indecisive: never a mismatch
            dict(beta=1.0, gamma=1.0, de_mean=-0.1, ci_low=-0.3, ci_high=0.1),
            # beta = 0 cells never count as mismatch
            dict(beta=0.0, gamma=1.0, de_mean=0.5, ci_low=0.4, ci_high=0.6),
        ]
        from epitrial import SweepResult, SweepRow
        result = SweepResult(rows=tuple(
            SweepRow(design="block", de_sd=0.1, n_reps=10, n_degenerate=0, **r)
            for r in rows))
        mask = heatmap_mask(result)
        assert [m.mismatch for m in mask] == [False, True, False, False]
        assert [m.decisive for m in mask] == [True, True, False, True]


class TestVerifyPropositions:
    def test_requires_null_beta(self):
        cfg = dataclasses.replace(
            SMALL, params=dataclasses.replace(SMALL.params, beta=0.5))
        with pytest.raises(ValueError):
            verify_propositions(cfg)

    def test_insufficient_replication(self):
        cfg = dataclasses.replace(SMALL, n_replicates=1, n_clusters=20)
        report = verify_propositions(cfg)
        assert report["insufficient_replication"]
        assert all("verdict" not in c for c in report["checks"])
        assert "all_pass" not in report

    def test_report_structure(self):
        cfg = dataclasses.replace(SMALL, n_clusters=20, n_replicates=5)
        report = verify_propositions(cfg)
        checks = report["checks"]
        assert len(checks) == 15
        assert {c["design"] for c in checks} == {"bernoulli", "block", "cluster"}
        assert {c["gamma"] for c in checks} == {-2.0, -1.0, 0.0, 1.0, 2.0}
        for c in checks:
            assert c["expected"] in ("zero", "positive", "negative")
            assert c["verdict"] in ("consistent with zero", "sign confirmed",
                                    "failed")
        zero_rows = [c for c in checks if c["expected"] == "zero"]
        assert len(zero_rows) == 7  # five bernoulli rows plus two gamma=0 rows

    def test_expected_directions(self):
        cfg = dataclasses.replace(SMALL, n_clusters=20, n_replicates=5)
        report = verify_propositions(cfg)
        for c in report["checks"]:
            if c["design"] == "bernoulli" or c["gamma"] == 0.0:
                assert c["expected"] == "zero"
            elif c["design"] == "block":
                assert c["expected"] == ("positive" if c["gamma"] < 0 else "negative")
            else:
                assert c["expected"] == ("negative" if c["gamma"] < 0 else "positive")
