import math

import numpy as np
import pytest

from obgcs import (CellResult, ExperimentGrid, fit_scaling,
                   flip_robustness_report, read_csv, run_grid, write_csv)
from obgcs.harness import CSV_HEADER
from obgcs.util import derive_seed


def tiny_grid(**overrides):
    base = dict(
        generator={"k": 3, "n": 20, "hidden_dims": [8], "seed": 0},
        m_values=[40, 80],
        sigma=0.1, q=0.97, nu=0.3,
        trials_per_cell=2, decoders=("ls",), base_seed=5,
        ls_restarts=3, ls_steps=80,
    )
    base.update(overrides)
    return ExperimentGrid(**base)


class TestSeedDerivation:
    def test_frozen_values(self):
        # pinned: the derivation must stay stable across platforms/versions
        assert derive_seed(7, 100, 3) == 1662483503
        assert derive_seed(0, 250, 0) == 4037361814
        assert derive_seed(7, 100, 3, 2) == 3619024898


class TestRunGrid:
    def test_row_count_and_order(self):
        res = run_grid(tiny_grid(decoders=("ls", "biht")))
        assert len(res) == 2 * 2 * 2  # m values x trials x decoders
        keys = [(r.m, r.decoder, r.trial) for r in res]
        assert keys == sorted(keys)

    def test_decoder_subset_respected(self):
        res = run_grid(tiny_grid(decoders=("ls",)))
        assert {r.decoder for r in res} == {"ls"}

    def test_deterministic_output_file(self, tmp_path):
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        run_grid(tiny_grid(output_path=str(p1)))
        run_grid(tiny_grid(output_path=str(p2)))
        assert p1.read_bytes() == p2.read_bytes()

    def test_worker_count_does_not_change_results(self, tmp_path):
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        run_grid(tiny_grid(output_path=str(p1), workers=1))
        run_grid(tiny_grid(output_path=str(p2), workers=2))
        assert p1.read_bytes() == p2.read_bytes()

    def test_csv_header_and_round_trip(self, tmp_path):
        path = tmp_path / "r.csv"
        res = run_grid(tiny_grid(output_path=str(path)))
        text = path.read_text()
        assert text.splitlines()[0] == CSV_HEADER
        back = read_csv(path)
        assert len(back) == len(res)
        assert back[0].l2_err == res[0].l2_err
        assert all(r.runtime_s == 0.0 for r in back)  # zeroed for determinism

    def test_metrics_are_sane(self):
        for r in run_grid(tiny_grid()):
            assert r.converged
            assert r.l2_err >= 0
            assert -1.0 <= r.cosine <= 1.0
            assert r.per_pixel == pytest.approx(r.l2_err / math.sqrt(20))


def synthetic_results(err_fn, m_values=(100, 200, 400, 800), trials=3, decoder="ls"):
    out = []
    for m in m_values:
        for t in range(trials):
            out.append(CellResult(m=m, decoder=decoder, trial=t, seed=0,
                                  l2_err=err_fn(m), cosine=1.0,
                                  per_pixel=err_fn(m), runtime_s=0.0,
                                  converged=True))
    return out


class TestFitScaling:
    def test_exact_inverse_sqrt_power_law(self):
        fit = fit_scaling(synthetic_results(lambda m: m ** -0.5), "ls")
        assert fit["slope"] == pytest.approx(-0.5, abs=1e-12)
        assert fit["r2"] == pytest.approx(1.0, abs=1e-12)

    def test_constant_errors_have_zero_slope(self):
        fit = fit_scaling(synthetic_results(lambda m: 0.25), "ls")
        assert fit["slope"] == pytest.approx(0.0, abs=1e-12)

    def test_requires_three_usable_points(self):
        with pytest.raises(ValueError):
            fit_scaling(synthetic_results(lambda m: m ** -0.5, m_values=(100, 200)), "ls")

    def test_requires_three_trials(self):
        with pytest.raises(ValueError):
            fit_scaling(synthetic_results(lambda m: m ** -0.5, trials=2), "ls")

    def test_filters_other_decoders(self):
        rows = synthetic_results(lambda m: m ** -0.5)
        rows += synthetic_results(lambda m: 1.0, decoder="biht")
        assert fit_scaling(rows, "ls")["slope"] == pytest.approx(-0.5, abs=1e-12)


class TestFlipReport:
    def test_identical_inputs_give_unit_ratios(self):
        rows = synthetic_results(lambda m: m ** -0.5)
        rep = flip_robustness_report(rows, rows)
        assert all(r["ratio"] == pytest.approx(1.0) for r in rep["rows"])

    def test_mismatched_grids_rejected(self):
        a = synthetic_results(lambda m: 1.0, m_values=(100, 200, 400))
        b = synthetic_results(lambda m: 1.0, m_values=(100, 200, 800))
        with pytest.raises(ValueError):
            flip_robustness_report(a, b)

    def test_ls_vs_biht_flags(self):
        base = synthetic_results(lambda m: 1.0) + \
            synthetic_results(lambda m: 1.0, decoder="biht")
        flip = synthetic_results(lambda m: 1.1) + \
            synthetic_results(lambda m: 1.5, decoder="biht")
        rep = flip_robustness_report(base, flip)
        assert rep["ls_better_fraction"] == 1.0


class TestCsvFormat:
    def test_seventeen_digit_floats(self, tmp_path):
        rows = [CellResult(m=10, decoder="ls", trial=0, seed=1,
                           l2_err=1 / 3, cosine=2 / 3, per_pixel=1 / 30,
                           runtime_s=0.0, converged=True)]
        path = tmp_path / "x.csv"
        write_csv(rows, path)
        line = path.read_text().splitlines()[1]
        assert "0.33333333333333331" in line
        assert line.endswith("true")
