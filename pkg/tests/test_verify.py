import math

import numpy as np
import pytest

import energychain as ec
from energychain import ChainConfig, RateFunction
from energychain.verify import render_text, report_csv_rows, write_report_csv


def cfg_for(kind="sqrt_product", n=2, m=100, tl=1.0, tr=2.0, seed=0):
    return ChainConfig(n_cells=n, particles_per_cell=m, t_left=tl, t_right=tr,
                       rate_fn=RateFunction(kind), master_seed=seed)


class TestBetaTail:
    def test_default_list_passes_and_ratios_rise(self):
        rep = ec.beta_tail_check([1000, 10**6, 10**9], epsilon=0.3)
        assert rep.passed
        ratios = [c.value for c in rep.checks if c.name.startswith("ratio_to_exp")]
        assert len(ratios) == 3
        assert ratios[0] < ratios[1] < ratios[2] <= 1.0
        assert ratios[2] > 0.999

    def test_tiny_m_support_boundary(self):
        # M^(eps-1) >= 1 only at M = 1, where the tail is exactly zero
        rep = ec.beta_tail_check([1, 1000], epsilon=0.3)
        handled = [c for c in rep.checks if c.name == "tail[M=1]"]
        assert handled and handled[0].value == 0.0 and handled[0].passed
        assert rep.passed

    def test_epsilon_domain(self):
        with pytest.raises(ValueError):
            ec.beta_tail_check([1000], epsilon=0.7)

    def test_log_space_survives_huge_m(self):
        rep = ec.beta_tail_check([10**12], epsilon=0.3)
        margin = [c for c in rep.checks if c.name.startswith("log_tail")][0]
        assert math.isfinite(margin.value) and margin.value <= 0.0


class TestLln:
    def test_small_scale_slope(self):
        cfg = cfg_for(n=2, m=50, seed=314)
        rep = ec.lln_experiment(cfg, [50, 800], 2.0, n_paths=80,
                                slope_band=(-0.8, -0.2), n_workers=2)
        assert rep.passed
        slope = [c for c in rep.checks if c.name == "loglog_slope"][0]
        assert -0.8 <= slope.value <= -0.2

    def test_requires_increasing_m(self):
        with pytest.raises(ValueError):
            ec.lln_experiment(cfg_for(), [100], 1.0)
        with pytest.raises(ValueError):
            ec.lln_experiment(cfg_for(), [100, 100], 1.0)

    def test_stationary_case_still_scales(self):
        # equal baths, started at equilibrium: sup errors are pure fluctuation
        # and still shrink like M^{-1/2}
        cfg = cfg_for(n=2, tl=1.0, tr=1.0, seed=161)
        rep = ec.lln_experiment(cfg, [50, 800], 2.0, n_paths=80,
                                e0=np.full(2, 1.0), slope_band=(-0.8, -0.2),
                                n_workers=2)
        assert rep.passed


class TestClt:
    def test_small_scale(self):
        cfg = cfg_for(n=2, m=1000, seed=2718)
        rep = ec.clt_experiment(cfg, 1000, 1.0, n_paths=4000, n_workers=2)
        gated = [c for c in rep.checks if c.passed is not None]
        assert gated and rep.passed
        names = {c.name for c in rep.checks}
        assert "skewness[1]" in names and "cov[1,2]" in names


class TestFourier:
    def test_small_scale(self):
        cfg = cfg_for(n=3, m=400, tl=1.0, tr=1.2, seed=77)
        rep = ec.fourier_experiment(cfg, [0.2, 0.1], n_paths=2, t_end=300.0)
        assert rep.passed
        ratio = [c for c in rep.checks if c.name.startswith("gap_ratio")][0]
        assert 0.3 <= ratio.value <= 0.7

    def test_zero_gap_rejected(self):
        with pytest.raises(ValueError):
            ec.fourier_experiment(cfg_for(), [0.0], n_paths=1, t_end=10.0)


class TestNess:
    def test_small_scale(self):
        cfg = cfg_for(n=2, m=150, tl=1.0, tr=1.4, seed=424242)
        rep = ec.ness_experiment(cfg, t_measure=400.0, mean_se_factor=4.0,
                                 cov_rel_tol=0.2)
        assert rep.passed
        assert rep.parameters["burn_in"] > 0
        lyap = [c for c in rep.checks if c.name == "lyapunov_residual"][0]
        assert lyap.value <= lyap.tol

    def test_doubling_m_halves_variances(self):
        from energychain.streams import derive_path_seed
        base = cfg_for(n=2, m=100, tl=1.0, tr=1.4, seed=31415)
        variances = {}
        for m in (100, 200):
            gauss = ec.ness_gaussian(
                ChainConfig(2, m, 1.0, 1.4, RateFunction("sqrt_product")))
            burn = 5.0 / abs(gauss.jacobian_report.eigen_real_parts.max())
            cfg = ChainConfig(2, m, 1.0, 1.4, RateFunction("sqrt_product"),
                              master_seed=derive_path_seed(base.master_seed, m))
            ba = ec.time_averages(cfg, gauss.e_star, seed=cfg.master_seed,
                                  burn_in=burn, t_measure=800.0, n_batches=20)
            variances[m] = np.diag(ba.covariance())
        ratio = variances[100] / variances[200]
        assert np.all(np.abs(ratio - 2.0) <= 0.3 * 2.0)


class TestMeso:
    def test_small_scale(self):
        cfg = cfg_for(n=2, m=100, tl=1.0, tr=1.5, seed=999)
        rep = ec.mesoscopic_comparison(cfg, [50, 400], 1.0, n_paths=1500, n_workers=2)
        assert rep.passed
        shrink = [c for c in rep.checks if c.name == "mean_gap_shrinks"][0]
        assert shrink.passed


class TestMomentOracleExperiment:
    def test_small_scale(self):
        cfg = cfg_for(n=2, m=500, tl=1.0, tr=1.0, seed=5)
        rep = ec.moment_oracle_experiment(cfg, m=500, n_samples=200_000)
        assert rep.passed
        rej = [c for c in rep.checks if c.name == "variant_rejection_sigmas"][0]
        assert rej.value > 5.0


class TestReports:
    def test_reports_are_reproducible(self):
        cfg = cfg_for(n=2, m=60, tl=1.0, tr=1.3, seed=6)
        a = ec.mesoscopic_comparison(cfg, [20, 80], 0.5, n_paths=200)
        b = ec.mesoscopic_comparison(cfg, [20, 80], 0.5, n_paths=200)
        assert report_csv_rows(a) == report_csv_rows(b)

    def test_render_and_csv(self, tmp_path):
        rep = ec.beta_tail_check([1000, 10**6])
        text = render_text(rep)
        assert "experiment: beta-tail" in text and "overall: PASS" in text
        path = tmp_path / "report.csv"
        write_report_csv(path, rep)
        lines = path.read_text().splitlines()
        assert lines[0] == "check,value,se,target,tol,passed,note"
        assert len(lines) == len(rep.checks) + 1
        # wall time never leaks into the CSV payload
        assert all("wall" not in line for line in lines)

    def test_every_statistic_carries_an_error_bar_field(self):
        rep = ec.beta_tail_check([1000, 10**6])
        assert all(hasattr(c, "se") for c in rep.checks)
