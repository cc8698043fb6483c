"""Acceptance suite: one test per criterion, one printed PASS/FAIL line each.

Every tolerance is pinned here.  Where a criterion leaves a knob free
(bath temperatures, initial state, path counts, the chain length for the
conductivity shrinkage check), the value used is pinned below and recorded
in the printed line; the master seed for all stochastic criteria is the
arbitrary fixed constant 20260810.  Run with ``pytest tests/test_acceptance.py -v -s``.
"""

import numpy as np
import pytest

import energychain as ec
from energychain import ChainConfig, RateFunction
from energychain.cli import dispatch, read_manifest

SEED = 20260810


def _line(num, name, ok, detail):
    print(f"ACCEPTANCE {num:2d} {name}: {'PASS' if ok else 'FAIL'} -- {detail}")
    return ok


def test_01_moment_oracle_equivalence():
    cfg = ChainConfig(3, 1000, 1.0, 1.0, RateFunction("sqrt_product"), master_seed=SEED)
    rep = ec.moment_oracle_experiment(cfg, state=np.ones(3), m=1000,
                                      n_samples=1_000_000, se_factor=3.0, reject_se=5.0)
    rej = [c for c in rep.checks if c.name == "variant_rejection_sigmas"][0]
    ok = _line(1, "moment-oracle", rep.passed,
               f"1e6 samples match closed form within 3 SE; "
               f"alternate coefficients rejected at {rej.value:.0f} SE (> 5)")
    assert ok, ec.render_text(rep)


def test_02_constant_rate_equilibrium():
    worst_e = worst_c = worst_k = 0.0
    for n in (3, 10):
        cfg = ChainConfig(n, 100, 1.0, 2.0, RateFunction("constant"), master_seed=SEED)
        prof = ec.solve_equilibrium(cfg, 1e-10)
        linear = 1.0 + np.arange(1, n + 1) / (n + 1)
        worst_e = max(worst_e, float(np.max(np.abs(prof.e_star - linear))))
        worst_c = max(worst_c, abs(prof.c_star - 1.0 / (n + 1)))
        worst_k = max(worst_k, abs(ec.conductivity(cfg, 1e-10).kappa - 0.5))
    ok = worst_e < 1e-8 and worst_c < 1e-8 and worst_k < 1e-8
    ok = _line(2, "constant-rate equilibrium", ok,
               f"N in {{3,10}}: |E*-linear|={worst_e:.2e}, |c*-dT/(N+1)|={worst_c:.2e}, "
               f"|kappa-0.5|={worst_k:.2e} (all < 1e-8)")
    assert ok


def test_03_fourier_law_shrinkage():
    # chain length pinned at N=3; the gaps and ratio band are the criterion's
    deltas = (0.2, 0.1, 0.05)
    gaps, sandwich_ok = [], True
    for d in deltas:
        cfg = ChainConfig(3, 100, 1.0, 1.0 + d, RateFunction("sqrt_product"),
                          master_seed=SEED)
        cond = ec.conductivity(cfg, 1e-10)
        gap = abs(cond.kappa - 0.5)
        f_hot = cfg.rate(1.0 + d, 1.0 + d)
        sandwich_ok &= gap <= 0.5 * (f_hot - cfg.rate(1.0, 1.0))
        gaps.append(gap)
    monotone = gaps[0] > gaps[1] > gaps[2]
    ratios = [gaps[i + 1] / gaps[i] for i in range(2)]
    in_band = all(0.3 <= r <= 0.7 for r in ratios)
    ok = _line(3, "fourier-law shrinkage", monotone and sandwich_ok and in_band,
               f"|kappa-1/2|={['%.4f' % g for g in gaps]} decreasing, inside sandwich, "
               f"ratios={['%.3f' % r for r in ratios]} in [0.3, 0.7]")
    assert ok


def test_04_lln_scaling():
    cfg = ChainConfig(5, 100, 1.0, 2.0, RateFunction("sqrt_product"), master_seed=SEED)
    rep = ec.lln_experiment(cfg, [100, 1000, 10000], 5.0, n_paths=200,
                            slope_band=(-0.65, -0.35), n_workers=2)
    slope = [c for c in rep.checks if c.name == "loglog_slope"][0].value
    errs = [c.value for c in rep.checks if c.name.startswith("mean_sup_error")]
    ok = _line(4, "lln scaling", rep.passed,
               f"mean sup errors {['%.4f' % e for e in errs]} decrease monotonically; "
               f"slope {slope:.3f} in [-0.65, -0.35]")
    assert ok, ec.render_text(rep)


def test_05_clt_covariance():
    cfg = ChainConfig(3, 1000, 1.0, 2.0, RateFunction("sqrt_product"), master_seed=SEED)
    rep = ec.clt_experiment(cfg, 1000, 2.0, n_paths=10_000, dt=0.005,
                            rel_tol=0.10, se_factor=3.0, n_workers=2)
    worst = [c for c in rep.checks if c.name == "worst_cov_gap_over_tol"][0].value
    ok = _line(5, "clt covariance", rep.passed,
               f"10^4 paths: covariance entrywise within max(10%, 3 SE) "
               f"(worst gap/tol {worst:.2f}); means within 3 SE of 0")
    assert ok, ec.render_text(rep)


def test_06_linear_stability():
    details = []
    ok = True
    for kind in ("sqrt_product", "sqrt_harmonic"):
        cfg = ChainConfig(10, 100, 1.0, 1.2, RateFunction(kind), master_seed=SEED)
        prof = ec.solve_equilibrium(cfg, 1e-10)
        for h in (1e-4, 1e-5):
            rep = ec.jacobian(prof.e_star, cfg, h=h)
            scale = max(1.0, float(np.abs(rep.jac).max()))
            ok &= rep.fd_max_error <= 10.0 * h * h * scale
        ok &= rep.eigen_real_parts.max() < 0.0
        ok &= rep.gershgorin_ok
        details.append(f"{kind}: max Re(eig)={rep.eigen_real_parts.max():.4f}, "
                       f"row sums<0={rep.gershgorin_ok}, fd(1e-5)={rep.fd_max_error:.1e}")
    ok = _line(6, "linear stability", ok, "; ".join(details))
    assert ok


def test_07_beta_tail_bound():
    rep = ec.beta_tail_check([1000, 10**6, 10**9], epsilon=0.3)
    ratios = [c.value for c in rep.checks if c.name.startswith("ratio_to_exp")]
    ok = _line(7, "beta tail bound", rep.passed,
               f"exact tail <= 2 exp(-M^0.3) for all M; ratios "
               f"{['%.5f' % r for r in ratios]} increase toward 1")
    assert ok, ec.render_text(rep)


def test_08_ness_gaussian():
    cfg = ChainConfig(3, 200, 1.0, 1.5, RateFunction("sqrt_product"), master_seed=SEED)
    rep = ec.ness_experiment(cfg, m=200, burn_in=None, t_measure=1000.0, n_batches=20,
                             mean_se_factor=3.0, cov_rel_tol=0.15, lyapunov_tol=1e-8)
    lyap = [c for c in rep.checks if c.name == "lyapunov_residual"][0]
    ok = _line(8, "ness gaussian", rep.passed,
               f"burn-in {rep.parameters['burn_in']:.1f}, window 1000: mean within 3 "
               f"batch-SE of E*; covariance within 15% of S/M; Lyapunov residual "
               f"{lyap.value:.1e}")
    assert ok, ec.render_text(rep)


def test_09_mesoscopic_agreement():
    cfg = ChainConfig(3, 100, 1.0, 1.5, RateFunction("sqrt_product"), master_seed=SEED)
    rep = ec.mesoscopic_comparison(cfg, [100, 1000], 2.0, n_paths=6000,
                                   cov_rel_tol=0.10, se_factor=3.0,
                                   gap_ratio_max=0.3, n_workers=2)
    gaps = [c.value for c in rep.checks if c.name.startswith("mean_gap_over_std")]
    ok = _line(9, "mesoscopic agreement", rep.passed,
               f"mean gaps/std {['%.3f' % g for g in gaps]} (<= 0.3, shrinking); "
               f"covariances within max(10%, 3 SE)")
    assert ok, ec.render_text(rep)


def test_10_manifest_determinism(tmp_path):
    runs = {
        "equilibrium": {"n_cells": 3, "particles": 1000, "t_left": 1.0, "t_right": 2.0,
                        "rate_fn": "constant:1.0", "seed": SEED, "tol": 1e-10},
        "moments": {"n_cells": 2, "particles": 100, "t_left": 1.0, "t_right": 1.0,
                    "rate_fn": "sqrt_product", "seed": SEED},
        "simulate": {"n_cells": 2, "particles": 50, "t_left": 1.0, "t_right": 1.5,
                     "rate_fn": "sqrt_product", "seed": SEED, "t_end": 0.5, "dt": None},
    }
    identical = True
    for sub, params in runs.items():
        a = tmp_path / sub / "a"
        b = tmp_path / sub / "b"
        assert dispatch(sub, params, a) == 0
        re_sub, re_params = read_manifest(a / "manifest.txt")
        assert dispatch(re_sub, re_params, b) == 0
        for csv in sorted(a.glob("*.csv")):
            identical &= csv.read_bytes() == (b / csv.name).read_bytes()
    ok = _line(10, "manifest determinism", identical,
               "equilibrium, moments, simulate re-run from their manifests "
               "reproduce byte-identical CSVs")
    assert ok
