"""Command-line front end: config parsing, subcommand dispatch, manifests.

Configuration is a flat ``key=value`` text file; command-line flags override
file values and unknown keys are rejected by name and line.  Every run
writes a ``manifest.txt`` holding the fully resolved parameters, the tool
version, and the seed-derivation rule, so any output is re-derivable from
its manifest alone (``energychain rerun manifest.txt --out DIR``).
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .jump import path_functionals, simulate, write_events_csv, write_trajectory_csv
from .model import ChainConfig, RATE_KINDS, RateFunction
from .ode import conductivity, integrate_ode, jacobian, solve_equilibrium, \
    write_equilibrium_csv
from .sde import integrate_clt_sde, integrate_mesoscopic, moments_exact, ness_gaussian, \
    sigma_matrix, write_matrix_csv
from .streams import derive_path_seed
from .verify import beta_tail_check, clt_experiment, fourier_experiment, lln_experiment, \
    mesoscopic_comparison, ness_experiment, render_text, write_report_csv

SEED_RULE = "path_seed = splitmix64(master_seed + (index + 1) * 0x9E3779B97F4A7C15)"

OUTDIR_ENV = "ENERGYCHAIN_OUTDIR"


def _parse_int_list(text: str) -> list[int]:
    return [int(x) for x in str(text).split(",") if x.strip() != ""]


def _parse_float_list(text: str) -> list[float]:
    return [float(x) for x in str(text).split(",") if x.strip() != ""]


_KEY_TYPES = {
    "n_cells": int,
    "particles": int,
    "t_left": float,
    "t_right": float,
    "rate_fn": str,
    "rate_cap": float,
    "seed": int,
    "t_end": float,
    "dt": float,
    "n_paths": int,
    "m_list": _parse_int_list,
    "delta_list": _parse_float_list,
    "tol": float,
    "burn_in": float,
}

_GLOBAL_KEYS = ("n_cells", "particles", "t_left", "t_right", "rate_fn", "rate_cap", "seed")
_REQUIRED_KEYS = ("n_cells", "particles", "t_left", "t_right", "rate_fn")

# per-subcommand keys with their defaults (None = computed at run time)
_SUB_KEYS: dict[str, dict] = {
    "simulate": {"t_end": 1.0, "dt": None},
    "ode": {"t_end": 1.0, "dt": 0.01},
    "equilibrium": {"tol": 1e-10},
    "kappa": {"tol": 1e-10},
    "sde-clt": {"t_end": 1.0, "dt": 0.005},
    "sde-meso": {"t_end": 1.0, "dt": None},
    "moments": {},
    "lyapunov": {"tol": 1e-10},
    "verify-lln": {"m_list": [100, 1000, 10000], "t_end": 5.0, "n_paths": 200},
    "verify-clt": {"t_end": 2.0, "n_paths": 10000, "dt": 0.005},
    "verify-fourier": {"delta_list": [0.2, 0.1, 0.05], "t_end": 1000.0, "n_paths": 2},
    "verify-beta": {"m_list": [1000, 1000000, 1000000000]},
    "verify-ness": {"t_end": 1000.0, "burn_in": None, "tol": 1e-10},
    "verify-meso": {"m_list": [100, 1000], "t_end": 2.0, "n_paths": 4000},
}


def parse_rate_fn(text: str) -> RateFunction:
    """Parse ``kind`` or ``constant:<c>`` into a RateFunction."""
    text = text.strip()
    if ":" in text:
        kind, _, cval = text.partition(":")
        if kind != "constant":
            raise ValueError(f"only the constant kind takes a parameter, got {text!r}")
        return RateFunction(kind="constant", c=float(cval))
    if text not in RATE_KINDS:
        raise ValueError(f"unknown rate_fn {text!r}; choose one of {RATE_KINDS} "
                         "(constant may carry a value as constant:<c>)")
    return RateFunction(kind=text)


def read_config_file(path) -> dict:
    """Read a flat key=value file, rejecting unknown keys by name and line."""
    values: dict = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, _, val = line.partition("=")
            key = key.strip()
            val = val.strip()
            if key not in _KEY_TYPES:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
            try:
                values[key] = _KEY_TYPES[key](val)
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: bad value for {key!r}: {exc}") from exc
    return values


def parse_config(subcommand: str, config_path=None, overrides=None) -> dict:
    """Merge file values, flag overrides, and subcommand defaults into one dict.

    Flags win over file values; missing per-subcommand keys get their
    declared defaults; missing required keys raise by name.
    """
    params = dict(_SUB_KEYS.get(subcommand, {}))
    params.setdefault("seed", 0)
    params.setdefault("rate_cap", None)
    if config_path is not None:
        file_values = read_config_file(config_path)
        relevant = set(_GLOBAL_KEYS) | set(_SUB_KEYS.get(subcommand, {}))
        # keys outside the vocabulary were already rejected by name and line;
        # vocabulary keys another subcommand would use are simply ignored here
        for key, val in file_values.items():
            if key in relevant:
                params[key] = val
    for key, val in (overrides or {}).items():
        if val is not None:
            params[key] = val
    for key in _REQUIRED_KEYS:
        if key not in params or params[key] is None:
            raise ValueError(f"missing required key {key!r} (set it in the config file "
                             "or pass the matching flag)")
    return params


def build_chain_config(params: dict) -> ChainConfig:
    rate_fn = params["rate_fn"]
    if isinstance(rate_fn, str):
        rate_fn = parse_rate_fn(rate_fn)
    return ChainConfig(
        n_cells=params["n_cells"],
        particles_per_cell=params["particles"],
        t_left=params["t_left"],
        t_right=params["t_right"],
        rate_fn=rate_fn,
        rate_cap=params.get("rate_cap"),
        master_seed=params.get("seed", 0),
    )


def _default_e0(cfg: ChainConfig) -> np.ndarray:
    return np.full(cfg.n_cells, 0.5 * (cfg.t_left + cfg.t_right))


def _write_kv_csv(path, rows):
    with open(path, "w") as fh:
        fh.write("name,value\n")
        for name, value in rows:
            fh.write(f"{name},{float(value)!r}\n")


def _write_plot_script(out: Path, n_cells: int) -> str:
    """Emit a gnuplot script for trajectory.csv (keeps the core plot-free)."""
    curves = ", \\\n     ".join(
        f"'trajectory.csv' using 1:{i + 2} with steps title 'E{i + 1}'"
        for i in range(n_cells))
    (out / "plot.gp").write_text(
        "# gnuplot script generated alongside trajectory.csv\n"
        "set datafile separator ','\n"
        "set key autotitle columnhead\n"
        "set xlabel 't'\n"
        "set ylabel 'cell energy'\n"
        f"plot {curves}\n")
    return "plot.gp"


def _resolved_params(cfg: ChainConfig, params: dict, extra: dict) -> dict:
    out = {
        "n_cells": cfg.n_cells,
        "particles": cfg.particles_per_cell,
        "t_left": cfg.t_left,
        "t_right": cfg.t_right,
        "rate_fn": (cfg.rate_fn.kind if cfg.rate_fn.kind != "constant"
                    else f"constant:{cfg.rate_fn.c!r}"),
        "rate_cap": cfg.rate_cap,
        "seed": cfg.master_seed,
    }
    for key in params:
        if key in _KEY_TYPES and key not in _GLOBAL_KEYS:
            out[key] = params[key]
    out.update(extra)
    return out


def write_manifest(out_dir: Path, subcommand: str, resolved: dict, outputs: list[str]):
    lines = [
        f"subcommand={subcommand}",
        f"version={__version__}",
        f"created={time.strftime('%Y-%m-%dT%H:%M:%SZ', time.gmtime())}",
        f"seed_rule={SEED_RULE}",
    ]
    for key, val in resolved.items():
        if val is None:
            continue
        if isinstance(val, (list, tuple)):
            val = ",".join(str(v) for v in val)
        elif isinstance(val, float):
            val = repr(val)
        lines.append(f"{key}={val}")
    lines.append("outputs=" + ",".join(outputs))
    (out_dir / "manifest.txt").write_text("\n".join(lines) + "\n")


def read_manifest(path) -> tuple[str, dict]:
    sub = None
    params: dict = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            key, _, val = line.partition("=")
            if key == "subcommand":
                sub = val
            elif key in ("version", "created", "seed_rule", "outputs"):
                continue
            elif key in _KEY_TYPES:
                params[key] = _KEY_TYPES[key](val)
            else:
                raise ValueError(f"{path}:{lineno}: unknown manifest key {key!r}")
    if sub is None:
        raise ValueError(f"{path}: manifest lacks a subcommand line")
    return sub, params


def dispatch(subcommand: str, params: dict, out_dir, n_workers: int | None = None) -> int:
    """Run one subcommand, writing its outputs and manifest; returns exit status."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg = build_chain_config(params)
    handler = _HANDLERS[subcommand]
    status, outputs, extra = handler(cfg, params, out, n_workers)
    write_manifest(out, subcommand, _resolved_params(cfg, params, extra), outputs)
    return status


def _cmd_simulate(cfg, p, out, workers):
    t_end = float(p["t_end"])
    dt = p["dt"] if p["dt"] is not None else t_end / 256.0
    traj = simulate(cfg, _default_e0(cfg), t_end, seed=cfg.master_seed)
    grid = np.linspace(0.0, t_end, max(1, round(t_end / dt)) + 1)
    write_trajectory_csv(out / "trajectory.csv", traj, grid)
    outputs = ["trajectory.csv"]
    if traj.events_logged:
        write_events_csv(out / "events.csv", traj)
        outputs.append("events.csv")
    pf = path_functionals(traj)
    rows = [("n_events", traj.n_events), ("bath_influx_total", traj.bath_influx_total)]
    rows += [(f"bond_avg_flux_{k}", v) for k, v in enumerate(pf.bond_avg_flux)]
    if pf.kappa_defined:
        rows.append(("kappa_hat", pf.kappa_hat))
    _write_kv_csv(out / "functionals.csv", rows)
    outputs.append("functionals.csv")
    if p.get("plot_script"):
        outputs.append(_write_plot_script(out, cfg.n_cells))
    return 0, outputs, {"dt": dt}


def _cmd_ode(cfg, p, out, workers):
    sol = integrate_ode(cfg, _default_e0(cfg), float(p["t_end"]), float(p["dt"]))
    write_trajectory_csv(out / "trajectory.csv", sol.states, sol.times)
    outputs = ["trajectory.csv"]
    if p.get("plot_script"):
        outputs.append(_write_plot_script(out, cfg.n_cells))
    return 0, outputs, {}


def _cmd_equilibrium(cfg, p, out, workers):
    prof = solve_equilibrium(cfg, float(p["tol"]))
    write_equilibrium_csv(out / "equilibrium.csv", prof)
    rep = jacobian(prof.e_star, cfg)
    rows = [("c_star", prof.c_star), ("residual", prof.residual)]
    if cfg.t_left != cfg.t_right:
        cond = conductivity(cfg, float(p["tol"]))
        rows.insert(0, ("kappa", cond.kappa))
    rows += [(f"eigen_real_{i + 1}", v) for i, v in enumerate(rep.eigen_real_parts)]
    _write_kv_csv(out / "report.csv", rows)
    text = [f"equilibrium profile (N={cfg.n_cells}, rate_fn={cfg.rate_fn.kind})"]
    text += [f"  E*_{i + 1} = {v!r}" for i, v in enumerate(prof.e_star)]
    text += [f"  {name} = {val!r}" for name, val in rows]
    (out / "report.txt").write_text("\n".join(text) + "\n")
    return 0, ["equilibrium.csv", "report.csv", "report.txt"], {}


def _cmd_kappa(cfg, p, out, workers):
    cond = conductivity(cfg, float(p["tol"]))
    rows = [("kappa", cond.kappa), ("c_star", cond.c_star),
            ("lower", cond.lower), ("upper", cond.upper),
            ("residual", cond.equilibrium.residual)]
    _write_kv_csv(out / "report.csv", rows)
    (out / "report.txt").write_text(
        "\n".join(f"{k} = {v!r}" for k, v in rows) + "\n")
    return 0, ["report.csv", "report.txt"], {}


def _cmd_moments(cfg, p, out, workers):
    state = _default_e0(cfg)
    write_matrix_csv(out / "sigma.csv", sigma_matrix(state, cfg))
    m = cfg.particles_per_cell
    write_matrix_csv(out / "exact.csv", moments_exact(state, cfg).entries * m * m)
    return 0, ["sigma.csv", "exact.csv"], {}


def _cmd_lyapunov(cfg, p, out, workers):
    gauss = ness_gaussian(cfg, float(p["tol"]))
    write_matrix_csv(out / "lyapunov.csv", gauss.s_matrix)
    rows = [("residual", gauss.lyapunov_residual)]
    rows += [(f"eigen_real_{i + 1}", v)
             for i, v in enumerate(gauss.jacobian_report.eigen_real_parts)]
    _write_kv_csv(out / "report.csv", rows)
    return 0, ["lyapunov.csv", "report.csv"], {}


def _cmd_sde_clt(cfg, p, out, workers):
    t_end, dt = float(p["t_end"]), float(p["dt"])
    sol = integrate_ode(cfg, _default_e0(cfg), t_end, dt / 2.0)
    path = integrate_clt_sde(cfg, sol.times, sol.states, t_end, dt,
                             seed=derive_path_seed(cfg.master_seed, 1))
    write_trajectory_csv(out / "trajectory.csv", path.states, path.times)
    return 0, ["trajectory.csv"], {}


def _cmd_sde_meso(cfg, p, out, workers):
    t_end = float(p["t_end"])
    dt = p["dt"] if p["dt"] is not None else 0.2 / cfg.particles_per_cell
    res = integrate_mesoscopic(cfg, _default_e0(cfg), t_end, float(dt),
                               seed=derive_path_seed(cfg.master_seed, 2))
    write_trajectory_csv(out / "trajectory.csv", res.path, res.times)
    _write_kv_csv(out / "report.csv", [("clamp_count", res.clamp_count),
                                       ("n_steps", res.n_steps)])
    return 0, ["trajectory.csv", "report.csv"], {"dt": float(dt)}


def _finish_verify(report, out):
    write_report_csv(out / "report.csv", report)
    (out / "report.txt").write_text(render_text(report) + "\n")
    if not report.passed:
        worst = report.failures()[0]
        print(f"FAIL {report.name}: {worst.name} value={worst.value!r} tol={worst.tol!r}")
        return 1, ["report.csv", "report.txt"], {}
    return 0, ["report.csv", "report.txt"], {}


def _cmd_verify_lln(cfg, p, out, workers):
    rep = lln_experiment(cfg, p["m_list"], float(p["t_end"]), n_paths=int(p["n_paths"]),
                         n_workers=workers)
    return _finish_verify(rep, out)


def _cmd_verify_clt(cfg, p, out, workers):
    rep = clt_experiment(cfg, cfg.particles_per_cell, float(p["t_end"]),
                         n_paths=int(p["n_paths"]), dt=float(p["dt"]), n_workers=workers)
    return _finish_verify(rep, out)


def _cmd_verify_fourier(cfg, p, out, workers):
    rep = fourier_experiment(cfg, p["delta_list"], n_paths=int(p["n_paths"]),
                             t_end=float(p["t_end"]))
    return _finish_verify(rep, out)


def _cmd_verify_beta(cfg, p, out, workers):
    rep = beta_tail_check(p["m_list"])
    return _finish_verify(rep, out)


def _cmd_verify_ness(cfg, p, out, workers):
    rep = ness_experiment(cfg, burn_in=p.get("burn_in"), t_measure=float(p["t_end"]),
                          tol=float(p["tol"]))
    return _finish_verify(rep, out)


def _cmd_verify_meso(cfg, p, out, workers):
    rep = mesoscopic_comparison(cfg, p["m_list"], float(p["t_end"]),
                                n_paths=int(p["n_paths"]), n_workers=workers)
    return _finish_verify(rep, out)


_HANDLERS = {
    "simulate": _cmd_simulate,
    "ode": _cmd_ode,
    "equilibrium": _cmd_equilibrium,
    "kappa": _cmd_kappa,
    "moments": _cmd_moments,
    "lyapunov": _cmd_lyapunov,
    "sde-clt": _cmd_sde_clt,
    "sde-meso": _cmd_sde_meso,
    "verify-lln": _cmd_verify_lln,
    "verify-clt": _cmd_verify_clt,
    "verify-fourier": _cmd_verify_fourier,
    "verify-beta": _cmd_verify_beta,
    "verify-ness": _cmd_verify_ness,
    "verify-meso": _cmd_verify_meso,
}

_KEY_HELP = {
    "n_cells": "number of cells N (required)",
    "particles": "particles per cell M >= 2 (required)",
    "t_left": "left bath temperature T_L > 0 (required)",
    "t_right": "right bath temperature T_R > 0 (required)",
    "rate_fn": f"rate function kind, one of {RATE_KINDS}; constant:<c> sets the value "
               "(required)",
    "rate_cap": "rate cap K (default 100*sqrt(max(T_L, T_R)))",
    "seed": "64-bit master seed (default 0)",
    "t_end": "time horizon / measurement window",
    "dt": "time step (or export grid spacing for simulate)",
    "n_paths": "number of Monte Carlo paths",
    "m_list": "comma-separated list of M values",
    "delta_list": "comma-separated list of temperature gaps",
    "tol": "solver tolerance",
    "burn_in": "burn-in time (default: five slowest relaxation times)",
}


def _add_key_flags(sub, keys_with_defaults):
    for key, default in keys_with_defaults.items():
        flag = "--" + key.replace("_", "-")
        help_text = _KEY_HELP.get(key, key)
        if default is not None:
            help_text += f" (default {default})"
        caster = _KEY_TYPES[key]
        sub.add_argument(flag, dest=key, type=caster, default=None, help=help_text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="energychain",
        description="Boundary-driven stochastic energy-exchange chain: simulation, "
                    "limits, and verification experiments.")
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="subcommand", required=True)
    for name in _HANDLERS:
        sub = subs.add_parser(name, help=f"run the {name} subcommand")
        sub.add_argument("--config", help="flat key=value config file")
        sub.add_argument("--out", help=f"output directory (default ${OUTDIR_ENV} or "
                                       "./energychain-out)")
        sub.add_argument("--workers", type=int, default=None,
                         help="parallelism degree for path ensembles "
                              "(default: machine parallelism)")
        if name in ("simulate", "ode"):
            sub.add_argument("--plot-script", action="store_true", dest="plot_script",
                             help="also emit a gnuplot script referencing the CSVs")
        _add_key_flags(sub, {k: None for k in _GLOBAL_KEYS})
        _add_key_flags(sub, _SUB_KEYS.get(name, {}))
    rerun = subs.add_parser("rerun", help="re-run a previous run from its manifest")
    rerun.add_argument("manifest", help="path to a manifest.txt")
    rerun.add_argument("--out", help="output directory for the re-run")
    rerun.add_argument("--workers", type=int, default=None)
    return parser


def _default_out() -> str:
    return os.environ.get(OUTDIR_ENV, "energychain-out")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    workers = args.workers if args.workers is not None else (os.cpu_count() or 1)
    try:
        if args.subcommand == "rerun":
            sub, params = read_manifest(args.manifest)
            out = args.out or _default_out()
            return dispatch(sub, params, out, n_workers=workers)
        overrides = {k: getattr(args, k, None)
                     for k in list(_GLOBAL_KEYS) + list(_SUB_KEYS.get(args.subcommand, {}))}
        params = parse_config(args.subcommand, args.config, overrides)
        if getattr(args, "plot_script", False):
            params["plot_script"] = True
        out = args.out or _default_out()
        return dispatch(args.subcommand, params, out, n_workers=workers)
    except (ValueError, RuntimeError) as exc:
        print(f"ERROR {args.subcommand}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
