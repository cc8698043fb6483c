import subprocess
import sys

import numpy as np
import pytest

from energychain.cli import (build_chain_config, build_parser, dispatch, main,
                             parse_config, parse_rate_fn, read_config_file,
                             read_manifest)


CFG_TEXT = """\
# example configuration
n_cells = 3
particles = 1000
t_left = 1.0
t_right = 2.0
rate_fn = sqrt_product
rate_cap = 50
seed = 42
"""


@pytest.fixture
def cfg_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(CFG_TEXT)
    return path


class TestParseConfig:
    def test_round_trip(self, cfg_file):
        params = parse_config("equilibrium", cfg_file)
        cfg = build_chain_config(params)
        assert cfg.n_cells == 3
        assert cfg.particles_per_cell == 1000
        assert cfg.t_left == 1.0 and cfg.t_right == 2.0
        assert cfg.rate_fn.kind == "sqrt_product"
        assert cfg.rate_cap == 50.0
        assert cfg.master_seed == 42

    def test_positivity_enforced(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text(CFG_TEXT.replace("t_left = 1.0", "t_left = 0"))
        with pytest.raises(ValueError, match="t_left"):
            build_chain_config(parse_config("equilibrium", path))

    def test_unknown_key_named_with_line(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("n_cells = 2\nbogus_key = 3\n")
        with pytest.raises(ValueError, match=r"bad.cfg:2.*bogus_key"):
            read_config_file(path)

    def test_unparsable_value(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("n_cells = not_a_number\n")
        with pytest.raises(ValueError, match="n_cells"):
            read_config_file(path)

    def test_flag_overrides_file(self, cfg_file):
        params = parse_config("equilibrium", cfg_file, {"particles": 2000})
        assert params["particles"] == 2000

    def test_one_file_serves_many_subcommands(self, tmp_path):
        path = tmp_path / "shared.cfg"
        path.write_text(CFG_TEXT + "t_end = 5.0\nn_paths = 16\n")
        eq = parse_config("equilibrium", path)       # ignores t_end/n_paths
        assert "t_end" not in eq
        sim = parse_config("simulate", path)
        assert sim["t_end"] == 5.0

    def test_missing_required_key(self):
        with pytest.raises(ValueError, match="n_cells"):
            parse_config("equilibrium", None, {"particles": 10})

    def test_rate_fn_forms(self):
        assert parse_rate_fn("constant").c == 1.0
        assert parse_rate_fn("constant:2.5").c == 2.5
        assert parse_rate_fn("min_energy").kind == "min_energy"
        with pytest.raises(ValueError):
            parse_rate_fn("sqrt_product:2")
        with pytest.raises(ValueError):
            parse_rate_fn("unknown_kind")


class TestSubcommands:
    def test_equilibrium_golden_values(self, tmp_path):
        params = {"n_cells": 3, "particles": 1000, "t_left": 1.0, "t_right": 2.0,
                  "rate_fn": "constant:1.0", "seed": 1, "tol": 1e-10}
        assert dispatch("equilibrium", params, tmp_path) == 0
        rows = (tmp_path / "equilibrium.csv").read_text().splitlines()
        assert rows[0] == "i,E_star"
        vals = [tuple(map(float, r.split(","))) for r in rows[1:]]
        assert [v[0] for v in vals] == [1.0, 2.0, 3.0]
        assert np.allclose([v[1] for v in vals], [1.25, 1.5, 1.75], atol=1e-8)
        report = dict(line.split(",") for line in
                      (tmp_path / "report.csv").read_text().splitlines()[1:])
        assert float(report["kappa"]) == pytest.approx(0.5, abs=1e-8)
        assert (tmp_path / "manifest.txt").exists()

    def test_moments_sigma_band(self, tmp_path):
        params = {"n_cells": 2, "particles": 100, "t_left": 1.0, "t_right": 1.0,
                  "rate_fn": "sqrt_product", "seed": 0}
        assert dispatch("moments", params, tmp_path) == 0
        entries = {}
        for line in (tmp_path / "sigma.csv").read_text().splitlines()[1:]:
            i, j, v = line.split(",")
            entries[(int(i), int(j))] = float(v)
        assert entries[(1, 2)] == entries[(2, 1)] < 0.0
        assert entries[(1, 1)] > 0.0
        assert (tmp_path / "exact.csv").exists()

    def test_simulate_and_ode_outputs(self, tmp_path):
        params = {"n_cells": 2, "particles": 50, "t_left": 1.0, "t_right": 1.5,
                  "rate_fn": "sqrt_product", "seed": 3, "t_end": 0.5, "dt": None}
        assert dispatch("simulate", params, tmp_path / "sim") == 0
        lines = (tmp_path / "sim" / "trajectory.csv").read_text().splitlines()
        assert lines[0] == "t,E1,E2"
        assert (tmp_path / "sim" / "events.csv").exists()
        assert (tmp_path / "sim" / "functionals.csv").exists()
        params_ode = {**params, "dt": 0.01}
        assert dispatch("ode", params_ode, tmp_path / "ode") == 0
        assert (tmp_path / "ode" / "trajectory.csv").exists()

    def test_sde_and_lyapunov_outputs(self, tmp_path):
        params = {"n_cells": 2, "particles": 100, "t_left": 1.0, "t_right": 1.4,
                  "rate_fn": "sqrt_product", "seed": 5, "t_end": 0.5, "dt": 0.01}
        assert dispatch("sde-clt", params, tmp_path / "clt") == 0
        assert dispatch("sde-meso", {**params, "dt": None}, tmp_path / "meso") == 0
        assert dispatch("lyapunov", {"n_cells": 2, "particles": 100, "t_left": 1.0,
                                     "t_right": 1.4, "rate_fn": "sqrt_product",
                                     "seed": 5, "tol": 1e-10}, tmp_path / "lyap") == 0
        assert (tmp_path / "lyap" / "lyapunov.csv").exists()

    def test_plot_script_emission(self, tmp_path):
        code = main(["ode", "--n-cells", "2", "--particles", "10", "--t-left", "1",
                     "--t-right", "2", "--rate-fn", "constant", "--t-end", "0.5",
                     "--dt", "0.01", "--plot-script", "--out", str(tmp_path)])
        assert code == 0
        script = (tmp_path / "plot.gp").read_text()
        assert "trajectory.csv" in script and "plot" in script
        assert "plot.gp" in (tmp_path / "manifest.txt").read_text()

    def test_verify_beta_exits_zero(self, tmp_path):
        code = main(["verify-beta", "--n-cells", "1", "--particles", "2",
                     "--t-left", "1", "--t-right", "1", "--rate-fn", "constant",
                     "--out", str(tmp_path)])
        assert code == 0
        assert (tmp_path / "report.csv").exists()
        assert "overall: PASS" in (tmp_path / "report.txt").read_text()

    def test_bad_value_exits_nonzero(self, tmp_path, capsys):
        code = main(["equilibrium", "--n-cells", "2", "--particles", "10",
                     "--t-left", "0", "--t-right", "1", "--rate-fn", "constant",
                     "--out", str(tmp_path)])
        assert code == 1
        assert "t_left" in capsys.readouterr().err

    def test_unknown_subcommand_exits_two(self):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 2


class TestManifest:
    def test_rerun_reproduces_csv_bytes(self, tmp_path, cfg_file):
        params = parse_config("equilibrium", cfg_file)
        assert dispatch("equilibrium", params, tmp_path / "a") == 0
        sub, manifest_params = read_manifest(tmp_path / "a" / "manifest.txt")
        assert sub == "equilibrium"
        assert dispatch(sub, manifest_params, tmp_path / "b") == 0
        for name in ("equilibrium.csv", "report.csv"):
            assert (tmp_path / "a" / name).read_bytes() == \
                (tmp_path / "b" / name).read_bytes()

    def test_manifest_records_resolved_values(self, tmp_path):
        params = {"n_cells": 2, "particles": 64, "t_left": 1.0, "t_right": 2.0,
                  "rate_fn": "sqrt_product", "seed": 9, "t_end": 0.25, "dt": None}
        dispatch("simulate", params, tmp_path)
        text = (tmp_path / "manifest.txt").read_text()
        assert "subcommand=simulate" in text
        assert "seed=9" in text
        assert "rate_cap=" in text          # resolved default is recorded
        assert "seed_rule=path_seed = splitmix64" in text
        assert "outputs=trajectory.csv" in text

    def test_stochastic_rerun_is_byte_identical(self, tmp_path):
        params = {"n_cells": 2, "particles": 40, "t_left": 1.0, "t_right": 1.5,
                  "rate_fn": "sqrt_harmonic", "seed": 21, "t_end": 0.5, "dt": None}
        dispatch("simulate", params, tmp_path / "a")
        sub, mp = read_manifest(tmp_path / "a" / "manifest.txt")
        dispatch(sub, mp, tmp_path / "b")
        for name in ("trajectory.csv", "events.csv", "functionals.csv"):
            assert (tmp_path / "a" / name).read_bytes() == \
                (tmp_path / "b" / name).read_bytes()


class TestHelp:
    def test_every_subcommand_lists_its_keys(self, capsys):
        parser = build_parser()
        for sub in ("simulate", "verify-lln", "verify-ness"):
            with pytest.raises(SystemExit):
                parser.parse_args([sub, "--help"])
            out = capsys.readouterr().out
            for flag in ("--n-cells", "--particles", "--t-left", "--t-right",
                         "--rate-fn", "--rate-cap", "--seed"):
                assert flag in out

    def test_console_entry_point(self, tmp_path):
        proc = subprocess.run(
            [sys.executable, "-m", "energychain", "kappa", "--n-cells", "2",
             "--particles", "10", "--t-left", "1", "--t-right", "2",
             "--rate-fn", "constant", "--out", str(tmp_path)],
            capture_output=True, text=True, timeout=120)
        assert proc.returncode == 0
        report = dict(line.split(",") for line in
                      (tmp_path / "report.csv").read_text().splitlines()[1:])
        assert float(report["kappa"]) == pytest.approx(0.5, abs=1e-8)

    def test_outdir_env_default(self, tmp_path, monkeypatch):
        monkeypatch.setenv("ENERGYCHAIN_OUTDIR", str(tmp_path / "envout"))
        code = main(["kappa", "--n-cells", "1", "--particles", "10",
                     "--t-left", "1", "--t-right", "2", "--rate-fn", "constant"])
        assert code == 0
        assert (tmp_path / "envout" / "report.csv").exists()
