import json
import os
import subprocess
import sys

import pytest

from fbmlab.cli import main, parse_config
from fbmlab.errors import ConfigError


def base_config(**overrides):
    cfg = {
        "operator": {"kind": "dirichlet_laplacian_1d", "modes": 4, "length": 0.5},
        "lambda": 12.0,
        "hurst": 0.75,
        "covariance": {"trace": 0.01},
        "nonlinearity": {"name": "sine", "drift_gain": 2.0, "noise_gain": 1.0},
        "chain": {"alpha": 0.45, "beta": 0.55, "beta_prime": 0.62,
                  "beta_dprime": 0.70},
        "mu": 0.05,
        "grid": {"t0": 0.0, "h": 2**-9, "horizon": 1.0},
        "seeds": {"start": 0, "count": 2},
        "estimators": {"d_samples": 100, "dbar_windows": 50, "dbar_samples": 2,
                       "moment_samples": 1000, "growth_seeds": 2},
        "u0": {"kind": "ball", "radius": 1.0, "count": 1},
    }
    cfg.update(overrides)
    return cfg


def write_config(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


class TestConfigParsing:
    def test_round_trip(self):
        cfg = parse_config(base_config())
        assert cfg.operator.dim == 4
        assert cfg.covariance.trace == pytest.approx(0.01)
        assert cfg.seeds == [0, 1]

    def test_unknown_top_level_key(self):
        with pytest.raises(ConfigError, match="mystery"):
            parse_config(base_config(mystery=1))

    def test_unknown_nested_key(self):
        raw = base_config()
        raw["grid"]["weird"] = 3
        with pytest.raises(ConfigError, match="weird"):
            parse_config(raw)

    def test_invariants_revalidated(self):
        raw = base_config()
        raw["chain"]["beta"] = 0.4  # violates 1/2 < beta
        with pytest.raises(ConfigError):
            parse_config(raw)
        raw = base_config(hurst=0.4)
        with pytest.raises(ConfigError):
            parse_config(raw)

    def test_explicit_eigenvalues_and_seed_list(self):
        raw = base_config(
            operator={"kind": "eigenvalues", "values": [13.0, 20.0, 30.0, 44.0]},
            seeds={"list": [5, 9]},
            covariance={"eigenvalues": [0.01, 0.0, 0.0, 0.0]},
        )
        cfg = parse_config(raw)
        assert cfg.operator.eigenvalues[0] == 13.0
        assert cfg.seeds == [5, 9]


class TestCommands:
    def test_generate_deterministic_and_zero_noise(self, tmp_path):
        cfg = base_config(covariance={"trace": 0.0})
        path = write_config(tmp_path, cfg)
        out1, out2 = str(tmp_path / "a"), str(tmp_path / "b")
        assert main(["generate", "--config", path, "--out", out1]) == 0
        assert main(["generate", "--config", path, "--out", out2]) == 0
        f1 = open(os.path.join(out1, "paths", "path_seed0.csv"), "rb").read()
        f2 = open(os.path.join(out2, "paths", "path_seed0.csv"), "rb").read()
        assert f1 == f2
        # zero covariance -> all-zero path columns
        rows = f1.decode().splitlines()[1:]
        assert all(float(v) == 0.0 for row in rows for v in row.split(",")[1:])

    def test_generate_covariance_summary(self, tmp_path):
        path = write_config(tmp_path, base_config(seeds={"start": 0, "count": 200}))
        out = str(tmp_path / "out")
        assert main(["generate", "--config", path, "--out", out]) == 0
        rep = json.load(open(os.path.join(out, "covariance_check.json")))
        assert len(rep["covariance_checks"]) == 10
        assert rep["config"]["lambda"] == 12.0  # config echo

    def test_solve_zero_initial_condition(self, tmp_path):
        cfg = base_config(u0={"kind": "vector", "values": [0.0, 0.0, 0.0, 0.0]})
        path = write_config(tmp_path, cfg)
        out = str(tmp_path / "out")
        assert main(["solve", "--config", path, "--out", out]) == 0
        rows = open(os.path.join(out, "solution_seed0.csv")).read().splitlines()[1:]
        assert all(float(r.split(",")[1]) == 0.0 for r in rows)
        rep = json.load(open(os.path.join(out, "solve_report.json")))
        assert rep["max_residual"] == 0.0

    def test_stoptimes_zero_noise_table(self, tmp_path):
        cfg = base_config(covariance={"trace": 0.0}, c_alpha_beta=0.3,
                          seeds={"start": 0, "count": 1})
        path = write_config(tmp_path, cfg)
        out = str(tmp_path / "out")
        assert main(["stoptimes", "--config", path, "--out", out]) == 0
        rows = open(os.path.join(out, "stoptimes_seed0.csv")).read().splitlines()[1:]
        gaps = [float(r.split(",")[2]) for r in rows]
        assert all(abs(g - 0.05) <= 1e-7 for g in gaps)
        assert all(g <= 0.05 * (1 + 1e-9) for g in gaps)
        summary = json.load(open(os.path.join(out, "stopping_summary.json")))
        assert summary["d_hat"] == pytest.approx(1.0, rel=1e-9)
        assert summary["dbar_hat"] == 0.0
        assert summary["D_hat"] == pytest.approx(0.05, rel=1e-9)
        stats = open(os.path.join(out, "window_stats_seed0.csv")).read().splitlines()[1:]
        for row in stats:
            _, N, M = row.split(",")
            assert int(M) - int(N) in (0, 1)

    def test_stability_refuses_rho_at_or_above_certified(self, tmp_path):
        cfg = base_config(covariance={"trace": 0.0}, c_alpha_beta=0.3)
        path = write_config(tmp_path, cfg)
        out = str(tmp_path / "out")
        rc = main(["stability", "--config", path, "--out", out, "--rho", "1000.0"])
        assert rc == 4
        rep = json.load(open(os.path.join(out, "stability_report.json")))
        assert rep["satisfied"] is False
        assert "rho" in rep["reason"]

    def test_config_error_exit_code(self, tmp_path):
        path = write_config(tmp_path, base_config(mystery=1))
        assert main(["generate", "--config", path, "--out", str(tmp_path / "o")]) == 2

    def test_missing_config_file(self, tmp_path):
        assert main(["generate", "--config", str(tmp_path / "nope.json"),
                     "--out", str(tmp_path / "o")]) == 2

    def test_single_seed_flag(self, tmp_path):
        path = write_config(tmp_path, base_config())
        out = str(tmp_path / "out")
        assert main(["generate", "--config", path, "--out", out, "--seed", "7"]) == 0
        assert os.path.exists(os.path.join(out, "paths", "path_seed7.csv"))
        assert not os.path.exists(os.path.join(out, "paths", "path_seed0.csv"))

    def test_report_subcommand(self, tmp_path, capsys):
        cfg = base_config(covariance={"trace": 0.0}, c_alpha_beta=0.3,
                          rho=None, seeds={"start": 0, "count": 2})
        path = write_config(tmp_path, cfg)
        out = str(tmp_path / "out")
        assert main(["stability", "--config", path, "--out", out]) == 0
        capsys.readouterr()
        rc = main(["report", "--in", os.path.join(out, "stability_report.json")])
        assert rc == 0
        text = capsys.readouterr().out
        assert "satisfied" in text

    def test_module_entry_point(self, tmp_path):
        # the CLI is reachable as python -m fbmlab
        r = subprocess.run([sys.executable, "-m", "fbmlab", "report", "--in",
                            "/nonexistent.json"], capture_output=True, text=True)
        assert r.returncode != 0


class TestEnvOutputRoot:
    def test_env_var_default(self, tmp_path, monkeypatch):
        monkeypatch.setenv("FBMLAB_OUT_ROOT", str(tmp_path / "root"))
        cfg = base_config(covariance={"trace": 0.0})
        path = write_config(tmp_path, cfg)
        assert main(["generate", "--config", path]) == 0
        assert os.path.isdir(str(tmp_path / "root" / "out" / "paths"))
