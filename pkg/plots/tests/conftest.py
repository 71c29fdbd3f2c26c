import json
import subprocess
import sys

import pytest


def run_fbmlab(*args: str) -> None:
    """Drive the primary package through its public CLI only."""
    result = subprocess.run(
        [sys.executable, "-m", "fbmlab", *args], capture_output=True, text=True
    )
    if result.returncode != 0:
        raise RuntimeError(
            f"fbmlab {' '.join(args)} failed ({result.returncode}):\n"
            f"{result.stdout}{result.stderr}"
        )


BASE_CONFIG = {
    "operator": {"kind": "dirichlet_laplacian_1d", "modes": 8, "length": 0.5},
    "lambda": 12.0,
    "hurst": 0.75,
    "covariance": {"trace": 0.01},
    "nonlinearity": {"name": "sine", "drift_gain": 2.0, "noise_gain": 1.0},
    "chain": {"alpha": 0.45, "beta": 0.55, "beta_prime": 0.62, "beta_dprime": 0.70},
    "mu": 0.05,
    "grid": {"t0": 0.0, "h": 2**-10, "horizon": 2.0},
    "seeds": {"start": 0, "count": 2},
    "estimators": {"d_samples": 100, "dbar_windows": 50, "dbar_samples": 2,
                   "moment_samples": 1000, "growth_seeds": 2},
    "u0": {"kind": "ball", "radius": 1.0, "count": 1},
}


@pytest.fixture(scope="session")
def example_outputs(tmp_path_factory):
    """Outputs of the built-in stochastic example, produced via the fbmlab CLI."""
    root = tmp_path_factory.mktemp("example")
    cfg_path = root / "config.json"
    cfg_path.write_text(json.dumps(BASE_CONFIG))
    out = root / "out"
    run_fbmlab("solve", "--config", str(cfg_path), "--out", str(out))
    run_fbmlab("stoptimes", "--config", str(cfg_path), "--out", str(out))
    run_fbmlab("stability", "--config", str(cfg_path), "--out", str(out))
    return out


@pytest.fixture(scope="session")
def deterministic_outputs(tmp_path_factory):
    """Zero-noise run: every stopping gap equals mu exactly."""
    root = tmp_path_factory.mktemp("deterministic")
    cfg = dict(BASE_CONFIG)
    cfg["covariance"] = {"trace": 0.0}
    cfg["c_alpha_beta"] = 0.25
    cfg["seeds"] = {"start": 0, "count": 1}
    cfg_path = root / "config.json"
    cfg_path.write_text(json.dumps(cfg))
    out = root / "out"
    run_fbmlab("stoptimes", "--config", str(cfg_path), "--out", str(out))
    return out
