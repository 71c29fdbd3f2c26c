"""Experiment runner: JSON configs in, CSV/JSON artifacts out.

Subcommands: generate | stoptimes | solve | stability | report. Exit codes:
0 success, 2 configuration error, 3 numerical/generation error, 4 stability
condition not satisfied (or a requested rate at/above the certified one).
Outputs are written atomically (temp file + rename) and are byte-identical
for identical config and seed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import __version__
from .dynamics import (
    NonlinearitySpec,
    SolveConfig,
    linear_drift_nonlinearity,
    sine_nonlinearity,
    zero_nonlinearity,
)
from .errors import ConfigError, FbmLabError, ParameterError
from .fbm import CovarianceSpec, fbm_covariance, generate_fbm_hilbert
from .holder import ExponentChain
from .paths import TimeGrid, VectorPath, write_path_csv
from .semigroup import SpectralOperator, dirichlet_laplacian_1d
from .stability import (
    RateInputs,
    calibrate_chain_constants,
    compute_p_coefficients,
    estimate_moment_constant,
    fit_decay_rate,
    rho_star,
    sufficient_condition_K,
    verify_exponential_stability,
)
from .stopping import (
    StoppingConfig,
    _sample_seed,
    build_stopping_sequence,
    compute_D,
    count_window_stats,
    estimate_d,
    estimate_dbar,
)
from .dynamics import mild_residual, solve_mild

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_NOT_SATISFIED = 4

_ENV_OUT_ROOT = "FBMLAB_OUT_ROOT"


def _require_keys(d: dict, path: str, allowed: set[str], required: set[str] = frozenset()):
    if not isinstance(d, dict):
        raise ConfigError(f"{path}: expected an object")
    unknown = set(d) - allowed
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
    missing = required - set(d)
    if missing:
        raise ConfigError(f"{path}: missing keys {sorted(missing)}")


@dataclass
class Estimators:
    d_samples: int = 200
    dbar_windows: int = 50
    dbar_samples: int = 10
    moment_samples: int = 1000
    growth_seeds: int = 20


@dataclass
class ExperimentConfig:
    operator: SpectralOperator
    hurst: float
    covariance: CovarianceSpec
    nonlinearity: NonlinearitySpec
    chain: ExponentChain
    mu: float
    grid: TimeGrid
    seeds: list[int]
    scheme: str
    quad_tol: float
    picard_tol: float
    bisect_tol: float | None
    u0_kind: str
    u0_radius: float
    u0_count: int
    u0_vector: np.ndarray | None
    rho: float | None
    c_alpha_beta: float | None
    estimators: Estimators
    output_dir: str
    raw: dict


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(raw)


def parse_config(raw: dict) -> ExperimentConfig:
    _require_keys(
        raw,
        "config",
        {
            "operator", "lambda", "hurst", "covariance", "nonlinearity", "chain",
            "mu", "grid", "seeds", "tolerances", "scheme", "u0", "rho",
            "c_alpha_beta", "estimators", "output_dir",
        },
        {"operator", "lambda", "hurst", "covariance", "nonlinearity", "chain",
         "mu", "grid", "seeds"},
    )
    try:
        op_raw = raw["operator"]
        lam = float(raw["lambda"])
        kind = op_raw.get("kind") if isinstance(op_raw, dict) else None
        if kind == "dirichlet_laplacian_1d":
            _require_keys(op_raw, "operator", {"kind", "modes", "length"}, {"modes"})
            operator = dirichlet_laplacian_1d(
                int(op_raw["modes"]), float(op_raw.get("length", 1.0)), lam
            )
        elif kind == "eigenvalues":
            _require_keys(op_raw, "operator", {"kind", "values"}, {"values"})
            operator = SpectralOperator(tuple(float(v) for v in op_raw["values"]), lam)
        else:
            raise ConfigError(f"operator.kind must be 'dirichlet_laplacian_1d' or "
                              f"'eigenvalues', got {kind!r}")

        hurst = float(raw["hurst"])
        if not 0.5 < hurst < 1.0:
            raise ConfigError(f"hurst must lie in (1/2, 1), got {hurst}")

        cov_raw = raw["covariance"]
        if "eigenvalues" in cov_raw:
            _require_keys(cov_raw, "covariance", {"eigenvalues"})
            covariance = CovarianceSpec(tuple(float(v) for v in cov_raw["eigenvalues"]))
        else:
            _require_keys(cov_raw, "covariance", {"trace", "profile"}, {"trace"})
            covariance = CovarianceSpec.from_trace(
                float(cov_raw["trace"]), operator.dim,
                cov_raw.get("profile", "polynomial"),
            )
        if covariance.dim != operator.dim:
            raise ConfigError("covariance dimension must match operator modes")

        nl_raw = raw["nonlinearity"]
        name = nl_raw.get("name")
        if name == "sine":
            _require_keys(nl_raw, "nonlinearity",
                          {"name", "drift_gain", "noise_gain"},
                          {"drift_gain", "noise_gain"})
            nl = sine_nonlinearity(operator.dim, float(nl_raw["drift_gain"]),
                                   float(nl_raw["noise_gain"]))
        elif name == "linear_drift":
            _require_keys(nl_raw, "nonlinearity",
                          {"name", "kappa", "noise_gain"}, {"kappa"})
            nl = linear_drift_nonlinearity(operator.dim, float(nl_raw["kappa"]),
                                           float(nl_raw.get("noise_gain", 0.0)))
        elif name == "zero":
            _require_keys(nl_raw, "nonlinearity", {"name"})
            nl = zero_nonlinearity(operator.dim)
        else:
            raise ConfigError(f"nonlinearity.name must be 'sine', 'linear_drift' "
                              f"or 'zero', got {name!r}")
        nl.spot_check(operator.dim)

        ch = raw["chain"]
        _require_keys(ch, "chain", {"alpha", "beta", "beta_prime", "beta_dprime"},
                      {"alpha", "beta", "beta_prime", "beta_dprime"})
        chain = ExponentChain(float(ch["alpha"]), float(ch["beta"]),
                              float(ch["beta_prime"]), float(ch["beta_dprime"]),
                              hurst)

        mu = float(raw["mu"])
        if mu <= 0:
            raise ConfigError(f"mu must be positive, got {mu}")

        gr = raw["grid"]
        _require_keys(gr, "grid", {"t0", "h", "horizon"}, {"h", "horizon"})
        t0 = float(gr.get("t0", 0.0))
        h = float(gr["h"])
        horizon = float(gr["horizon"])
        if h <= 0 or horizon <= t0:
            raise ConfigError("grid needs h > 0 and horizon > t0")
        n_nodes = int(round((horizon - t0) / h)) + 1
        grid = TimeGrid(t0, h, n_nodes)

        seeds_raw = raw["seeds"]
        if "list" in seeds_raw:
            _require_keys(seeds_raw, "seeds", {"list"})
            seeds = [int(s) for s in seeds_raw["list"]]
        else:
            _require_keys(seeds_raw, "seeds", {"start", "count"}, {"count"})
            start = int(seeds_raw.get("start", 0))
            seeds = list(range(start, start + int(seeds_raw["count"])))
        if not seeds:
            raise ConfigError("seeds must be nonempty")

        tol = raw.get("tolerances", {})
        _require_keys(tol, "tolerances", {"quad_tol", "picard_tol", "bisect_tol"})
        quad_tol = float(tol.get("quad_tol", 1e-8))
        picard_tol = float(tol.get("picard_tol", 1e-10))
        bisect_tol = tol.get("bisect_tol")
        bisect_tol = None if bisect_tol is None else float(bisect_tol)

        scheme = raw.get("scheme", "exp_euler")
        if scheme not in ("exp_euler", "picard"):
            raise ConfigError(f"scheme must be 'exp_euler' or 'picard', got {scheme!r}")

        u0_raw = raw.get("u0", {"kind": "ball", "radius": 1.0, "count": 2})
        u0_kind = u0_raw.get("kind", "ball")
        if u0_kind == "ball":
            _require_keys(u0_raw, "u0", {"kind", "radius", "count"})
            u0_radius = float(u0_raw.get("radius", 1.0))
            u0_count = int(u0_raw.get("count", 2))
            u0_vector = None
        elif u0_kind == "vector":
            _require_keys(u0_raw, "u0", {"kind", "values"}, {"values"})
            u0_vector = np.asarray([float(v) for v in u0_raw["values"]])
            if u0_vector.shape != (operator.dim,):
                raise ConfigError("u0.values length must equal operator modes")
            u0_radius, u0_count = float(np.linalg.norm(u0_vector)), 1
        else:
            raise ConfigError(f"u0.kind must be 'ball' or 'vector', got {u0_kind!r}")

        rho = raw.get("rho")
        rho = None if rho is None else float(rho)
        c_ab = raw.get("c_alpha_beta")
        c_ab = None if c_ab is None else float(c_ab)

        est_raw = raw.get("estimators", {})
        _require_keys(est_raw, "estimators",
                      {"d_samples", "dbar_windows", "dbar_samples",
                       "moment_samples", "growth_seeds"})
        est = Estimators(**{k: int(v) for k, v in est_raw.items()})

        output_dir = raw.get("output_dir", "")
    except (ParameterError, FbmLabError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc

    return ExperimentConfig(
        operator=operator, hurst=hurst, covariance=covariance, nonlinearity=nl,
        chain=chain, mu=mu, grid=grid, seeds=seeds, scheme=scheme,
        quad_tol=quad_tol, picard_tol=picard_tol, bisect_tol=bisect_tol,
        u0_kind=u0_kind, u0_radius=u0_radius, u0_count=u0_count,
        u0_vector=u0_vector, rho=rho, c_alpha_beta=c_ab, estimators=est,
        output_dir=output_dir, raw=raw,
    )


def _resolve_out(cfg: ExperimentConfig, cli_out: str | None) -> str:
    if cli_out:
        return cli_out
    if cfg.output_dir:
        return cfg.output_dir
    root = os.environ.get(_ENV_OUT_ROOT, ".")
    return os.path.join(root, "out")


def _atomic_write(path: str, text: str) -> None:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(path) or ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_json(path: str, payload: dict) -> None:
    _atomic_write(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _write_path_csv_atomic(path: str, vec: VectorPath) -> None:
    import io

    buf = io.StringIO()
    write_path_csv(vec, buf)
    _atomic_write(path, buf.getvalue())


def _report_header(cfg: ExperimentConfig) -> dict:
    return {"config": cfg.raw, "version": __version__}


def _stopping_config(cfg: ExperimentConfig, c_ab: float) -> StoppingConfig:
    return StoppingConfig(
        mu=cfg.mu, c_alpha_beta=c_ab, c_DF=cfg.nonlinearity.c_DF,
        c_DG=cfg.nonlinearity.c_DG, chain=cfg.chain, bisect_tol=cfg.bisect_tol,
    )


def _u0_for_seed(cfg: ExperimentConfig, seed: int) -> np.ndarray:
    if cfg.u0_vector is not None:
        return cfg.u0_vector
    rng = np.random.default_rng(
        np.random.SeedSequence(entropy=_sample_seed(seed, 0), spawn_key=(987,))
    )
    direction = rng.normal(size=cfg.operator.dim)
    direction /= np.linalg.norm(direction)
    return cfg.u0_radius * rng.uniform() ** (1.0 / cfg.operator.dim) * direction


def _covariance_pairs(cfg: ExperimentConfig) -> list[tuple[float, float]]:
    lo, hi = cfg.grid.t0, cfg.grid.end
    span = hi - lo

    def snap(x: float) -> float:
        return cfg.grid.node(cfg.grid.floor_index(lo + x * span))

    fracs = [(0.1, 0.2), (0.1, 0.5), (0.25, 0.5), (0.25, 0.75), (0.5, 0.5),
             (0.5, 1.0), (0.75, 1.0), (0.1, 1.0), (1.0, 1.0), (0.5, 0.75)]
    return [(snap(a), snap(b)) for a, b in fracs]


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _generate_one(cfg: ExperimentConfig, seed: int, out: str) -> str:
    omega = generate_fbm_hilbert(cfg.grid, cfg.hurst, cfg.covariance, seed)
    path = os.path.join(out, "paths", f"path_seed{seed}.csv")
    _write_path_csv_atomic(path, omega)
    return path


def cmd_generate(cfg: ExperimentConfig, out: str, threads: int = 1) -> int:
    pairs = _covariance_pairs(cfg)
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            list(pool.map(_generate_worker,
                          [(cfg.raw, s, out) for s in cfg.seeds]))
    else:
        for seed in cfg.seeds:
            _generate_one(cfg, seed, out)
    # covariance validation on the generated ensemble
    prods = {p: [] for p in range(len(pairs))}
    for seed in cfg.seeds:
        omega = generate_fbm_hilbert(cfg.grid, cfg.hurst, cfg.covariance, seed)
        for i, (s, t) in enumerate(pairs):
            xs = omega.value_at(s)
            xt = omega.value_at(t)
            prods[i].append(float(np.dot(xs, xt)))
    checks = []
    trq = cfg.covariance.trace
    for i, (s, t) in enumerate(pairs):
        arr = np.asarray(prods[i])
        theo = trq * fbm_covariance(s, t, cfg.hurst)
        emp = float(arr.mean())
        se = float(arr.std(ddof=1) / np.sqrt(arr.size)) if arr.size > 1 else 0.0
        z = 0.0 if se == 0.0 else (emp - theo) / se
        checks.append({"s": s, "t": t, "empirical": emp, "theoretical": theo,
                       "std_error": se, "z": z, "pass": bool(abs(z) <= 3.0)})
    report = _report_header(cfg)
    report["covariance_checks"] = checks
    report["n_seeds"] = len(cfg.seeds)
    _write_json(os.path.join(out, "covariance_check.json"), report)
    print(f"generate: wrote {len(cfg.seeds)} paths to {out}/paths, "
          f"{sum(c['pass'] for c in checks)}/{len(checks)} covariance checks pass")
    return EXIT_OK


def _generate_worker(args) -> str:
    raw, seed, out = args
    return _generate_one(parse_config(raw), seed, out)


def _resolve_c_ab(cfg: ExperimentConfig) -> float:
    if cfg.c_alpha_beta is not None:
        return cfg.c_alpha_beta
    consts = calibrate_chain_constants(cfg.operator, cfg.chain, H=cfg.hurst)
    return consts.c_alpha_beta


def cmd_stoptimes(cfg: ExperimentConfig, out: str) -> int:
    if cfg.nonlinearity.c_DF <= 0:
        raise ConfigError("stopping times need a nonlinearity with c_DF > 0")
    c_ab = _resolve_c_ab(cfg)
    scfg = _stopping_config(cfg, c_ab)
    horizon = min(cfg.grid.end - cfg.mu, cfg.grid.end * 0.999)
    n_windows = max(int(np.floor(cfg.grid.end / cfg.mu)) - 1, 1)
    fractions = []
    for seed in cfg.seeds:
        omega = generate_fbm_hilbert(cfg.grid, cfg.hurst, cfg.covariance, seed)
        seq = build_stopping_sequence(omega, scfg, horizon)
        rows = ["i,T_i,gap,f_residual"]
        fwd = seq.forward_times
        res = seq.gap_residuals[seq.zero_index:]
        for i in range(1, fwd.size):
            rows.append(f"{i},{fwd[i]:.17g},{fwd[i] - fwd[i - 1]:.17g},"
                        f"{res[i - 1]:.17g}")
        _atomic_write(os.path.join(out, f"stoptimes_seed{seed}.csv"),
                      "\n".join(rows) + "\n")
        stats = count_window_stats(seq, scfg, n_windows)
        rows = ["j,N_j,M_j"]
        for j in range(n_windows):
            rows.append(f"{j},{stats.N_per_window[j]},{stats.M_per_window[j]}")
        _atomic_write(os.path.join(out, f"window_stats_seed{seed}.csv"),
                      "\n".join(rows) + "\n")
        fractions.append(float((stats.M_per_window > stats.N_per_window).mean()))
    d_est = estimate_d(cfg.hurst, cfg.covariance, scfg,
                       cfg.estimators.d_samples, cfg.grid.h, seed=cfg.seeds[0])
    dbar = float(np.mean(fractions))
    dbar_se = (float(np.std(fractions, ddof=1) / np.sqrt(len(fractions)))
               if len(fractions) > 1 else 0.0)
    D_hat = compute_D(min(d_est.value, 1.0), min(max(dbar, 0.0), 1.0), cfg.mu)
    summary = _report_header(cfg)
    summary.update({
        "c_alpha_beta": c_ab,
        "d_hat": d_est.value, "d_hat_se": d_est.std_error,
        "dbar_hat": dbar, "dbar_hat_se": dbar_se,
        "D_hat": D_hat, "mu": cfg.mu, "n_windows": n_windows,
        "n_seeds": len(cfg.seeds),
    })
    _write_json(os.path.join(out, "stopping_summary.json"), summary)
    print(f"stoptimes: d_hat={d_est.value:.6f} (se {d_est.std_error:.2e}), "
          f"dbar_hat={dbar:.6f} (se {dbar_se:.2e}), D_hat={D_hat:.6f}")
    return EXIT_OK


def _solve_one(cfg: ExperimentConfig, seed: int, out: str) -> float:
    omega = generate_fbm_hilbert(cfg.grid, cfg.hurst, cfg.covariance, seed)
    solve_cfg = SolveConfig(grid=cfg.grid, scheme=cfg.scheme,
                            picard_tol=cfg.picard_tol, chain=cfg.chain)
    u0 = _u0_for_seed(cfg, seed)
    u = solve_mild(u0, cfg.operator, cfg.nonlinearity, omega, solve_cfg)
    rows = ["t,norm_u," + ",".join(f"mode_{i}" for i in range(u.dim))]
    times = cfg.grid.times()
    norms = u.norms()
    for k in range(cfg.grid.n_nodes):
        vals = ",".join(f"{v:.17g}" for v in u.values[k])
        rows.append(f"{times[k]:.17g},{norms[k]:.17g},{vals}")
    _atomic_write(os.path.join(out, f"solution_seed{seed}.csv"),
                  "\n".join(rows) + "\n")
    return mild_residual(u, u0, cfg.operator, cfg.nonlinearity, omega)


def cmd_solve(cfg: ExperimentConfig, out: str, threads: int = 1) -> int:
    residuals = {}
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            for seed, res in zip(cfg.seeds,
                                 pool.map(_solve_worker,
                                          [(cfg.raw, s, out) for s in cfg.seeds])):
                residuals[seed] = res
    else:
        for seed in cfg.seeds:
            residuals[seed] = _solve_one(cfg, seed, out)
    report = _report_header(cfg)
    report["residuals"] = {str(k): v for k, v in residuals.items()}
    report["max_residual"] = max(residuals.values())
    _write_json(os.path.join(out, "solve_report.json"), report)
    print(f"solve: {len(cfg.seeds)} seeds, max mild residual "
          f"{report['max_residual']:.3e}")
    return EXIT_OK


def _solve_worker(args) -> float:
    raw, seed, out = args
    return _solve_one(parse_config(raw), seed, out)


def cmd_stability(cfg: ExperimentConfig, out: str, rho_arg: float | None = None) -> int:
    if cfg.nonlinearity.c_DF <= 0:
        raise ConfigError("the stability pipeline needs c_DF > 0")
    consts = calibrate_chain_constants(cfg.operator, cfg.chain, H=cfg.hurst)
    c_ab = cfg.c_alpha_beta if cfg.c_alpha_beta is not None else consts.c_alpha_beta
    scfg = _stopping_config(cfg, c_ab)
    c_S, c_DF, c_DG = consts.c_S, cfg.nonlinearity.c_DF, cfg.nonlinearity.c_DG
    lam = cfg.operator.lam
    report = _report_header(cfg)
    report["constants"] = {
        "c_S": c_S, "c_alpha_beta": c_ab, "c_S_damped": consts.c_S_damped,
        "c_S_drift": consts.c_S_drift, "lambda": lam,
        "c_DF": c_DF, "c_DG": c_DG,
    }

    if c_S * c_DF * cfg.mu >= 1.0:
        report["satisfied"] = False
        report["reason"] = "c_S * c_DF * mu >= 1"
        _write_json(os.path.join(out, "stability_report.json"), report)
        print("stability: NOT SATISFIED (mu too large for the contraction)")
        return EXIT_NOT_SATISFIED

    trq = cfg.covariance.trace
    d_est = estimate_d(cfg.hurst, cfg.covariance, scfg,
                       cfg.estimators.d_samples, cfg.grid.h, seed=cfg.seeds[0])
    dbar_samples = min(cfg.estimators.dbar_samples, max(len(cfg.seeds), 1))
    dbar_est = estimate_dbar(cfg.hurst, cfg.covariance, scfg,
                             cfg.estimators.dbar_windows, dbar_samples,
                             cfg.grid.h, seed=cfg.seeds[0])
    D_hat = compute_D(min(d_est.value, 1.0), min(max(dbar_est.value, 0.0), 1.0),
                      cfg.mu)
    rate_inputs = RateInputs(lam=lam, c_S=c_S, c_DF=c_DF, mu=cfg.mu, D=D_hat)
    rho_hat = rho_star(rate_inputs)
    report["estimates"] = {
        "d_hat": d_est.value, "d_hat_se": d_est.std_error,
        "dbar_hat": dbar_est.value, "dbar_hat_se": dbar_est.std_error,
        "D_hat": D_hat, "rho_star": rho_hat,
    }

    # small-noise sufficient condition (K-curve)
    q = 2.0 * (1.0 - cfg.hurst)
    if trq > 0:
        C1 = estimate_moment_constant(cfg.hurst, cfg.chain.beta_dprime, 1, cfg.mu,
                                      cfg.covariance, cfg.estimators.moment_samples,
                                      cfg.grid.h, seed=cfg.seeds[0])
        C2 = estimate_moment_constant(cfg.hurst, cfg.chain.beta_dprime, 2, cfg.mu,
                                      cfg.covariance, cfg.estimators.moment_samples,
                                      cfg.grid.h, seed=cfg.seeds[0] + 1)
        p1, p2 = compute_p_coefficients(trq, cfg.hurst, cfg.chain.beta_dprime,
                                        c_ab, c_DG, c_DF, C1.value, C2.value)
        report["moment_constants"] = {
            "C1": C1.value, "C1_se": C1.std_error,
            "C2": C2.value, "C2_se": C2.std_error, "p1": p1, "p2": p2,
        }
        p = p1 + p2
    else:
        p = 0.0
        report["moment_constants"] = {"p1": 0.0, "p2": 0.0}
    cond = sufficient_condition_K(lam, c_S, c_DF, p, q)
    upper = 1.0 / (c_S * c_DF)
    mu_grid = np.linspace(upper * 1e-3, upper * 0.999, 200)
    k_curve = [
        float(np.exp(lam * m) * (1 + (p / m**q if p > 0 else 0.0))
              * c_S * c_DF / (1 - c_S * c_DF * m))
        for m in mu_grid
    ]
    report["kcurve"] = {
        "mu": [float(m) for m in mu_grid], "K": k_curve, "lambda": lam,
        "mu_opt": cond.mu_opt, "K_min": cond.K_min,
        "satisfied": bool(cond.satisfied), "p": p, "q": q,
        "stationarity_residual": cond.stationarity_residual,
    }

    if rho_hat <= 0:
        report["satisfied"] = False
        report["reason"] = "rho_star <= 0 for the configured mu"
        _write_json(os.path.join(out, "stability_report.json"), report)
        print(f"stability: NOT SATISFIED (rho_star={rho_hat:.4f} <= 0)")
        return EXIT_NOT_SATISFIED

    rho = rho_arg if rho_arg is not None else cfg.rho
    if rho is None:
        rho = 0.9 * rho_hat
    if rho >= rho_hat:
        report["satisfied"] = False
        report["reason"] = (f"requested rho={rho} is not below the certified "
                            f"rate rho_star={rho_hat}")
        _write_json(os.path.join(out, "stability_report.json"), report)
        print(f"stability: refusing rho={rho:.4f} >= rho_star={rho_hat:.4f}")
        return EXIT_NOT_SATISFIED

    solve_cfg = SolveConfig(grid=cfg.grid, scheme=cfg.scheme,
                            picard_tol=cfg.picard_tol, chain=cfg.chain)
    verification = verify_exponential_stability(
        cfg.operator, cfg.nonlinearity, cfg.hurst, cfg.covariance, solve_cfg,
        rho, n_seeds=len(cfg.seeds), u0_radius=cfg.u0_radius,
        n_u0=cfg.u0_count, seed=cfg.seeds[0], rho_star_value=rho_hat,
    )
    fitted = []
    for seed in cfg.seeds[: cfg.estimators.growth_seeds]:
        omega = generate_fbm_hilbert(cfg.grid, cfg.hurst, cfg.covariance, seed)
        u0 = _u0_for_seed(cfg, seed)
        u = solve_mild(u0, cfg.operator, cfg.nonlinearity, omega, solve_cfg)
        try:
            fit = fit_decay_rate(u, cfg.grid.t0 + 0.05 * (cfg.grid.end - cfg.grid.t0),
                                 cfg.grid.end)
            fitted.append({"seed": seed, "rho_emp": fit.rho_emp,
                           "r_squared": fit.r_squared,
                           "n_truncated": fit.n_truncated})
        except FbmLabError as exc:
            fitted.append({"seed": seed, "error": str(exc)})

    report["satisfied"] = True  # certified: rho_star > 0 and rho below it
    report["rho"] = rho
    report["verification"] = {
        "pass_fraction": verification.pass_fraction,
        "n_runs": len(verification.runs),
        "runs": [
            {"seed": r.seed, "u0_norm": r.u0_norm, "passed": r.passed,
             "head_max": r.head_max, "tail_max": r.tail_max,
             "log_slope": r.log_slope, "C_omega": r.C_omega}
            for r in verification.runs
        ],
    }
    report["fitted_rates"] = fitted
    _write_json(os.path.join(out, "stability_report.json"), report)
    print(f"stability: rho_star={rho_hat:.4f}, rho={rho:.4f}, "
          f"pass fraction {verification.pass_fraction:.2%}, "
          f"sufficient condition satisfied={cond.satisfied}")
    return EXIT_OK


def cmd_report(path: str) -> int:
    with open(path) as fh:
        rep = json.load(fh)
    print(f"fbmlab report (version {rep.get('version', '?')})")
    for key in ("constants", "estimates"):
        if key in rep:
            for k, v in rep[key].items():
                print(f"  {key}.{k} = {v}")
    if "verification" in rep:
        v = rep["verification"]
        print(f"  verification: {v['pass_fraction']:.2%} of {v['n_runs']} runs pass")
    if "satisfied" in rep:
        print(f"  satisfied: {rep['satisfied']}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="fbmlab",
                                     description="fBm-driven stability laboratory")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("generate", "stoptimes", "solve", "stability"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--seed", type=int, default=None,
                       help="run a single seed instead of the config's list")
        p.add_argument("--out", default=None)
        p.add_argument("--threads", type=int, default=1)
        if name == "stability":
            p.add_argument("--rho", type=float, default=None)
    p = sub.add_parser("report")
    p.add_argument("--in", dest="input", required=True)
    args = parser.parse_args(argv)

    try:
        if args.command == "report":
            return cmd_report(args.input)
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.seeds = [args.seed]
        out = _resolve_out(cfg, args.out)
        os.makedirs(out, exist_ok=True)
        if args.command == "generate":
            return cmd_generate(cfg, out, args.threads)
        if args.command == "stoptimes":
            return cmd_stoptimes(cfg, out)
        if args.command == "solve":
            return cmd_solve(cfg, out, args.threads)
        if args.command == "stability":
            return cmd_stability(cfg, out, args.rho)
        raise ConfigError(f"unknown command {args.command}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FbmLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
