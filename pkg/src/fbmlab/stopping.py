"""Stopping-time sequence construction and counting statistics.

The forward stopping time from an origin t0 is the unique root tau in
(0, mu] of

    f(tau) = c_ab * c_DG * <omega>_{beta', [t0, t0+tau]} * tau^beta'
             + c_DF * tau - c_DF * mu,

where <.> is the grid Hoelder seminorm of the shifted path (shifting is
done by windowing the original path in absolute time, which is exact).
f is continuous and starts below zero, and it is nonnegative at tau = mu,
so a node scan brackets the root and bisection with linear interpolation
of the path finishes the job. The backward time solves the mirrored
equation on [t0 - mu, t0] and is computed by running the same scan on the
time-reversed window.

All counting statistics (window counts, the ergodic constants d and d-bar,
and the growth constant D) are estimated by plain Monte Carlo with standard
errors reported; long-window averages stand in for ergodic limits.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConsistencyError, DomainError, ParameterError
from .fbm import CovarianceSpec, generate_fbm_hilbert
from .holder import ExponentChain, window_seminorm, _window_samples
from .paths import NODE_RTOL, TimeGrid, VectorPath, _interp_values

__all__ = [
    "StoppingConfig",
    "StoppingSequence",
    "StopStats",
    "MonteCarloEstimate",
    "forward_stopping_time",
    "backward_stopping_time",
    "build_stopping_sequence",
    "comparison_check",
    "count_window_stats",
    "bound_K",
    "estimate_d",
    "estimate_dbar",
    "compute_D",
    "check_linear_growth",
]

# constructed roots must satisfy |f(root)| <= c_DF * mu * RESIDUAL_FRACTION
RESIDUAL_FRACTION = 1e-6


@dataclass(frozen=True)
class StoppingConfig:
    mu: float
    c_alpha_beta: float
    c_DF: float
    c_DG: float
    chain: ExponentChain
    bisect_tol: float | None = None

    def __post_init__(self):
        if self.mu <= 0:
            raise ParameterError(f"mu must be positive, got {self.mu}")
        if self.c_alpha_beta <= 0:
            raise ParameterError("c_alpha_beta must be positive")
        if self.c_DF <= 0:
            raise ParameterError(
                "c_DF must be positive (the root equation scales by c_DF * mu)"
            )
        if self.c_DG < 0:
            raise ParameterError("c_DG must be nonnegative")
        if self.bisect_tol is None:
            object.__setattr__(self, "bisect_tol", self.mu * 1e-8)
        elif self.bisect_tol <= 0:
            raise ParameterError("bisect_tol must be positive")


@dataclass
class StoppingSequence:
    """Strictly increasing times with times[zero_index] = 0; gaps in (0, mu]."""

    times: np.ndarray
    zero_index: int
    gap_residuals: np.ndarray  # |f| at each constructed gap, aligned with diff(times)
    mu: float
    path: VectorPath

    @property
    def forward_times(self) -> np.ndarray:
        """T_0 = 0, T_1, T_2, ... (nonnegative part)."""
        return self.times[self.zero_index:]

    @property
    def gaps(self) -> np.ndarray:
        return np.diff(self.times)


@dataclass
class StopStats:
    N_per_window: np.ndarray
    M_per_window: np.ndarray
    boundary_flags: np.ndarray
    d_hat: float | None = None
    dbar_hat: float | None = None
    D_hat: float | None = None


@dataclass
class MonteCarloEstimate:
    value: float
    std_error: float
    n_samples: int


def _sample_seed(seed: int, sample: int) -> int:
    # distinct, reproducible per-sample master seeds; paired runs that share
    # `seed` see identical underlying Gaussians
    return seed * 1_000_003 + sample


def _scan_root(ts_rel: np.ndarray, xs: np.ndarray, value_at_rel, cfg: StoppingConfig):
    """Root of f on the relative window [0, mu].

    ts_rel are the sample offsets (ts_rel[0] = 0), xs the sample values;
    value_at_rel(u) interpolates the path at relative offset u. Returns
    (root_offset, f_residual).
    """
    mu = cfg.mu
    bp = cfg.chain.beta_prime
    coef = cfg.c_alpha_beta * cfg.c_DG
    target = cfg.c_DF * mu
    ftol = 0.5 * RESIDUAL_FRACTION * target

    w = ts_rel.size
    running = np.empty(w)
    running[0] = 0.0
    M = 0.0
    hit = None
    f = -target
    for j in range(1, w):
        d = np.linalg.norm(xs[j] - xs[:j], axis=1)
        M = max(M, float((d / (ts_rel[j] - ts_rel[:j]) ** bp).max()))
        running[j] = M
        tau = ts_rel[j]
        f = coef * M * tau**bp + cfg.c_DF * tau - target
        if f >= 0.0:
            hit = j
            break
    if hit is None:
        # tau = mu reached with f still negative: analytically impossible
        # beyond roundoff, so anything past tolerance is a configuration bug
        if f < -ftol:
            raise ConsistencyError(
                f"root equation negative at tau=mu (f={f}); "
                "tolerances are misconfigured"
            )
        return mu, abs(f)
    if f <= ftol:
        # the node itself meets the residual budget; no sub-grid search needed
        return float(ts_rel[hit]), float(f)

    lo, hi = float(ts_rel[hit - 1]), float(ts_rel[hit])
    base = running[hit - 1]
    anchor_ts = ts_rel[:hit]
    anchor_xs = xs[:hit]

    def f_at(u: float) -> float:
        x = value_at_rel(u)
        d = np.linalg.norm(x - anchor_xs, axis=1)
        m_loc = max(base, float((d / (u - anchor_ts) ** bp).max()))
        return coef * m_loc * u**bp + cfg.c_DF * u - target

    mid, fm = hi, f
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        fm = f_at(mid)
        if abs(fm) <= ftol and hi - lo <= cfg.bisect_tol:
            break
        if fm > 0.0:
            hi = mid
        else:
            lo = mid
    if abs(fm) > RESIDUAL_FRACTION * target:
        raise ConsistencyError(
            f"bisection stalled with |f|={abs(fm)} above the residual budget"
        )
    return float(mid), abs(fm)


def _forward_root(omega: VectorPath, cfg: StoppingConfig, t0: float):
    ts, xs = _window_samples(omega, t0, t0 + cfg.mu)
    ts_rel = ts - t0
    ts_rel[0] = 0.0
    mat = omega.as_matrix()

    def value_at_rel(u: float) -> np.ndarray:
        return _interp_values(omega.grid, mat, t0 + u)

    return _scan_root(ts_rel, xs, value_at_rel, cfg)


def _backward_root(omega: VectorPath, cfg: StoppingConfig, t0: float):
    ts, xs = _window_samples(omega, t0 - cfg.mu, t0)
    ts_rel = (t0 - ts)[::-1].copy()
    ts_rel[0] = 0.0
    xs_rev = xs[::-1]
    mat = omega.as_matrix()

    def value_at_rel(u: float) -> np.ndarray:
        return _interp_values(omega.grid, mat, t0 - u)

    root, res = _scan_root(ts_rel, xs_rev, value_at_rel, cfg)
    return -root, res


def forward_stopping_time(omega: VectorPath, cfg: StoppingConfig, t0: float) -> float:
    """The gap tau in (0, mu] after which the weighted Hoelder mass of the
    path shifted to t0 exhausts the budget c_DF * mu."""
    return _forward_root(omega, cfg, t0)[0]


def backward_stopping_time(omega: VectorPath, cfg: StoppingConfig, t0: float) -> float:
    """The mirrored gap tau in [-mu, 0) looking backward from t0."""
    return _backward_root(omega, cfg, t0)[0]


def build_stopping_sequence(
    omega: VectorPath,
    cfg: StoppingConfig,
    horizon: float,
    include_negative: bool = False,
) -> StoppingSequence:
    """T_0 = 0, then forward recursion until the horizon is exceeded;
    backward recursion when requested and the grid covers negative time."""
    grid = omega.grid
    tol = NODE_RTOL * grid.h
    if horizon > grid.end + tol:
        raise DomainError(f"horizon {horizon} beyond grid end {grid.end}")
    fwd = [0.0]
    res_fwd = []
    while fwd[-1] < horizon - tol:
        t0 = fwd[-1]
        if t0 + cfg.mu > grid.end + tol:
            break
        tau, r = _forward_root(omega, cfg, t0)
        fwd.append(t0 + tau)
        res_fwd.append(r)
    bwd = []
    res_bwd = []
    if include_negative:
        t0 = 0.0
        while t0 - cfg.mu >= grid.t0 - tol:
            tau, r = _backward_root(omega, cfg, t0)
            t0 = t0 + tau
            bwd.append(t0)
            res_bwd.append(r)
    times = np.array(bwd[::-1] + fwd)
    residuals = np.array(res_bwd[::-1] + res_fwd)
    gaps = np.diff(times)
    if times.size > 1 and (gaps.min() <= 0 or gaps.max() > cfg.mu * (1 + 1e-9)):
        raise ConsistencyError("constructed gaps left the interval (0, mu]")
    return StoppingSequence(times, len(bwd), residuals, cfg.mu, omega)


@dataclass
class ComparisonReport:
    ok: bool
    violations: list
    chain_from_t1: np.ndarray
    chain_from_t2: np.ndarray
    tolerance: float


def _root_chain(omega: VectorPath, cfg: StoppingConfig, t0: float, depth: int) -> np.ndarray:
    out = []
    t = t0
    for _ in range(depth):
        tau, _ = _forward_root(omega, cfg, t)
        t = t + tau
        out.append(t)
    return np.asarray(out)


def comparison_check(
    omega: VectorPath, cfg: StoppingConfig, t1: float, t2: float, depth: int = 3
) -> ComparisonReport:
    """Verify monotonicity of t -> t + T(shifted path) and the interleaving
    chain it generates; report-only."""
    if t2 < t1:
        raise DomainError(f"need t1 <= t2, got {t1} > {t2}")
    tol = 2.0 * cfg.bisect_tol
    a = _root_chain(omega, cfg, t1, depth)
    b = _root_chain(omega, cfg, t2, depth)
    violations = []
    for k in range(depth):
        if a[k] > b[k] + tol:
            violations.append(("monotonicity", k + 1, float(a[k] - b[k])))
    if t2 < a[0] - tol:
        # interleaving: a_k <= b_k < a_{k+1} <= ...
        for k in range(depth - 1):
            if b[k] > a[k + 1] + tol:
                violations.append(("interleaving", k + 1, float(b[k] - a[k + 1])))
    return ComparisonReport(not violations, violations, a, b, tol)


def _count_in_unit_window(omega: VectorPath, cfg: StoppingConfig, origin: float):
    """Number of rebuilt stopping times within (origin, origin + mu];
    also reports whether a time landed on the window boundary."""
    btol = cfg.bisect_tol
    t = origin
    count = 0
    flagged = False
    for _ in range(100_000):
        tau, _ = _forward_root(omega, cfg, t)
        t = t + tau
        rel = t - origin
        if rel <= cfg.mu + btol:
            count += 1
            if rel >= cfg.mu - btol:
                flagged = True
                break
        else:
            break
    return count, flagged


def count_window_stats(
    seq: StoppingSequence, cfg: StoppingConfig, n_windows: int
) -> StopStats:
    """N per window (rebuilt from each window origin) and M per window
    (counted from the sequence), with the boundary tie rule: a time within
    bisect_tol of a window boundary is counted into the left window and the
    window is flagged."""
    omega = seq.path
    mu = cfg.mu
    btol = cfg.bisect_tol
    if seq.forward_times[-1] < n_windows * mu - btol:
        raise DomainError(
            f"sequence covers only up to {seq.forward_times[-1]}, "
            f"need {n_windows * mu}"
        )
    if omega.grid.end + NODE_RTOL * omega.grid.h < (n_windows + 1) * mu:
        raise DomainError("grid too short to rebuild counts for every window")
    times = seq.forward_times[1:]
    N = np.empty(n_windows, dtype=int)
    M = np.empty(n_windows, dtype=int)
    flags = np.zeros(n_windows, dtype=bool)
    boundaries = mu * np.arange(n_windows + 1) + btol
    M[:] = np.histogram(times, bins=boundaries)[0]
    near = np.abs(times[None, :] - mu * np.arange(1, n_windows + 1)[:, None]) <= btol
    flags |= near.any(axis=1)
    for j in range(n_windows):
        N[j], rebuilt_flag = _count_in_unit_window(omega, cfg, j * mu)
        flags[j] |= rebuilt_flag
        diff = M[j] - N[j]
        if diff not in (0, 1) and not flags[j]:
            raise ConsistencyError(
                f"window {j}: M={M[j]}, N={N[j]} violates M - N in {{0, 1}}"
            )
    return StopStats(N, M, flags)


def bound_K(omega: VectorPath, cfg: StoppingConfig, t0: float) -> float:
    """Counting bound K for the window [t0, t0 + mu]:

        ((c_ab c_DG <omega>_{beta'', t0, t0+mu} + c_DF mu^(1-beta''))
          / (c_DF mu)) ^ (1/beta'')
    """
    bpp = cfg.chain.beta_dprime
    sem = window_seminorm(omega, bpp, t0, t0 + cfg.mu)
    return _k_from_seminorm(sem, cfg)


def _k_from_seminorm(sem: float, cfg: StoppingConfig) -> float:
    bpp = cfg.chain.beta_dprime
    num = cfg.c_alpha_beta * cfg.c_DG * sem + cfg.c_DF * cfg.mu ** (1.0 - bpp)
    return float((num / (cfg.c_DF * cfg.mu)) ** (1.0 / bpp))


def _sliding_sup_seminorm(omega: VectorPath, beta: float, mu: float) -> float:
    """sup over grid nodes r <= 0 of the beta-seminorm over [r, r + mu]."""
    grid = omega.grid
    times = grid.times()
    vals = omega.values
    n = grid.n_nodes
    # pairwise ratio matrix over all nodes (windows then take block maxima)
    best = 0.0
    i_zero = grid.floor_index(min(0.0, grid.end))
    ratio_rows = []
    for j in range(1, n):
        d = np.linalg.norm(vals[j] - vals[:j], axis=1)
        ratio_rows.append(d / (times[j] - times[:j]) ** beta)
    mat = omega.as_matrix()
    for a in range(i_zero + 1):
        b_time = times[a] + mu
        if b_time > grid.end + NODE_RTOL * grid.h:
            break
        kb = grid.floor_index(b_time)
        block = 0.0
        for j in range(a + 1, kb + 1):
            block = max(block, float(ratio_rows[j - 1][a:j].max()))
        if b_time - times[kb] > NODE_RTOL * grid.h:
            x_end = _interp_values(grid, mat, b_time)
            d = np.linalg.norm(x_end - vals[a : kb + 1], axis=1)
            block = max(block, float((d / (b_time - times[a : kb + 1]) ** beta).max()))
        best = max(best, block)
    return best


def estimate_d(
    H: float,
    Q: CovarianceSpec,
    cfg: StoppingConfig,
    n_samples: int,
    h: float,
    seed: int = 0,
) -> MonteCarloEstimate:
    """Monte Carlo estimate of d = 1 / (mu * E sup_{r in [-mu, 0]} K(window at r)).

    Pathwise K >= 1/mu, so the estimate always lands in (0, 1].
    """
    if n_samples < 100:
        raise ParameterError("estimate_d needs at least 100 samples")
    mu = cfg.mu
    n = int(np.ceil(2 * mu / h - 1e-9)) + 2
    grid = TimeGrid(-mu, h, n)
    sups = np.empty(n_samples)
    for s in range(n_samples):
        om = generate_fbm_hilbert(grid, H, Q, seed=_sample_seed(seed, s))
        sem = _sliding_sup_seminorm(om, cfg.chain.beta_dprime, mu)
        sups[s] = _k_from_seminorm(sem, cfg)
    mean = float(sups.mean())
    se_mean = float(sups.std(ddof=1) / np.sqrt(n_samples)) if n_samples > 1 else 0.0
    d = 1.0 / (mu * mean)
    se_d = se_mean / (mu * mean**2)
    return MonteCarloEstimate(d, se_d, n_samples)


def estimate_dbar(
    H: float,
    Q: CovarianceSpec,
    cfg: StoppingConfig,
    n_windows: int,
    n_samples: int,
    h: float,
    seed: int = 0,
) -> MonteCarloEstimate:
    """Long-run fraction of length-mu windows where the sequence count M
    exceeds the rebuilt count N, averaged over fresh paths."""
    if n_windows < 50:
        raise ParameterError("estimate_dbar needs at least 50 windows")
    if n_samples < 1:
        raise ParameterError("estimate_dbar needs at least one sample")
    mu = cfg.mu
    horizon = n_windows * mu
    n = int(np.ceil((horizon + 2 * mu) / h - 1e-9)) + 2
    grid = TimeGrid(0.0, h, n)
    fracs = np.empty(n_samples)
    for s in range(n_samples):
        om = generate_fbm_hilbert(grid, H, Q, seed=_sample_seed(seed, s))
        seq = build_stopping_sequence(om, cfg, horizon)
        stats = count_window_stats(seq, cfg, n_windows)
        fracs[s] = float((stats.M_per_window > stats.N_per_window).mean())
    value = float(fracs.mean())
    se = float(fracs.std(ddof=1) / np.sqrt(n_samples)) if n_samples > 1 else 0.0
    return MonteCarloEstimate(value, se, n_samples)


def compute_D(d_hat: float, dbar_hat: float, mu: float) -> float:
    """Growth constant D = mu * d / (1 + d * dbar), always in (0, mu]."""
    if not 0.0 < d_hat <= 1.0 + 1e-12:
        raise ParameterError(f"d must lie in (0, 1], got {d_hat}")
    if not 0.0 <= dbar_hat <= 1.0 + 1e-12:
        raise ParameterError(f"dbar must lie in [0, 1], got {dbar_hat}")
    if mu <= 0:
        raise ParameterError(f"mu must be positive, got {mu}")
    return mu * d_hat / (1.0 + d_hat * dbar_hat)


@dataclass
class GrowthReport:
    min_ratio: float
    argmin_k: int
    n_checked: int
    violations: list
    threshold: float


def check_linear_growth(
    seq: StoppingSequence, D: float, k0: int = 10, eps_stat: float = 0.1
) -> GrowthReport:
    """Report min_k T_k / k over k in [k0, k_max] against D * (1 - eps_stat)."""
    fwd = seq.forward_times
    if fwd.size < 50:
        raise ParameterError("need a sequence with at least 50 stopping times")
    ks = np.arange(k0, fwd.size)
    ratios = fwd[ks] / ks
    j = int(ratios.argmin())
    threshold = D * (1.0 - eps_stat)
    violations = [
        (int(k), float(r)) for k, r in zip(ks, ratios) if r < threshold
    ]
    return GrowthReport(float(ratios[j]), int(ks[j]), ks.size, violations, threshold)
