"""Spectral operator, fractional power spaces and semigroup estimates.

The generator is represented purely by the eigenvalues of its negative on
the mode basis, so the semigroup acts diagonally as exp(-lambda_i t). All
operator-norm constants are *measured* on sampled times/exponents rather
than taken from abstract theory; the measured values are what the stability
pipeline feeds into the decay-rate formula.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ParameterError
from .holder import damped_holder_norm
from .paths import ScalarPath, TimeGrid, VectorPath

__all__ = [
    "SpectralOperator",
    "SemigroupConstants",
    "dirichlet_laplacian_1d",
    "apply_semigroup",
    "apply_frac_power",
    "estimate_cS",
    "SemigroupEstimateReport",
    "check_holder_semigroup_estimates",
    "measure_damped_semigroup_constant",
    "measure_drift_semigroup_constant",
]


@dataclass(frozen=True)
class SpectralOperator:
    """Eigenvalues of the negative generator (nondecreasing, positive) and
    the exponential decay rate `lam` used in all estimates, 0 < lam < lambda_1."""

    eigenvalues: tuple[float, ...]
    lam: float

    def __post_init__(self):
        ev = np.asarray(self.eigenvalues, dtype=float)
        if ev.ndim != 1 or ev.size < 1:
            raise ParameterError("need at least one eigenvalue")
        if ev[0] <= 0 or np.any(np.diff(ev) < 0):
            raise ParameterError("eigenvalues must be positive and nondecreasing")
        if not 0.0 < self.lam < ev[0]:
            raise ParameterError(
                f"decay rate must satisfy 0 < lam < lambda_1={ev[0]}, got {self.lam}"
            )
        object.__setattr__(self, "eigenvalues", tuple(float(v) for v in ev))

    @property
    def dim(self) -> int:
        return len(self.eigenvalues)

    def eigen_array(self) -> np.ndarray:
        return np.asarray(self.eigenvalues)


@dataclass(frozen=True)
class SemigroupConstants:
    """A measured semigroup constant for one exponent pair."""

    c_S: float
    lam: float

    def __post_init__(self):
        if not self.c_S > 0:
            raise ParameterError(f"c_S must be positive, got {self.c_S}")


def dirichlet_laplacian_1d(
    modes: int, length: float = 1.0, lam: float | None = None
) -> SpectralOperator:
    """Dirichlet Laplacian on (0, length): eigenvalues (i pi / length)^2."""
    if modes < 1:
        raise ParameterError("need at least one mode")
    if length <= 0:
        raise ParameterError("domain length must be positive")
    ev = (np.arange(1, modes + 1) * np.pi / length) ** 2
    if lam is None:
        lam = 0.5 * ev[0]
    return SpectralOperator(tuple(ev), float(lam))


def apply_semigroup(op: SpectralOperator, t: float, x: np.ndarray) -> np.ndarray:
    """S(t) x: mode i scaled by exp(-lambda_i t)."""
    if t < 0:
        raise DomainError(f"semigroup time must be nonnegative, got {t}")
    return np.asarray(x, dtype=float) * np.exp(-op.eigen_array() * t)


def apply_frac_power(op: SpectralOperator, delta: float, x: np.ndarray) -> np.ndarray:
    """(-A)^delta x: mode i scaled by lambda_i^delta."""
    if delta < 0:
        raise ParameterError(f"fractional power must be nonnegative, got {delta}")
    return np.asarray(x, dtype=float) * op.eigen_array() ** delta


def frac_power_norm(op: SpectralOperator, delta: float, x: np.ndarray) -> float:
    return float(np.linalg.norm(apply_frac_power(op, delta, x)))


def estimate_cS(
    op: SpectralOperator, gamma: float, zeta: float, t_max: float, n_t: int = 2048
) -> float:
    """Smallest grid-observed constant for the smoothing estimate

        ||S(t)||_{L(V_zeta, V_gamma)} <= c_S t^(zeta-gamma) exp(-lam t),

    i.e. the sup over sampled t in (0, t_max] and modes of
    t^(gamma-zeta) lambda_i^(gamma-zeta) exp((lam - lambda_i) t).
    """
    if gamma < zeta:
        raise DomainError(f"need gamma >= zeta, got gamma={gamma}, zeta={zeta}")
    if zeta < 0:
        raise DomainError("exponents must be nonnegative")
    n_t = max(n_t, 1000)
    ts = np.geomspace(1e-8 * t_max, t_max, n_t)
    lam_i = op.eigen_array()
    vals = (
        (ts[:, None] * lam_i[None, :]) ** (gamma - zeta)
        * np.exp(np.outer(ts, op.lam - lam_i))
    )
    return float(vals.max())


@dataclass
class SemigroupEstimateReport:
    """Smallest observed constants for the Hoelder-type semigroup estimates."""

    identity_gap_constant: float      # ||S(t) - id||_{L(V_sigma, V_eta)} / t^(sigma-eta)
    difference_constant: float        # ||S(t-r) - S(t-q)|| bound, single difference
    double_difference_constant: float  # second-difference bound in L(V)
    n_samples: int


def check_holder_semigroup_estimates(
    op: SpectralOperator,
    *,
    sigma: float,
    eta: float,
    gamma: float,
    delta: float,
    eta_dd: float,
    gamma_dd: float,
    n_samples: int = 4000,
    t_max: float = 2.0,
    seed: int = 0,
) -> SemigroupEstimateReport:
    """Measure the constants of the three Hoelder-type operator-norm bounds
    on sampled times; they must come out finite and stable under refinement.
    """
    if not (eta >= 0 and eta <= sigma <= 1 + eta):
        raise DomainError(f"need 0 <= eta <= sigma <= 1 + eta, got {sigma}, {eta}")
    if not (gamma >= delta - eta and delta - eta >= 0):
        raise DomainError("need gamma >= delta - eta >= 0")
    if eta_dd < 0 or gamma_dd < 0:
        raise DomainError("double-difference exponents must be nonnegative")
    rng = np.random.default_rng(seed)
    lam_i = op.eigen_array()

    ts = np.geomspace(1e-6 * t_max, t_max, max(n_samples // 4, 256))
    gap = np.abs(-np.expm1(-np.outer(ts, lam_i))) * lam_i[None, :] ** (eta - sigma)
    c_gap = float((gap.max(axis=1) / ts ** (sigma - eta)).max())

    qrt = np.sort(rng.uniform(0.0, t_max, size=(n_samples, 3)), axis=1)
    q, r, t = qrt[:, 0], qrt[:, 1], qrt[:, 2]
    keep = (r - q > 1e-9) & (t - r > 1e-9)
    q, r, t = q[keep], r[keep], t[keep]
    lhs = np.abs(
        np.exp(-np.outer(t - r, lam_i)) - np.exp(-np.outer(t - q, lam_i))
    ) * lam_i[None, :] ** (gamma - delta)
    rhs = (r - q) ** eta * (t - r) ** (-(eta + gamma - delta))
    c_diff = float((lhs.max(axis=1) / rhs).max())

    qrst = np.sort(rng.uniform(0.0, t_max, size=(n_samples, 4)), axis=1)
    q, r, s, t = qrst[:, 0], qrst[:, 1], qrst[:, 2], qrst[:, 3]
    keep = (r - q > 1e-9) & (s - r > 1e-9) & (t - s > 1e-9)
    q, r, s, t = q[keep], r[keep], s[keep], t[keep]
    lhs = np.abs(
        np.exp(-np.outer(t - r, lam_i))
        - np.exp(-np.outer(s - r, lam_i))
        - np.exp(-np.outer(t - q, lam_i))
        + np.exp(-np.outer(s - q, lam_i))
    ).max(axis=1)
    rhs = (t - s) ** eta_dd * (r - q) ** gamma_dd * (s - r) ** (-(eta_dd + gamma_dd))
    c_dd = float((lhs / rhs).max())
    return SemigroupEstimateReport(c_gap, c_diff, c_dd, n_samples)


def semigroup_path(op: SpectralOperator, v: np.ndarray, grid: TimeGrid) -> VectorPath:
    """t -> S(t) v sampled on the grid (grid times must be nonnegative)."""
    ts = grid.times()
    if ts[0] < 0:
        raise DomainError("semigroup paths need nonnegative times")
    values = np.asarray(v, dtype=float)[None, :] * np.exp(
        -np.outer(ts, op.eigen_array())
    )
    return VectorPath(grid, values)


def measure_damped_semigroup_constant(
    op: SpectralOperator,
    beta: float,
    t_max: float = 2.0,
    n_windows: int = 100,
    nodes_per_window: int = 257,
    seed: int = 0,
) -> float:
    """Smallest observed constant c with

        ||S(.) v||_{beta,beta,t1,t2} <= c exp(-lam t1) ||v||

    over random windows [t1, t2] in (0, t_max]. For a diagonal semigroup the
    worst v is a single mode, so modes are scanned exactly.
    """
    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(n_windows):
        t2 = rng.uniform(0.3 * t_max, t_max)
        t1 = rng.uniform(1e-4, t2 - 0.05 * t_max)
        grid = TimeGrid(t1, (t2 - t1) / (nodes_per_window - 1), nodes_per_window)
        ts = grid.times()
        for lam_i in op.eigenvalues:
            path = ScalarPath(grid, np.exp(-lam_i * ts))
            val = damped_holder_norm(path, beta, t1, t2) * np.exp(op.lam * t1)
            best = max(best, val)
    return best


def measure_drift_semigroup_constant(
    op: SpectralOperator,
    beta: float,
    horizon: float = 1.0,
    n_nodes: int = 513,
    n_samples: int = 32,
    seed: int = 0,
) -> float:
    """Smallest observed constant c with

        || int_0^. S(.-r) u(r) dr ||_{beta,beta,0,T} <= c T sup_t ||u(t)||

    over random bounded paths u (the identity is the extremal Lipschitz
    drift, so this calibrates the drift piece of the solution bound).
    """
    rng = np.random.default_rng(seed)
    grid = TimeGrid(0.0, horizon / (n_nodes - 1), n_nodes)
    ts = grid.times()
    lam_i = op.eigen_array()
    decay = np.exp(-lam_i * grid.h)
    weight = np.where(lam_i > 0, -np.expm1(-lam_i * grid.h) / lam_i, grid.h)
    best = 0.0
    for _ in range(n_samples):
        freqs = rng.uniform(0.5, 8.0, size=(3, op.dim))
        phases = rng.uniform(0, 2 * np.pi, size=(3, op.dim))
        amps = rng.normal(size=(3, op.dim))
        arg = 2 * np.pi * freqs[:, None, :] * ts[None, :, None] + phases[:, None, :]
        u = (amps[:, None, :] * np.cos(arg)).sum(axis=0)
        conv = np.zeros((n_nodes, op.dim))
        acc = np.zeros(op.dim)
        for k in range(n_nodes - 1):
            acc = decay * acc + weight * u[k]
            conv[k + 1] = acc
        path = VectorPath(grid, conv)
        denom = horizon * float(np.linalg.norm(u, axis=1).max())
        val = damped_holder_norm(path, beta, 0.0, horizon) / denom
        best = max(best, val)
    return best
