"""Fractional Brownian motion on uniform grids.

Scalar paths are generated exactly in distribution at the grid nodes by
circulant embedding of the fractional-Gaussian-noise covariance (FFT,
O(n log n)), with a Cholesky factorization of the increment covariance as
fallback whenever the embedding is not nonnegative definite. Hilbert-valued
paths combine independent scalar paths mode by mode, scaled by the square
roots of the covariance eigenvalues.

Seeding: one master seed; mode i draws from the stream
``SeedSequence(entropy=seed, spawn_key=(i,))`` so that a K-mode path is
reproducible mode-by-mode independently of K.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import GenerationError, ParameterError
from .paths import ScalarPath, TimeGrid, VectorPath

__all__ = [
    "CovarianceSpec",
    "fbm_covariance",
    "generate_fbm_scalar",
    "generate_fbm_hilbert",
]

# relative slack for eigenvalues of the circulant embedding: tiny negative
# values are rounding noise, anything below this triggers the fallback
_EMBEDDING_RTOL = 1e-10


@dataclass(frozen=True)
class CovarianceSpec:
    """Eigenvalues q_i >= 0 of the covariance operator on the mode basis."""

    eigenvalues: tuple[float, ...]

    def __post_init__(self):
        q = np.asarray(self.eigenvalues, dtype=float)
        if q.ndim != 1 or q.size < 1:
            raise ParameterError("covariance needs at least one eigenvalue")
        if np.any(q < 0):
            raise ParameterError("covariance eigenvalues must be nonnegative")
        object.__setattr__(self, "eigenvalues", tuple(float(v) for v in q))

    @property
    def dim(self) -> int:
        return len(self.eigenvalues)

    @property
    def trace(self) -> float:
        return float(sum(self.eigenvalues))

    @staticmethod
    def from_trace(trace: float, modes: int, profile: str = "polynomial") -> "CovarianceSpec":
        """Distribute a total trace over modes.

        profile 'polynomial' puts q_i proportional to 1/i^2 (trace-class
        flavor on the truncation), 'uniform' splits evenly.
        """
        if trace < 0:
            raise ParameterError("trace must be nonnegative")
        if modes < 1:
            raise ParameterError("need at least one mode")
        if profile == "polynomial":
            w = 1.0 / np.arange(1, modes + 1) ** 2
        elif profile == "uniform":
            w = np.ones(modes)
        else:
            raise ParameterError(f"unknown covariance profile {profile!r}")
        w = w / w.sum()
        return CovarianceSpec(tuple(trace * w))


def _check_hurst(H: float) -> float:
    if not 0.0 < H < 1.0:
        raise ParameterError(f"Hurst parameter must lie in (0, 1), got {H}")
    return float(H)


def fbm_covariance(s: float, t: float, H: float) -> float:
    """Two-sided fBm covariance R(s, t) = (|t|^2H + |s|^2H - |t-s|^2H) / 2."""
    H = _check_hurst(H)
    return 0.5 * (
        abs(t) ** (2 * H) + abs(s) ** (2 * H) - abs(t - s) ** (2 * H)
    )


def _fgn_autocovariance(n_lags: int, H: float) -> np.ndarray:
    """Autocovariance of unit-step fractional Gaussian noise at lags 0..n_lags."""
    k = np.arange(n_lags + 1, dtype=float)
    return 0.5 * (
        (k + 1) ** (2 * H) - 2 * k ** (2 * H) + np.abs(k - 1) ** (2 * H)
    )


def _fgn_circulant(m: int, H: float, rng: np.random.Generator) -> np.ndarray:
    """m fGn increments (unit step) via circulant embedding, or None."""
    gamma = _fgn_autocovariance(m, H)
    row = np.concatenate([gamma, gamma[-2:0:-1]]) if m > 1 else gamma
    eigs = np.fft.fft(row).real
    floor = -_EMBEDDING_RTOL * eigs.max()
    if eigs.min() < floor:
        return None
    eigs = np.clip(eigs, 0.0, None)
    big = eigs.size
    z = rng.standard_normal(big) + 1j * rng.standard_normal(big)
    # fft of sqrt(g/M) * (A + iB): the real part has covariance exactly `row`
    sample = np.fft.fft(np.sqrt(eigs / big) * z).real
    return sample[:m]


def _fgn_cholesky(m: int, H: float, rng: np.random.Generator, n_nodes: int) -> np.ndarray:
    gamma = _fgn_autocovariance(m - 1, H) if m > 1 else _fgn_autocovariance(0, H)
    cov = scipy.linalg.toeplitz(gamma[:m])
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise GenerationError(
            f"fGn covariance not factorizable for grid with {n_nodes} nodes"
        ) from exc
    return chol @ rng.standard_normal(m)


def _rng_for(seed: int, mode: int | None = None) -> np.random.Generator:
    if mode is None:
        return np.random.default_rng(np.random.SeedSequence(entropy=seed))
    return np.random.default_rng(
        np.random.SeedSequence(entropy=seed, spawn_key=(mode,))
    )


def _anchor_index(grid: TimeGrid) -> int:
    """Node where generated noise is pinned to zero: time 0 if on grid, else node 0."""
    if grid.contains(0.0) and grid.is_node(0.0):
        return grid.index_of(0.0)
    return 0


def generate_fbm_scalar(
    grid: TimeGrid, H: float, seed: int, _rng: np.random.Generator | None = None
) -> ScalarPath:
    """Sample a scalar fBm path on the grid, exact in distribution at the nodes.

    The path is zero at time 0 when 0 is a grid node (two-sided grids),
    otherwise at the first node. Deterministic given the seed.
    """
    H = _check_hurst(H)
    rng = _rng_for(seed) if _rng is None else _rng
    m = grid.n_nodes - 1
    fgn = _fgn_circulant(m, H, rng)
    if fgn is None:
        fgn = _fgn_cholesky(m, H, rng, grid.n_nodes)
    fgn = fgn * grid.h**H
    values = np.concatenate([[0.0], np.cumsum(fgn)])
    k0 = _anchor_index(grid)
    if k0 != 0:
        values = values - values[k0]
    return ScalarPath(grid, values)


def generate_fbm_hilbert(
    grid: TimeGrid, H: float, Q: CovarianceSpec, seed: int
) -> VectorPath:
    """Sample a Hilbert-valued fBm: mode i is sqrt(q_i) times an independent scalar fBm."""
    H = _check_hurst(H)
    values = np.zeros((grid.n_nodes, Q.dim))
    for i, q in enumerate(Q.eigenvalues):
        if q > 0.0:
            scalar = generate_fbm_scalar(grid, H, seed, _rng=_rng_for(seed, i))
            values[:, i] = np.sqrt(q) * scalar.values
    return VectorPath(grid, values)
