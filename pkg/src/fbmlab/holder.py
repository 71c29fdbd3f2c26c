"""Hoelder seminorms, the damped Hoelder norm, and fractional derivatives.

Seminorms are exact suprema over grid-node pairs (optionally with linearly
interpolated window endpoints when a window boundary falls between nodes).
Fractional derivatives treat the path as piecewise linear between nodes and
integrate the singular kernels in closed form cell by cell, which removes
the endpoint singularity exactly; the only model error is the interpolation
itself. Refining the quadrature (splitting cells) therefore leaves values
unchanged up to roundoff, which is the built-in self-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ParameterError
from .paths import NODE_RTOL, Path, ScalarPath, _interp_values

__all__ = [
    "ExponentChain",
    "holder_seminorm",
    "window_seminorm",
    "damped_holder_norm",
    "sup_norm",
    "frac_deriv_right",
    "frac_deriv_left",
]


@dataclass(frozen=True)
class ExponentChain:
    """Regularity exponents with the orderings every operation relies on:

    1/2 < beta < beta_prime < beta_dprime < hurst < 1 and
    1 - beta_prime < alpha < beta.
    """

    alpha: float
    beta: float
    beta_prime: float
    beta_dprime: float
    hurst: float

    def __post_init__(self):
        ok = 0.5 < self.beta < self.beta_prime < self.beta_dprime < self.hurst < 1.0
        if not ok:
            raise ParameterError(
                "exponents must satisfy 1/2 < beta < beta' < beta'' < H < 1, got "
                f"({self.beta}, {self.beta_prime}, {self.beta_dprime}, {self.hurst})"
            )
        if not (1.0 - self.beta_prime < self.alpha < self.beta):
            raise ParameterError(
                f"alpha must lie in (1 - beta', beta) = "
                f"({1.0 - self.beta_prime}, {self.beta}), got {self.alpha}"
            )


def _check_beta(beta: float) -> float:
    if not 0.0 < beta < 1.0:
        raise ParameterError(f"Hoelder exponent must lie in (0, 1), got {beta}")
    return float(beta)


def _window_samples(path: Path, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
    """Times and values covering [a, b]: interior grid nodes plus the two
    endpoints, interpolated when they are not nodes."""
    grid = path.grid
    if b <= a:
        raise DomainError(f"window [{a}, {b}] is empty")
    if not (grid.contains(a) and grid.contains(b)):
        raise DomainError(f"window [{a}, {b}] outside grid [{grid.t0}, {grid.end}]")
    mat = path.as_matrix()
    times = grid.times()
    tol = NODE_RTOL * grid.h
    lo = int(np.searchsorted(times, a - tol, side="left"))
    hi = int(np.searchsorted(times, b + tol, side="right"))
    ts = times[lo:hi]
    xs = mat[lo:hi]
    if ts.size == 0 or ts[0] > a + tol:
        ts = np.concatenate([[a], ts])
        xs = np.vstack([_interp_values(grid, mat, a), xs])
    if ts[-1] < b - tol:
        ts = np.concatenate([ts, [b]])
        xs = np.vstack([xs, _interp_values(grid, mat, b)])
    ts = ts.copy()
    ts[0], ts[-1] = a, b
    return ts, xs


def _pair_max(ts: np.ndarray, xs: np.ndarray, beta: float,
              start_weights: np.ndarray | None = None) -> float:
    """max over pairs s < t of w(s) * |x(t) - x(s)| / (t - s)^beta.

    start_weights, when given, multiplies by a weight depending on the left
    index (used for the damped seminorm); otherwise the weight is 1.
    """
    best = 0.0
    for j in range(1, ts.size):
        diffs = np.linalg.norm(xs[j] - xs[:j], axis=1)
        ratios = diffs / (ts[j] - ts[:j]) ** beta
        if start_weights is not None:
            ratios = ratios * start_weights[:j]
        m = ratios.max(initial=0.0)
        if m > best:
            best = m
    return float(best)


def window_seminorm(path: Path, beta: float, a: float, b: float) -> float:
    """Hoelder-beta seminorm over [a, b]; endpoints may fall between nodes."""
    _check_beta(beta)
    ts, xs = _window_samples(path, a, b)
    if ts.size < 2:
        raise DomainError(f"window [{a}, {b}] contains fewer than 2 samples")
    return _pair_max(ts, xs, beta)


def holder_seminorm(path: Path, beta: float, T1: float, T2: float) -> float:
    """Hoelder-beta seminorm over grid pairs in [T1, T2]; T1, T2 must be nodes."""
    path.grid.index_of(T1)
    path.grid.index_of(T2)
    if not T1 < T2:
        raise DomainError(f"need T1 < T2, got [{T1}, {T2}]")
    return window_seminorm(path, beta, T1, T2)


def sup_norm(path: Path, a: float, b: float) -> float:
    """Supremum of the coefficient norm over [a, b]."""
    ts, xs = _window_samples(path, a, b)
    return float(np.linalg.norm(xs, axis=1).max())


def damped_holder_norm(path: Path, beta: float, T1: float, T2: float) -> float:
    """Sup norm over [T1, T2] plus the (s - T1)^beta weighted seminorm.

    The weight vanishes at s = T1, which is what tames semigroup paths that
    are not Hoelder at the window start.
    """
    _check_beta(beta)
    if not T1 < T2:
        raise DomainError(f"need T1 < T2, got [{T1}, {T2}]")
    ts, xs = _window_samples(path, T1, T2)
    if ts.size < 2:
        raise DomainError(f"window [{T1}, {T2}] contains fewer than 2 samples")
    sup = float(np.linalg.norm(xs, axis=1).max())
    weights = (ts - T1) ** beta
    return sup + _pair_max(ts, xs, beta, start_weights=weights)


# ---------------------------------------------------------------------------
# fractional derivatives
# ---------------------------------------------------------------------------


def _cells(ts: np.ndarray, xs: np.ndarray):
    widths = np.diff(ts)
    slopes = (xs[1:] - xs[:-1]) / widths[:, None]
    return widths, slopes


def _maybe_scalar(path: Path, value: np.ndarray):
    if isinstance(path, ScalarPath):
        return float(value[0])
    return value


def frac_deriv_right(path: Path, alpha: float, s: float, r: float):
    """Right-side fractional derivative of order alpha of the path over [s, r],
    evaluated at r:

        (1/Gamma(1-alpha)) * ( g(r)/(r-s)^alpha
                               + alpha * int_s^r (g(r)-g(q))/(r-q)^(1+alpha) dq )

    The singular integral is evaluated in closed form on each cell of the
    piecewise-linear interpolant.
    """
    if not 0.0 < alpha < 1.0:
        raise ParameterError(f"order must lie in (0, 1), got {alpha}")
    if not r > s:
        raise DomainError(f"need s < r, got s={s}, r={r}")
    ts, xs = _window_samples(path, s, r)
    g_r = xs[-1]
    _, slopes = _cells(ts, xs)
    w0 = r - ts[:-1]
    w1 = r - ts[1:]
    c = g_r[None, :] - xs[:-1] - slopes * w0[:, None]
    pow_w0 = w0**-alpha
    pow_w1 = np.where(w1 > 0, np.power(w1, -alpha, where=w1 > 0), 0.0)
    # c vanishes analytically on the final cell where w1 = 0
    sing = np.where(w1[:, None] > 0, c * pow_w1[:, None], 0.0) - c * pow_w0[:, None]
    reg = slopes * (w0 ** (1 - alpha) - w1 ** (1 - alpha))[:, None]
    alpha_int = sing.sum(axis=0) + (alpha / (1 - alpha)) * reg.sum(axis=0)
    value = (g_r * (r - s) ** -alpha + alpha_int) / math.gamma(1 - alpha)
    return _maybe_scalar(path, value)


def frac_deriv_left(path: Path, one_minus_alpha: float, t: float, r: float):
    """Left-side fractional derivative of order 1-alpha of omega(.) - omega(t)
    over [r, t], evaluated at r (real-valued convention; the composed Young
    integral in `young` carries the compensating sign):

        (1/Gamma(alpha)) * ( (omega(r)-omega(t))/(t-r)^(1-alpha)
                             + (1-alpha) * int_r^t (omega(r)-omega(q))/(q-r)^(2-alpha) dq )
    """
    if not 0.0 < one_minus_alpha < 1.0:
        raise ParameterError(f"order must lie in (0, 1), got {one_minus_alpha}")
    alpha = 1.0 - one_minus_alpha
    if not r < t:
        raise DomainError(f"need r < t, got r={r}, t={t}")
    ts, xs = _window_samples(path, r, t)
    om_r = xs[0]
    om_t = xs[-1]
    _, slopes = _cells(ts, xs)
    v0 = ts[:-1] - r
    v1 = ts[1:] - r
    A = om_r[None, :] - xs[:-1] + slopes * v0[:, None]
    pow_v1 = v1 ** (alpha - 1)
    pow_v0 = np.where(v0 > 0, np.power(v0, alpha - 1, where=v0 > 0), 0.0)
    # A vanishes analytically on the first cell where v0 = 0
    sing = A * pow_v1[:, None] - np.where(v0[:, None] > 0, A * pow_v0[:, None], 0.0)
    reg = slopes * (v1**alpha - v0**alpha)[:, None]
    integral = sing.sum(axis=0) / (alpha - 1) - reg.sum(axis=0) / alpha
    value = (
        (om_r - om_t) * (t - r) ** (alpha - 1) + (1 - alpha) * integral
    ) / math.gamma(alpha)
    return _maybe_scalar(path, value)
