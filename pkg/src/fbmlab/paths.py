"""Uniform time grids and grid-sampled paths.

All continuous-time objects in this package are represented by their values
on a uniform grid; Hoelder seminorms, stopping times and integrals are grid
quantities throughout. Vector-valued paths store coefficients with respect
to a fixed orthonormal basis, one row per node. Value arrays are frozen
after construction so paths can be shared read-only across threads.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ParameterError

# tolerance for deciding whether a time coincides with a grid node,
# relative to the step size
NODE_RTOL = 1e-9


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid: node k sits at t0 + k*h, k = 0..n_nodes-1."""

    t0: float
    h: float
    n_nodes: int

    def __post_init__(self):
        if not self.h > 0:
            raise ParameterError(f"grid step must be positive, got h={self.h}")
        if self.n_nodes < 2:
            raise ParameterError(f"grid needs at least 2 nodes, got {self.n_nodes}")

    @property
    def end(self) -> float:
        return self.t0 + self.h * (self.n_nodes - 1)

    def times(self) -> np.ndarray:
        return self.t0 + self.h * np.arange(self.n_nodes)

    def node(self, k: int) -> float:
        return self.t0 + self.h * k

    def contains(self, t: float) -> bool:
        tol = NODE_RTOL * self.h
        return self.t0 - tol <= t <= self.end + tol

    def is_node(self, t: float) -> bool:
        if not self.contains(t):
            return False
        k = round((t - self.t0) / self.h)
        return abs(t - self.node(k)) <= NODE_RTOL * self.h

    def index_of(self, t: float) -> int:
        """Index of the node at time t; DomainError if t is off-grid."""
        if not self.contains(t):
            raise DomainError(f"time {t} outside grid [{self.t0}, {self.end}]")
        k = round((t - self.t0) / self.h)
        if abs(t - self.node(k)) > NODE_RTOL * self.h:
            raise DomainError(f"time {t} is not a node of the grid (h={self.h})")
        return int(k)

    def floor_index(self, t: float) -> int:
        """Largest node index with node time <= t (snapping near-nodes)."""
        if not self.contains(t):
            raise DomainError(f"time {t} outside grid [{self.t0}, {self.end}]")
        x = (t - self.t0) / self.h
        k = int(np.floor(x + NODE_RTOL))
        return min(max(k, 0), self.n_nodes - 1)


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(np.asarray(a, dtype=float))
    a.flags.writeable = False
    return a


class ScalarPath:
    """Real-valued path sampled on a TimeGrid."""

    def __init__(self, grid: TimeGrid, values: np.ndarray):
        values = _freeze(values)
        if values.ndim != 1 or values.shape[0] != grid.n_nodes:
            raise ParameterError(
                f"values must have shape ({grid.n_nodes},), got {values.shape}"
            )
        self.grid = grid
        self.values = values

    @property
    def dim(self) -> int:
        return 1

    def as_matrix(self) -> np.ndarray:
        """Values as an (n_nodes, 1) matrix; shared memory, read-only."""
        return self.values.reshape(-1, 1)

    def value_at(self, t: float) -> float:
        return float(_interp_values(self.grid, self.as_matrix(), t)[0])


class VectorPath:
    """Basis-coefficient path: one K-vector per grid node."""

    def __init__(self, grid: TimeGrid, values: np.ndarray):
        values = _freeze(values)
        if values.ndim != 2 or values.shape[0] != grid.n_nodes:
            raise ParameterError(
                f"values must have shape ({grid.n_nodes}, K), got {values.shape}"
            )
        if values.shape[1] < 1:
            raise ParameterError("vector paths need at least one mode")
        self.grid = grid
        self.values = values

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def as_matrix(self) -> np.ndarray:
        return self.values

    def value_at(self, t: float) -> np.ndarray:
        return _interp_values(self.grid, self.values, t)

    def norms(self) -> np.ndarray:
        """Euclidean coefficient norm at every node."""
        return np.linalg.norm(self.values, axis=1)


Path = ScalarPath | VectorPath


def _interp_values(grid: TimeGrid, values: np.ndarray, t: float) -> np.ndarray:
    """Linear interpolation of node values at time t (exact on nodes)."""
    if not grid.contains(t):
        raise DomainError(f"time {t} outside grid [{grid.t0}, {grid.end}]")
    x = (t - grid.t0) / grid.h
    k = int(np.floor(x))
    k = min(max(k, 0), grid.n_nodes - 2)
    frac = x - k
    if frac <= NODE_RTOL:
        return values[k].copy()
    if frac >= 1.0 - NODE_RTOL:
        return values[k + 1].copy()
    return (1.0 - frac) * values[k] + frac * values[k + 1]


def wiener_shift(path: Path, t: float) -> Path:
    """Shift the time origin to t and re-anchor: omega(t + .) - omega(t).

    t must be a grid node with at least one node remaining after it. The
    returned path lives on the shifted grid (same step, same node count)
    and is zero at its new time origin.
    """
    k = path.grid.index_of(t)
    if k > path.grid.n_nodes - 2:
        raise DomainError(f"shift to t={t} leaves no forward window on the grid")
    grid = TimeGrid(path.grid.t0 - t, path.grid.h, path.grid.n_nodes)
    if isinstance(path, ScalarPath):
        return ScalarPath(grid, path.values - path.values[k])
    return VectorPath(grid, path.values - path.values[k])


def write_path_csv(path: Path, destination) -> None:
    """Dump a path as CSV: header t,mode_0,...,mode_{K-1}, full double precision."""
    mat = path.as_matrix()
    times = path.grid.times()
    close = False
    if isinstance(destination, (str, bytes)):
        destination = open(destination, "w", newline="")
        close = True
    try:
        writer = csv.writer(destination)
        writer.writerow(["t"] + [f"mode_{i}" for i in range(mat.shape[1])])
        for k in range(mat.shape[0]):
            writer.writerow([f"{times[k]:.17g}"] + [f"{v:.17g}" for v in mat[k]])
    finally:
        if close:
            destination.close()


def read_path_csv(source) -> VectorPath:
    """Read a path written by write_path_csv. Grid is inferred from the t column."""
    close = False
    if isinstance(source, (str, bytes)):
        source = open(source, newline="")
        close = True
    try:
        reader = csv.reader(source)
        header = next(reader)
        if header[0] != "t":
            raise ParameterError(f"unexpected CSV header: {header}")
        rows = [[float(v) for v in row] for row in reader if row]
    finally:
        if close:
            source.close()
    data = np.asarray(rows)
    if data.shape[0] < 2:
        raise ParameterError("path CSV needs at least two rows")
    ts = data[:, 0]
    h = float(np.median(np.diff(ts)))
    grid = TimeGrid(float(ts[0]), h, data.shape[0])
    if not np.allclose(grid.times(), ts, rtol=0, atol=NODE_RTOL * max(h, 1.0)):
        raise ParameterError("path CSV time column is not a uniform grid")
    return VectorPath(grid, data[:, 1:])
