import io

import numpy as np
import pytest

from fbmlab import (
    CovarianceSpec,
    DomainError,
    ParameterError,
    generate_fbm_hilbert,
    read_path_csv,
    wiener_shift,
    write_path_csv,
)
from fbmlab.paths import ScalarPath, TimeGrid, VectorPath


def test_grid_validation():
    with pytest.raises(ParameterError):
        TimeGrid(0.0, -0.1, 10)
    with pytest.raises(ParameterError):
        TimeGrid(0.0, 0.1, 1)


def test_grid_nodes_strictly_increasing():
    g = TimeGrid(-1.0, 0.25, 9)
    ts = g.times()
    assert np.all(np.diff(ts) > 0)
    assert g.index_of(ts[3]) == 3
    with pytest.raises(DomainError):
        g.index_of(ts[3] + 0.1 * g.h)
    with pytest.raises(DomainError):
        g.index_of(g.end + 1.0)


def test_path_shape_checks():
    g = TimeGrid(0.0, 0.5, 3)
    with pytest.raises(ParameterError):
        ScalarPath(g, np.zeros(5))
    with pytest.raises(ParameterError):
        VectorPath(g, np.zeros((3, 0)))


def test_paths_are_read_only():
    g = TimeGrid(0.0, 0.5, 3)
    p = VectorPath(g, np.zeros((3, 2)))
    with pytest.raises(ValueError):
        p.values[0, 0] = 1.0


def test_value_at_interpolates():
    g = TimeGrid(0.0, 0.5, 3)
    p = ScalarPath(g, np.array([0.0, 1.0, 4.0]))
    assert p.value_at(0.25) == pytest.approx(0.5)
    assert p.value_at(0.5) == 1.0


class TestWienerShift:
    def _path(self):
        g = TimeGrid(0.0, 0.125, 17)
        rng = np.random.default_rng(0)
        values = rng.normal(size=(17, 2))
        values[0] = 0.0  # canonical noise paths are zero at zero
        return VectorPath(g, values)

    def test_zero_shift_is_identity(self):
        p = self._path()
        q = wiener_shift(p, 0.0)
        assert np.array_equal(q.values, p.values)
        assert q.grid == p.grid

    def test_shifted_path_zero_at_new_origin(self):
        p = self._path()
        q = wiener_shift(p, 0.5)
        assert np.all(q.values[q.grid.index_of(0.0)] == 0.0)

    def test_composition_matches_single_shift(self):
        p = self._path()
        a = wiener_shift(wiener_shift(p, 0.25), 0.375)
        b = wiener_shift(p, 0.625)
        assert np.allclose(a.values, b.values, rtol=0, atol=1e-15)
        assert a.grid.t0 == pytest.approx(b.grid.t0)

    def test_off_grid_shift_rejected(self):
        p = self._path()
        with pytest.raises(DomainError):
            wiener_shift(p, 0.1)
        with pytest.raises(DomainError):
            wiener_shift(p, p.grid.end)  # no forward window left


def test_csv_round_trip():
    g = TimeGrid(0.0, 2**-6, 65)
    om = generate_fbm_hilbert(g, 0.75, CovarianceSpec((0.4, 0.1, 0.05)), seed=3)
    buf = io.StringIO()
    write_path_csv(om, buf)
    text = buf.getvalue()
    assert text.splitlines()[0] == "t,mode_0,mode_1,mode_2"
    back = read_path_csv(io.StringIO(text))
    assert np.array_equal(back.values, om.values)  # 17 significant digits round-trip
    assert back.grid.n_nodes == g.n_nodes
