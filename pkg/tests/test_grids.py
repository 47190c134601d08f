import numpy as np
import pytest

from wavepot.errors import GridMismatchError
from wavepot.grids import (
    ComplexSampleField,
    Grid,
    ScalarSampleField,
    VectorSampleField3,
    inner,
    integrate,
    l2_norm,
    max_norm,
)


class TestGrid:
    def test_basic_properties(self):
        g = Grid((8, 16), (2.0, 4.0))
        assert g.dims == 2
        assert g.spacings == (0.25, 0.25)
        assert g.cell_volume == 0.0625
        assert g.size == 128

    def test_coordinates_start_at_zero(self):
        g = Grid.line(8, 4.0)
        x = g.axis_coordinates(0)
        assert x[0] == 0.0
        assert x[-1] == pytest.approx(4.0 - 0.5)
        assert np.allclose(np.diff(x), 0.5)

    @pytest.mark.parametrize("n", [0, 2, 3, 5, 7])
    def test_rejects_small_or_odd_point_counts(self, n):
        with pytest.raises(ValueError):
            Grid.line(n, 1.0)

    @pytest.mark.parametrize("length", [0.0, -1.0, np.inf, np.nan])
    def test_rejects_bad_lengths(self, length):
        with pytest.raises(ValueError):
            Grid.line(8, length)

    def test_rejects_too_many_axes(self):
        with pytest.raises(ValueError):
            Grid((4, 4, 4, 4), (1.0, 1.0, 1.0, 1.0))

    def test_equality_and_hash(self):
        assert Grid.line(8, 1.0) == Grid.line(8, 1.0)
        assert hash(Grid.cube(4, 2.0)) == hash(Grid.cube(4, 2.0))
        assert Grid.line(8, 1.0) != Grid.line(8, 2.0)


class TestFields:
    def test_scalar_shape_and_finiteness(self, grid64):
        with pytest.raises(ValueError):
            ScalarSampleField(grid64, np.zeros(3))
        bad = np.zeros(grid64.shape)
        bad[5] = np.nan
        with pytest.raises(ValueError):
            ScalarSampleField(grid64, bad)

    def test_scalar_arithmetic(self, grid64):
        a = ScalarSampleField.full(grid64, 2.0)
        b = ScalarSampleField.full(grid64, 3.0)
        assert np.all((a + b).values == 5.0)
        assert np.all((a - b).values == -1.0)
        assert np.all((a * b).values == 6.0)
        assert np.all((2.0 * a).values == 4.0)
        assert np.all((-a).values == -2.0)

    def test_grid_mismatch_raises(self):
        a = ScalarSampleField.zeros(Grid.line(8, 1.0))
        b = ScalarSampleField.zeros(Grid.line(8, 2.0))
        with pytest.raises(GridMismatchError):
            _ = a + b

    def test_complex_parts_roundtrip(self, grid64, rng):
        re = ScalarSampleField(grid64, rng.standard_normal(grid64.shape))
        im = ScalarSampleField(grid64, rng.standard_normal(grid64.shape))
        c = ComplexSampleField.from_parts(re, im)
        assert np.allclose(c.real.values, re.values)
        assert np.allclose(c.imag.values, im.values)

    def test_vector_requires_3d(self, grid64):
        with pytest.raises(GridMismatchError):
            VectorSampleField3.zeros(grid64)

    def test_vector_components_share_grid(self, cube16, rng):
        v = VectorSampleField3(cube16, rng.standard_normal((3,) + cube16.shape))
        assert v.x.grid == v.y.grid == v.z.grid == cube16
        assert np.allclose(v.dot(v).values, np.sum(v.values**2, axis=0))


class TestNorms:
    def test_integrate_constant(self):
        g = Grid.line(16, 5.0)
        f = ScalarSampleField.full(g, 2.0)
        assert integrate(f) == pytest.approx(10.0)

    def test_l2_and_inner_consistency(self, grid64, rng):
        f = ScalarSampleField(grid64, rng.standard_normal(grid64.shape))
        assert l2_norm(f) == pytest.approx(np.sqrt(inner(f, f)))

    def test_max_norm(self, grid64):
        vals = np.zeros(grid64.shape)
        vals[3] = -7.0
        assert max_norm(ScalarSampleField(grid64, vals)) == 7.0
