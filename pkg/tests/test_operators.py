import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import band_limited, smooth_scalar, smooth_vector
from wavepot.errors import GridMismatchError
from wavepot.grids import Grid, ScalarSampleField, VectorSampleField3, integrate, max_norm
from wavepot.operators import (
    curl,
    curl_curl_identity_residual,
    divergence,
    first_derivative_array,
    gradient,
    inverse_div_grad,
    laplacian,
    laplacian_array,
    laplacian_spectral_radius,
    solenoidal_projection,
)

METHODS = ("spectral", "central2")


class TestLaplacian:
    def test_single_mode_spectral_exact(self):
        g = Grid.line(64, 2 * np.pi)
        x = g.axis_coordinates(0)
        f = ScalarSampleField(g, np.sin(2 * np.pi * x / g.lengths[0]))
        out = laplacian(f, "spectral")
        expected = -((2 * np.pi / g.lengths[0]) ** 2) * f.values
        assert np.max(np.abs(out.values - expected)) <= 1e-12

    @pytest.mark.parametrize("method", METHODS)
    def test_constant_maps_to_zero(self, grid64, method):
        f = ScalarSampleField.full(grid64, 4.2)
        assert max_norm(laplacian(f, method)) <= 1e-13

    def test_central2_converges_to_spectral_at_second_order(self):
        # fixed smooth profile sampled on refined grids; spectral is exact here
        errs = []
        for n in (32, 64, 128):
            g = Grid.line(n, 2 * np.pi)
            x = g.axis_coordinates(0)
            f = ScalarSampleField(g, np.sin(x) + 0.5 * np.cos(3 * x) + 0.2 * np.sin(4 * x))
            exact = laplacian(f, "spectral").values
            approx = laplacian(f, "central2").values
            errs.append(np.max(np.abs(exact - approx)))
        order1 = np.log2(errs[0] / errs[1])
        order2 = np.log2(errs[1] / errs[2])
        assert 1.8 <= order1 <= 2.2
        assert 1.8 <= order2 <= 2.2

    def test_2d_mixed_mode(self):
        g = Grid.square(32, 2 * np.pi)
        x, y = np.meshgrid(g.axis_coordinates(0), g.axis_coordinates(1), indexing="ij")
        f = ScalarSampleField(g, np.sin(x) * np.cos(2 * y))
        out = laplacian(f, "spectral")
        assert np.allclose(out.values, -5.0 * f.values, atol=1e-11)

    def test_spectral_radius_formula(self):
        g = Grid.line(64, 2 * np.pi)
        assert laplacian_spectral_radius(g, "spectral") == pytest.approx(32.0**2)
        assert laplacian_spectral_radius(g, "central2") == pytest.approx(
            1.0 / g.spacings[0] ** 2
        )
        g3 = Grid.cube(16, 2.0)
        assert laplacian_spectral_radius(g3, "spectral") == pytest.approx(
            3 * (np.pi / g3.spacings[0]) ** 2
        )


class TestVectorCalculus:
    def test_gradient_requires_3d(self, grid64):
        with pytest.raises(GridMismatchError):
            gradient(ScalarSampleField.zeros(grid64))

    def test_curl_of_single_mode(self, cube16):
        # v = (sin(2 pi y / L), 0, 0) has curl (0, 0, -(2 pi / L) cos(2 pi y / L))
        L = cube16.lengths[1]
        _, y, _ = np.meshgrid(*[cube16.axis_coordinates(a) for a in range(3)], indexing="ij")
        v = VectorSampleField3(
            cube16, np.stack([np.sin(2 * np.pi * y / L), np.zeros_like(y), np.zeros_like(y)])
        )
        out = curl(v, "spectral")
        expected_z = -(2 * np.pi / L) * np.cos(2 * np.pi * y / L)
        assert np.max(np.abs(out.values[0])) <= 1e-12
        assert np.max(np.abs(out.values[1])) <= 1e-12
        assert np.max(np.abs(out.values[2] - expected_z)) <= 1e-11

    @pytest.mark.parametrize("method", METHODS)
    def test_curl_grad_is_zero(self, cube16, rng, method):
        f = smooth_scalar(cube16, rng)
        assert max_norm(curl(gradient(f, method), method)) <= 1e-11

    @pytest.mark.parametrize("method", METHODS)
    def test_div_curl_is_zero(self, cube16, rng, method):
        v = smooth_vector(cube16, rng)
        assert max_norm(divergence(curl(v, method), method)) <= 1e-11

    @pytest.mark.parametrize("method", METHODS)
    def test_curl_curl_identity(self, cube16, rng, method):
        v = smooth_vector(cube16, rng)
        assert curl_curl_identity_residual(v, method) <= 1e-11

    def test_curl_curl_identity_transverse_mode(self, cube16):
        x = np.meshgrid(*[cube16.axis_coordinates(a) for a in range(3)], indexing="ij")[0]
        v = VectorSampleField3(cube16, np.stack([np.zeros_like(x), np.cos(x), np.zeros_like(x)]))
        assert curl_curl_identity_residual(v, "spectral") <= 1e-12


class TestOperatorProperties:
    @given(a=st.floats(-3, 3), b=st.floats(-3, 3), seed=st.integers(0, 2**16))
    def test_linearity(self, a, b, seed):
        rng = np.random.default_rng(seed)
        g = Grid.line(32, 2 * np.pi)
        f = band_limited(g, rng)
        h = band_limited(g, rng)
        lhs = laplacian_array(a * f + b * h, g, "spectral")
        rhs = a * laplacian_array(f, g, "spectral") + b * laplacian_array(h, g, "spectral")
        assert np.max(np.abs(lhs - rhs)) <= 1e-11 * max(1.0, abs(a) + abs(b))

    def test_integration_by_parts(self, grid64, rng):
        f = ScalarSampleField(grid64, rng.standard_normal(grid64.shape))
        g = ScalarSampleField(grid64, rng.standard_normal(grid64.shape))
        left = integrate(f * laplacian(g, "spectral"))
        right = integrate(laplacian(f, "spectral") * g)
        scale = max(abs(left), abs(right), 1.0)
        assert abs(left - right) <= 1e-10 * scale

    @pytest.mark.parametrize("mode", [1, 3, 7, 15])
    def test_single_fourier_mode_derivative_exact(self, mode):
        g = Grid.line(64, 5.0)
        x = g.axis_coordinates(0)
        k = 2 * np.pi * mode / g.lengths[0]
        f = np.sin(k * x)
        out = first_derivative_array(f, g, 0, "spectral")
        assert np.max(np.abs(out - k * np.cos(k * x))) <= 1e-12 * k


class TestPoissonHelpers:
    def test_inverse_div_grad_roundtrip(self, cube16, rng):
        f = band_limited(cube16, rng)
        f -= f.mean()
        u = inverse_div_grad(f, cube16, "spectral")
        back = sum(
            first_derivative_array(
                first_derivative_array(u, cube16, a, "spectral"), cube16, a, "spectral"
            )
            for a in range(3)
        )
        assert np.max(np.abs(back - f)) <= 1e-11

    def test_inverse_div_grad_rejects_mean(self, cube16):
        with pytest.raises(ValueError):
            inverse_div_grad(np.ones(cube16.shape), cube16, "spectral")

    def test_solenoidal_projection_kills_divergence(self, cube16, rng):
        v = smooth_vector(cube16, rng)
        out = solenoidal_projection(v, "spectral")
        assert max_norm(divergence(out, "spectral")) <= 1e-12
