import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_field, single_mode
from nssp.spectral import (
    TWO_PI,
    GridSpec,
    RealField,
    SpectralField,
    curl,
    divergence_residual,
    fft_workers,
    from_function,
    gradient,
    grad_l2_norm,
    inner,
    is_hermitian,
    l2_norm,
    leray_project,
    linf_norm,
    radial_energy,
    resample,
    sobolev_norm,
    to_physical,
    to_spectral,
)


def brute_force_coefficient(values, xi):
    """(2 pi)^(d/2) * mean_x u(x) exp(-i xi.x), summed point by point."""
    dim = values.shape[0]
    n = values.shape[1]
    x = np.arange(n) * TWO_PI / n
    mesh = np.meshgrid(*([x] * dim), indexing="ij")
    phase = np.exp(-1j * sum(k * m for k, m in zip(xi, mesh)))
    return TWO_PI ** (dim / 2) * np.array([np.mean(v * phase) for v in values])


class TestGridSpec:
    def test_shapes(self):
        g = GridSpec(3, 16)
        assert g.shape == (16, 16, 16)
        assert g.spectral_shape == (16, 16, 9)
        assert g.axes == (1, 2, 3)

    @pytest.mark.parametrize("dim,n,nu", [(1, 16, 1.0), (4, 16, 1.0), (3, 12, 1.0), (3, 4, 1.0), (2, 16, 0.0)])
    def test_rejects_bad_parameters(self, dim, n, nu):
        with pytest.raises(ValueError):
            GridSpec(dim, n, nu)

    def test_lattice_arrays_are_read_only(self):
        g = GridSpec(2, 16)
        with pytest.raises(ValueError):
            g.k2[0, 0] = 5

    def test_weights_count_conjugate_partners(self):
        g = GridSpec(2, 8)
        # the half spectrum with multiplicities covers every lattice point once
        assert g.weights.sum() == 64

    def test_dealias_mask(self):
        g = GridSpec(2, 16)
        kx = g.wavevector[0]
        ky = g.wavevector[1]
        expected = (3 * np.abs(kx) < 16) & (3 * np.abs(ky) < 16)
        np.testing.assert_array_equal(g.dealias_mask(), expected)


class TestTransforms:
    def test_against_pointwise_dft(self):
        g = GridSpec(2, 8)
        rng = np.random.default_rng(3)
        values = rng.standard_normal((2, 8, 8))
        f = to_spectral(RealField(g, values))
        for xi, idx in [((0, 0), (0, 0)), ((1, 2), (1, 2)), ((-3, 1), (5, 1)), ((2, 4), (2, 4))]:
            np.testing.assert_allclose(f.coeffs[:, idx[0], idx[1]], brute_force_coefficient(values, xi), atol=1e-13)

    def test_against_pointwise_dft_3d(self):
        g = GridSpec(3, 8)
        values = np.random.default_rng(4).standard_normal((3, 8, 8, 8))
        f = to_spectral(RealField(g, values))
        np.testing.assert_allclose(f.coeffs[:, 7, 2, 3], brute_force_coefficient(values, (-1, 2, 3)), atol=1e-13)

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 2**31 - 1), dim=st.sampled_from([2, 3]))
    def test_round_trip(self, seed, dim):
        g = GridSpec(dim, 8)
        values = np.random.default_rng(seed).standard_normal((dim,) + g.shape)
        back = to_physical(to_spectral(RealField(g, values))).values
        np.testing.assert_allclose(back, values, atol=1e-13)

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 2**31 - 1))
    def test_parseval(self, seed):
        g = GridSpec(3, 8)
        values = np.random.default_rng(seed).standard_normal((3,) + g.shape)
        f = to_spectral(RealField(g, values))
        physical = TWO_PI**3 * np.mean(np.sum(values**2, axis=0))
        assert l2_norm(f) ** 2 == pytest.approx(physical, rel=1e-12)

    def test_oversampled_values_interpolate(self):
        g = GridSpec(2, 16)
        u = leray_project(from_function(g, lambda x, y: (np.sin(3 * y), np.cos(2 * x))))
        fine = to_physical(u, 2).values
        np.testing.assert_allclose(fine[:, ::2, ::2], to_physical(u).values, atol=1e-13)
        x = np.arange(32) * TWO_PI / 32
        np.testing.assert_allclose(fine[0], np.broadcast_to(np.sin(3 * x)[None, :], (32, 32)), atol=1e-13)

    def test_non_finite_rejected(self):
        g = GridSpec(2, 8)
        values = np.zeros((2, 8, 8))
        values[0, 1, 1] = np.nan
        with pytest.raises(ValueError):
            to_spectral(RealField(g, values))

    def test_resample_preserves_norms(self):
        u = random_field(GridSpec(3, 8), 1)
        v = resample(u, 16)
        assert l2_norm(v) == pytest.approx(l2_norm(u), rel=1e-13)
        np.testing.assert_allclose(to_physical(v).values[:, ::2, ::2, ::2], to_physical(u).values, atol=1e-13)

    def test_coefficients_read_only(self):
        u = random_field(GridSpec(2, 8), 0)
        with pytest.raises(ValueError):
            u.coeffs[0, 0, 0] = 1.0

    def test_shape_checked(self):
        with pytest.raises(ValueError):
            SpectralField(GridSpec(2, 8), np.zeros((2, 8, 8), complex))

    def test_fft_workers_env(self, monkeypatch):
        monkeypatch.setenv("NSSP_THREADS", "3")
        assert fft_workers() == 3
        monkeypatch.setenv("NSSP_THREADS", "junk")
        assert fft_workers() == 1


class TestProjectionAndNorms:
    @settings(max_examples=20, deadline=None)
    @given(seed=st.integers(0, 2**31 - 1), dim=st.sampled_from([2, 3]))
    def test_leray_output_is_solenoidal_and_hermitian(self, seed, dim):
        u = random_field(GridSpec(dim, 8), seed)
        assert divergence_residual(u) < 1e-13
        assert is_hermitian(u)
        again = leray_project(u)
        np.testing.assert_allclose(again.coeffs, u.coeffs, atol=1e-14)

    def test_leray_removes_gradients(self):
        g = GridSpec(2, 16)
        grad = from_function(g, lambda x, y: (np.cos(x) * np.sin(2 * y), 2 * np.sin(x) * np.cos(2 * y)))
        assert l2_norm(leray_project(grad)) < 1e-13

    def test_gradient_matches_calculus(self):
        g = GridSpec(2, 16)
        u = from_function(g, lambda x, y: (np.sin(2 * x) * np.cos(y), np.zeros_like(x)))
        dux = to_physical(u.replace(gradient(u, 0))).values[0]
        x = np.arange(16) * TWO_PI / 16
        X, Y = np.meshgrid(x, x, indexing="ij")
        np.testing.assert_allclose(dux, 2 * np.cos(2 * X) * np.cos(Y), atol=1e-12)

    def test_curl_of_taylor_green(self):
        g = GridSpec(2, 16)
        u = from_function(g, lambda x, y: (np.sin(x) * np.cos(y), -np.cos(x) * np.sin(y)))
        # the scalar vorticity is duplicated only to reuse the vector transform
        w = to_physical(SpectralField(g, np.concatenate([curl(u), curl(u)]))).values[0]
        x = np.arange(16) * TWO_PI / 16
        X, Y = np.meshgrid(x, x, indexing="ij")
        np.testing.assert_allclose(w, 2 * np.sin(X) * np.sin(Y), atol=1e-12)

    def test_single_mode_norms(self):
        g = GridSpec(3, 16)
        u = single_mode(g, (2, 1, 0), amplitude=3.0)
        vol = TWO_PI**3
        assert l2_norm(u) ** 2 == pytest.approx(9.0 * vol / 2, rel=1e-12)
        assert grad_l2_norm(u) ** 2 == pytest.approx(5 * 9.0 * vol / 2, rel=1e-12)
        assert sobolev_norm(u, 0.5) ** 2 == pytest.approx(np.sqrt(5) * 9.0 * vol / 2, rel=1e-12)
        assert sobolev_norm(u, 1.0, homogeneous=False) ** 2 == pytest.approx(6 * 9.0 * vol / 2, rel=1e-12)
        assert linf_norm(u) == pytest.approx(3.0, rel=1e-12)

    def test_inner_product_symmetric(self):
        g = GridSpec(3, 8)
        a, b = random_field(g, 1), random_field(g, 2)
        assert inner(a, b) == pytest.approx(inner(b, a), rel=1e-13)
        assert inner(a, a) == pytest.approx(l2_norm(a) ** 2, rel=1e-13)

    def test_negative_homogeneous_needs_zero_mean(self):
        u = random_field(GridSpec(2, 8), 0)
        with pytest.raises(ValueError):
            sobolev_norm(u, -0.5)
        assert sobolev_norm(random_field(GridSpec(2, 8), 0, mean=False), -0.5) > 0

    def test_radial_energy_sums_to_norm(self):
        u = random_field(GridSpec(3, 16), 7)
        bins = radial_energy(u)
        assert bins.sum() == pytest.approx(l2_norm(u) ** 2, rel=1e-13)
        q = np.arange(bins.size)
        assert (q * bins).sum() == pytest.approx(grad_l2_norm(u) ** 2, rel=1e-13)

    def test_arithmetic(self):
        g = GridSpec(2, 8)
        a, b = random_field(g, 1), random_field(g, 2)
        np.testing.assert_allclose((a + b - b).coeffs, a.coeffs, atol=1e-14)
        np.testing.assert_allclose((2.0 * a).coeffs, (a * 2.0).coeffs)
        assert l2_norm(SpectralField.zeros(g)) == 0.0
