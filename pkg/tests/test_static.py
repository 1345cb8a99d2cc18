import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_field, single_mode
from nssp.lab.reports import IDENTITY_PASS, INEQUALITY_PASS, RATIO_REPORT
from nssp.lab.static import (
    band_tail_survey,
    check_band_tail,
    check_bernstein,
    check_linf_bound,
    check_orthogonality,
    check_product_support,
    hhalf_equivalence,
    ladder_top,
    linf_constant_survey,
    poly_superposition_identity,
    power_sum,
    power_sum_bounds,
    superposition_identity,
    weighted_rearrangement,
)
from nssp.littlewood_paley import band, highpass
from nssp.spectral import GridSpec, grad_l2_norm, l2_norm, sobolev_norm


def shell_energy(u, lo, hi):
    """Squared norm of u restricted to lo <= |xi| < hi, via explicit masks."""
    return l2_norm(band(u, lo, hi)) ** 2 if hi > lo else 0.0


class TestProjections:
    @settings(max_examples=20, deadline=None)
    @given(seed=st.integers(0, 10**6), k=st.sampled_from([1, 2, 3, 5]), extra=st.sampled_from([0, 1, 4]))
    def test_orthogonality(self, seed, k, extra):
        rep = check_orthogonality(random_field(GridSpec(3, 16), seed), k, k + extra)
        assert rep.status == IDENTITY_PASS

    def test_orthogonality_requires_ordered_cutoffs(self):
        with pytest.raises(ValueError):
            check_orthogonality(random_field(GridSpec(2, 8), 0), 4, 2)

    @pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0])
    def test_bernstein_equality_on_a_shell(self, alpha):
        u = single_mode(GridSpec(3, 16), (3, 4, 0), amplitude=2.0)
        rep = check_bernstein(u, 5.0, alpha)
        assert rep.passed
        assert rep.lhs == pytest.approx(rep.rhs, rel=1e-12)

    def test_bernstein_on_random_fields(self):
        u = random_field(GridSpec(3, 16), 3)
        for k in (1, 2, 4):
            for alpha in (0.5, 1.0, 2.0):
                assert check_bernstein(u, k, alpha).status == INEQUALITY_PASS

    def test_bernstein_rejects_nonpositive_parameters(self):
        u = random_field(GridSpec(2, 8), 0)
        with pytest.raises(ValueError):
            check_bernstein(u, 0.0, 1.0)
        with pytest.raises(ValueError):
            check_bernstein(u, 1.0, 0.0)


class TestProductSupport:
    def test_banded_product_support(self):
        rep = check_product_support(random_field(GridSpec(3, 16), 2), 4, 4)
        assert rep.passed
        assert rep.lhs <= rep.rhs

    def test_single_modes_multiply_into_sum_and_difference(self):
        from nssp.lab.static import product_spectrum

        u = single_mode(GridSpec(2, 16), (3, 0))
        big, coeffs = product_spectrum(u, u)
        amp = np.sqrt(np.sum(np.abs(coeffs) ** 2, axis=0))
        support = big.kmag[amp > 1e-12]
        assert set(np.round(support, 12).tolist()) <= {0.0, 6.0}

    def test_unresolvable_cutoff_rejected(self):
        with pytest.raises(ValueError):
            check_product_support(random_field(GridSpec(2, 8), 0), 9, 4)


class TestRatioReports:
    def test_linf_ratio_convention(self):
        u = single_mode(GridSpec(3, 16), (2, 0, 0), amplitude=1.0)
        rep = check_linf_bound(u, 4.0, -1.0)
        # one mode in block j=2: ||u_k||_inf = 1, B^-1 norm = 1/4, k^(1) = 4
        assert rep.status == RATIO_REPORT
        assert rep.margin == pytest.approx(1.0, rel=1e-12)

    def test_linf_zero_lowpass(self):
        u = single_mode(GridSpec(3, 16), (5, 0, 0))
        assert check_linf_bound(u, 2.0, -0.5).margin == 0.0

    def test_linf_survey_running_max(self):
        fields = [random_field(GridSpec(3, 16), s, mean=False) for s in range(3)]
        survey = linf_constant_survey(fields, -1.0, ks=(2, 4, 8))
        running = list(survey["running_max"].values())
        assert running == sorted(running)
        assert survey["c_sigma"] == running[-1]

    def test_band_tail_ratio_bounded_by_one_for_nested_support(self):
        u = random_field(GridSpec(3, 16), 4, mean=False)
        rep = check_band_tail(u, 2, 4)
        assert rep.status == RATIO_REPORT
        assert 0 < rep.margin
        survey = band_tail_survey([u], [(2, 4), (4, 8)])
        assert survey["max_ratio"] >= rep.margin

    def test_band_tail_rejects_mean(self):
        with pytest.raises(ValueError):
            check_band_tail(random_field(GridSpec(2, 8), 0), 1, 2)


class TestSuperpositionSums:
    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_superposition_identity_against_masks(self, k):
        u = random_field(GridSpec(3, 8), 11)
        rep = superposition_identity(u, k)
        assert rep.status == IDENTITY_PASS
        top = int(np.floor(u.grid.kmag.max()))
        tails = sum(l2_norm(highpass(u, j)) ** 2 for j in range(k, top + 1))
        assert rep.lhs == pytest.approx(tails, rel=1e-12)

    def test_hhalf_bracket(self):
        u = random_field(GridSpec(3, 16), 12)
        rep = hhalf_equivalence(u, 1)
        assert rep.passed
        assert 1.0 <= rep.margin <= 2.0
        assert rep.rhs == pytest.approx(sobolev_norm(highpass(u, 1), 0.5) ** 2, rel=1e-14)

    def test_ladder_top(self):
        u = random_field(GridSpec(3, 16), 0)  # max |xi| = 8 sqrt(3) ~ 13.86
        assert ladder_top(u, 1) == 13
        assert ladder_top(u, 2) == 3
        assert ladder_top(u, 3) == 2

    @pytest.mark.parametrize("s", [1, 2, 3])
    def test_poly_identity_against_masks(self, s):
        u = random_field(GridSpec(3, 8), 13)
        energy, grad = poly_superposition_identity(u, 1, s)
        assert energy.passed and grad.passed
        top = ladder_top(u, s)
        tails = sum(l2_norm(highpass(u, j**s)) ** 2 for j in range(1, top + 1))
        grads = sum(grad_l2_norm(highpass(u, j**s)) ** 2 for j in range(1, top + 1))
        assert energy.lhs == pytest.approx(tails, rel=1e-12)
        assert grad.lhs == pytest.approx(grads, rel=1e-12)

    @pytest.mark.parametrize("l1,i,s", [(1, 1, 1), (2, 3, 2), (1, 5, 3), (2, 4, 3)])
    def test_weighted_rearrangement(self, l1, i, s):
        u = random_field(GridSpec(3, 8), 14)
        reps = weighted_rearrangement(u, l1, i, s)
        assert [r.passed for r in reps] == [True, True, True]
        top = ladder_top(u, s)
        brute = sum(
            (j - l + 1) * l ** (i - 1) * shell_energy(u, j**s, (j + 1) ** s)
            for l in range(l1, top + 1)
            for j in range(l, top + 1)
        )
        assert reps[0].lhs == pytest.approx(brute, rel=1e-12)

    def test_weight_exponent_limited(self):
        with pytest.raises(ValueError):
            weighted_rearrangement(random_field(GridSpec(2, 8), 0), 1, 4, 2)

    def test_zero_field_sums_vanish(self):
        u = random_field(GridSpec(2, 8), 0) * 0.0
        assert superposition_identity(u, 1).lhs == 0.0
        assert all(r.passed for r in weighted_rearrangement(u, 1, 1, 1))


class TestPowerSums:
    def test_small_values(self):
        assert power_sum(1, 5) == 5
        assert power_sum(3, 5) == 55
        low = power_sum_bounds(1, 5)
        assert low.passed and low.lhs == 5 and low.rhs == 6
        rep = power_sum_bounds(2, 10)
        # 50 <= 55 <= 60.5
        assert rep.lhs == 55 and rep.rhs == 60.5 and "lower=50" in rep.context

    def test_exact_for_large_exponents(self):
        assert power_sum_bounds(50, 50).passed
        assert isinstance(power_sum(50, 50), int)

    def test_rejects_non_integers(self):
        with pytest.raises(ValueError):
            power_sum_bounds(1.5, 2)
