"""Checks on a single field: projections, Bernstein, supports, superposition sums."""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import scipy.fft

from ..littlewood_paley import band, besov_norm, highpass, lowpass
from ..spectral import (
    GridSpec,
    SpectralField,
    TWO_PI,
    fft_workers,
    inner,
    l2_norm,
    linf_norm,
    radial_energy,
    shell_magnitudes,
    sobolev_norm,
    to_physical,
)
from .reports import (
    IDENTITY_FAIL,
    INEQUALITY_FAIL,
    RATIO_REPORT,
    CheckReport,
    identity,
    inequality,
    ratio,
)

IDENTITY_TOL = 1e-10


def _energy(u: SpectralField) -> float:
    return l2_norm(u) ** 2


def _top_cutoff(u: SpectralField) -> int:
    """Largest integer j with a lattice mode at |xi| >= j."""
    return int(math.floor(float(u.grid.kmag.max())))


def check_orthogonality(u: SpectralField, k: float, l: float) -> CheckReport:
    """(u_k, u^l)_2 = 0 for 0 < k <= l."""
    if not 0 < k <= l:
        raise ValueError(f"orthogonality needs 0 < k <= l, got k={k}, l={l}")
    lhs = abs(inner(lowpass(u, k), highpass(u, l)))
    tol = 1e-12 * _energy(u)
    return identity("orthogonality", lhs, 0.0, tol, f"l={l:g}", k=k)


def check_bernstein(u: SpectralField, k: float, alpha: float) -> CheckReport:
    """k^alpha ||u^k||^2 <= sum |xi|^alpha |u^k_hat|^2.

    The right side is the squared homogeneous norm of order alpha/2, the
    sharp form (equality when the spectrum sits on |xi| = k).  For k >= 1 the
    norm of order alpha dominates it, so the weaker reading follows.
    """
    if not (k > 0 and alpha > 0):
        raise ValueError(f"Bernstein check needs k > 0 and alpha > 0, got k={k}, alpha={alpha}")
    tail = highpass(u, k)
    lhs = k**alpha * _energy(tail)
    rhs = sobolev_norm(tail, alpha / 2, homogeneous=True) ** 2
    return inequality("bernstein", lhs, rhs, 1e-10, f"alpha={alpha:g}", k=k)


def product_spectrum(a: SpectralField, b: SpectralField) -> tuple[GridSpec, np.ndarray]:
    """Unaliased spectrum of all component products a_i b_j on the 2n lattice."""
    grid = a.grid
    big = grid.with_n(2 * grid.n)
    va = to_physical(a, 2).values
    vb = to_physical(b, 2).values
    prod = (va[:, None] * vb[None, :]).reshape((grid.dim * grid.dim,) + big.shape)
    coeffs = scipy.fft.rfftn(prod, axes=big.axes, norm="forward", workers=fft_workers())
    return big, coeffs * TWO_PI ** (grid.dim / 2)


def check_product_support(u: SpectralField, k: float, l: float) -> CheckReport:
    """supp (u_k u_l)^ lies in |xi| <= k + l, measured on a zero-padded grid.

    The left side is the L2 mass of the product spectrum outside the ball,
    the right side 1e-12 times the mass of the whole product spectrum.
    """
    n = u.grid.n
    if not (0 < k <= n and 0 < l <= n):
        raise ValueError(f"cutoffs must lie in (0, {n}] to be resolved on the padded grid, got k={k}, l={l}")
    big, coeffs = product_spectrum(lowpass(u, k), lowpass(u, l))
    density = big.weights * np.sum(np.abs(coeffs) ** 2, axis=0)
    norm = math.sqrt(float(np.sum(density)))
    lhs = math.sqrt(float(np.sum(density[big.kmag > k + l])))
    tol = 1e-12
    return inequality("product_support", lhs, tol * norm, 0.0, f"l={l:g} product_norm={norm:.17g}", k=k)


def check_linf_bound(u: SpectralField, k: float, sigma: float, oversample: int = 2) -> CheckReport:
    """Ratio ||u_k||_inf / (k^-sigma ||u_k||_{B^sigma}); bounded by c(sigma)."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if not -1.0 <= sigma < 0.0:
        raise ValueError(f"sigma must lie in [-1, 0), got {sigma}")
    low = lowpass(u, k)
    if not np.any(low.coeffs):
        return ratio("linf_bound", 0.0, 0.0, "zero field", k=k, sigma=sigma)
    lhs = linf_norm(low, oversample)
    rhs = k ** (-sigma) * besov_norm(low, sigma, oversample)
    return ratio("linf_bound", lhs, rhs, k=k, sigma=sigma)


def linf_constant_survey(fields, sigma: float, ks=(2, 4, 8, 16), oversample: int = 2) -> dict:
    """Fit c(sigma) over an ensemble.

    Returns the per-k maxima, the running maximum as k doubles, and whether
    that running maximum stays within a factor 2 of its first value.
    """
    per_k = {}
    for k in ks:
        per_k[k] = max(check_linf_bound(u, k, sigma, oversample).margin for u in fields)
    running = np.maximum.accumulate([per_k[k] for k in ks])
    stable = bool(running[-1] <= 2.0 * running[0]) if running[0] > 0 else bool(running[-1] == 0)
    return {"per_k": per_k, "running_max": dict(zip(ks, running.tolist())), "c_sigma": float(running[-1]), "stable": stable}


def check_band_tail(u: SpectralField, k: float, l: float, oversample: int = 2) -> CheckReport:
    """Ratio ||u_{k,l}||_{B^-1} / ||u^k||_{B^-1}; reported, not asserted."""
    if not 0 < k < l:
        raise ValueError(f"band tail needs 0 < k < l, got k={k}, l={l}")
    if np.any(u.coeffs[(slice(None),) + (0,) * u.dim]):
        raise ValueError("band tail ratio requires a field supported in |xi| >= 1")
    num = besov_norm(band(u, k, l), -1.0, oversample)
    den = besov_norm(highpass(u, k), -1.0, oversample)
    return ratio("band_tail", num, den, f"l={l:g}", k=k, sigma=-1.0)


def band_tail_survey(fields, pairs, oversample: int = 2) -> dict:
    worst = 0.0
    where = None
    for idx, u in enumerate(fields):
        for k, l in pairs:
            r = check_band_tail(u, k, l, oversample).margin
            if r > worst:
                worst, where = r, (idx, k, l)
    return {"max_ratio": worst, "argmax": where}


class _Shells:
    """Tail and band energies of one field, read off its |xi|^2 spectrum.

    Masks on |xi| and bins of |xi|^2 use the same square roots, so these sums
    agree term by term with norms of the projected fields.
    """

    def __init__(self, u: SpectralField):
        self.energy = radial_energy(u)
        self.gradient = np.arange(self.energy.size, dtype=float) * self.energy
        self.r = shell_magnitudes(self.energy.size)

    def tail(self, k: float, grad: bool = False) -> float:
        values = self.gradient if grad else self.energy
        return float(np.sum(values[self.r >= k]))

    def band(self, h: float, k: float, grad: bool = False) -> float:
        values = self.gradient if grad else self.energy
        return float(np.sum(values[(self.r >= h) & (self.r < k)]))


def superposition_identity(u: SpectralField, k: int) -> CheckReport:
    """sum_{j>=k} ||u^j||^2 = sum_{j>=k} (j-k+1)||u_{j,j+1}||^2
    = sum_{j>=k} j ||u_{j,j+1}||^2 - (k-1)||u^k||^2."""
    if k < 1 or int(k) != k:
        raise ValueError(f"k must be a positive integer, got {k}")
    k = int(k)
    sh = _Shells(u)
    top = _top_cutoff(u)
    tails = sum(sh.tail(j) for j in range(k, top + 1))
    shells = {j: sh.band(j, j + 1) for j in range(k, top + 1)}
    counted = sum((j - k + 1) * e for j, e in shells.items())
    weighted = sum(j * e for j, e in shells.items()) - (k - 1) * sh.tail(k)
    rep = identity("superposition", tails, weighted, IDENTITY_TOL, f"counted={counted:.17g}", k=k)
    if abs(tails - counted) > IDENTITY_TOL * max(abs(tails), abs(counted), 1.0):
        rep = rep.at(status=IDENTITY_FAIL, context=f"counted form differs by {abs(tails - counted):.3g}")
    return rep


def hhalf_equivalence(u: SpectralField, k: int) -> CheckReport:
    """sum j||u_{j,j+1}||^2 <= ||u^k||^2_{H^1/2} <= sum (j+1)||u_{j,j+1}||^2.

    Reported as the ratio of the middle term to the lower sum (1 when the
    tail is empty); a broken bracket turns the report into a failure.
    """
    if k < 1 or int(k) != k:
        raise ValueError(f"k must be a positive integer, got {k}")
    k = int(k)
    sh = _Shells(u)
    top = _top_cutoff(u)
    shells = {j: sh.band(j, j + 1) for j in range(k, top + 1)}
    lower = sum(j * e for j, e in shells.items())
    upper = sum((j + 1) * e for j, e in shells.items())
    h = sobolev_norm(highpass(u, k), 0.5) ** 2
    tol = 1e-12
    bracket = lower <= h * (1 + tol) and h <= upper * (1 + tol)
    value = h / lower if lower > 0 else 1.0
    rep = CheckReport("hhalf_equivalence", RATIO_REPORT, lower, h, value, tol, f"upper={upper:.17g}", k=k)
    if not bracket:
        rep = rep.at(status=INEQUALITY_FAIL)
    return rep


def ladder_top(u: SpectralField, s: int) -> int:
    """Largest j with j^s <= max |xi| on the lattice."""
    kmax = float(u.grid.kmag.max())
    j = int(math.floor(kmax ** (1.0 / s)))
    while (j + 1) ** s <= kmax:
        j += 1
    while j > 0 and j**s > kmax:
        j -= 1
    return j


def poly_superposition_identity(u: SpectralField, l: int, s: int) -> list[CheckReport]:
    """Polynomial ladder sums, energy and gradient forms:

        sum_{j>=l} ||u^{j^s}||^2 = sum_{j>=l} (j-l+1) ||u_{j^s,(j+1)^s}||^2
    """
    if l < 1 or s < 1:
        raise ValueError(f"l and s must be positive integers, got l={l}, s={s}")
    sh = _Shells(u)
    top = ladder_top(u, s)
    tail_e = tail_g = shell_e = shell_g = 0.0
    for j in range(l, top + 1):
        tail_e += sh.tail(j**s)
        tail_g += sh.tail(j**s, grad=True)
        shell_e += (j - l + 1) * sh.band(j**s, (j + 1) ** s)
        shell_g += (j - l + 1) * sh.band(j**s, (j + 1) ** s, grad=True)
    ctx = f"l={l} s={s}"
    return [
        identity("poly_superposition_energy", tail_e, shell_e, IDENTITY_TOL, ctx, k=l),
        identity("poly_superposition_gradient", tail_g, shell_g, IDENTITY_TOL, ctx, k=l),
    ]


def power_sum(i: int, j: int) -> int:
    return sum(p ** (i - 1) for p in range(1, j + 1))


def power_sum_bounds(i: int, j: int) -> CheckReport:
    """i^-1 j^i <= sum_{p=1}^j p^(i-1) <= i^-1 (j+1)^i in exact arithmetic."""
    if i < 1 or j < 1 or int(i) != i or int(j) != j:
        raise ValueError(f"i and j must be positive integers, got i={i}, j={j}")
    i, j = int(i), int(j)
    total = power_sum(i, j)
    lower = Fraction(j**i, i)
    upper = Fraction((j + 1) ** i, i)
    ok = lower <= total <= upper
    return CheckReport(
        "power_sum_bounds",
        "inequality_pass" if ok else INEQUALITY_FAIL,
        float(total),
        float(upper),
        float(upper - total),
        0.0,
        f"i={i} j={j} lower={float(lower):.17g}",
    )


def _rearrangement_coefficients(l1: int, i: int, top: int) -> dict[str, dict[int, Fraction]]:
    """Exact per-shell weights of the double sum, its rearrangement and brackets."""
    double, single, lower, upper = {}, {}, {}, {}
    for j in range(l1, top + 1):
        double[j] = Fraction(sum((j - l + 1) * l ** (i - 1) for l in range(l1, j + 1)))
        s_im1 = sum(p ** (i - 1) for p in range(l1, j + 1))
        s_i = sum(p**i for p in range(l1, j + 1))
        single[j] = Fraction(s_im1 * (j + 1) - s_i)
        lower[j] = Fraction(j**i - l1**i, i) * (j + 1) - Fraction((j + 1) ** (i + 1) - (l1 - 1) ** (i + 1), i + 1)
        upper[j] = Fraction((j + 1) ** (i + 1) - (l1 - 1) ** (i + 1), i) - Fraction(j ** (i + 1) - l1 ** (i + 1), i + 1)
    return {"double": double, "single": single, "lower": lower, "upper": upper}


def weighted_rearrangement(u: SpectralField, l1: int, i: int, s: int) -> list[CheckReport]:
    """Double ladder sum over l >= l1 versus its single-sum rearrangement.

    sum_{l>=l1} sum_{j>=l} (j-l+1) l^(i-1) b_j
        = sum_{j>=l1} [(l1^(i-1)+...+j^(i-1))(j+1) - (l1^i+...+j^i)] b_j

    with b_j = ||u_{j^s,(j+1)^s}||^2, plus the power-sum brackets around it.
    """
    if min(l1, i, s) < 1:
        raise ValueError(f"l1, i, s must be positive integers, got l1={l1}, i={i}, s={s}")
    if i > 2 * s - 1:
        raise ValueError(f"weight exponent i={i} exceeds 2s-1={2 * s - 1}")
    top = ladder_top(u, s)
    sh = _Shells(u)
    shells = {j: sh.band(j**s, (j + 1) ** s) for j in range(l1, top + 1)}
    # brute-force double loop over (l, j)
    double = 0.0
    for l in range(l1, top + 1):
        for j in range(l, top + 1):
            double += (j - l + 1) * l ** (i - 1) * shells[j]
    coef = _rearrangement_coefficients(l1, i, top)
    single = sum(float(coef["single"][j]) * b for j, b in shells.items())
    lower = sum(float(coef["lower"][j]) * b for j, b in shells.items())
    upper = sum(float(coef["upper"][j]) * b for j, b in shells.items())
    ctx = f"l1={l1} i={i} s={s}"
    return [
        identity("weighted_rearrangement", double, single, IDENTITY_TOL, ctx, k=l1),
        inequality("weighted_rearrangement_lower", lower, double, 1e-12, ctx, k=l1),
        inequality("weighted_rearrangement_upper", double, upper, 1e-12, ctx, k=l1),
    ]
