"""Checks along trajectories: energy transfer, the high-frequency differential
inequality, its Gronwall envelope and the small-tail quotient."""

from __future__ import annotations

import math
import weakref
from dataclasses import dataclass, field

import numpy as np
import scipy.fft

from ..littlewood_paley import band, besov_norm, dyadic_block, highpass, lowpass
from ..solver import TrajectoryRecord, nonlinear_term
from ..spectral import (
    SpectralField,
    TWO_PI,
    fft_workers,
    gradient,
    grad_l2_norm,
    inner,
    l2_norm,
    linf_norm,
    radial_energy,
    resize_coeffs,
    shell_magnitudes,
    to_physical,
)
from .reports import RATIO_REPORT, CheckReport, inequality, ratio


def _padded_advection(u: SpectralField, v: SpectralField) -> np.ndarray:
    """(u.grad)v sampled on the 2n lattice, free of aliasing."""
    vel = to_physical(u, 2).values
    out = np.zeros_like(vel)
    for j in range(u.dim):
        dv = to_physical(v.replace(gradient(v, j)), 2).values
        out += vel[j] * dv
    return out


def advection(u: SpectralField, v: SpectralField) -> SpectralField:
    """Exact Fourier coefficients of (u.grad)v for |xi_i| < n/2.

    Inputs are assumed to carry no Nyquist modes (true for projected or
    dealiased fields).
    """
    grid = u.grid
    big = grid.with_n(2 * grid.n)
    prod = _padded_advection(u, v)
    coeffs = scipy.fft.rfftn(prod, axes=big.axes, norm="forward", workers=fft_workers())
    coeffs *= TWO_PI ** (grid.dim / 2)
    return SpectralField(grid, resize_coeffs(coeffs, big.n, grid.n))


def trilinear(u: SpectralField, v: SpectralField, w: SpectralField) -> float:
    """((u.grad)v, w)_2 by quadrature on the 2n lattice (exact for cubic products)."""
    adv = _padded_advection(u, v)
    ww = to_physical(w, 2).values
    return float(np.mean(np.sum(adv * ww, axis=0))) * TWO_PI**u.dim


def nonlinear_cancellation(u: SpectralField, dealias: str = "two_thirds", form: str = "rotational") -> CheckReport:
    """|(N(u), u)_2| <= 1e-10 ||u||_inf ||grad u||_2 ||u||_2 for the solver's
    nonlinear term N.

    The scale is the Hoelder bound of the trilinear form, so the check stays
    meaningful when N(u) itself vanishes (as for Taylor-Green data).  Under
    the 2/3 rule the solver only ever holds fields inside the retained band,
    so ``u`` is truncated to that band first, as the solver does on entry.
    """
    if dealias == "two_thirds":
        u = u.replace(u.coeffs * u.grid.dealias_mask())
    nl = nonlinear_term(u, dealias, form)
    lhs = abs(inner(nl, u))
    scale = linf_norm(u) * grad_l2_norm(u) * l2_norm(u)
    return inequality("nonlinear_cancellation", lhs, 1e-10 * scale, 0.0, f"form={form} dealias={dealias}")


def partial_cancellation(u: SpectralField, k: float) -> CheckReport:
    """|((u.grad)u^k, u^k)_2| <= 1e-10 ||u||_inf ||grad u^k||_2 ||u^k||_2."""
    tail = highpass(u, k)
    lhs = abs(trilinear(u, tail, tail))
    scale = linf_norm(u) * grad_l2_norm(tail) * l2_norm(tail)
    return inequality("partial_cancellation", lhs, 1e-10 * scale, 0.0, k=k)


_TRANSFER_CACHE: weakref.WeakKeyDictionary = weakref.WeakKeyDictionary()


def transfer_spectrum(u: SpectralField) -> np.ndarray:
    """-Re sum conj(u_hat) . ((u.grad)u)^ binned by integer |xi|^2.

    Summing bins with |xi| >= k gives -((u.grad)u, u^k)_2, which equals
    -((u.grad)u_k, u^k)_2 because ((u.grad)u^k, u^k)_2 vanishes.  Fields are
    immutable, so results are memoised per field object.
    """
    cached = _TRANSFER_CACHE.get(u)
    if cached is not None:
        return cached
    adv = advection(u, u)
    g = u.grid
    density = -g.weights * np.sum((np.conj(u.coeffs) * adv.coeffs).real, axis=0)
    out = np.bincount(g.k2.ravel(), weights=density.ravel(), minlength=g.max_k2() + 1)
    out.setflags(write=False)
    _TRANSFER_CACHE[u] = out
    return out


def _tail_sum(bins: np.ndarray, k: float) -> float:
    return float(np.sum(bins[shell_magnitudes(bins.size) >= k]))


@dataclass
class MonitorResult:
    """Time series produced by :func:`differential_inequality_monitor`."""

    k: float
    sigma: float | None
    times: np.ndarray
    lhs_exact: np.ndarray
    lhs_fd: np.ndarray  # NaN at the end points
    viscous: np.ndarray
    rhs: np.ndarray
    ratio: np.ndarray
    c_hat: float
    max_discrepancy: float
    under_resolved: np.ndarray
    degenerate: bool
    reports: list[CheckReport] = field(default_factory=list)


ROUNDOFF_FLOOR = 1e-20


def _lowpass_besov(u: SpectralField, k: float, sigma: float, oversample: int, cache: dict) -> float:
    """besov_norm(lowpass(u, k), sigma), reusing block norms of u.

    Blocks lying entirely below k are shared by every cutoff; only the block
    that straddles k is evaluated afresh.
    """
    best = 0.0
    j = 1
    while 2.0 ** (j - 1) < k:
        if 2.0**j <= k:
            if j not in cache:
                block = dyadic_block(u, j)
                cache[j] = linf_norm(block, oversample) if np.any(block.coeffs) else 0.0
            value = cache[j]
        else:
            part = band(u, 2.0 ** (j - 1), k)
            value = linf_norm(part, oversample) if np.any(part.coeffs) else 0.0
        best = max(best, 2.0 ** (sigma * j) * value)
        j += 1
    if u.coeffs[(slice(None),) + (0,) * u.dim].any():
        best = max(best, linf_norm(lowpass(u, 1.0), oversample))
    return best


def monitor_ladder(
    traj: TrajectoryRecord, ks, sigma: float | None = None, oversample: int | None = None
) -> dict[float, MonitorResult]:
    """:func:`differential_inequality_monitor` for several cutoffs at once.

    One transfer spectrum per sample serves every k, and dyadic block norms
    are shared between cutoffs.
    """
    ks = [float(k) for k in ks]
    if any(k <= 0 for k in ks):
        raise ValueError(f"cutoffs must be positive, got {ks}")
    if sigma is not None and not -1.0 <= sigma < 0.0:
        raise ValueError(f"sigma must lie in [-1, 0), got {sigma}")
    oversample = traj.oversample if oversample is None else oversample
    nu = traj.config.nu
    fields = traj.checkpoints
    times = np.asarray(traj.times, dtype=float)
    count = len(fields)
    if count != times.size:
        raise ValueError("trajectory has no stored fields for every sample")

    shape = (len(ks), count)
    tail_energy, lhs_exact, viscous, rhs = (np.zeros(shape) for _ in range(4))
    for idx, u in enumerate(fields):
        bins = radial_energy(u)
        r = shell_magnitudes(bins.size)
        q = np.arange(bins.size, dtype=float)
        transfer = transfer_spectrum(u) if np.any(u.coeffs) else np.zeros(bins.size)
        cache: dict[int, float] = {}
        floor = ROUNDOFF_FLOOR * float(np.sum(bins))
        for a, k in enumerate(ks):
            above = r >= k
            tail_energy[a, idx] = float(np.sum(bins[above]))
            viscous[a, idx] = nu * float(np.sum(q[above] * bins[above]))
            lhs_exact[a, idx] = float(np.sum(transfer[above]))
            half = float(np.sum(bins[r >= k / 2]))
            if half <= floor:
                # a tail made of rounding noise gives meaningless quotients
                continue
            if sigma is None:
                low = lowpass(u, k)
                rhs[a, idx] = k * (linf_norm(low, oversample) if np.any(low.coeffs) else 0.0) * half
            else:
                rhs[a, idx] = k ** (1 - sigma) * _lowpass_besov(u, k, sigma, oversample, cache) * half

    name = "differential_inequality" if sigma is None else "differential_inequality_besov"
    results = {}
    for a, k in enumerate(ks):
        lhs_fd = np.full(count, np.nan)
        if count >= 3:
            span = times[2:] - times[:-2]
            lhs_fd[1:-1] = (tail_energy[a, 2:] - tail_energy[a, :-2]) / (2.0 * span) + viscous[a, 1:-1]
        ratios = np.zeros(count)
        pos = rhs[a] > 0
        ratios[pos] = np.maximum(lhs_exact[a, pos], 0.0) / rhs[a, pos]
        c_hat = float(ratios.max()) if count else 0.0
        interior = ~np.isnan(lhs_fd)
        gap = np.zeros(count)
        gap[interior] = np.abs(lhs_fd[interior] - lhs_exact[a, interior])
        under = np.zeros(count, dtype=bool)
        under[interior] = gap[interior] > 0.01 * viscous[a, interior]
        max_gap = float(gap.max()) if interior.any() else 0.0
        reports = []
        for idx in range(count):
            ctx = "degenerate" if rhs[a, idx] == 0 else ""
            if interior[idx]:
                ctx = (ctx + f" fd_lhs={lhs_fd[idx]:.17g}").strip()
                if under[idx]:
                    ctx += " under_resolved"
            reports.append(
                CheckReport(
                    name, RATIO_REPORT, lhs_exact[a, idx], rhs[a, idx], ratios[idx], 0.0, ctx, float(times[idx]), k, sigma
                )
            )
        results[k] = MonitorResult(
            k, sigma, times, lhs_exact[a], lhs_fd, viscous[a], rhs[a], ratios, c_hat, max_gap, under,
            not pos.any(), reports,
        )
    return results


def differential_inequality_monitor(
    traj: TrajectoryRecord, k: float, sigma: float | None = None, oversample: int | None = None
) -> MonitorResult:
    """Track d/(2dt)||u^k||^2 + nu ||grad u^k||^2 against its bound.

    The left side is computed from the exact transfer identity
    -((u.grad)u_k, u^k) and, at interior samples, from a centred difference
    of ||u^k||^2 plus the viscous term.  The bound is k ||u_k||_inf
    ||u^{k/2}||^2, or k^(1-sigma) ||u_k||_{B^sigma} ||u^{k/2}||^2 when
    ``sigma`` is given.  ``c_hat`` is the largest observed ratio; samples
    where the two left sides differ by more than 1% of the viscous term are
    flagged ``under_resolved`` rather than failed.
    """
    return monitor_ladder(traj, [k], sigma, oversample)[float(k)]


def discrepancy_order(coarse: MonitorResult, fine: MonitorResult) -> float:
    """Observed convergence order of |lhs_fd - lhs_exact| between two runs.

    The gaps are compared at the coarse run's interior sample times, which
    the fine run (half the step and half the sample spacing) also visits.
    """
    pick = []
    for t in coarse.times[1:-1]:
        j = int(np.argmin(np.abs(fine.times - t)))
        if abs(fine.times[j] - t) > 1e-9 * max(1.0, abs(t)) or not 0 < j < fine.times.size - 1:
            raise ValueError(f"fine run has no interior sample at t={t}")
        pick.append(j)
    coarse_gap = np.abs(coarse.lhs_fd[1:-1] - coarse.lhs_exact[1:-1])
    fine_gap = np.abs(fine.lhs_fd[pick] - fine.lhs_exact[pick])
    return float(np.log2(coarse_gap.max() / fine_gap.max()))


def _cumulative_trapezoid(values: np.ndarray, times: np.ndarray) -> np.ndarray:
    out = np.zeros_like(values)
    if values.size > 1:
        out[1:] = np.cumsum(0.5 * (values[1:] + values[:-1]) * np.diff(times))
    return out


def superposed_energy(u: SpectralField) -> float:
    """sum_{k in N} ||u^k||^2 = sum floor(|xi|) |u_hat|^2."""
    bins = radial_energy(u)
    r = shell_magnitudes(bins.size)
    return float(np.sum(np.floor(r) * bins))


def superposed_energy_rate(u: SpectralField, nu: float) -> float:
    """Exact d/dt of :func:`superposed_energy` along the Navier-Stokes flow."""
    transfer = transfer_spectrum(u)
    bins = radial_energy(u)
    r = shell_magnitudes(bins.size)
    q = np.arange(bins.size, dtype=float)
    return float(2.0 * np.sum(np.floor(r) * (transfer - nu * q * bins)))


@dataclass
class GronwallEnvelope:
    times: np.ndarray
    envelope: np.ndarray
    measured: np.ndarray
    c_hat: float
    e_tilde: float
    besov_integral: np.ndarray
    composition: str
    reports: list[CheckReport] = field(default_factory=list)

    @property
    def holds(self) -> bool:
        return all(r.passed for r in self.reports)


def gronwall_envelope(
    traj: TrajectoryRecord, sigma: float, c_hat: float | None = None, oversample: int | None = None
) -> GronwallEnvelope:
    """Integrated bound on S(t) = sum_k ||u^k(t)||^2.

    The summed differential inequality reads

        dS/dt <= c (B^p S + h) + g,     p = 2/(1+sigma)

    with B = ||u||_{B^sigma}, g = nu/2 ||grad u^{1/2}||^2 and
    h = ||u^{1/2}||^2 ||u_1||_{B^sigma}^p.  Unless given, c is fitted as the
    largest observed (dS/dt - g)^+ / (B^p S + h), with dS/dt evaluated exactly
    from the transfer spectrum.  Then

        S(t) <= (e~ + S(0)) exp(c int_0^t B^p),   e~ = int_0^T (g + c h).
    """
    if not -1.0 < sigma < 0.0:
        raise ValueError(f"sigma must lie in (-1, 0), got {sigma}")
    oversample = traj.oversample if oversample is None else oversample
    nu = traj.config.nu
    p = 2.0 / (1.0 + sigma)
    times = np.asarray(traj.times, dtype=float)
    fields = traj.checkpoints
    measured = np.array([superposed_energy(u) for u in fields])
    besov_p = np.array([besov_norm(u, sigma, oversample) ** p for u in fields])
    g = np.array([0.5 * nu * grad_l2_norm(highpass(u, 0.5)) ** 2 for u in fields])
    h = np.array(
        [
            l2_norm(highpass(u, 0.5)) ** 2 * besov_norm(lowpass(u, 1.0), sigma, oversample) ** p
            for u in fields
        ]
    )
    if c_hat is None:
        rate = np.array([superposed_energy_rate(u, nu) for u in fields])
        denom = besov_p * measured + h
        with np.errstate(invalid="ignore", divide="ignore"):
            q = np.where(denom > 0, np.maximum(rate - g, 0.0) / denom, 0.0)
        c_hat = float(q.max()) if q.size else 0.0
    integral = _cumulative_trapezoid(besov_p, times)
    e_tilde = float(_cumulative_trapezoid(g + c_hat * h, times)[-1]) if times.size else 0.0
    envelope = (e_tilde + (measured[0] if measured.size else 0.0)) * np.exp(c_hat * integral)
    composition = "e~ = int_0^T (nu/2 ||grad u^{1/2}||^2 + c ||u^{1/2}||^2 ||u_1||_{B^sigma}^p) dt"
    reports = [
        inequality("gronwall_envelope", m, e, 1e-12, time=float(t), sigma=sigma)
        for t, m, e in zip(times, measured, envelope)
    ]
    return GronwallEnvelope(times, envelope, measured, c_hat, e_tilde, integral, composition, reports)


@dataclass
class TailQuotientResult:
    k: float
    times: np.ndarray
    tail_besov: np.ndarray
    quotient: float
    weighted_tail_sum: np.ndarray
    gradient_tail_sum: np.ndarray
    report: CheckReport


def tail_quotient(traj: TrajectoryRecord, k: float, oversample: int | None = None) -> TailQuotientResult:
    """sup_t ||u^k(t)||_{B^-1} / nu and the sums sum_{j>=k} j||u^j||^2,
    sum_{j>=k} ||grad u^j||^2 over integers j."""
    if k <= 0:
        raise ValueError(f"k must be positive, got {k}")
    oversample = traj.oversample if oversample is None else oversample
    nu = traj.nu
    times = np.asarray(traj.times, dtype=float)
    tail_besov = np.empty(times.size)
    weighted = np.empty(times.size)
    grads = np.empty(times.size)
    for idx, u in enumerate(traj.checkpoints):
        tail = highpass(u, k)
        tail_besov[idx] = besov_norm(tail, -1.0, oversample) if np.any(tail.coeffs) else 0.0
        bins = radial_energy(u)
        r = shell_magnitudes(bins.size)
        q = np.arange(bins.size, dtype=float)
        top = int(math.floor(r.max()))
        first = int(math.ceil(k))
        w = sum(j * _tail_sum(bins, j) for j in range(first, top + 1))
        gsum = sum(_tail_sum(q * bins, j) for j in range(first, top + 1))
        weighted[idx], grads[idx] = w, gsum
    sup = float(tail_besov.max()) if tail_besov.size else 0.0
    report = ratio("tail_quotient", sup, nu, k=k, sigma=-1.0)
    return TailQuotientResult(k, times, tail_besov, report.margin, weighted, grads, report)
