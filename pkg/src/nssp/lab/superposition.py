"""Polynomial-ladder energy superposition along a trajectory.

With m = sup_t ||u||_{B^-1}, the tail estimate

    d/(2dt)||u^k||^2 + nu ||grad u^k||^2 <= C1 m k^2 ||u^{k/2}||^2

and the choice m~ = sqrt(2 C1 m / nu) give, for cutoffs k = j^s,

    d/dt ||u^{j^s}||^2 + nu ||grad u^{j^s}||^2 <= C2 m ||grad u_{j^s/2, m~ j^s}||^2.

Summing over the ladder costs a factor a(s) = C2 m ((2m~)^(1/s) - 1), which
can be pushed below any fraction of nu by taking s large.  This module fits
C1 and C2 on a stored trajectory, picks s, and evaluates the weighted ladder
sums sum_{j>=l1} j^(i+1) ||u_{j^s,(j+1)^s}||^2 that control H^((i+1)/(2s)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..solver import TrajectoryRecord
from ..spectral import radial_energy, shell_magnitudes, sobolev_norm
from .dynamic import ROUNDOFF_FLOOR, transfer_spectrum
from .reports import CheckReport, identity

DEFAULT_S_MAX = 64


def a_of_s(s, c2: float, m: float, m_tilde: float):
    """a(s) = C2 m ((2 m~)^(1/s) - 1); accepts scalars or arrays of s."""
    s = np.asarray(s, dtype=float)
    out = c2 * m * (np.power(2.0 * m_tilde, 1.0 / s) - 1.0)
    return float(out) if out.ndim == 0 else out


def minimal_s(c2: float, m: float, m_tilde: float, threshold: float) -> int:
    """Smallest positive integer s with a(s) < threshold (closed form).

    a(s) < t  iff  s > log(2m~) / log(1 + t/(C2 m)).
    """
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    if c2 * m <= 0 or 2.0 * m_tilde <= 1.0:
        return 1
    bound = math.log(2.0 * m_tilde) / math.log1p(threshold / (c2 * m))
    s = max(1, int(math.floor(bound)))
    # settle floating-point ties against the defining inequality
    while a_of_s(s, c2, m, m_tilde) >= threshold:
        s += 1
    while s > 1 and a_of_s(s - 1, c2, m, m_tilde) < threshold:
        s -= 1
    return s


def minimal_l1(m_tilde: float, s: int) -> int:
    """Smallest positive integer l with l >= (m~^(1/s) - 1)^-1."""
    gap = m_tilde ** (1.0 / s) - 1.0
    if gap <= 0:
        raise ValueError(f"m_tilde={m_tilde} must exceed 1")
    return max(1, int(math.ceil(1.0 / gap - 1e-12)))


@dataclass(frozen=True)
class SuperpositionConfig:
    s: int
    l1: int
    i: int
    m: float
    m_tilde: float
    c1_fitted: float
    c2_fitted: float
    a_s: float

    def __post_init__(self):
        if self.s < 1 or self.i < 1 or self.l1 < 1:
            raise ValueError(f"s, i, l1 must be positive integers, got s={self.s}, i={self.i}, l1={self.l1}")
        if self.i > 2 * self.s - 1:
            raise ValueError(f"i={self.i} exceeds 2s-1={2 * self.s - 1}")
        if self.m_tilde <= 1.0:
            raise ValueError(f"m_tilde must exceed 1, got {self.m_tilde}")
        need = minimal_l1(self.m_tilde, self.s)
        if self.l1 < need:
            raise ValueError(f"l1={self.l1} is below (m_tilde^(1/s) - 1)^-1, need l1 >= {need}")


def _band(bins: np.ndarray, r: np.ndarray, lo: float, hi: float) -> float:
    return float(np.sum(bins[(r >= lo) & (r < hi)]))


@dataclass(frozen=True)
class FittedConstants:
    m: float
    c1: float
    c2: float
    m_tilde_raw: float
    m_tilde: float


def fit_constants(traj: TrajectoryRecord, m_tilde_floor: float = 2.0) -> FittedConstants:
    """m, C1, m~ and C2 as the largest quotients observed on the trajectory.

    C1 is fitted over every sample and integer cutoff k against
    m k^2 ||u^{k/2}||^2, with the left side taken from the exact transfer
    identity.  Tails whose energy is at rounding level (below 1e-20 of the
    total) are skipped.  m~ is raised to ``m_tilde_floor`` when the fitted
    value does not exceed 1, since the ladder needs m~ > 1.  C2 is the smallest constant
    with 2 C1 k^2 ||u_{k/2,m~k}||^2 <= C2 ||grad u_{k/2,m~k}||^2 throughout.
    """
    nu = traj.nu
    m = float(max(traj.column("besov_m1"), default=0.0))
    spectra = []
    for u in traj.checkpoints:
        bins = radial_energy(u)
        spectra.append((bins, transfer_spectrum(u)))
    c1 = 0.0
    if m > 0:
        for bins, transfer in spectra:
            r = shell_magnitudes(bins.size)
            floor = ROUNDOFF_FLOOR * float(np.sum(bins))
            for k in range(1, int(math.floor(r.max())) + 1):
                lhs = float(np.sum(transfer[r >= k]))
                half = float(np.sum(bins[r >= k / 2]))
                if lhs > 0 and half > floor:
                    c1 = max(c1, lhs / (m * k * k * half))
    raw = math.sqrt(2.0 * c1 * m / nu) if c1 > 0 else 0.0
    m_tilde = raw if raw > 1.0 else m_tilde_floor
    c2 = 0.0
    for bins, _ in spectra:
        r = shell_magnitudes(bins.size)
        q = np.arange(bins.size, dtype=float)
        floor = ROUNDOFF_FLOOR * float(np.sum(bins))
        for k in range(1, int(math.floor(r.max())) + 1):
            energy = _band(bins, r, k / 2, m_tilde * k)
            grad = _band(q * bins, r, k / 2, m_tilde * k)
            if energy > floor:
                c2 = max(c2, 2.0 * c1 * k * k * energy / grad)
    return FittedConstants(m, c1, c2, raw, m_tilde)


def fit_superposition_config(
    traj: TrajectoryRecord,
    s: int | None = None,
    l1: int | None = None,
    i: int | None = None,
    s_max: int = DEFAULT_S_MAX,
    m_tilde_floor: float = 2.0,
) -> SuperpositionConfig:
    """Fit constants and pick s (minimal with a(s) < nu/40, capped at s_max),
    l1 (minimal admissible unless given) and i (2s-1 unless given)."""
    fitted = fit_constants(traj, m_tilde_floor)
    if s is None:
        s = min(minimal_s(fitted.c2, fitted.m, fitted.m_tilde, traj.nu / 40.0), s_max)
    if l1 is None:
        l1 = minimal_l1(fitted.m_tilde, s)
    if i is None:
        i = 2 * s - 1
    return SuperpositionConfig(
        s, l1, i, fitted.m, fitted.m_tilde, fitted.c1, fitted.c2, a_of_s(s, fitted.c2, fitted.m, fitted.m_tilde)
    )


@dataclass
class SuperpositionReport:
    config: SuperpositionConfig
    s_min_nu40: int
    s_min_nu4: int
    threshold_met: bool
    s_values: np.ndarray
    a_values: np.ndarray
    times: np.ndarray
    weighted_sums: dict[int, np.ndarray]
    gradient_sums: dict[int, np.ndarray]
    rung_series: dict[int, np.ndarray]
    rung_sup: dict[int, float]
    h1_direct: np.ndarray
    reports: list[CheckReport] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.reports)


def superposition_diagnostics(
    traj: TrajectoryRecord, cfg: SuperpositionConfig, s_max: int = DEFAULT_S_MAX
) -> SuperpositionReport:
    """Evaluate a(s), the ladder sums and the Sobolev rungs for ``cfg``.

    For i = 0 .. 2s-1 the series are

        W_i(t) = sum_{j>=l1} j^(i+1) ||u_{j^s,(j+1)^s}(t)||^2
        G_i(t) = sum_{j>=l1} j^(i+1) ||grad u_{j^s,(j+1)^s}(t)||^2
        R_i(t) = ||u(t)||_{H^((i+1)/(2s))}   (inhomogeneous)

    R_i is assembled from the per-sample |xi|^2 spectrum; the top rung
    i = 2s-1 is compared with a direct H^1 evaluation.
    """
    nu = traj.nu
    s, l1 = cfg.s, cfg.l1
    s_values = np.arange(1, s_max + 1)
    a_values = a_of_s(s_values, cfg.c2_fitted, cfg.m, cfg.m_tilde)
    s40 = minimal_s(cfg.c2_fitted, cfg.m, cfg.m_tilde, nu / 40.0)
    s4 = minimal_s(cfg.c2_fitted, cfg.m, cfg.m_tilde, nu / 4.0)
    met = cfg.a_s < nu / 40.0

    times = np.asarray(traj.times, dtype=float)
    rungs = range(2 * s)
    weighted = {i: np.zeros(times.size) for i in rungs}
    gradient = {i: np.zeros(times.size) for i in rungs}
    series = {i: np.zeros(times.size) for i in rungs}
    h1 = np.zeros(times.size)
    for idx, u in enumerate(traj.checkpoints):
        bins = radial_energy(u)
        r = shell_magnitudes(bins.size)
        q = np.arange(bins.size, dtype=float)
        top = int(math.floor(r.max() ** (1.0 / s))) + 1
        shells = {j: (_band(bins, r, j**s, (j + 1) ** s), _band(q * bins, r, j**s, (j + 1) ** s)) for j in range(l1, top + 1)}
        for i in rungs:
            weighted[i][idx] = sum(j ** (i + 1) * e for j, (e, _) in shells.items())
            gradient[i][idx] = sum(j ** (i + 1) * g for j, (_, g) in shells.items())
            series[i][idx] = math.sqrt(float(np.sum((1.0 + q) ** ((i + 1) / (2.0 * s)) * bins)))
        h1[idx] = sobolev_norm(u, 1.0, homogeneous=False)
    sup = {i: float(series[i].max()) if times.size else 0.0 for i in rungs}

    reports = []
    if cfg.m > 0 and cfg.c2_fitted > 0:
        steps = np.diff(a_values)
        worst = float(steps.max()) if steps.size else -1.0
        status = "inequality_pass" if worst < 0 else "inequality_fail"
        reports.append(CheckReport("a_of_s_decreasing", status, worst, 0.0, -worst, 0.0, f"s=1..{s_max}"))
    reports.append(
        CheckReport(
            "a_of_s_threshold",
            "inequality_pass" if met else "inequality_fail",
            cfg.a_s,
            nu / 40.0,
            nu / 40.0 - cfg.a_s,
            0.0,
            f"s={s} s_min={s40} s_max={s_max}",
        )
    )
    finite = all(np.all(np.isfinite(series[i])) for i in rungs)
    reports.append(
        CheckReport("rungs_finite", "inequality_pass" if finite else "inequality_fail", 0.0, 0.0, 0.0, 0.0, f"rungs={2 * s}")
    )
    ordered = [sup[i] for i in rungs]
    increasing = all(b >= a * (1 - 1e-14) for a, b in zip(ordered, ordered[1:]))
    reports.append(
        CheckReport("rungs_nondecreasing", "inequality_pass" if increasing else "inequality_fail", 0.0, 0.0, 0.0, 0.0)
    )
    h1_sup = float(h1.max()) if times.size else 0.0
    reports.append(identity("top_rung_h1", sup[2 * s - 1], h1_sup, 1e-8, f"s={s}"))
    return SuperpositionReport(
        cfg, s40, s4, met, s_values, a_values, times, weighted, gradient, series, sup, h1, reports
    )
