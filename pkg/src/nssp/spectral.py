"""Fields on the periodic box [0, 2pi)^dim and their Fourier representation.

Coefficients are stored in the real-to-complex half-spectrum layout (the
last axis keeps only non-negative wavenumbers).  The transform is unitary on
L^2([0, 2pi)^dim):

    u(x) = (2pi)^(-dim/2) * sum_xi  u_hat(xi) exp(i xi.x)

so that ||u||_2^2 = sum_xi |u_hat(xi)|^2 with no extra constants.  Sums over
the full lattice are taken over the half spectrum with multiplicity weights
(2 for interior last-axis indices, 1 on the zero and Nyquist planes).
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.fft

TWO_PI = 2.0 * np.pi


def fft_workers() -> int:
    """Thread cap for the FFT backend, read from ``NSSP_THREADS``."""
    value = os.environ.get("NSSP_THREADS", "")
    try:
        return max(1, int(value))
    except ValueError:
        return 1


@dataclass(frozen=True)
class GridSpec:
    """Periodic lattice with ``n`` points per axis and viscosity ``nu``."""

    dim: int
    n: int
    nu: float = 1.0

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {self.dim}")
        if self.n < 8 or self.n & (self.n - 1):
            raise ValueError(f"n must be a power of two >= 8, got {self.n}")
        if not self.nu > 0:
            raise ValueError(f"nu must be positive, got {self.nu}")

    @property
    def box_length(self) -> float:
        return TWO_PI

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.dim

    @property
    def spectral_shape(self) -> tuple[int, ...]:
        return (self.n,) * (self.dim - 1) + (self.n // 2 + 1,)

    @property
    def axes(self) -> tuple[int, ...]:
        return tuple(range(1, self.dim + 1))

    def with_n(self, n: int) -> GridSpec:
        return GridSpec(self.dim, n, self.nu)

    def with_nu(self, nu: float) -> GridSpec:
        return GridSpec(self.dim, self.n, nu)

    # lattice arrays are shared between all grids of the same (dim, n)
    @property
    def wavevector(self) -> tuple[np.ndarray, ...]:
        return _lattice(self.dim, self.n).wavevector

    @property
    def k2(self) -> np.ndarray:
        """Integer |xi|^2 on the half spectrum."""
        return _lattice(self.dim, self.n).k2

    @property
    def kmag(self) -> np.ndarray:
        """Euclidean |xi| on the half spectrum (float)."""
        return _lattice(self.dim, self.n).kmag

    @property
    def weights(self) -> np.ndarray:
        return _lattice(self.dim, self.n).weights

    @property
    def nyquist(self) -> np.ndarray:
        """True where any wavevector component sits on the Nyquist index."""
        return _lattice(self.dim, self.n).nyquist

    def dealias_mask(self) -> np.ndarray:
        """Orszag 2/3 rule: keep |xi_i| < n/3 on every axis."""
        return _lattice(self.dim, self.n).two_thirds

    def max_k2(self) -> int:
        return int(self.k2.max())


@dataclass(frozen=True)
class _Lattice:
    wavevector: tuple[np.ndarray, ...]
    k2: np.ndarray
    kmag: np.ndarray
    weights: np.ndarray
    nyquist: np.ndarray
    two_thirds: np.ndarray


@lru_cache(maxsize=16)
def _lattice(dim: int, n: int) -> _Lattice:
    full = np.fft.fftfreq(n, 1.0 / n).astype(np.int64)
    half = np.arange(n // 2 + 1, dtype=np.int64)
    axes_1d = [full] * (dim - 1) + [half]
    wavevector = tuple(np.meshgrid(*axes_1d, indexing="ij"))
    k2 = sum(k * k for k in wavevector)
    kmag = np.sqrt(k2.astype(np.float64))
    weights = np.full(k2.shape, 2.0)
    weights[..., 0] = 1.0
    weights[..., -1] = 1.0
    nyquist = np.zeros(k2.shape, dtype=bool)
    for k in wavevector:
        nyquist |= np.abs(k) == n // 2
    two_thirds = np.ones(k2.shape, dtype=bool)
    for k in wavevector:
        two_thirds &= 3 * np.abs(k) < n
    arrays = (k2, kmag, weights, nyquist, two_thirds) + wavevector
    for a in arrays:
        a.setflags(write=False)
    return _Lattice(wavevector, k2, kmag, weights, nyquist, two_thirds)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Real vector field held as half-spectrum Fourier coefficients.

    ``coeffs`` has shape ``(dim, *grid.spectral_shape)``.  Instances are
    immutable; arithmetic returns new fields.
    """

    grid: GridSpec
    coeffs: np.ndarray
    divergence_free: bool = field(default=False)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.complex128)
        expected = (self.grid.dim,) + self.grid.spectral_shape
        if c.shape != expected:
            raise ValueError(f"coefficient shape {c.shape} does not match grid {expected}")
        object.__setattr__(self, "coeffs", _frozen(c))

    def replace(self, coeffs: np.ndarray, divergence_free: bool | None = None) -> SpectralField:
        flag = self.divergence_free if divergence_free is None else divergence_free
        return SpectralField(self.grid, coeffs, flag)

    def __add__(self, other: SpectralField) -> SpectralField:
        return self.replace(self.coeffs + other.coeffs, self.divergence_free and other.divergence_free)

    def __sub__(self, other: SpectralField) -> SpectralField:
        return self.replace(self.coeffs - other.coeffs, self.divergence_free and other.divergence_free)

    def __neg__(self) -> SpectralField:
        return self.replace(-self.coeffs)

    def __mul__(self, scalar: float) -> SpectralField:
        return self.replace(self.coeffs * scalar)

    __rmul__ = __mul__

    @classmethod
    def zeros(cls, grid: GridSpec) -> SpectralField:
        return cls(grid, np.zeros((grid.dim,) + grid.spectral_shape, np.complex128), True)

    @property
    def dim(self) -> int:
        return self.grid.dim


@dataclass(frozen=True, eq=False)
class RealField:
    """Collocation samples, shape ``(dim, m, ..., m)`` with ``m = oversample * n``."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != self.grid.dim + 1 or v.shape[0] != self.grid.dim:
            raise ValueError(f"values shape {v.shape} incompatible with dim={self.grid.dim}")
        m = v.shape[1]
        if any(s != m for s in v.shape[1:]) or m % self.grid.n:
            raise ValueError(f"values shape {v.shape} is not an oversampled lattice of n={self.grid.n}")
        object.__setattr__(self, "values", _frozen(v))

    @property
    def points_per_axis(self) -> int:
        return self.values.shape[1]


def resize_coeffs(coeffs: np.ndarray, n: int, m: int) -> np.ndarray:
    """Move half-spectrum coefficients of an n-lattice onto an m-lattice.

    Growing the lattice splits each Nyquist coefficient evenly between +n/2
    and -n/2 so the trigonometric interpolant is unchanged.  Shrinking drops
    every mode with |xi_i| >= m/2.  The leading axis (components) is kept.
    """
    if m == n:
        return coeffs.copy()
    dim = coeffs.ndim - 1
    out = coeffs
    for ax in range(1, dim + 1):
        last = ax == dim
        out = _resize_axis(out, ax, n, m, last)
    return out


def _resize_axis(a: np.ndarray, ax: int, n: int, m: int, last: bool) -> np.ndarray:
    shape = list(a.shape)
    shape[ax] = m // 2 + 1 if last else m
    out = np.zeros(shape, dtype=a.dtype)

    def sl(lo, hi):
        idx = [slice(None)] * a.ndim
        idx[ax] = slice(lo, hi)
        return tuple(idx)

    if m > n:
        h = n // 2
        out[sl(0, h)] = a[sl(0, h)]
        if last:
            out[sl(h, h + 1)] = 0.5 * a[sl(h, h + 1)]
        else:
            out[sl(m - h + 1, m)] = a[sl(h + 1, n)]
            out[sl(h, h + 1)] = 0.5 * a[sl(h, h + 1)]
            out[sl(m - h, m - h + 1)] = 0.5 * a[sl(h, h + 1)]
    else:
        h = m // 2
        out[sl(0, h)] = a[sl(0, h)]
        if not last:
            out[sl(m - h + 1, m)] = a[sl(n - h + 1, n)]
    return out


def resample(f: SpectralField, n: int) -> SpectralField:
    """Same field on an n-point lattice (exact when n grows)."""
    grid = f.grid.with_n(n)
    return SpectralField(grid, resize_coeffs(f.coeffs, f.grid.n, n), f.divergence_free)


def to_physical(f: SpectralField, oversample: int = 1) -> RealField:
    """Sample ``f`` on the (oversample * n)^dim collocation lattice."""
    if oversample not in (1, 2):
        raise ValueError(f"oversample must be 1 or 2, got {oversample}")
    n = f.grid.n
    m = oversample * n
    coeffs = f.coeffs if m == n else resize_coeffs(f.coeffs, n, m)
    values = scipy.fft.irfftn(
        coeffs, s=(m,) * f.dim, axes=f.grid.axes, norm="forward", workers=fft_workers()
    )
    values *= TWO_PI ** (-f.dim / 2)
    return RealField(f.grid, values)


def to_spectral(v: RealField) -> SpectralField:
    """Unitary forward transform of samples on the grid's own n-lattice."""
    values = v.values
    if not np.all(np.isfinite(values)):
        raise ValueError("non-finite values cannot be transformed")
    m = v.points_per_axis
    coeffs = scipy.fft.rfftn(values, axes=v.grid.axes, norm="forward", workers=fft_workers())
    coeffs *= TWO_PI ** (v.grid.dim / 2)
    if m != v.grid.n:
        coeffs = resize_coeffs(coeffs, m, v.grid.n)
    return SpectralField(v.grid, coeffs)


def from_function(grid: GridSpec, func) -> SpectralField:
    """Spectral field from ``func(*x) -> sequence of dim component arrays``."""
    x = np.arange(grid.n) * (TWO_PI / grid.n)
    mesh = np.meshgrid(*([x] * grid.dim), indexing="ij")
    values = np.stack([np.broadcast_to(c, grid.shape) for c in func(*mesh)]).astype(np.float64)
    return to_spectral(RealField(grid, values))


def leray_project(f: SpectralField) -> SpectralField:
    """Apply I - xi xi^T / |xi|^2 mode by mode.

    Nyquist modes are zeroed: their lattice partner is not -xi, so the
    projector would break Hermitian symmetry there.
    """
    g = f.grid
    k2 = g.k2
    safe = np.where(k2 == 0, 1, k2).astype(np.float64)
    kdotu = sum(k * c for k, c in zip(g.wavevector, f.coeffs))
    out = np.stack([c - k * kdotu / safe for k, c in zip(g.wavevector, f.coeffs)])
    out[:, g.nyquist] = 0.0
    return f.replace(out, divergence_free=True)


def divergence_residual(f: SpectralField) -> float:
    """max_xi |xi . u_hat(xi)| / ||u_hat(xi)|| over nonzero coefficients."""
    g = f.grid
    kdotu = np.abs(sum(k * c for k, c in zip(g.wavevector, f.coeffs)))
    amp = np.sqrt(np.sum(np.abs(f.coeffs) ** 2, axis=0))
    nz = amp > 0
    if not nz.any():
        return 0.0
    return float(np.max(kdotu[nz] / amp[nz]))


def is_hermitian(f: SpectralField, rtol: float = 1e-12) -> bool:
    """Check coeff(-xi) = conj coeff(xi) on the self-conjugate planes."""
    n = f.grid.n
    scale = max(float(np.max(np.abs(f.coeffs))), 1e-300)
    for idx in (0, n // 2):
        plane = f.coeffs[..., idx]
        mirrored = plane
        for ax in range(1, plane.ndim):
            mirrored = np.roll(np.flip(mirrored, axis=ax), 1, axis=ax)
        if np.max(np.abs(plane - np.conj(mirrored))) > rtol * scale:
            return False
    return True


def inner(f: SpectralField, g: SpectralField) -> float:
    """Real L^2 inner product (f, g)_2."""
    w = f.grid.weights
    return float(np.sum(w * np.sum((np.conj(f.coeffs) * g.coeffs).real, axis=0)))


def _weighted_energy(f: SpectralField) -> np.ndarray:
    return f.grid.weights * np.sum(f.coeffs.real**2 + f.coeffs.imag**2, axis=0)


def l2_norm(f: SpectralField) -> float:
    return float(np.sqrt(np.sum(_weighted_energy(f))))


def grad_l2_norm(f: SpectralField) -> float:
    return float(np.sqrt(np.sum(f.grid.k2 * _weighted_energy(f))))


def sobolev_norm(f: SpectralField, s: float, homogeneous: bool = True) -> float:
    """H^s norm with multiplier |xi|^(2s) (homogeneous) or (1+|xi|^2)^s."""
    e = _weighted_energy(f)
    k2 = f.grid.k2.astype(np.float64)
    if homogeneous:
        if s < 0 and e.flat[0] != 0:
            raise ValueError("homogeneous norm with s < 0 requires a zero mean mode")
        mult = np.where(k2 == 0, 1.0, k2) ** s
        mult.flat[0] = 1.0 if s == 0 else 0.0
    else:
        mult = (1.0 + k2) ** s
    return float(np.sqrt(np.sum(mult * e)))


def linf_norm(f: SpectralField, oversample: int = 2) -> float:
    """max over the (oversampled) lattice of the pointwise Euclidean magnitude."""
    if not np.any(f.coeffs):
        return 0.0
    v = to_physical(f, oversample).values
    return float(np.sqrt(np.max(np.sum(v * v, axis=0))))


def radial_energy(f: SpectralField) -> np.ndarray:
    """Energy per integer value of |xi|^2: entry q holds sum_{|xi|^2=q} |u_hat|^2."""
    g = f.grid
    return np.bincount(g.k2.ravel(), weights=_weighted_energy(f).ravel(), minlength=g.max_k2() + 1)


def shell_magnitudes(size: int) -> np.ndarray:
    """|xi| for each |xi|^2 bin of :func:`radial_energy` (same rounding as ``kmag``)."""
    return np.sqrt(np.arange(size, dtype=np.int64).astype(np.float64))


def gradient(f: SpectralField, component: int) -> np.ndarray:
    """Coefficients of d/dx_j of every component, Nyquist derivative set to 0."""
    g = f.grid
    k = np.where(g.nyquist, 0, g.wavevector[component])
    return 1j * k * f.coeffs


def curl(f: SpectralField) -> np.ndarray:
    """Vorticity coefficients: shape (1, ...) in 2D, (3, ...) in 3D."""
    g = f.grid
    k = [np.where(g.nyquist, 0, kk) for kk in g.wavevector]
    c = f.coeffs
    if g.dim == 2:
        return (1j * (k[0] * c[1] - k[1] * c[0]))[None]
    return np.stack(
        [
            1j * (k[1] * c[2] - k[2] * c[1]),
            1j * (k[2] * c[0] - k[0] * c[2]),
            1j * (k[0] * c[1] - k[1] * c[0]),
        ]
    )
