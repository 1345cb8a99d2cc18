"""Sharp frequency projections, dyadic blocks and B^sigma_{inf,inf} norms.

Cutoffs are characteristic functions of |xi| (Euclidean norm of the integer
wavevector) compared against real thresholds:

    highpass(u, k)   keeps  |xi| >= k
    lowpass(u, k)    keeps  |xi| <  k
    band(u, h, k)    keeps  h <= |xi| < k
    block j          keeps  2^(j-1) <= |xi| < 2^j
    tilde block      keeps  |xi| < 1   (the mean mode on the lattice)
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .spectral import GridSpec, SpectralField, l2_norm, linf_norm, to_physical


@dataclass(frozen=True)
class BesovParams:
    sigma: float
    homogeneous: bool = False

    def __post_init__(self):
        if not -1.0 <= self.sigma <= 0.0:
            raise ValueError(f"sigma must lie in [-1, 0], got {self.sigma}")

    q = math.inf
    r = math.inf


def _masked(u: SpectralField, mask: np.ndarray) -> SpectralField:
    return u.replace(np.where(mask, u.coeffs, 0.0))


def highpass(u: SpectralField, k: float) -> SpectralField:
    """u^k: modes with |xi| >= k."""
    if k < 0:
        raise ValueError(f"cutoff must be non-negative, got {k}")
    return _masked(u, u.grid.kmag >= k)


def lowpass(u: SpectralField, k: float) -> SpectralField:
    """u_k = u - u^k: modes with |xi| < k."""
    if k < 0:
        raise ValueError(f"cutoff must be non-negative, got {k}")
    return _masked(u, u.grid.kmag < k)


def band(u: SpectralField, h: float, k: float) -> SpectralField:
    """u_{h,k} = u^h - u^k: modes with h <= |xi| < k."""
    if not 0 <= h < k:
        raise ValueError(f"band requires 0 <= h < k, got h={h}, k={k}")
    kmag = u.grid.kmag
    return _masked(u, (kmag >= h) & (kmag < k))


def max_block_index(grid: GridSpec) -> int:
    """Largest j whose annulus [2^(j-1), 2^j) meets the lattice."""
    kmax = float(grid.kmag.max())
    return int(math.floor(math.log2(kmax))) + 1


def dyadic_block(u: SpectralField, j: int) -> SpectralField:
    return band(u, 2.0 ** (j - 1), 2.0**j)


@dataclass(frozen=True)
class DyadicDecomposition:
    blocks: dict[int, SpectralField]
    tilde_block: SpectralField
    source_grid: GridSpec

    def reconstruct(self) -> SpectralField:
        total = self.tilde_block.coeffs.copy()
        for b in self.blocks.values():
            total = total + b.coeffs
        return SpectralField(self.source_grid, total)

    def linf_norms(self, oversample: int = 2) -> dict[int, float]:
        return block_linf_norms(self, oversample)

    def l2_norms(self) -> dict[int, float]:
        return {j: l2_norm(b) for j, b in self.blocks.items()}


def dyadic_decompose(u: SpectralField) -> DyadicDecomposition:
    """Blocks j = 1 .. max_block_index plus the |xi| < 1 ball.

    On the integer lattice no nonzero wavevector has |xi| < 1, so blocks with
    j <= 0 are empty and omitted.
    """
    blocks = {j: dyadic_block(u, j) for j in range(1, max_block_index(u.grid) + 1)}
    return DyadicDecomposition(blocks, lowpass(u, 1.0), u.grid)


def block_linf_norms(dec: DyadicDecomposition, oversample: int = 2) -> dict[int, float]:
    out = {}
    for j, b in dec.blocks.items():
        out[j] = linf_norm(b, oversample) if np.any(b.coeffs) else 0.0
    return out


def besov_norm(u: SpectralField, params: BesovParams | float, oversample: int = 2) -> float:
    """||u||_{B^sigma_{inf,inf}} built from sharp dyadic blocks.

    Homogeneous: sup_j 2^(sigma j) ||Delta_j u||_inf.  Inhomogeneous: the
    same sup over j >= 1, maxed with ||tilde Delta_0 u||_inf.
    """
    if not isinstance(params, BesovParams):
        params = BesovParams(float(params))
    sigma = params.sigma
    mean = u.coeffs[(slice(None),) + (0,) * u.dim]
    if params.homogeneous and sigma < 0 and np.any(mean != 0):
        raise ValueError("homogeneous Besov norm with sigma < 0 requires a zero mean mode")
    dec = dyadic_decompose(u)
    best = 0.0
    for j, value in block_linf_norms(dec, oversample).items():
        best = max(best, 2.0 ** (sigma * j) * value)
    if not params.homogeneous and np.any(mean != 0):
        best = max(best, linf_norm(dec.tilde_block, oversample))
    return best


def block_profile(u: SpectralField, sigma: float, oversample: int = 2) -> np.ndarray:
    """Weighted block sup norms 2^(sigma j) ||Delta_j u||_inf, index j-1."""
    dec = dyadic_decompose(u)
    norms = block_linf_norms(dec, oversample)
    return np.array([2.0 ** (sigma * j) * norms[j] for j in sorted(norms)])


def physical_blocks(u: SpectralField, oversample: int = 2) -> dict[int, np.ndarray]:
    """Sampled block fields, useful for plotting and inspection."""
    dec = dyadic_decompose(u)
    return {j: to_physical(b, oversample).values for j, b in dec.blocks.items()}
