# %% [markdown]
# # Dyadic blocks of a periodic field
#
# A tour of the spectral toolkit: build a solenoidal field on the 3-torus,
# split it into Littlewood-Paley blocks and read off its Besov profile.

# %%
import numpy as np

from nssp.littlewood_paley import besov_norm, block_profile, dyadic_decompose, highpass, lowpass
from nssp.solver import make_initial
from nssp.spectral import GridSpec, divergence_residual, l2_norm, linf_norm

grid = GridSpec(dim=3, n=32, nu=0.05)
u = make_initial("random_divfree", grid, seed=1, spectrum_slope=-2.0)
print("divergence residual:", divergence_residual(u))
print("energy ||u||^2:", l2_norm(u) ** 2)

# %% [markdown]
# Low and high cutoffs split the field without overlap: `lowpass(u, k)` keeps
# |xi| < k and `highpass(u, k)` keeps |xi| >= k.

# %%
for k in (2, 4, 8):
    low, high = lowpass(u, k), highpass(u, k)
    print(f"k={k}: ||u_k||^2 + ||u^k||^2 - ||u||^2 = {l2_norm(low)**2 + l2_norm(high)**2 - l2_norm(u)**2:.2e}")

# %% [markdown]
# Block energies fall off with the imposed k^-2 shell spectrum, and the
# weighted sup over blocks gives the Besov norm.

# %%
dec = dyadic_decompose(u)
for j, e in dec.l2_norms().items():
    print(f"block {j}: ||Delta_j u|| = {e:.4f}")
profile = block_profile(u, -1.0)
print("2^-j ||Delta_j u||_inf:", np.round(profile, 4))
print("B^-1 norm:", besov_norm(u, -1.0), " sup norm:", linf_norm(u, 2))
