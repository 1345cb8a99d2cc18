# %% [markdown]
# # Solver check against Taylor-Green decay
#
# The 2D Taylor-Green vortex is a steady Euler flow, so under viscosity it
# only decays: ||u(t)|| = exp(-2 nu t) ||u(0)||.

# %%
import math

from nssp.solver import SolverConfig, make_initial, run
from nssp.spectral import GridSpec

nu = 0.01
grid = GridSpec(dim=2, n=64, nu=nu)
u0 = make_initial("taylor_green_2d", grid)
record = run(u0, SolverConfig(grid, dt=1e-3, t_end=1.0, sample_every=100))

# %%
e0 = record.diagnostics[0].energy
for row in record.diagnostics:
    measured = math.sqrt(row.energy / e0)
    print(f"t={row.t:4.1f}  ratio={measured:.12f}  exact={math.exp(-2 * nu * row.t):.12f}")

# %% [markdown]
# Energy plus accumulated dissipation stays at its initial value.

# %%
last = record.diagnostics[-1]
print("energy balance residual:", last.energy + last.dissipation_integral - e0)
