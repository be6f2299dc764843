# %% [markdown]
# The q-integrand of a few azimuthal orders for the paper geometry.
# Around |q| = 1 the outer propagation constant vanishes; the value there
# is finite and is taken as the mean of the two one-sided limits.

# %%
import numpy as np

from spinflip import FieldPoint, Transition, integrand_xxyy, mode_integral, paper_stack

UM = 1e-6
wire, tr, point = paper_stack(), Transition(560e3, 300.0), FieldPoint(50 * UM)

# %%
for q in (0.5, 1 - 1e-4, 1.0, 1 + 1e-4, 2.0):
    print(f"q={q:<10g}", "  ".join(f"{integrand_xxyy(n, q, wire, tr, point).real:+.6e}" for n in (0, 1, 5)))

# %% the bulk of each integral sits at q ~ 1 / (k3 r)
k3r = tr.k3() * 50 * UM
for q in np.geomspace(0.01, 100, 5) / k3r:
    print(f"q k3 r={q * k3r:<8.3g}", f"{integrand_xxyy(1, q, wire, tr, point).real:+.6e}")

# %%
for n in (0, 1, 2, 10):
    m = mode_integral(n, wire, tr, point)
    print(f"n={n:2d}  I={m.value.real:+.10e}  err<={m.abs_error_estimate:.1e}  evals={m.evaluations}")
