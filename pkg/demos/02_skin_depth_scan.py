# %% [markdown]
# Coarse version of the fig3 preset: lifetime against the coating's skin
# depth, with the core fixed.  The full preset is
# `spinflip sweep --preset fig3 --out fig3.csv`.

# %%
import numpy as np

from spinflip import SweepSpec, run_sweep
from spinflip.sweep import format_csv, preset_base

UM = 1e-6
spec = SweepSpec("skin_depth_2", 1 * UM, 1e4 * UM, 17, "log")
rows = run_sweep(spec, preset_base("fig3"))

# %%
for r in rows:
    print(f"{r.value / UM:10.4g} um  {r.lifetime:8.4f} s")

best = min(rows, key=lambda r: r.lifetime)
print(f"shortest lifetime {best.lifetime:.4f} s at {best.value / UM:.3g} um")

# %% thick-skin limit: the coating stops screening and the lifetime saturates
tail = np.array([r.lifetime for r in rows[-3:]])
print("last three:", np.round(tail, 3))

# %%
with open("skin_depth_scan.csv", "w") as fh:
    fh.write(format_csv(rows))
