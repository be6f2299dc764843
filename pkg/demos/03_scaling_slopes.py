# %% [markdown]
# Local log-log slopes of the lifetime for the joint scaling
# (a2 = 5 r, a1 = 185/240 a2) and for the outer radius alone.

# %%
from spinflip import PRESETS, SweepSpec, fit_loglog_slope, run_sweep
from spinflip.sweep import preset_base

UM = 1e-6
joint = PRESETS["fig4"]
radius = PRESETS["fig5"]


def window(preset, lo, hi, points):
    spec = SweepSpec(preset.parameter, lo, hi, points, "log", preset.couplings)
    return run_sweep(spec, preset_base("fig4" if preset is joint else "fig5"))


# %% far from the wire: approaching r^4 only slowly
rows = window(joint, 300 * UM, 1000 * UM, 6)
fit = fit_loglog_slope(rows, 300 * UM, 1000 * UM)
print(f"joint scaling, r in [300, 1000] um: slope {fit.slope:.3f} +- {fit.stderr:.3f}")

# %% thin wire, atom at 50 um
rows = window(radius, 0.5 * UM, 5 * UM, 6)
fit = fit_loglog_slope(rows, 0.5 * UM, 5 * UM)
print(f"outer radius, a2 in [0.5, 5] um: slope {fit.slope:.3f} +- {fit.stderr:.3f}")
