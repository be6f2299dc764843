"""Parameter sweeps, the figure presets, CSV output and log-log slope fits."""

import csv
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy import stats

from .errors import ConvergenceError, InvalidArgumentError
from .rate import DEFAULT_POLICY, gamma_free, gamma_wire, thermal_occupation
from .stack import CODATA2018, FieldPoint, Layer, Transition, WireStack, paper_stack

WORKERS_ENV = "SPINFLIP_WORKERS"

CSV_COLUMNS = ("param", "value_si", "lifetime_s", "gamma_free", "gamma_wire", "n_thermal",
               "gamma_total", "modes_used", "converged")

PARAMETERS = ("distance", "skin_depth_2", "outer_radius", "joint_scale")
# quantities a coupling may set or read
QUANTITIES = ("parameter", "distance", "core_radius", "outer_radius")

CORE_RATIO = 185 / 240
UM = 1e-6


@dataclass(frozen=True)
class Coupling:
    """``target = factor * source``, applied after the swept value is set."""

    target: str
    source: str
    factor: float

    def __post_init__(self):
        if self.target not in QUANTITIES[1:]:
            raise InvalidArgumentError(f"coupling target {self.target!r} not one of {QUANTITIES[1:]}")
        if self.source not in QUANTITIES:
            raise InvalidArgumentError(f"coupling source {self.source!r} not one of {QUANTITIES}")
        if not (math.isfinite(self.factor) and self.factor > 0):
            raise InvalidArgumentError("coupling factor must be positive")


@dataclass(frozen=True)
class SweepSpec:
    parameter: str
    start: float
    stop: float
    points: int
    spacing: str = "log"
    couplings: tuple = ()
    temperatures: tuple | None = None

    def __post_init__(self):
        if self.parameter not in PARAMETERS:
            raise InvalidArgumentError(f"parameter must be one of {PARAMETERS}")
        if not (self.start > 0 and self.stop > self.start):
            raise InvalidArgumentError("sweep needs 0 < from < to")
        if int(self.points) != self.points or self.points < 2:
            raise InvalidArgumentError("points must be an integer >= 2")
        if self.spacing not in ("linear", "log"):
            raise InvalidArgumentError("spacing must be 'linear' or 'log'")
        declared = {"parameter", "distance", "core_radius", "outer_radius"}
        for c in self.couplings:
            if c.source not in declared:
                raise InvalidArgumentError(f"coupling reads undeclared quantity {c.source!r}")

    def grid(self):
        if self.spacing == "log":
            g = np.geomspace(self.start, self.stop, self.points)
        else:
            g = np.linspace(self.start, self.stop, self.points)
        g[0], g[-1] = self.start, self.stop
        return g


@dataclass(frozen=True)
class Scenario:
    """Everything a single rate evaluation needs."""

    stack: WireStack
    transition: Transition
    distance: float
    policy: object = DEFAULT_POLICY
    constants: object = CODATA2018


@dataclass(frozen=True)
class SweepRow:
    param: str
    value: float
    lifetime: float
    gamma_free: float
    gamma_wire: float
    n_thermal: float
    gamma_total: float
    modes_used: int
    converged: bool

    def as_csv(self):
        f = lambda x: f"{x:.12g}"
        return [self.param, f(self.value), f(self.lifetime), f(self.gamma_free), f(self.gamma_wire),
                f(self.n_thermal), f(self.gamma_total), str(self.modes_used),
                "true" if self.converged else "false"]


PRESETS = {
    "fig2": SweepSpec("distance", 10 * UM, 500 * UM, 35, "log", (), (300.0, 380.0)),
    "fig3": SweepSpec("skin_depth_2", 1 * UM, 1e4 * UM, 41, "log"),
    "fig4": SweepSpec("joint_scale", 0.1 * UM, 1000 * UM, 41, "log",
                      (Coupling("outer_radius", "parameter", 5.0),
                       Coupling("core_radius", "outer_radius", CORE_RATIO))),
    "fig5": SweepSpec("outer_radius", 0.1 * UM, 1e4 * UM, 51, "log",
                      (Coupling("core_radius", "outer_radius", CORE_RATIO),)),
}


def preset_base(name):
    """Base scenario of a preset: the Cu/Al wire at 560 kHz, r = 50 um, 300 K."""
    if name not in PRESETS:
        raise InvalidArgumentError(f"unknown preset {name!r}")
    return Scenario(paper_stack(), Transition(560e3, 300.0), 50 * UM)


def apply_value(base, spec, value):
    """The scenario at one grid value, couplings applied in order."""
    vals = {"parameter": value, "distance": base.distance,
            "core_radius": base.stack.a1, "outer_radius": base.stack.a2}
    stack = base.stack
    if spec.parameter in ("distance", "joint_scale"):
        vals["distance"] = value
    elif spec.parameter == "outer_radius":
        vals["outer_radius"] = value
    for c in spec.couplings:
        vals[c.target] = c.factor * vals[c.source]
    if spec.parameter == "skin_depth_2":
        coating = Layer.from_skin_depth(stack.a2, value, base.transition.frequency, base.constants,
                                        rel_permeability=stack.coating.rel_permeability)
        stack = WireStack(stack.core, coating)
    stack = stack.scaled(vals["core_radius"], vals["outer_radius"])
    return replace(base, stack=stack, distance=vals["distance"])


def _wire_point(scn):
    """Wire rate and diagnostics at one scenario; convergence failures are flagged."""
    try:
        w = gamma_wire(scn.stack, scn.transition, FieldPoint(scn.distance), scn.policy, scn.constants)
        return w.gamma_wire, w.modes_used, w.converged
    except ConvergenceError as exc:
        p = exc.partial
        gw = getattr(p, "gamma_wire", float("nan"))
        return gw, getattr(p, "modes_used", 0), False


def _row(label, value, scn, wire):
    g0 = gamma_free(scn.transition, scn.constants)
    nth = thermal_occupation(scn.transition, scn.constants)
    gw, modes, ok = wire
    total = (g0 + gw) * (nth + 1)
    return SweepRow(label, value, 1.0 / total, g0, gw, nth, total, modes, ok)


def worker_count(explicit=None):
    if explicit is not None:
        return max(1, int(explicit))
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise InvalidArgumentError(f"{WORKERS_ENV} must be an integer, got {env!r}")
    return 1


def run_sweep(spec, base, workers=None):
    """Evaluate every grid point; rows come back in grid order.

    With several temperatures the wire rate (which does not depend on T) is
    computed once per point and one block of rows is emitted per temperature,
    labelled ``<parameter>@<T>K``.
    """
    grid = spec.grid()
    scenarios = [apply_value(base, spec, v) for v in grid]
    n = worker_count(workers)
    if n > 1 and len(scenarios) > 1:
        with ProcessPoolExecutor(max_workers=n) as pool:
            wires = list(pool.map(_wire_point, scenarios))
    else:
        wires = [_wire_point(s) for s in scenarios]
    rows = []
    if spec.temperatures:
        for T in spec.temperatures:
            label = f"{spec.parameter}@{T:g}K"
            for v, s, w in zip(grid, scenarios, wires):
                s_T = replace(s, transition=replace(s.transition, temperature=T))
                rows.append(_row(label, v, s_T, w))
    else:
        rows = [_row(spec.parameter, v, s, w) for v, s, w in zip(grid, scenarios, wires)]
    return rows


def format_csv(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow(r.as_csv())
    return buf.getvalue()


def write_csv(rows, path):
    with open(path, "w", newline="") as fh:
        fh.write(format_csv(rows))


def read_csv(path):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(CSV_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise InvalidArgumentError(f"CSV lacks columns {sorted(missing)}")
        rows = []
        for d in reader:
            rows.append(SweepRow(d["param"], float(d["value_si"]), float(d["lifetime_s"]),
                                 float(d["gamma_free"]), float(d["gamma_wire"]), float(d["n_thermal"]),
                                 float(d["gamma_total"]), int(d["modes_used"]),
                                 d["converged"].strip().lower() == "true"))
    return rows


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    stderr: float
    points: int


def fit_loglog_slope(rows, lo, hi, param=None):
    """Least-squares slope of log(lifetime) against log(value) on [lo, hi]."""
    labels = sorted({r.param for r in rows})
    if param is None:
        if len(labels) > 1:
            raise InvalidArgumentError(f"table holds several series {labels}; choose one")
        param = labels[0] if labels else None
    sel = [r for r in rows if r.param == param and lo <= r.value <= hi]
    if len(sel) < 3:
        raise InvalidArgumentError(f"need at least 3 points in [{lo:g}, {hi:g}], found {len(sel)}")
    if not all(r.converged for r in sel):
        raise InvalidArgumentError("range contains unconverged points")
    fit = stats.linregress(np.log([r.value for r in sel]), np.log([r.lifetime for r in sel]))
    return SlopeFit(float(fit.slope), float(fit.stderr), len(sel))
