"""Spin-flip rates near the wire.

The wire part of the rate is a sum over azimuthal orders n of integrals over
the axial wavenumber q (in units of k3).  Orders are handled in blocks that
share one set of quadrature nodes, so a single ladder of cylinder functions
serves every order in the block.
"""

import math
from dataclasses import dataclass, field

import mpmath
import numpy as np

from . import reflect
from .cylfun import bessel_family
from .errors import ConvergenceError, InvalidArgumentError, TruncationError
from .quadrature import K_WEIGHTS, NODES, VectorGK
from .stack import CODATA2018

# one-sided offset used for the removable point |q| = 1
Q_ONE_OFFSET = 1e-9
MAX_DPS = 400
# a cancellation-free value is good to about 2^-47 (calibrated with a bit to spare)
ASSEMBLY_BITS = 47
# single points are redone once their estimated relative error passes this
POINT_RTOL = 1e-11
# share of the q-integral tolerance one node may use up
NODE_SHARE = 1e-3


@dataclass(frozen=True)
class QuadPolicy:
    """Numerical controls for the q-integrals and the mode sum.

    ``n_max="auto"`` raises the default cap of 1000 orders to ``15 (a2+r)/r``
    when the atom is close to a thick wire, where that many orders are needed.
    """

    rtol: float = 1e-8
    atol: float = 1e-8
    mode_tol: float = 1e-8
    n_max: int | str = "auto"
    tail_constant: float = 30.0
    max_evaluations: int = 400000
    max_tail_doublings: int = 60
    block_elements: int = 60000

    def __post_init__(self):
        for name in ("rtol", "atol", "mode_tol", "tail_constant"):
            if not getattr(self, name) > 0:
                raise InvalidArgumentError(f"{name} must be positive")
        if self.n_max != "auto" and (int(self.n_max) != self.n_max or self.n_max < 0):
            raise InvalidArgumentError("n_max must be a non-negative integer or 'auto'")

    def order_cap(self, a2, r):
        if self.n_max != "auto":
            return int(self.n_max)
        return max(1000, math.ceil(15 * (a2 + r) / r))

    def halved(self):
        return QuadPolicy(self.rtol / 2, self.atol / 2, self.mode_tol / 2, self.n_max,
                          self.tail_constant, self.max_evaluations * 2,
                          self.max_tail_doublings, self.block_elements)


DEFAULT_POLICY = QuadPolicy()


@dataclass(frozen=True)
class ModeIntegral:
    n: int
    value: complex
    abs_error_estimate: float
    evaluations: int


@dataclass(frozen=True)
class WireRate:
    gamma_wire: float
    modes_used: int
    converged: bool
    modes: tuple = field(repr=False, default=())
    extended_points: int = 0
    abs_error_estimate: float = 0.0


@dataclass(frozen=True)
class RateResult:
    gamma_free: float
    gamma_wire: float
    n_thermal: float
    gamma_total: float
    lifetime: float
    modes_used: int
    converged: bool
    abs_error_estimate: float = 0.0


# -- closed-form pieces ---------------------------------------------------------

def gamma_free(transition, constants=CODATA2018):
    """Free-space magnetic-dipole spin-flip rate in 1/s."""
    k3 = transition.k3(constants)
    c = constants
    return (c.mu0 * (c.muB * c.gS) ** 2 * k3 ** 3 * transition.angular_factor_S2
            / (3 * math.pi * c.hbar))


def thermal_occupation(transition, constants=CODATA2018):
    """Bose-Einstein occupation at the transition frequency; 0 at T = 0."""
    if transition.temperature == 0:
        return 0.0
    x = constants.hbar * transition.omega / (constants.kB * transition.temperature)
    return 1.0 / math.expm1(x)


# -- integrand ----------------------------------------------------------------

@dataclass(frozen=True)
class _Geometry:
    eps: tuple
    mu: tuple
    a1: float
    a2: float
    rho: float
    r: float

    @classmethod
    def build(cls, stack, transition, point, constants):
        eps, mu = stack.materials(transition.frequency, constants)
        k3 = transition.k3(constants)
        return cls(eps, mu, k3 * stack.a1, k3 * stack.a2,
                   k3 * (stack.a2 + point.surface_distance), k3 * point.surface_distance)

    @property
    def vacuum(self):
        return all(e == 1 for e in self.eps) and all(m == 1 for m in self.mu)


def _mp_integrand(geo, n, q, loss=0.0):
    """One integrand value in mpmath, raising the precision until it settles.

    Used where the double-precision assembly cancels: near |q| = 1 the
    bracket terms grow like 1/eta3^2 while their sum stays finite.  ``loss``
    is the cancellation seen in double, in bits; it sets the first precision.
    """
    I = mpmath.mpc(0, 1)
    dps = reflect.EXTENDED_DPS + int(0.31 * max(0.0, min(loss, 3000.0)))
    previous = None
    while dps <= MAX_DPS:
        with mpmath.workdps(dps):
            r11, r12, r22 = reflect.mp_bundle(n, q, geo.eps, geo.mu, geo.a1, geo.a2)
            r12c = -r12 * mpmath.mpmathify(geo.eps[2])
            qm, rho = mpmath.mpf(q), mpmath.mpf(geo.rho)
            e3 = reflect._mp_eta(mpmath.mpmathify(geo.eps[2]), mpmath.mpmathify(geo.mu[2]), qm)
            _, _, H, Hp = reflect._mp_family(n, e3 * rho)
            radial = H * H * n * n / rho ** 2 + (e3 * Hp) ** 2
            val = ((r11 + qm * qm * r22) * radial + 4 * I * qm * r12c * e3 * H * Hp * n / rho) / e3 ** 2
            val = complex(val)
        if previous is not None and abs(val - previous) <= 1e-13 * abs(val):
            return val
        previous, dps = val, dps + 15
    raise ConvergenceError(f"integrand at n={n}, q={q!r} did not settle in extended precision",
                           partial=previous)


def _integrand_block(geo, lo, hi, q, budget=None, weight=None):
    """Integrand for orders lo..hi (rows) at wavenumbers q (columns).

    Points whose double-precision assembly cancels are redone in mpmath.
    Given a per-row ``budget`` and the quadrature ``weight`` of each node,
    only those whose estimated error times weight exceeds it are redone.
    Returns the values, the number of extended-precision points and, per
    row, the largest weighted error estimate left in place.
    """
    q = np.asarray(q, dtype=float)
    rows = hi - lo + 1
    if geo.vacuum:
        return np.zeros((rows, q.size), dtype=complex), 0, np.zeros(rows)
    r11, r12c, r22, extended, table = reflect.bundle_grid(lo, hi, q, geo.eps, geo.mu, geo.a1, geo.a2)
    eta3 = table.eta[2]
    _, _, H, Hp = bessel_family(eta3 * geo.rho, lo, hi)
    n = table.orders
    radial = H * H * (n * n / geo.rho ** 2) + (Hp * eta3) ** 2
    terms = (r11 * radial, r22 * (q * q) * radial, (r12c * H * Hp) * ((4j / geo.rho) * n * q * eta3))
    total = terms[0] + terms[1] + terms[2]
    val = (total / (eta3 * eta3)).to_complex()
    # bits lost in the assembly or already lost by the coefficients, whichever
    # is worse; |val| 2^(lost - 47) bounds the error even where val is noise
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        loss = np.max(np.stack([t.log2abs() for t in terms]), axis=0) - total.log2abs()
        loss = np.maximum(np.nan_to_num(loss, nan=0.0, posinf=1e4), table.product_loss())
        rel = np.exp2(np.minimum(loss, 1000.0) - ASSEMBLY_BITS)
        err = rel * np.abs(val)
    err = np.where(np.isfinite(err), err, np.inf)
    if budget is None:
        bad = rel > POINT_RTOL
        kept = np.zeros_like(err)
    else:
        limit = np.asarray(budget, dtype=float).reshape(-1, 1)
        weighted = err * np.abs(np.asarray(weight, dtype=float))
        bad = weighted > limit
        kept = np.where(bad, 0.0, weighted)
    for i, j in zip(*np.nonzero(bad)):
        val[i, j] = _mp_integrand(geo, lo + int(i), float(q[j]), float(loss[i, j]))
    return val, extended + int(np.count_nonzero(bad)), kept.max(axis=1, initial=0.0)


def integrand_xxyy(n, q, stack, transition, point, constants=CODATA2018):
    """The (xx + yy) mode integrand at one order and axial wavenumber.

    At |q| = 1 the outer propagation constant vanishes; the value returned
    there is the mean of the two one-sided values at |q| (1 -+ 1e-9).
    """
    if isinstance(n, (bool, np.bool_)) or int(n) != n or n < 0:
        raise InvalidArgumentError(f"order must be a non-negative integer, got {n!r}")
    q = float(q)
    if not math.isfinite(q):
        raise InvalidArgumentError("q must be finite")
    geo = _Geometry.build(stack, transition, point, constants)
    n = int(n)
    if abs(q) == 1.0:
        pts = np.array([q * (1 - Q_ONE_OFFSET), q * (1 + Q_ONE_OFFSET)])
        vals, _, _ = _integrand_block(geo, n, n, pts)
        return complex(vals[0].mean())
    vals, _, _ = _integrand_block(geo, n, n, np.array([q]))
    return complex(vals[0, 0])


# -- q integration ---------------------------------------------------------------

def _initial_edges(geo, policy):
    """[0, 1] followed by octave panels from 1 up to the decay scale of exp(-2 q r)."""
    q_hi = max(2.0, policy.tail_constant / geo.r)
    count = max(1, math.ceil(math.log2(q_hi)))
    return np.concatenate([[0.0], np.geomspace(1.0, 2.0 ** count, count + 1)])


class _BlockIntegrator:
    def __init__(self, geo, lo, hi, policy):
        self.geo, self.lo, self.hi, self.policy = geo, lo, hi, policy
        self.extended = 0
        self.budget = None
        self.leftover = np.zeros(hi - lo + 1)

    def _f(self, q):
        budget = np.inf if self.budget is None else self.budget
        # nodes arrive as whole 15-point panels
        panels = q.reshape(-1, 15)
        half = (panels[:, -1] - panels[:, 0]) / (NODES[-1] - NODES[0])
        weight = (half[:, None] * K_WEIGHTS).ravel()
        vals, ext, kept = _integrand_block(self.geo, self.lo, self.hi, q, budget, weight)
        self.extended += ext
        self.leftover = np.maximum(self.leftover, kept)
        return vals

    def tol(self, value):
        return np.maximum(self.policy.atol, self.policy.rtol * np.abs(value.real))

    def _start(self, edges):
        rows = self.hi - self.lo + 1
        self.gk = VectorGK(self._f, rows, chunk=max(15, self.policy.block_elements // rows))
        self.gk.add(edges[:-1], edges[1:])

    def run(self):
        p = self.policy
        edges = _initial_edges(self.geo, p)
        # a plain double pass sizes the integral, which sets how much error a
        # single node may carry; it is redone only if some node carried too much
        self._start(edges)
        for _ in range(4):
            budget = NODE_SHARE * self.tol(self.gk.value)
            if self.budget is not None:
                budget = np.minimum(budget, self.budget)
            if not np.any(self.leftover > budget):
                break
            # the estimate may have been skewed by the very nodes now redone
            self.budget = budget
            self.leftover = np.zeros_like(self.leftover)
            self._start(edges)
        self.budget = budget
        top = edges[-1]
        ok = self.gk.refine(self.tol, p.max_evaluations)
        # extend by doubling panels while the next panel is still significant
        for _ in range(p.max_tail_doublings):
            if not ok:
                break
            K = self.gk.add([top], [2 * top])
            top *= 2
            if np.all(np.abs(K.real) <= self.tol(self.gk.value)):
                break
            ok = self.gk.refine(self.tol, p.max_evaluations)
        else:
            ok = False
        return ok

    def results(self):
        v, e = self.gk.value, self.gk.error
        # the integrand is even in q: the full line is twice the half line
        return [ModeIntegral(self.lo + i, complex(2 * v[i]), float(2 * e[i]), self.gk.evaluations)
                for i in range(v.size)]


def mode_integrals(lo, hi, stack, transition, point, policy=DEFAULT_POLICY, constants=CODATA2018):
    """Mode integrals for the orders lo..hi evaluated together."""
    geo = _Geometry.build(stack, transition, point, constants)
    if geo.vacuum:
        return [ModeIntegral(n, 0j, 0.0, 0) for n in range(lo, hi + 1)]
    job = _BlockIntegrator(geo, lo, hi, policy)
    ok = job.run()
    res = job.results()
    if not ok:
        raise ConvergenceError(f"q-integral for orders {lo}..{hi} did not converge", partial=res)
    return res


def mode_integral(n, stack, transition, point, policy=DEFAULT_POLICY, constants=CODATA2018):
    """The integral over all real q of the mode-n integrand."""
    if isinstance(n, (bool, np.bool_)) or int(n) != n or n < 0:
        raise InvalidArgumentError(f"order must be a non-negative integer, got {n!r}")
    return mode_integrals(int(n), int(n), stack, transition, point, policy, constants)[0]


def _blocks(cap):
    # 0..7, 8..15, 16..31, 32..63, ...: block width grows with the order so the
    # shared cylinder-function ladders cost O(order) per node overall
    lo = 0
    while lo <= cap:
        hi = min(cap, max(7, 2 * lo - 1))
        yield lo, hi
        lo = hi + 1


def gamma_wire(stack, transition, point, policy=DEFAULT_POLICY, constants=CODATA2018):
    """Wire contribution to the spontaneous rate, with diagnostics.

    The mode sum stops once three consecutive orders each add less than
    ``policy.mode_tol`` of the running sum.
    """
    g0 = gamma_free(transition, constants)
    geo = _Geometry.build(stack, transition, point, constants)
    if geo.vacuum:
        return WireRate(0.0, 1, True, (ModeIntegral(0, 0j, 0.0, 0),))
    cap = policy.order_cap(stack.a2, point.surface_distance)
    total = 0.0
    small = 0
    modes = []
    extended = 0
    converged = True
    for lo, hi in _blocks(cap):
        job = _BlockIntegrator(geo, lo, hi, policy)
        converged &= job.run()
        extended += job.extended
        for m in job.results():
            weight = 1 if m.n == 0 else 2
            term = weight * m.value.real
            total += term
            modes.append(m)
            small = small + 1 if abs(term) <= policy.mode_tol * abs(total) else 0
            if small == 3:
                return _wire_rate(g0, total, modes, True, converged, extended)
    partial = _wire_rate(g0, total, modes, False, False, extended)
    raise TruncationError(f"mode sum not converged after {len(modes)} orders", partial=partial)


def _wire_rate(g0, total, modes, finished, converged, extended):
    weights = [1 if m.n == 0 else 2 for m in modes]
    quad = sum(w * m.abs_error_estimate for w, m in zip(weights, modes))
    # the orders left out are bounded by the last three kept, which are
    # already decaying when the sum stops
    tail = sum(w * abs(m.value.real) for w, m in zip(weights[-3:], modes[-3:]))
    return WireRate(0.375 * g0 * total, len(modes), finished and converged, tuple(modes), extended,
                    0.375 * g0 * (quad + tail))


def total_rate(stack, transition, point, policy=DEFAULT_POLICY, constants=CODATA2018):
    """Free-space plus wire rate, thermally enhanced, and the lifetime."""
    g0 = gamma_free(transition, constants)
    wire = gamma_wire(stack, transition, point, policy, constants)
    nth = thermal_occupation(transition, constants)
    total = (g0 + wire.gamma_wire) * (nth + 1)
    return RateResult(g0, wire.gamma_wire, nth, total, 1.0 / total, wire.modes_used,
                      wire.converged, wire.abs_error_estimate * (nth + 1))
