"""Reflection coefficients of a core/coating cylinder in vacuum.

Everything is evaluated in internal units: lengths multiplied by k3, the
angular frequency set to 1 and the outer medium at eps = mu = 1.  In those
units the blocks below are dimensionless and the combination
``R12 * (-omega eps3 / k3)`` reduces to ``-R12``.

The block formulas only use ``+ - * /`` and integer powers, so the same code
runs on :class:`~spinflip.scaled.Scaled` arrays (the fast path, vectorised
over orders x axial wavenumbers) and on mpmath numbers (the extended
precision fallback used when the denominator cancels badly).
"""

import math
from dataclasses import dataclass, replace
from functools import cached_property

import mpmath
import numpy as np

from .cylfun import bessel_family
from .errors import InvalidArgumentError, ScaleOverflowError
from .scaled import Scaled
from .stack import CODATA2018, eta_tilde

# N is recomputed in extended precision when its summands exceed it by this factor
CANCELLATION_LIMIT = 1e6
EXTENDED_DPS = 40


@dataclass(frozen=True)
class CoeffBundle:
    """Dimensionless ``R11``, ``R12 * (-omega eps3 / k3)`` and ``R22``."""

    r11: complex
    r12_combo: complex
    r22: complex


def _pi(like):
    # keep pi at the working precision on the mpmath path
    return mpmath.pi if isinstance(like, mpmath.ctx_mp_python.mpnumeric) else math.pi


def _a(eta_o, eta_i, p_o, p_i, Zo, Zo_p, Zi, Zi_p):
    # grouped so that identical media on both sides cancel exactly
    return 1j * eta_o * eta_i * ((p_o * eta_i) * (Zo_p * Zi) - (p_i * eta_o) * (Zo * Zi_p))


def _outer_product(eta, a2, n, q, kap, k2s, cyl, X, Y):
    """``a_X a_Y + b_X b_Y`` at the outer interface, both built on H3.

    X and Y are ``(p3, p2, Z, Z')``.  Writing eta3 H3' through the order
    below leaves every term O(eta3^2), so nothing cancels as eta3 -> 0
    (far from |q| = 1 the plain product is the better one).  Returns the
    value and the bits its own terms lose, in log2.
    """
    _, e2, e3 = eta
    pXo, pXi, ZX, ZXp = X
    pYo, pYi, ZY, ZYp = Y
    r = cyl["H3r"]
    nu = n / a2
    u = nu - r
    terms = (ZX * ZY * (kap * e2 ** 4 * r * (2 * nu - r) - nu ** 2 * e3 ** 2 * (k2s ** 2 - kap * q ** 2)),
             -(e2 ** 3 * e3 ** 2 * u) * (pXo * pYi * (ZX * ZYp) + pYo * pXi * (ZY * ZXp)),
             -(e2 ** 2 * e3 ** 4 * pXi * pYi) * (ZXp * ZYp))
    return cyl["H3"] ** 2 * (terms[0] + terms[1] + terms[2]), _lost(terms)


def _lost(terms):
    # bits lost adding ``terms``, in log2
    total = terms[0]
    for t in terms[1:]:
        total = total + t
    with np.errstate(divide="ignore", invalid="ignore"):
        big = np.max(np.broadcast_arrays(*[t.log2abs() for t in terms]), axis=0)
        return np.nan_to_num(big - total.log2abs(), nan=0.0, posinf=1e4)


def _pick(use_b, a, b):
    m, e = np.broadcast_arrays(np.where(use_b, b.m, a.m), np.where(use_b, b.e, a.e))
    return Scaled(m, e)


def interface_blocks(eps, mu, eta, a1, a2, hn, cyl, n=None, q=None):
    """The a/b building blocks at both interfaces.

    ``hn`` is the product q*n; ``cyl`` maps names such as ``"H3p"`` to the
    cylinder values (J1 at eta1*a1; J2i, H2i at eta2*a1; J2o, H2o at eta2*a2;
    J3, H3 at eta3*a2; a trailing ``p`` marks the derivative).  When the
    orders ``n`` and wavenumbers ``q`` are given and ``cyl`` holds
    ``H3r = eta3 H3[n-1] / H3[n]``, the outer products d32, t32, a11 and a22
    are formed without their cancellation next to |q| = 1.
    """
    e1, e2, e3 = eps
    m1, m2, m3 = mu
    n1, n2, n3 = eta
    c = cyl
    k1s, k2s, k3s = e1 * m1, e2 * m2, e3 * m3
    B = {}
    B["aH2J1_m"] = _a(n2, n1, m2, m1, c["H2i"], c["H2ip"], c["J1"], c["J1p"])
    B["aH2J1_e"] = _a(n2, n1, e2, e1, c["H2i"], c["H2ip"], c["J1"], c["J1p"])
    B["aJ2J1_m"] = _a(n2, n1, m2, m1, c["J2i"], c["J2ip"], c["J1"], c["J1p"])
    B["aJ2J1_e"] = _a(n2, n1, e2, e1, c["J2i"], c["J2ip"], c["J1"], c["J1p"])
    f21 = hn / a1 * (k1s - k2s)
    B["bH2J1"] = c["H2i"] * c["J1"] * f21
    B["bJ2J1"] = c["J2i"] * c["J1"] * f21
    B["aH3J2_m"] = _a(n3, n2, m3, m2, c["H3"], c["H3p"], c["J2o"], c["J2op"])
    B["aH3J2_e"] = _a(n3, n2, e3, e2, c["H3"], c["H3p"], c["J2o"], c["J2op"])
    B["aJ3J2_m"] = _a(n3, n2, m3, m2, c["J3"], c["J3p"], c["J2o"], c["J2op"])
    B["aJ3J2_e"] = _a(n3, n2, e3, e2, c["J3"], c["J3p"], c["J2o"], c["J2op"])
    B["aH3H2_m"] = _a(n3, n2, m3, m2, c["H3"], c["H3p"], c["H2o"], c["H2op"])
    B["aH3H2_e"] = _a(n3, n2, e3, e2, c["H3"], c["H3p"], c["H2o"], c["H2op"])
    f32 = hn / a2 * (k2s - k3s)
    B["bH3J2"] = c["H3"] * c["J2o"] * f32
    B["bH3H2"] = c["H3"] * c["H2o"] * f32
    B["bJ3J2"] = c["J3"] * c["J2o"] * f32
    if n is not None and "H3r" in c:
        Jm, Je = (m3, m2, c["J2o"], c["J2op"]), (e3, e2, c["J2o"], c["J2op"])
        Hm, He = (m3, m2, c["H2o"], c["H2op"]), (e3, e2, c["H2o"], c["H2op"])
        plain = {"d32": (B["aH3J2_m"] * B["aH3J2_e"], B["bH3J2"] ** 2),
                 "t32": (B["aH3H2_e"] * B["aH3H2_m"], B["bH3H2"] ** 2),
                 "a11": (B["aH3J2_m"] * B["aH3H2_e"], B["bH3J2"] * B["bH3H2"]),
                 "a22": (B["aH3J2_e"] * B["aH3H2_m"], B["bH3J2"] * B["bH3H2"])}
        for name, X, Y in (("d32", Jm, Je), ("t32", He, Hm), ("a11", Jm, He), ("a22", Je, Hm)):
            x, y = plain[name]
            lost = _lost((x, y))
            value, lost_here = _outer_product(eta, a2, n, q, k3s, k2s, c, X, Y)
            use = lost_here < lost
            B[name] = _pick(use, x + y, value)
            B[name + "_lost"] = np.where(use, lost_here, lost)
    return B


def a12_product(B):
    return B["aH3J2_m"] * B["bH3H2"] - B["aH3H2_m"] * B["bH3J2"]


def a12_closed(eps, mu, eta, a2, hn, cyl):
    k2s, k3s = eps[1] * mu[1], eps[2] * mu[2]
    return -(2 / (_pi(a2) * a2)) * eta[2] ** 2 * (hn / a2) * mu[1] * (k2s - k3s) * cyl["H3"] ** 2


def b12_product(B):
    return B["aH2J1_m"] * B["bJ2J1"] - B["aJ2J1_m"] * B["bH2J1"]


def b12_closed(eps, mu, eta, a1, hn, cyl):
    k1s, k2s = eps[0] * mu[0], eps[1] * mu[1]
    return -(2 / (_pi(a1) * a1)) * eta[0] ** 2 * (hn / a1) * mu[1] * (k1s - k2s) * cyl["J1"] ** 2


def combine(B, eps, mu, eta, a2, a12, b12):
    """Assemble R11 and R12 from the interface blocks.

    Returns a dict holding ``r11``, ``r12`` and every intermediate (d, t,
    alpha..delta, N and the summands of N's bracket).
    """
    e1, e2, e3 = eps
    m1, m2, m3 = mu
    aHJm, aHJe, bHJ = B["aH3J2_m"], B["aH3J2_e"], B["bH3J2"]
    K = {"a12": a12, "b12": b12}
    outer = "d32" in B
    K["d32"] = d32 = B["d32"] if outer else aHJm * aHJe + bHJ ** 2
    K["d21"] = d21 = B["aH2J1_m"] * B["aH2J1_e"] + B["bH2J1"] ** 2
    K["t21"] = t21 = B["aJ2J1_m"] * B["aJ2J1_e"] + B["bJ2J1"] ** 2
    K["t32"] = t32 = B["t32"] if outer else B["aH3H2_e"] * B["aH3H2_m"] + B["bH3H2"] ** 2
    K["a11"] = a11 = B["a11"] if outer else aHJm * B["aH3H2_e"] + bHJ * B["bH3H2"]
    K["a22"] = a22 = B["a22"] if outer else aHJe * B["aH3H2_m"] + bHJ * B["bH3H2"]
    K["b11"] = b11 = B["aH2J1_m"] * B["aJ2J1_e"] + B["bH2J1"] * B["bJ2J1"]
    K["b22"] = b22 = B["aH2J1_e"] * B["aJ2J1_m"] + B["bH2J1"] * B["bJ2J1"]
    terms = (d32 * d21, t21 * t32, -(a11 * b11), (2 * e2 / m2) * a12 * b12, -(a22 * b22))
    K["N_terms"] = terms
    K["bracket"] = bracket = terms[0] + terms[1] + terms[2] + terms[3] + terms[4]
    K["N"] = d32 ** 2 * bracket
    K["alpha"] = al = (-(aHJm ** 2) * e2 * b11 + bHJ ** 2 * m2 * b22
                       - 2 * e2 * b12 * aHJm * bHJ)
    K["beta"] = be = (-(aHJm ** 2) * e2 * a22 + bHJ ** 2 * m2 * a11
                      + 2 * e2 * a12 * aHJm * bHJ)
    cross = aHJm * aHJe - bHJ ** 2
    K["gamma"] = ga = -aHJm * bHJ * e2 * b11 - aHJe * bHJ * m2 * b22 + e2 * b12 * cross
    K["delta"] = de = -aHJm * bHJ * e2 * a22 - aHJe * bHJ * m2 * a11 - e2 * a12 * cross
    K["T11"] = d32 * al - t21 * be
    K["T"] = d32 * ga - t21 * de
    pre = (2 / (_pi(a2) * a2)) ** 2 * eta[2] ** 2 * eta[1] ** 2
    # divide by d32 early: T/N = (x - t21 y / d32) / (d32 * bracket)
    inner = d32 * bracket
    K["r11"] = (-(aHJm * B["aJ3J2_e"] + bHJ * B["bJ3J2"]) / d32
                + (pre * e3) * (al - t21 * be / d32) / inner)
    K["r12"] = ((aHJm * B["bJ3J2"] - B["aJ3J2_m"] * bHJ) / d32
                + (pre * m3) * (ga - t21 * de / d32) / inner)
    return K


def _swap(eps, mu):
    return tuple(-m for m in mu), tuple(-e for e in eps)


@dataclass(frozen=True)
class BlockTable:
    """Cylinder values and materials for a grid of orders x axial wavenumbers.

    ``orders`` has shape (no, 1) and ``q`` shape (nq,); radii are in units of
    1/k3.  Blocks are computed on first access.
    """

    orders: np.ndarray
    q: np.ndarray
    eps: tuple
    mu: tuple
    a1: float
    a2: float
    eta: tuple
    cyl: dict

    @property
    def hn(self):
        return self.orders * self.q

    @cached_property
    def blocks(self):
        B = interface_blocks(self.eps, self.mu, self.eta, self.a1, self.a2, self.hn, self.cyl,
                             self.orders, self.q)
        _check_finite(B)
        return B

    @cached_property
    def a12(self):
        return a12_closed(self.eps, self.mu, self.eta, self.a2, self.hn, self.cyl)

    @cached_property
    def b12(self):
        return b12_closed(self.eps, self.mu, self.eta, self.a1, self.hn, self.cyl)

    @cached_property
    def combined(self):
        K = combine(self.blocks, self.eps, self.mu, self.eta, self.a2, self.a12, self.b12)
        _check_finite({k: v for k, v in K.items() if k not in ("N_terms", "bracket")})
        return K

    def product_loss(self):
        """Bits lost forming d32, t32, a11 and a22, in log2."""
        B = self.blocks
        return np.maximum.reduce([B[k + "_lost"] for k in ("d32", "t32", "a11", "a22")])

    def cancellation(self):
        """Ratio of the largest summand of N's bracket to the bracket itself, in log2."""
        K = self.combined
        big = np.max(np.stack([t.log2abs() for t in K["N_terms"]]), axis=0)
        return big - K["bracket"].log2abs()


def duality_swap(table):
    """Exchange mu_p with -eps_p in every layer.

    The propagation constants and cylinder values depend only on eps*mu and
    are shared.
    """
    eps, mu = _swap(table.eps, table.mu)
    return replace(table, eps=eps, mu=mu)


def _check_finite(blocks):
    for name, v in blocks.items():
        if isinstance(v, Scaled) and not np.all(v.isfinite()):
            raise ScaleOverflowError(name)


def _internal_materials(stack, transition, constants):
    eps, mu = stack.materials(transition.frequency, constants)
    k3 = transition.k3(constants)
    return eps, mu, k3 * stack.a1, k3 * stack.a2


def _etas(eps, mu, q):
    return tuple(np.atleast_1d(eta_tilde(e * m, q)) for e, m in zip(eps, mu))


def _cylinders(eta, a1, a2, lo, hi):
    e1, e2, e3 = eta
    cyl = {}
    for tag, z, kinds in (("1", e1 * a1, "J"), ("2i", e2 * a1, "JH"), ("2o", e2 * a2, "JH")):
        J, Jp, H, Hp = bessel_family(z, lo, hi)
        cyl["J" + tag], cyl["J" + tag + "p"] = J, Jp
        if "H" in kinds:
            cyl["H" + tag], cyl["H" + tag + "p"] = H, Hp
    J, Jp, H, Hp, Hm = bessel_family(e3 * a2, lo, hi, below=True)
    cyl["J3"], cyl["J3p"], cyl["H3"], cyl["H3p"] = J, Jp, H, Hp
    cyl["H3r"] = (Hm / H).to_complex() * e3
    return cyl


def block_table(lo, hi, q, eps, mu, a1, a2):
    """Table for orders ``lo..hi`` at the wavenumbers ``q`` (internal units)."""
    q = np.atleast_1d(np.asarray(q, dtype=float))
    if np.any(np.abs(q) == 1.0) and eps[2] * mu[2] == 1:
        raise InvalidArgumentError("q = +-1 makes the outer propagation constant vanish")
    eta = _etas(eps, mu, q)
    cyl = _cylinders(eta, a1, a2, lo, hi)
    orders = np.arange(lo, hi + 1, dtype=float)[:, None]
    return BlockTable(orders, q, tuple(eps), tuple(mu), a1, a2, eta, cyl)


# -- extended precision fallback ---------------------------------------------

def _mp_h1(n, z):
    # mpmath.hankel1 loses accuracy far up the imaginary axis; go through K
    return 2 / (mpmath.pi * mpmath.mpc(0, 1) ** (n + 1)) * mpmath.besselk(n, -1j * z)


def _mp_family(n, z, hankel=True):
    # derivatives from the order below: two evaluations per kind instead of three
    J = mpmath.besselj(n, z)
    Jp = mpmath.besselj(n - 1, z) - n / z * J
    if not hankel:
        return J, Jp, None, None
    H = _mp_h1(n, z)
    Hp = _mp_h1(n - 1, z) - n / z * H
    return J, Jp, H, Hp


def _mp_eta(e, m, q):
    r = mpmath.sqrt(e * m - q * q)
    if r.imag < 0 or (r.imag == 0 and r.real < 0):
        r = -r
    return r


def _mp_scaled(z):
    if z == 0:
        return 0j, 0
    e = int(mpmath.mag(z))
    return complex(mpmath.ldexp(z.real, -e) + 1j * mpmath.ldexp(z.imag, -e)), e


def _mp_setup(n, q, eps, mu, a1, a2):
    eps_m = tuple(mpmath.mpmathify(e) for e in eps)
    mu_m = tuple(mpmath.mpmathify(m) for m in mu)
    q = mpmath.mpmathify(q)
    a1, a2 = mpmath.mpmathify(a1), mpmath.mpmathify(a2)
    eta = tuple(_mp_eta(e, m, q) for e, m in zip(eps_m, mu_m))
    cyl = {}
    for tag, z in (("1", eta[0] * a1), ("2i", eta[1] * a1), ("2o", eta[1] * a2), ("3", eta[2] * a2)):
        J, Jp, H, Hp = _mp_family(n, z, hankel=tag != "1")
        cyl["J" + tag], cyl["J" + tag + "p"], cyl["H" + tag], cyl["H" + tag + "p"] = J, Jp, H, Hp
    return eps_m, mu_m, eta, a1, a2, q * n, cyl


def _mp_combine(eps, mu, eta, a1, a2, hn, cyl):
    B = interface_blocks(eps, mu, eta, a1, a2, hn, cyl)
    K = combine(B, eps, mu, eta, a2, a12_closed(eps, mu, eta, a2, hn, cyl),
                b12_closed(eps, mu, eta, a1, hn, cyl))
    return K["r11"], K["r12"]


def mp_coefficients(n, q, eps, mu, a1, a2):
    """R11 and R12 at one (n, q) as mpmath numbers, at the caller's precision."""
    return _mp_combine(*_mp_setup(n, q, eps, mu, a1, a2))


def mp_bundle(n, q, eps, mu, a1, a2):
    """R11, R12 and the dual R22 at one (n, q), sharing the cylinder functions."""
    eps_m, mu_m, eta, a1, a2, hn, cyl = _mp_setup(n, q, eps, mu, a1, a2)
    r11, r12 = _mp_combine(eps_m, mu_m, eta, a1, a2, hn, cyl)
    r22, _ = _mp_combine(*_swap(eps_m, mu_m), eta, a1, a2, hn, cyl)
    return r11, r12, r22


def mp_point(n, q, eps, mu, a1, a2, dps=EXTENDED_DPS):
    """R11 and R12 at one (n, q) in mpmath arithmetic.

    Each result is returned as ``(mantissa, base-2 exponent)``.
    """
    with mpmath.workdps(dps):
        r11, r12 = mp_coefficients(n, q, eps, mu, a1, a2)
        return _mp_scaled(r11), _mp_scaled(r12)


def _guarded(table):
    """Scaled R11 and R12, with badly cancelling points redone in mpmath."""
    K = table.combined
    r11, r12 = K["r11"], K["r12"]
    bad = table.cancellation() > math.log2(CANCELLATION_LIMIT)
    if np.any(bad):
        r11 = Scaled(r11.m.copy(), r11.e.copy(), normalize=False)
        r12 = Scaled(r12.m.copy(), r12.e.copy(), normalize=False)
        for i, j in zip(*np.nonzero(bad)):
            (m11, e11), (m12, e12) = mp_point(int(table.orders[i, 0]), float(table.q[j]),
                                              table.eps, table.mu, table.a1, table.a2)
            r11.m[i, j], r11.e[i, j] = m11, e11
            r12.m[i, j], r12.e[i, j] = m12, e12
        r11, r12 = Scaled(r11.m, r11.e), Scaled(r12.m, r12.e)
    return r11, r12, int(np.count_nonzero(bad))


def bundle_grid(lo, hi, q, eps, mu, a1, a2):
    """Scaled ``(r11, r12_combo, r22)`` on the orders x q grid.

    Also returns the number of points redone in extended precision and the
    table, whose cylinder values callers may reuse.
    """
    table = block_table(lo, hi, q, eps, mu, a1, a2)
    r11, r12, bad1 = _guarded(table)
    r22, _, bad2 = _guarded(duality_swap(table))
    # omega = k3 = eps3 = 1 internally, so R12 * (-omega eps3 / k3) = -R12
    return r11, r12 * (-eps[2]), r22, bad1 + bad2, table


def reflection_bundle(n, q, stack, transition, constants=CODATA2018):
    """The three dimensionless reflection quantities at one order and wavenumber."""
    if isinstance(n, (bool, np.bool_)) or int(n) != n or n < 0:
        raise InvalidArgumentError(f"order must be a non-negative integer, got {n!r}")
    q = float(q)
    if not math.isfinite(q):
        raise InvalidArgumentError("q must be finite")
    eps, mu, a1, a2 = _internal_materials(stack, transition, constants)
    r11, r12c, r22, _, _ = bundle_grid(int(n), int(n), [q], eps, mu, a1, a2)
    return CoeffBundle(*(complex(v.to_complex()[0, 0]) for v in (r11, r12c, r22)))
