"""Integer-order Bessel J and Hankel H(1) of complex argument, base-2 scaled.

Values are produced for a whole run of orders at once ("ladder"):

* H(1) is anchored at orders 0 and 1 with AMOS (``scipy.special.hankel1e``)
  and carried upward through the ratio ``H[k+1]/H[k]``.  In the closed upper
  half plane H(1) is the dominant solution of the order recurrence, so the
  upward pass is stable.
* The ratios ``J[k]/J[k-1]`` come from the backward recurrence (Miller start,
  or an exact AMOS start when the argument is far larger than the order) and
  J itself follows from the cross product
  ``J[k+1] H[k] - J[k] H[k+1] = 2i/(pi z)``.

Every step renormalises into a :class:`~spinflip.scaled.Scaled` mantissa and
exponent, so high orders at tiny arguments never overflow.  Arguments in the
lower half plane are handled by reflection.
"""

import math
from dataclasses import dataclass

import numba
import numpy as np
from scipy import special

from .errors import InvalidArgumentError, SingularArgumentError, UnsupportedOrderError
from .scaled import RADIX, Scaled

MAX_ORDER = 20000

# Miller start is used when it costs fewer extra steps than this
_MILLER_BUDGET = 400


@dataclass(frozen=True)
class CylValue:
    """``value * 2**scale_exponent`` and ``derivative * 2**scale_exponent``."""

    value: complex
    derivative: complex
    scale_exponent: int

    @property
    def radix(self):
        return RADIX

    def true_value(self):
        return complex(self.value) * 2.0 ** self.scale_exponent

    def true_derivative(self):
        return complex(self.derivative) * 2.0 ** self.scale_exponent


@numba.njit(cache=True)
def _renorm(m, e):
    mag = max(abs(m.real), abs(m.imag))
    if mag == 0.0 or not math.isfinite(mag):
        return m, e
    _, k = math.frexp(mag)
    return m * math.ldexp(1.0, -k), e + k


@numba.njit(cache=True)
def _ladder_kernel(z, lo, hi, h0m, h0e, h1m, h1e, start_order, start_ratio,
                   Jm, Je, Hm, He):
    nz = z.shape[0]
    width = hi - lo + 1
    svals = np.empty(width, dtype=np.complex128)
    for j in range(nz):
        zj = z[j]
        # upward pass for H
        hm, he = h0m[j], h0e[j]
        s = (h1m[j] / h0m[j]) * math.ldexp(1.0, h1e[j] - h0e[j])
        for k in range(hi + 1):
            if k >= lo:
                Hm[k - lo, j] = hm
                He[k - lo, j] = he
                svals[k - lo] = s
            hm, he = _renorm(hm * s, he)
            s = 2.0 * (k + 1) / zj - 1.0 / s
        # backward pass for J ratios, r = J[k]/J[k-1]
        r = start_ratio[j]
        top = start_order[j]
        for k in range(top - 1, hi, -1):
            r = 1.0 / (2.0 * k / zj - r)
        # r now holds ratio at order hi+1 (or the exact start if top == hi+1)
        w = 2j / (math.pi * zj)
        for k in range(hi, lo - 1, -1):
            jm = w / (r - svals[k - lo]) / Hm[k - lo, j]
            jm, je = _renorm(jm, -He[k - lo, j])
            Jm[k - lo, j] = jm
            Je[k - lo, j] = je
            if k > 0:
                r = 1.0 / (2.0 * k / zj - r)


def _anchor_h(n, z):
    # H(1)_n(z) = hankel1e(n, z) * exp(i z)
    v = special.hankel1e(n, z)
    t = -z.imag / math.log(2.0)
    e = np.floor(t)
    m = v * np.exp((t - e) * math.log(2.0) + 1j * z.real)
    s = Scaled(m, e.astype(np.int64))
    return s.m, s.e


def _j_start(z, top):
    """Order and ratio at which the backward J pass begins."""
    az = np.abs(z)
    miller = np.maximum(top, np.ceil(az)).astype(np.int64) + 30 + np.ceil(6.0 * np.cbrt(az)).astype(np.int64)
    start_order = miller.copy()
    start_ratio = np.zeros(z.shape, dtype=np.complex128)
    far = (miller - top > _MILLER_BUDGET) & (np.abs(z.imag) >= 1.0)
    if np.any(far):
        zf = z[far]
        with np.errstate(all="ignore"):
            ratio = special.jve(top, zf) / special.jve(top - 1, zf)
        ok = np.isfinite(ratio) & (ratio != 0)
        idx = np.flatnonzero(far)[ok]
        start_order[idx] = top
        start_ratio[idx] = ratio[ok]
    return start_order, start_ratio


def _ladder_upper(z, lo, hi):
    """J and H for orders lo..hi at points with Im z >= 0, z != 0."""
    z = np.ascontiguousarray(z, dtype=np.complex128).ravel()
    h0m, h0e = _anchor_h(0, z)
    h1m, h1e = _anchor_h(1, z)
    top = hi + 1
    start_order, start_ratio = _j_start(z, top)
    width = hi - lo + 1
    Jm = np.empty((width, z.size), dtype=np.complex128)
    Hm = np.empty_like(Jm)
    Je = np.empty((width, z.size), dtype=np.int64)
    He = np.empty_like(Je)
    _ladder_kernel(z, lo, hi, h0m, h0e.astype(np.int64), h1m, h1e.astype(np.int64),
                   start_order, start_ratio, Jm, Je, Hm, He)
    return Scaled(Jm, Je, normalize=False), Scaled(Hm, He, normalize=False)


def ladder(z, lo, hi):
    """Return ``(J, H)`` for orders ``lo..hi`` (rows) at the points ``z`` (columns).

    ``z`` must be non-zero.  The result arrays have shape ``(hi-lo+1, z.size)``.
    """
    z = np.asarray(z, dtype=np.complex128).ravel()
    lower = z.imag < 0
    if not np.any(lower):
        return _ladder_upper(z, lo, hi)
    w = np.where(lower, np.conj(z), z)
    J, H = _ladder_upper(w, lo, hi)
    # J(z) = conj J(conj z);  H1(z) = 2 J(z) - conj H1(conj z)  for Im z < 0
    Jc = J.conj()
    Hlow = 2 * Jc - H.conj()
    Jm = np.where(lower, Jc.m, J.m)
    Je = np.where(lower, Jc.e, J.e)
    Hm = np.where(lower, Hlow.m, H.m)
    He = np.where(lower, Hlow.e, H.e)
    return Scaled(Jm, Je, normalize=False), Scaled(Hm, He, normalize=False)


def _with_neighbours(z, lo, hi):
    """Values for orders lo-1..hi+1, using Z[-1] = -Z[1] when lo == 0."""
    if lo > 0:
        return ladder(z, lo - 1, hi + 1)
    J, H = ladder(z, 0, hi + 1)
    neg = lambda S: Scaled(-S.m[1:2], S.e[1:2], normalize=False)
    cat = lambda a, b: Scaled(np.concatenate([a.m, b.m]), np.concatenate([a.e, b.e]),
                              normalize=False)
    return cat(neg(J), J), cat(neg(H), H)


def _derivative(S):
    # Z'[n] = (Z[n-1] - Z[n+1]) / 2 on interior rows
    return (S[:-2] - S[2:]) * 0.5


def bessel_family(z, lo, hi, below=False):
    """``(J, J', H, H')`` for orders ``lo..hi`` at points ``z``, all Scaled.

    Derivatives are with respect to the full argument.  With ``below`` the
    Hankel values one order down are appended as a fifth entry.
    """
    J, H = _with_neighbours(z, lo, hi)
    out = (J[1:-1], _derivative(J), H[1:-1], _derivative(H))
    return out + (H[:-2],) if below else out


# -- public single-point interface ---------------------------------------------

def _check(n, z):
    if isinstance(n, (bool, np.bool_)) or int(n) != n:
        raise InvalidArgumentError(f"order must be an integer, got {n!r}")
    n = int(n)
    if n < 0 or n > MAX_ORDER:
        raise UnsupportedOrderError(f"order {n} outside 0..{MAX_ORDER}")
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise InvalidArgumentError(f"argument must be finite, got {z!r}")
    return n, z


def _pack(value, deriv):
    """Share the exponent of ``value`` (or of the derivative when value is 0)."""
    ref = value if value.m.item() != 0 else deriv
    e = int(ref.e.item())
    v = complex(value.m.item()) * 2.0 ** (int(value.e.item()) - e) if value.m.item() != 0 else 0j
    d = deriv.m.item()
    d = complex(np.ldexp(d.real, int(deriv.e.item()) - e) + 1j * np.ldexp(d.imag, int(deriv.e.item()) - e))
    return CylValue(v, d, e)


def cyl_j(n, z):
    """Bessel function of the first kind ``J_n(z)`` and its derivative."""
    n, z = _check(n, z)
    if z == 0:
        value = 1.0 + 0j if n == 0 else 0j
        deriv = 0.5 + 0j if n == 1 else 0j
        return CylValue(value, deriv, 0)
    J, Jp, _, _ = bessel_family(np.array([z]), n, n)
    return _pack(J[0, 0], Jp[0, 0])


def cyl_h1(n, z):
    """Hankel function of the first kind ``H(1)_n(z)`` and its derivative."""
    n, z = _check(n, z)
    if z == 0:
        raise SingularArgumentError("Hankel functions are singular at z = 0")
    _, _, H, Hp = bessel_family(np.array([z]), n, n)
    return _pack(H[0, 0], Hp[0, 0])


def wronskian_residual(n, z):
    """Relative residual of ``J H' - J' H = 2i/(pi z)``.

    The scale exponents are combined exactly, so the check is meaningful
    even when J and H individually lie far outside double range.
    """
    n, z = _check(n, z)
    if z == 0:
        raise SingularArgumentError("Hankel functions are singular at z = 0")
    J, Jp, H, Hp = bessel_family(np.array([z]), n, n)
    target = 2j / (math.pi * z)
    resid = ((J * Hp - Jp * H) - target)[0, 0] / target
    return float(2.0 ** min(float(resid.log2abs()), 1023.0))
