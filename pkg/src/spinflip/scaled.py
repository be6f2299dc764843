"""Complex numbers with a separate base-2 exponent.

A :class:`Scaled` value represents ``m * 2**e`` with a complex mantissa ``m``
whose larger component lies in ``[0.5, 1)`` and an integer exponent ``e``.
Products and quotients add exponents exactly, sums align to the larger
exponent.  Everything broadcasts like numpy arrays, so one object can hold
a whole (order x node) grid of cylinder-function values.
"""

import numpy as np

RADIX = 2

# exponent assigned to exact zeros when aligning sums
_ZERO_EXP = -(2 ** 40)


def _split(m):
    m = np.asarray(m, dtype=np.complex128)
    mag = np.maximum(np.abs(m.real), np.abs(m.imag))
    _, k = np.frexp(mag)
    k = k.astype(np.int64)
    re = np.ldexp(m.real, -k)
    im = np.ldexp(m.imag, -k)
    return re + 1j * im, k


def _shift(m, s):
    """Return ``m * 2**s`` for integer arrays ``s <= 0``."""
    s = np.maximum(s, -1100)
    return np.ldexp(m.real, s) + 1j * np.ldexp(m.imag, s)


class Scaled:
    __slots__ = ("m", "e")
    __array_priority__ = 100
    __array_ufunc__ = None

    def __init__(self, m, e=0, normalize=True):
        m = np.asarray(m, dtype=np.complex128)
        e = np.asarray(e, dtype=np.int64)
        if normalize:
            m, k = _split(m)
            e = e + k
        self.m = m
        self.e = np.broadcast_to(e, m.shape).copy() if e.shape != m.shape else e

    @classmethod
    def from_log(cls, logval):
        """Build ``exp(logval)`` without overflow; ``logval`` is complex."""
        logval = np.asarray(logval, dtype=np.complex128)
        t = logval.real / np.log(2.0)
        e = np.floor(t)
        m = np.exp((t - e) * np.log(2.0) + 1j * logval.imag)
        return cls(m, e.astype(np.int64))

    @staticmethod
    def lift(x):
        return x if isinstance(x, Scaled) else Scaled(x)

    # -- conversions -------------------------------------------------------
    def to_complex(self):
        e = np.clip(self.e, -4000, 4000)
        return np.ldexp(self.m.real, e) + 1j * np.ldexp(self.m.imag, e)

    def log2abs(self):
        with np.errstate(divide="ignore"):
            return np.log2(np.abs(self.m)) + self.e

    def isfinite(self):
        return np.isfinite(self.m)

    @property
    def shape(self):
        return self.m.shape

    def __getitem__(self, idx):
        return Scaled(self.m[idx], self.e[idx], normalize=False)

    def conj(self):
        return Scaled(np.conj(self.m), self.e, normalize=False)

    # -- arithmetic --------------------------------------------------------
    def __mul__(self, other):
        if isinstance(other, Scaled):
            return Scaled(self.m * other.m, self.e + other.e)
        return Scaled(self.m * other, self.e)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Scaled):
            return Scaled(self.m / other.m, self.e - other.e)
        return Scaled(self.m / other, self.e)

    def __rtruediv__(self, other):
        return Scaled(other / self.m, -self.e)

    def __neg__(self):
        return Scaled(-self.m, self.e, normalize=False)

    def __pow__(self, p):
        if p != int(p):
            raise ValueError("only integer powers are supported")
        p = int(p)
        return Scaled(self.m ** p, self.e * p)

    def __add__(self, other):
        other = Scaled.lift(other)
        e1 = np.where(self.m == 0, _ZERO_EXP, self.e)
        e2 = np.where(other.m == 0, _ZERO_EXP, other.e)
        e = np.maximum(e1, e2)
        m = _shift(self.m, e1 - e) + _shift(other.m, e2 - e)
        e = np.where(e == _ZERO_EXP, 0, e)
        return Scaled(m, e)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-Scaled.lift(other))

    def __rsub__(self, other):
        return Scaled.lift(other) - self

    def __repr__(self):
        return f"Scaled(m={self.m!r}, e={self.e!r})"


def stack(values, axis=0):
    return Scaled(np.stack([v.m for v in values], axis=axis),
                  np.stack([v.e for v in values], axis=axis), normalize=False)
