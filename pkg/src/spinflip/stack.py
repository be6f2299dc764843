"""Physical constants, wire materials and geometry, and the transition.

Lengths are in metres, frequencies in Hz, resistivities in ohm metre.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError


@dataclass(frozen=True)
class PhysicalConstants:
    """CODATA 2018 values; the electron g-factor is taken as exactly 2."""

    mu0: float = 1.25663706212e-6
    eps0: float = 8.8541878128e-12
    hbar: float = 1.054571817e-34
    kB: float = 1.380649e-23
    muB: float = 9.2740100783e-24
    c: float = 299792458.0
    gS: float = 2.0

    def __post_init__(self):
        for name in ("mu0", "eps0", "hbar", "kB", "muB", "c", "gS"):
            if not getattr(self, name) > 0:
                raise InvalidArgumentError(f"constant {name} must be positive")


CODATA2018 = PhysicalConstants()


def _positive(name, value):
    if not (isinstance(value, (int, float, np.floating, np.integer)) and math.isfinite(value) and value > 0):
        raise InvalidArgumentError(f"{name} must be a positive finite number, got {value!r}")
    return float(value)


def skin_depth(resistivity, frequency, constants=CODATA2018):
    """Skin depth ``sqrt(2 rho / (mu0 omega))`` in metres."""
    resistivity = _positive("resistivity", resistivity)
    frequency = _positive("frequency", frequency)
    omega = 2 * math.pi * frequency
    return math.sqrt(2 * resistivity / (constants.mu0 * omega))


def rel_permittivity(skin_depth, k0):
    """Low-frequency conductor permittivity ``2i / (k0 delta)^2``."""
    skin_depth = _positive("skin_depth", skin_depth)
    k0 = _positive("k0", k0)
    return 2j / (k0 * skin_depth) ** 2


def eta_tilde(rel_eps, q, rel_mu=1.0):
    """Radial propagation constant in units of k3, ``sqrt(eps*mu - q^2)``.

    The root with ``Im >= 0`` (and ``Re >= 0`` on the real axis) is taken so
    that outgoing Hankel waves decay away from the wire.  Vectorised over q.
    """
    q = np.asarray(q, dtype=float)
    if not np.all(np.isfinite(q)):
        raise InvalidArgumentError("q must be finite")
    em = complex(rel_eps) * complex(rel_mu)
    if em.imag == 0 and em.real > 0:
        # factored so that 1 - q^2 keeps its digits next to q = 1
        s = math.sqrt(em.real)
        arg = (s - q) * (s + q) + 0j
    else:
        arg = em - q * q + 0j
    root = np.sqrt(arg)
    flip = (root.imag < 0) | ((root.imag == 0) & (root.real < 0))
    root = np.where(flip, -root, root)
    return root if root.ndim else complex(root)


@dataclass(frozen=True)
class Layer:
    """One cylindrical shell: outer radius plus either a resistivity or an
    explicit complex relative permittivity."""

    outer_radius: float
    resistivity: float | None = None
    explicit_rel_permittivity: complex | None = None
    rel_permeability: complex = 1.0

    def __post_init__(self):
        _positive("outer_radius", self.outer_radius)
        has_rho = self.resistivity is not None
        has_eps = self.explicit_rel_permittivity is not None
        if has_rho == has_eps:
            raise InvalidArgumentError("give exactly one of resistivity or explicit_rel_permittivity")
        if has_rho:
            _positive("resistivity", self.resistivity)
        else:
            eps = complex(self.explicit_rel_permittivity)
            if not (math.isfinite(eps.real) and math.isfinite(eps.imag)):
                raise InvalidArgumentError("explicit_rel_permittivity must be finite")
            if eps.imag < 0:
                raise InvalidArgumentError("explicit_rel_permittivity must have Im >= 0")

    @classmethod
    def from_skin_depth(cls, outer_radius, skin_depth, frequency, constants=CODATA2018, **kw):
        """Layer whose resistivity reproduces ``skin_depth`` at ``frequency``."""
        _positive("skin_depth", skin_depth)
        omega = 2 * math.pi * _positive("frequency", frequency)
        return cls(outer_radius, resistivity=skin_depth ** 2 * constants.mu0 * omega / 2, **kw)

    def rel_eps(self, frequency, constants=CODATA2018):
        if self.explicit_rel_permittivity is not None:
            return complex(self.explicit_rel_permittivity)
        omega = 2 * math.pi * frequency
        return 1j / (constants.eps0 * self.resistivity * omega)

    def with_radius(self, outer_radius):
        return Layer(outer_radius, self.resistivity, self.explicit_rel_permittivity, self.rel_permeability)


def vacuum_layer(outer_radius):
    return Layer(outer_radius, explicit_rel_permittivity=1.0)


@dataclass(frozen=True)
class WireStack:
    """Core (layer 1, radius a1), coating (layer 2, radius a2), vacuum outside."""

    core: Layer
    coating: Layer

    def __post_init__(self):
        if not self.core.outer_radius < self.coating.outer_radius:
            raise InvalidArgumentError(
                f"core radius {self.core.outer_radius} must be below coating radius "
                f"{self.coating.outer_radius}")

    @property
    def a1(self):
        return self.core.outer_radius

    @property
    def a2(self):
        return self.coating.outer_radius

    def materials(self, frequency, constants=CODATA2018):
        """Relative (eps, mu) triples for layers 1, 2, 3."""
        eps = (self.core.rel_eps(frequency, constants), self.coating.rel_eps(frequency, constants), 1.0 + 0j)
        mu = (complex(self.core.rel_permeability), complex(self.coating.rel_permeability), 1.0 + 0j)
        return eps, mu

    def is_vacuum(self, frequency, constants=CODATA2018):
        eps, mu = self.materials(frequency, constants)
        return all(e == 1 for e in eps) and all(m == 1 for m in mu)

    def scaled(self, a1=None, a2=None):
        return WireStack(self.core.with_radius(a1 if a1 is not None else self.a1),
                         self.coating.with_radius(a2 if a2 is not None else self.a2))


def vacuum_stack(a1=1e-4, a2=2e-4):
    """A wire made of vacuum: it scatters nothing."""
    return WireStack(vacuum_layer(a1), vacuum_layer(a2))


@dataclass(frozen=True)
class Transition:
    """Spin-flip transition; ``angular_factor_S2`` defaults to 1/8 (Rb |2,2> -> |2,1>)."""

    frequency: float
    temperature: float = 0.0
    angular_factor_S2: float = 0.125

    def __post_init__(self):
        _positive("frequency", self.frequency)
        _positive("angular_factor_S2", self.angular_factor_S2)
        if not (math.isfinite(self.temperature) and self.temperature >= 0):
            raise InvalidArgumentError("temperature must be >= 0")

    @property
    def omega(self):
        return 2 * math.pi * self.frequency

    def k3(self, constants=CODATA2018):
        """Free-space wavenumber omega/c."""
        return self.omega / constants.c


@dataclass(frozen=True)
class FieldPoint:
    """Atom position, given by its distance from the outer wire surface."""

    surface_distance: float

    def __post_init__(self):
        _positive("surface_distance", self.surface_distance)


def paper_stack(frequency=560e3, a1=185e-6, a2=240e-6, delta1=85e-6, delta2=110e-6,
                constants=CODATA2018):
    """The Cu core / Al coating wire used in the trap-lifetime experiment."""
    return WireStack(Layer.from_skin_depth(a1, delta1, frequency, constants),
                     Layer.from_skin_depth(a2, delta2, frequency, constants))
