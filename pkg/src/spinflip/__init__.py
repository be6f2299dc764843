"""Thermal spin-flip lifetimes of trapped atoms near a two-layer conducting wire."""

from .cylfun import CylValue, cyl_h1, cyl_j, wronskian_residual
from .errors import (ConfigError, ConvergenceError, InvalidArgumentError, ScaleOverflowError,
                     SingularArgumentError, SpinflipError, TruncationError, UnsupportedOrderError)
from .rate import (ModeIntegral, QuadPolicy, RateResult, gamma_free, gamma_wire, integrand_xxyy,
                   mode_integral, thermal_occupation, total_rate)
from .reflect import BlockTable, CoeffBundle, duality_swap, reflection_bundle
from .stack import (CODATA2018, FieldPoint, Layer, PhysicalConstants, Transition, WireStack,
                    eta_tilde, paper_stack, rel_permittivity, skin_depth, vacuum_stack)
from .sweep import PRESETS, SweepSpec, fit_loglog_slope, run_sweep

__version__ = "0.1.0"
