import math
from dataclasses import replace

import mpmath as mp
import numpy as np
import pytest

from spinflip import (FieldPoint, Layer, QuadPolicy, Transition, WireStack, gamma_free, gamma_wire,
                      integrand_xxyy, mode_integral, paper_stack, thermal_occupation, total_rate,
                      vacuum_stack)
from spinflip.errors import ConvergenceError, InvalidArgumentError, TruncationError
from spinflip.quadrature import integrate
from spinflip.rate import _Geometry, _integrand_block, mode_integrals
from spinflip.stack import CODATA2018

import oracles as O

F = 560e3
T300 = Transition(F, 300.0)
PAPER = paper_stack()
R50 = FieldPoint(50e-6)

# (n=1, q=2) at r = 50 um on the Cu/Al wire, from the 50-digit transcription
GOLDEN_INTEGRAND = 11542514409.428412 + 20370529835.09719j
# converged lifetime of the reference configuration, seconds
GOLDEN_LIFETIME = 11.3365876226


def rel(a, b):
    return abs(a - b) / abs(b)


def internal(stack=PAPER, point=R50, transition=T300):
    return _Geometry.build(stack, transition, point, CODATA2018)


# -- closed-form pieces -----------------------------------------------------------

def test_gamma_free():
    g = gamma_free(Transition(F))
    assert g == pytest.approx(8.7e-26, rel=0.02)
    assert gamma_free(Transition(F, angular_factor_S2=0.25)) == pytest.approx(2 * g, rel=1e-14)
    assert gamma_free(Transition(2 * F)) == pytest.approx(8 * g, rel=1e-14)


def test_thermal_occupation():
    assert thermal_occupation(Transition(F, 0.0)) == 0.0
    n300 = thermal_occupation(T300)
    assert n300 == pytest.approx(1.116e7, rel=0.005)
    assert thermal_occupation(Transition(F, 380.0)) / n300 == pytest.approx(380 / 300, rel=1e-3)


# -- integrand ----------------------------------------------------------------------

def test_integrand_golden():
    assert rel(integrand_xxyy(1, 2.0, PAPER, T300, R50), GOLDEN_INTEGRAND) < 1e-12


@pytest.mark.parametrize("n,qr", [(0, 0.5), (1, 2.0), (3, 0.4), (7, 1.5)])
@pytest.mark.parametrize("r_um,a2_um", [(0.2, 1.0), (50.0, 240.0), (50.0, 1e4)])
def test_integrand_against_oracles(n, qr, r_um, a2_um):
    stack = paper_stack(a1=a2_um * 185 / 240 * 1e-6, a2=a2_um * 1e-6)
    point = FieldPoint(r_um * 1e-6)
    g = internal(stack, point)
    q = qr / g.r
    got = integrand_xxyy(n, q, stack, T300, point)
    args = (n, mp.mpf(q), [mp.mpc(e) for e in g.eps], [mp.mpc(m) for m in g.mu],
            mp.mpf(g.a1), mp.mpf(g.a2), mp.mpf(g.rho))
    # a thick coating makes the 8x8 boundary system very lopsided
    with mp.workdps(60 if a2_um < 1e3 else 200):
        ref_closed = complex(O.appendix_integrand(*args))
        ref_bc = complex(O.bc_integrand(*args))
    # the rate only uses the real part; it is what the quadrature controls
    assert rel(got.real, ref_closed.real) < 1e-9
    assert rel(got.real, ref_bc.real) < 1e-9
    assert rel(got, ref_closed) < 1e-9


def test_integrand_n0_has_no_cross_term():
    # with n = 0 only the radial (H')^2 part survives
    g = internal()
    with mp.workdps(50):
        r11, _, r22 = O.appendix_bundle(0, mp.mpf(3e4), [mp.mpc(e) for e in g.eps],
                                        [mp.mpc(m) for m in g.mu], mp.mpf(g.a1), mp.mpf(g.a2))
        e3 = O.eta(1, 1, mp.mpf(3e4))
        _, Hp = O.hankel1_pair(0, e3 * g.rho)
        ref = complex((r11 + mp.mpf(3e4) ** 2 * r22) * Hp ** 2)
    assert rel(integrand_xxyy(0, 3e4, PAPER, T300, R50), ref) < 1e-10


def test_integrand_vacuum_and_errors():
    assert integrand_xxyy(4, 2.5, vacuum_stack(), T300, R50) == 0
    with pytest.raises(InvalidArgumentError):
        integrand_xxyy(-1, 2.0, PAPER, T300, R50)
    with pytest.raises(InvalidArgumentError):
        integrand_xxyy(1, float("inf"), PAPER, T300, R50)


def test_integrand_at_unit_q_is_finite_limit():
    v = integrand_xxyy(2, 1.0, PAPER, T300, R50)
    lo = integrand_xxyy(2, 1 - 1e-6, PAPER, T300, R50)
    hi = integrand_xxyy(2, 1 + 1e-6, PAPER, T300, R50)
    assert np.isfinite(v)
    assert rel(v.real, 0.5 * (lo.real + hi.real)) < 1e-3
    assert integrand_xxyy(2, -1.0, PAPER, T300, R50) == v


# -- q integral ---------------------------------------------------------------------

def test_mode_integral_vacuum():
    m = mode_integral(0, vacuum_stack(), T300, R50)
    assert m.value == 0 and m.abs_error_estimate == 0


def test_folded_matches_two_sided():
    g = internal()
    Q = 2.0 ** 20
    half = np.concatenate([[0.0, 0.5], np.geomspace(1.0, Q, 21)])
    full = np.concatenate([-half[:0:-1], half])
    f = lambda q: _integrand_block(g, 0, 4, q)[0]
    one = integrate(f, 5, half, rtol=1e-10, atol=1e-12)
    two = integrate(f, 5, full, rtol=1e-10, atol=1e-12)
    tol = 2 * one.error + two.error + 1e-9 * np.abs(two.value.real)
    assert np.all(np.abs(2 * one.value.real - two.value.real) <= tol)


def test_block_integration_matches_single_orders():
    together = mode_integrals(8, 15, PAPER, T300, R50)
    for m in together[::3]:
        alone = mode_integral(m.n, PAPER, T300, R50)
        assert rel(m.value.real, alone.value.real) < 1e-7


def test_tolerance_halving_mode0():
    a = mode_integral(0, PAPER, T300, R50)
    b = mode_integral(0, PAPER, T300, R50, DEFAULT.halved())
    assert a.abs_error_estimate >= 0
    assert rel(a.value.real, b.value.real) < 1e-6


def test_convergence_error_carries_partial():
    with pytest.raises(ConvergenceError) as info:
        mode_integral(0, PAPER, T300, R50, QuadPolicy(rtol=1e-14, atol=1e-30, max_evaluations=200))
    assert info.value.partial and np.isfinite(info.value.partial[0].value)


# -- rates ----------------------------------------------------------------------------

DEFAULT = QuadPolicy()


def test_reference_lifetime():
    res = total_rate(PAPER, T300, R50)
    assert res.converged
    assert res.lifetime == pytest.approx(GOLDEN_LIFETIME, rel=1e-8)
    assert res.gamma_total == pytest.approx((res.gamma_free + res.gamma_wire) * (res.n_thermal + 1),
                                            rel=1e-12)
    assert res.lifetime == 1 / res.gamma_total


def test_tolerance_halving_total():
    a = total_rate(PAPER, T300, R50)
    b = total_rate(PAPER, T300, R50, DEFAULT.halved())
    assert abs(a.gamma_total - b.gamma_total) < a.abs_error_estimate


def test_vacuum_rates():
    res = total_rate(vacuum_stack(), Transition(F, 0.0), R50)
    assert res.gamma_wire == 0 and res.gamma_total == res.gamma_free
    hot = total_rate(vacuum_stack(), T300, R50)
    assert 6e17 <= hot.lifetime <= 1.6e18


def test_temperature_ratio():
    a = total_rate(PAPER, T300, R50)
    b = total_rate(PAPER, Transition(F, 380.0), R50)
    assert b.lifetime / a.lifetime == pytest.approx(300 / 380, rel=0.01)


def test_positive_and_decreasing_with_distance():
    rates = [gamma_wire(PAPER, T300, FieldPoint(r)).gamma_wire for r in (20e-6, 60e-6, 200e-6)]
    assert all(r > 0 for r in rates)
    assert rates[0] > rates[1] > rates[2]


def test_identical_media_independent_of_core_radius():
    rho = 2.7e-8
    vals = []
    for frac in (0.1, 0.5, 0.9):
        stack = WireStack(Layer(frac * 240e-6, resistivity=rho), Layer(240e-6, resistivity=rho))
        vals.append(gamma_wire(stack, T300, R50).gamma_wire)
    assert max(vals) - min(vals) < 1e-6 * vals[1]


def test_truncation_error():
    with pytest.raises(TruncationError) as info:
        gamma_wire(PAPER, T300, R50, QuadPolicy(n_max=3))
    p = info.value.partial
    assert p.modes_used == 4 and not p.converged and p.gamma_wire > 0


def test_policy_validation():
    with pytest.raises(InvalidArgumentError):
        QuadPolicy(rtol=0)
    with pytest.raises(InvalidArgumentError):
        QuadPolicy(n_max=-2)
    assert QuadPolicy().order_cap(240e-6, 50e-6) == 1000
    assert QuadPolicy().order_cap(1e-2, 50e-6) == math.ceil(15 * (1e-2 + 50e-6) / 50e-6)
    assert replace(QuadPolicy(), n_max=7).order_cap(1.0, 1e-9) == 7
