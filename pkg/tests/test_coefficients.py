"""Coefficient checks against the delta-barrier closed forms.

For a single spike of strength kappa at a the amplitudes are rational
in k, so every coefficient has an exact expression:

    lam  = kappa/(k^2+kappa^2)         w = 1/k - k/(k^2+kappa^2)
    s    = -k/(k^2+kappa^2)            beta = 2a + kappa/(k^2+kappa^2)
    d2 log T/dk2 = -1/k^2 - (kappa^2-k^2+2ik kappa)/(k^2+kappa^2)^2
    d2 log R/dk2 = (k^2-kappa^2-2ik kappa)/(k^2+kappa^2)^2
"""

import numpy as np
import pytest

from decaypovm.coefficients import (
    coefficients_at,
    crossing_time,
    curvatures_at,
    decay_rate,
    first_detection_time,
)
from decaypovm.errors import PreconditionError, ValidationError
from decaypovm.potential import (
    DeltaSpike,
    PotentialSpec,
    Segment,
    make_delta_barrier,
    make_square_barrier,
)
from decaypovm.scattering import amplitudes

DELTA = make_delta_barrier(1.0, 5.0)
SQUARE = make_square_barrier(1.0, 1.0, 10.0)


@pytest.mark.parametrize("k0", [0.3, 0.5, 1.0, 3.0])
def test_delta_coefficients_analytic(k0):
    kap = 5.0
    c = coefficients_at(DELTA, k0)
    den = k0 * k0 + kap * kap
    assert c.lam == pytest.approx(kap / den, rel=1e-8)
    assert c.w == pytest.approx(1.0 / k0 - k0 / den, rel=1e-8)
    assert c.s == pytest.approx(-k0 / den, rel=1e-8)
    assert c.beta == pytest.approx(2.0 + kap / den, rel=1e-8)
    assert c.xi == pytest.approx(0.5 / k0 + c.w, rel=1e-12)
    assert c.arg_R == pytest.approx(
        float(np.angle(np.exp(2j * k0) * kap / (1j * k0 - kap))), abs=1e-10
    )


@pytest.mark.parametrize("k0", [0.5, 1.5, 4.0])
def test_delta_curvatures_analytic(k0):
    kap = 5.0
    cur = curvatures_at(DELTA, k0)
    den2 = (k0 * k0 + kap * kap) ** 2
    ddR = (k0 * k0 - kap * kap - 2j * k0 * kap) / den2
    assert cur.ddlogR == pytest.approx(ddR, rel=1e-6)
    assert cur.ddlogT == pytest.approx(-1.0 / k0**2 + ddR, rel=1e-6)


def test_unitarity_identity_across_grid():
    for spec in (DELTA, SQUARE):
        for k0 in np.geomspace(0.2, 8.0, 25):
            c = coefficients_at(spec, float(k0))  # raises if identity breaks
            sd = amplitudes(spec, float(k0))
            r2 = abs(complex(sd.R)) ** 2
            t2 = abs(complex(sd.T)) ** 2
            if r2 > 1e-8:
                assert c.s * r2 == pytest.approx(-c.w * t2, rel=1e-6)
            if c.w > 0:
                assert c.xi > 0.5 / k0


def test_symmetric_barrier_round_trip_length():
    for k0 in (0.7, 1.3, 2.9):
        c = coefficients_at(SQUARE, k0)
        assert c.beta == pytest.approx(c.lam + 2.0 * SQUARE.a + SQUARE.d, rel=1e-8)


def test_square_reflection_phase_relation():
    # tunneling side: Arg R + pi/2 - Arg T - 2ka - kd = 0 (mod 2pi)
    for k0 in (0.5, 1.9, 3.7):
        sd = amplitudes(SQUARE, k0)
        lhs = np.angle(complex(sd.R))
        rhs = -0.5 * np.pi + np.angle(complex(sd.T)) + 2.0 * k0 * SQUARE.a + k0 * SQUARE.d
        assert abs((lhs - rhs + np.pi) % (2.0 * np.pi) - np.pi) < 1e-8


def test_threshold_exponents():
    assert coefficients_at(DELTA, 1.0).alpha == pytest.approx(1.0, abs=0.01)
    assert coefficients_at(SQUARE, 1.0).alpha == pytest.approx(1.0, abs=0.01)


def test_free_particle_coefficients():
    free = PotentialSpec(a=1.0, b=1.0)
    c = coefficients_at(free, 2.0)
    assert c.lam == 0.0 and c.w == 0.0 and c.beta == 0.0 and c.s == 0.0
    assert c.xi == pytest.approx(0.25)
    assert c.alpha == 0.0


def test_small_k_limits_of_delta_coefficients():
    c = coefficients_at(make_delta_barrier(1.0, 5.0), 0.002)
    assert c.beta == pytest.approx(2.0 + 1.0 / 5.0, rel=1e-6)
    assert c.w == pytest.approx(1.0 / 0.002, rel=1e-6)


def test_long_square_round_trip_saturates():
    mass = 1.0
    v0, k0, a = 2.0, 1.0, 1.0
    gam = np.sqrt(2.0 * mass * v0 - k0 * k0)
    for d in (5.0, 8.0):  # gamma d = 8.7 and 13.9
        spec = make_square_barrier(a, d, v0, mass=mass)
        c = coefficients_at(spec, k0)
        assert c.beta == pytest.approx(2.0 * (a + 1.0 / gam), rel=0.01)


def test_first_detection_time():
    free = coefficients_at(PotentialSpec(a=1.0, b=1.0), 2.0)
    assert first_detection_time(free, 50.0, 1.0) == pytest.approx(25.0)
    c = coefficients_at(DELTA, 0.5)
    t_100 = first_detection_time(c, 100.0, 1.0)
    t_200 = first_detection_time(c, 200.0, 1.0)
    assert t_100 == pytest.approx((100.0 + c.lam) / 0.5, rel=1e-12)
    assert t_200 - c.lam / 0.5 == pytest.approx(2.0 * (t_100 - c.lam / 0.5), rel=1e-12)
    with pytest.raises(ValidationError):
        first_detection_time(c, 0.0, 1.0)


def test_crossing_time():
    c = coefficients_at(DELTA, 0.5)
    # exactly lam/k0; the 1/(kappa k0) form is its small-k limit
    assert crossing_time(c, 0.0, 1.0, spec=DELTA) == pytest.approx(
        (5.0 / 25.25) / 0.5, rel=1e-8
    )
    assert crossing_time(c, 0.0, 1.0) == pytest.approx(1.0 / (5.0 * 0.5), rel=0.01)
    c_slow = coefficients_at(DELTA, 0.002)
    assert crossing_time(c_slow, 0.0, 1.0, spec=DELTA) == pytest.approx(
        1.0 / (5.0 * 0.002), rel=1e-6
    )
    free = coefficients_at(PotentialSpec(a=1.0, b=1.0), 2.0)
    assert crossing_time(free, 0.0, 1.0) == 0.0
    # saturation: widening a thick barrier does not change the traversal time
    gam = np.sqrt(3.0)
    times = [
        crossing_time(coefficients_at(make_square_barrier(1.0, d, 2.0), 1.0), d, 1.0)
        for d in (5.0, 8.0)
    ]
    assert times[0] == pytest.approx(2.0 / gam, rel=0.01)
    assert times[1] == pytest.approx(times[0], rel=0.01)
    asym = PotentialSpec(
        a=1.0, b=2.0, segments=(Segment(1.0, 1.5, 3.0), Segment(1.5, 2.0, 1.0))
    )
    with pytest.raises(ValidationError):
        crossing_time(coefficients_at(asym, 1.0), 1.0, 1.0, spec=asym)


def test_decay_rate_delta():
    t2 = 0.25 / 25.25
    beta = 2.0 + 5.0 / 25.25
    assert decay_rate(DELTA, 0.5) == pytest.approx(0.5 * t2 / beta, rel=1e-8)
    # the limiting-form evaluation quoted for this barrier
    assert decay_rate(DELTA, 0.5) == pytest.approx(2.2502e-3, rel=2e-3)


def test_carrier_guards():
    with pytest.raises(ValidationError):
        coefficients_at(DELTA, 0.0)
    with pytest.raises(ValidationError):
        coefficients_at(DELTA, -1.0)
    with pytest.raises(PreconditionError):
        coefficients_at(SQUARE, float(np.sqrt(20.0)))
