"""Amplitude checks against closed forms and frozen direct integrations.

The frozen complex values below were produced by integrating the
stationary equation right-to-left with an adaptive RK (DOP853,
rtol=atol=1e-13) and decomposing the solution into plane waves, a path
that shares no code with the transfer-matrix implementation.
"""

import numpy as np
import pytest

from decaypovm.errors import ValidationError
from decaypovm.potential import (
    DeltaSpike,
    PotentialSpec,
    Segment,
    make_delta_barrier,
    make_square_barrier,
)
from decaypovm.scattering import (
    amplitudes,
    closed_form_delta,
    closed_form_square,
    dirichlet_modes,
    segment_matrices,
    theta_grid,
)

DELTA = make_delta_barrier(1.0, 5.0)
SQUARE = make_square_barrier(1.0, 1.0, 10.0)
STACK = PotentialSpec(
    a=0.5,
    b=2.5,
    mass=1.3,
    segments=(Segment(0.5, 1.2, 6.0), Segment(1.2, 2.5, 1.5)),
    deltas=(DeltaSpike(0.9, 2.0), DeltaSpike(2.5, 1.0)),
)
KGRID = np.geomspace(0.05, 40.0, 60)


def test_delta_matches_closed_form():
    got = amplitudes(DELTA, KGRID)
    ref = closed_form_delta(1.0, 5.0, KGRID)
    for name in ("T", "R", "Rp", "g"):
        np.testing.assert_allclose(
            getattr(got, name), getattr(ref, name), rtol=0, atol=1e-12
        )
    np.testing.assert_allclose(got.log_abs_T, ref.log_abs_T, atol=1e-12)


def test_square_matches_closed_form():
    ks = np.geomspace(0.1, 30.0, 80)  # spans tunneling and above-barrier
    got = amplitudes(SQUARE, ks)
    ref = closed_form_square(1.0, 1.0, 10.0, ks)
    for name in ("T", "R", "Rp"):
        np.testing.assert_allclose(
            getattr(got, name), getattr(ref, name), rtol=0, atol=1e-12
        )
    np.testing.assert_allclose(got.log_abs_T, ref.log_abs_T, atol=1e-10)


def test_square_frozen_integration_values():
    sd = amplitudes(SQUARE, 1.0)
    assert complex(sd.T) == pytest.approx(
        -0.005818722190592218 - 0.009515227601682564j, abs=1e-10
    )
    assert complex(sd.R) == pytest.approx(
        0.7709195456373523 - 0.6368348742570993j, abs=1e-10
    )
    sd6 = amplitudes(SQUARE, 6.0)
    assert complex(sd6.T) == pytest.approx(
        -0.36248136215341037 - 0.882136451408256j, abs=1e-10
    )
    assert complex(sd6.R) == pytest.approx(
        0.09783897176973363 - 0.28437664951837877j, abs=1e-10
    )


def test_mixed_stack_frozen_integration_values():
    sd = amplitudes(STACK, 1.9)
    assert complex(sd.T) == pytest.approx(
        -0.007182105498054827 + 0.01587149352970211j, abs=1e-10
    )
    assert complex(sd.R) == pytest.approx(
        0.9628476954130435 - 0.269482519825577j, abs=1e-10
    )
    assert complex(sd.Rp) == pytest.approx(
        0.4331067061887302 + 0.9011742862000116j, abs=1e-10
    )


@pytest.mark.parametrize("spec", [DELTA, SQUARE, STACK], ids=["delta", "square", "stack"])
def test_invariants_on_grid(spec):
    sd = amplitudes(spec, KGRID)
    np.testing.assert_allclose(
        np.abs(sd.T) ** 2 + np.abs(sd.R) ** 2, 1.0, atol=1e-12
    )
    np.testing.assert_allclose(
        sd.T * np.conj(sd.R) + np.conj(sd.T) * sd.Rp, 0.0, atol=1e-12
    )
    assert not np.any(sd.resonant)
    phase = -(sd.Rp - sd.T**2 / (1.0 + sd.R))
    np.testing.assert_allclose(np.abs(phase), 1.0, atol=1e-10)
    np.testing.assert_allclose(np.exp(1j * sd.theta), phase, atol=1e-10)


def test_segment_matrices_are_unimodular():
    for m in segment_matrices(STACK, KGRID):
        det = m[0][0] * m[1][1] - m[0][1] * m[1][0]
        np.testing.assert_allclose(det, 1.0, atol=1e-12)


def test_transmission_is_direction_independent():
    # genuine check: the mirrored stack is a different potential
    for k in (0.7, 1.9, 3.3):
        sd = amplitudes(STACK, k)
        sm = amplitudes(STACK.mirrored(), k)
        assert complex(sd.T) == pytest.approx(complex(sm.T), abs=1e-13)
        assert complex(sd.Rp) == pytest.approx(
            complex(sm.R) * np.exp(-2j * k * (STACK.a + STACK.b)), abs=1e-12
        )


def test_free_particle():
    sd = amplitudes(PotentialSpec(a=1.0, b=1.0), KGRID)
    np.testing.assert_allclose(sd.T, 1.0, atol=1e-13)
    np.testing.assert_allclose(sd.R, 0.0, atol=1e-13)
    np.testing.assert_allclose(sd.theta, 0.0, atol=1e-12)
    np.testing.assert_allclose(sd.g, 1.0, atol=1e-13)


def test_opaque_barrier_log_magnitude():
    # gamma*d ~ 872: |T| underflows but its log must stay exact
    spec = make_square_barrier(1.0, 200.0, 10.0)
    sd = amplitudes(spec, np.array([1.0]))
    ref = closed_form_square(1.0, 200.0, 10.0, np.array([1.0]))
    assert sd.log_abs_T[0] == pytest.approx(-871.9170071309857, rel=1e-12)
    assert ref.log_abs_T[0] == pytest.approx(-871.9170071309857, rel=1e-12)
    np.testing.assert_allclose(np.abs(sd.R), 1.0, atol=1e-10)
    assert np.isfinite(sd.g).all()


def test_complex_wavenumber_ray():
    u = np.linspace(0.05, 3.0, 20)
    kc = np.exp(-1j * np.pi / 4) * u
    sd = amplitudes(DELTA, kc)
    ik = 1j * kc
    np.testing.assert_allclose(sd.T, ik / (ik - 5.0), rtol=1e-12)
    np.testing.assert_allclose(sd.R, np.exp(2j * kc) * 5.0 / (ik - 5.0), rtol=1e-12)
    np.testing.assert_allclose(sd.g, sd.T / (1.0 + sd.R), rtol=1e-10)


def test_threshold_slope_of_log_T():
    kt = np.geomspace(1e-4, 1e-2, 20)
    for spec in (SQUARE, DELTA):
        sd = amplitudes(spec, kt)
        slope = np.polyfit(np.log(kt), sd.log_abs_T, 1)[0]
        assert slope == pytest.approx(1.0, abs=0.01)


def test_exact_segment_threshold_is_regular():
    k_th = np.sqrt(20.0)  # k^2 = 2 m V0 for the square barrier
    sd = amplitudes(SQUARE, k_th)
    ref = closed_form_square(1.0, 1.0, 10.0, k_th)
    assert np.isfinite(complex(sd.T))
    assert complex(sd.T) == pytest.approx(complex(ref.T), abs=1e-12)
    expected = np.exp(-1j * k_th) * 2 * k_th / (2 * k_th - 1j * k_th**2)
    assert complex(sd.T) == pytest.approx(complex(expected), abs=1e-12)


def test_embedded_delta_equals_shifted_closed_form():
    spec = PotentialSpec(
        a=1.0, b=3.0, segments=(Segment(1.0, 3.0, 0.0),), deltas=(DeltaSpike(2.0, 4.0),)
    )
    got = amplitudes(spec, KGRID)
    ref = closed_form_delta(2.0, 4.0, KGRID)
    np.testing.assert_allclose(got.T, ref.T, atol=1e-12)
    np.testing.assert_allclose(got.R, ref.R, atol=1e-12)


def test_nonpositive_k_rejected():
    with pytest.raises(ValidationError):
        amplitudes(DELTA, 0.0)
    with pytest.raises(ValidationError):
        amplitudes(DELTA, np.array([1.0, -2.0]))
    with pytest.raises(ValidationError):
        closed_form_delta(1.0, 5.0, -1.0)
    with pytest.raises(ValidationError):
        closed_form_square(1.0, 1.0, 10.0, 0.0)


def test_theta_grid_is_continuous():
    ks = np.linspace(0.1, 30.0, 4000)
    th = theta_grid(DELTA, ks)
    assert np.all(np.isfinite(th))
    assert np.max(np.abs(np.diff(th))) < 1.0  # no residual 2 pi branch jumps
    # the square barrier has a genuine fast swing near k ~ 2.54 where
    # |1 + R| dips to ~1e-3; a fine grid must still walk through it
    kf = np.linspace(2.45, 2.65, 3000)
    thf = theta_grid(SQUARE, kf)
    assert np.all(np.isfinite(thf))
    assert np.max(np.abs(np.diff(thf))) < 1.0
    sd = amplitudes(SQUARE, kf)
    np.testing.assert_allclose(
        np.exp(1j * thf), -(sd.Rp - sd.T**2 / (1.0 + sd.R)), atol=1e-9
    )


def test_dirichlet_modes_frozen():
    kn, dn = dirichlet_modes(DELTA, 100.0, [5, 50])
    assert kn[0] == pytest.approx(0.15852062930257366, rel=1e-12)
    assert kn[1] == pytest.approx(1.5850715421489536, rel=1e-12)
    assert complex(dn[1]) == pytest.approx(
        0.13997231240193214 + 0.020192864107300746j, abs=1e-12
    )
    # quantization residual
    for n, k in zip([5, 50], kn):
        th = float(amplitudes(DELTA, k).theta)
        assert abs(k - n * np.pi / 100.0 + th / 200.0) < 1e-12
    np.testing.assert_allclose(np.abs(dn), np.sqrt(2.0 / 100.0), atol=1e-12)


def test_dirichlet_modes_validation():
    with pytest.raises(ValidationError):
        dirichlet_modes(DELTA, 5.0, [1])
    with pytest.raises(ValidationError):
        dirichlet_modes(DELTA, 100.0, [0])
