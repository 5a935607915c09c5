"""Initial-state construction and run-geometry validation."""

import math
import warnings

import numpy as np
import pytest

from decaypovm.errors import ValidationError
from decaypovm.potential import make_delta_barrier
from decaypovm.state import DetectionConfig, default_time_grid, make_state

SPEC = make_delta_barrier(110.0, 20.0)


def test_single_component_defaults():
    st = make_state(SPEC, 2.0, 0.1)
    assert len(st.components) == 1
    assert st.components[0].k == 2.0
    assert st.components[0].weight == 1.0
    assert st.k0 == 2.0
    assert st.center == pytest.approx(55.0)
    assert st.q == 0.0


def test_two_component_default_weights():
    st = make_state(SPEC, (1.35, 2.1), 0.05)
    ws = [c.weight for c in st.components]
    assert ws[0] == pytest.approx(1.0 / math.sqrt(2.0))
    assert ws[1] == pytest.approx(1.0 / math.sqrt(2.0))
    assert st.q == pytest.approx(1.35 - 2.1)


def test_complex_weights_kept():
    st = make_state(SPEC, (1.5, 2.5), 0.1, weights=[0.6, 0.8j])
    assert st.components[1].weight == 0.8j


def test_position_spread_relation():
    st = make_state(SPEC, 2.0, 0.1)
    assert st.delta == pytest.approx(1.0 / (math.sqrt(2.0) * 0.1))


@pytest.mark.parametrize("sigma", [0.0, -0.1])
def test_nonpositive_sigma_rejected(sigma):
    with pytest.raises(ValidationError):
        make_state(SPEC, 2.0, sigma)


def test_nonpositive_carrier_rejected():
    with pytest.raises(ValidationError):
        make_state(SPEC, -2.0, 0.1)


def test_leakage_warning_when_packet_does_not_fit():
    # a*sigma = 0.05 puts nearly all of the packet outside the well
    small = make_delta_barrier(1.0, 5.0)
    with pytest.warns(UserWarning, match="leakage"):
        make_state(small, 0.5, 0.05)


def test_geometry_floor_on_detector_distance():
    ok = DetectionConfig(L=1100.0, t_grid=np.linspace(0.0, 10.0, 11))
    ok.check_geometry(SPEC)
    near = DetectionConfig(L=1000.0, t_grid=np.linspace(0.0, 10.0, 11))
    with pytest.raises(ValidationError):
        near.check_geometry(SPEC)


def test_default_time_grid_brackets_first_arrival():
    st = make_state(SPEC, 2.0, 0.1)
    gamma, t0, beta = 9.0e-5, 550.0, 220.0
    t = default_time_grid(SPEC, st, 1100.0, gamma, t0, beta)
    assert t[0] == pytest.approx(0.8 * t0)
    assert t[-1] >= t0 + 30.0 / gamma - 1e-9
    # ~10 samples per peak width M/(2 k0 sigma), subject to the cap
    width = SPEC.mass / (2.0 * st.k0 * st.sigma)
    dt = np.diff(t)
    assert dt.max() <= width / 2.0 or len(t) == 20001


def test_default_time_grid_caps_sample_count():
    st = make_state(SPEC, 2.0, 0.1)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        t = default_time_grid(SPEC, st, 1100.0, 1e-7, 550.0, 220.0)
    assert len(t) <= 20001
