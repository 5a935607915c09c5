import json

import numpy as np
import pytest

from decaypovm.errors import ValidationError
from decaypovm.potential import (
    DeltaSpike,
    PotentialSpec,
    Segment,
    make_delta_barrier,
    make_square_barrier,
    parse_potential,
    serialize,
)


def test_segments_and_deltas_are_sorted():
    spec = PotentialSpec(
        a=1.0,
        b=4.0,
        segments=(Segment(2.0, 4.0, 1.0), Segment(1.0, 2.0, 3.0)),
        deltas=(DeltaSpike(3.5, 1.0), DeltaSpike(1.5, 2.0)),
    )
    assert [s.x0 for s in spec.segments] == [1.0, 2.0]
    assert [d.x for d in spec.deltas] == [1.5, 3.5]


def test_free_particle_is_constructible():
    spec = PotentialSpec(a=1.0, b=1.0)
    assert spec.is_free
    assert spec.d == 0.0
    assert spec.value(1.0) == 0.0


def test_pure_delta_support_point():
    spec = PotentialSpec(a=2.0, b=2.0, deltas=(DeltaSpike(2.0, 5.0),))
    assert not spec.is_free
    assert spec.v_max == 0.0


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(a=-1.0, b=2.0, segments=(Segment(-1.0, 2.0, 1.0),)),
        dict(a=0.0, b=2.0, segments=(Segment(0.0, 2.0, 1.0),)),
        dict(a=1.0, b=0.5),
        dict(a=1.0, b=2.0),  # no segments on a wide support
        dict(a=1.0, b=1.0, segments=(Segment(1.0, 1.0, 1.0),)),
        dict(a=1.0, b=2.0, mass=0.0, segments=(Segment(1.0, 2.0, 1.0),)),
        dict(a=1.0, b=2.0, mass=-2.0, segments=(Segment(1.0, 2.0, 1.0),)),
        dict(a=1.0, b=2.0, segments=(Segment(1.0, 2.0, -0.5),)),
        dict(a=1.0, b=2.0, segments=(Segment(1.0, 1.5, 1.0),)),  # gap at top
        dict(a=1.0, b=2.0, segments=(Segment(1.2, 2.0, 1.0),)),  # gap at bottom
        dict(a=1.0, b=3.0, segments=(Segment(1.0, 2.1, 1.0), Segment(2.0, 3.0, 2.0))),
        dict(a=1.0, b=3.0, segments=(Segment(1.0, 1.9, 1.0), Segment(2.0, 3.0, 2.0))),
        dict(a=1.0, b=2.0, segments=(Segment(1.0, 2.0, 1.0),), deltas=(DeltaSpike(0.5, 1.0),)),
        dict(a=1.0, b=2.0, segments=(Segment(1.0, 2.0, 1.0),), deltas=(DeltaSpike(2.5, 1.0),)),
        dict(a=1.0, b=2.0, segments=(Segment(1.0, 2.0, 1.0),), deltas=(DeltaSpike(1.5, 0.0),)),
        dict(a=1.0, b=2.0, segments=(Segment(1.0, 2.0, 1.0),), deltas=(DeltaSpike(1.5, -1.0),)),
        dict(
            a=1.0,
            b=2.0,
            segments=(Segment(1.0, 2.0, 1.0),),
            deltas=(DeltaSpike(1.5, 1.0), DeltaSpike(1.5, 2.0)),
        ),
    ],
)
def test_invalid_specs_rejected(kwargs):
    with pytest.raises(ValidationError):
        PotentialSpec(**kwargs)


def test_value_piecewise():
    spec = PotentialSpec(
        a=1.0,
        b=3.0,
        segments=(Segment(1.0, 2.0, 5.0), Segment(2.0, 3.0, 7.0)),
        deltas=(DeltaSpike(1.5, 4.0),),
    )
    r = np.array([0.0, 0.999, 1.0, 1.5, 1.9999, 2.0, 2.5, 3.0, 3.0001, 10.0])
    v = spec.value(r)
    assert v.tolist() == [0.0, 0.0, 5.0, 5.0, 5.0, 7.0, 7.0, 7.0, 0.0, 0.0]
    assert spec.value(2.0) == 7.0  # right-continuous at interior cuts
    assert spec.value(3.0) == 7.0  # top edge belongs to the last segment
    assert np.shape(spec.value(1.5)) == ()
    assert spec.v_max == 7.0
    assert spec.d == 2.0


def test_roundtrip_is_bit_exact():
    spec = PotentialSpec(
        a=0.1,
        b=0.1 + 1.0 / 3.0,
        mass=1.7,
        segments=(Segment(0.1, 0.1 + 1.0 / 3.0, 9.81),),
        deltas=(DeltaSpike(0.2, 2.0 / 7.0),),
    )
    text = serialize(spec)
    back = parse_potential(text)
    assert back == spec
    assert serialize(back) == text
    # floats survive exactly, not just approximately
    assert back.b == spec.b
    assert back.deltas[0].kappa == 2.0 / 7.0


def test_parse_accepts_dict_and_rejects_unknown_keys():
    doc = {
        "a": 1.0,
        "b": 2.0,
        "mass": 1.0,
        "segments": [{"x0": 1.0, "x1": 2.0, "V": 3.0}],
        "deltas": [],
    }
    spec = parse_potential(doc)
    assert spec.segments[0].V == 3.0
    with pytest.raises(ValidationError):
        parse_potential({**doc, "height": 1.0})
    with pytest.raises(ValidationError):
        parse_potential({**doc, "segments": [{"x0": 1.0, "x1": 2.0, "V": 3.0, "tag": 1}]})
    with pytest.raises(ValidationError):
        parse_potential("{not json")
    with pytest.raises(ValidationError):
        parse_potential(json.dumps({"a": 1.0}))


def test_symmetry_and_mirroring():
    sym = make_square_barrier(1.0, 2.0, 4.0)
    assert sym.is_symmetric()
    asym = PotentialSpec(
        a=1.0,
        b=3.0,
        segments=(Segment(1.0, 2.0, 1.0), Segment(2.0, 3.0, 2.0)),
    )
    assert not asym.is_symmetric()
    mir = asym.mirrored()
    assert mir.a == asym.a and mir.b == asym.b
    assert mir.segments[0].V == 2.0 and mir.segments[1].V == 1.0
    assert mir.mirrored() == asym
    spiked = PotentialSpec(
        a=1.0, b=3.0, segments=(Segment(1.0, 3.0, 1.0),), deltas=(DeltaSpike(1.5, 2.0),)
    )
    assert spiked.mirrored().deltas[0].x == 2.5
    assert not spiked.is_symmetric()
    sym_spike = PotentialSpec(a=1.0, b=1.0, deltas=(DeltaSpike(1.0, 3.0),))
    assert sym_spike.is_symmetric()


def test_factories():
    sq = make_square_barrier(2.0, 0.62, 9.0, mass=1.5)
    assert sq.a == 2.0 and sq.b == 2.62 and sq.mass == 1.5
    assert sq.value(2.3) == 9.0
    dl = make_delta_barrier(1.0, 5.0)
    assert dl.a == dl.b == 1.0
    assert dl.deltas[0].kappa == 5.0
