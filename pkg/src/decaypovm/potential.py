"""Compactly supported 1D barrier potentials on the half line.

A barrier lives on [a, b] with 0 < a <= b and consists of piecewise
constant segments that tile [a, b] exactly, plus optional attractive-free
delta spikes (strength kappa > 0) located inside [a, b]. Outside [a, b]
the potential is exactly zero. The wall at the origin is implicit
(Dirichlet boundary) and never part of the spec.

Specs serialize to JSON and round-trip bit-exactly (Python float repr).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .errors import ValidationError

__all__ = [
    "Segment",
    "DeltaSpike",
    "PotentialSpec",
    "parse_potential",
    "serialize",
    "make_square_barrier",
    "make_delta_barrier",
]


@dataclass(frozen=True)
class Segment:
    """Constant potential V over [x0, x1)."""

    x0: float
    x1: float
    V: float


@dataclass(frozen=True)
class DeltaSpike:
    """Point interaction (kappa/mass) * delta(x - position), kappa > 0."""

    x: float
    kappa: float


@dataclass(frozen=True)
class PotentialSpec:
    """Validated barrier description; immutable once constructed."""

    a: float
    b: float
    mass: float = 1.0
    segments: tuple[Segment, ...] = field(default_factory=tuple)
    deltas: tuple[DeltaSpike, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        object.__setattr__(self, "segments", tuple(sorted(self.segments, key=lambda s: s.x0)))
        object.__setattr__(self, "deltas", tuple(sorted(self.deltas, key=lambda d: d.x)))
        if not (self.mass > 0.0) or not np.isfinite(self.mass):
            raise ValidationError(f"mass must be positive and finite, got {self.mass}")
        if not (0.0 < self.a) or not np.isfinite(self.a):
            raise ValidationError(f"barrier start a must satisfy 0 < a, got {self.a}")
        if not np.isfinite(self.b) or self.b < self.a:
            raise ValidationError(f"barrier end b must satisfy b >= a, got a={self.a}, b={self.b}")
        if self.b == self.a:
            if self.segments:
                raise ValidationError("b == a admits no segments (zero-width support)")
        else:
            if not self.segments:
                raise ValidationError("b > a requires segments tiling [a, b]")
            if self.segments[0].x0 != self.a or self.segments[-1].x1 != self.b:
                raise ValidationError("segments must start at a and end at b exactly")
            for left, right in zip(self.segments, self.segments[1:]):
                if left.x1 != right.x0:
                    raise ValidationError(
                        f"segments must tile [a, b] without gaps or overlap, "
                        f"found boundary {left.x1} != {right.x0}"
                    )
        for seg in self.segments:
            if not (seg.x1 > seg.x0):
                raise ValidationError(f"segment needs x1 > x0, got [{seg.x0}, {seg.x1}]")
            if not (seg.V >= 0.0) or not np.isfinite(seg.V):
                raise ValidationError(f"segment potential must be >= 0, got {seg.V}")
        for spike in self.deltas:
            if not (self.a <= spike.x <= self.b):
                raise ValidationError(f"delta at {spike.x} lies outside [{self.a}, {self.b}]")
            if not (spike.kappa > 0.0) or not np.isfinite(spike.kappa):
                raise ValidationError(f"delta strength must be positive, got {spike.kappa}")
        xs = [spike.x for spike in self.deltas]
        if len(set(xs)) != len(xs):
            raise ValidationError("coincident delta spikes are ambiguous; merge their strengths")

    @property
    def d(self) -> float:
        """Barrier width b - a."""
        return self.b - self.a

    @property
    def v_max(self) -> float:
        return max((seg.V for seg in self.segments), default=0.0)

    @property
    def is_free(self) -> bool:
        return not self.deltas and all(seg.V == 0.0 for seg in self.segments)

    def value(self, r) -> np.ndarray:
        """Piecewise value V(r); exactly 0 outside [a, b]. Ignores deltas."""
        shape = np.shape(r)
        rr = np.atleast_1d(np.asarray(r, dtype=float))
        out = np.zeros_like(rr)
        if self.segments:
            edges = np.array([seg.x0 for seg in self.segments] + [self.b])
            vals = np.array([seg.V for seg in self.segments])
            idx = np.searchsorted(edges, rr, side="right") - 1
            inside = (idx >= 0) & (idx < len(vals))
            out[inside] = vals[idx[inside]]
            out[rr == self.b] = vals[-1]
            out[(rr < self.a) | (rr > self.b)] = 0.0
        return out.reshape(shape)

    def is_symmetric(self, rtol: float = 1e-12) -> bool:
        """True when the barrier is mirror symmetric about (a + b) / 2."""
        c = 0.5 * (self.a + self.b)
        for seg, mir in zip(self.segments, reversed(self.segments)):
            if not np.isclose(seg.x0 - self.a, self.b - mir.x1, rtol=rtol, atol=1e-15):
                return False
            if not np.isclose(seg.V, mir.V, rtol=rtol, atol=0.0):
                return False
        for spike, mir in zip(self.deltas, reversed(self.deltas)):
            if not np.isclose(spike.x - c, c - mir.x, rtol=rtol, atol=1e-12 * max(1.0, c)):
                return False
            if not np.isclose(spike.kappa, mir.kappa, rtol=rtol, atol=0.0):
                return False
        return True

    def mirrored(self) -> "PotentialSpec":
        """Reflection about the midpoint of [a, b]; same support."""
        c = self.a + self.b
        segs = tuple(Segment(c - s.x1, c - s.x0, s.V) for s in reversed(self.segments))
        spikes = tuple(DeltaSpike(c - sp.x, sp.kappa) for sp in reversed(self.deltas))
        return PotentialSpec(self.a, self.b, self.mass, segs, spikes)

    def to_dict(self) -> dict:
        return {
            "a": self.a,
            "b": self.b,
            "mass": self.mass,
            "segments": [{"x0": s.x0, "x1": s.x1, "V": s.V} for s in self.segments],
            "deltas": [{"x": sp.x, "kappa": sp.kappa} for sp in self.deltas],
        }


def parse_potential(source) -> PotentialSpec:
    """Build a PotentialSpec from a JSON string or an already-parsed dict."""
    if isinstance(source, str):
        try:
            data = json.loads(source)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"potential JSON does not parse: {exc}") from exc
    elif isinstance(source, dict):
        data = source
    else:
        raise ValidationError(f"cannot parse potential from {type(source).__name__}")
    if not isinstance(data, dict):
        raise ValidationError("potential JSON must be an object")
    unknown = set(data) - {"a", "b", "mass", "segments", "deltas"}
    if unknown:
        raise ValidationError(f"unknown potential keys: {sorted(unknown)}")
    try:
        a = float(data["a"])
        b = float(data["b"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"potential needs numeric 'a' and 'b': {exc}") from exc
    mass = float(data.get("mass", 1.0))
    try:
        for s in data.get("segments", []):
            if set(s) != {"x0", "x1", "V"}:
                raise ValidationError(f"segment entries need exactly x0, x1, V: {sorted(s)}")
        for d in data.get("deltas", []):
            if set(d) != {"x", "kappa"}:
                raise ValidationError(f"delta entries need exactly x, kappa: {sorted(d)}")
        segments = tuple(
            Segment(float(s["x0"]), float(s["x1"]), float(s["V"]))
            for s in data.get("segments", [])
        )
        deltas = tuple(
            DeltaSpike(float(d["x"]), float(d["kappa"])) for d in data.get("deltas", [])
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed segment or delta entry: {exc}") from exc
    return PotentialSpec(a=a, b=b, mass=mass, segments=segments, deltas=deltas)


def serialize(spec: PotentialSpec) -> str:
    """JSON text for the spec; floats keep full precision (repr round trip)."""
    return json.dumps(spec.to_dict(), indent=2, sort_keys=True)


def make_square_barrier(a: float, d: float, V0: float, mass: float = 1.0) -> PotentialSpec:
    """Single square barrier of height V0 on [a, a + d]."""
    return PotentialSpec(a=a, b=a + d, mass=mass, segments=(Segment(a, a + d, V0),))


def make_delta_barrier(a: float, kappa: float, mass: float = 1.0) -> PotentialSpec:
    """Single delta spike of strength kappa at r = a (zero-width support)."""
    return PotentialSpec(a=a, b=a, mass=mass, deltas=(DeltaSpike(a, kappa),))
