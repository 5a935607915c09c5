"""Initial wavepacket and detection-run configuration.

The prepared state is one or two Gaussian momentum components confined
to the inner region, centered at a/2 with position spread delta and
momentum spread sigma = 1/(sqrt(2) delta). Validation enforces the
narrow-packet premise (sigma well below every carrier) and warns when
the packet is too wide for the wall at the origin to be negligible.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .potential import PotentialSpec

__all__ = [
    "StateComponent",
    "InitialState",
    "DetectionConfig",
    "make_state",
    "default_time_grid",
]

_SQRT_HALF = 1.0 / math.sqrt(2.0)


@dataclass(frozen=True)
class StateComponent:
    k: float
    weight: complex


@dataclass(frozen=True)
class InitialState:
    """One- or two-component Gaussian packet centered at a/2."""

    components: tuple[StateComponent, ...]
    sigma: float
    center: float

    def __post_init__(self):
        if not (np.isfinite(self.sigma) and self.sigma > 0.0):
            raise ValidationError("sigma must be positive and finite")
        if not (np.isfinite(self.center) and self.center > 0.0):
            raise ValidationError("packet center must be positive and finite")
        if len(self.components) not in (1, 2):
            raise ValidationError("state needs one or two components")
        for comp in self.components:
            if not (np.isfinite(comp.k) and comp.k > 0.0):
                raise ValidationError(f"component carrier k={comp.k} must be positive")
            if self.sigma / comp.k >= 0.2:
                raise ValidationError(
                    f"sigma/k = {self.sigma / comp.k:.3f} for k={comp.k}; "
                    "the narrow-packet construction needs sigma/k < 0.2"
                )
            if self.sigma / comp.k > 0.1:
                warnings.warn(
                    f"sigma/k = {self.sigma / comp.k:.3f} for k={comp.k} is above 0.1; "
                    "expansion accuracy degrades",
                    stacklevel=2,
                )
        if len(self.components) == 2:
            q = self.components[0].k - self.components[1].k
            if abs(q) <= 3.0 * self.sigma:
                raise ValidationError(
                    f"|k1-k2| = {abs(q)} must exceed 3 sigma = {3.0 * self.sigma} "
                    "for the two-component formulas to apply"
                )
        # wall leakage: packet mass beyond the origin ~ e^{-(a sigma)^2/8}
        a = 2.0 * self.center
        leak = math.exp(-((a * self.sigma) ** 2) / 8.0)
        if leak > 1e-6:
            warnings.warn(
                f"boundary leakage e^(-(a sigma)^2/8) = {leak:.2e} exceeds 1e-6; "
                "the confined-state construction is only approximate here",
                stacklevel=2,
            )

    @property
    def delta(self) -> float:
        """Position spread: sigma = 1/(sqrt(2) delta)."""
        return 1.0 / (math.sqrt(2.0) * self.sigma)

    @property
    def k0(self) -> float:
        return self.components[0].k

    @property
    def q(self) -> float:
        """Carrier difference k1 - k2 (0 for a single component)."""
        if len(self.components) == 1:
            return 0.0
        return self.components[0].k - self.components[1].k


def make_state(spec: PotentialSpec, ks, sigma: float, weights=None) -> InitialState:
    """Build the packet for a barrier: centered at a/2, carriers ks.

    ks is a number or a pair; two-component weights default to
    1/sqrt(2) each.
    """
    karr = np.atleast_1d(np.asarray(ks, dtype=float))
    if weights is None:
        warr = [1.0] if len(karr) == 1 else [_SQRT_HALF, _SQRT_HALF]
    else:
        warr = list(np.atleast_1d(weights))
    if len(warr) != len(karr):
        raise ValidationError("weights and carriers must pair up")
    comps = tuple(StateComponent(float(k), complex(w)) for k, w in zip(karr, warr))
    return InitialState(components=comps, sigma=float(sigma), center=spec.a / 2.0)


@dataclass(frozen=True)
class DetectionConfig:
    """Detector placement, time grid, and series/quadrature controls."""

    L: float
    t_grid: np.ndarray
    series_tail_eps: float = 1e-12
    n_cap: int = 10_000
    window_sigmas: float = 8.0
    base_nodes: int = 2049

    def __post_init__(self):
        t = np.asarray(self.t_grid, dtype=float)
        object.__setattr__(self, "t_grid", t)
        if not (np.isfinite(self.L) and self.L > 0.0):
            raise ValidationError("detector distance L must be positive and finite")
        if t.ndim != 1 or len(t) == 0:
            raise ValidationError("t_grid must be a nonempty 1-d array")
        if np.any(t <= 0.0) or not np.all(np.isfinite(t)):
            raise ValidationError("t_grid must be positive and finite")
        if len(t) > 1 and np.any(np.diff(t) <= 0.0):
            raise ValidationError("t_grid must be strictly increasing")
        if not (0.0 < self.series_tail_eps < 1.0):
            raise ValidationError("series_tail_eps must sit in (0, 1)")
        if self.n_cap < 1:
            raise ValidationError("n_cap must be at least 1")
        if self.window_sigmas <= 0.0 or self.base_nodes < 33:
            raise ValidationError("quadrature window and node base are too small")

    def check_geometry(self, spec: PotentialSpec) -> None:
        if self.L < 10.0 * spec.b:
            raise ValidationError(
                f"detector distance L={self.L} must be at least 10*b = {10.0 * spec.b}"
            )


_GRID_CAP = 20_001


def default_time_grid(
    spec: PotentialSpec,
    state: InitialState,
    L: float,
    gamma: float,
    t0: float,
    beta: float,
) -> np.ndarray:
    """Grid [0.8 t0, t0 + max(30/Gamma, 50 M beta/k0)], ~10 samples per peak width.

    The sample count is capped at 20001; a longer span keeps the cap and
    warns, trading peak resolution for coverage.
    """
    mass = spec.mass
    k0 = state.k0
    spacing_budget = 50.0 * mass * max(beta, 1e-300) / k0
    horizon = max(30.0 / gamma if gamma > 0.0 else 0.0, spacing_budget)
    t_lo = 0.8 * t0
    t_hi = t0 + horizon
    peak_width = mass / (2.0 * k0 * state.sigma)
    n = int(math.ceil((t_hi - t_lo) / (peak_width / 10.0))) + 1
    if n > _GRID_CAP:
        warnings.warn(
            f"default time grid capped at {_GRID_CAP} samples "
            f"({n} needed for 10 per peak width)",
            stacklevel=2,
        )
        n = _GRID_CAP
    n = max(n, 2)
    return np.linspace(t_lo, t_hi, n)
