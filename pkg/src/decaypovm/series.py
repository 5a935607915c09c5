"""Result containers for detection and survival runs, plus fit helpers."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError, ValidationError

__all__ = [
    "ProbabilitySeries",
    "SurvivalSeries",
    "PeakTable",
    "find_peaks",
    "fit_exponential_rate",
    "fit_power_exponent",
    "moving_average",
]

_NEG_TOL = -1e-12


@dataclass
class ProbabilitySeries:
    """Arrival-rate samples p(t) on a time grid.

    Negative excursions below neg_floor are an error; shallower ones are
    clipped to zero with the raw minimum kept in raw_min. mass_detected
    is the trapezoid integral over the grid. The default floor is the
    -1e-12 positivity bound; the grid-evolution current passes a looser
    one because a raw flux is not positivity-protected (backflow).
    """

    t: np.ndarray
    p: np.ndarray
    method: str
    mass_detected: float = field(init=False)
    raw_min: float = field(init=False)
    converged: bool = True
    neg_floor: float = _NEG_TOL
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        p = np.asarray(self.p, dtype=float)
        if t.shape != p.shape or t.ndim != 1:
            raise ValidationError("t and p must be matching 1-d arrays")
        self.raw_min = float(p.min()) if len(p) else 0.0
        if self.raw_min < self.neg_floor:
            raise NumericalError(
                f"{self.method}: p(t) reached {self.raw_min:.3e}, "
                f"below the {self.neg_floor:.0e} positivity floor"
            )
        self.t = t
        self.p = np.maximum(p, 0.0)
        self.mass_detected = (
            float(np.trapezoid(self.p, t)) if len(t) > 1 else 0.0
        )
        if self.mass_detected > 1.0 + 1e-3:
            warnings.warn(
                f"{self.method}: detected mass {self.mass_detected:.6f} "
                "exceeds 1 by more than 1e-3",
                stacklevel=2,
            )


@dataclass
class SurvivalSeries:
    """Inner-region survival w(t), its amplitude when available, and -dw/dt.

    w is stored as computed; a grid starting at t=0 whose w(0) misses 1
    by more than 1e-4 draws a warning (raw_w0 keeps the producer's
    unnormalized reference value). minus_wdot comes from central
    differences on the stored w.

    w_floor is the validation bound below zero: quadrature producers keep
    the strict default, while the two-carrier closed form may pass a
    looser floor because its geometric-mean cross damping lets w dip
    below zero near destructive extrema.
    """

    t: np.ndarray
    w: np.ndarray
    amplitude: np.ndarray | None
    method: str
    raw_w0: float = 1.0
    w_floor: float = -1e-6
    minus_wdot: np.ndarray = field(init=False)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        w = np.asarray(self.w, dtype=float)
        if t.shape != w.shape or t.ndim != 1:
            raise ValidationError("t and w must be matching 1-d arrays")
        self.t = t
        self.w = w
        if len(w):
            if w.min() < self.w_floor or w.max() > 1.0 + 1e-6:
                raise NumericalError(
                    f"{self.method}: w(t) left [0, 1] "
                    f"(min {w.min():.3e}, max {w.max():.3e})"
                )
            if abs(w[0] - 1.0) > 1e-4 and t[0] <= 1e-12:
                warnings.warn(
                    f"{self.method}: w(0) = {w[0]:.6f} misses 1 by more than 1e-4",
                    stacklevel=2,
                )
        self.minus_wdot = (
            -np.gradient(self.w, self.t) if len(t) > 1 else np.zeros_like(self.w)
        )


@dataclass(frozen=True)
class PeakTable:
    """Strict local maxima of a series: times, heights, and spacings."""

    times: np.ndarray
    heights: np.ndarray

    @property
    def spacings(self) -> np.ndarray:
        return np.diff(self.times)

    def __len__(self) -> int:
        return len(self.times)


def find_peaks(t, y, min_height_ratio: float = 1e-8) -> PeakTable:
    """Strict three-point local maxima; a flat-topped run counts once, at
    its leftmost sample. Peaks below min_height_ratio of the global max
    are dropped."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(y) < 3:
        return PeakTable(times=np.empty(0), heights=np.empty(0))
    floor = y.max() * min_height_ratio
    idx = []
    i = 1
    n = len(y)
    while i < n - 1:
        if y[i] > y[i - 1]:
            j = i
            while j < n - 1 and y[j + 1] == y[j]:
                j += 1
            if j < n - 1 and y[j + 1] < y[i]:
                if y[i] >= floor:
                    idx.append(i)
            i = j + 1
        else:
            i += 1
    idx = np.asarray(idx, dtype=int)
    return PeakTable(times=t[idx], heights=y[idx])


def fit_exponential_rate(t, y, mask=None) -> tuple[float, float]:
    """Least-squares slope of log y over t; returns (rate, intercept)
    with rate = -slope so a decaying series gives a positive rate."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    keep = y > 0.0
    if mask is not None:
        keep &= np.asarray(mask, dtype=bool)
    if keep.sum() < 2:
        raise NumericalError("exponential fit needs at least two positive samples")
    slope, intercept = np.polyfit(t[keep], np.log(y[keep]), 1)
    return -float(slope), float(intercept)


def fit_power_exponent(t, y, mask=None) -> tuple[float, float]:
    """Least-squares slope of log y over log t; returns (exponent, intercept)."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    keep = (y > 0.0) & (t > 0.0)
    if mask is not None:
        keep &= np.asarray(mask, dtype=bool)
    if keep.sum() < 2:
        raise NumericalError("power-law fit needs at least two positive samples")
    slope, intercept = np.polyfit(np.log(t[keep]), np.log(y[keep]), 1)
    return float(slope), float(intercept)


def moving_average(t, y, window: float) -> np.ndarray:
    """Centered moving average of y with a time window of given width.

    Used to smooth the resolved arrival comb onto its envelope; window
    is typically one peak spacing.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if window <= 0.0:
        raise ValidationError("window must be positive")
    out = np.empty_like(y)
    half = window / 2.0
    lo = np.searchsorted(t, t - half, side="left")
    hi = np.searchsorted(t, t + half, side="right")
    csum = np.concatenate(([0.0], np.cumsum(y)))
    for i in range(len(y)):
        out[i] = (csum[hi[i]] - csum[lo[i]]) / max(hi[i] - lo[i], 1)
    return out
