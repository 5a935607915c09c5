"""Classification of when the decay is exponential, and for how long.

Three conditions gate the exponential regime: an opaque barrier, crossing
attempts resolved by the packet, and a slowly varying transmission
magnitude. Four second-derivative checks guard the first-order expansion
itself. All thresholds are soft and configurable; the report always
carries the raw ratios.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .coefficients import (
    BarrierCoefficients,
    LogCurvatures,
    coefficients_at,
    curvatures_at,
    decay_rate,
    first_detection_time,
)
from .errors import PreconditionError, ValidationError
from .potential import PotentialSpec, make_square_barrier
from .scattering import amplitudes
from .state import InitialState

__all__ = [
    "ConditionCheck",
    "RegimeReport",
    "DEFAULT_THRESHOLDS",
    "classify",
    "classify_at",
    "regime_sweep",
    "longbarrier_conditions",
]

DEFAULT_THRESHOLDS = {
    "opacity": 0.1,           # |T|^2 below this
    "resolution": 3.0,        # sigma beta above this
    "magnitude_drift": 0.1,   # sigma w below this
    "curvature": 0.1,         # each second-order ratio below this
    "potential_only": 10.0,   # beta/w above this
}

_VERDICTS = (
    "exponential",
    "fine-structure",
    "interference",
    "multi-channel",
    "expansion-invalid",
)


@dataclass(frozen=True)
class ConditionCheck:
    name: str
    value: float
    threshold: float
    passes: bool
    direction: str  # "below" or "above"

    def to_dict(self) -> dict:
        return {
            "value": _json_float(self.value),
            "threshold": self.threshold,
            "passes": self.passes,
            "direction": self.direction,
        }


def _json_float(x: float):
    return float(x) if math.isfinite(x) else None


def _check_below(name, value, threshold) -> ConditionCheck:
    return ConditionCheck(name, float(value), float(threshold), bool(value < threshold), "below")


def _check_above(name, value, threshold) -> ConditionCheck:
    return ConditionCheck(name, float(value), float(threshold), bool(value > threshold), "above")


@dataclass
class RegimeReport:
    k0: float
    sigma: float
    cond1: ConditionCheck
    cond2: ConditionCheck
    cond3: ConditionCheck
    extra: dict[str, ConditionCheck]
    potential_only: ConditionCheck
    verdict: str
    coefficients: BarrierCoefficients
    curvatures: LogCurvatures
    cond2_correction: float
    Gamma: float | None = None
    t0: float | None = None
    breakdown_after_t0: float | None = None
    breakdown_time: float | None = None
    thresholds: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        co = self.coefficients
        return {
            "k0": self.k0,
            "sigma": self.sigma,
            "verdict": self.verdict,
            "conditions": {
                "opacity": self.cond1.to_dict(),
                "resolution": self.cond2.to_dict(),
                "magnitude_drift": self.cond3.to_dict(),
            },
            "expansion_checks": {k: v.to_dict() for k, v in self.extra.items()},
            "potential_only": self.potential_only.to_dict(),
            "cond2_correction": self.cond2_correction,
            "Gamma": _json_float(self.Gamma) if self.Gamma is not None else None,
            "t0": _json_float(self.t0) if self.t0 is not None else None,
            "breakdown_after_t0": (
                _json_float(self.breakdown_after_t0)
                if self.breakdown_after_t0 is not None
                else None
            ),
            "breakdown_time": (
                _json_float(self.breakdown_time) if self.breakdown_time is not None else None
            ),
            "coefficients": {
                "lam": co.lam,
                "xi": co.xi,
                "beta": co.beta,
                "s": co.s,
                "w": co.w,
                "arg_R": co.arg_R,
                "alpha": co.alpha,
            },
            "thresholds": dict(self.thresholds),
        }


def _ratio(numer: float, denom: float) -> float:
    if numer == 0.0:
        return 0.0
    if denom == 0.0:
        return math.inf
    return abs(numer) / abs(denom)


def classify_at(
    spec: PotentialSpec,
    k0: float,
    sigma: float,
    thresholds: dict | None = None,
    L: float | None = None,
) -> RegimeReport:
    """Regime report for a single carrier k0 with packet width sigma."""
    th = dict(DEFAULT_THRESHOLDS)
    if thresholds:
        unknown = set(thresholds) - set(th)
        if unknown:
            raise ValidationError(f"unknown threshold names: {sorted(unknown)}")
        th.update(thresholds)

    coeffs = coefficients_at(spec, k0)
    curv = curvatures_at(spec, k0)
    t2 = float(np.abs(amplitudes(spec, k0).T) ** 2)

    cond1 = _check_below("opacity", t2, th["opacity"])
    cond2 = _check_above("resolution", sigma * coeffs.beta, th["resolution"])
    cond3 = _check_below("magnitude_drift", sigma * abs(coeffs.w), th["magnitude_drift"])
    extra = {
        "transmission_magnitude": _check_below(
            "transmission_magnitude",
            sigma * _ratio(curv.ddlogT.real, coeffs.w),
            th["curvature"],
        ),
        "transmission_phase": _check_below(
            "transmission_phase",
            sigma * _ratio(curv.ddlogT.imag, coeffs.lam),
            th["curvature"],
        ),
        "reflection_magnitude": _check_below(
            "reflection_magnitude",
            sigma * _ratio(curv.ddlogR.real, coeffs.s),
            th["curvature"],
        ),
        "reflection_phase": _check_below(
            "reflection_phase",
            sigma * _ratio(curv.ddlogR.imag, coeffs.beta),
            th["curvature"],
        ),
    }
    potential_only = _check_above(
        "potential_only",
        coeffs.beta / coeffs.w if coeffs.w != 0.0 else math.inf,
        th["potential_only"],
    )

    if not cond1.passes:
        verdict = "fine-structure"
    elif not all(c.passes for c in extra.values()):
        verdict = "expansion-invalid"
    elif not cond2.passes:
        verdict = "interference"
    elif not cond3.passes:
        verdict = "multi-channel"
    else:
        verdict = "exponential"

    gamma = None
    if coeffs.beta > 0.0:
        gamma = decay_rate(spec, k0, coeffs=coeffs)
    t0 = None
    if L is not None:
        t0 = first_detection_time(coeffs, L, spec.mass)
    breakdown_after = None
    breakdown_time = None
    if verdict == "exponential" and gamma is not None:
        denom = gamma * sigma**2 * coeffs.w**2
        if denom > 0.0 and math.isfinite(denom):
            breakdown_after = 1.0 / denom
            if t0 is not None:
                breakdown_time = t0 + breakdown_after

    return RegimeReport(
        k0=float(k0),
        sigma=float(sigma),
        cond1=cond1,
        cond2=cond2,
        cond3=cond3,
        extra=extra,
        potential_only=potential_only,
        verdict=verdict,
        coefficients=coeffs,
        curvatures=curv,
        cond2_correction=1.0 + 2.0 * math.exp(-(sigma * coeffs.beta) ** 2),
        Gamma=gamma,
        t0=t0,
        breakdown_after_t0=breakdown_after,
        breakdown_time=breakdown_time,
        thresholds=th,
    )


def classify(
    spec: PotentialSpec,
    state: InitialState,
    thresholds: dict | None = None,
    L: float | None = None,
) -> RegimeReport:
    """Regime report at the state's first carrier."""
    return classify_at(spec, state.k0, state.sigma, thresholds=thresholds, L=L)


def regime_sweep(
    spec: PotentialSpec,
    k0_values,
    sigma_values,
    thresholds: dict | None = None,
    L: float | None = None,
) -> list[dict]:
    """Verdict map over a (k0, sigma) grid; resonant carriers are kept as
    rows with verdict "resonant" rather than aborting the sweep."""
    rows = []
    for k0 in np.atleast_1d(np.asarray(k0_values, dtype=float)):
        for sigma in np.atleast_1d(np.asarray(sigma_values, dtype=float)):
            try:
                rep = classify_at(spec, float(k0), float(sigma), thresholds, L)
            except PreconditionError:
                rows.append(
                    {
                        "k0": float(k0),
                        "sigma": float(sigma),
                        "verdict": "resonant",
                        "opacity": math.nan,
                        "resolution": math.nan,
                        "magnitude_drift": math.nan,
                        "max_curvature_ratio": math.nan,
                        "Gamma": math.nan,
                    }
                )
                continue
            rows.append(
                {
                    "k0": float(k0),
                    "sigma": float(sigma),
                    "verdict": rep.verdict,
                    "opacity": rep.cond1.value,
                    "resolution": rep.cond2.value,
                    "magnitude_drift": rep.cond3.value,
                    "max_curvature_ratio": max(c.value for c in rep.extra.values()),
                    "Gamma": rep.Gamma if rep.Gamma is not None else math.nan,
                }
            )
    return rows


def longbarrier_conditions(
    a: float, d: float, V0: float, M: float, k0: float, sigma: float
) -> dict:
    """Thick-square-barrier shortcut conditions, checked for consistency
    against the full classification.

    For a wide opaque square barrier the resolution condition reduces to
    sigma a >> 1 and the magnitude condition to sigma d k0/gamma << 1
    (gamma the tunneling exponent). A zero-width barrier degenerates to
    the delta-spike rules, where the shortcut has nothing to add.
    """
    if d < 0.0:
        raise ValidationError("barrier width d must be nonnegative")
    if d == 0.0:
        # zero width leaves no barrier mass: fall back to the free layout
        spec = PotentialSpec(a=a, b=a, mass=M)
        report = classify_at(spec, k0, sigma)
        sigma_a = _check_above("resolution_shortcut", sigma * a, 3.0)
        drift = _check_below("magnitude_shortcut", 0.0, 0.1)
        both = sigma_a.passes and drift.passes
        return {
            "sigma_a": sigma_a.to_dict(),
            "sigma_d_k0_over_gamma": drift.to_dict(),
            "gamma": None,
            "verdict": report.verdict,
            "consistent": both == (report.verdict == "exponential"),
            "degenerate_delta": True,
        }

    spec = make_square_barrier(a, d, V0, mass=M)
    gamma_sq = 2.0 * M * V0 - k0 * k0
    gamma = math.sqrt(gamma_sq) if gamma_sq > 0.0 else math.nan
    sigma_a = _check_above("resolution_shortcut", sigma * a, 3.0)
    drift_value = sigma * d * k0 / gamma if gamma_sq > 0.0 else math.inf
    drift = _check_below("magnitude_shortcut", drift_value, 0.1)
    report = classify_at(spec, k0, sigma)
    both = sigma_a.passes and drift.passes
    return {
        "sigma_a": sigma_a.to_dict(),
        "sigma_d_k0_over_gamma": drift.to_dict(),
        "gamma": _json_float(gamma),
        "verdict": report.verdict,
        "consistent": both == (report.verdict == "exponential"),
        "degenerate_delta": False,
    }
