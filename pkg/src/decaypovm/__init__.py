"""Time-of-arrival detection statistics for decay through 1D barriers.

The package computes the arrival-time density p(t) registered by a
distant detector for a wavepacket leaking out of a confining barrier on
the half line, classifies when that density is an exponential pulse
train, and cross-checks every analytic form against converged
quadrature and a finite-difference evolution oracle.

Modules
-------
potential     barrier geometry (piecewise-constant segments + delta spikes)
scattering    transfer-matrix amplitudes T, R, R' and closed forms
coefficients  barrier-response coefficients (lambda, xi, beta, s, w, alpha)
state         initial packet, detector geometry, time grids
quadrature    converged oscillatory integrals, real-axis and rotated-ray
series        result containers, peak finding, rate/exponent fits
detection     p(t): quadrature, attempt series, diagonal train, envelope,
              long-time laws, two-carrier beats, semiclassical reference
survival      w(t) = survival probability and its expansions
regimes       validity conditions and the regime verdict
evolution     Crank-Nicolson grid oracle (survival overlap + detector flux)
cli           `decay-povm` command-line front end
"""

from .coefficients import (
    BarrierCoefficients,
    LogCurvatures,
    coefficients_at,
    crossing_time,
    curvatures_at,
    decay_rate,
    first_detection_time,
)
from .detection import (
    BeatsSummary,
    LongtimeResult,
    detection_series,
    p_beats,
    p_diagonal,
    p_exponential_envelope,
    p_longtime,
    p_semiclassical,
    p_series,
    p_series_parts,
    z_quadrature,
)
from .errors import (
    BudgetError,
    ConvergenceError,
    DecayPovmError,
    NumericalError,
    PreconditionError,
    ResonanceError,
    ValidationError,
)
from .evolution import GridEvolution, evolve_and_observe
from .potential import (
    DeltaSpike,
    PotentialSpec,
    Segment,
    make_delta_barrier,
    make_square_barrier,
    parse_potential,
    serialize,
)
from .quadrature import (
    QuadratureInfo,
    arrival_amplitude,
    arrival_prefactor,
    packet_kernel,
    rotated_arrival_amplitude,
    rotated_survival_overlap,
    survival_overlap,
)
from .regimes import (
    DEFAULT_THRESHOLDS,
    ConditionCheck,
    RegimeReport,
    classify,
    classify_at,
    longbarrier_conditions,
    regime_sweep,
)
from .scattering import (
    ScatteringData,
    amplitudes,
    closed_form_delta,
    closed_form_square,
    dirichlet_modes,
    segment_matrices,
    theta,
    theta_grid,
)
from .series import (
    PeakTable,
    ProbabilitySeries,
    SurvivalSeries,
    find_peaks,
    fit_exponential_rate,
    fit_power_exponent,
    moving_average,
)
from .state import (
    DetectionConfig,
    InitialState,
    StateComponent,
    default_time_grid,
    make_state,
)
from .survival import (
    fit_survival_exponent,
    survival_beats,
    survival_beats_closed_form,
    survival_expansion,
    survival_quadrature,
)

__version__ = "0.1.0"

__all__ = [
    "amplitudes",
    "arrival_amplitude",
    "arrival_prefactor",
    "BarrierCoefficients",
    "BeatsSummary",
    "BudgetError",
    "classify",
    "classify_at",
    "closed_form_delta",
    "closed_form_square",
    "coefficients_at",
    "ConditionCheck",
    "ConvergenceError",
    "crossing_time",
    "curvatures_at",
    "decay_rate",
    "DecayPovmError",
    "DEFAULT_THRESHOLDS",
    "default_time_grid",
    "DeltaSpike",
    "detection_series",
    "DetectionConfig",
    "dirichlet_modes",
    "evolve_and_observe",
    "find_peaks",
    "first_detection_time",
    "fit_exponential_rate",
    "fit_power_exponent",
    "fit_survival_exponent",
    "GridEvolution",
    "InitialState",
    "LogCurvatures",
    "longbarrier_conditions",
    "LongtimeResult",
    "make_delta_barrier",
    "make_square_barrier",
    "make_state",
    "moving_average",
    "NumericalError",
    "p_beats",
    "p_diagonal",
    "p_exponential_envelope",
    "p_longtime",
    "p_semiclassical",
    "p_series",
    "p_series_parts",
    "packet_kernel",
    "parse_potential",
    "PeakTable",
    "PotentialSpec",
    "PreconditionError",
    "ProbabilitySeries",
    "QuadratureInfo",
    "regime_sweep",
    "RegimeReport",
    "ResonanceError",
    "rotated_arrival_amplitude",
    "rotated_survival_overlap",
    "ScatteringData",
    "Segment",
    "segment_matrices",
    "serialize",
    "StateComponent",
    "survival_beats",
    "survival_beats_closed_form",
    "survival_expansion",
    "survival_overlap",
    "survival_quadrature",
    "SurvivalSeries",
    "theta",
    "theta_grid",
    "ValidationError",
    "z_quadrature",
]
