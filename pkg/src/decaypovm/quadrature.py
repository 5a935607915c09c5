"""Oscillatory k-space integrals shared by the detection and survival paths.

Amplitudes are integrals of barrier data against the packet kernel and a
free-evolution phase. Real-axis evaluation uses composite Gauss-Legendre
panels sized by the phase budget, with whole-mesh doubling until the
result is grid-converged. Very late times instead rotate the contour onto
the k = e^{-i pi/4} u ray, where the time factor becomes a real Gaussian;
that path is cross-validated against the real axis where both work.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError
from .potential import PotentialSpec
from .scattering import amplitudes
from .state import InitialState

__all__ = [
    "QuadratureInfo",
    "packet_kernel",
    "arrival_prefactor",
    "arrival_amplitude",
    "survival_overlap",
    "rotated_arrival_amplitude",
    "rotated_survival_overlap",
]

_LEG_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}
_ORDER = 16
_MAX_NODES = 1 << 21
_PHASE_PER_PANEL = 20.0


@dataclass
class QuadratureInfo:
    converged: bool
    nodes: int
    doublings: int
    max_rel_change: float


def _gauss(order: int) -> tuple[np.ndarray, np.ndarray]:
    if order not in _LEG_CACHE:
        _LEG_CACHE[order] = np.polynomial.legendre.leggauss(order)
    return _LEG_CACHE[order]


def packet_kernel(state: InitialState, k):
    """Momentum kernel of the confined packet: for each component a
    Gaussian at +k_j minus its image at -k_j (the wall at the origin),
    carrying the e^{-ikc} center phase. Accepts complex k."""
    k = np.asarray(k)
    two_var = 2.0 * state.sigma**2
    c = state.center
    out = np.zeros(k.shape, dtype=complex)
    for comp in state.components:
        direct = np.exp(-((k - comp.k) ** 2) / two_var - 1j * k * c)
        image = np.exp(-((k + comp.k) ** 2) / two_var + 1j * k * c)
        out += comp.weight * (direct - image)
    return out


def _packet_kernel_star(state: InitialState, z):
    """conj(packet_kernel(state, conj(z))), analytic in z."""
    z = np.asarray(z)
    two_var = 2.0 * state.sigma**2
    c = state.center
    out = np.zeros(z.shape, dtype=complex)
    for comp in state.components:
        direct = np.exp(-((z - comp.k) ** 2) / two_var + 1j * z * c)
        image = np.exp(-((z + comp.k) ** 2) / two_var - 1j * z * c)
        out += np.conj(comp.weight) * (direct - image)
    return out


def _window(state: InitialState, window_sigmas: float, ir_floor: float | None):
    ks = [c.k for c in state.components]
    lo = min(ks) - window_sigmas * state.sigma
    hi = max(ks) + window_sigmas * state.sigma
    floor = 1e-12 * min(ks) if ir_floor is None else ir_floor
    return max(lo, floor), hi


def _time_transform(k: np.ndarray, fw: np.ndarray, t: np.ndarray, mass: float):
    """sum_k fw[k] * exp(-i k^2 t / 2M) for every t, chunked over t."""
    out = np.empty(len(t), dtype=complex)
    phase_rate = k * k / (2.0 * mass)
    chunk = max(1, 4_000_000 // max(len(k), 1))
    for i in range(0, len(t), chunk):
        tt = t[i : i + chunk]
        out[i : i + chunk] = np.exp(-1j * np.outer(tt, phase_rate)) @ fw
    return out


def _initial_panels(lo, hi, t_max, mass, sigma, base_nodes):
    width = hi - lo
    dphi = max(abs(0.0 - lo * t_max / mass), abs(0.0 - hi * t_max / mass))
    return max(
        (base_nodes - 1) // _ORDER + 1,
        int(math.ceil(width / (sigma / 3.0))),
        int(math.ceil(width * dphi / _PHASE_PER_PANEL)) + 1,
    )


def _edge_nodes(edges: np.ndarray):
    x, w = _gauss(_ORDER)
    half = np.diff(edges) / 2.0
    mid = (edges[:-1] + edges[1:]) / 2.0
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def _split_all(edges: np.ndarray) -> np.ndarray:
    mids = (edges[:-1] + edges[1:]) / 2.0
    out = np.empty(len(edges) + len(mids))
    out[0::2] = edges
    out[1::2] = mids
    return out


_F_RTOL = 1e-9
_TAIL_ABS = 1e-6
_MAX_ADAPT_PANELS = 30_000


def _adaptive_edges(build_fvals, edges: np.ndarray) -> np.ndarray:
    """Refine panel edges until each panel's 16-point rule agrees with its
    two-half composite. Narrow structure (resonance spikes of the barrier
    amplitudes) gets panels at its own scale without burdening the rest
    of the window."""
    x, w = _gauss(_ORDER)
    for _ in range(40):
        n_panels = len(edges) - 1
        if n_panels >= _MAX_ADAPT_PANELS:
            warnings.warn(
                f"adaptive panel cap {_MAX_ADAPT_PANELS} reached", stacklevel=4
            )
            break
        half = np.diff(edges) / 2.0
        mid = (edges[:-1] + edges[1:]) / 2.0
        f_c = build_fvals((mid[:, None] + half[:, None] * x[None, :]).ravel())
        coarse = (f_c.reshape(n_panels, _ORDER) * w[None, :]).sum(axis=1) * half

        q_half = half / 2.0
        mid_l = mid - q_half
        mid_r = mid + q_half
        k_f = np.concatenate(
            [
                (mid_l[:, None] + q_half[:, None] * x[None, :]).ravel(),
                (mid_r[:, None] + q_half[:, None] * x[None, :]).ravel(),
            ]
        )
        f_f = build_fvals(k_f).reshape(2, n_panels, _ORDER)
        fine = ((f_f * w[None, None, :]).sum(axis=2) * q_half).sum(axis=0)
        scale = float(
            ((np.abs(f_f) * w[None, None, :]).sum(axis=2) * q_half).sum()
        )
        bad = np.abs(coarse - fine) > max(_F_RTOL * scale, 1e-300)
        if not bad.any():
            break
        edges = np.sort(np.concatenate([edges, mid[bad]]))
    return edges


def _converge(build_fvals, lo, hi, t, mass, n0, rtol=1e-8, max_doublings=6):
    """Adaptive mesh on the k-integrand, then whole-mesh doubling of the
    time transform until the per-time change drops below rtol."""
    edges = _adaptive_edges(build_fvals, np.linspace(lo, hi, n0 + 1))
    k, w = _edge_nodes(edges)
    prev = _time_transform(k, w * build_fvals(k), t, mass)
    best = prev
    info = QuadratureInfo(False, len(k), 0, math.inf)
    for i in range(1, max_doublings + 1):
        if (len(edges) - 1) * 2 * _ORDER > _MAX_NODES:
            warnings.warn(
                f"quadrature node cap {_MAX_NODES} reached before convergence",
                stacklevel=3,
            )
            break
        edges = _split_all(edges)
        k, w = _edge_nodes(edges)
        cur = _time_transform(k, w * build_fvals(k), t, mass)
        # relative accuracy where the amplitude is significant; deep
        # cancellation tails only need absolute accuracy near the peak scale
        tol = rtol * np.abs(cur) + _TAIL_ABS * float(np.abs(cur).max())
        excess = np.abs(cur - prev) / np.maximum(tol, 1e-300)
        info = QuadratureInfo(False, len(k), i, float(excess.max()) * rtol)
        best = cur
        if info.max_rel_change <= rtol:
            info.converged = True
            break
        prev = cur
    if not info.converged:
        warnings.warn(
            f"k-integral not converged to {rtol:.1e} "
            f"(last change {info.max_rel_change:.1e} on {info.nodes} nodes)",
            stacklevel=3,
        )
    return best, info


def arrival_prefactor(spec: PotentialSpec, state: InitialState) -> complex:
    return -1j / (math.pi**0.75 * math.sqrt(2.0 * spec.mass * state.sigma))


def arrival_amplitude(
    spec: PotentialSpec,
    state: InitialState,
    L: float,
    t_grid: np.ndarray,
    window_sigmas: float = 8.0,
    base_nodes: int = 2049,
    ir_floor: float | None = None,
    rtol: float = 1e-8,
):
    """z(t): detection amplitude at distance L on the given times."""
    t = np.asarray(t_grid, dtype=float)
    lo, hi = _window(state, window_sigmas, ir_floor)

    def fvals(k):
        sd = amplitudes(spec, k)
        return np.sqrt(k) * sd.g * packet_kernel(state, k) * np.exp(1j * k * L)

    n0 = _initial_panels(lo, hi, t.max(), spec.mass, state.sigma, base_nodes)
    # detector phase e^{ikL} adds L to the phase budget
    n0 = max(n0, int(math.ceil((hi - lo) * L / _PHASE_PER_PANEL)) + 1)
    vals, info = _converge(fvals, lo, hi, t, spec.mass, n0, rtol)
    return arrival_prefactor(spec, state) * vals, info


def survival_overlap(
    spec: PotentialSpec,
    state: InitialState,
    t_grid: np.ndarray,
    window_sigmas: float = 8.0,
    base_nodes: int = 2049,
    ir_floor: float | None = None,
    rtol: float = 1e-8,
):
    """Survival amplitude: barrier weight |T|^2/|1+R|^2 against the packet
    Gaussian(s) and the free phase. Cross terms between two carriers are
    dropped (suppressed for |k1-k2| >> sigma)."""
    t = np.asarray(t_grid, dtype=float)
    lo, hi = _window(state, window_sigmas, ir_floor)
    norm = 1.0 / (math.sqrt(math.pi) * state.sigma)
    var = state.sigma**2

    def fvals(k):
        sd = amplitudes(spec, k)
        weight = np.abs(sd.g) ** 2
        gauss = np.zeros_like(k)
        for comp in state.components:
            gauss = gauss + abs(comp.weight) ** 2 * np.exp(-((k - comp.k) ** 2) / var)
        return norm * weight * gauss

    n0 = _initial_panels(lo, hi, t.max(), spec.mass, state.sigma, base_nodes)
    vals, info = _converge(fvals, lo, hi, t, spec.mass, n0, rtol)
    return vals, info


_RAY = complex(math.cos(math.pi / 4.0), -math.sin(math.pi / 4.0))


def _ray_nodes(n_panels: int = 96, v_max: float = 8.0):
    # quadratic grading toward v=0 softens the sqrt(k) cusp
    i = np.arange(n_panels + 1, dtype=float) / n_panels
    edges = v_max * i**2
    x, w = _gauss(_ORDER)
    half = np.diff(edges) / 2.0
    mid = (edges[:-1] + edges[1:]) / 2.0
    v = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    vw = (half[:, None] * w[None, :]).ravel()
    return v, vw


def rotated_arrival_amplitude(
    spec: PotentialSpec, state: InitialState, L: float, t_grid
) -> np.ndarray:
    """z(t) via the e^{-i pi/4} ray, for t far beyond the packet's own
    dispersal time. The rotation turns the time phase into e^{-v^2}; the
    result picks up no oscillation, so late-time tails come out clean."""
    t = np.asarray(t_grid, dtype=float)
    v, vw = _ray_nodes()
    pref = arrival_prefactor(spec, state)
    out = np.empty(len(t), dtype=complex)
    for i, ti in enumerate(t):
        scale = math.sqrt(2.0 * spec.mass / ti)
        k = _RAY * scale * v
        sd = amplitudes(spec, k)
        f = np.sqrt(k) * sd.g * packet_kernel(state, k) * np.exp(1j * k * L)
        total = np.sum(vw * f * np.exp(-(v**2)))
        out[i] = pref * _RAY * scale * total
    return out


def _g_star(spec: PotentialSpec, z):
    """conj(g(conj z)) continued off the real axis."""
    sd = amplitudes(spec, np.conj(z))
    return np.conj(sd.g)


def rotated_survival_overlap(
    spec: PotentialSpec, state: InitialState, t_grid
) -> np.ndarray:
    """Survival amplitude on the rotated ray. |g|^2 and the real Gaussian
    are continued by Schwarz reflection: f(k)=g(k)g*(k) with
    g*(z)=conj(g(conj z)), and likewise for each packet Gaussian."""
    t = np.asarray(t_grid, dtype=float)
    v, vw = _ray_nodes()
    norm = 1.0 / (math.sqrt(math.pi) * state.sigma)
    var = state.sigma**2
    out = np.empty(len(t), dtype=complex)
    for i, ti in enumerate(t):
        scale = math.sqrt(2.0 * spec.mass / ti)
        z = _RAY * scale * v
        weight = amplitudes(spec, z).g * _g_star(spec, z)
        gauss = np.zeros_like(z)
        for comp in state.components:
            gauss = gauss + abs(comp.weight) ** 2 * np.exp(-((z - comp.k) ** 2) / var)
        total = np.sum(vw * weight * gauss * np.exp(-(v**2)))
        out[i] = norm * _RAY * scale * total
    return out
