"""Stationary scattering amplitudes for piecewise barriers.

Conventions (left incidence, wave number k > 0):

    region I  (x < a):  e^{ikx} + R e^{-ikx}
    region III(x > b):  T e^{ikx}

and for right incidence the reflected amplitude is Rp. T is identical
for both directions. The resonance-safe combination g = T / (1 + R)
drives the detection integrals and is computed without forming 1 + R.

Amplitudes come from (psi, psi') transfer matrices across the support.
Evanescent stretches with large gamma*d are accumulated in log scale so
opaque barriers (|T| down to the underflow limit) keep accurate phases
and log magnitudes. Entire-function entries make the same code path
valid at complex k, which the long-time contour evaluation relies on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, ValidationError
from .potential import PotentialSpec

__all__ = [
    "ScatteringData",
    "amplitudes",
    "closed_form_delta",
    "closed_form_square",
    "theta",
    "theta_grid",
    "dirichlet_modes",
    "segment_matrices",
]

_RESONANCE_TOL = 1e-12
_SCALE_TRIGGER = 30.0


@dataclass
class ScatteringData:
    """Amplitudes at one k or a k-grid (fields are scalars or arrays)."""

    k: np.ndarray
    T: np.ndarray
    R: np.ndarray
    Rp: np.ndarray
    theta: np.ndarray
    log_abs_T: np.ndarray
    g: np.ndarray
    resonant: np.ndarray


def _events(spec: PotentialSpec):
    """Left-to-right list of ('prop', width, V) and ('delta', kappa) steps."""
    cuts = {spec.a, spec.b}
    for seg in spec.segments:
        cuts.add(seg.x0)
        cuts.add(seg.x1)
    for spike in spec.deltas:
        cuts.add(spike.x)
    xs = sorted(cuts)
    spikes = {spike.x: spike.kappa for spike in spec.deltas}
    out = []
    for x0, x1 in zip(xs, xs[1:]):
        if x0 in spikes:
            out.append(("delta", spikes[x0]))
        mid = 0.5 * (x0 + x1)
        out.append(("prop", x1 - x0, float(spec.value(mid))))
    if xs[-1] in spikes:
        out.append(("delta", spikes[xs[-1]]))
    return out


def _propagator(k2c, width, V, mass):
    """Scaled (psi, psi') propagator across one constant segment.

    Returns (p11, p12, p21, p22, s) with the true matrix equal to
    e^{s} * [[p11, p12], [p21, p22]]; the true matrix has determinant 1.
    Entries are cos(qL), sin(qL)/q, -q sin(qL), cos(qL) with
    q^2 = k^2 - 2 m V, all entire in q^2, so evanescent segments
    (q^2 < 0) come out hyperbolic automatically.
    """
    q2 = k2c - 2.0 * mass * V
    q = np.sqrt(q2.astype(complex))
    w = q * width
    aw = np.abs(w)
    s = np.where(np.abs(w.imag) > _SCALE_TRIGGER, np.abs(w.imag), 0.0)
    eip = np.exp(1j * w - s)
    eim = np.exp(-1j * w - s)
    cos_s = 0.5 * (eip + eim)
    sin_s = (eip - eim) / 2j
    small = aw < 1e-4
    if np.any(small):
        z = q2 * width * width
        cos_ser = 1.0 - z / 2.0 + z * z / 24.0
        sinc_ser = width * (1.0 - z / 6.0 + z * z / 120.0)
        safe_q = np.where(small, 1.0, q)
        cos_s = np.where(small, cos_ser, cos_s)
        sinc = np.where(small, sinc_ser, sin_s / safe_q)
        mqsin = np.where(small, -q2 * sinc_ser, -q * sin_s)
    else:
        sinc = sin_s / q
        mqsin = -q * sin_s
    return cos_s, sinc, mqsin, cos_s, s


def _transfer(spec: PotentialSpec, k):
    """Accumulated scaled transfer matrix: (m11, m12, m21, m22, S)."""
    kk = np.asarray(k)
    k2c = (kk * kk).astype(complex)
    one = np.ones_like(k2c)
    zero = np.zeros_like(k2c)
    m11, m12, m21, m22 = one.copy(), zero.copy(), zero.copy(), one.copy()
    S = np.zeros(k2c.shape, dtype=float)
    for ev in _events(spec):
        if ev[0] == "prop":
            p11, p12, p21, p22, s = _propagator(k2c, ev[1], ev[2], spec.mass)
            S = S + s
        else:
            tk = 2.0 * ev[1]
            p11, p12, p21, p22 = one, zero, tk * one, one
        n11 = p11 * m11 + p12 * m21
        n12 = p11 * m12 + p12 * m22
        n21 = p21 * m11 + p22 * m21
        n22 = p21 * m12 + p22 * m22
        m11, m12, m21, m22 = n11, n12, n21, n22
        big = np.maximum(np.maximum(np.abs(m11), np.abs(m12)), np.maximum(np.abs(m21), np.abs(m22)))
        need = big > 1e12
        if np.any(need):
            scale = np.where(need, big, 1.0)
            m11, m12, m21, m22 = m11 / scale, m12 / scale, m21 / scale, m22 / scale
            S = S + np.log(scale)
    return m11, m12, m21, m22, S


def segment_matrices(spec: PotentialSpec, k):
    """Unscaled per-event transfer matrices (unit determinant each).

    Intended for property checks on moderate k where no rescaling is
    needed; opaque extremes overflow by design here.
    """
    kk = np.asarray(k)
    k2c = (kk * kk).astype(complex)
    mats = []
    for ev in _events(spec):
        if ev[0] == "prop":
            p11, p12, p21, p22, s = _propagator(k2c, ev[1], ev[2], spec.mass)
            f = np.exp(s)
            mats.append(np.array([[p11 * f, p12 * f], [p21 * f, p22 * f]]))
        else:
            tk = 2.0 * ev[1]
            one = np.ones_like(k2c)
            zero = np.zeros_like(k2c)
            mats.append(np.array([[one, zero], [tk * one, one]]))
    return mats


def _theta_from(T, R, Rp, resonant):
    with np.errstate(divide="ignore", invalid="ignore"):
        phase = -(Rp - T * T / (1.0 + R))
        th = np.angle(phase)
    return np.where(resonant, np.nan, th)


def amplitudes(spec: PotentialSpec, k) -> ScatteringData:
    """Scattering data at real k > 0 (scalars or arrays) or complex k."""
    karr = np.asarray(k)
    scalar = karr.ndim == 0
    kk = np.atleast_1d(karr)
    if np.isrealobj(kk):
        if np.any(kk <= 0.0) or not np.all(np.isfinite(kk)):
            raise ValidationError("wave number k must be positive and finite")
    else:
        if np.any(kk == 0.0) or not np.all(np.isfinite(kk)):
            raise ValidationError("complex wave number k must be nonzero and finite")
    m11, m12, m21, m22, S = _transfer(spec, kk)
    ik = 1j * kk.astype(complex)
    ea = np.exp(ik * spec.a)
    emb = np.exp(-ik * spec.b)
    # W = Qb^{-1} P Qa with Q(x) = [[e, 1/e], [ik e, -ik/e]], e = e^{ikx}
    q11 = ea
    q12 = np.exp(-ik * spec.a)
    q21 = ik * ea
    q22 = -ik * q12
    b11 = 0.5 * emb
    b12 = 0.5 * emb / ik
    b21 = 0.5 * np.exp(ik * spec.b)
    b22 = -0.5 * np.exp(ik * spec.b) / ik
    # W-hat = B (P-hat Q)
    pq11 = m11 * q11 + m12 * q21
    pq12 = m11 * q12 + m12 * q22
    pq21 = m21 * q11 + m22 * q21
    pq22 = m21 * q12 + m22 * q22
    w12 = b11 * pq12 + b12 * pq22
    w21 = b21 * pq11 + b22 * pq21
    w22 = b21 * pq12 + b22 * pq22
    R = -w21 / w22
    Rp = w12 / w22
    expS = np.exp(-S)
    T = expS / w22
    log_abs_T = -S - np.log(np.abs(w22))
    g = expS / (w22 - w21)
    resonant = np.abs(1.0 + R) < _RESONANCE_TOL
    th = _theta_from(T, R, Rp, resonant)
    if scalar:
        return ScatteringData(
            karr[()], T[0], R[0], Rp[0], th[0], log_abs_T[0], g[0], bool(resonant[0])
        )
    return ScatteringData(kk, T, R, Rp, th, log_abs_T, g, resonant)


def closed_form_delta(a: float, kappa: float, k) -> ScatteringData:
    """Single delta spike at a: T = ik/(ik - kappa), R = e^{2ika} kappa/(ik - kappa).

    Rp follows from mirror symmetry about the spike: Rp = R e^{-4ika}.
    """
    kk = np.asarray(k, dtype=float)
    if np.any(kk <= 0.0):
        raise ValidationError("wave number k must be positive")
    ik = 1j * kk
    den = ik - kappa
    T = ik / den
    R = np.exp(2j * kk * a) * kappa / den
    Rp = R * np.exp(-4j * kk * a)
    log_abs_T = 0.5 * np.log(kk * kk / (kk * kk + kappa * kappa))
    g = T / (1.0 + R)
    resonant = np.abs(1.0 + R) < _RESONANCE_TOL
    th = _theta_from(T, R, Rp, resonant)
    return ScatteringData(kk, T, R, Rp, th, log_abs_T, g, resonant)


def closed_form_square(a: float, d: float, V0: float, k, mass: float = 1.0) -> ScatteringData:
    """Square barrier of height V0 on [a, a+d], real k > 0.

    With gamma^2 = 2 m V0 - k^2 and den = 2k cosh(gamma d)
    + i (gamma^2 - k^2) sinh(gamma d)/gamma:

        T  = e^{-ikd} 2k / den
        R  = -i e^{2ika} (gamma^2 + k^2) [sinh(gamma d)/gamma] / den
        Rp = R e^{-2ik(2a+d)}            (mirror symmetry)

    Everything is entire in gamma^2, so transmission above the barrier
    and the exact threshold k^2 = 2 m V0 need no separate branch. For
    opaque barriers e^{gamma d} is factored out, which keeps den finite
    and makes log|T| exact long after T itself underflows.
    """
    kk = np.asarray(k, dtype=float)
    if np.any(kk <= 0.0):
        raise ValidationError("wave number k must be positive")
    g2 = (2.0 * mass * V0 - kk * kk).astype(complex)
    gam = np.sqrt(g2)
    gd = gam * d
    s = np.where(np.abs(gd.real) > _SCALE_TRIGGER, np.abs(gd.real), 0.0)
    ep = np.exp(gd - s)
    em = np.exp(-gd - s)
    cosh_s = 0.5 * (ep + em)
    sinh_s = 0.5 * (ep - em)
    small = np.abs(gd) < 1e-4
    z = g2 * d * d
    shc_ser = d * (1.0 + z / 6.0 + z * z / 120.0)
    safe_gam = np.where(small, 1.0, gam)
    shc_s = np.where(small, shc_ser, sinh_s / safe_gam)
    cosh_s = np.where(small, 1.0 + z / 2.0 + z * z / 24.0, cosh_s)
    den_s = 2.0 * kk * cosh_s + 1j * (g2 - kk * kk) * shc_s
    T = np.exp(-1j * kk * d) * 2.0 * kk * np.exp(-s) / den_s
    R = -1j * np.exp(2j * kk * a) * (g2 + kk * kk) * shc_s / den_s
    Rp = R * np.exp(-2j * kk * (2.0 * a + d))
    log_abs_T = np.log(2.0 * kk) - s - np.log(np.abs(den_s))
    g = T / (1.0 + R)
    resonant = np.abs(1.0 + R) < _RESONANCE_TOL
    th = _theta_from(T, R, Rp, resonant)
    return ScatteringData(kk, T, R, Rp, th, log_abs_T, g, resonant)


def theta(sd: ScatteringData):
    """Principal-branch detector phase: e^{i Theta} = -(Rp - T^2/(1+R)).

    NaN marks a pole of 1/(1+R) (sd.resonant); callers on a grid should
    use theta_grid for a continuous branch.
    """
    return sd.theta


def theta_grid(spec: PotentialSpec, ks) -> np.ndarray:
    """Theta on an increasing k-grid, unwrapped to a continuous branch."""
    sd = amplitudes(spec, np.asarray(ks, dtype=float))
    return np.unwrap(sd.theta)


def dirichlet_modes(spec: PotentialSpec, L: float, n_values) -> tuple[np.ndarray, np.ndarray]:
    """Box modes on [0, L] with the barrier: k_n = n pi/L - Theta(k_n)/(2L).

    Solved per n by fixed-point iteration with a Newton fallback; raises
    ConvergenceError naming n after 100 total iterations. Returns (k_n,
    D_n) with boundary coefficients D_n = 2i e^{i Theta/2} / sqrt(2 L).
    """
    if L < 10.0 * spec.b:
        raise ValidationError(f"box size L={L} must be at least 10*b={10.0 * spec.b}")
    ns = np.atleast_1d(np.asarray(n_values, dtype=int))
    if np.any(ns < 1):
        raise ValidationError("mode indices must be >= 1")
    k_out = np.empty(len(ns), dtype=float)
    d_out = np.empty(len(ns), dtype=complex)
    for i, n in enumerate(ns):
        base = n * np.pi / L
        kcur = base
        it = 0
        converged = False
        while it < 60:
            th = float(amplitudes(spec, kcur).theta)
            knew = base - th / (2.0 * L)
            it += 1
            if abs(knew - kcur) < 1e-15 * max(1.0, abs(kcur)):
                kcur = knew
                converged = True
                break
            kcur = knew
        if not converged:
            # Newton on f(k) = k - base + Theta(k)/(2L)
            while it < 100:
                th = float(amplitudes(spec, kcur).theta)
                f = kcur - base + th / (2.0 * L)
                h = 1e-7 * max(1.0, abs(kcur))
                thp = float(amplitudes(spec, kcur + h).theta)
                thm = float(amplitudes(spec, kcur - h).theta)
                dth = (thp - thm) / (2.0 * h)
                fp = 1.0 + dth / (2.0 * L)
                step = f / fp
                kcur -= step
                it += 1
                if abs(step) < 1e-15 * max(1.0, abs(kcur)):
                    converged = True
                    break
            if not converged:
                raise ConvergenceError(f"dirichlet mode n={n} did not converge in 100 iterations")
        th = float(amplitudes(spec, kcur).theta)
        k_out[i] = kcur
        d_out[i] = 2j * np.exp(0.5j * th) / np.sqrt(2.0 * L)
    return k_out, d_out
