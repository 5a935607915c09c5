"""Command-line front end: `decay-povm`.

Reads an experiment config (JSON), dispatches to the compute modules,
and writes CSV/JSON artifacts. Exit codes: 0 clean, 2 config validation
failure (nothing written), 3 one or more requested methods skipped on
unmet preconditions (regime.json is still written), 4 numerical failure.

Subcommands: run, amplitudes, coefficients, classify, sweep. The config
file always wins over flags except --output. Methods inside a run
execute concurrently; DECAY_POVM_THREADS caps the worker count; file
writes happen serially at the end so a crash cannot leave a torn CSV.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .coefficients import coefficients_at, curvatures_at, decay_rate, first_detection_time
from .detection import (
    detection_series,
    p_beats,
    p_diagonal,
    p_exponential_envelope,
    p_longtime,
    p_semiclassical,
    p_series,
)
from .errors import DecayPovmError, NumericalError, PreconditionError, ValidationError
from .evolution import evolve_and_observe
from .potential import PotentialSpec, parse_potential
from .regimes import classify_at, regime_sweep
from .scattering import amplitudes
from .series import find_peaks, fit_exponential_rate
from .state import DetectionConfig, InitialState, default_time_grid, make_state
from .survival import survival_quadrature

__all__ = ["main", "METHOD_NAMES"]

METHOD_NAMES = (
    "quadrature",
    "series",
    "diagonal",
    "envelope",
    "longtime",
    "beats",
    "semiclassical",
    "survival",
    "oracle",
)

_GRID_CAP = 20_001
_ORACLE_BUDGET = 6e10


def _thread_cap(n_tasks: int) -> int:
    raw = os.environ.get("DECAY_POVM_THREADS", "")
    if raw.strip():
        try:
            cap = int(raw)
        except ValueError:
            raise ValidationError(f"DECAY_POVM_THREADS must be an integer, got {raw!r}")
        if cap < 1:
            raise ValidationError("DECAY_POVM_THREADS must be >= 1")
    else:
        cap = os.cpu_count() or 1
    return max(1, min(cap, n_tasks))


def _fmt(x: float) -> str:
    return "%.17g" % float(x)


def _write_csv(path: Path, header: list[str], columns: list[np.ndarray]) -> None:
    n = len(columns[0])
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for i in range(n):
            fh.write(",".join(_fmt(c[i]) for c in columns) + "\n")


def _write_json(path: Path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def _finite_or_none(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


# ---------------------------------------------------------------- config


@dataclass
class Experiment:
    spec: PotentialSpec
    state: InitialState
    L: float
    methods: list[str]
    thresholds: dict | None
    output: str | None
    time_doc: dict | None
    force: bool = False
    report: object = None
    cfg: DetectionConfig | None = None


def _require_keys(doc: dict, where: str, required: set[str], optional: set[str]) -> None:
    missing = required - set(doc)
    if missing:
        raise ValidationError(f"{where} is missing required keys: {sorted(missing)}")
    unknown = set(doc) - required - optional
    if unknown:
        raise ValidationError(f"{where} has unknown keys: {sorted(unknown)}")


def _parse_state(doc, spec: PotentialSpec) -> InitialState:
    if not isinstance(doc, dict):
        raise ValidationError("'state' must be an object")
    _require_keys(doc, "'state'", {"components", "sigma"}, set())
    comps = doc["components"]
    if not isinstance(comps, list) or not comps:
        raise ValidationError("'state.components' must be a non-empty list")
    ks, ws = [], []
    for i, c in enumerate(comps):
        if not isinstance(c, dict):
            raise ValidationError(f"state component {i} must be an object")
        _require_keys(c, f"state component {i}", {"k"}, {"weight_re", "weight_im"})
        try:
            ks.append(float(c["k"]))
            ws.append(complex(float(c.get("weight_re", 1.0)), float(c.get("weight_im", 0.0))))
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"state component {i} has non-numeric entries: {exc}")
    try:
        sigma = float(doc["sigma"])
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"'state.sigma' must be numeric: {exc}")
    return make_state(spec, ks, sigma, weights=ws)


def _build_time_grid(doc, spec, state, L, report) -> np.ndarray:
    if doc is None:
        if report.Gamma is None:
            raise ValidationError(
                "no 'time' block and no decay rate to size a default grid from"
            )
        return default_time_grid(
            spec, state, L, report.Gamma, report.t0, report.coefficients.beta
        )
    if not isinstance(doc, dict):
        raise ValidationError("'time' must be an object")
    _require_keys(doc, "'time'", {"t_min", "t_max"}, {"samples", "per_peak"})
    try:
        t_min = float(doc["t_min"])
        t_max = float(doc["t_max"])
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"'time' bounds must be numeric: {exc}")
    if not (0.0 <= t_min < t_max):
        raise ValidationError("'time' needs 0 <= t_min < t_max")
    if "samples" in doc and "per_peak" in doc:
        raise ValidationError("'time' takes samples or per_peak, not both")
    if "per_peak" in doc:
        per = float(doc["per_peak"])
        if per <= 0.0:
            raise ValidationError("'time.per_peak' must be positive")
        width = spec.mass / (2.0 * state.k0 * state.sigma)
        n = int(math.ceil((t_max - t_min) / (width / per))) + 1
        if n > _GRID_CAP:
            warnings.warn(f"time grid capped at {_GRID_CAP} samples ({n} requested)")
            n = _GRID_CAP
        n = max(n, 2)
    else:
        n = int(doc.get("samples", 2001))
        if not (2 <= n <= _GRID_CAP):
            raise ValidationError(f"'time.samples' must sit in [2, {_GRID_CAP}]")
    return np.linspace(t_min, t_max, n)


def _load_experiment(path: str, force: bool) -> Experiment:
    try:
        raw = Path(path).read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc}")
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config does not parse as JSON: {exc}")
    if not isinstance(doc, dict):
        raise ValidationError("config must be a JSON object")
    _require_keys(
        doc,
        "config",
        {"potential", "state", "detector", "methods"},
        {"time", "thresholds", "output"},
    )
    spec = parse_potential(doc["potential"])
    state = _parse_state(doc["state"], spec)
    det = doc["detector"]
    if not isinstance(det, dict):
        raise ValidationError("'detector' must be an object")
    _require_keys(det, "'detector'", {"L"}, set())
    try:
        L = float(det["L"])
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"'detector.L' must be numeric: {exc}")
    methods = doc["methods"]
    if not isinstance(methods, list) or not methods:
        raise ValidationError("'methods' must be a non-empty list")
    bad = [m for m in methods if m not in METHOD_NAMES]
    if bad:
        raise ValidationError(f"unknown methods {bad}; valid: {list(METHOD_NAMES)}")
    if len(set(methods)) != len(methods):
        raise ValidationError("'methods' has duplicates")
    thresholds = doc.get("thresholds")
    if thresholds is not None and not isinstance(thresholds, dict):
        raise ValidationError("'thresholds' must be an object")
    time_doc = doc.get("time")
    if time_doc is not None and not isinstance(time_doc, dict):
        raise ValidationError("'time' must be an object")
    return Experiment(
        spec=spec,
        state=state,
        L=L,
        methods=list(methods),
        thresholds=thresholds,
        output=doc.get("output"),
        time_doc=time_doc,
        force=force,
    )


# ---------------------------------------------------------------- run


def _screen(name: str, ex: Experiment) -> str | None:
    """Cheap precondition check; a string is the reason to skip."""
    rep = ex.report
    st = ex.state
    if name == "series" and not ex.force and not rep.cond2.passes:
        return (
            f"resolution condition sigma*beta = {rep.cond2.value:.4g} "
            f"is not above {rep.cond2.threshold}"
        )
    if name == "diagonal" and not ex.force:
        co = rep.coefficients
        gate = st.sigma**2 * (co.beta**2 - co.s**2)
        if gate <= 9.0:
            return f"no-interference gate sigma^2(beta^2-s^2) = {gate:.4g} is not above 9"
    if name == "envelope" and not ex.force and rep.verdict != "exponential":
        return f"regime verdict is {rep.verdict!r}, not 'exponential'"
    if name == "longtime" and len(st.components) != 1:
        return "longtime analysis takes a single-component state"
    if name == "beats" and len(st.components) != 2:
        return "beats need a two-component state"
    if name == "oracle":
        ks = [c.k for c in st.components]
        k_max = max(ks) + 8.0 * st.sigma
        k_slow = max(min(ks) - 4.0 * st.sigma, 0.25 * min(ks))
        dx = 1.0 / (8.0 * k_max)
        dt = dx * ex.spec.mass / (4.0 * k_max)
        cap_start = max(1.1 * ex.cfg.L, st.center + 5.66 / st.sigma, ex.spec.b)
        n_pts = (cap_start + 7.0 * 2.0 * math.pi / k_slow) / dx
        n_steps = float(ex.cfg.t_grid[-1]) / dt
        if n_steps * n_pts > _ORACLE_BUDGET:
            return (
                f"grid evolution would need {n_steps * n_pts:.2e} point-updates, "
                f"over the {_ORACLE_BUDGET:.0e} budget"
            )
    return None


def _run_method(name: str, ex: Experiment) -> dict:
    """Compute one method; returns files to write and summary fragments."""
    spec, state, cfg = ex.spec, ex.state, ex.cfg
    out: dict = {"files": {}, "p_series": None, "w_series": None, "summary": {}}
    if name == "quadrature":
        ps = detection_series(spec, state, cfg)
        out["files"]["quadrature.csv"] = (["t", "p"], [ps.t, ps.p])
        out["p_series"] = ps
        out["summary"]["mass_detected"] = ps.mass_detected
    elif name == "series":
        ps = p_series(spec, state, cfg, force=ex.force)
        out["files"]["series.csv"] = (["t", "p"], [ps.t, ps.p])
        out["p_series"] = ps
    elif name == "diagonal":
        ps = p_diagonal(spec, state, cfg, force=ex.force)
        out["files"]["diagonal.csv"] = (["t", "p"], [ps.t, ps.p])
        out["p_series"] = ps
    elif name == "envelope":
        gamma, t0, ps = p_exponential_envelope(spec, state, cfg, force=ex.force)
        out["files"]["envelope.csv"] = (["t", "p"], [ps.t, ps.p])
        out["p_series"] = ps
        out["summary"] = {"Gamma": gamma, "t0": t0}
    elif name == "longtime":
        res = p_longtime(spec, state, cfg)
        ps = res.prefactor_series
        out["files"]["longtime.csv"] = (["t", "p"], [ps.t, ps.p])
        out["summary"] = {
            "exponent": res.exponent,
            "fitted_window_exponent": _finite_or_none(res.fitted_window_exponent),
            "fitted_far_exponent": _finite_or_none(res.fitted_far_exponent),
            "variant": res.variant,
        }
    elif name == "beats":
        ps, summary, parts = p_beats(spec, state, cfg)
        out["files"]["beats.csv"] = (["t", "p"], [ps.t, ps.p])
        out["p_series"] = ps
        out["summary"] = {
            "Gamma1": summary.Gamma1,
            "Gamma2": summary.Gamma2,
            "q": summary.q,
            "k0": summary.k0,
            "beat_frequency": summary.beat_frequency,
            "decoherence_time": summary.decoherence_time,
        }
    elif name == "semiclassical":
        ps = p_semiclassical(spec, state, cfg)
        out["files"]["semiclassical.csv"] = (["t", "p"], [ps.t, ps.p])
        out["p_series"] = ps
    elif name == "survival":
        sv = survival_quadrature(spec, state, cfg.t_grid)
        out["files"]["survival.csv"] = (
            ["t", "w", "minus_wdot"],
            [sv.t, sv.w, sv.minus_wdot],
        )
        out["w_series"] = sv
    elif name == "oracle":
        delta_mode = "matched" if spec.deltas else "column"
        sv, cur = evolve_and_observe(
            spec, state, cfg.L, cfg.t_grid, delta_mode=delta_mode, force=ex.force
        )
        out["files"]["oracle.csv"] = (["t", "p"], [cur.t, cur.p])
        out["files"]["oracle_survival.csv"] = (
            ["t", "w", "minus_wdot"],
            [sv.t, sv.w, sv.minus_wdot],
        )
        out["p_series"] = cur
        out["w_series"] = sv
        grid = cur.meta["grid"]
        out["summary"] = {
            "absorbed": cur.meta["absorbed"],
            "norm_drift_max": cur.meta["norm_drift_max"],
            "delta_mode": cur.meta["delta_mode"],
            "dx": grid.dx,
            "dt": grid.dt,
            "n_points": grid.n_points,
            "n_steps": grid.n_steps,
        }
    else:
        raise ValidationError(f"unknown method {name!r}")
    return out


def _cross_deviations(p_results: dict, w_results: dict) -> dict:
    """Max |a-b| over the shared grid, relative to the pair's scale."""
    devs = {}
    names = sorted(p_results)
    for i, na in enumerate(names):
        for nb in names[i + 1 :]:
            pa, pb = p_results[na].p, p_results[nb].p
            scale = max(float(np.abs(pa).max()), float(np.abs(pb).max()), 1e-300)
            devs[f"{na}_vs_{nb}"] = float(np.abs(pa - pb).max() / scale)
    wn = sorted(w_results)
    for i, na in enumerate(wn):
        for nb in wn[i + 1 :]:
            wa, wb = w_results[na].w, w_results[nb].w
            scale = max(float(np.abs(wa).max()), float(np.abs(wb).max()), 1e-300)
            devs[f"{na}_vs_{nb}"] = float(np.abs(wa - wb).max() / scale)
    return devs


_PEAK_PRIORITY = ("quadrature", "series", "diagonal", "beats", "semiclassical", "oracle")


def _summarize(ex: Experiment, results: dict, skipped: dict, failed: dict) -> dict:
    rep = ex.report
    co = rep.coefficients
    summary = {
        "verdict": rep.verdict,
        "k0": ex.state.k0,
        "sigma": ex.state.sigma,
        "L": ex.cfg.L,
        "mass": ex.spec.mass,
        "Gamma": _finite_or_none(rep.Gamma),
        "t0": _finite_or_none(rep.t0),
        "beta": co.beta,
        "lambda": co.lam,
        "alpha": co.alpha,
        "xi": co.xi,
        "s": co.s,
        "w": co.w,
        "breakdown_time": _finite_or_none(rep.breakdown_time),
        "methods_run": sorted(results),
        "methods_skipped": dict(sorted(skipped.items())),
        "methods_failed": dict(sorted(failed.items())),
    }
    p_results = {n: r["p_series"] for n, r in results.items() if r["p_series"] is not None}
    w_results = {n: r["w_series"] for n, r in results.items() if r["w_series"] is not None}
    summary["cross_method_max_rel_dev"] = _cross_deviations(p_results, w_results)

    for name in _PEAK_PRIORITY:
        if name in p_results:
            ps = p_results[name]
            table = find_peaks(ps.t, ps.p, 0.05)
            summary["peaks"] = {
                "source": name,
                "times": [float(x) for x in table.times[:50]],
                "heights": [float(x) for x in table.heights[:50]],
            }
            # the rate fit only means something when the grid spans real
            # decay; group sub-peaks per crossing attempt and keep each
            # attempt's maximum so interference ripples do not enter
            fitted = {}
            gamma, t0 = rep.Gamma, rep.t0
            window_ok = (
                gamma is not None
                and t0 is not None
                and (float(ps.t[-1]) - t0) * gamma >= 1.0
            )
            if window_ok and len(table.times):
                spacing = ex.spec.mass * co.beta / ex.state.k0
                after = table.times > t0 - 0.25 * spacing
                groups: dict[int, float] = {}
                for tt, hh in zip(table.times[after], table.heights[after]):
                    n = int(round((tt - t0) / spacing))
                    groups[n] = max(groups.get(n, 0.0), hh)
                if len(groups) >= 3:
                    ns = sorted(groups)
                    times = np.array([t0 + n * spacing for n in ns])
                    heights = np.array([groups[n] for n in ns])
                    try:
                        rate, _ = fit_exponential_rate(times, heights)
                        fitted["envelope_rate"] = rate
                        fitted["envelope_rate_rel_dev"] = rate / gamma - 1.0
                    except NumericalError:
                        pass
            summary["fitted"] = fitted
            break

    for name in ("envelope", "longtime", "beats", "oracle", "quadrature"):
        if name in results and results[name]["summary"]:
            summary[name] = {
                k: _finite_or_none(v) if isinstance(v, float) else v
                for k, v in results[name]["summary"].items()
            }
    return summary


def _cmd_run(args) -> int:
    ex = _load_experiment(args.config, args.force)
    out_dir = args.output or ex.output
    if not out_dir:
        raise ValidationError("no output directory: set 'output' in the config or pass --output")
    out = Path(out_dir)

    try:
        ex.report = classify_at(
            ex.spec, ex.state.k0, ex.state.sigma, thresholds=ex.thresholds, L=ex.L
        )
    except PreconditionError as exc:
        # a resonant carrier blocks every method, but the run still
        # leaves its regime verdict and an explanatory summary on disk
        out.mkdir(parents=True, exist_ok=True)
        stub = {
            "k0": ex.state.k0,
            "sigma": ex.state.sigma,
            "verdict": "resonant",
            "detail": str(exc),
        }
        _write_json(out / "regime.json", stub)
        _write_json(
            out / "summary.json",
            {
                "verdict": "resonant",
                "detail": str(exc),
                "methods_run": [],
                "methods_skipped": {m: str(exc) for m in ex.methods},
                "methods_failed": {},
            },
        )
        print(f"error: {exc}", file=sys.stderr)
        print(f"wrote {out}/regime.json, summary.json (all methods skipped)")
        return 3

    # remaining validation happens before anything lands on disk, so an
    # exit-2 run never leaves partial artifacts behind
    t_grid = _build_time_grid(ex.time_doc, ex.spec, ex.state, ex.L, ex.report)
    ex.cfg = DetectionConfig(L=ex.L, t_grid=t_grid)
    ex.cfg.check_geometry(ex.spec)

    out.mkdir(parents=True, exist_ok=True)
    # fail-fast ordering: the regime report lands on disk before any
    # method starts, so an aborted run still explains itself
    _write_json(out / "regime.json", ex.report.to_dict())

    skipped: dict[str, str] = {}
    to_run: list[str] = []
    for name in ex.methods:
        reason = _screen(name, ex)
        if reason is None:
            to_run.append(name)
        else:
            skipped[name] = reason

    results: dict[str, dict] = {}
    failed: dict[str, str] = {}
    if to_run:
        with ThreadPoolExecutor(max_workers=_thread_cap(len(to_run))) as pool:
            futures = {name: pool.submit(_run_method, name, ex) for name in to_run}
            for name, fut in futures.items():
                try:
                    results[name] = fut.result()
                except PreconditionError as exc:
                    skipped[name] = str(exc)
                except NumericalError as exc:
                    failed[name] = str(exc)

    # all file writes serialized here, in sorted order
    for name in sorted(results):
        for fname, (header, cols) in sorted(results[name]["files"].items()):
            _write_csv(out / fname, header, cols)
    _write_json(out / "summary.json", _summarize(ex, results, skipped, failed))

    for name, why in sorted(skipped.items()):
        print(f"skipped {name}: {why}", file=sys.stderr)
    for name, why in sorted(failed.items()):
        print(f"failed {name}: {why}", file=sys.stderr)
    print(f"wrote {out}/regime.json, summary.json and {len(results)} method artifact(s)")
    if failed:
        return 4
    if skipped:
        return 3
    return 0


# ---------------------------------------------------------------- others


def _load_spec_only(path: str) -> tuple[dict, PotentialSpec]:
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc}")
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config does not parse as JSON: {exc}")
    if not isinstance(doc, dict) or "potential" not in doc:
        raise ValidationError("config needs a 'potential' object")
    return doc, parse_potential(doc["potential"])


def _state_k0_sigma(doc) -> tuple[float, float]:
    st = doc.get("state")
    if not isinstance(st, dict) or "components" not in st or "sigma" not in st:
        raise ValidationError("config needs state.components and state.sigma")
    comps = st["components"]
    if not isinstance(comps, list) or not comps:
        raise ValidationError("'state.components' must be a non-empty list")
    return float(comps[0]["k"]), float(st["sigma"])


def _emit(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def _cmd_amplitudes(args) -> int:
    doc, spec = _load_spec_only(args.config)
    if args.k_min is not None and args.k_max is not None:
        k_lo, k_hi = float(args.k_min), float(args.k_max)
    else:
        k0, _ = _state_k0_sigma(doc)
        k_lo, k_hi = 0.1 * k0, 3.0 * k0
    if not (0.0 < k_lo < k_hi):
        raise ValidationError("need 0 < k-min < k-max")
    if int(args.k_points) < 2:
        raise ValidationError("--k-points must be at least 2")
    ks = np.linspace(k_lo, k_hi, int(args.k_points))
    sd = amplitudes(spec, ks)
    header = ["k", "T_re", "T_im", "R_re", "R_im", "Rp_re", "Rp_im", "abs_T2", "theta"]
    cols = [
        ks,
        sd.T.real,
        sd.T.imag,
        sd.R.real,
        sd.R.imag,
        sd.Rp.real,
        sd.Rp.imag,
        np.abs(sd.T) ** 2,
        sd.theta,
    ]
    lines = [",".join(header)]
    for i in range(len(ks)):
        lines.append(",".join(_fmt(c[i]) for c in cols))
    _emit("\n".join(lines) + "\n", args.output)
    return 0


def _cmd_coefficients(args) -> int:
    doc, spec = _load_spec_only(args.config)
    k0, sigma = _state_k0_sigma(doc)
    co = coefficients_at(spec, k0)
    curv = curvatures_at(spec, k0)
    gamma = decay_rate(spec, k0, coeffs=co)
    payload = {
        "k0": k0,
        "sigma": sigma,
        "lambda": co.lam,
        "xi": co.xi,
        "beta": co.beta,
        "s": co.s,
        "w": co.w,
        "alpha": co.alpha,
        "arg_R": co.arg_R,
        "Gamma": gamma,
        "ddlogT": [curv.ddlogT.real, curv.ddlogT.imag],
        "ddlogR": [curv.ddlogR.real, curv.ddlogR.imag],
    }
    det = doc.get("detector")
    if isinstance(det, dict) and "L" in det:
        payload["t0"] = first_detection_time(co, float(det["L"]), spec.mass)
    text = json.dumps(payload, indent=2, sort_keys=True, allow_nan=False) + "\n"
    _emit(text, args.output)
    return 0


def _sweep_rows(spec, doc, args) -> list[dict]:
    k0, sigma = _state_k0_sigma(doc)
    if args.k_min is not None and args.k_max is not None:
        ks = np.linspace(float(args.k_min), float(args.k_max), int(args.k_points))
    else:
        ks = np.linspace(0.5 * k0, 1.5 * k0, int(args.k_points))
    if args.sigma_min is not None and args.sigma_max is not None:
        sigmas = np.linspace(float(args.sigma_min), float(args.sigma_max), int(args.sigma_points))
    else:
        sigmas = np.array([sigma])
    thresholds = doc.get("thresholds")
    det = doc.get("detector") or {}
    L = float(det["L"]) if "L" in det else None

    # chunk the k axis across workers; order is restored on collection
    n_workers = _thread_cap(len(ks))
    chunks = np.array_split(np.arange(len(ks)), n_workers)
    rows: list = [None] * len(ks)
    with ThreadPoolExecutor(max_workers=n_workers) as pool:
        futs = {
            pool.submit(regime_sweep, spec, ks[idx], sigmas, thresholds, L): idx
            for idx in chunks
            if len(idx)
        }
        for fut, idx in futs.items():
            per_k = fut.result()
            n_sig = len(sigmas)
            for j, ki in enumerate(idx):
                rows[ki] = per_k[j * n_sig : (j + 1) * n_sig]
    return [r for group in rows if group for r in group]


_SWEEP_COLUMNS = (
    "k0",
    "sigma",
    "verdict",
    "opacity",
    "resolution",
    "magnitude_drift",
    "max_curvature_ratio",
    "Gamma",
)


def _cmd_sweep(args) -> int:
    doc, spec = _load_spec_only(args.config)
    rows = _sweep_rows(spec, doc, args)
    lines = [",".join(_SWEEP_COLUMNS)]
    for r in rows:
        lines.append(
            ",".join(
                r[c] if c == "verdict" else _fmt(r[c]) for c in _SWEEP_COLUMNS
            )
        )
    _emit("\n".join(lines) + "\n", args.output)
    return 0


def _cmd_classify(args) -> int:
    if args.sweep:
        return _cmd_sweep(args)
    doc, spec = _load_spec_only(args.config)
    k0, sigma = _state_k0_sigma(doc)
    det = doc.get("detector") or {}
    L = float(det["L"]) if "L" in det else None
    rep = classify_at(spec, k0, sigma, thresholds=doc.get("thresholds"), L=L)
    _emit(json.dumps(rep.to_dict(), indent=2, sort_keys=True, allow_nan=False) + "\n", args.output)
    return 0


# ---------------------------------------------------------------- parser


def _add_sweep_flags(p) -> None:
    p.add_argument("--k-min", type=float, default=None, help="sweep lower carrier")
    p.add_argument("--k-max", type=float, default=None, help="sweep upper carrier")
    p.add_argument("--k-points", type=int, default=101, help="carriers in the sweep")
    p.add_argument("--sigma-min", type=float, default=None, help="sweep lower sigma")
    p.add_argument("--sigma-max", type=float, default=None, help="sweep upper sigma")
    p.add_argument("--sigma-points", type=int, default=1, help="sigmas in the sweep")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="decay-povm",
        description="Arrival-time detection statistics for decay through a 1D barrier.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment config, write CSV/JSON artifacts")
    p_run.add_argument("config", help="experiment config (JSON)")
    p_run.add_argument("--output", default=None, help="output directory (overrides config)")
    p_run.add_argument(
        "--force",
        action="store_true",
        help="downgrade method precondition failures to warnings and run anyway",
    )
    p_run.set_defaults(func=_cmd_run)

    p_amp = sub.add_parser("amplitudes", help="T/R/R' over a carrier grid as CSV")
    p_amp.add_argument("config", help="config with the potential (and optional state)")
    p_amp.add_argument("--k-min", type=float, default=None)
    p_amp.add_argument("--k-max", type=float, default=None)
    p_amp.add_argument("--k-points", type=int, default=301)
    p_amp.add_argument("--output", default=None, help="CSV file (default: stdout)")
    p_amp.set_defaults(func=_cmd_amplitudes)

    p_coef = sub.add_parser("coefficients", help="barrier coefficients at the carrier as JSON")
    p_coef.add_argument("config", help="config with potential and state")
    p_coef.add_argument("--output", default=None, help="JSON file (default: stdout)")
    p_coef.set_defaults(func=_cmd_coefficients)

    p_cls = sub.add_parser("classify", help="regime report for the config as JSON")
    p_cls.add_argument("config", help="config with potential and state")
    p_cls.add_argument("--sweep", action="store_true", help="emit a verdict map instead")
    _add_sweep_flags(p_cls)
    p_cls.add_argument("--output", default=None, help="file (default: stdout)")
    p_cls.set_defaults(func=_cmd_classify)

    p_sw = sub.add_parser("sweep", help="verdict map over (k0, sigma) as CSV")
    p_sw.add_argument("config", help="config with potential and state")
    _add_sweep_flags(p_sw)
    p_sw.add_argument("--output", default=None, help="CSV file (default: stdout)")
    p_sw.set_defaults(func=_cmd_sweep)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except PreconditionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except DecayPovmError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
