"""Experiment orchestration: JSON config -> pipeline -> curve CSV + report JSON.

A config is a JSON object; the schema is documented in ``docs/formats.md``.
Every artifact except ``provenance.json`` (which records wall time) is a
pure function of the config, so re-running a config reproduces the same
bytes.
"""

from __future__ import annotations

import copy
import csv
import io
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .extraction import (SIGN_LABELS, ExtractionError, RecoveryReport, classify_sign,
                         estimate_distance, leading_ratio_1d, recover_gamma_beta_1d)
from .geometry import (AxisBox, Ball, ConfigurationError, GeometryError, HalfLine1D,
                       Interval1D, SceneSpec, min_observation_time)
from .indicator import IndicatorCurve, scene_hash
from .sources import SourceBall, source_moment

__all__ = [
    "ExperimentConfig",
    "RunArtifacts",
    "load_config",
    "parse_config",
    "run_experiment",
    "sweep",
    "emit_reference",
    "write_curve_csv",
    "EXIT_OK",
    "EXIT_CONFIG",
    "EXIT_FIT",
    "EXIT_THRESHOLD",
    "CURVE_HEADER",
    "SWEEP_HEADER",
]

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_FIT = 3
EXIT_THRESHOLD = 4

AUTO_T_FACTOR = 1.25
CURVE_HEADER = ["tau", "indicator", "log_abs_indicator", "pointwise_estimate"]
SWEEP_HEADER = ["value", "distance", "sign", "gamma", "beta", "residual", "status", "exit_code"]

_DEFAULT_WINDOW = {1: (6.0, 12.0), 3: (4.0, 8.0)}
_DEFAULT_FIT = {1: "moment", 3: "power"}


# -- config parsing ---------------------------------------------------------

def _get(obj: dict, key: str, path: str, kind=None, default=...):
    if key not in obj:
        if default is ...:
            raise ConfigurationError(f"{path}.{key}: missing")
        return default
    val = obj[key]
    if kind is float:
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            raise ConfigurationError(f"{path}.{key}: expected a number, got {val!r}")
        val = float(val)
        if not math.isfinite(val):
            raise ConfigurationError(f"{path}.{key}: must be finite")
    elif kind is int:
        if isinstance(val, bool) or not isinstance(val, int):
            raise ConfigurationError(f"{path}.{key}: expected an integer, got {val!r}")
    elif kind is not None and not isinstance(val, kind):
        raise ConfigurationError(f"{path}.{key}: expected {kind.__name__}, got {val!r}")
    return val


def _vector(obj, key, path):
    val = _get(obj, key, path, list)
    if len(val) != 3 or not all(isinstance(v, (int, float)) and not isinstance(v, bool)
                                for v in val):
        raise ConfigurationError(f"{path}.{key}: expected three numbers")
    return tuple(float(v) for v in val)


def _shape(obj, path):
    if not isinstance(obj, dict):
        raise ConfigurationError(f"{path}: expected an object")
    kind = _get(obj, "type", path, str)
    try:
        if kind == "ball":
            return Ball(_vector(obj, "center", path), _get(obj, "radius", path, float))
        if kind == "box":
            return AxisBox(_vector(obj, "lo", path), _vector(obj, "hi", path))
        if kind == "halfline":
            return HalfLine1D(_get(obj, "a", path, float))
        if kind == "interval":
            return Interval1D(_get(obj, "lo", path, float), _get(obj, "hi", path, float))
    except GeometryError as exc:
        raise ConfigurationError(f"{path}: {exc}") from None
    raise ConfigurationError(f"{path}.type: unknown shape {kind!r}")


@dataclass
class ExperimentConfig:
    name: str
    scene: SceneSpec
    amplitude: float
    data_mode: str
    T: float | str
    h: float
    courant: float
    tau: np.ndarray
    window: tuple[float, float]
    distance_fit: str
    coefficients: bool
    n_theta: int = 24
    interp_order: int = 3
    output: str | None = None
    raw: dict = field(default_factory=dict)

    @property
    def min_observation_time(self) -> float:
        return min_observation_time(self.scene, self.data_mode)

    @property
    def final_time(self) -> float:
        if self.T == "auto":
            return AUTO_T_FACTOR * self.min_observation_time
        return float(self.T)


def parse_config(raw: dict, overrides: dict | None = None) -> ExperimentConfig:
    """Build and validate an :class:`ExperimentConfig`.

    ``overrides`` may set ``tau_min``, ``tau_max``, ``tau_count`` and ``out``.
    Errors are :class:`ConfigurationError` naming the offending config path.
    """
    if not isinstance(raw, dict):
        raise ConfigurationError("config: expected a JSON object")
    raw = copy.deepcopy(raw)
    overrides = overrides or {}
    sc = _get(raw, "scene", "config", dict)
    dim = _get(sc, "dimension", "scene", int)
    if dim not in (1, 3):
        raise ConfigurationError("scene.dimension: must be 1 or 3")
    mode = _get(sc, "mode", "scene", str, "robin")
    obstacle = _shape(sc["obstacle"], "scene.obstacle") if sc.get("obstacle") else None
    source = _shape(_get(sc, "source", "scene", dict), "scene.source")
    surface = _shape(sc["surface"], "scene.surface") if sc.get("surface") else None
    amplitude = _get(sc["source"], "amplitude", "scene.source", float, 1.0)
    if amplitude == 0:
        raise ConfigurationError("scene.source.amplitude: zero initial data carries no signal")
    scene = SceneSpec(
        dimension=dim,
        obstacle=obstacle,
        source=source,
        surface=surface,
        gamma=_get(sc, "gamma", "scene", float, 0.0),
        beta=_get(sc, "beta", "scene", float, 0.0),
        alpha=_get(sc, "alpha", "scene", float, 1.0),
        mode=mode,
    )
    data_mode = _get(raw, "data_mode", "config", str, "backscatter")
    if data_mode not in ("surface", "backscatter"):
        raise ConfigurationError(f"config.data_mode: unknown data mode {data_mode!r}")
    if scene.mode == "free" or scene.obstacle is None:
        raise ConfigurationError("scene.obstacle: an obstacle is needed to run an experiment")
    if dim == 3 and data_mode == "surface" and surface is None:
        raise ConfigurationError("scene.surface: surface data mode requires a surface Ω")
    if dim == 1 and scene.mode != "robin":
        raise ConfigurationError("scene.mode: 1D scenes support the robin mode only")
    try:
        scene.validate(data_mode)
    except (ConfigurationError, GeometryError) as exc:
        raise ConfigurationError(f"scene: {exc}") from None

    T = raw.get("T", "auto")
    if T != "auto":
        T = _get(raw, "T", "config", float)
        if T <= 0:
            raise ConfigurationError("config.T: must be positive or \"auto\"")

    disc = _get(raw, "discretization", "config", dict, {})
    h = _get(disc, "h", "discretization", float, 1 / 400 if dim == 1 else 0.05)
    courant = _get(disc, "courant", "discretization", float, 1.0 if dim == 1 else 0.9)
    if h <= 0:
        raise ConfigurationError("discretization.h: must be positive")
    if not 0 < courant <= 1:
        raise ConfigurationError("discretization.courant: must lie in (0, 1]")
    n_theta = _get(disc, "n_theta", "discretization", int, 24)
    interp_order = _get(disc, "interp_order", "discretization", int, 3)
    if interp_order not in (1, 3):
        raise ConfigurationError("discretization.interp_order: must be 1 or 3")

    tspec = _get(raw, "tau", "config", dict, {})
    t_lo = float(overrides.get("tau_min") or _get(tspec, "min", "tau", float, 2.0))
    t_hi = float(overrides.get("tau_max")
                 or _get(tspec, "max", "tau", float, 12.0 if dim == 1 else 10.0))
    count = int(overrides.get("tau_count") or _get(tspec, "count", "tau", int, 24))
    if not 0 < t_lo < t_hi or count < 2:
        raise ConfigurationError("tau: need 0 < min < max and count >= 2")
    tau = np.linspace(t_lo, t_hi, count)

    fit = _get(raw, "fit", "config", dict, {})
    window = tuple(float(v) for v in fit.get("window", _DEFAULT_WINDOW[dim]))
    if len(window) != 2 or not window[0] < window[1]:
        raise ConfigurationError("fit.window: expected [lo, hi] with lo < hi")
    method = _get(fit, "distance", "fit", str, _DEFAULT_FIT[dim])
    if method not in ("plain", "moment", "power"):
        raise ConfigurationError(f"fit.distance: unknown method {method!r}")
    coefficients = _get(fit, "coefficients", "fit", bool, dim == 1)
    if coefficients and dim != 1:
        raise ConfigurationError("fit.coefficients: available for 1D scenes only")

    output = overrides.get("out") or raw.get("output")
    return ExperimentConfig(
        name=str(raw.get("name", "experiment")),
        scene=scene,
        amplitude=amplitude,
        data_mode=data_mode,
        T=T,
        h=h,
        courant=courant,
        tau=tau,
        window=window,
        distance_fit=method,
        coefficients=coefficients,
        n_theta=n_theta,
        interp_order=interp_order,
        output=output,
        raw=raw,
    )


def load_config(path, overrides: dict | None = None) -> ExperimentConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigurationError(f"{path}: cannot read ({exc.strerror})") from None
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid JSON ({exc})") from None
    try:
        return parse_config(raw, overrides)
    except ConfigurationError as exc:
        raise ConfigurationError(f"{path}: {exc}") from None


# -- artifacts --------------------------------------------------------------

def _num(x) -> str:
    x = float(x)
    return repr(x) if math.isfinite(x) else ("nan" if math.isnan(x) else ("inf" if x > 0 else "-inf"))


def write_curve_csv(path, curve: IndicatorCurve) -> None:
    """Write ``tau,indicator,log_abs_indicator,pointwise_estimate`` rows."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CURVE_HEADER)
    with np.errstate(divide="ignore"):
        logs = np.log(np.abs(curve.values))
    for t, v, lv in zip(curve.tau, curve.values, logs):
        w.writerow([_num(t), _num(v), _num(lv), _num(-lv / (2 * t))])
    Path(path).write_text(buf.getvalue())


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def _dump(path, obj) -> None:
    Path(path).write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")


@dataclass
class RunArtifacts:
    curve_path: Path | None
    report_path: Path | None
    provenance_path: Path | None
    report: RecoveryReport | None
    exit_code: int
    status: str
    curve: IndicatorCurve | None = None
    noise_floor: np.ndarray | None = None
    error: str | None = None


# -- pipeline ---------------------------------------------------------------

def _curves(cfg: ExperimentConfig, T: float, tag: str):
    """Indicator curve and per-tau noise floor for the configured data mode."""
    from .pipeline import indicator_curves_1d, indicator_curves_3d
    from .solver1d import Wave1DConfig

    scene = cfg.scene
    src = SourceBall(scene.source, cfg.amplitude)
    if scene.dimension == 1:
        wcfg = Wave1DConfig(scene.obstacle.a, scene.gamma, scene.beta, cfg.h, T, cfg.courant)
        c = indicator_curves_1d(wcfg, src, cfg.tau, x_obs=scene.surface_point, scene=tag)
        mode = "surface" if cfg.data_mode == "surface" else "backscatter"
        return c.curve(mode), c.noise_floor(mode), {"T_discrete": c.meta["T"]}
    c = indicator_curves_3d(scene, cfg.h, T, cfg.tau, modes=(cfg.data_mode,),
                            courant=cfg.courant, n_theta=cfg.n_theta,
                            interp_order=cfg.interp_order, amplitude=cfg.amplitude,
                            scene_id=tag)
    meta = {"T_discrete": c.meta["T"], "grid_shape": list(c.grid.shape), "dt": c.dt}
    return c.curves[cfg.data_mode], c.noise_floor(cfg.data_mode), meta


def _extract(cfg: ExperimentConfig, curve: IndicatorCurve, floor, T: float):
    scene = cfg.scene
    src = SourceBall(scene.source, cfg.amplitude)
    t_min = cfg.min_observation_time
    sign = classify_sign(curve, floor, cfg.window)
    notes = []
    moment = source_moment(src, curve.tau)
    fit = None
    distance = None
    try:
        fit = estimate_distance(curve, cfg.window,
                                moment=moment if cfg.distance_fit == "moment" else None,
                                fit_power=cfg.distance_fit == "power")
        distance = fit.distance
    except ExtractionError as exc:
        notes.append(f"distance fit failed: {exc}")
    if sign == 0:
        notes.append("indicator at the no-obstacle noise floor: sign indeterminate, "
                     "distance not identifiable")
        distance = None
    gamma = beta = None
    coeffs = None
    if cfg.coefficients and distance is not None and sign != 0:
        try:
            coeffs = recover_gamma_beta_1d(curve, moment, distance, cfg.window,
                                           fit_distance=True)
            gamma, beta = coeffs["gamma"], coeffs["beta"]
            if gamma is None:
                notes.append("fitted gamma < 0 lies outside the model: gamma indeterminate")
        except ExtractionError as exc:
            notes.append(f"coefficient fit failed: {exc}")
    threshold_ok = T > t_min
    if not threshold_ok:
        notes.append(f"T = {T!r} does not exceed the minimum observation time {t_min!r}: "
                     "distance estimate unreliable")
    fit_dict = {"distance": None if fit is None else _jsonable(fit.__dict__),
                "method": cfg.distance_fit, "window": list(cfg.window)}
    if coeffs is not None:
        fit_dict["coefficients"] = coeffs
    report = RecoveryReport(
        distance=distance,
        sign=sign,
        sign_label=SIGN_LABELS[sign],
        fit=fit_dict,
        gamma=gamma,
        beta=beta,
        T=T,
        min_observation_time=t_min,
        threshold_ok=threshold_ok,
        reliable=threshold_ok and sign != 0 and distance is not None,
        notes=notes,
    )
    if not threshold_ok:
        return report, EXIT_THRESHOLD, "threshold_violation"
    if distance is None or sign == 0:
        return report, EXIT_FIT, "fit_failure"
    return report, EXIT_OK, "ok"


def run_experiment(cfg: ExperimentConfig, out: str | Path | None = None) -> RunArtifacts:
    """Run one configured experiment and write its artifacts to ``out``.

    Artifacts: ``curve.csv``, ``report.json`` and ``provenance.json``. A
    failure inside the pipeline still writes ``report.json`` with
    ``status = "error"`` so that partial runs are visible.
    """
    out = Path(out or cfg.output or f"runs/{cfg.name}")
    out.mkdir(parents=True, exist_ok=True)
    tag = scene_hash(cfg.raw.get("scene"))
    T = cfg.final_time
    t0 = time.perf_counter()
    base = {
        "name": cfg.name,
        "scene_hash": tag,
        "dimension": cfg.scene.dimension,
        "mode": cfg.scene.mode,
        "data_mode": cfg.data_mode,
        "scene_distance": cfg.scene.dist_obstacle_source(),
    }
    try:
        curve, floor, meta = _curves(cfg, T, tag)
    except Exception as exc:  # noqa: BLE001 - reported, not swallowed
        log.error("%s: pipeline failed: %s", cfg.name, exc)
        _dump(out / "report.json", {**base, "status": "error", "error": f"{type(exc).__name__}: {exc}"})
        code = EXIT_CONFIG if isinstance(exc, ConfigurationError) else EXIT_FIT
        return RunArtifacts(None, out / "report.json", None, None, code, "error", error=str(exc))
    report, code, status = _extract(cfg, curve, floor, T)
    write_curve_csv(out / "curve.csv", curve)
    _dump(out / "report.json", {**base, **report.to_dict(), **meta, "status": status,
                                "exit_code": code, "noise_floor": floor})
    _dump(out / "provenance.json", {
        "config": cfg.raw,
        "overrides": {"tau": [cfg.tau[0], cfg.tau[-1], cfg.tau.size]},
        "code_version": __version__,
        "wall_time_s": round(time.perf_counter() - t0, 3),
    })
    log.info("%s: status=%s distance=%s sign=%+d", cfg.name, status, report.distance, report.sign)
    return RunArtifacts(out / "curve.csv", out / "report.json", out / "provenance.json",
                        report, code, status, curve, floor)


# -- sweeps -----------------------------------------------------------------

def _set_path(obj: dict, path: str, value) -> None:
    keys = path.split(".")
    node = obj
    for k in keys[:-1]:
        if not isinstance(node, dict) or k not in node:
            raise ConfigurationError(f"sweep parameter {path!r}: {k!r} does not resolve")
        node = node[k]
    if not isinstance(node, dict) or keys[-1] not in node:
        raise ConfigurationError(f"sweep parameter {path!r}: {keys[-1]!r} does not resolve")
    node[keys[-1]] = value


def _sweep_one(args):
    template, path, value, out, overrides = args
    raw = copy.deepcopy(template)
    try:
        _set_path(raw, path, value)
        cfg = parse_config(raw, overrides)
        art = run_experiment(cfg, out)
    except ConfigurationError as exc:
        return {"value": value, "status": "config_invalid", "exit_code": EXIT_CONFIG,
                "error": str(exc)}
    except Exception as exc:  # noqa: BLE001 - recorded per row
        return {"value": value, "status": "error", "exit_code": EXIT_FIT, "error": str(exc)}
    r = art.report
    row = {"value": value, "status": art.status, "exit_code": art.exit_code}
    if r is not None:
        resid = None
        if r.fit and r.fit.get("distance"):
            resid = r.fit["distance"]["residual"]
        row.update(distance=r.distance, sign=r.sign, gamma=r.gamma, beta=r.beta, residual=resid)
    return row


def sweep(template: dict, path: str, values, out, workers: int = 1,
          overrides: dict | None = None) -> list[dict]:
    """One run per value of the dotted config ``path``; writes ``sweep.csv``.

    A failing run is recorded in its row and the sweep carries on. Rows keep
    the order of ``values`` whatever the worker count.
    """
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    if values:
        _set_path(copy.deepcopy(template), path, values[0])
    jobs = [(template, path, v, out / f"run_{i:03d}", overrides) for i, v in enumerate(values)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_one, jobs))
    else:
        rows = [_sweep_one(j) for j in jobs]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_HEADER)
    for row in rows:
        w.writerow([_cell(row.get(k)) for k in SWEEP_HEADER])
    (out / "sweep.csv").write_text(buf.getvalue())
    return rows


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return _num(v)
    return str(v)


# -- reference curves -------------------------------------------------------

def emit_reference(cfg: ExperimentConfig, out) -> Path:
    """Closed-form 1D indicator for ``T -> inf`` on the config's tau grid.

    Writes ``reference.csv`` in the curve format. Only 1D scenes have a
    closed form.
    """
    scene = cfg.scene
    if scene.dimension != 1:
        raise ConfigurationError("scene.dimension: reference curves exist for 1D scenes only")
    src = SourceBall(scene.source, cfg.amplitude)
    tau = cfg.tau
    m = source_moment(src, tau)
    d = scene.dist_obstacle_source()
    vals = leading_ratio_1d(tau, scene.gamma, scene.beta) * m**2 * np.exp(-2 * tau * d)
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "reference.csv"
    write_curve_csv(path, IndicatorCurve(tau, vals, "1d", scene_hash(cfg.raw.get("scene"))))
    return path
