"""Solver -> transform -> indicator chains used by the runner and the tests."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson

from .indicator import IndicatorCurve, backscatter_indicator
from .solver1d import TimeTrace, Wave1DConfig, free_tail_1d, indicator_1d, solve_1d
from .sources import SourceBall, eval_v_1d
from .transform import LaplaceField, laplace_in_time

__all__ = ["Curves1D", "indicator_curves_1d", "derivative_weights"]

# 4th-order centered first derivative on offsets -2..2
derivative_weights = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0


@dataclass
class Curves1D:
    surface: IndicatorCurve
    backscatter: IndicatorCurve
    scattered: LaplaceField
    trace: TimeTrace
    meta: dict = field(default_factory=dict)
    controls: dict = field(default_factory=dict)

    def curve(self, mode: str) -> IndicatorCurve:
        return self.surface if mode == "surface" else self.backscatter

    def noise_floor(self, mode: str) -> np.ndarray:
        """Per-tau floor: the no-obstacle indicator magnitude plus round-off."""
        return np.abs(self.controls[mode].values) + self.meta["roundoff"][mode]


def _grid_nodes(lo: float, hi: float, anchor: float, h: float) -> np.ndarray:
    k0 = int(np.ceil((lo - anchor) / h - 1e-9))
    k1 = int(np.floor((hi - anchor) / h + 1e-9))
    return anchor + h * np.arange(k0, k1 + 1)


def indicator_curves_1d(cfg: Wave1DConfig, src: SourceBall, tau, x_obs: float = 0.0,
                        scene: str = "", obstacle: bool = True) -> Curves1D:
    """Indicator curves of the half-line problem from a finite-difference run.

    The scattered field ``w - v`` is the transform of the obstacle run minus
    the transform of a control run without obstacle, less the analytic
    free-field tail beyond ``T``. It feeds both the point indicator at
    ``x_obs`` and the back-scattering integral over ``B``. ``obstacle=False``
    runs without the obstacle. The no-obstacle curves are always returned in
    ``controls``; their size sets the noise floor.
    """
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    h = cfg.h
    obs = x_obs + h * np.arange(-2, 3)
    iv = src.geometry
    b_nodes = _grid_nodes(iv.lo, iv.hi, cfg.a, h)
    probes = np.concatenate([obs, b_nodes])
    run = solve_1d(cfg, src, probes, obstacle=obstacle)
    ctrl = solve_1d(cfg, src, probes, obstacle=False)
    diff = laplace_in_time(run - ctrl, tau)
    T = run.T
    tail = free_tail_1d(src, probes, T, tau)
    scattered = diff.values - tail
    lf = LaplaceField(tau, scattered, probes=probes)

    v0, dv0 = (np.array(z) for z in zip(*(eval_v_1d(src, x_obs, t) for t in tau)))
    # Simpson weights over the source nodes, f = amplitude on B
    nb = b_nodes.size
    if nb > 2:
        weights = src.amplitude * simpson(np.eye(nb), x=b_nodes, axis=1)
    else:
        weights = np.full(nb, src.amplitude * h)

    def curves(values):
        ws = values[:5]
        point = indicator_1d(ws[2], derivative_weights @ ws / h, v0, dv0)
        back = backscatter_indicator(LaplaceField(tau, values[5:], probes=b_nodes), weights,
                                     scene)
        return IndicatorCurve(tau, point, "1d", scene), back

    surface, back = curves(scattered)
    ctrl_surface, ctrl_back = curves(-tail)
    # run and control agree bit for bit until the reflection arrives, so the
    # round-off scales with the scattered field, growing with the step count
    rel = np.finfo(float).eps * max(64, run.values.shape[-1])
    absval = np.abs(scattered) + np.abs(tail)
    ws = absval[:5]
    roundoff = {
        "surface": rel * (np.abs(dv0) * ws[2] + np.abs(v0) * (np.abs(derivative_weights) @ ws) / h),
        "backscatter": rel * np.abs(weights) @ absval[5:],
    }
    meta = {"T": T, "roundoff": roundoff}
    return Curves1D(surface, back, lf, run, meta,
                    {"surface": ctrl_surface, "backscatter": ctrl_back})


@dataclass
class Curves3D:
    curves: dict
    controls: dict
    scattered: dict
    grid: object
    dt: float
    meta: dict = field(default_factory=dict)

    def noise_floor(self, mode: str) -> np.ndarray:
        """Per-tau floor: the control run's indicator magnitude plus round-off."""
        return np.abs(self.controls[mode].values) + self.meta["roundoff"][mode]


def indicator_curves_3d(scene, h: float, T: float, tau, modes=("backscatter",),
                        courant: float = 0.9, n_theta: int = 24, interp_order: int = 3,
                        amplitude: float = 1.0, scene_id: str = "",
                        grid=None, energy: bool = False) -> Curves3D:
    """Indicator curves for a 3D scene from a finite-difference run.

    ``scene`` is a :class:`~enclosure.geometry.SceneSpec` in ``robin``,
    ``refractive`` or ``free`` mode. ``modes`` selects ``"backscatter"``
    (``∫_B f (w - v)``) and/or ``"surface"`` (flux form on ``∂Ω``).
    """
    from .indicator import surface_indicator, surface_quadrature
    from .solver3d import (ProbeSet, auto_grid, medium_field, node_probes, point_probes,
                           robin_mask, solve_free, solve_refractive, solve_robin,
                           source_field)
    from .sources import eval_grad_v, eval_v, free_tail_3d

    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    src = SourceBall(scene.source, amplitude)
    obstacle = None if scene.mode == "free" else scene.obstacle
    speed_max = 1.0
    if scene.mode == "refractive" and scene.alpha < 1:
        speed_max = 1.0 / np.sqrt(scene.alpha)

    quad = None
    extra_points = np.empty((0, 3))
    if "surface" in modes:
        quad = surface_quadrature(scene.surface, n_theta)
        offsets = h * np.arange(-2, 3)
        stencil = quad.points[:, None, :] + offsets[None, :, None] * quad.normals[:, None, :]
        extra_points = stencil.reshape(-1, 3)
    if grid is None:
        anchor = np.vstack([extra_points, np.asarray(scene.source.center)[None, :]])
        grid = auto_grid(src, anchor, T, h, courant, speed_max, obstacle)

    f = source_field(src, grid)
    named = {}
    if "backscatter" in modes:
        named["backscatter"] = node_probes(grid, f != 0)
    if "surface" in modes:
        named["surface"] = point_probes(grid, extra_points, interp_order)
    probes = ProbeSet.concat(named)

    if scene.mode == "refractive":
        medium = medium_field(obstacle, grid, scene.alpha)
        run = solve_refractive(grid, medium, src, probes, T, energy=energy)
    elif scene.mode == "robin":
        mask = robin_mask(obstacle, grid, scene.gamma, scene.beta)
        run = solve_robin(grid, mask, src, probes, T, energy=energy)
    else:
        run = solve_free(grid, src, probes, T, energy=energy)
    ctrl = solve_free(grid, src, probes, T, dt=run.dt)

    T_run = run.T
    diff = laplace_in_time(run - ctrl, tau).values
    tail = free_tail_3d(src, probes.points, T_run, tau)
    scattered = diff - tail
    ctrl_scattered = -tail

    curves, controls, store, roundoff = {}, {}, {}, {}
    # see indicator_curves_1d for the round-off model
    rel = np.finfo(float).eps * max(64, run.values.shape[-1])
    absval = np.abs(scattered) + np.abs(tail)
    if "backscatter" in modes:
        sl = probes.labels["backscatter"]
        weights = h**3 * f.ravel()[f.ravel() != 0]
        lf = LaplaceField(tau, scattered[sl], probes=probes.points[sl])
        store["backscatter"] = lf
        curves["backscatter"] = backscatter_indicator(lf, weights, scene_id)
        controls["backscatter"] = backscatter_indicator(
            LaplaceField(tau, ctrl_scattered[sl]), weights, scene_id)
        roundoff["backscatter"] = rel * np.abs(weights) @ absval[sl]
    if "surface" in modes:
        sl = probes.labels["surface"]
        nq = quad.points.shape[0]

        def surface_field(values, weights=derivative_weights):
            block = values[sl].reshape(nq, 5, tau.size)
            val = block[:, 2, :]
            dn = np.einsum("k,qkt->qt", weights, block) / h
            return LaplaceField(tau, val, probes=quad.points, normal_derivative=dn)

        lf = surface_field(scattered)
        store["surface"] = lf
        curves["surface"] = surface_indicator(lf, src, quad, scene_id)
        controls["surface"] = surface_indicator(surface_field(ctrl_scattered), src, quad, scene_id)
        fa = surface_field(absval, np.abs(derivative_weights))
        v = np.array([eval_v(src, quad.points, t) for t in tau]).T
        dv = np.array([np.abs(eval_grad_v(src, quad.points, t)).sum(axis=1) for t in tau]).T
        scale = quad.weights @ (dv * fa.values + v * fa.normal_derivative)
        roundoff["surface"] = rel * scale
    meta = {"T": T_run, "grid_shape": grid.shape, "roundoff": roundoff}
    if energy:
        meta["energy"] = run.meta["energy"]
    return Curves3D(curves, controls, store, grid, run.dt, meta)
