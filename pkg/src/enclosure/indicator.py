"""Indicator functionals built from measured and free fields.

Both functionals are linear in the measured field ``w`` and vanish when
``w = v``. Pipelines therefore feed them the scattered part ``w - v``
(obtained against a discrete control run), which sidesteps the cancellation
of two nearly equal numbers.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .geometry import AxisBox, Ball
from .sources import SourceBall, eval_grad_v, eval_v
from .transform import LaplaceField

__all__ = [
    "IndicatorCurve",
    "SurfaceQuadrature",
    "surface_quadrature",
    "surface_indicator",
    "backscatter_indicator",
    "consistency_gap",
    "scene_hash",
]


@dataclass
class IndicatorCurve:
    tau: np.ndarray
    values: np.ndarray
    mode: str
    scene: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.tau = np.asarray(self.tau, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.tau.shape != self.values.shape:
            raise ValueError("indicator values do not match the tau grid")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("non-finite indicator values")
        if self.mode not in ("surface", "backscatter", "1d"):
            raise ValueError(f"unknown data mode {self.mode!r}")

    def window(self, lo: float, hi: float) -> "IndicatorCurve":
        keep = (self.tau >= lo - 1e-12) & (self.tau <= hi + 1e-12)
        return IndicatorCurve(self.tau[keep], self.values[keep], self.mode, self.scene,
                              dict(self.meta))

    def scaled(self, s: float) -> "IndicatorCurve":
        return IndicatorCurve(self.tau, s * self.values, self.mode, self.scene, dict(self.meta))


def scene_hash(obj) -> str:
    """Short stable digest of a JSON-serializable scene description."""
    blob = json.dumps(obj, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


@dataclass
class SurfaceQuadrature:
    points: np.ndarray
    weights: np.ndarray
    normals: np.ndarray


def surface_quadrature(surface, n_theta: int = 24) -> SurfaceQuadrature:
    """Product rule on ``∂Ω``.

    For a ball: Gauss-Legendre in ``cos(theta)`` times the trapezoid rule in
    ``phi`` with ``2 n_theta`` points. For a box: a tensor Gauss rule per face
    with ``n_theta`` points per side.
    """
    if isinstance(surface, Ball):
        mu, wmu = np.polynomial.legendre.leggauss(n_theta)
        n_phi = 2 * n_theta
        phi = 2 * np.pi * np.arange(n_phi) / n_phi
        M, P = np.meshgrid(mu, phi, indexing="ij")
        s = np.sqrt(1 - M**2)
        normals = np.column_stack([(s * np.cos(P)).ravel(), (s * np.sin(P)).ravel(), M.ravel()])
        r = surface.radius
        weights = (np.outer(wmu, np.full(n_phi, 2 * np.pi / n_phi)) * r**2).ravel()
        return SurfaceQuadrature(np.asarray(surface.center) + r * normals, weights, normals)
    if isinstance(surface, AxisBox):
        g, wg = np.polynomial.legendre.leggauss(n_theta)
        lo, hi = surface.bounds()
        pts, wts, nrm = [], [], []
        for axis in range(3):
            o = [a for a in range(3) if a != axis]
            half = 0.5 * (hi - lo)
            mid = 0.5 * (hi + lo)
            U, V = np.meshgrid(mid[o[0]] + half[o[0]] * g, mid[o[1]] + half[o[1]] * g,
                               indexing="ij")
            W = np.outer(wg, wg).ravel() * half[o[0]] * half[o[1]]
            for side, sign in ((lo[axis], -1.0), (hi[axis], 1.0)):
                p = np.empty((U.size, 3))
                p[:, axis] = side
                p[:, o[0]] = U.ravel()
                p[:, o[1]] = V.ravel()
                n = np.zeros_like(p)
                n[:, axis] = sign
                pts.append(p)
                wts.append(W)
                nrm.append(n)
        return SurfaceQuadrature(np.vstack(pts), np.concatenate(wts), np.vstack(nrm))
    raise TypeError(f"unsupported surface {type(surface).__name__}")


def surface_indicator(lf: LaplaceField, src: SourceBall, quad: SurfaceQuadrature,
                      scene: str = "") -> IndicatorCurve:
    """``I(tau) = ∫_{∂Ω} (∂_ν v w - ∂_ν w v) dS`` by the supplied quadrature.

    ``lf`` holds ``w`` (or ``w - v``) and its outward normal derivative at the
    quadrature points.
    """
    if lf.normal_derivative is None:
        raise ValueError("surface indicator needs normal derivatives of w")
    if lf.n_probes != quad.points.shape[0]:
        raise ValueError("laplace field and quadrature use different probe sets")
    values = np.empty(lf.tau.size)
    for j, tau in enumerate(lf.tau):
        v = eval_v(src, quad.points, tau)
        dv = np.einsum("ij,ij->i", eval_grad_v(src, quad.points, tau), quad.normals)
        integrand = dv * lf.values[:, j] - lf.normal_derivative[:, j] * v
        values[j] = np.dot(quad.weights, integrand)
    return IndicatorCurve(lf.tau, values, "surface", scene)


def backscatter_indicator(scattered: LaplaceField, weights, scene: str = "",
                          mode: str = "backscatter") -> IndicatorCurve:
    """``I(tau) = ∫_B f (w - v) dx`` as a weighted sum over probes.

    ``scattered`` holds ``w - v`` on probes covering ``B``; ``weights`` are
    ``f(x_k)`` times the volume (or length) each probe represents.
    """
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (scattered.n_probes,):
        raise ValueError("weights do not match the probe set covering B")
    return IndicatorCurve(scattered.tau, weights @ scattered.values, mode, scene)


def consistency_gap(surface_curve: IndicatorCurve, backscatter_curve: IndicatorCurve,
                    relative: bool = False) -> np.ndarray:
    """Pointwise ``|I_surface - I_backscatter|``, divided by ``|I_backscatter|``
    when ``relative``."""
    if not np.array_equal(surface_curve.tau, backscatter_curve.tau):
        raise ValueError("curves live on different tau grids")
    gap = np.abs(surface_curve.values - backscatter_curve.values)
    if relative:
        with np.errstate(divide="ignore", invalid="ignore"):
            gap = gap / np.abs(backscatter_curve.values)
    return gap
