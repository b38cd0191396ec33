"""Shapes, set distances and observation-time thresholds."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy.optimize import minimize

__all__ = [
    "Ball",
    "AxisBox",
    "HalfLine1D",
    "Interval1D",
    "Shape",
    "SceneSpec",
    "GeometryError",
    "ConfigurationError",
    "dist_sets",
    "min_observation_time",
    "broken_path_length",
    "fibonacci_sphere",
]


class GeometryError(ValueError):
    """Unsupported shape or shape combination."""


class ConfigurationError(ValueError):
    """A scene violates a hypothesis needed by the method."""


@dataclass(frozen=True)
class Ball:
    center: tuple[float, float, float]
    radius: float

    def __post_init__(self):
        c = tuple(float(v) for v in self.center)
        if len(c) != 3:
            raise GeometryError("ball center must be a 3-vector")
        object.__setattr__(self, "center", c)
        if not self.radius > 0:
            raise GeometryError("ball radius must be positive")

    dimension = 3

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.linalg.norm(x - np.asarray(self.center), axis=-1) < self.radius

    def signed_distance(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.linalg.norm(x - np.asarray(self.center), axis=-1) - self.radius

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        c = np.asarray(self.center)
        return c - self.radius, c + self.radius


@dataclass(frozen=True)
class AxisBox:
    lo: tuple[float, float, float]
    hi: tuple[float, float, float]

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        if len(lo) != 3 or len(hi) != 3:
            raise GeometryError("box corners must be 3-vectors")
        if any(a >= b for a, b in zip(lo, hi)):
            raise GeometryError("box corners must be ordered component-wise")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    dimension = 3

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.all((x > np.asarray(self.lo)) & (x < np.asarray(self.hi)), axis=-1)

    def signed_distance(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        lo, hi = np.asarray(self.lo), np.asarray(self.hi)
        q = np.maximum(lo - x, x - hi)
        outside = np.linalg.norm(np.maximum(q, 0.0), axis=-1)
        inside = np.minimum(np.max(q, axis=-1), 0.0)
        return outside + inside

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return np.asarray(self.lo), np.asarray(self.hi)


@dataclass(frozen=True)
class HalfLine1D:
    """The half-line ``]a, inf[``."""

    a: float
    dimension = 1

    def contains(self, x) -> np.ndarray:
        return np.asarray(x, dtype=float) > self.a


@dataclass(frozen=True)
class Interval1D:
    lo: float
    hi: float
    dimension = 1

    def __post_init__(self):
        if not self.lo < self.hi:
            raise GeometryError("interval requires lo < hi")

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return (x > self.lo) & (x < self.hi)

    @property
    def width(self) -> float:
        return self.hi - self.lo


Shape = Union[Ball, AxisBox, HalfLine1D, Interval1D]


def _point_box_distance(p, lo, hi) -> float:
    d = np.maximum(np.maximum(lo - p, p - hi), 0.0)
    return float(np.linalg.norm(d))


def _interval_bounds(s) -> tuple[float, float]:
    if isinstance(s, HalfLine1D):
        return s.a, np.inf
    return s.lo, s.hi


def dist_sets(A: Shape, C: Shape) -> float:
    """Euclidean distance between two sets (0 when the closures meet)."""
    if A.dimension != C.dimension:
        raise GeometryError("shapes live in different dimensions")
    if A.dimension == 1:
        a_lo, a_hi = _interval_bounds(A)
        c_lo, c_hi = _interval_bounds(C)
        return float(max(0.0, c_lo - a_hi, a_lo - c_hi))
    if isinstance(A, Ball) and isinstance(C, Ball):
        gap = np.linalg.norm(np.subtract(A.center, C.center)) - A.radius - C.radius
        return float(max(gap, 0.0))
    if isinstance(A, AxisBox) and isinstance(C, Ball):
        A, C = C, A
    if isinstance(A, Ball) and isinstance(C, AxisBox):
        d = _point_box_distance(np.asarray(A.center), np.asarray(C.lo), np.asarray(C.hi))
        return float(max(d - A.radius, 0.0))
    if isinstance(A, AxisBox) and isinstance(C, AxisBox):
        gap = np.maximum(
            np.maximum(np.subtract(C.lo, A.hi), np.subtract(A.lo, C.hi)), 0.0
        )
        return float(np.linalg.norm(gap))
    raise GeometryError(
        f"unsupported shape combination: {type(A).__name__}/{type(C).__name__}"
    )


@dataclass
class SceneSpec:
    """Obstacle, source and (optionally) measurement surface of one experiment.

    ``mode`` is ``"robin"`` (dissipative boundary on the obstacle),
    ``"refractive"`` (wave-speed contrast inside the obstacle) or ``"free"``.
    """

    dimension: int
    obstacle: Shape | None
    source: Shape
    surface: Shape | None = None
    gamma: float = 0.0
    beta: float = 0.0
    alpha: float = 1.0
    mode: str = "robin"

    def validate(self, data_mode: str | None = None) -> None:
        """Raise :class:`ConfigurationError` naming the violated hypothesis."""
        if self.dimension not in (1, 3):
            raise ConfigurationError("dimension must be 1 or 3")
        if self.mode not in ("robin", "refractive", "free"):
            raise ConfigurationError(f"unknown mode {self.mode!r}")
        shapes = [s for s in (self.obstacle, self.source, self.surface) if s is not None]
        if any(s.dimension != self.dimension for s in shapes):
            raise ConfigurationError("shapes do not match the scene dimension")
        if self.dimension == 1:
            if not isinstance(self.source, Interval1D):
                raise ConfigurationError("1D source must be an interval")
            if self.obstacle is not None and not isinstance(self.obstacle, HalfLine1D):
                raise ConfigurationError("1D obstacle must be a half-line ]a, inf[")
        elif not isinstance(self.source, Ball):
            raise ConfigurationError("3D source must be a ball")
        if self.gamma < 0:
            raise ConfigurationError("gamma < 0 violates the standing assumption gamma >= 0")
        if not self.alpha > 0:
            raise ConfigurationError("alpha must be bounded below by a positive constant")
        if self.mode == "free" or self.obstacle is None:
            return
        if dist_sets(self.source, self.obstacle) <= 0:
            raise ConfigurationError(
                "closure(B) ∩ closure(D) ≠ ∅ violates the source/obstacle separation hypothesis"
            )
        if data_mode == "surface" or (data_mode is None and self.surface is not None):
            self._validate_surface()

    def _validate_surface(self) -> None:
        if self.surface is None:
            raise ConfigurationError("surface data mode requires a surface Ω")
        if self.dimension == 1:
            if not (self.source.hi < self.surface_point < self.obstacle.a):
                raise ConfigurationError(
                    "observation point must separate B and D (1D observation hypothesis)"
                )
            return
        if dist_sets(self.source, self.surface) <= 0:
            raise ConfigurationError(
                "closure(B) ∩ closure(Ω) ≠ ∅ violates the source/surface separation hypothesis"
            )
        if not _encloses(self.surface, self.obstacle):
            raise ConfigurationError("closure(D) ⊄ Ω violates the enclosure hypothesis")

    @property
    def surface_point(self) -> float:
        """Observation point of 1D scenes (``Ω = ]x0, inf[``)."""
        if self.surface is None:
            return 0.0
        return _interval_bounds(self.surface)[0]

    def dist_obstacle_source(self) -> float:
        return dist_sets(self.obstacle, self.source)

    def dist_surface_source(self) -> float:
        if self.surface is None:
            raise ConfigurationError("scene has no surface Ω")
        return dist_sets(self.surface, self.source)


def _encloses(outer: Shape, inner: Shape) -> bool:
    if isinstance(inner, Ball):
        lo, hi = inner.bounds()
        if isinstance(outer, Ball):
            gap = outer.radius - np.linalg.norm(np.subtract(outer.center, inner.center))
            return bool(gap > inner.radius)
    else:
        lo, hi = inner.bounds()
    corners = np.array(np.meshgrid(*zip(lo, hi), indexing="ij")).reshape(3, -1).T
    if isinstance(outer, AxisBox):
        return bool(np.all(outer.contains(corners)))
    # box inside ball: all corners strictly inside
    return bool(np.all(outer.signed_distance(corners) < 0))


def min_observation_time(scene: SceneSpec, data_mode: str) -> float:
    """Strict lower bound on the observation time ``T``.

    ``2 dist(D, B) - dist(Ω, B)`` for surface data and ``2 dist(D, B)`` for
    back-scattering data.
    """
    d = scene.dist_obstacle_source()
    if data_mode == "backscatter":
        return 2.0 * d
    if data_mode == "surface":
        if scene.surface is None and scene.dimension == 3:
            raise ConfigurationError("surface data mode requires a surface Ω")
        if scene.dimension == 1:
            dist_omega = max(scene.surface_point - scene.source.hi, 0.0)
        else:
            dist_omega = scene.dist_surface_source()
        return 2.0 * d - dist_omega
    raise ConfigurationError(f"unknown data mode {data_mode!r}")


def fibonacci_sphere(n: int) -> np.ndarray:
    """``n`` nearly uniform unit vectors."""
    k = np.arange(n) + 0.5
    z = 1.0 - 2.0 * k / n
    r = np.sqrt(1.0 - z**2)
    phi = np.pi * (3.0 - np.sqrt(5.0)) * k
    return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])


def _surface_distance(shape: Shape, y) -> np.ndarray:
    # inf over z on the boundary of |y - z|
    return np.abs(shape.signed_distance(y))


def _surface_samples(shape: Shape, n: int) -> np.ndarray:
    if isinstance(shape, Ball):
        return np.asarray(shape.center) + shape.radius * fibonacci_sphere(n)
    if isinstance(shape, AxisBox):
        lo, hi = shape.bounds()
        per_face = max(1, int(np.ceil(np.sqrt(n / 6))))
        s = (np.arange(per_face) + 0.5) / per_face
        pts = []
        for axis in range(3):
            others = [a for a in range(3) if a != axis]
            u, v = np.meshgrid(s, s, indexing="ij")
            for side in (lo[axis], hi[axis]):
                p = np.empty((u.size, 3))
                p[:, axis] = side
                p[:, others[0]] = lo[others[0]] + u.ravel() * (hi - lo)[others[0]]
                p[:, others[1]] = lo[others[1]] + v.ravel() * (hi - lo)[others[1]]
                pts.append(p)
        return np.vstack(pts)
    raise GeometryError(f"unsupported shape {type(shape).__name__}")


def broken_path_length(B: Shape, D: Shape, Omega: Shape, n_samples: int = 1000) -> float:
    """``inf |x - y| + |y - z|`` over ``x ∈ ∂B``, ``y ∈ ∂D``, ``z ∈ ∂Ω``.

    The inner infima over ``x`` and ``z`` are exact for balls and boxes, so
    only ``y`` is sampled (``n_samples`` points on ``∂D``); the best sample
    (per face for a box) is then polished with a local minimizer.
    """
    for s in (B, D, Omega):
        if not isinstance(s, (Ball, AxisBox)):
            raise GeometryError(f"unsupported shape {type(s).__name__}")

    def cost(y):
        return _surface_distance(B, y) + _surface_distance(Omega, y)

    ys = _surface_samples(D, n_samples)
    values = cost(ys)
    best = float(values.min())
    if isinstance(D, Ball):
        c = np.asarray(D.center)
        y0 = ys[np.argmin(values)] - c
        theta0 = np.arccos(np.clip(y0[2] / D.radius, -1, 1))
        phi0 = np.arctan2(y0[1], y0[0])

        def on_sphere(p):
            th, ph = p
            return c + D.radius * np.array(
                [np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)]
            )

        res = minimize(lambda p: float(cost(on_sphere(p))), [theta0, phi0], method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-12})
        best = min(best, float(res.fun))
    else:
        # polish the best sample of every face over that face
        lo, hi = D.bounds()
        for axis in range(3):
            free = [a for a in range(3) if a != axis]
            for side in (lo[axis], hi[axis]):
                on_face = np.isclose(ys[:, axis], side)
                if not np.any(on_face):
                    continue
                y0 = ys[on_face][np.argmin(values[on_face])]

                def on_box(p, axis=axis, side=side, free=free):
                    y = np.empty(3)
                    y[axis] = side
                    y[free] = np.clip(p, lo[free], hi[free])
                    return y

                res = minimize(lambda p, f=on_box: float(cost(f(p))), y0[free],
                               method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-12})
                best = min(best, float(res.fun))
    return best
