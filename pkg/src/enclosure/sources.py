"""Initial data ``f = C * indicator(B)`` and the free field it generates.

The free field is the solution of ``(Δ - tau^2) v + f = 0`` in the whole
space, i.e. the Yukawa-kernel convolution

    v(x) = 1/(4 pi) ∫_B exp(-tau |x - y|) / |x - y| f(y) dy       (3D)
    v(x) = 1/(2 tau) ∫ exp(-tau |x - y|) f(y) dy                  (1D)

For a ball the angular part of the 3D integral is done exactly: the
spherical shell of radius ``r`` about ``x`` cuts ``B`` in a cap of area
``pi r (rho^2 - (R - r)^2) / R`` (``R = |x - c|``), which leaves a smooth
one-dimensional radial integral evaluated with Gauss-Legendre.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .geometry import Ball, Interval1D, Shape

__all__ = [
    "SourceBall",
    "eval_v",
    "eval_grad_v",
    "eval_v_1d",
    "source_moment",
    "free_solution_3d",
    "free_solution_1d",
    "free_tail_3d",
    "QUADRATURE_ORDER",
]

QUADRATURE_ORDER = 24


@dataclass(frozen=True)
class SourceBall:
    """Constant-amplitude initial velocity supported on a ball or interval."""

    geometry: Shape
    amplitude: float = 1.0

    def __post_init__(self):
        if not isinstance(self.geometry, (Ball, Interval1D)):
            raise TypeError("source geometry must be a Ball or Interval1D")

    @property
    def dimension(self) -> int:
        return self.geometry.dimension

    def f(self, x) -> np.ndarray:
        """Pointwise value of the initial velocity."""
        return self.amplitude * self.geometry.contains(x).astype(float)

    @property
    def total_mass(self) -> float:
        if isinstance(self.geometry, Interval1D):
            return self.amplitude * self.geometry.width
        return self.amplitude * 4.0 / 3.0 * np.pi * self.geometry.radius**3


@lru_cache(maxsize=8)
def _gauss(order: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(order)


def _integrate(fn, lo, hi, order=QUADRATURE_ORDER):
    """Gauss-Legendre on ``[lo, hi]``, broadcasting over array limits."""
    nodes, weights = _gauss(order)
    lo = np.asarray(lo, dtype=float)[..., None]
    hi = np.asarray(hi, dtype=float)[..., None]
    half = 0.5 * (hi - lo)
    r = lo + half * (nodes + 1.0)
    return np.sum(weights * fn(r), axis=-1) * half[..., 0]


def _check_tau(tau):
    if np.any(np.asarray(tau) <= 0):
        raise ValueError("tau must be positive")


def _radial(src: SourceBall, x):
    x = np.asarray(x, dtype=float)
    c = np.asarray(src.geometry.center)
    return x, x - c, np.linalg.norm(x - c, axis=-1)


def _v_of_R(R, rho, tau, amp):
    """v as a function of the distance ``R`` to the ball center."""
    R = np.asarray(R, dtype=float)
    tau = float(tau)
    out = np.zeros_like(R)
    outside = R >= rho
    if np.any(outside):
        Ro = R[outside]
        cap = _integrate(
            lambda r: np.exp(-tau * r) * (rho**2 - (Ro[..., None] - r) ** 2),
            Ro - rho,
            Ro + rho,
        )
        out[outside] = amp * cap / (4.0 * Ro)
    inside = ~outside
    if np.any(inside):
        Ri = R[inside]
        # full shells r < rho - R contribute r exp(-tau r) dr exactly
        s = rho - Ri
        full = (1.0 - np.exp(-tau * s) * (1.0 + tau * s)) / tau**2
        partial = np.zeros_like(Ri)
        nz = Ri > 0
        if np.any(nz):
            Rn = Ri[nz]
            partial[nz] = _integrate(
                lambda r: np.exp(-tau * r) * (rho**2 - (Rn[..., None] - r) ** 2),
                rho - Rn,
                rho + Rn,
            ) / (4.0 * Rn)
        out[inside] = amp * (full + partial)
    return out


def eval_v(src: SourceBall, x, tau) -> np.ndarray:
    """Free field ``v(x, tau)`` of a ball source (``x`` may be an array of points)."""
    _check_tau(tau)
    if src.amplitude == 0:
        return np.zeros(np.shape(x)[:-1])
    _, _, R = _radial(src, x)
    return _v_of_R(R, src.geometry.radius, tau, src.amplitude)


def eval_grad_v(src: SourceBall, x, tau) -> np.ndarray:
    """Gradient of the free field at points outside the closed source ball."""
    _check_tau(tau)
    tau = float(tau)
    x, rel, R = _radial(src, x)
    rho = src.geometry.radius
    if np.any(R <= rho):
        raise ValueError("gradient requested inside the source ball")
    v = _v_of_R(R, rho, tau, src.amplitude)
    # differentiate the cap-weighted radial integral in R; boundary terms vanish
    drift = _integrate(
        lambda r: np.exp(-tau * r) * (r - R[..., None]), R - rho, R + rho
    )
    dv_dR = -v / R + src.amplitude * drift / (2.0 * R)
    return (dv_dR / R)[..., None] * rel


def _check_interval(src: SourceBall) -> Interval1D:
    if not isinstance(src.geometry, Interval1D):
        raise TypeError("1D evaluation requires an Interval1D source")
    return src.geometry


def eval_v_1d(src: SourceBall, x, tau) -> tuple[np.ndarray, np.ndarray]:
    """Value and x-derivative of ``(1/2 tau) ∫ exp(-tau |x-y|) f(y) dy``."""
    _check_tau(tau)
    iv = _check_interval(src)
    x = np.asarray(x, dtype=float)
    tau = float(tau)
    C = src.amplitude
    lo, hi = iv.lo, iv.hi
    # left part ∫_{lo}^{min(x,hi)} e^{-tau(x-y)} dy, right part ∫_{max(x,lo)}^{hi} e^{-tau(y-x)} dy,
    # written with non-positive exponents only
    top = np.minimum(x, hi)
    bot = np.maximum(x, lo)
    with np.errstate(over="ignore", invalid="ignore"):
        left = np.where(x > lo, np.exp(-tau * (x - top)) * -np.expm1(-tau * (top - lo)) / tau, 0.0)
        right = np.where(x < hi, np.exp(-tau * (bot - x)) * -np.expm1(-tau * (hi - bot)) / tau, 0.0)
    value = C * (left + right) / (2.0 * tau)
    deriv = -0.5 * C * (left - right)
    return value, deriv


def source_moment(src: SourceBall, tau) -> np.ndarray:
    """``∫_B exp(-tau (h_B - y.e)) f(y) dy`` with ``h_B`` the support value of ``B``.

    In 1D this is ``∫ exp(-tau (b - y)) f(y) dy`` with ``b = sup B``; for a
    ball the value does not depend on the direction ``e``.
    """
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    _check_tau(tau)
    C = src.amplitude
    if isinstance(src.geometry, Interval1D):
        return C * (-np.expm1(-tau * src.geometry.width)) / tau
    rho = src.geometry.radius
    # pi ∫_{-rho}^{rho} (rho^2 - s^2) exp(-tau (rho - s)) ds
    val = _integrate(
        lambda s: (rho**2 - s**2) * np.exp(-tau[:, None] * (rho - s)),
        np.full(tau.shape, -rho),
        np.full(tau.shape, rho),
        order=48,
    )
    return C * np.pi * val


def free_solution_3d(src: SourceBall, x, t) -> np.ndarray:
    """Kirchhoff solution of the free wave equation with ``u_t(.,0) = f``.

    ``u(x, t) = t * mean of f over the sphere |y - x| = t``, which for a ball
    reduces to the cap-area formula.
    """
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    _, _, R = _radial(src, x)
    R = R[..., None] if t.ndim else R
    rho = src.geometry.radius
    C = src.amplitude
    cap = np.clip(rho**2 - (R - t) ** 2, 0.0, None)
    with np.errstate(divide="ignore", invalid="ignore"):
        partial = np.where(R > 0, C * cap / (4.0 * np.where(R > 0, R, 1.0)), 0.0)
    whole = np.where(t < rho - R, C * t, 0.0)
    # when the shell lies inside the ball, cap formula does not apply
    return np.where(t < rho - R, whole, np.where(np.abs(R - t) <= rho, partial, 0.0))


def free_solution_1d(src: SourceBall, x, t) -> np.ndarray:
    """d'Alembert solution ``(1/2) ∫_{x-t}^{x+t} f(y) dy`` for interval sources."""
    iv = _check_interval(src)
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    lo = np.maximum(x - t, iv.lo)
    hi = np.minimum(x + t, iv.hi)
    return 0.5 * src.amplitude * np.clip(hi - lo, 0.0, None)


def free_tail_3d(src: SourceBall, x, T: float, tau) -> np.ndarray:
    """``∫_T^inf exp(-tau t) u_free(x, t) dt``; shape ``(len(x), len(tau))``.

    The Kirchhoff field of a ball vanishes once the sphere of radius ``t``
    about ``x`` has swept past ``B``, so the integral runs over at most two
    polynomial pieces and Gauss-Legendre is exact up to the exponential.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    _check_tau(tau)
    _, _, R = _radial(src, x)
    rho = src.geometry.radius
    C = src.amplitude
    out = np.zeros((x.shape[0], tau.size))
    # piece 1 (x inside B): u = C t on [0, rho - R]
    lo1 = np.full_like(R, T)
    hi1 = np.maximum(rho - R, T)
    # piece 2: cap formula on [|R - rho|, R + rho]
    lo2 = np.maximum(np.abs(R - rho), T)
    hi2 = np.maximum(R + rho, lo2)
    Rs = np.where(R > 0, R, 1.0)
    for j, tj in enumerate(tau):
        p1 = _integrate(lambda t: C * t * np.exp(-tj * t), lo1, hi1)
        p2 = _integrate(
            lambda t: C * (rho**2 - (Rs[:, None] - t) ** 2) / (4 * Rs[:, None]) * np.exp(-tj * t),
            lo2,
            hi2,
        )
        out[:, j] = p1 + np.where(R > 0, p2, 0.0)
    return out
