"""One-dimensional half-line problem.

Solves ``u_tt - u_xx = 0`` on ``]L, a[`` with ``u(., 0) = 0``,
``u_t(., 0) = f`` and the dissipative condition

    -u_x(a, t) - gamma u_t(a, t) - beta u(a, t) = 0

at the obstacle boundary ``x = a`` (the obstacle is ``D = ]a, inf[``).
The left end ``L`` is placed far enough away that nothing reflected there
can reach a probe before ``T``.

Also provides the exact Laplace-domain solution for ``T -> inf`` and the
indicator ``I = -v' w + w' v`` at the observation point.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import ConfigurationError
from .sources import SourceBall, eval_v_1d, free_solution_1d, source_moment

__all__ = [
    "Wave1DConfig",
    "TimeTrace",
    "solve_1d",
    "free_solution_1d",
    "laplace_w_exact_1d",
    "ExactLaplace1D",
    "indicator_1d",
    "indicator_1d_reference",
    "energy_1d",
    "PoleError",
]


class PoleError(ZeroDivisionError):
    """``c(tau) + tau`` (or ``(gamma + 1) tau + beta``) vanishes."""


@dataclass
class Wave1DConfig:
    a: float
    gamma: float
    beta: float
    h: float
    T: float
    courant: float = 1.0
    left: float | None = None

    def __post_init__(self):
        if not 0 < self.courant <= 1:
            raise ConfigurationError(f"Courant ratio {self.courant} outside (0, 1]")
        if self.gamma < 0:
            raise ConfigurationError("gamma must be nonnegative")
        if self.h <= 0 or self.T <= 0:
            raise ConfigurationError("h and T must be positive")

    @property
    def dt(self) -> float:
        return self.courant * self.h

    @property
    def n_steps(self) -> int:
        return int(round(self.T / self.dt))


@dataclass
class TimeTrace:
    """Samples ``values[i, n] = u(probes[i], n dt)``."""

    probes: np.ndarray
    dt: float
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.values.shape[-1])

    @property
    def T(self) -> float:
        return self.dt * (self.values.shape[-1] - 1)

    def __sub__(self, other: "TimeTrace") -> "TimeTrace":
        if self.values.shape != other.values.shape or self.dt != other.dt:
            raise ValueError("traces are not sampled alike")
        return TimeTrace(self.probes, self.dt, self.values - other.values, dict(self.meta))


def _left_end(cfg: Wave1DConfig, src: SourceBall, probes) -> float:
    # discrete signals travel at most one cell per step, i.e. speed 1/courant
    lo = min(float(np.min(probes)), src.geometry.lo)
    auto = 0.5 * (lo + float(np.min(probes)) - cfg.T / cfg.courant) - 4 * cfg.h
    if cfg.left is not None:
        if cfg.left > auto:
            raise ConfigurationError(
                f"left end {cfg.left} lets boundary reflections reach probes before T"
            )
        return cfg.left
    return auto


def solve_1d(cfg: Wave1DConfig, src: SourceBall, probes, obstacle: bool = True,
             energy: bool = False) -> TimeTrace:
    """Leapfrog solution recorded at ``probes``.

    With ``obstacle=False`` the right end is moved out of causal reach, which
    gives the discrete free field on the same mesh (the control run).
    With ``energy=True`` the discrete energy of every step is stored in
    ``trace.meta["energy"]``.
    """
    probes = np.atleast_1d(np.asarray(probes, dtype=float))
    if src.geometry.hi > cfg.a:
        raise ConfigurationError("source support must lie left of the obstacle")
    h, dt, lam = cfg.h, cfg.dt, cfg.courant
    left = _left_end(cfg, src, probes)
    right = cfg.a if obstacle else cfg.a + cfg.T / lam + 4 * h
    if np.any(probes > cfg.a + 1e-12) or np.any(probes < left):
        raise ConfigurationError("probe outside the computational domain")
    n_left = int(np.ceil((cfg.a - left) / h))
    n_right = int(round((right - cfg.a) / h))
    x = cfg.a + h * np.arange(-n_left, n_right + 1)
    J = x.size - 1

    u_prev = np.zeros_like(x)
    u = free_solution_1d(src, x, dt)  # exact first step from the d'Alembert formula

    # linear interpolation of probes onto the mesh
    pos = (probes - x[0]) / h
    i0 = np.clip(np.floor(pos).astype(int), 0, J - 1)
    frac = pos - i0

    def sample(field):
        return (1 - frac) * field[i0] + frac * field[i0 + 1]

    N = cfg.n_steps
    values = np.empty((probes.size, N + 1))
    values[:, 0] = sample(u_prev)
    values[:, 1] = sample(u)
    energies = []
    lam2 = lam * lam
    gamma, beta = cfg.gamma, cfg.beta
    for n in range(1, N):
        u_next = np.empty_like(u)
        u_next[1:-1] = 2 * u[1:-1] - u_prev[1:-1] + lam2 * (u[2:] - 2 * u[1:-1] + u[:-2])
        u_next[0] = 0.0
        if obstacle:
            # ghost node u_{J+1} eliminated through the centered boundary relation
            rhs = (2 * u[J] - u_prev[J]
                   + lam2 * (2 * u[J - 1] - 2 * u[J] - 2 * h * beta * u[J])
                   + lam * gamma * u_prev[J])
            u_next[J] = rhs / (1 + lam * gamma)
        else:
            u_next[J] = 0.0
        if energy:
            energies.append(energy_1d(u, u_next, h, dt, beta if obstacle else 0.0))
        u_prev, u = u, u_next
        values[:, n + 1] = sample(u)
    meta = {"left": left, "right": right, "obstacle": obstacle}
    if energy:
        meta["energy"] = np.asarray(energies)
    return TimeTrace(probes, dt, values, meta)


def energy_1d(u, u_next, h, dt, beta) -> float:
    """Discrete energy between two time levels.

    Trapezoid weights (half a cell at the ends); the potential part uses the
    product of consecutive levels, which is what leapfrog conserves.
    """
    w = np.full(u.size, h)
    w[0] = w[-1] = 0.5 * h
    kinetic = 0.5 * np.sum(w * ((u_next - u) / dt) ** 2)
    potential = 0.5 * np.sum(np.diff(u_next) * np.diff(u)) / h
    boundary = 0.5 * beta * u_next[-1] * u[-1]
    return float(kinetic + potential + boundary)


@dataclass
class ExactLaplace1D:
    """Leading (``T -> inf``) Laplace-domain solution."""

    tau: float
    w_a: float
    A: float
    a: float
    src: SourceBall

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        v, _ = eval_v_1d(self.src, x, self.tau)
        return v + self.A * np.exp(self.tau * (x - self.a))

    def derivative(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        _, dv = eval_v_1d(self.src, x, self.tau)
        return dv + self.tau * self.A * np.exp(self.tau * (x - self.a))


def laplace_w_exact_1d(cfg: Wave1DConfig, src: SourceBall, tau: float) -> ExactLaplace1D:
    """``w(a) = (1/(c + tau)) ∫ exp(-tau (a - y)) f dy`` with ``c = gamma tau + beta``.

    For ``x < a`` the field is the free field plus the reflected wave
    ``A exp(tau (x - a))``.
    """
    if tau <= 0:
        raise ValueError("tau must be positive")
    c = cfg.gamma * tau + cfg.beta
    if abs(c + tau) < 1e-14:
        raise PoleError(f"c(tau) + tau vanishes at tau={tau}; increase tau")
    iv = src.geometry
    mass = float(source_moment(src, tau)[0]) * np.exp(-tau * (cfg.a - iv.hi))
    w_a = mass / (c + tau)
    A = -(c / tau - 1.0) * mass / (2.0 * (c + tau))
    return ExactLaplace1D(tau=tau, w_a=w_a, A=A, a=cfg.a, src=src)


def indicator_1d(w0, dw0, v0, dv0):
    """``I = -v'(0) w(0) + w'(0) v(0)``.

    The expression is linear in ``w``, and vanishes for ``w = v``; callers
    that hold ``w - v`` can pass it directly to avoid cancellation.
    """
    return -dv0 * w0 + dw0 * v0


def indicator_1d_reference(tau, gamma, beta, dist, moment):
    """Leading asymptotic term of the 1D indicator."""
    tau = np.asarray(tau, dtype=float)
    den = (gamma + 1.0) * tau + beta
    if np.any(np.abs(den) < 1e-14):
        raise PoleError("(gamma + 1) tau + beta vanishes")
    num = (gamma - 1.0) * tau + beta
    return -(1.0 / (2.0 * tau)) * num / den * np.exp(-2.0 * tau * dist) * np.abs(moment) ** 2


def free_tail_1d(src: SourceBall, x, T: float, tau) -> np.ndarray:
    """``∫_T^inf exp(-tau t) u_free(x, t) dt`` for the d'Alembert free field.

    This is what a record stopped at ``T`` misses of the free field; shape
    ``(len(x), len(tau))``.
    """
    from .transform import laplace_piecewise_linear

    iv = src.geometry
    x = np.atleast_1d(np.asarray(x, dtype=float))
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    out = np.zeros((x.size, tau.size))
    for i, xi in enumerate(x):
        kinks = np.array([abs(xi - iv.lo), abs(xi - iv.hi)])
        t_end = max(T, float(kinks.max()))
        t = np.unique(np.concatenate([[T, t_end], kinks[kinks > T]]))
        if t.size > 1:
            out[i] = laplace_piecewise_linear(t, free_solution_1d(src, xi, t), tau)
        # the free field is constant once the whole support is inside the light cone
        out[i] += free_solution_1d(src, xi, t_end) * np.exp(-tau * t_end) / tau
    return out
