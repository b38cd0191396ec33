"""Laplace-in-time reduction of sampled traces.

The transform of a trace is ``w(x, tau) = int_0^T exp(-tau t) u(x, t) dt``.
Samples are joined by straight lines and each segment is integrated against
the exponential in closed form, so the result stays accurate when
``tau * dt`` is not small.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "LaplaceField",
    "laplace_weights",
    "laplace_in_time",
    "laplace_piecewise_linear",
    "default_tau_grid",
]

_SERIES_CUTOFF = 0.05


def _segment_moments(kappa: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return ``int_0^1 e^{-k s} ds`` and ``int_0^1 s e^{-k s} ds``."""
    kappa = np.asarray(kappa, dtype=float)
    e0 = np.empty_like(kappa)
    e1 = np.empty_like(kappa)
    small = kappa < _SERIES_CUTOFF
    k = kappa[~small]
    e0[~small] = -np.expm1(-k) / k
    e1[~small] = (-np.expm1(-k) - k * np.exp(-k)) / k**2
    ks = kappa[small]
    # Taylor series, 10 terms is exact to round-off for k < 0.05
    term0 = np.ones_like(ks)
    s0 = np.zeros_like(ks)
    s1 = np.zeros_like(ks)
    for n in range(10):
        s0 += term0 / (n + 1)
        s1 += term0 / (n + 2)
        term0 = term0 * (-ks) / (n + 1)
    e0[small] = s0
    e1[small] = s1
    return e0, e1


def laplace_piecewise_linear(t, u, tau) -> np.ndarray:
    """Exact transform of the piecewise-linear interpolant of ``(t, u)``.

    ``t`` may be non-uniform. ``u`` has time along its last axis; the result
    has shape ``u.shape[:-1] + (len(tau),)``.
    """
    t = np.asarray(t, dtype=float)
    u = np.asarray(u, dtype=float)
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    if t.ndim != 1 or t.size < 2:
        raise ValueError("need at least two sample times")
    if np.any(np.diff(t) <= 0):
        raise ValueError("sample times must be strictly increasing")
    if np.any(tau <= 0):
        raise ValueError("tau must be positive")
    dt = np.diff(t)
    kappa = tau[:, None] * dt[None, :]
    e0, e1 = _segment_moments(kappa)
    scale = np.exp(-tau[:, None] * t[None, :-1]) * dt[None, :]
    weights = np.zeros((tau.size, t.size))
    weights[:, :-1] += scale * (e0 - e1)
    weights[:, 1:] += scale * e1
    return u @ weights.T


def laplace_weights(n_steps: int, dt: float, tau) -> np.ndarray:
    """Quadrature weights for a uniform trace ``t_n = n dt``, ``n = 0..n_steps``.

    Returns an array of shape ``(len(tau), n_steps + 1)`` such that
    ``weights @ samples`` is the transform of the interpolated trace.
    """
    if n_steps < 1:
        raise ValueError("trace must contain at least one time step")
    if dt <= 0:
        raise ValueError("dt must be positive")
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    if np.any(tau <= 0):
        raise ValueError("tau must be positive")
    e0, e1 = _segment_moments(tau * dt)
    n = np.arange(n_steps + 1)
    decay = np.exp(-tau[:, None] * dt * n[None, :])
    left = (e0 - e1)[:, None] * dt
    right = e1[:, None] * dt
    weights = np.zeros((tau.size, n_steps + 1))
    weights[:, :-1] += left * decay[:, :-1]
    weights[:, 1:] += right * decay[:, :-1]
    return weights


@dataclass
class LaplaceField:
    """Transformed values ``w(x_i, tau_j)`` on a set of probes.

    ``values`` has shape ``(n_probes, n_tau)``. ``normal_derivative`` is
    optional and shaped like ``values``.
    """

    tau: np.ndarray
    values: np.ndarray
    probes: np.ndarray | None = None
    normal_derivative: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.tau = np.asarray(self.tau, dtype=float)
        self.values = np.atleast_2d(np.asarray(self.values, dtype=float))
        if self.tau.ndim != 1 or np.any(np.diff(self.tau) <= 0):
            raise ValueError("tau grid must be strictly increasing")
        if np.any(self.tau <= 0):
            raise ValueError("tau must be positive")
        if self.values.shape[-1] != self.tau.size:
            raise ValueError("values do not match the tau grid")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("non-finite transform values")
        if self.normal_derivative is not None:
            self.normal_derivative = np.asarray(self.normal_derivative, dtype=float)
            if self.normal_derivative.shape != self.values.shape:
                raise ValueError("normal derivative shape mismatch")

    @property
    def n_probes(self) -> int:
        return self.values.shape[0]

    def __sub__(self, other: "LaplaceField") -> "LaplaceField":
        if not np.array_equal(self.tau, other.tau) or self.values.shape != other.values.shape:
            raise ValueError("fields live on different probes or tau grids")
        nd = None
        if self.normal_derivative is not None and other.normal_derivative is not None:
            nd = self.normal_derivative - other.normal_derivative
        return LaplaceField(self.tau, self.values - other.values, self.probes, nd, dict(self.meta))


def laplace_in_time(trace, tau) -> LaplaceField:
    """Transform every probe of a :class:`~enclosure.solver1d.TimeTrace`."""
    values = np.atleast_2d(np.asarray(trace.values, dtype=float))
    if values.size == 0 or values.shape[-1] < 2:
        raise ValueError("empty trace")
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    if np.any(tau <= 0):
        raise ValueError("tau must be positive")
    weights = laplace_weights(values.shape[-1] - 1, trace.dt, tau)
    return LaplaceField(tau, values @ weights.T, probes=np.asarray(trace.probes))


def default_tau_grid(dimension: int, count: int = 24) -> np.ndarray:
    """Linear tau grid, 2..12 in 1D and 2..10 in 3D."""
    hi = 12.0 if dimension == 1 else 10.0
    return np.linspace(2.0, hi, count)
