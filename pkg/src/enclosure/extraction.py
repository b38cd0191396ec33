"""Distance, sign class and (1D) boundary coefficients from indicator curves."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import least_squares

from .indicator import IndicatorCurve

__all__ = [
    "ExtractionError",
    "WindowError",
    "NoDecayError",
    "DivergentGammaError",
    "DistanceFit",
    "RecoveryReport",
    "estimate_distance",
    "classify_sign",
    "recover_gamma_beta_1d",
    "leading_ratio_1d",
    "expansion_ratio_1d",
    "SIGN_LABELS",
]

GAMMA_TOL = 1e-6
SIGN_LABELS = {1: "A1-like (+)", -1: "A2-like (-)", 0: "indeterminate"}


class ExtractionError(RuntimeError):
    pass


class WindowError(ExtractionError):
    """The fit window holds zeros, non-finite values or too few points."""


class NoDecayError(ExtractionError):
    """``log |I|`` does not decrease: T below threshold or nothing to see."""


class DivergentGammaError(ExtractionError):
    """Fitted leading coefficient puts gamma at infinity."""


@dataclass
class DistanceFit:
    distance: float
    slope: float
    intercept: float
    residual: float
    window: tuple[float, float]
    n_points: int
    pointwise: float
    normalized: bool
    power: float | None = None


@dataclass
class RecoveryReport:
    distance: float | None
    sign: int
    sign_label: str
    fit: dict | None = None
    gamma: float | None = None
    beta: float | None = None
    T: float | None = None
    min_observation_time: float | None = None
    threshold_ok: bool = True
    reliable: bool = True
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def estimate_distance(curve: IndicatorCurve, window: tuple[float, float],
                      moment=None, fit_power: bool = False,
                      min_points: int = 6) -> DistanceFit:
    """Fit ``log |I(tau)| = intercept + slope * tau`` and return ``-slope / 2``.

    An algebraic prefactor ``tau^p`` biases the plain slope by about
    ``p / mean(tau)``. Two corrections are available:

    * ``moment`` (values on the curve's full tau grid) divides out a known
      prefactor; the fitted quantity becomes ``log(tau |I| / moment^2)``.
    * ``fit_power`` adds ``p log(tau)`` to the model and fits ``p`` too.
    """
    sub = curve.window(*window)
    if sub.tau.size < min_points:
        raise WindowError(f"window {window} holds {sub.tau.size} < {min_points} points")
    vals = sub.values
    if np.any(~np.isfinite(vals)) or np.any(vals == 0):
        raise WindowError("indicator vanishes or is non-finite in the window")
    y = np.log(np.abs(vals))
    normalized = moment is not None
    if normalized:
        m = np.asarray(moment, dtype=float)
        keep = (curve.tau >= window[0] - 1e-12) & (curve.tau <= window[1] + 1e-12)
        y = y + np.log(sub.tau) - 2 * np.log(np.abs(m[keep]))
    cols = [np.ones_like(sub.tau), sub.tau]
    if fit_power:
        cols.append(np.log(sub.tau))
    A = np.column_stack(cols)
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    intercept, slope = coef[:2]
    if slope >= 0:
        raise NoDecayError(f"log|I| slope {slope:.3g} is not negative")
    resid = float(np.sqrt(np.mean((A @ coef - y) ** 2)))
    tmax = sub.tau[-1]
    pointwise = float(-np.log(np.abs(vals[-1])) / (2 * tmax))
    return DistanceFit(
        distance=float(-slope / 2),
        slope=float(slope),
        intercept=float(intercept),
        residual=resid,
        window=(float(sub.tau[0]), float(tmax)),
        n_points=int(sub.tau.size),
        pointwise=pointwise,
        normalized=normalized,
        power=float(coef[2]) if fit_power else None,
    )


def classify_sign(curve: IndicatorCurve, noise_floor,
                  window: tuple[float, float] | None = None) -> int:
    """+1 / -1 when ``I`` stays beyond ``10 * noise_floor`` with one sign on the
    upper half of the window, 0 otherwise.

    ``noise_floor`` is a scalar or an array on the curve's full tau grid.
    """
    floor = np.abs(np.broadcast_to(np.asarray(noise_floor, dtype=float), curve.tau.shape))
    tau, vals = curve.tau, curve.values
    if window is not None:
        keep = (tau >= window[0] - 1e-12) & (tau <= window[1] + 1e-12)
        tau, vals, floor = tau[keep], vals[keep], floor[keep]
    if tau.size == 0:
        return 0
    upper = tau >= 0.5 * (tau[0] + tau[-1])
    thresh = 10.0 * floor[upper]
    if np.all(vals[upper] > thresh):
        return 1
    if np.all(vals[upper] < -thresh):
        return -1
    return 0


def leading_ratio_1d(tau, gamma, beta):
    """``-(1/2 tau) ((gamma-1) tau + beta) / ((gamma+1) tau + beta)``.

    This is the sum of the full asymptotic series of the normalized
    indicator ``e^{2 tau d} I / moment^2``.
    """
    tau = np.asarray(tau, dtype=float)
    return -0.5 / tau * ((gamma - 1) * tau + beta) / ((gamma + 1) * tau + beta)


def expansion_ratio_1d(tau, gamma, beta, n_terms: int):
    """Partial sum of the large-tau expansion of the normalized indicator.

    ``-(gamma-1)/(2(gamma+1)) / tau - beta/(gamma+1)^2 sum_n (-beta/(gamma+1))^n / tau^(n+2)``
    """
    tau = np.asarray(tau, dtype=float)
    out = -(gamma - 1) / (2 * (gamma + 1)) / tau
    q = -beta / (gamma + 1)
    for n in range(n_terms):
        out = out - beta / (gamma + 1) ** 2 * q**n / tau ** (n + 2)
    return out


def _gamma_from_c1(c1: float, tol: float = 1e-8) -> float:
    # c1 = -(gamma - 1) / (2 (gamma + 1))  =>  gamma = (1 - 2 c1) / (1 + 2 c1)
    if abs(1 + 2 * c1) < tol:
        raise DivergentGammaError("1 + 2 c1 vanishes: gamma diverges")
    return (1 - 2 * c1) / (1 + 2 * c1)


def recover_gamma_beta_1d(curve: IndicatorCurve, moment, distance: float,
                          window: tuple[float, float] = (6.0, 12.0),
                          refine: bool = True, fit_distance: bool = False) -> dict:
    """Boundary coefficients from the normalized indicator ``R = e^{2 tau d} I / moment^2``.

    First ``R ≈ c1/tau + c2/tau^2`` is fitted by least squares with weights
    ``tau^2``, giving ``gamma = (1 - 2 c1)/(1 + 2 c1)`` and
    ``beta = -c2 (gamma + 1)^2``. With ``refine`` the two-term values seed a
    nonlinear fit of the resummed expansion, which removes the truncation
    bias of the two-term model. ``fit_distance`` additionally refines ``d``.

    The result has keys ``gamma``, ``beta``, ``c1``, ``c2``, ``gamma_series``,
    ``beta_series``, ``distance``, ``residual``.
    """
    keep = (curve.tau >= window[0] - 1e-12) & (curve.tau <= window[1] + 1e-12)
    tau = curve.tau[keep]
    if tau.size < 3:
        raise WindowError("need at least three points for the coefficient fit")
    I = curve.values[keep]
    m = np.asarray(moment, dtype=float)[keep]
    R = np.exp(2 * tau * distance) * I / m**2
    # weight tau^2 on squared residuals, i.e. rows scaled by tau
    A = np.column_stack([1 / tau, 1 / tau**2]) * tau[:, None]
    (c1, c2), *_ = np.linalg.lstsq(A, R * tau, rcond=None)
    gamma_s = _gamma_from_c1(c1)
    beta_s = -c2 * (gamma_s + 1) ** 2
    out = {
        "c1": float(c1),
        "c2": float(c2),
        "gamma_series": float(gamma_s),
        "beta_series": float(beta_s),
        "gamma": float(gamma_s),
        "beta": float(beta_s),
        "distance": float(distance),
        "residual": float(np.sqrt(np.mean((A @ [c1, c2] - R * tau) ** 2))),
    }
    if not refine:
        if gamma_s < -GAMMA_TOL:
            out["gamma"] = None
        return out

    m2 = m**2

    def resid(p):
        d = p[2] if fit_distance else distance
        predicted = leading_ratio_1d(tau, p[0], p[1]) * m2 * np.exp(-2 * tau * d)
        return predicted / I - 1.0

    # round-off sized seeds would give least_squares a vanishing trust radius
    p0 = [max(gamma_s, 0.0), beta_s]
    p0 = [0.0 if abs(v) < 1e-9 else v for v in p0] + ([distance] if fit_distance else [])
    sol = least_squares(resid, p0, x_scale="jac", xtol=1e-15, ftol=1e-15, gtol=1e-15)
    gamma = float(sol.x[0])
    # gamma < 0 is outside the model: report it as indeterminate
    if gamma < -GAMMA_TOL:
        gamma = None
    elif gamma < 0:
        gamma = 0.0
    out["gamma"] = gamma
    out["beta"] = float(sol.x[1])
    if fit_distance:
        out["distance"] = float(sol.x[2])
    out["residual"] = float(np.sqrt(np.mean(sol.fun**2)))
    return out
