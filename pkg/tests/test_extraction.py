import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from enclosure.extraction import (DivergentGammaError, NoDecayError, WindowError, classify_sign,
                                  estimate_distance, expansion_ratio_1d, leading_ratio_1d,
                                  recover_gamma_beta_1d)
from enclosure.indicator import IndicatorCurve
from enclosure.pipeline import indicator_curves_1d
from enclosure.solver1d import Wave1DConfig
from enclosure.sources import source_moment

from conftest import A_1D, DIST_1D


def _curve(tau, values, kind="backscatter"):
    return IndicatorCurve(tau, values, kind)


def test_exact_exponential():
    tau = np.linspace(1, 10, 30)
    fit = estimate_distance(_curve(tau, 3.0 * np.exp(-2.4 * tau)), (2, 9))
    assert fit.distance == pytest.approx(1.2, abs=1e-12)
    assert fit.residual < 1e-12
    assert fit.n_points == sum((tau >= 2) & (tau <= 9))


def test_power_prefactor_bias_halves():
    # I = tau^-1 e^{-2 d tau}: plain fit is biased by about 1/(2 mean tau)
    tau = np.linspace(0.5, 40, 400)
    c = _curve(tau, np.exp(-2.4 * tau) / tau)
    e1 = estimate_distance(c, (4, 8)).distance - 1.2
    e2 = estimate_distance(c, (8, 16)).distance - 1.2
    assert e1 > 0 and e2 > 0
    assert e2 / e1 == pytest.approx(0.5, rel=0.03)
    assert estimate_distance(c, (4, 8), fit_power=True).distance == pytest.approx(1.2, abs=1e-10)
    assert estimate_distance(c, (4, 8), fit_power=True).power == pytest.approx(-1, abs=1e-9)


def test_error_decreases_with_window():
    tau = np.linspace(1, 30, 300)
    c = _curve(tau, np.exp(-2 * tau) * (1 + 1 / tau) / tau)
    errs = [abs(estimate_distance(c, w).distance - 1) for w in [(2, 4), (4, 8), (8, 16)]]
    assert errs[0] > errs[1] > errs[2]


def test_moment_normalisation_removes_prefactor():
    tau = np.linspace(1, 10, 40)
    m = (1 - np.exp(-0.5 * tau)) / tau
    c = _curve(tau, m**2 / tau * np.exp(-4 * tau))
    assert estimate_distance(c, (3, 9), moment=m).distance == pytest.approx(2.0, abs=1e-12)


@given(scale=st.floats(1e-200, 1e200), negative=st.booleans())
def test_distance_scale_invariant(scale, negative):
    tau = np.linspace(2, 8, 20)
    base = np.exp(-1.8 * tau) / tau
    s = -scale if negative else scale
    a = estimate_distance(_curve(tau, base), (2, 8)).distance
    b = estimate_distance(_curve(tau, s * base), (2, 8)).distance
    assert b == pytest.approx(a, abs=1e-9)


def test_window_errors():
    tau = np.linspace(1, 10, 10)
    with pytest.raises(WindowError):
        estimate_distance(_curve(tau, np.exp(-tau)), (1, 4))
    vals = np.exp(-tau)
    vals[5] = 0
    with pytest.raises(WindowError):
        estimate_distance(_curve(tau, vals), (1, 10))
    with pytest.raises(NoDecayError):
        estimate_distance(_curve(tau, np.exp(tau)), (1, 10))


def test_classify_sign():
    tau = np.linspace(1, 10, 10)
    assert classify_sign(_curve(tau, np.ones(10)), 0.01) == 1
    assert classify_sign(_curve(tau, -np.ones(10)), 0.01) == -1
    assert classify_sign(_curve(tau, np.ones(10)), 0.2) == 0
    mixed = np.where(tau > 8, -1.0, 1.0)
    assert classify_sign(_curve(tau, mixed), 0.01) == 0
    # the lower half of the window does not matter
    assert classify_sign(_curve(tau, mixed), 0.01, (1, 7)) == 1
    floor = np.where(tau > 5, 1.0, 1e-3)
    assert classify_sign(_curve(tau, np.ones(10)), floor, (1, 4)) == 1
    assert classify_sign(_curve(tau, np.ones(10)), floor) == 0


GRID = [(g, b) for g, b in itertools.product([0, 0.25, 0.5, 2, 4], [-0.5, 0, 0.5])]


@pytest.mark.parametrize("gamma,beta", GRID)
def test_coefficients_from_identity(gamma, beta):
    tau = np.linspace(2, 12, 24)
    m = (1 - np.exp(-0.5 * tau)) / tau
    vals = leading_ratio_1d(tau, gamma, beta) * m**2 * np.exp(-2 * tau * DIST_1D)
    got = recover_gamma_beta_1d(_curve(tau, vals), m, DIST_1D, (6, 12))
    assert got["gamma"] == pytest.approx(gamma, abs=1e-3 * max(gamma, 1))
    assert got["beta"] == pytest.approx(beta, abs=1e-3)
    fitted = recover_gamma_beta_1d(_curve(tau, vals), m, DIST_1D * 1.003, (6, 12),
                                   fit_distance=True)
    assert fitted["distance"] == pytest.approx(DIST_1D, abs=1e-6)
    assert fitted["gamma"] == pytest.approx(gamma, abs=1e-3 * max(gamma, 1))


def test_unit_gamma_series():
    tau = np.linspace(6, 12, 20)
    m = np.ones_like(tau)
    c2 = -0.125
    vals = c2 / tau**2 * np.exp(-2 * tau)
    got = recover_gamma_beta_1d(_curve(tau, vals), m, 1.0, (6, 12), refine=False)
    assert abs(got["c1"]) < 1e-12
    assert got["gamma"] == pytest.approx(1.0, abs=1e-10)
    assert got["beta"] == pytest.approx(-4 * c2, abs=1e-10)


def test_divergent_gamma():
    tau = np.linspace(6, 12, 20)
    vals = -0.5 / tau
    with pytest.raises(DivergentGammaError):
        recover_gamma_beta_1d(_curve(tau, vals), np.ones_like(tau), 0.0, (6, 12))


def test_negative_gamma_indeterminate():
    tau = np.linspace(6, 12, 20)
    vals = leading_ratio_1d(tau, -0.5, 0.0)
    got = recover_gamma_beta_1d(_curve(tau, vals), np.ones_like(tau), 0.0, (6, 12))
    assert got["gamma"] is None
    got = recover_gamma_beta_1d(_curve(tau, vals), np.ones_like(tau), 0.0, (6, 12), refine=False)
    assert got["gamma"] is None


@given(gamma=st.floats(0, 5), beta=st.floats(-0.5, 0.5))
def test_expansion_converges_to_resummed(gamma, beta):
    tau = np.array([6.0, 12.0])
    exact = leading_ratio_1d(tau, gamma, beta)
    errs = [np.max(np.abs(expansion_ratio_1d(tau, gamma, beta, n) - exact)) for n in (0, 2, 4)]
    assert errs[2] <= errs[1] + 1e-15 <= errs[0] + 2e-15
    assert errs[2] < 1e-5


def test_distance_from_simulated_1d(src1d, tau1d):
    c = indicator_curves_1d(Wave1DConfig(A_1D, 0.5, 0.3, 1 / 400, 5.0), src1d, tau1d)
    fit = estimate_distance(c.backscatter, (6, 12), moment=source_moment(src1d, tau1d))
    assert 1.9 <= fit.distance <= 2.1
