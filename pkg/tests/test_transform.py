import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy import integrate

from enclosure.solver1d import TimeTrace
from enclosure.transform import (LaplaceField, default_tau_grid, laplace_in_time,
                                 laplace_piecewise_linear, laplace_weights)

TAU = np.array([0.01, 0.3, 2.0, 7.5, 40.0])


def _trace(values, dt):
    values = np.atleast_2d(values)
    return TimeTrace(np.zeros(values.shape[0]), dt, values)


def test_constant_signal_exact():
    dt, N = 0.01, 300
    T = dt * N
    w = laplace_in_time(_trace(np.ones(N + 1), dt), TAU).values[0]
    assert np.allclose(w, -np.expm1(-TAU * T) / TAU, rtol=1e-13, atol=0)


def test_linear_signal_exact():
    dt, N = 0.02, 150
    T = dt * N
    t = dt * np.arange(N + 1)
    w = laplace_in_time(_trace(t, dt), TAU).values[0]
    want = (1 - np.exp(-TAU * T) * (1 + TAU * T)) / TAU**2
    assert np.allclose(w, want, rtol=1e-12, atol=1e-300)


def test_sine_against_adaptive_quadrature():
    omega, dt, N = 3.0, 0.05, 200
    t = dt * np.arange(N + 1)
    u = np.sin(omega * t)
    tau = np.array([0.5, 4.0, 10.0])
    w = laplace_in_time(_trace(u, dt), tau).values[0]
    for j, s in enumerate(tau):
        interp, _ = integrate.quad(lambda x: np.exp(-s * x) * np.interp(x, t, u), 0, t[-1],
                                   points=t[1:-1], limit=500, epsabs=1e-15, epsrel=1e-13)
        assert w[j] == pytest.approx(interp, rel=1e-12, abs=1e-15)


def test_sine_second_order_in_dt():
    omega, T, tau = 3.0, 4.0, 2.0
    exact = (omega - np.exp(-tau * T) * (tau * np.sin(omega * T) + omega * np.cos(omega * T))) / (
        tau**2 + omega**2)
    errs = []
    for N in (100, 200, 400):
        t = np.linspace(0, T, N + 1)
        errs.append(abs(laplace_in_time(_trace(np.sin(omega * t), T / N), [tau]).values[0, 0] - exact))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders > 1.9)


def test_nonuniform_matches_uniform():
    dt, N = 0.1, 40
    t = dt * np.arange(N + 1)
    u = np.cos(t) + t**2
    w1 = laplace_piecewise_linear(t, u, TAU)
    w2 = laplace_weights(N, dt, TAU) @ u
    assert np.allclose(w1, w2, rtol=1e-12)


@given(arrays(float, 30, elements=st.floats(-10, 10)), arrays(float, 30, elements=st.floats(-10, 10)),
       st.floats(-3, 3), st.floats(-3, 3))
def test_linearity(u1, u2, a, b):
    dt = 0.07
    w = lambda u: laplace_in_time(_trace(u, dt), TAU).values[0]
    lhs = w(a * u1 + b * u2)
    rhs = a * w(u1) + b * w(u2)
    scale = np.abs(a) * np.abs(w(np.abs(u1))) + np.abs(b) * np.abs(w(np.abs(u2))) + 1e-300
    assert np.all(np.abs(lhs - rhs) <= 1e-12 * scale + 1e-300)


@given(arrays(float, 25, elements=st.floats(0, 100)))
def test_positivity_and_decay(u):
    tau = np.linspace(0.1, 20, 15)
    w = laplace_in_time(_trace(u, 0.1), tau).values[0]
    assert np.all(w >= 0)
    assert np.all(np.diff(w) <= 1e-15 * np.max(np.abs(w)))


def test_errors():
    with pytest.raises(ValueError):
        laplace_in_time(_trace(np.ones(5), 0.1), [0.0, 1.0])
    with pytest.raises(ValueError):
        laplace_in_time(_trace(np.ones((1, 1)), 0.1), [1.0])
    with pytest.raises(ValueError):
        laplace_piecewise_linear([0.0, 0.0, 1.0], [1, 1, 1], [1.0])


def test_series_branch_continuous():
    # the small-kappa series and the closed form agree across the switch
    dt = 1.0
    tau = np.array([0.0499999, 0.0500001])
    w = laplace_weights(1, dt, tau)
    assert np.allclose(w[0], w[1], rtol=1e-5)


def test_laplace_field_validation():
    tau = np.array([1.0, 2.0])
    with pytest.raises(ValueError):
        LaplaceField(np.array([2.0, 1.0]), np.zeros((1, 2)))
    with pytest.raises(ValueError):
        LaplaceField(tau, np.array([[np.nan, 1.0]]))
    with pytest.raises(ValueError):
        LaplaceField(tau, np.zeros((1, 3)))
    lf = LaplaceField(tau, np.ones((3, 2)))
    assert lf.n_probes == 3
    assert np.all((lf - lf).values == 0)


def test_default_grid():
    g1 = default_tau_grid(1)
    g3 = default_tau_grid(3)
    assert g1.size == g3.size == 24
    assert (g1[0], g1[-1], g3[-1]) == (2.0, 12.0, 10.0)
