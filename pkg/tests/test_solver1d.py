import numpy as np
import pytest

from enclosure.geometry import ConfigurationError, Interval1D
from enclosure.pipeline import indicator_curves_1d
from enclosure.solver1d import (PoleError, TimeTrace, Wave1DConfig, free_solution_1d, indicator_1d,
                                indicator_1d_reference, laplace_w_exact_1d, solve_1d)
from enclosure.sources import SourceBall, eval_v_1d, source_moment
from enclosure.transform import laplace_in_time

from conftest import A_1D, DIST_1D


def test_zero_data_zero_trace():
    src = SourceBall(Interval1D(-1.5, -1.0), 0.0)
    tr = solve_1d(Wave1DConfig(A_1D, 0.5, 0.3, 0.01, 4.0), src, [-1.2, 0.0, 1.0])
    assert np.all(tr.values == 0)


def test_trace_length_and_times(src1d):
    tr = solve_1d(Wave1DConfig(A_1D, 0.5, 0.3, 0.01, 4.0, courant=0.9), src1d, [0.0])
    assert abs(tr.T - 4.0) <= tr.dt
    assert tr.times[1] == pytest.approx(0.009)


def test_neumann_reflection_is_the_image(src1d):
    # γ = β = 0: u(x, t) = u0(x, t) + u0(2a - x, t); exact at unit Courant ratio
    h = 1 / 200
    b = src1d.geometry.hi
    tr = solve_1d(Wave1DConfig(A_1D, 0.0, 0.0, h, 6.0), src1d, [b])
    t = tr.times
    reflected = tr.values[0] - free_solution_1d(src1d, b, t)
    image = free_solution_1d(src1d, 2 * A_1D - b, t)
    arrival = 2 * (A_1D - b)
    assert np.max(np.abs(reflected - image)) < 1e-12
    assert np.all(np.abs(reflected[t < arrival - 2 * h]) < 1e-12)
    assert np.all(reflected[t > arrival + 0.2] > 0)  # unflipped sign


def test_neumann_image_second_order_below_unit_courant(src1d):
    # pointwise errors sit at the kinks of the data; the transform is smooth
    b = src1d.geometry.hi
    tau = np.array([1.0, 3.0])
    image = laplace_in_time(
        TimeTrace(np.array([b]), 1e-3, (free_solution_1d(src1d, b, 1e-3 * np.arange(6001))
                                        + free_solution_1d(src1d, 2 * A_1D - b, 1e-3 * np.arange(6001)))[None]),
        tau).values[0]
    errs = []
    for h in (1 / 100, 1 / 200):
        tr = solve_1d(Wave1DConfig(A_1D, 0.0, 0.0, h, 6.0, courant=0.9), src1d, [b])
        errs.append(np.abs(laplace_in_time(tr, tau).values[0] - image))
    assert np.all(errs[1] < 1e-4 * np.abs(image))
    assert np.all(errs[1] < errs[0])


def test_absorbing_gives_free_field(src1d):
    probes = np.array([-3.0, -1.2, 0.0, 0.5, A_1D])
    tr = solve_1d(Wave1DConfig(A_1D, 1.0, 0.0, 1 / 100, 6.0), src1d, probes)
    free = free_solution_1d(src1d, probes[:, None], tr.times[None, :])
    assert np.max(np.abs(tr.values - free)) < 1e-12
    tr = solve_1d(Wave1DConfig(A_1D, 1.0, 0.0, 1 / 200, 6.0, courant=0.9), src1d, probes)
    free = TimeTrace(probes, tr.dt, free_solution_1d(src1d, probes[:, None], tr.times[None, :]))
    w_fd = laplace_in_time(tr, [2.0, 5.0]).values
    w_ex = laplace_in_time(free, [2.0, 5.0]).values
    assert np.allclose(w_fd, w_ex, rtol=1e-4, atol=1e-14)


def test_invisible_independent_of_a(src1d):
    probes = np.linspace(-1.5, -1.0, 11)
    t1 = solve_1d(Wave1DConfig(1.0, 1.0, 0.0, 1 / 400, 6.0), src1d, probes)
    t2 = solve_1d(Wave1DConfig(2.0, 1.0, 0.0, 1 / 400, 6.0), src1d, probes)
    assert np.max(np.abs(t1.values - t2.values)) <= 1e-6 * np.max(np.abs(t1.values))


@pytest.mark.parametrize("gamma,beta", [(0.5, 0.3), (0.0, 0.0), (3.0, 1.0)])
def test_energy_non_increasing(src1d, gamma, beta):
    cfg = Wave1DConfig(A_1D, gamma, beta, 1 / 200, 8.0, courant=0.9)
    e = solve_1d(cfg, src1d, [0.0], energy=True).meta["energy"]
    assert np.all(np.diff(e) <= 1e-12 * e[0])
    if gamma == 0 and beta == 0:
        assert np.ptp(e) <= 1e-12 * e[0]
    else:
        assert e[-1] < e[0]


def test_grid_convergence_second_order(src1d):
    tau = np.array([3.0, 6.0])
    w = []
    for h in (1 / 100, 1 / 200, 1 / 400):
        cfg = Wave1DConfig(A_1D, 0.5, 0.3, h, 6.0, courant=0.9)
        w.append(laplace_in_time(solve_1d(cfg, src1d, [0.0, A_1D]), tau).values)
    e1 = np.abs(w[0] - w[1])
    e2 = np.abs(w[1] - w[2])
    assert np.all(np.log2(e1 / e2) >= 1.8)


def test_oracle_agreement_at_tau4(src1d):
    cfg = Wave1DConfig(A_1D, 0.5, 0.3, 1 / 400, 14.0, courant=0.9)
    probes = np.array([-0.5, 0.0, A_1D])
    lf = laplace_in_time(solve_1d(cfg, src1d, probes), [4.0])
    ex = laplace_w_exact_1d(cfg, src1d, 4.0)
    assert ex(A_1D) == pytest.approx(ex.w_a, rel=1e-12)
    assert np.allclose(lf.values[:, 0], ex(probes), rtol=1e-3)


def test_exact_invisible_has_no_reflection(src1d):
    ex = laplace_w_exact_1d(Wave1DConfig(A_1D, 1.0, 0.0, 0.01, 1.0), src1d, 3.0)
    assert ex.A == 0.0
    v, dv = eval_v_1d(src1d, 0.3, 3.0)
    assert ex(0.3) == pytest.approx(v)
    assert ex.derivative(0.3) == pytest.approx(dv)


def test_exact_neumann_boundary_value(src1d):
    tau = 2.5
    ex = laplace_w_exact_1d(Wave1DConfig(A_1D, 0.0, 0.0, 0.01, 1.0), src1d, tau)
    mass = source_moment(src1d, tau)[0] * np.exp(-tau * (A_1D - src1d.geometry.hi))
    assert ex.w_a == pytest.approx(mass / tau)
    # Neumann: w'(a) = 0
    assert ex.derivative(A_1D) == pytest.approx(0.0, abs=1e-14)


def test_exact_satisfies_robin_relation(src1d):
    tau, gamma, beta = 3.0, 0.7, 0.4
    ex = laplace_w_exact_1d(Wave1DConfig(A_1D, gamma, beta, 0.01, 1.0), src1d, tau)
    # transformed boundary condition for T -> inf: -w' - (gamma tau + beta) w = 0
    assert -ex.derivative(A_1D) - (gamma * tau + beta) * ex(A_1D) == pytest.approx(0, abs=1e-15)


def test_pole_error(src1d):
    with pytest.raises(PoleError):
        laplace_w_exact_1d(Wave1DConfig(A_1D, 0.0, -2.0, 0.01, 1.0), src1d, 2.0)
    with pytest.raises(PoleError):
        indicator_1d_reference(2.0, 0.0, -2.0, 2.0, 1.0)


def test_indicator_vanishes_for_free_field():
    assert indicator_1d(0.3, -0.9, 0.3, -0.9) == 0.0


def test_reference_signs():
    tau = np.linspace(2, 12, 6)
    assert np.all(indicator_1d_reference(tau, 1.0, 0.0, 2.0, 1.0) == 0)
    assert np.all(indicator_1d_reference(tau, 3.0, 0.0, 2.0, 1.0) < 0)
    assert np.all(indicator_1d_reference(tau, 0.5, 0.0, 2.0, 1.0) > 0)


def test_pipeline_ratio_to_reference(src1d, tau1d):
    cfg = Wave1DConfig(A_1D, 0.5, 0.0, 1 / 400, 6.0)
    curves = indicator_curves_1d(cfg, src1d, tau1d)
    ref = indicator_1d_reference(tau1d, 0.5, 0.0, DIST_1D, source_moment(src1d, tau1d))
    ratio = curves.surface.values / ref
    assert np.all(curves.surface.values[tau1d >= 6] > 0)
    assert np.all(np.abs(ratio[tau1d >= 5] - 1) < 1e-3)


def test_config_errors(src1d):
    with pytest.raises(ConfigurationError):
        Wave1DConfig(A_1D, 0.5, 0.3, 0.01, 1.0, courant=1.1)
    with pytest.raises(ConfigurationError):
        Wave1DConfig(A_1D, -0.5, 0.3, 0.01, 1.0)
    cfg = Wave1DConfig(A_1D, 0.5, 0.3, 0.01, 1.0)
    with pytest.raises(ConfigurationError):
        solve_1d(cfg, src1d, [1.5])
    with pytest.raises(ConfigurationError):
        solve_1d(Wave1DConfig(A_1D, 0.5, 0.3, 0.01, 4.0, left=-2.0), src1d, [0.0])
    with pytest.raises(ConfigurationError):
        solve_1d(Wave1DConfig(-1.2, 0.5, 0.3, 0.01, 1.0), src1d, [-1.2])
