import math

import numpy as np
import pytest

from pathsens.errors import AbsoluteContinuityViolation, ModelError
from pathsens.estimators import (
    Discrete,
    PointMass,
    TimeGrid,
    _ire_from_propensities,
    _mean_se,
    averaged_re,
    estimate_ifim_ctmc,
    estimate_ire_ctmc,
    ifim_dtmc,
    ifim_integrand_ctmc,
    ifim_sde,
    ifim_values_sde,
    initial_fim,
    initial_re,
    ire_dtmc,
    ire_integrand_ctmc,
    ire_values_sde,
    pathwise_fim_ctmc,
    pathwise_fim_dtmc,
    pathwise_re_ctmc,
    pathwise_re_dtmc,
    pathwise_re_sde,
    poisson_initial,
    re_quadratic_ratio,
    rer_stationary_ctmc,
    trend,
)
from pathsens.model import brownian, ornstein_uhlenbeck, two_state_chain
from pathsens.oracle import exact_dtmc_pathwise_fim, exact_dtmc_pathwise_re, poisson_rer, two_state
from pathsens.simulate import em_ensemble, enumerate_dtmc_paths, ssa_ensemble

RE01 = poisson_rer(1.0, 1.1)


def test_time_grid():
    g = TimeGrid.uniform(10.0, 11)
    assert g.points[0] == 0.0 and g.horizon == 10.0 and len(g) == 11
    with pytest.raises(ModelError):
        TimeGrid(np.array([0.0, 2.0, 1.0]))


def test_mean_se_conventions():
    m, se = _mean_se(np.full(5, 0.3))
    assert m == pytest.approx(0.3) and se == 0.0
    m, se = _mean_se(np.array([1.0]))
    assert se == 0.0
    m, se = _mean_se(np.array([0.0, 2.0]), weights=np.array([0.25, 0.75]))
    assert m == 1.5 and se == 0.0


def test_trend_recovers_slope():
    t = np.linspace(0, 1, 11)
    samples = 2.0 * t[None] + np.arange(4)[:, None]
    slope, se = trend(samples, t)
    assert slope == pytest.approx(2.0) and se < 1e-12


def test_ire_integrand_poisson(poisson):
    net = poisson.network
    assert ire_integrand_ctmc(net, [1.0], [0.1], [0]) == pytest.approx(RE01, rel=1e-13)
    assert ire_integrand_ctmc(net, [1.0], [0.0], [7]) == 0.0


def test_ire_from_propensities_support():
    assert _ire_from_propensities(np.array([0.0, 1.0]), np.array([0.0, 1.0])) == 0.0
    with pytest.raises(AbsoluteContinuityViolation):
        _ire_from_propensities(np.array([0.0, 1.0]), np.array([0.5, 1.0]))


def test_ifim_integrand_birthdeath(birthdeath):
    F = ifim_integrand_ctmc(birthdeath.network, [1.0, 2.0], [3])
    np.testing.assert_allclose(F, [[1.0, 0.0], [0.0, 3 * 2.0 / 4.0]])


def test_initial_laws():
    a = PointMass(np.array([0]))
    b = Discrete(np.array([[0], [1]]), np.array([0.5, 0.5]))
    assert initial_re(a, b) == pytest.approx(math.log(2))
    assert initial_re(b, a) == math.inf
    assert initial_re(b, b) == 0.0
    nu = poisson_initial(2.0, param_index=0, n_params=1)
    assert initial_fim(nu, 1)[0, 0] == pytest.approx(0.5, rel=1e-10)
    assert initial_fim(a, 2).tolist() == [[0.0, 0.0], [0.0, 0.0]]


def test_poisson_initial_re_matches_closed_form():
    nu, nu_bar = poisson_initial(1.0), poisson_initial(1.1)
    assert initial_re(nu, nu_bar) == pytest.approx(RE01, rel=1e-9)


def test_poisson_pathwise_values_are_exact(poisson):
    ens = ssa_ensemble(poisson.network, [1.0], [0], 10.0, 200, base_seed=1)
    re = pathwise_re_ctmc(ens, poisson.network, [1.0], [0.1])
    assert re.value == pytest.approx(10 * RE01, rel=1e-12)
    fim = pathwise_fim_ctmc(ens, poisson.network, [1.0])
    assert fim.value[0, 0] == pytest.approx(10.0, rel=1e-12)
    assert averaged_re(ens, poisson.network, [1.0], [0.1], 10.0).value == pytest.approx(RE01, rel=1e-12)


def test_pathwise_re_zero_horizon(poisson):
    ens = ssa_ensemble(poisson.network, [1.0], [0], 1.0, 10, base_seed=1)
    assert pathwise_re_ctmc(ens, poisson.network, [1.0], [0.1], horizon=0.0).value == 0.0
    with pytest.raises(ModelError):
        pathwise_re_ctmc(ens, poisson.network, [1.0], [0.1], horizon=2.0)


def test_zero_perturbation_curve(birthdeath):
    ens = ssa_ensemble(birthdeath.network, [1.0, 1.0], [2], 3.0, 20, base_seed=1)
    curve = estimate_ire_ctmc(ens, TimeGrid.uniform(3.0, 4), birthdeath.network, [1.0, 1.0], [0.0, 0.0])
    assert np.all(curve.values == 0.0) and np.all(curve.std_errors == 0.0)


def test_single_trajectory_is_degenerate(birthdeath):
    ens = ssa_ensemble(birthdeath.network, [1.0, 1.0], [2], 3.0, 1, base_seed=1)
    curve = estimate_ire_ctmc(ens, TimeGrid.uniform(3.0, 4), birthdeath.network, [1.0, 1.0], [0.1, 0.0])
    assert curve.degenerate
    rer = rer_stationary_ctmc(ens, birthdeath.network, [1.0, 1.0], [0.1, 0.0])
    assert rer.note.endswith("nominal")


def test_ifim_curve_samples_optional(birthdeath):
    ens = ssa_ensemble(birthdeath.network, [1.0, 1.0], [2], 3.0, 10, base_seed=1)
    grid = TimeGrid.uniform(3.0, 4)
    curve = estimate_ifim_ctmc(ens, grid, birthdeath.network, [1.0, 1.0])
    assert curve.matrices.shape == (4, 2, 2)
    with pytest.raises(ModelError):
        curve.slope(0, 0)
    kept = estimate_ifim_ctmc(ens, grid, birthdeath.network, [1.0, 1.0], keep_samples=True)
    assert kept.samples.shape == (10, 4, 2, 2)


def test_dtmc_enumeration_matches_oracle():
    chain = two_state_chain()
    theta, eps = np.array([0.3, 0.5]), np.array([0.03, 0.0])
    ens = enumerate_dtmc_paths(chain.transition(theta), np.array([1.0, 0.0]), 6, theta)
    got = pathwise_re_dtmc(chain, ens, theta, eps)
    exact = exact_dtmc_pathwise_re(two_state(0.3, 0.5), two_state(0.33, 0.5), [1, 0], [1, 0], 6)
    assert got.value == pytest.approx(exact, rel=1e-12) and got.std_error == 0.0
    F = pathwise_fim_dtmc(chain, ens, theta)
    np.testing.assert_allclose(F.value, exact_dtmc_pathwise_fim(two_state(0.3, 0.5), [1, 0], 6), rtol=1e-12)


def test_dtmc_step_estimators():
    chain = two_state_chain()
    theta = np.array([0.3, 0.5])
    ens = enumerate_dtmc_paths(chain.transition(theta), np.array([1.0, 0.0]), 2, theta)
    step1 = ire_dtmc(chain, ens, theta, [0.03, 0.0], 1)
    expect = 0.7 * math.log(0.7 / 0.67) + 0.3 * math.log(0.3 / 0.33)
    assert step1.value == pytest.approx(expect, rel=1e-12)
    assert ifim_dtmc(chain, ens, theta, 1).value[0, 0] == pytest.approx(1 / 0.21)


def test_quadratic_ratio():
    assert re_quadratic_ratio(RE01, [[1.0]], [0.1]) == pytest.approx(0.9379640, abs=1e-6)
    with pytest.raises(ModelError):
        re_quadratic_ratio(RE01, [[0.0]], [0.1])


def test_sde_integrands():
    ou = ornstein_uhlenbeck(2.0)
    X = np.array([[1.0], [-3.0]])
    np.testing.assert_allclose(ire_values_sde(ou, [1.0], [0.5], X), [0.5 * 0.25 / 4, 0.5 * 2.25 / 4])
    np.testing.assert_allclose(ifim_values_sde(ou, [1.0], X)[:, 0, 0], [1 / 4, 9 / 4])


def test_sde_without_parameters():
    b = brownian(2, 1.0, 0)
    ens = em_ensemble(b, None, [0.0, 0.0], 0.1, 0.01, 5, base_seed=0)
    F = ifim_sde(b, ens, None, 0.1)
    assert F.value.shape == (0, 0)


def test_sde_pathwise_re_is_riemann_sum():
    ou = ornstein_uhlenbeck(1.0)
    ens = em_ensemble(ou, [1.0], [1.0], 0.1, 0.05, 3, base_seed=0)
    X = ens.sde_states()
    per = 0.5 * 0.01 * (X[:, 0, 0] ** 2 + X[:, 1, 0] ** 2) * 0.05
    assert pathwise_re_sde(ou, ens, [1.0], [0.1]).value == pytest.approx(per.mean())


def test_sde_time_must_be_on_lattice():
    ou = ornstein_uhlenbeck(1.0)
    ens = em_ensemble(ou, [1.0], [1.0], 0.1, 0.05, 3, base_seed=0)
    with pytest.raises(ModelError):
        ifim_sde(ou, ens, [1.0], 0.07)
