import math

import numpy as np
import pytest
from scipy import integrate

import oracles
from mgising import ising
from mgising.errors import ConvergenceError, InvalidArgumentError, NumericError
from mgising.filtering import (FilterConfig, NetworkState, filter_step, filter_update,
                               log_posterior, log_posterior_grad, marginal_loglik_step,
                               one_step_predict, run_filter)


def predicted(mean, cov):
    return NetworkState(np.atleast_1d(np.asarray(mean, float)), np.atleast_2d(cov), "predicted", 1)


def random_instance(rng, n=2, D=1, prior_var=None):
    J = rng.standard_normal((ising.n_features(n), D))
    x = rng.integers(0, 2, n)
    var = prior_var if prior_var is not None else rng.uniform(0.05, 2.0)
    pred = predicted(rng.normal(0, 1, D), var * np.eye(D))
    return J, x, pred


def grid_map(J, x, pred, lo=-5.0, hi=5.0, step=1e-4):
    """MAP by dense grid search over a 1-d weight (N = 2 only)."""
    grid = np.arange(lo, hi + step / 2, step)
    j = J[:, 0]
    # energies of the 4 patterns 00, 01, 10, 11 at unit weight
    e = np.array([oracles.features(p) @ j for p in oracles.patterns(2)])
    E = np.outer(grid, e)
    m = E.max(axis=1, keepdims=True)
    psi = (m + np.log(np.exp(E - m).sum(axis=1, keepdims=True)))[:, 0]
    fx = oracles.features(tuple(x)) @ j
    vals = grid * fx - psi - 0.5 * (grid - pred.mean[0]) ** 2 / pred.cov[0, 0]
    return grid[np.argmax(vals)]


# -- config and prediction --------------------------------------------------

def test_config_validation():
    with pytest.raises(InvalidArgumentError):
        FilterConfig(lam=0)
    with pytest.raises(InvalidArgumentError):
        FilterConfig(newton_tol=-1)
    with pytest.raises(InvalidArgumentError):
        FilterConfig(prior_cov=np.array([[1.0, 2.0], [0.0, 1.0]])).prior(2)
    with pytest.raises(NumericError):
        FilterConfig(prior_cov=-np.eye(2)).prior(2)


def test_prior_defaults_and_scalars():
    p = FilterConfig().prior(3)
    np.testing.assert_array_equal(p.mean, 0)
    np.testing.assert_array_equal(p.cov, np.eye(3))
    assert p.kind == "predicted" and p.t == 1
    p = FilterConfig(prior_mean=0.5, prior_cov=2.0).prior(2)
    np.testing.assert_array_equal(p.mean, [0.5, 0.5])
    np.testing.assert_array_equal(p.cov, 2 * np.eye(2))


def test_one_step_predict_example():
    prev = NetworkState(np.array([0.3, -0.2]), 0.1 * np.eye(2), "filtered", 4)
    pred = one_step_predict(prev, 1000.0)
    np.testing.assert_array_equal(pred.mean, [0.3, -0.2])
    np.testing.assert_allclose(pred.cov, 0.101 * np.eye(2), atol=1e-15)
    assert pred.kind == "predicted" and pred.t == 5


def test_one_step_predict_adds_exactly_inverse_lambda(rng):
    A = rng.standard_normal((3, 3))
    prev = NetworkState(rng.standard_normal(3), A @ A.T + np.eye(3), "filtered", 1)
    for lam in (1.0, 1000.0, 1e12):
        pred = one_step_predict(prev, lam)
        assert np.all(np.abs(pred.cov - prev.cov - np.eye(3) / lam) <= 1e-12)


def test_state_validation():
    with pytest.raises(InvalidArgumentError):
        NetworkState(np.zeros(2), np.eye(3), "filtered", 1)
    with pytest.raises(InvalidArgumentError):
        NetworkState(np.zeros(2), np.eye(2), "smoothed", 1)


# -- posterior --------------------------------------------------------------

def test_log_posterior_prior_term_vanishes_at_prior_mean(rng):
    J, x, pred = random_instance(rng, n=3, D=2)
    expected = pred.mean @ (J.T @ oracles.features(tuple(x))) - oracles.log_partition(J @ pred.mean, 3)
    assert log_posterior(pred.mean, x, J, pred) == pytest.approx(expected, abs=1e-12)


def test_log_posterior_compositional(rng):
    J, x, pred = random_instance(rng)
    theta = np.array([0.7])
    expected = (ising.multi_graph_log_prob(x, theta, J)
                - 0.5 * (theta[0] - pred.mean[0]) ** 2 / pred.cov[0, 0])
    assert log_posterior(theta, x, J, pred) == pytest.approx(expected, abs=1e-12)


def test_log_posterior_grad_matches_finite_differences(rng):
    J, x, pred = random_instance(rng, n=3, D=2)
    theta = rng.standard_normal(2)
    fd = oracles.grad_fd(lambda th: log_posterior(th, x, J, pred), theta)
    np.testing.assert_allclose(log_posterior_grad(theta, x, J, pred), fd, atol=1e-7)


# -- filter update ----------------------------------------------------------

def test_map_is_stationary(rng):
    cfg = FilterConfig()
    for _ in range(10):
        J, x, pred = random_instance(rng, n=4, D=3)
        filt = filter_update(pred, x, J, cfg)
        assert np.max(np.abs(log_posterior_grad(filt.mean, x, J, pred))) < cfg.newton_tol


def test_map_matches_grid_search(rng):
    cfg = FilterConfig()
    for _ in range(10):
        J, x, pred = random_instance(rng)
        filt = filter_update(pred, x, J, cfg)
        assert abs(filt.mean[0] - grid_map(J, x, pred)) <= 2e-4


def test_tight_prior_dominates(rng):
    J, x, _ = random_instance(rng, n=3, D=2)
    pred = predicted([0.4, -1.2], 1e-12 * np.eye(2))
    filt = filter_update(pred, x, J, FilterConfig())
    np.testing.assert_allclose(filt.mean, pred.mean, atol=1e-6)


def test_filtered_covariance_below_predicted(rng):
    for _ in range(10):
        J, x, pred = random_instance(rng, n=3, D=2)
        filt = filter_update(pred, x, J, FilterConfig())
        assert np.linalg.eigvalsh(filt.cov).min() > 0
        assert np.linalg.eigvalsh(pred.cov - filt.cov).min() >= -1e-12
        # covariance is the inverse of Fisher information plus prior precision
        G = ising.multi_graph_fisher(filt.mean, J)
        np.testing.assert_allclose(np.linalg.inv(filt.cov), G + np.linalg.inv(pred.cov),
                                   rtol=1e-9, atol=1e-9)


def test_filter_update_needs_predicted_state(rng):
    J, x, pred = random_instance(rng)
    filt = filter_update(pred, x, J, FilterConfig())
    with pytest.raises(InvalidArgumentError):
        filter_update(filt, x, J, FilterConfig())


def test_newton_failure_reports_last_iterate(rng):
    J, x, pred = random_instance(rng, n=3, D=2)
    with pytest.raises(ConvergenceError) as info:
        filter_update(pred, x, J, FilterConfig(newton_max_iter=1, newton_tol=1e-300))
    assert info.value.last_iterate.shape == (2,)
    assert info.value.time_index == 1
    assert "(t=1)" in str(info.value)


# -- marginal likelihood ----------------------------------------------------

def test_marginal_loglik_compositional(rng):
    J, x, pred = random_instance(rng, n=3, D=2)
    filt = filter_update(pred, x, J, FilterConfig())
    th, d = filt.mean, filt.mean - pred.mean
    expected = (ising.multi_graph_log_prob(x, th, J)
                - 0.5 * d @ np.linalg.solve(pred.cov, d)
                + 0.5 * (np.linalg.slogdet(filt.cov)[1] - np.linalg.slogdet(pred.cov)[1]))
    assert marginal_loglik_step(filt, pred, x, J) == pytest.approx(expected, abs=1e-12)
    assert np.isfinite(expected)
    assert expected <= 0.5 * (np.linalg.slogdet(filt.cov)[1] - np.linalg.slogdet(pred.cov)[1]) + 1e-12


def test_marginal_loglik_middle_term_zero_when_uninformed(rng):
    J, x, pred = random_instance(rng, n=3, D=2)
    filt = NetworkState(pred.mean.copy(), 0.5 * pred.cov, "filtered", 1)
    expected = (ising.multi_graph_log_prob(x, pred.mean, J)
                + 0.5 * (np.linalg.slogdet(filt.cov)[1] - np.linalg.slogdet(pred.cov)[1]))
    assert marginal_loglik_step(filt, pred, x, J) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("mean,var,j", [(0.0, 1.0, 1.0), (1.5, 0.3, -2.0), (-0.5, 4.0, 0.7)])
def test_laplace_evidence_sums_to_about_one(mean, var, j):
    # single node, single graph: p(x | theta) = exp(x j theta) / (1 + exp(j theta))
    J = np.array([[j]])
    pred = predicted([mean], [[var]])
    total, exact = 0.0, []
    for x in (0, 1):
        filt, ll = filter_step(pred, np.array([x]), J, FilterConfig())
        total += math.exp(ll)
        dens = lambda th: (math.exp(x * j * th - math.log1p(math.exp(j * th)))
                           * math.exp(-0.5 * (th - mean) ** 2 / var) / math.sqrt(2 * math.pi * var))
        exact.append(integrate.quad(dens, -40, 40)[0])
    assert 0.9 <= total <= 1.1
    assert sum(exact) == pytest.approx(1.0, abs=1e-8)


# -- whole record -----------------------------------------------------------

def test_run_filter_shapes_and_determinism(rng):
    J = rng.standard_normal((6, 2))
    data = rng.integers(0, 2, (50, 3))
    a = run_filter(data, J, FilterConfig())
    b = run_filter(data, J, FilterConfig())
    assert a.theta.shape == (50, 2) and a.var.shape == (50, 2) and len(a) == 50
    np.testing.assert_array_equal(a.t, np.arange(1, 51))
    np.testing.assert_array_equal(a.loglik, b.loglik)
    assert np.all(a.var > 0)


def test_run_filter_matches_manual_steps(rng):
    J = rng.standard_normal((3, 1))
    data = rng.integers(0, 2, (5, 2))
    cfg = FilterConfig(lam=50.0)
    trace = run_filter(data, J, cfg)
    pred = cfg.prior(1)
    for k, x in enumerate(data):
        filt, ll = filter_step(pred, x, J, cfg)
        assert trace.theta[k, 0] == filt.mean[0] and trace.loglik[k] == ll
        pred = one_step_predict(filt, cfg.lam)


def test_run_filter_rejects_mismatched_raster(rng):
    with pytest.raises(InvalidArgumentError):
        run_filter(np.zeros((5, 4), int), np.ones((6, 1)), FilterConfig())


def test_log_posterior_unimodal_along_lines(rng):
    cfg = FilterConfig()
    for _ in range(5):
        J, x, pred = random_instance(rng, n=3, D=2)
        mode = filter_update(pred, x, J, cfg).mean
        direction = rng.standard_normal(2)
        vals = np.array([log_posterior(mode + s * direction, x, J, pred)
                         for s in np.linspace(-3, 3, 100)])
        peak = int(np.argmax(vals))
        assert np.all(np.diff(vals[:peak + 1]) >= -1e-12)
        assert np.all(np.diff(vals[peak:]) <= 1e-12)


def test_filter_bit_identical_on_repeat(rng):
    J, x, pred = random_instance(rng, n=4, D=3)
    a = filter_update(pred, x, J, FilterConfig())
    b = filter_update(pred, x, J, FilterConfig())
    assert np.array_equal(a.mean, b.mean) and np.array_equal(a.cov, b.cov)
