"""Sequential Bayes filter for the weights of a multi-graph Ising model.

The weights follow a Gaussian random walk ``theta_t = theta_{t-1} + xi_t`` with
``xi_t ~ N(0, I / lambda)``. Each filter density is approximated by a Gaussian
centred on the posterior mode (Laplace's method), found by damped
Newton-Raphson.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from . import ising
from .errors import ConvergenceError, InvalidArgumentError, NumericError

log = logging.getLogger(__name__)

JITTER = 1e-10


@dataclass
class NetworkState:
    """Gaussian belief over the graph weights at one time bin."""

    mean: np.ndarray
    cov: np.ndarray
    kind: str = "filtered"
    t: int = 1

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=float)
        self.cov = np.atleast_2d(np.asarray(self.cov, dtype=float))
        if self.kind not in ("predicted", "filtered"):
            raise InvalidArgumentError(f"unknown state kind {self.kind!r}")
        D = self.mean.size
        if self.mean.shape != (D,) or self.cov.shape != (D, D):
            raise InvalidArgumentError("mean/covariance shapes disagree")

    @property
    def sigma(self):
        """Posterior standard deviation of each weight."""
        return np.sqrt(np.diag(self.cov))


@dataclass
class FilterConfig:
    """State-noise precision, prior on the first weights and Newton settings.

    ``prior_mean`` and ``prior_cov`` default to ``0`` and the identity once
    the number of graphs is known (see :meth:`prior`).
    """

    lam: float = 1000.0
    prior_mean: np.ndarray = None
    prior_cov: np.ndarray = None
    newton_tol: float = 1e-8
    newton_max_iter: int = 100

    def __post_init__(self):
        if not self.lam > 0:
            raise InvalidArgumentError("lambda must be positive")
        if not self.newton_tol > 0:
            raise InvalidArgumentError("newton_tol must be positive")
        if self.newton_max_iter < 1:
            raise InvalidArgumentError("newton_max_iter must be at least 1")

    def prior(self, D):
        """Predicted state for the first time bin, ``N(mu, Sigma)``."""
        mu = np.zeros(D) if self.prior_mean is None else self.prior_mean
        sigma = np.eye(D) if self.prior_cov is None else self.prior_cov
        mu = np.broadcast_to(np.asarray(mu, dtype=float), (D,)).copy()
        sigma = np.asarray(sigma, dtype=float)
        if sigma.ndim == 0:
            sigma = float(sigma) * np.eye(D)
        if sigma.shape != (D, D) or not np.allclose(sigma, sigma.T):
            raise InvalidArgumentError("prior covariance must be symmetric D x D")
        _cholesky(sigma, "prior covariance")
        return NetworkState(mu, sigma, kind="predicted", t=1)


@dataclass
class FitTrace:
    """Per-bin filter output: weight means, their variances and log-likelihoods."""

    theta: np.ndarray
    var: np.ndarray
    loglik: np.ndarray
    t: np.ndarray = field(default=None)

    def __post_init__(self):
        self.theta = np.atleast_2d(np.asarray(self.theta, dtype=float))
        self.var = np.atleast_2d(np.asarray(self.var, dtype=float))
        self.loglik = np.asarray(self.loglik, dtype=float)
        if self.t is None:
            self.t = np.arange(1, len(self.loglik) + 1)
        self.t = np.asarray(self.t, dtype=int)

    def __len__(self):
        return len(self.loglik)

    @property
    def sigma(self):
        return np.sqrt(self.var)


def _cholesky(A, what="matrix", time_index=None):
    """Lower Cholesky factor; one retry with a small jitter before giving up."""
    try:
        return np.linalg.cholesky(A)
    except np.linalg.LinAlgError:
        log.warning("%s not positive definite, retrying with %g jitter", what, JITTER)
    try:
        return np.linalg.cholesky(A + JITTER * np.eye(len(A)))
    except np.linalg.LinAlgError:
        raise NumericError(f"{what} is not positive definite", time_index) from None


def _inverse(A, what, time_index=None):
    L = _cholesky(A, what, time_index)
    Linv = linalg.solve_triangular(L, np.eye(len(A)), lower=True, check_finite=False)
    inv = Linv.T @ Linv
    return 0.5 * (inv + inv.T)


def _logdet(A, what, time_index=None):
    L = _cholesky(A, what, time_index)
    return 2.0 * np.sum(np.log(np.diag(L)))


def one_step_predict(prev, lam):
    """Propagate a filtered state through the random walk."""
    cov = prev.cov + np.eye(len(prev.mean)) / lam
    return NetworkState(prev.mean.copy(), cov, kind="predicted", t=prev.t + 1)


def _observed_features(x, J):
    return J.T @ ising.feature_vector(x)


def log_posterior(theta, x, J, pred):
    """Unnormalized log filter density of ``theta`` given pattern ``x``."""
    J, _ = ising.as_graph_matrix(J)
    theta = np.asarray(theta, dtype=float)
    delta = theta - pred.mean
    prec = _inverse(pred.cov, "predicted covariance", pred.t)
    return float(theta @ _observed_features(x, J) - ising.log_partition(J @ theta)
                 - 0.5 * delta @ prec @ delta)


def log_posterior_grad(theta, x, J, pred):
    """Analytic gradient ``F(x, J) - eta(theta) - W^-1 (theta - mean)``."""
    J, _ = ising.as_graph_matrix(J)
    theta = np.asarray(theta, dtype=float)
    prec = _inverse(pred.cov, "predicted covariance", pred.t)
    return (_observed_features(x, J) - ising.multi_graph_moments(theta, J)
            - prec @ (theta - pred.mean))


def _newton(fx, FJ, pred, prec, cfg):
    """Maximize the log posterior; iterates on the offset from the prior mean
    so that very tight priors do not lose precision."""
    m = pred.mean
    delta = np.zeros_like(m)

    def objective(dl):
        psi, eta, G = ising.projected_stats(FJ, m + dl)
        return (m + dl) @ fx - psi - 0.5 * dl @ prec @ dl, eta, G

    f, eta, G = objective(delta)
    for _ in range(cfg.newton_max_iter):
        grad = fx - eta - prec @ delta
        if np.max(np.abs(grad)) < cfg.newton_tol:
            return m + delta, G
        H = G + prec
        L = _cholesky(H, "posterior precision", pred.t)
        step = linalg.cho_solve((L, True), grad, check_finite=False)
        alpha = 1.0
        for _ in range(60):
            f_new, eta_new, G_new = objective(delta + alpha * step)
            # tolerate round-off once the objective has flattened out
            if f_new >= f - 1e-12 * (1.0 + abs(f)):
                break
            alpha *= 0.5
        else:
            break
        delta = delta + alpha * step
        f, eta, G = f_new, eta_new, G_new
    grad = fx - eta - prec @ delta
    if np.max(np.abs(grad)) < cfg.newton_tol:
        return m + delta, G
    raise ConvergenceError(
        f"Newton-Raphson stopped with gradient norm {np.max(np.abs(grad)):.3g}",
        last_iterate=m + delta, time_index=pred.t)


def filter_update(pred, x, J, cfg, FJ=None):
    """Laplace-approximate filter density at the current bin.

    The mean is the posterior mode and the covariance the inverse of
    ``G(mode) + W_pred^-1``. ``FJ`` may carry precomputed
    :func:`ising.projected_features` for ``J``.
    """
    if pred.kind != "predicted":
        raise InvalidArgumentError("filter_update expects a predicted state")
    J, _ = ising.as_graph_matrix(J)
    if FJ is None:
        FJ = ising.projected_features(J)
    prec = _inverse(pred.cov, "predicted covariance", pred.t)
    theta, G = _newton(_observed_features(x, J), FJ, pred, prec, cfg)
    cov = _inverse(G + prec, "posterior precision", pred.t)
    return NetworkState(theta, cov, kind="filtered", t=pred.t)


def marginal_loglik_step(filtered, pred, x, J, FJ=None):
    """Laplace approximation of ``log p(x_t | x_{1:t-1})``."""
    J, _ = ising.as_graph_matrix(J)
    if FJ is None:
        FJ = ising.projected_features(J)
    theta = filtered.mean
    delta = theta - pred.mean
    prec = _inverse(pred.cov, "predicted covariance", pred.t)
    psi, _, _ = ising.projected_stats(FJ, theta)
    fit = theta @ _observed_features(x, J) - psi
    return float(fit - 0.5 * delta @ prec @ delta
                 + 0.5 * (_logdet(filtered.cov, "filtered covariance", filtered.t)
                          - _logdet(pred.cov, "predicted covariance", pred.t)))


def filter_step(pred, x, J, cfg, FJ=None):
    """Filter one bin; returns ``(filtered_state, marginal_loglik)``."""
    if FJ is None:
        FJ = ising.projected_features(J)
    filt = filter_update(pred, x, J, cfg, FJ)
    return filt, marginal_loglik_step(filt, pred, x, J, FJ)


def run_filter(data, J, cfg):
    """Filter a whole raster with fixed graphs ``J``; returns a :class:`FitTrace`."""
    J, n = ising.as_graph_matrix(J)
    data = np.asarray(data)
    if data.ndim != 2 or data.shape[1] != n or len(data) == 0:
        raise InvalidArgumentError(f"raster must be T x {n} with T >= 1")
    FJ = ising.projected_features(J)
    T, D = len(data), J.shape[1]
    theta, var, ll = np.empty((T, D)), np.empty((T, D)), np.empty(T)
    pred = cfg.prior(D)
    for k in range(T):
        filt, ll[k] = filter_step(pred, data[k], J, cfg, FJ)
        theta[k], var[k] = filt.mean, np.diag(filt.cov)
        pred = one_step_predict(filt, cfg.lam)
    return FitTrace(theta, var, ll)
