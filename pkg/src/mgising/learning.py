"""Online maximum-likelihood learning of the graph matrix.

After filtering each bin, the graphs take one stochastic-gradient step on the
expected complete-data log-likelihood (the Q-function), whose gradient with
respect to ``J`` is ``< (F(x_t) - eta(J theta)) theta' >`` under the filter
density of ``theta``.
"""

import itertools
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from . import ising
from .errors import (DegenerateColumnError, InvalidArgumentError, NumericError)
from .filtering import FitTrace, NetworkState, filter_step, one_step_predict

log = logging.getLogger(__name__)


@dataclass
class LearnerConfig:
    """Settings for the graph update.

    mc_samples
        Number of posterior draws used to average the gradient; ``0`` plugs in
        the posterior mean instead.
    scale_columns
        Rescale each graph column to unit sample variance after every update.
    compensate_state
        When rescaling, multiply the weights by the same factors so that
        ``J @ theta`` is unchanged.
    snapshot_every
        Store a copy of ``J`` every this many bins (``None`` disables).
    """

    epsilon: float = 1e-3
    mc_samples: int = 100
    scale_columns: bool = True
    compensate_state: bool = True
    seed: int = 0
    snapshot_every: int = None
    clip: float = 1e3

    def __post_init__(self):
        if not self.epsilon >= 0:
            raise InvalidArgumentError("epsilon must be non-negative")
        if self.mc_samples < 0:
            raise InvalidArgumentError("mc_samples must be non-negative")
        if self.snapshot_every is not None and self.snapshot_every < 1:
            raise InvalidArgumentError("snapshot_every must be positive")


@dataclass
class OnlineResult:
    trace: FitTrace
    final_graphs: np.ndarray
    graph_snapshots: list = field(default_factory=list)
    initial_graphs: np.ndarray = None


def sample_posterior(state, count, rng):
    """Draw ``count`` weight vectors from ``N(state.mean, state.cov)``.

    A singular (even zero) covariance is allowed.
    """
    D = len(state.mean)
    try:
        L = linalg.cholesky(state.cov, lower=True)
    except linalg.LinAlgError:
        w, V = np.linalg.eigh(state.cov)
        L = V * np.sqrt(np.clip(w, 0.0, None))
    z = rng.standard_normal((count, D))
    return state.mean + z @ L.T


def q_gradient_from_samples(x, thetas, J, FJ=None):
    """Gradient of the sampled Q-function at ``J`` for the weight draws ``thetas``."""
    J, n = ising.as_graph_matrix(J)
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    f = ising.feature_vector(x)
    if FJ is None:
        FJ = ising.projected_features(J)
    # sum_s eta(J theta_s) theta_s' = F' (P Theta), P the per-sample pattern probabilities
    E = FJ @ thetas.T
    P = np.exp(E - ising.logsumexp(E, axis=0))
    return (np.outer(f, thetas.sum(axis=0)) - ising.weighted_feature_sum(n, P @ thetas)) / len(thetas)


def q_objective(J, x, thetas):
    """Sampled Q-function ``mean_s [theta_s' J' F(x) - psi(J theta_s)]``."""
    J, _ = ising.as_graph_matrix(J)
    f = ising.feature_vector(x)
    vals = [th @ (J.T @ f) - ising.log_partition(J @ th) for th in np.atleast_2d(thetas)]
    return float(np.mean(vals))


def q_gradient(x, filtered, J, cfg, rng=None, FJ=None):
    """Stochastic gradient of the Q-function with respect to the graphs.

    Averages over ``cfg.mc_samples`` draws from the filter density, or
    evaluates once at its mean when ``mc_samples == 0``. Without an explicit
    ``rng`` a generator seeded with ``cfg.seed`` is used.
    """
    if cfg.mc_samples == 0:
        thetas = filtered.mean[None, :]
    else:
        if rng is None:
            rng = np.random.default_rng(cfg.seed)
        thetas = sample_posterior(filtered, cfg.mc_samples, rng)
    return q_gradient_from_samples(x, thetas, J, FJ)


def update_graphs(J, grad, epsilon):
    """One gradient-ascent step ``J + epsilon * grad``."""
    J = np.asarray(J, dtype=float)
    grad = np.asarray(grad, dtype=float)
    if grad.shape != J.shape:
        raise InvalidArgumentError(f"gradient shape {grad.shape} != graphs {J.shape}")
    if not np.all(np.isfinite(grad)):
        raise NumericError("non-finite graph gradient")
    return J + epsilon * grad


def rescale_columns(J, state, compensate=True):
    """Scale every column of ``J`` to unit sample variance (``ddof=1``).

    With ``compensate`` the weight mean and covariance absorb the factors so
    the natural parameter ``J @ theta`` is preserved; otherwise ``state`` is
    returned untouched.
    """
    J = np.asarray(J, dtype=float)
    s = J.std(axis=0, ddof=1)
    for k in np.flatnonzero(~(s > 0)):
        raise DegenerateColumnError(int(k), getattr(state, "t", None))
    J = J / s
    if compensate and state is not None:
        state = NetworkState(state.mean * s, state.cov * np.outer(s, s),
                             kind=state.kind, t=state.t)
    return J, state


def column_correlation(a, b):
    """Cosine similarity between two graph vectors."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise InvalidArgumentError("graph vectors differ in length")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise InvalidArgumentError("zero graph vector")
    return float(np.clip(a @ b / (na * nb), -1.0, 1.0))


def match_columns(J_fit, J_ref):
    """Pair fitted with reference columns to maximise the total correlation.

    Fitted columns are only identified up to order, so every assignment of
    fitted to reference columns is tried. Returns ``(order, corrs)`` where
    ``J_fit[:, order[k]]`` is matched with ``J_ref[:, k]``.
    """
    J_fit = np.atleast_2d(J_fit)
    J_ref = np.atleast_2d(J_ref)
    C = np.array([[column_correlation(f, r) for f in J_fit.T] for r in J_ref.T])
    best = max(itertools.permutations(range(J_fit.shape[1]), J_ref.shape[1]),
               key=lambda p: sum(C[k, p[k]] for k in range(len(p))))
    return list(best), np.array([C[k, best[k]] for k in range(len(best))])


def init_graphs(n, D, seed):
    """Random starting graphs with i.i.d. standard normal entries."""
    rng = np.random.default_rng(seed)
    return rng.standard_normal((ising.n_features(n), D))


def _seeds(seed):
    init, mc = np.random.SeedSequence(seed).spawn(2)
    return init, mc


def run_online(data, D, fcfg, lcfg, J_init=None):
    """Filter the weights and learn the graphs in a single pass over ``data``.

    Per bin: filter the weights, take the Q-function gradient at the current
    graphs, step the graphs, optionally rescale their columns, then predict
    the next bin. ``J_init`` defaults to standard normal entries drawn from
    ``lcfg.seed``.
    """
    data = np.asarray(data)
    if data.ndim != 2 or len(data) == 0:
        raise InvalidArgumentError("raster must be a non-empty T x N array")
    T, n = data.shape
    init_seed, mc_seed = _seeds(lcfg.seed)
    if J_init is None:
        J = init_graphs(n, D, init_seed)
    else:
        J, n_J = ising.as_graph_matrix(np.array(J_init, dtype=float))
        if J.shape[1] != D or n_J != n:
            raise InvalidArgumentError(f"initial graphs must be {ising.n_features(n)} x {D}")
        J = J.copy()
    J0 = J.copy()
    rng = np.random.default_rng(mc_seed)

    theta, var, ll = np.empty((T, D)), np.empty((T, D)), np.empty(T)
    snapshots = []
    pred = fcfg.prior(D)
    for k in range(T):
        try:
            FJ = ising.projected_features(J)
            filt, ll[k] = filter_step(pred, data[k], J, fcfg, FJ)
            theta[k], var[k] = filt.mean, np.diag(filt.cov)
            if lcfg.epsilon > 0:
                grad = q_gradient(data[k], filt, J, lcfg, rng, FJ)
                big = np.abs(grad) > lcfg.clip
                if big.any():
                    log.warning("t=%d: clipping %d gradient entries", k + 1, big.sum())
                    grad = np.clip(grad, -lcfg.clip, lcfg.clip)
                J = update_graphs(J, grad, lcfg.epsilon)
            if lcfg.scale_columns:
                J, filt = rescale_columns(J, filt, lcfg.compensate_state)
        except NumericError as err:
            if err.time_index is None:
                err.time_index = k + 1
            raise
        if lcfg.snapshot_every and (k + 1) % lcfg.snapshot_every == 0:
            snapshots.append((k + 1, J.copy()))
        pred = one_step_predict(filt, fcfg.lam)
    return OnlineResult(FitTrace(theta, var, ll), J, snapshots, J0)
