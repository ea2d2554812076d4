"""Exact Ising computations by enumeration of all 2**N binary patterns.

A graph is a natural-parameter vector ``j = (h_1..h_N, j_12, j_13, .., j_{N-1,N})``
of length ``d = N + N(N-1)/2``; pairs are ordered lexicographically with the
first node index major. A graph matrix ``J`` (``d x D``) stacks ``D`` graphs as
columns and a multi-graph model with weights ``theta`` has natural parameter
``J @ theta``.

Patterns are enumerated as integers ``0 .. 2**N - 1`` in ascending order with
node 1 on the most significant bit, and every reduction runs in that order, so
results do not depend on how the work is chunked.
"""

from functools import lru_cache

import numpy as np

from .errors import EnumerationLimitError, InvalidArgumentError

MAX_NODES = 20
# patterns per block when enumerating; below this the feature matrix is cached
_BLOCK = 1 << 14


def logsumexp(a, axis=None):
    """Stable ``log(sum(exp(a)))``; a lean stand-in for the scipy version."""
    m = np.max(a, axis=axis, keepdims=True)
    out = np.log(np.sum(np.exp(a - m), axis=axis, keepdims=True)) + m
    return out.item() if axis is None else np.squeeze(out, axis=axis)


def n_features(n):
    """Length of a graph vector on ``n`` nodes."""
    return n + n * (n - 1) // 2


def n_nodes(d):
    """Inverse of :func:`n_features`; raises if ``d`` is not a valid length."""
    n = int(round((np.sqrt(8 * d + 1) - 1) / 2))
    if n < 1 or n_features(n) != d:
        raise InvalidArgumentError(f"{d} is not a valid graph-vector length")
    return n


def canonical_index(i, j, n):
    """0-based position of the bias of node ``i`` (``j=None``) or pair ``(i, j)``.

    Node ids are 1-based. Pairs require ``i < j``.
    """
    if not 1 <= i <= n:
        raise InvalidArgumentError(f"node id {i} out of range 1..{n}")
    if j is None:
        return i - 1
    if not 1 <= j <= n or i >= j:
        raise InvalidArgumentError(f"pair ({i}, {j}) needs 1 <= i < j <= {n}")
    # pairs (a, b) with a < i come first: sum_{a<i} (n - a)
    offset = (i - 1) * n - (i - 1) * i // 2
    return n + offset + (j - i - 1)


def pair_indices(n):
    """Arrays ``(rows, cols)`` of 0-based node pairs in canonical order."""
    return np.triu_indices(n, k=1)


def _check_nodes(n):
    if n > MAX_NODES:
        raise EnumerationLimitError(
            f"exact enumeration supports at most {MAX_NODES} nodes, got {n}")
    if n < 1:
        raise InvalidArgumentError("need at least one node")


def as_pattern(x):
    x = np.asarray(x)
    if x.ndim != 1 or x.size == 0:
        raise InvalidArgumentError("pattern must be a non-empty 1-d array")
    if not np.all((x == 0) | (x == 1)):
        raise InvalidArgumentError("pattern entries must be 0 or 1")
    _check_nodes(x.size)
    return x.astype(np.int8)


def as_graph_vector(j):
    """Validate a graph vector; returns ``(array, n_nodes)``."""
    j = np.asarray(j, dtype=float)
    if j.ndim != 1:
        raise InvalidArgumentError("graph vector must be 1-d")
    n = n_nodes(j.size)
    _check_nodes(n)
    if not np.all(np.isfinite(j)):
        raise InvalidArgumentError("graph vector has non-finite entries")
    return j, n


def as_graph_matrix(J):
    """Validate a ``d x D`` graph matrix; returns ``(array, n_nodes)``."""
    J = np.asarray(J, dtype=float)
    if J.ndim == 1:
        J = J[:, None]
    if J.ndim != 2:
        raise InvalidArgumentError("graph matrix must be 2-d")
    d, D = J.shape
    n = n_nodes(d)
    _check_nodes(n)
    if not 1 <= D <= d:
        raise InvalidArgumentError(f"graph count {D} outside 1..{d}")
    if not np.all(np.isfinite(J)):
        raise InvalidArgumentError("graph matrix has non-finite entries")
    return J, n


def _check_theta(theta, J):
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (J.shape[1],):
        raise InvalidArgumentError(
            f"weights have shape {theta.shape}, expected ({J.shape[1]},)")
    return theta


def _patterns(n, start, stop):
    codes = np.arange(start, stop, dtype=np.int64)
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    return ((codes[:, None] >> shifts) & 1).astype(np.int8)


def _features(x):
    x = np.asarray(x, dtype=float)
    rows, cols = pair_indices(x.shape[-1])
    return np.concatenate([x, x[..., rows] * x[..., cols]], axis=-1)


@lru_cache(maxsize=None)
def _cached_features(n):
    F = _features(_patterns(n, 0, 1 << n))
    F.setflags(write=False)
    return F


def all_patterns(n):
    """All ``2**n`` patterns as an ``(2**n, n)`` int8 array in canonical order."""
    _check_nodes(n)
    return _patterns(n, 0, 1 << n)


def feature_blocks(n):
    """Yield feature-matrix row blocks covering all patterns in order."""
    _check_nodes(n)
    total = 1 << n
    if total <= _BLOCK:
        yield _cached_features(n)
        return
    for start in range(0, total, _BLOCK):
        yield _features(_patterns(n, start, min(start + _BLOCK, total)))


def feature_vector(x):
    """Feature vector ``(x_1..x_N, x_1 x_2, .., x_{N-1} x_N)`` of a pattern."""
    return _features(as_pattern(x))


def _energies(j, n):
    return np.concatenate([F @ j for F in feature_blocks(n)])


def log_partition(j):
    """Log normalizer ``log sum_x exp(j . F(x))`` over all patterns."""
    j, n = as_graph_vector(j)
    return float(logsumexp(_energies(j, n)))


def pattern_probabilities(j):
    """Probabilities of all ``2**N`` patterns in canonical order."""
    j, n = as_graph_vector(j)
    e = _energies(j, n)
    return np.exp(e - logsumexp(e))


def log_prob(x, j):
    """Log probability of pattern ``x`` under the stationary model ``j``."""
    j, n = as_graph_vector(j)
    f = feature_vector(x)
    if f.size != j.size:
        raise InvalidArgumentError("pattern and graph sizes disagree")
    return float(f @ j - log_partition(j))


def _moments_from_probs(p, n):
    eta = np.zeros(n_features(n))
    start = 0
    for F in feature_blocks(n):
        eta += p[start:start + len(F)] @ F
        start += len(F)
    return eta


def moments(j):
    """Expected feature vector (firing and co-firing probabilities) under ``j``."""
    _, n = as_graph_vector(j)
    return _moments_from_probs(pattern_probabilities(j), n)


def fisher_info(j):
    """Fisher information ``Cov[F(X)]`` under ``j``, a ``d x d`` matrix."""
    _, n = as_graph_vector(j)
    p = pattern_probabilities(j)
    eta = _moments_from_probs(p, n)
    G = np.zeros((eta.size, eta.size))
    start = 0
    for F in feature_blocks(n):
        C = F - eta
        G += (C * p[start:start + len(F), None]).T @ C
        start += len(F)
    return 0.5 * (G + G.T)


def most_probable_pattern(j):
    """The mode of the stationary model ``j`` (lowest index on ties)."""
    j, n = as_graph_vector(j)
    k = int(np.argmax(_energies(j, n)))
    return _patterns(n, k, k + 1)[0]


# -- multi-graph model ------------------------------------------------------

def multi_graph_log_prob(x, theta, J):
    """``log p(x | theta, J) = theta' J' F(x) - psi(J theta)``."""
    J, n = as_graph_matrix(J)
    theta = _check_theta(theta, J)
    x = as_pattern(x)
    if x.size != n:
        raise InvalidArgumentError(f"pattern has {x.size} nodes, graphs have {n}")
    return float(theta @ (J.T @ _features(x)) - log_partition(J @ theta))


def multi_graph_probabilities(theta, J):
    """Probabilities of every pattern under the multi-graph model."""
    J, _ = as_graph_matrix(J)
    return pattern_probabilities(J @ _check_theta(theta, J))


def multi_graph_moments(theta, J):
    """Expected projected features ``eta = J' moments(J theta)`` (length D)."""
    J, _ = as_graph_matrix(J)
    return J.T @ moments(J @ _check_theta(theta, J))


def multi_graph_fisher(theta, J):
    """Projected Fisher information ``J' G(J theta) J`` (``D x D``)."""
    J, _ = as_graph_matrix(J)
    G = J.T @ fisher_info(J @ _check_theta(theta, J)) @ J
    return 0.5 * (G + G.T)


def projected_features(J):
    """``F @ J`` for every pattern, a ``(2**N, D)`` array.

    Caching this once per graph matrix makes repeated evaluations at different
    weights cost ``O(2**N D)`` instead of ``O(2**N d)``.
    """
    J, n = as_graph_matrix(J)
    return np.concatenate([F @ J for F in feature_blocks(n)])


def projected_stats(FJ, theta):
    """Log normalizer, mean and covariance of the projected features.

    ``FJ`` comes from :func:`projected_features`. Returns ``(psi, eta, G)``.
    """
    e = FJ @ theta
    psi = logsumexp(e)
    p = np.exp(e - psi)
    eta = p @ FJ
    C = FJ - eta
    G = (C * p[:, None]).T @ C
    return float(psi), eta, 0.5 * (G + G.T)


def batch_moments(J, thetas, FJ=None):
    """Full moment vectors ``moments(J theta_s)`` for each row of ``thetas``.

    Returns an ``(S, d)`` array. Rows are independent evaluations.
    """
    J, n = as_graph_matrix(J)
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    if FJ is None:
        FJ = projected_features(J)
    E = FJ @ thetas.T
    P = np.exp(E - logsumexp(E, axis=0))
    H = np.zeros((thetas.shape[0], J.shape[0]))
    start = 0
    for F in feature_blocks(n):
        H += P[start:start + len(F)].T @ F
        start += len(F)
    return H


def weighted_feature_sum(n, W):
    """``F' W`` for a ``(2**n, k)`` array of per-pattern weights ``W``."""
    out = np.zeros((n_features(n),) + W.shape[1:])
    start = 0
    for F in feature_blocks(n):
        out += F.T @ W[start:start + len(F)]
        start += len(F)
    return out


def inverse_cdf_draw(probs, u):
    """Map uniforms ``u`` to pattern codes through the cumulative of ``probs``."""
    cdf = np.cumsum(probs)
    cdf /= cdf[-1]
    return np.minimum(np.searchsorted(cdf, u, side="right"), len(cdf) - 1)


def sample_patterns(theta, J, count, seed):
    """Draw ``count`` exact i.i.d. patterns from the multi-graph model.

    Uses inverse-CDF sampling over the enumerated distribution with a PCG64
    generator seeded by ``seed``; returns a ``(count, N)`` int8 array.
    """
    J, n = as_graph_matrix(J)
    if count < 1:
        raise InvalidArgumentError("count must be at least 1")
    probs = pattern_probabilities(J @ _check_theta(theta, J))
    rng = np.random.default_rng(seed)
    codes = inverse_cdf_draw(probs, rng.random(count))
    shifts = np.arange(n - 1, -1, -1)
    return ((codes[:, None] >> shifts) & 1).astype(np.int8)
