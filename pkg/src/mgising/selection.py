"""Comparing fits: epoch-averaged likelihoods, AIC sweeps and baselines."""

import logging
from dataclasses import dataclass, field

import numpy as np

from . import ising
from .errors import InvalidArgumentError, NumericError
from .filtering import FitTrace, run_filter
from .learning import column_correlation, run_online

log = logging.getLogger(__name__)


def _values(trace):
    return trace.loglik if isinstance(trace, FitTrace) else np.asarray(trace, dtype=float)


def epoch_average_loglik(trace, epoch_len):
    """Mean per-bin marginal log-likelihood of each complete epoch."""
    if epoch_len <= 0:
        raise InvalidArgumentError("epoch_len must be positive")
    ll = _values(trace)
    whole = len(ll) // epoch_len
    if whole * epoch_len != len(ll):
        log.warning("dropping %d bins of a trailing partial epoch", len(ll) - whole * epoch_len)
    return ll[:whole * epoch_len].reshape(whole, epoch_len).mean(axis=1)


def window_loglik(trace, window="auto", epoch_len=None):
    """Summed log-likelihood over the evaluation window.

    ``"last-epoch"`` uses the final ``epoch_len`` bins, ``"latter-half"`` the
    second half of the record; ``"auto"`` picks the former when an epoch length
    is known.
    """
    ll = _values(trace)
    if window == "auto":
        window = "last-epoch" if epoch_len else "latter-half"
    if window == "last-epoch":
        if not epoch_len or epoch_len > len(ll):
            raise InvalidArgumentError("last-epoch window needs 0 < epoch_len <= T")
        return float(ll[-epoch_len:].sum())
    if window == "latter-half":
        return float(ll[len(ll) // 2:].sum())
    raise InvalidArgumentError(f"unknown window {window!r}")


def aic(window_loglik, m):
    """``-2 l + 2 m``."""
    if m < 1:
        raise InvalidArgumentError("need at least one free parameter")
    return -2.0 * window_loglik + 2.0 * m


def n_free_params(n, D):
    """Entries of a ``d x D`` graph matrix."""
    return D * ising.n_features(n)


@dataclass
class SelectionRow:
    D: int
    m: int
    loglik: float
    aic: float
    error: str = None


@dataclass
class SelectionReport:
    rows: list
    chosen: int
    results: dict = field(default_factory=dict, repr=False)

    def to_csv(self):
        lines = ["D,m,loglik,AIC"]
        for r in self.rows:
            lines.append(f"{r.D},{r.m},{r.loglik:.17g},{r.aic:.17g}")
        return "\n".join(lines) + "\n"

    def table(self):
        out = [f"{'D':>3} {'m':>5} {'loglik':>14} {'AIC':>14}"]
        for r in self.rows:
            mark = " *" if r.D == self.chosen else ""
            if r.error:
                out.append(f"{r.D:>3} {r.m:>5}  failed: {r.error}")
            else:
                out.append(f"{r.D:>3} {r.m:>5} {r.loglik:>14.3f} {r.aic:>14.3f}{mark}")
        return "\n".join(out)


def sweep(data, candidates, fcfg, lcfg, window="auto", epoch_len=None):
    """Fit every candidate graph count with the same seeds and rank them by AIC.

    A failing candidate is reported with its error and skipped in the ranking.
    Ties go to the smaller graph count.
    """
    candidates = sorted(set(int(D) for D in candidates))
    if not candidates:
        raise InvalidArgumentError("no candidate graph counts")
    data = np.asarray(data)
    n = data.shape[1]
    rows, results = [], {}
    for D in candidates:
        m = n_free_params(n, D)
        try:
            res = run_online(data, D, fcfg, lcfg)
        except (NumericError, InvalidArgumentError) as err:
            log.warning("candidate D=%d failed: %s", D, err)
            rows.append(SelectionRow(D, m, np.nan, np.nan, str(err)))
            continue
        results[D] = res
        ll = window_loglik(res.trace, window, epoch_len)
        rows.append(SelectionRow(D, m, ll, aic(ll, m)))
    ok = [r for r in rows if r.error is None]
    if not ok:
        raise NumericError("every candidate failed")
    chosen = min(ok, key=lambda r: (r.aic, r.D)).D
    return SelectionReport(rows, chosen, results)


def full_model_graphs(n):
    """Identity graph matrix: every natural parameter gets its own weight."""
    return np.eye(ising.n_features(n))


def fit_full_model(data, fcfg):
    """Filter the full time-dependent Ising model (no graph learning)."""
    data = np.asarray(data)
    return run_filter(data, full_model_graphs(data.shape[1]), fcfg)


@dataclass
class PCAResult:
    components: np.ndarray
    explained_variance: np.ndarray
    abs_corr: np.ndarray
    matched: list


def principal_components(X):
    """Eigen-decomposition of the covariance of the rows of ``X``, largest first."""
    X = np.asarray(X, dtype=float)
    C = np.cov(X - X.mean(axis=0), rowvar=False)
    w, V = np.linalg.eigh(np.atleast_2d(C))
    order = np.argsort(w)[::-1]
    return np.clip(w[order], 0.0, None), V[:, order]


def greedy_match(C):
    """Assign rows to columns by repeatedly taking the largest ``|C|`` entry."""
    A = np.abs(np.asarray(C, dtype=float)).copy()
    pairs = {}
    for _ in range(min(A.shape)):
        i, j = np.unravel_index(np.argmax(A), A.shape)
        pairs[int(i)] = int(j)
        A[i, :] = -1.0
        A[:, j] = -1.0
    return pairs


def pca_baseline(full_trace, D, reference, rank_tol=1e-12):
    """Top-``D`` principal directions of the full-model estimates vs reference graphs.

    Each component is paired with a distinct reference column by greedy
    ``|correlation|`` and that absolute correlation is reported.
    """
    theta = full_trace.theta if isinstance(full_trace, FitTrace) else np.asarray(full_trace)
    if len(theta) < 2:
        raise InvalidArgumentError("need at least two estimates for PCA")
    reference = np.atleast_2d(np.asarray(reference, dtype=float))
    if reference.shape[0] != theta.shape[1]:
        reference = reference.T
    w, V = principal_components(theta)
    rank = int(np.sum(w > rank_tol * max(w[0], 1e-300)))
    if D > rank:
        log.warning("only %d of %d requested components available", rank, D)
        D = rank
    comps = V[:, :D]
    C = np.array([[column_correlation(c, r) for r in reference.T] for c in comps.T])
    pairs = greedy_match(C) if D else {}
    abs_corr = np.array([abs(C[k, pairs[k]]) if k in pairs else 0.0 for k in range(D)])
    return PCAResult(comps, w[:D], abs_corr, [pairs.get(k) for k in range(D)])


def self_stability(snapshots, final=None):
    """Correlation of each snapshot's columns with the final graphs.

    Returns ``(times, corr)`` with ``corr`` of shape ``(len(snapshots), D)``.
    """
    if not snapshots:
        raise InvalidArgumentError("no graph snapshots")
    if final is None:
        final = snapshots[-1][1]
    times = np.array([t for t, _ in snapshots])
    corr = np.array([[column_correlation(Js[:, k], final[:, k]) for k in range(final.shape[1])]
                     for _, Js in snapshots])
    return times, corr
