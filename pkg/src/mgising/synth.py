"""Synthetic pattern sequences drawn from known graphs and weight schedules."""

from dataclasses import dataclass

import numpy as np

from . import ising
from .errors import InvalidArgumentError

# 3x3 pixel grid, row-major
PLUS = (1, 3, 4, 5, 7)
TEE = (0, 1, 2, 4, 7)


@dataclass
class WeightSchedule:
    """Generative weights, one row per time bin (``T x D``)."""

    theta: np.ndarray
    epoch_len: int

    def __post_init__(self):
        self.theta = np.atleast_2d(np.asarray(self.theta, dtype=float))
        if not np.all(np.isfinite(self.theta)):
            raise InvalidArgumentError("schedule has non-finite weights")
        if len(self.theta) % self.epoch_len:
            raise InvalidArgumentError("schedule length must be a whole number of epochs")

    @property
    def epochs(self):
        return len(self.theta) // self.epoch_len


@dataclass
class SyntheticDataset:
    raster: np.ndarray
    J: np.ndarray
    schedule: WeightSchedule
    seed: int


def sinusoid_weights(epoch_len, epochs, baseline=0.5, amplitude=0.5, phases=(0.0, np.pi)):
    """``theta^k_t = baseline + amplitude * sin(2 pi t / epoch_len + phase_k)``, t = 1..T."""
    if epoch_len < 2 or epochs < 1:
        raise InvalidArgumentError("need epoch_len >= 2 and epochs >= 1")
    t = np.arange(1, epoch_len * epochs + 1)
    phases = np.atleast_1d(np.asarray(phases, dtype=float))
    theta = baseline + amplitude * np.sin(2 * np.pi * t[:, None] / epoch_len + phases)
    return WeightSchedule(theta, epoch_len)


def piecewise_constant_weights(levels, segment_len, epochs=1):
    """Hold each row of ``levels`` for ``segment_len`` bins; one epoch is all rows."""
    levels = np.atleast_2d(np.asarray(levels, dtype=float))
    epoch = np.repeat(levels, segment_len, axis=0)
    return WeightSchedule(np.tile(epoch, (epochs, 1)), len(epoch))


def shape_graph(pixels, n=9, side=3, h_on=1.0, h_off=-1.5, stroke=1.0, other=-0.5):
    """Graph whose most probable pattern lights exactly ``pixels``.

    Pixels of the shape get bias ``h_on``, the rest ``h_off``; pairs of lit
    pixels that are grid neighbours are coupled by ``stroke`` and all other
    pairs by ``other``.
    """
    on = np.zeros(n, dtype=bool)
    on[list(pixels)] = True
    h = np.where(on, h_on, h_off)
    rows, cols = ising.pair_indices(n)
    r, c = np.divmod(np.arange(n), side)
    adjacent = np.abs(r[rows] - r[cols]) + np.abs(c[rows] - c[cols]) == 1
    couplings = np.where(on[rows] & on[cols] & adjacent, stroke, other)
    return np.concatenate([h, couplings])


def plus_tee_graphs():
    """The two 9-node graphs whose modes are a '+' and a 'T' on a 3x3 grid."""
    return np.column_stack([shape_graph(PLUS), shape_graph(TEE)])


def random_graphs(n, D, seed):
    """``D`` graphs with i.i.d. standard normal entries."""
    rng = np.random.default_rng(seed)
    return rng.standard_normal((ising.n_features(n), D))


def generate_dataset(J, schedule, seed, chunk=2048):
    """One exact sample per bin from the multi-graph model at the scheduled weights.

    The uniforms come from a single PCG64 stream seeded with ``seed``, so the
    raster does not depend on ``chunk``.
    """
    J, n = ising.as_graph_matrix(J)
    theta = schedule.theta
    if theta.shape[1] != J.shape[1]:
        raise InvalidArgumentError("schedule and graphs disagree on the graph count")
    T = len(theta)
    u = np.random.default_rng(seed).random(T)
    FJ = ising.projected_features(J)
    codes = np.empty(T, dtype=np.int64)
    for start in range(0, T, chunk):
        stop = min(start + chunk, T)
        E = FJ @ theta[start:stop].T
        cdf = np.cumsum(np.exp(E - ising.logsumexp(E, axis=0)), axis=0)
        cdf /= cdf[-1]
        codes[start:stop] = np.minimum((cdf <= u[start:stop]).sum(axis=0), len(cdf) - 1)
    shifts = np.arange(n - 1, -1, -1)
    raster = ((codes[:, None] >> shifts) & 1).astype(np.int8)
    return SyntheticDataset(raster, J, schedule, seed)
