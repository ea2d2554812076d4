"""Binary rasters and their construction from spike times."""

import logging
from dataclasses import dataclass

import numpy as np

from .errors import EmptyRasterError, InvalidArgumentError

log = logging.getLogger(__name__)


@dataclass
class BinaryRaster:
    """``T x N`` array of 0/1 patterns, one row per time bin."""

    data: np.ndarray
    labels: list = None

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] < 1:
            raise InvalidArgumentError("raster must be a non-empty 2-d array")
        if not np.all((data == 0) | (data == 1)):
            raise InvalidArgumentError("raster entries must be 0 or 1")
        self.data = data.astype(np.int8)
        if self.labels is None:
            self.labels = [str(i + 1) for i in range(data.shape[1])]
        self.labels = [str(s) for s in self.labels]
        if len(self.labels) != data.shape[1]:
            raise InvalidArgumentError("one label per column required")

    @property
    def shape(self):
        return self.data.shape


def _bin_index(q):
    # snap values within round-off of a bin edge onto the edge (half-open bins)
    r = np.round(q)
    q = np.where(np.abs(q - r) < 1e-9 * np.maximum(1.0, np.abs(q)), r, q)
    return np.floor(q).astype(np.int64)


def _unit_key(u):
    try:
        return (0, float(u), str(u))
    except ValueError:
        return (1, 0.0, str(u))


def bin_spike_times(events, bin_width, t_start, t_end):
    """Bin ``(unit, time_s)`` events into a saturating binary raster.

    Bin ``k`` covers ``[t_start + k w, t_start + (k+1) w)``; several spikes in a
    bin still give a single 1. Events outside ``[t_start, t_end)`` are dropped.
    Columns follow the sorted unit ids. Returns ``(raster, n_dropped)``.
    """
    if not bin_width > 0:
        raise InvalidArgumentError("bin width must be positive")
    if not t_start < t_end:
        raise InvalidArgumentError("need t_start < t_end")
    units = np.array([str(u) for u, _ in events], dtype=object)
    times = np.array([float(t) for _, t in events], dtype=float)
    inside = (times >= t_start) & (times < t_end)
    dropped = int(np.sum(~inside))
    if dropped:
        log.info("dropped %d events outside [%g, %g)", dropped, t_start, t_end)
    if not inside.any():
        raise EmptyRasterError("no events inside the requested range")
    labels = sorted(set(units.tolist()), key=_unit_key)
    column = {u: k for k, u in enumerate(labels)}
    span = (t_end - t_start) / bin_width
    T = int(round(span)) if abs(span - round(span)) < 1e-9 * max(1.0, span) else int(np.ceil(span))
    rows = _bin_index((times[inside] - t_start) / bin_width)
    cols = np.array([column[u] for u in units[inside]])
    data = np.zeros((T, len(labels)), dtype=np.int8)
    data[np.minimum(rows, T - 1), cols] = 1
    return BinaryRaster(data, labels), dropped


def select_top_units(raster, k):
    """Keep the ``k`` most active columns, in their original order.

    Ties in activity go to the column that comes first.
    """
    if k <= 0:
        raise InvalidArgumentError("k must be positive")
    if k > raster.shape[1]:
        raise InvalidArgumentError(f"k={k} exceeds {raster.shape[1]} units")
    rates = raster.data.mean(axis=0)
    order = sorted(range(len(rates)), key=lambda i: (-rates[i], i))[:k]
    keep = sorted(order)
    return BinaryRaster(raster.data[:, keep], [raster.labels[i] for i in keep])
