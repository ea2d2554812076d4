"""Plain-text persistence for graphs, rasters, traces and synthetic bundles.

Floats are written with 17 significant digits so every file round-trips
exactly.
"""

import hashlib
import json
import os
from pathlib import Path

import numpy as np

from . import ising
from .errors import InvalidArgumentError
from .filtering import FitTrace
from .raster import BinaryRaster
from .synth import SyntheticDataset, WeightSchedule

FLOAT = "%.17g"


def _fmt(v):
    return FLOAT % v


def write_graphs(path, J):
    """Write a ``d x D`` graph matrix with a ``#N=<N>,D=<D>`` header."""
    J, n = ising.as_graph_matrix(J)
    with open(path, "w") as fh:
        fh.write(f"#N={n},D={J.shape[1]}\n")
        for row in J:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def read_graphs(path):
    with open(path) as fh:
        header = fh.readline().strip()
        if not header.startswith("#"):
            raise InvalidArgumentError(f"{path}: missing #N=..,D=.. header")
        meta = dict(kv.split("=") for kv in header[1:].split(","))
        J = np.loadtxt(fh, delimiter=",", ndmin=2)
    n, D = int(meta["N"]), int(meta["D"])
    if J.shape != (ising.n_features(n), D):
        raise InvalidArgumentError(f"{path}: shape {J.shape} disagrees with header")
    return J


def write_raster(path, raster):
    if not isinstance(raster, BinaryRaster):
        raster = BinaryRaster(raster)
    with open(path, "w") as fh:
        fh.write("#labels=" + ",".join(raster.labels) + "\n")
        for row in raster.data:
            fh.write(",".join("1" if v else "0" for v in row) + "\n")


def read_raster(path):
    labels = None
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#labels="):
                labels = line[len("#labels="):].split(",")
            elif not line.startswith("#"):
                rows.append([int(v) for v in line.split(",")])
    if not rows:
        raise InvalidArgumentError(f"{path}: empty raster")
    return BinaryRaster(np.array(rows), labels)


def trace_header(D):
    return (["t"] + [f"theta_{k}" for k in range(1, D + 1)]
            + [f"w_{k}{k}" for k in range(1, D + 1)] + ["loglik"])


def write_trace(path, trace):
    """One row per bin: ``t, theta_1..theta_D, w_11..w_DD, loglik``."""
    D = trace.theta.shape[1]
    with open(path, "w") as fh:
        fh.write(",".join(trace_header(D)) + "\n")
        for t, th, w, ll in zip(trace.t, trace.theta, trace.var, trace.loglik):
            fh.write(",".join([str(int(t))] + [_fmt(v) for v in th]
                              + [_fmt(v) for v in w] + [_fmt(ll)]) + "\n")


def read_trace(path):
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        X = np.loadtxt(fh, delimiter=",", ndmin=2)
    D = (len(header) - 2) // 2
    if header != trace_header(D):
        raise InvalidArgumentError(f"{path}: unexpected trace header")
    return FitTrace(X[:, 1:1 + D], X[:, 1 + D:1 + 2 * D], X[:, -1], X[:, 0].astype(int))


def read_spike_times(path):
    """Read ``unit,time_s`` rows (a header line is optional)."""
    events = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            unit, time = line.split(",")[:2]
            try:
                events.append((unit.strip(), float(time)))
            except ValueError:
                if events:
                    raise InvalidArgumentError(f"{path}: bad row {line!r}") from None
    return events


def write_spike_times(path, events):
    with open(path, "w") as fh:
        fh.write("unit,time_s\n")
        for unit, time in events:
            fh.write(f"{unit},{_fmt(time)}\n")


def save_bundle(directory, ds):
    """Write ``raster.csv``, ``J_true.csv``, ``theta_true.csv`` and ``meta.json``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_raster(directory / "raster.csv", ds.raster)
    write_graphs(directory / "J_true.csv", ds.J)
    with open(directory / "theta_true.csv", "w") as fh:
        D = ds.schedule.theta.shape[1]
        fh.write(",".join(f"theta_{k}" for k in range(1, D + 1)) + "\n")
        for row in ds.schedule.theta:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    meta = {"N": int(ds.raster.shape[1]), "D": int(ds.J.shape[1]),
            "T_ep": int(ds.schedule.epoch_len), "epochs": int(ds.schedule.epochs),
            "seed": int(ds.seed)}
    with open(directory / "meta.json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_bundle(directory):
    directory = Path(directory)
    with open(directory / "meta.json") as fh:
        meta = json.load(fh)
    theta = np.loadtxt(directory / "theta_true.csv", delimiter=",", skiprows=1, ndmin=2)
    return SyntheticDataset(read_raster(directory / "raster.csv").data,
                            read_graphs(directory / "J_true.csv"),
                            WeightSchedule(theta, meta["T_ep"]), meta["seed"])


def file_digest(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_json(path, obj):
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)
