"""Batch command line: ``mgising <subcommand> [flags]``.

Every subcommand writes its results plus a ``manifest.json`` describing the
run into the output directory (``--out``, defaulting to ``$MGISING_OUTPUT_DIR``
or ``./mgising-out``). ``mgising rerun <manifest>`` replays a recorded run.

Exit codes: 0 success, 1 rerun outputs differ, 2 usage error, 3 numerical
failure, 4 bad input.
"""

import argparse
import glob
import json
import logging
import os
import re
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, io, ising, selection, synth
from .errors import InvalidArgumentError, NumericError
from .filtering import FilterConfig
from .learning import LearnerConfig, match_columns, run_online
from .raster import bin_spike_times, select_top_units

log = logging.getLogger("mgising")

EXIT_MISMATCH, EXIT_USAGE, EXIT_NUMERIC, EXIT_INPUT = 1, 2, 3, 4
OUT_ENV = "MGISING_OUTPUT_DIR"


def _floats(text):
    return [float(v) for v in text.split(",")]


def _ints(text):
    return [int(v) for v in text.split(",")]


def _add_fit_flags(p):
    p.add_argument("--data", help="raster CSV or bundle directory (default: <out>/raster.csv)")
    p.add_argument("--lambda", dest="lam", type=float, default=1e4,
                   help="state-noise precision (default 10000)")
    p.add_argument("--epsilon", type=float, default=1e-2, help="learning rate (default 0.01)")
    p.add_argument("--mc-samples", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scale-columns", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--compensate-state", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--prior-mean", type=float, default=0.0)
    p.add_argument("--prior-var", type=float, default=1.0)
    p.add_argument("--snapshot-every", type=int, default=None,
                   help="bins between J snapshots (default: epoch length if known)")
    p.add_argument("--newton-tol", type=float, default=1e-8)
    p.add_argument("--newton-max-iter", type=int, default=100)


def build_parser():
    parser = argparse.ArgumentParser(prog="mgising", description=__doc__.split("\n")[0])
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic bundle")
    p.add_argument("--n", type=int, default=9)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--t-ep", type=int, default=1500)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--graphs", choices=["auto", "plus-tee", "random"], default="auto",
                   help="'auto' uses the +/T pair for n=9, d=2 and random graphs otherwise")
    p.add_argument("--baseline", type=float, default=0.5)
    p.add_argument("--amplitude", type=float, default=0.5)
    p.add_argument("--phases", type=_floats, default=None,
                   help="comma-separated phase offsets (default: evenly spaced over 2 pi)")

    p = sub.add_parser("fit", help="filter weights and learn graphs online")
    p.add_argument("--num-graphs", type=int, default=2)
    _add_fit_flags(p)

    p = sub.add_parser("select", help="AIC sweep over graph counts")
    p.add_argument("--candidates", type=_ints, default=[1, 2, 3, 4])
    p.add_argument("--window", choices=["auto", "last-epoch", "latter-half"], default="auto")
    p.add_argument("--epoch-len", type=int, default=None)
    _add_fit_flags(p)

    p = sub.add_parser("full", help="fit the full time-dependent Ising model")
    p.add_argument("--data")
    p.add_argument("--lambda", dest="lam", type=float, default=1e4)
    p.add_argument("--prior-mean", type=float, default=0.0)
    p.add_argument("--prior-var", type=float, default=1.0)
    p.add_argument("--window", choices=["auto", "last-epoch", "latter-half"], default="auto")
    p.add_argument("--epoch-len", type=int, default=None)

    p = sub.add_parser("pca", help="PCA of full-model estimates vs reference graphs")
    p.add_argument("--trace", required=True, help="trace CSV from 'full'")
    p.add_argument("--reference", required=True, help="graph CSV")
    p.add_argument("--components", type=int, default=None)

    p = sub.add_parser("eval", help="compare learned graphs with a reference")
    p.add_argument("--graphs", required=True, help="learned graph CSV")
    p.add_argument("--reference", default=None, help="reference graph CSV")
    p.add_argument("--snapshots", default=None, help="directory of J_t<step>.csv files")

    p = sub.add_parser("bin", help="bin spike times into a raster")
    p.add_argument("--spikes", required=True, help="CSV with unit,time_s rows")
    p.add_argument("--bin-width", type=float, default=0.01)
    p.add_argument("--t-start", type=float, default=None)
    p.add_argument("--t-end", type=float, default=None)
    p.add_argument("--top", type=int, default=12, help="keep this many most active units")

    p = sub.add_parser("rerun", help="replay the run recorded in a manifest")
    p.add_argument("manifest")
    return parser


def _out_dir(args):
    out = Path(args.out or os.environ.get(OUT_ENV) or "mgising-out")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_data(args, out):
    """Returns ``(raster_array, raster_path, meta)``."""
    path = Path(args.data) if args.data else out / "raster.csv"
    meta = {}
    if path.is_dir():
        path = path / "raster.csv"
    meta_path = path.parent / "meta.json"
    if meta_path.exists():
        with open(meta_path) as fh:
            meta = json.load(fh)
    if not path.exists():
        raise InvalidArgumentError(f"no raster at {path}")
    return io.read_raster(path).data, path, meta


def _configs(args, meta):
    # scalar priors broadcast to whatever graph count is fitted
    fcfg = FilterConfig(lam=args.lam, prior_mean=args.prior_mean, prior_cov=args.prior_var,
                        newton_tol=args.newton_tol, newton_max_iter=args.newton_max_iter)
    snap = args.snapshot_every or meta.get("T_ep")
    lcfg = LearnerConfig(epsilon=args.epsilon, mc_samples=args.mc_samples, seed=args.seed,
                         scale_columns=args.scale_columns,
                         compensate_state=args.compensate_state, snapshot_every=snap)
    return fcfg, lcfg


def _write_fit(directory, res):
    directory.mkdir(parents=True, exist_ok=True)
    outputs = [directory / "trace.csv", directory / "J_init.csv", directory / "J_final.csv"]
    io.write_trace(outputs[0], res.trace)
    io.write_graphs(outputs[1], res.initial_graphs)
    io.write_graphs(outputs[2], res.final_graphs)
    for t, Js in res.graph_snapshots:
        outputs.append(directory / f"J_t{t}.csv")
        io.write_graphs(outputs[-1], Js)
    return outputs


def cmd_simulate(args, out):
    kind = args.graphs
    if kind == "auto":
        kind = "plus-tee" if (args.n, args.d) == (9, 2) else "random"
    if kind == "plus-tee":
        if (args.n, args.d) != (9, 2):
            raise InvalidArgumentError("the +/T graphs need --n 9 --d 2")
        J = synth.plus_tee_graphs()
    else:
        J = synth.random_graphs(args.n, args.d, [args.seed, 1])
    phases = args.phases or list(2 * np.pi * np.arange(args.d) / args.d)
    if len(phases) != args.d:
        raise InvalidArgumentError("need one phase per graph")
    schedule = synth.sinusoid_weights(args.t_ep, args.epochs, args.baseline, args.amplitude, phases)
    ds = synth.generate_dataset(J, schedule, args.seed)
    io.save_bundle(out, ds)
    print(f"wrote {len(ds.raster)} x {args.n} raster and ground truth to {out}")
    return [out / f for f in ("raster.csv", "J_true.csv", "theta_true.csv", "meta.json")], []


def cmd_fit(args, out):
    data, path, meta = _load_data(args, out)
    fcfg, lcfg = _configs(args, meta)
    res = run_online(data, args.num_graphs, fcfg, lcfg)
    outputs = _write_fit(out / f"fit_D{args.num_graphs}", res)
    ll = selection.window_loglik(res.trace, "auto", meta.get("T_ep"))
    print(f"D={args.num_graphs}: window log-likelihood {ll:.3f}, "
          f"AIC {selection.aic(ll, selection.n_free_params(data.shape[1], args.num_graphs)):.3f}")
    return outputs, [path]


def cmd_select(args, out):
    data, path, meta = _load_data(args, out)
    fcfg, lcfg = _configs(args, meta)
    report = selection.sweep(data, args.candidates, fcfg, lcfg, args.window,
                             args.epoch_len or meta.get("T_ep"))
    outputs = []
    for D, res in report.results.items():
        outputs += _write_fit(out / f"select_D{D}", res)
    outputs.append(out / "selection.csv")
    outputs[-1].write_text(report.to_csv())
    print(report.table())
    print(f"chosen D = {report.chosen}")
    return outputs, [path]


def cmd_full(args, out):
    data, path, meta = _load_data(args, out)
    d = ising.n_features(data.shape[1])
    fcfg = FilterConfig(lam=args.lam, prior_mean=args.prior_mean, prior_cov=args.prior_var)
    trace = selection.fit_full_model(data, fcfg)
    outputs = [out / "full_trace.csv"]
    io.write_trace(outputs[0], trace)
    ll = selection.window_loglik(trace, args.window, args.epoch_len or meta.get("T_ep"))
    print(f"full model: window log-likelihood {ll:.3f}, AIC {selection.aic(ll, d):.3f}")
    return outputs, [path]


def cmd_pca(args, out):
    trace = io.read_trace(args.trace)
    ref = io.read_graphs(args.reference)
    res = selection.pca_baseline(trace, args.components or ref.shape[1], ref)
    outputs = [out / "pca.csv"]
    with open(outputs[0], "w") as fh:
        fh.write("component,explained_variance,reference,abs_corr\n")
        for k, (ev, m, c) in enumerate(zip(res.explained_variance, res.matched, res.abs_corr)):
            ref_col = "" if m is None else m + 1
            fh.write(f"{k + 1},{io._fmt(ev)},{ref_col},{io._fmt(c)}\n")
            print(f"PC{k + 1}: |corr| = {c:.3f} (reference column {ref_col})")
    return outputs, [Path(args.trace), Path(args.reference)]


def _snapshot_files(directory):
    files = glob.glob(os.path.join(directory, "J_t*.csv"))
    step = lambda f: int(re.search(r"J_t(\d+)\.csv$", f).group(1))
    return sorted((f for f in files if re.search(r"J_t\d+\.csv$", f)), key=step), step


def cmd_eval(args, out):
    J = io.read_graphs(args.graphs)
    inputs, outputs = [Path(args.graphs)], []
    if args.reference:
        ref = io.read_graphs(args.reference)
        inputs.append(Path(args.reference))
        order, corr = match_columns(J, ref)
        outputs.append(out / "eval.csv")
        with open(outputs[-1], "w") as fh:
            fh.write("reference,fitted,corr\n")
            for k, (o, c) in enumerate(zip(order, corr)):
                fh.write(f"{k + 1},{o + 1},{io._fmt(c)}\n")
                print(f"reference {k + 1} <- fitted {o + 1}: corr {c:.3f}")
    if args.snapshots:
        files, step = _snapshot_files(args.snapshots)
        snaps = [(step(f), io.read_graphs(f)) for f in files]
        times, corr = selection.self_stability(snaps, J)
        outputs.append(out / "stability.csv")
        with open(outputs[-1], "w") as fh:
            fh.write("t," + ",".join(f"corr_{k + 1}" for k in range(corr.shape[1])) + "\n")
            for t, row in zip(times, corr):
                fh.write(f"{t}," + ",".join(io._fmt(v) for v in row) + "\n")
        print(f"self-stability over {len(times)} snapshots written")
    return outputs, inputs


def cmd_bin(args, out):
    events = io.read_spike_times(args.spikes)
    if not events:
        raise InvalidArgumentError(f"{args.spikes}: no events")
    times = [t for _, t in events]
    t_start = min(times) if args.t_start is None else args.t_start
    t_end = max(times) + args.bin_width if args.t_end is None else args.t_end
    raster, dropped = bin_spike_times(events, args.bin_width, t_start, t_end)
    if args.top and args.top < raster.shape[1]:
        raster = select_top_units(raster, args.top)
    outputs = [out / "raster.csv"]
    io.write_raster(outputs[0], raster)
    print(f"binned {len(events) - dropped} events into {raster.shape[0]} x {raster.shape[1]} "
          f"raster ({dropped} dropped)")
    return outputs, [Path(args.spikes)]


COMMANDS = {"simulate": cmd_simulate, "fit": cmd_fit, "select": cmd_select, "full": cmd_full,
            "pca": cmd_pca, "eval": cmd_eval, "bin": cmd_bin}


def _manifest(argv, args, outputs, inputs, started):
    return {
        "version": __version__,
        "command": args.command,
        "argv": list(argv),
        "config": {k: v for k, v in vars(args).items() if k not in ("out", "verbose")},
        "inputs": {str(p): io.file_digest(p) for p in inputs},
        "outputs": {str(p): io.file_digest(p) for p in outputs if Path(p).is_file()},
        "output_dir": str(args.out),
        "wall_clock_s": round(time.time() - started, 3),
    }


def _rerun(args):
    """Replay a manifest; without ``--out`` also check the outputs are unchanged."""
    with open(args.manifest) as fh:
        manifest = json.load(fh)
    for path, digest in manifest["inputs"].items():
        if not Path(path).exists() or io.file_digest(path) != digest:
            raise InvalidArgumentError(f"input {path} is missing or has changed")
    argv = list(manifest["argv"])
    if args.out:
        return main(["--out", args.out] + _strip_out(argv))
    code = main(argv)
    if code:
        return code
    changed = [p for p, d in manifest["outputs"].items()
               if not Path(p).exists() or io.file_digest(p) != d]
    for p in changed:
        print(f"output differs from the manifest: {p}", file=sys.stderr)
    if changed:
        return EXIT_MISMATCH
    print(f"reproduced {len(manifest['outputs'])} outputs byte-identically")
    return 0


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "rerun":
            return _rerun(args)
        out = _out_dir(args)
        args.out = str(out)
        started = time.time()
        outputs, inputs = COMMANDS[args.command](args, out)
        # record the run with its output directory fixed, so a replay without
        # --out lands in the same place
        replay = ["--out", str(out)] + [a for a in _strip_out(argv)]
        manifest = _manifest(replay, args, outputs, inputs, started)
        io.write_json(out / f"manifest_{args.command}.json", manifest)
    except NumericError as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    except (InvalidArgumentError, OSError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INPUT
    return 0


def _strip_out(argv):
    """Drop a leading ``--out X`` (or ``--out=X``) from ``argv``."""
    out, skip = [], False
    for a in argv:
        if skip:
            skip = False
            continue
        if a == "--out":
            skip = True
            continue
        if a.startswith("--out="):
            continue
        out.append(a)
    return out


if __name__ == "__main__":
    sys.exit(main())
