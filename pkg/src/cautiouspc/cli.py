"""Command-line front end.

Exit codes: 0 success, 1 computational failure, 2 usage or validation error.
"""

from __future__ import annotations

import argparse
import json
import os
import platform
import sys
from collections import OrderedDict
from typing import Optional, Sequence

import numpy as np
import scipy

from . import __version__
from .citest import CLASSICAL, EQUIVALENCE, CiTestConfig
from .delta import DeltaGrid, StabilityConfig, select_delta
from .graph import GraphError, Kind, Mark, MixedGraph, dag_to_cpdag, read_graph, write_graph
from .ida import covariance_of, ida_multiset, int_mse, mean_width, oracle_effect
from .io import read_data_csv, read_tiers, resolve_columns, write_data_csv, write_rows, write_sepsets
from .metrics import evaluate_skeleton, shd
from .pc import CONSERVATIVE, STANDARD, PcOptions
from .pipeline import learn
from .sim import SimConfig, simulate
from . import experiments as ex


class UsageError(Exception):
    """Bad arguments, missing inputs or invalid configuration (exit 2)."""


def _version_string() -> str:
    return (f"cautiouspc {__version__} (python {platform.python_version()}, "
            f"numpy {np.__version__}, scipy {scipy.__version__})")


def _write_manifest(path: str, command: str, args: argparse.Namespace) -> None:
    cfg = OrderedDict(command=command, version=__version__)
    for k, v in sorted(vars(args).items()):
        if k not in ("func", "config"):
            cfg[k] = v
    with open(path, "w") as fh:
        json.dump(cfg, fh, indent=2, sort_keys=False)
        fh.write("\n")


def _load_data(path: str):
    if not os.path.exists(path):
        raise UsageError(f"data file not found: {path}")
    try:
        return read_data_csv(path)
    except ValueError as e:
        raise UsageError(f"--data: {e}") from None


def _load_graph(path: str, flag: str) -> MixedGraph:
    if not os.path.exists(path):
        raise UsageError(f"{flag}: graph file not found: {path}")
    try:
        return read_graph(path)
    except (GraphError, ValueError) as e:
        raise UsageError(f"{flag}: {e}") from None


def _test_config(args) -> CiTestConfig:
    try:
        if args.test == CLASSICAL:
            return CiTestConfig(CLASSICAL, args.alpha)
        if (args.delta is None) == (args.delta_c is None):
            raise UsageError("--delta / --delta-c: give exactly one for the equivalence test")
        return CiTestConfig(EQUIVALENCE, args.alpha, delta=args.delta, delta_scale=args.delta_c)
    except ValueError as e:
        raise UsageError(f"--alpha/--delta: {e}") from None


def _vertex(spec: str, names) -> int:
    try:
        return resolve_columns([spec], names)[0]
    except (ValueError, IndexError):
        raise UsageError(f"unknown vertex {spec!r}") from None


# Subcommands


def cmd_learn(args) -> int:
    names, data = _load_data(args.data)
    test = _test_config(args)
    try:
        baseline = resolve_columns(args.baseline.split(","), names) if args.baseline else []
        tiers = read_tiers(args.tiers, names) if args.tiers else []
    except (ValueError, OSError) as e:
        raise UsageError(f"--baseline/--tiers: {e}") from None
    if args.max_cond_size is not None and args.max_cond_size < 0:
        raise UsageError("--max-cond-size must be >= 0")
    res = learn(data, test, args.algo, names, baseline, tiers, args.max_cond_size, args.collider_mode)
    prefix = args.out_prefix
    write_graph(res.graph, prefix + ".graph.txt")
    write_sepsets(prefix + ".sepsets.csv", res.sepsets)
    res.report.write_csv(prefix + ".report.csv", res.targets)
    _write_manifest(prefix + ".manifest.json", "learn", args)
    print(f"{res.graph.n_edges} edges written to {prefix}.graph.txt")
    return 0


def cmd_select_delta(args) -> int:
    names, data = _load_data(args.data)
    n = data.shape[0]
    try:
        if args.grid:
            grid = DeltaGrid(tuple(float(v) for v in args.grid.split(",")))
        else:
            grid = DeltaGrid.scaled(args.c_lo, args.c_hi, args.k, n)
        cfg = StabilityConfig(args.reps, args.fraction, args.threshold, args.seed, not args.no_rescale)
        test = CiTestConfig(EQUIVALENCE, args.alpha, delta=grid.values[0])
    except ValueError as e:
        raise UsageError(f"delta grid / stability settings: {e}") from None
    opts = PcOptions(test=test, max_cond_size=args.max_cond_size, record=False)
    sel = select_delta(data, grid, cfg, opts)
    write_rows(args.trace, ("delta_lo", "delta_hi", "frequency"),
               [(repr(lo), repr(hi), repr(f)) for (lo, hi), f in sel.trace])
    _write_manifest(args.trace + ".manifest.json", "select-delta", args)
    flag = " no-drop" if sel.no_drop else ""
    print(f"selected_delta={sel.selected!r}{flag}")
    return 0


def cmd_simulate(args) -> int:
    try:
        cfg = SimConfig(args.p, args.degree, (args.weight_lo, args.weight_hi), args.n, args.seed)
    except ValueError as e:
        raise UsageError(f"simulation settings: {e}") from None
    inst = simulate(cfg)
    names = [f"X{k + 1}" for k in range(cfg.p)]
    inst.dag.names = names
    write_data_csv(args.out_data, names, inst.data)
    write_graph(inst.dag, args.out_graph)
    if args.out_weights:
        write_rows(args.out_weights, names, [[repr(float(v)) for v in row] for row in inst.weights])
    _write_manifest(args.out_data + ".manifest.json", "simulate", args)
    return 0


def cmd_eval(args) -> int:
    est = _load_graph(args.estimate, "--estimate")
    truth = _load_graph(args.truth, "--truth")
    if est.p != truth.p:
        raise UsageError(f"--estimate/--truth: vertex counts differ ({est.p} vs {truth.p})")
    rep = evaluate_skeleton(est, truth)
    row = rep.as_row()
    if not ((est.marks == Mark.CIRCLE).any() or (truth.marks == Mark.CIRCLE).any()):
        t = dag_to_cpdag(truth) if truth.kind == Kind.DAG else truth
        row["cpdag_shd"] = shd(est, t)
    header = list(row)
    values = [repr(v) if isinstance(v, float) else str(int(v) if isinstance(v, bool) else v) for v in row.values()]
    if args.out:
        write_rows(args.out, header, [values])
    else:
        print(",".join(header))
        print(",".join(values))
    return 0


def _effect_rows(ms):
    return [(repr(v), ";".join(map(str, ps))) for v, ps in zip(ms.estimates, ms.parent_sets)]


def cmd_effect(args) -> int:
    if args.batch:
        return _effect_batch(args)
    if not (args.graph and args.data and args.x and args.y):
        raise UsageError("effect needs --graph, --data, --x and --y (or --batch)")
    names, data = _load_data(args.data)
    g = _load_graph(args.graph, "--graph")
    if g.p != len(names):
        raise UsageError("--graph/--data: vertex count differs from column count")
    x, y = _vertex(args.x, names), _vertex(args.y, names)
    ms = ida_multiset(g, data, x, y)
    print("estimate,parents")
    for v, ps in _effect_rows(ms):
        print(f"{v},{ps}")
    print(f"# min={ms.min!r} max={ms.max!r} n={len(ms)}")
    for ps in ms.skipped:
        print(f"# skipped singular parent set {';'.join(map(str, ps))}")
    return 0


def _effect_batch(args) -> int:
    if not os.path.exists(args.batch):
        raise UsageError(f"--batch: manifest not found: {args.batch}")
    with open(args.batch) as fh:
        try:
            trials = json.load(fh)
        except json.JSONDecodeError as e:
            raise UsageError(f"--batch: {e}") from None
    base = os.path.dirname(os.path.abspath(args.batch))
    groups: "OrderedDict[tuple, tuple[list, list]]" = OrderedDict()
    for k, t in enumerate(trials):
        missing = {"method", "n", "graph", "data", "truth", "x", "y"} - set(t)
        if missing:
            raise UsageError(f"--batch: trial {k} lacks {sorted(missing)}")
        names, data = _load_data(os.path.join(base, t["data"]))
        g = _load_graph(os.path.join(base, t["graph"]), "graph")
        truth = _load_graph(os.path.join(base, t["truth"]), "truth")
        x, y = _vertex(str(t["x"]), names), _vertex(str(t["y"]), names)
        cov = covariance_of(data)
        ms = ida_multiset(g, None, x, y, cov=cov)
        o = oracle_effect(truth, None, x, y, cov=cov)
        bucket = groups.setdefault((t["method"], t["n"]), ([], []))
        if len(ms):
            bucket[0].append(ms)
            bucket[1].append(o)
    rows = [(m, n, repr(int_mse(a, b)), repr(mean_width(a))) for (m, n), (a, b) in groups.items()]
    if args.out:
        write_rows(args.out, ex.IDA_SUMMARY_HEADER, rows)
    else:
        print(",".join(ex.IDA_SUMMARY_HEADER))
        for r in rows:
            print(",".join(map(str, r)))
    return 0


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def cmd_repro(args) -> int:
    threads = args.threads
    if args.experiment == "fig2-sweep":
        rows, summary = ex.fig2_sweep(trials=args.trials or 50, ns=args.n or ex.SWEEP_NS, seed=args.seed,
                                      threads=threads)
        header, sheader = ex.SWEEP_HEADER, ex.SWEEP_SUMMARY_HEADER
    elif args.experiment == "table1-ida":
        rows, summary = ex.table1_ida(trials=args.trials or 200, ns=args.n or (500, 5000), c=args.delta_c or 1.68,
                                      pc_alpha=args.alpha or 0.20, seed=args.seed, threads=threads)
        header, sheader = ex.IDA_HEADER, ex.IDA_SUMMARY_HEADER
    else:
        rows, summary = ex.sec6_delta(sims=args.trials or 50, ns=args.n or (500, 5000), seed=args.seed,
                                      threads=threads)
        header, sheader = ex.DELTA_HEADER, ex.DELTA_SUMMARY_HEADER
    fmt = lambda r: [repr(v) if isinstance(v, float) else v for v in r]  # noqa: E731
    write_rows(args.out, sheader, [fmt(r) for r in summary])
    if args.trials_out:
        write_rows(args.trials_out, header, [fmt(r) for r in rows])
    _write_manifest(args.out + ".manifest.json", "repro", args)
    print(f"summary written to {args.out}")
    return 0


# Parser


def _add_test_flags(p) -> None:
    p.add_argument("--test", choices=(EQUIVALENCE, CLASSICAL), default=EQUIVALENCE)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--delta", type=float, help="absolute equivalence tolerance")
    p.add_argument("--delta-c", type=float, help="tolerance constant C, delta = C / sqrt(n)")


def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    parser = argparse.ArgumentParser(prog="cautiouspc", description="Cautious causal structure learning.")
    parser.add_argument("--version", action="version", version=_version_string())
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="file of key = value lines; flags given explicitly take precedence")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    sub = parser.add_subparsers(dest="command", required=True)
    subs = {}

    p = sub.add_parser("learn", parents=[common], help="learn a CPDAG or PAG from data")
    p.add_argument("--data", required=True)
    p.add_argument("--algo", choices=("pc", "fci"), default="pc")
    _add_test_flags(p)
    p.add_argument("--max-cond-size", type=int)
    p.add_argument("--collider-mode", choices=(STANDARD, CONSERVATIVE), default=STANDARD)
    p.add_argument("--tiers", help="tier file: one comma-separated group per line, earliest first")
    p.add_argument("--baseline", help="comma-separated baseline columns, regressed out and forced as parents")
    p.add_argument("--out-prefix", default="learn")
    p.set_defaults(func=cmd_learn)
    subs["learn"] = p

    p = sub.add_parser("select-delta", parents=[common], help="choose the tolerance by subsampled stability")
    p.add_argument("--data", required=True)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--grid", help="explicit comma-separated increasing tolerances")
    p.add_argument("--c-lo", type=float, default=1.5)
    p.add_argument("--c-hi", type=float, default=2.5)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--reps", type=int, default=50)
    p.add_argument("--fraction", type=float, default=0.9)
    p.add_argument("--threshold", type=float, default=0.9)
    p.add_argument("--no-rescale", action="store_true", help="apply each tolerance unchanged on subsamples")
    p.add_argument("--max-cond-size", type=int)
    p.add_argument("--trace", default="delta_trace.csv")
    p.set_defaults(func=cmd_select_delta)
    subs["select-delta"] = p

    p = sub.add_parser("simulate", parents=[common], help="simulate a random DAG and linear-Gaussian data")
    p.add_argument("--p", type=int, default=10)
    p.add_argument("--degree", type=float, default=7.0)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--weight-lo", type=float, default=0.5)
    p.add_argument("--weight-hi", type=float, default=1.0)
    p.add_argument("--out-data", default="data.csv")
    p.add_argument("--out-graph", default="truth.graph.txt")
    p.add_argument("--out-weights")
    p.set_defaults(func=cmd_simulate)
    subs["simulate"] = p

    p = sub.add_parser("eval", parents=[common], help="compare an estimated graph with the truth")
    p.add_argument("--estimate", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)
    subs["eval"] = p

    p = sub.add_parser("effect", parents=[common], help="IDA effect multiset of x on y")
    p.add_argument("--graph")
    p.add_argument("--data")
    p.add_argument("--x")
    p.add_argument("--y")
    p.add_argument("--batch", help="JSON trial manifest; emits method, n, int_mse, width")
    p.add_argument("--out")
    p.set_defaults(func=cmd_effect)
    subs["effect"] = p

    p = sub.add_parser("repro", parents=[common], help="run a simulation protocol end to end")
    p.add_argument("experiment", choices=("fig2-sweep", "table1-ida", "sec6-delta"))
    p.add_argument("--trials", type=int)
    p.add_argument("--n", type=_int_list, help="comma-separated sample sizes")
    p.add_argument("--delta-c", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--out", default="repro_summary.csv")
    p.add_argument("--trials-out")
    p.set_defaults(func=cmd_repro)
    subs["repro"] = p
    return parser, subs


def _read_config(path: str) -> dict:
    if not os.path.exists(path):
        raise UsageError(f"--config: file not found: {path}")
    out = {}
    with open(path) as fh:
        for k, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"--config: line {k} is not 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            out[key.replace("-", "_")] = value
    return out


def _apply_config(sub: argparse.ArgumentParser, cfg: dict) -> None:
    actions = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, value in cfg.items():
        action = actions.get(key)
        if action is None or key in ("help", "config"):
            raise UsageError(f"--config: unknown key {key!r}")
        if isinstance(action, argparse._StoreTrueAction):
            defaults[key] = value.lower() in ("1", "true", "yes", "on")
        elif action.type is not None:
            try:
                defaults[key] = action.type(value)
            except (ValueError, argparse.ArgumentTypeError) as e:
                raise UsageError(f"--config: {key}: {e}") from None
        else:
            defaults[key] = value
        if action.choices is not None and defaults[key] not in action.choices:
            raise UsageError(f"--config: {key}: {defaults[key]!r} not in {list(action.choices)}")
    sub.set_defaults(**defaults)
    for dest in defaults:
        if actions[dest].required:
            actions[dest].required = False


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    parser, subs = build_parser()
    try:
        known, _ = pre.parse_known_args(argv)
        if known.config:
            command = next((a for a in argv if a in subs), None)
            if command is None:
                raise UsageError("--config needs a subcommand")
            _apply_config(subs[command], _read_config(known.config))
        args = parser.parse_args(argv)
        if getattr(args, "threads", 1) < 1:
            raise UsageError("--threads must be >= 1")
        return args.func(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except SystemExit as e:
        return int(e.code) if isinstance(e.code, int) else 2
    except (GraphError, np.linalg.LinAlgError, ArithmeticError, ValueError, RuntimeError) as e:
        print(f"error: computation failed: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
