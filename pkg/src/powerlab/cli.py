"""Command-line entry point.

Data goes to standard output or the requested files; logs go to standard
error. Exit status: 0 on success, 2 on invalid input, 3 on numerical or
sampling failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from powerlab import bounds, detection, io, spectral
from powerlab.config import load_config
from powerlab.graph import delta_profile
from powerlab.models import ModelParams, Perturbation
from powerlab.powering import power_graph

log = logging.getLogger("powerlab")

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 2, 3
MODEL_NAMES = {"er": "ER", "sbm": "SBM", "rr": "RR", "rsbm": "RSBM", "rr_c": "RR_c", "rsbm_c": "RSBM_c"}


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj, default=bounds._jsonable) + "\n")


def _read(args):
    labels = args.labels
    if labels is None:
        guess = io.default_labels_path(args.inp)
        labels = guess if guess.exists() else None
    return io.read_graph(args.inp, labels)


def cmd_gen(args) -> None:
    params = ModelParams(MODEL_NAMES[args.model], args.n, a=args.a, b=args.b, d=args.d, c=args.c, seed=args.seed)
    params.validate()
    g = params.generate()
    comment = f"model={params.model} n={params.n} a={params.a} b={params.b} d={params.d} c={params.c} seed={params.seed}"
    labels = None
    if g.labels is not None:
        labels = args.labels or io.default_labels_path(args.out)
    io.write_graph(g, args.out, labels, comment)
    log.info("wrote %d vertices, %d edges to %s", g.n, g.num_edges, args.out)


def cmd_power(args) -> None:
    g = _read(args)
    pg = power_graph(g, args.r)
    io.write_graph(pg.graph, args.out, comment=pg.header())


def cmd_spectrum(args) -> None:
    g = _read(args)
    res = spectral.top_eigs_sym(g.adjacency_matrix(), k=args.k, tol=args.tol, seed=args.seed)
    if args.vectors:
        res.write_vectors(args.vectors)
    _emit(res.to_dict())


def cmd_nb(args) -> None:
    g = _read(args)
    _emit(spectral.nb_top_two(g, seed=args.seed).to_dict())


def cmd_bound(args) -> None:
    name = args.name
    if name == "tdc":
        _emit(bounds.tdc_report(args.d, args.c, args.depth, args.r).to_dict())
        return
    if name == "girth_poly":
        _emit({"bound_name": name, "inputs": {"d": args.d, "r": args.r, "x": args.x},
               "value": bounds.girth_poly_bound(args.d, args.r, args.x),
               "witness": {"envelope": bounds.girth_poly_envelope(args.d, args.r)}})
        return
    if name == "even_partition":
        lhs, rhs = bounds.even_partition_bound(args.xs, args.two_n)
        _emit({"bound_name": name, "inputs": {"xs": args.xs, "two_n": args.two_n},
               "value": str(lhs), "witness": {"rhs": str(rhs), "holds": lhs >= rhs}})
        return
    if args.inp is None:
        raise ValueError(f"bound {name!r} needs --in")
    g = _read(args)
    if name == "alon_boppana":
        rep = bounds.alon_boppana_bound(g, args.r)
    elif name == "walk":
        rep = bounds.lambda2_walk_lower_bound(g, args.r, args.k)
    elif name == "tree_like":
        prof = delta_profile(g, args.r)
        val = bounds.tree_like_lower_bound(prof, args.r, args.k or 2)
        rep = bounds.BoundReport(name, {"r": args.r, "k": args.k or 2}, val, prof.to_dict())
    elif name == "perturbation":
        if not args.perturbation:
            raise ValueError("bound 'perturbation' needs --perturbation")
        h = Perturbation.from_text(Path(args.perturbation).read_text())
        rep = bounds.perturbation_power_bound(g, h, args.r)
    else:
        raise ValueError(f"unknown bound {name!r}")
    _emit(rep.to_dict())


def cmd_oracle(args) -> None:
    g = _read(args)
    if args.vertex is None:
        _emit(bounds.closed_walk_counts(g, args.r, args.k_max, include_loops=not args.no_loops).to_dict())
        return
    res = bounds.tree_like_walk_oracle(g, args.vertex, args.r, args.k_max)
    _emit({"vertex": args.vertex, "r": args.r, "k": args.k_max, "count": res.count, "injective": res.injective})


def cmd_detect(args) -> None:
    g = _read(args)
    if args.method == "powered":
        if args.threshold is None:
            raise ValueError("powered test needs --threshold")
        out = detection.powered_test(g, args.r, args.threshold)
    elif args.method == "nonbacktracking":
        out = detection.nb_test(g, args.factor)
    else:
        if args.threshold is None:
            raise ValueError("cycle_count test needs --threshold")
        out = detection.cycle_count_test(g, args.m, args.threshold)
    _emit(out.to_dict())


def cmd_experiment(args) -> None:
    cfg = load_config(args.config)
    updates = {}
    if args.out:
        updates["output"] = args.out
    if args.json_out:
        updates["json_output"] = args.json_out
    if args.threads:
        updates["threads"] = args.threads
    if updates:
        cfg = cfg.model_copy(update=updates)
    report = detection.run_distinguish_experiment(cfg)
    if cfg.output:
        log.info("summary %s", json.dumps(report.summary()))
    else:
        sys.stdout.write(report.to_csv())


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="powerlab", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to standard error")
    sub = p.add_subparsers(dest="command", required=True)

    def graph_in(sp):
        sp.add_argument("--in", dest="inp", required=True, help="edge-list file")
        sp.add_argument("--labels", help="label file (defaults to <in>.labels when present)")

    s = sub.add_parser("gen", help="write a seeded model draw")
    s.add_argument("--model", required=True, choices=sorted(MODEL_NAMES))
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--a", type=float, default=0)
    s.add_argument("--b", type=float, default=0)
    s.add_argument("--d", type=float, default=0)
    s.add_argument("--c", type=int, default=0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.add_argument("--labels")
    s.set_defaults(func=cmd_gen)

    s = sub.add_parser("power", help="write the r-th power")
    graph_in(s)
    s.add_argument("--r", type=int, required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_power)

    s = sub.add_parser("spectrum", help="top-k adjacency eigenvalues as JSON")
    graph_in(s)
    s.add_argument("--k", type=int, default=2)
    s.add_argument("--tol", type=float, default=1e-8)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--vectors", help="binary sidecar for eigenvectors")
    s.set_defaults(func=cmd_spectrum)

    s = sub.add_parser("nb", help="nonbacktracking top two moduli")
    graph_in(s)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_nb)

    s = sub.add_parser("bound", help="evaluate a bound and print its report")
    s.add_argument("--name", required=True,
                   choices=["alon_boppana", "walk", "tree_like", "perturbation", "tdc", "girth_poly", "even_partition"])
    s.add_argument("--in", dest="inp")
    s.add_argument("--labels")
    s.add_argument("--r", type=int, default=1)
    s.add_argument("--k", type=int)
    s.add_argument("--d", type=int, default=3)
    s.add_argument("--c", type=int, default=2)
    s.add_argument("--depth", type=int, default=6)
    s.add_argument("--x", type=float, default=0.0)
    s.add_argument("--xs", type=float, nargs="+", default=[1.0])
    s.add_argument("--two-n", dest="two_n", type=int, default=2)
    s.add_argument("--perturbation", help="file holding a 'c; vertices; toggles' block")
    s.set_defaults(func=cmd_bound)

    s = sub.add_parser("oracle", help="closed walk table, or tree-like walk count at --vertex")
    graph_in(s)
    s.add_argument("--r", type=int, required=True)
    s.add_argument("--k-max", dest="k_max", type=int, default=3)
    s.add_argument("--vertex", type=int)
    s.add_argument("--no-loops", action="store_true")
    s.set_defaults(func=cmd_oracle)

    s = sub.add_parser("detect", help="run one test on a graph")
    graph_in(s)
    s.add_argument("--method", required=True, choices=["powered", "nonbacktracking", "cycle_count"])
    s.add_argument("--r", type=int, default=3)
    s.add_argument("--m", type=int, default=5)
    s.add_argument("--threshold", type=float)
    s.add_argument("--factor", type=float, default=1.2)
    s.set_defaults(func=cmd_detect)

    s = sub.add_parser("experiment", help="Monte Carlo distinguishing experiment from a JSON config")
    s.add_argument("--config", required=True)
    s.add_argument("--out", help="CSV path (overrides the config)")
    s.add_argument("--json-out", dest="json_out")
    s.add_argument("--threads", type=int)
    s.set_defaults(func=cmd_experiment)
    return p


def _setup_logging(verbose: bool) -> None:
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    log.handlers[:] = [handler]
    log.setLevel(logging.INFO if verbose else logging.WARNING)
    log.propagate = False


def cli_dispatch(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    _setup_logging(args.verbose)
    try:
        args.func(args)
    except (ValueError, OSError) as exc:
        print(f"powerlab: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except RuntimeError as exc:
        print(f"powerlab: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def main() -> None:
    sys.exit(cli_dispatch())
