"""Command-line entry point: ``sirslab <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import graphs, oracle, potentials, spectral
from .dynamics import Mode
from .errors import SirsLabError
from .lab import ExperimentConfig, run_experiment, sweep_lambda
from .verification import SUITES, verify


def _open_out(path: str | None):
    return sys.stdout if path in (None, "-") else open(path, "w")


def _emit(text: str, path: str | None) -> None:
    fh = _open_out(path)
    try:
        fh.write(text)
    finally:
        if fh is not sys.stdout:
            fh.close()


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, default=_json_default) + "\n"


# -- gen ----------------------------------------------------------------------


def cmd_gen(args) -> int:
    fam = args.family
    info: dict = {"family": fam}
    if fam == "star":
        G = graphs.make_star(args.n - 1)
    elif fam == "clique":
        G = graphs.make_clique(args.n)
    elif fam == "path":
        G = graphs.make_path(args.n)
    elif fam == "cycle":
        G = graphs.make_cycle(args.n)
    elif fam == "er":
        G = graphs.gen_erdos_renyi(args.n, args.p, args.seed)
    elif fam == "regular":
        G = graphs.gen_random_regular(args.n, args.d, args.seed)
    else:
        hg = graphs.gen_hyperbolic(graphs.HrgParams(args.n, args.gamma, args.avg_degree), args.seed)
        G = hg.graph
        info.update(disk_radius=hg.disk_radius, avg_degree=float(G.degrees.mean()),
                    hill_gamma=graphs.hill_tail_exponent(G.degrees[G.degrees > 0]))
    info.update(n=G.n, m=G.m)
    graphs.write_graph(G, args.out if args.out not in (None, "-") else sys.stdout)
    print(json.dumps(info, default=_json_default), file=sys.stderr)
    return 0


# -- spectral -----------------------------------------------------------------


def cmd_spectral(args) -> int:
    G = graphs.read_graph(args.graph)
    summary = spectral.spectral_summary(G)
    if args.d is not None:
        cert = spectral.certify_expander(G, args.d, args.eps_d, summary["delta"])
        rep = spectral.check_edge_density_bounds(G, cert, args.pairs, args.seed)
        summary["density_check"] = {
            "pairs": rep.pairs_checked,
            "cut_violations": rep.cut_violations,
            "density_violations": rep.density_violations,
            "density_checked": rep.density_checked,
            "cut_worst_slack": rep.cut_worst_slack,
            "density_worst_slack": rep.density_worst_slack if rep.density_checked else None,
        }
    _emit(_dump(summary), args.out)
    return 0


# -- simulate / sweep ---------------------------------------------------------


def _overrides(args) -> dict:
    out = {
        "lambda": args.lam, "rho": args.rho, "mode": args.mode, "trials": args.trials,
        "seed": args.seed, "horizon_time": args.horizon_time, "horizon_events": args.horizon_events,
        "engine": args.engine,
    }
    if args.init_vertex is not None:
        out["init"] = {"kind": "vertex", "vertex": args.init_vertex}
    if args.subgraph:
        with open(args.subgraph) as fh:
            out["subgraph"] = [int(tok) for tok in fh.read().split()]
    return out


def cmd_simulate(args) -> int:
    cfg = ExperimentConfig.from_json(args.config, _overrides(args))
    res = run_experiment(cfg, workers=args.workers)
    _emit(res.to_csv(), args.out)
    summary = res.summary.to_dict()
    if args.summary:
        _emit(_dump(summary), args.summary)
    else:
        print(json.dumps(summary, default=_json_default), file=sys.stderr)
    return 0


def cmd_sweep(args) -> int:
    cfg = ExperimentConfig.from_json(args.config, _overrides(args))
    lams = [float(x) for x in args.lambdas.split(",") if x.strip()]
    res = sweep_lambda(cfg, lams, workers=args.workers)
    _emit(res.to_csv(), args.out)
    if args.summary:
        _emit(res.summary_csv(), args.summary)
    else:
        sys.stderr.write(res.summary_csv())
    return 0


# -- oracle -------------------------------------------------------------------


def _kv(spec: str) -> dict:
    out = {}
    for part in spec.split(","):
        if part.strip():
            key, _, val = part.partition("=")
            out[key.strip()] = val.strip()
    return out


def cmd_oracle(args) -> int:
    params = {"size": args.size, "lambda": args.lam, "rho": args.rho, "mode": args.mode, "init": args.init}
    if args.family == "star":
        kv = _kv(args.init or "center=I")
        center = {"S": 0, "I": 1, "R": 2}[kv.get("center", "I").upper()]
        i, r = int(kv.get("i", 0)), int(kv.get("r", 0))
        init = oracle.LumpedStarState(center, args.size - i - r, i, r)
        res = oracle.star_exact_expected_survival(args.size, args.lam, args.rho, init)
    elif args.family == "clique":
        kv = _kv(args.init or "i=1")
        res = oracle.clique_exact_expected_survival(
            args.size, args.lam, args.rho, oracle.LumpedCliqueState(int(kv.get("i", 1)), int(kv.get("r", 0))))
    else:
        if args.graph:
            G = graphs.read_graph(args.graph)
        else:
            G = {"path": graphs.make_path, "cycle": graphs.make_cycle, "clique": graphs.make_clique,
                 "star": lambda n: graphs.make_star(n - 1)}[args.shape](args.size)
        init = [int(ch) for ch in (args.init or "1" + "0" * (G.n - 1))]
        res = oracle.tiny_exact_expected_survival(G, args.lam, args.rho, init, args.mode)
    T = res.expected_T
    out = {
        "family": args.family,
        "params": params,
        "expected_T": T,
        "log10_expected_T": math.log10(T) if T > 0 else None,
        "states": res.states,
        "residual": res.residual,
    }
    _emit(_dump(out), args.out)
    return 0


# -- drift-scan ---------------------------------------------------------------


def _grid(spec: str) -> list[int]:
    if ":" in spec:
        start, stop, step = (int(x) for x in spec.split(":"))
        return list(range(start, stop + 1, step))
    return [int(x) for x in spec.split(",")]


def cmd_drift_scan(args) -> int:
    if args.mean_field:
        if args.n is None:
            raise SirsLabError("--mean-field needs --n")
        G, n, lam = None, args.n, args.lam if args.lam is not None else 0.0
    else:
        if not args.graph:
            raise SirsLabError("either --graph or --mean-field is required")
        G = graphs.read_graph(args.graph)
        n = G.n
        lam = args.lam if args.lam is not None else args.c / float(G.degrees.mean())
    ctx = potentials.make_context(n, args.c, args.rho)
    dm = potentials.region_scan(G, ctx, lam, _grid(args.i_grid), _grid(args.r_grid), args.samples,
                                args.seed, args.a_threshold)
    lines = ["I,R,max_drift,mean_drift,band_member"]
    lines += [f"{I},{R},{mx!r},{mean!r},{int(b)}" for I, R, mx, mean, b in dm.rows()]
    _emit("\n".join(lines) + "\n", args.out)
    print(json.dumps({"band": dm.band, "i_star": ctx.i_star, "lambda": lam}), file=sys.stderr)
    return 0


# -- verify -------------------------------------------------------------------


def cmd_verify(args) -> int:
    report = verify(args.suite, args.seed)
    print("\n".join(report.lines()))
    return 0 if report.ok else 1


# -- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sirslab", description="SIRS epidemic simulation and exact analysis")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a graph and write it as an edge list")
    g.add_argument("--family", required=True, choices=["star", "clique", "path", "cycle", "er", "regular", "hrg"])
    g.add_argument("--n", type=int, required=True, help="number of vertices")
    g.add_argument("--p", type=float, default=0.1)
    g.add_argument("--d", type=int, default=3)
    g.add_argument("--gamma", type=float, default=2.5)
    g.add_argument("--avg-degree", type=float, default=10.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", default=None)
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("spectral", help="normalized-Laplacian expansion of a graph file")
    s.add_argument("--graph", required=True)
    s.add_argument("--d", type=float, default=None, help="nominal degree; enables the edge-density check")
    s.add_argument("--eps-d", type=float, default=0.0)
    s.add_argument("--pairs", type=int, default=10_000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_spectral)

    for name, func, text in (("simulate", cmd_simulate, "run trials from a JSON config"),
                             ("sweep", cmd_sweep, "run one experiment per lambda on a shared graph")):
        q = sub.add_parser(name, help=text)
        q.add_argument("--config", required=True)
        q.add_argument("--lambda", dest="lam", type=float, default=None)
        q.add_argument("--rho", type=float, default=None)
        q.add_argument("--mode", choices=[m.value for m in Mode], default=None)
        q.add_argument("--trials", type=int, default=None)
        q.add_argument("--seed", type=int, default=None)
        q.add_argument("--horizon-time", type=float, default=None)
        q.add_argument("--horizon-events", type=int, default=None)
        q.add_argument("--engine", choices=["direct", "clock"], default=None)
        q.add_argument("--init-vertex", type=int, default=None, help="single initially infected vertex")
        q.add_argument("--subgraph", default=None, help="file of vertex ids; report the projected survival")
        q.add_argument("--workers", type=int, default=None)
        q.add_argument("--out", default=None, help="trial CSV (default stdout)")
        q.add_argument("--summary", default=None, help="summary output (default stderr)")
        if name == "sweep":
            q.add_argument("--lambdas", required=True, help="comma-separated increasing values")
        q.set_defaults(func=func)

    o = sub.add_parser("oracle", help="exact expected survival time")
    o.add_argument("--family", required=True, choices=["star", "clique", "tiny"])
    o.add_argument("--size", type=int, required=True, help="leaves for star, k for clique, n for tiny")
    o.add_argument("--lambda", dest="lam", type=float, required=True)
    o.add_argument("--rho", type=float, default=1.0)
    o.add_argument("--mode", choices=[m.value for m in Mode], default="SIRS")
    o.add_argument("--init", default=None,
                   help="star: center=I,i=0,r=0; clique: i=1,r=0; tiny: per-vertex digits like 1000")
    o.add_argument("--graph", default=None, help="tiny: graph file")
    o.add_argument("--shape", choices=["path", "cycle", "clique", "star"], default="path",
                   help="tiny: built-in shape when no graph file is given")
    o.add_argument("--out", default=None)
    o.set_defaults(func=cmd_oracle)

    d = sub.add_parser("drift-scan", help="scan the F drift over an (I, R) grid")
    d.add_argument("--graph", default=None)
    d.add_argument("--mean-field", action="store_true")
    d.add_argument("--n", type=int, default=None)
    d.add_argument("--c", type=float, default=2.0)
    d.add_argument("--rho", type=float, default=1.0)
    d.add_argument("--lambda", dest="lam", type=float, default=None, help="default c / mean degree")
    d.add_argument("--i-grid", required=True, help="start:stop:step or comma list")
    d.add_argument("--r-grid", required=True)
    d.add_argument("--samples", type=int, default=1)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--a-threshold", type=float, default=0.01)
    d.add_argument("--out", default=None)
    d.set_defaults(func=cmd_drift_scan)

    v = sub.add_parser("verify", help="run built-in verification suites")
    v.add_argument("--suite", choices=[*SUITES, "all"], default="all")
    v.add_argument("--seed", type=int, default=0)
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SirsLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
