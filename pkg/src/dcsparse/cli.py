"""Command line front end: ``dcsparse <subcommand> ...``.

Every subcommand writes a JSON report (stdout, or ``--out``) echoing its
inputs, library versions and seed.  Exit status is 0 when the checked
properties hold, 1 when one fails, and 2 on a usage error.
"""
from __future__ import annotations

import argparse
import json
import math
import platform
import sys
from fractions import Fraction
from importlib import metadata
from pathlib import Path

import numpy as np
import scipy

from . import envelope, flat, polyrefute, sparse, weights, wetzel


class UsageError(Exception):
    pass


# -- report plumbing ---------------------------------------------------------

def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    return obj


def _versions() -> dict:
    try:
        own = metadata.version("dcsparse")
    except metadata.PackageNotFoundError:
        own = "unknown"
    return {"dcsparse": own, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def _emit(args, results: dict, passed: bool) -> int:
    inputs = {k: v for k, v in vars(args).items() if k not in ("func", "out")}
    report = {"command": args.command, "inputs": inputs, "versions": _versions(),
              "seed": args.seed, "passed": passed, "results": results}
    text = json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0 if passed else 1


def _sequence(args) -> weights.WeightSequence:
    try:
        reg = weights.load_registry(args.registry)
    except (OSError, ValueError, KeyError) as exc:
        raise UsageError(f"cannot read registry: {exc}") from exc
    if args.seq not in reg:
        raise UsageError(f"unknown sequence {args.seq!r}; known: {', '.join(reg)}")
    return reg[args.seq]


def _pair(text: str) -> tuple[float, float]:
    try:
        a, b = (float(t) for t in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected two comma-separated numbers, got {text!r}") from exc
    return a, b


def _range(text: str) -> np.ndarray:
    try:
        lo, hi, step = (float(t) for t in text.split(":"))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected lo:hi:step, got {text!r}") from exc
    if step <= 0 or hi < lo:
        raise argparse.ArgumentTypeError("need lo <= hi and step > 0")
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return lo + step * np.arange(n)


def _load_table(path: str) -> np.ndarray:
    try:
        if path.endswith(".json"):
            data = json.loads(Path(path).read_text())
            if isinstance(data, dict):
                data = data.get("norms", data.get("points", data.get("queries")))
            return np.asarray(data, dtype=float)
        return np.loadtxt(path, delimiter=",", ndmin=1)
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc


# -- subcommands -------------------------------------------------------------

def cmd_classify(args) -> int:
    seq = _sequence(args)
    v = weights.classify(seq)
    return _emit(args, {"verdict": v.verdict, "basis": v.basis, "K": v.K,
                        "partialSum": v.partial_sum, "tailExponent": v.tail_exponent}, True)


def cmd_convexify(args) -> int:
    seq = _sequence(args)
    conv = weights.log_convexify(seq)
    y = conv.log_minorant
    convex = bool(np.all(y[2:] - 2 * y[1:-1] + y[:-2] >= -1e-10))
    dominated = bool(np.all(y <= seq.log_prefix + 1e-12))
    return _emit(args, {"logMinorant": y, "hullVertices": conv.hull_vertices,
                        "isSource": conv.is_source, "logConvex": convex,
                        "dominated": dominated}, convex and dominated)


def cmd_bump(args) -> int:
    seq = _sequence(args)
    b = flat.make_bump(args.interval, args.eps, seq, args.kmax)
    x = np.linspace(*args.interval, args.grid)
    sampled = np.array([np.max(np.abs(b(x, k))) for k in range(args.kmax + 1)])
    targets = np.asarray(b.bound_table, dtype=float)
    ok_samples = bool(np.all(sampled <= targets * (1 + 1e-9)))
    if args.csv:
        flat.export_samples_csv(b, args.csv, x, range(min(args.kmax, 4) + 1))
    res = b.certificate_report()
    res["sampledNorms"] = sampled
    return _emit(args, res, res["certificateHolds"] and ok_samples)


def cmd_transition(args) -> int:
    seq = _sequence(args)
    t = flat.make_transition(Fraction(args.delta), args.i, seq, args.kmax)
    x = np.linspace(0.0, args.delta, args.grid)
    ext = seq.extended(args.kmax + 1)
    targets = np.exp(np.arange(args.kmax + 1) * math.log(1.0 / args.i)
                     + ext.log_prefix[: args.kmax + 1])
    sampled = np.array([np.max(np.abs(t(x, k))) for k in range(args.kmax + 1)])
    increasing = flat.strictly_increasing(t, x)
    within = bool(np.all(sampled <= targets * (1 + 1e-9)))
    if args.csv:
        flat.export_samples_csv(t, args.csv, x, range(3))
    return _emit(args, {"endValue": t.end_value, "rescale": t.rescale,
                        "flatIndex": t.flat_index, "startsAtZero": float(t(0.0)) == 0.0,
                        "strictlyIncreasing": increasing, "sampledNorms": sampled,
                        "targets": targets},
                 increasing and within and float(t(0.0)) == 0.0)


def _registry(args) -> sparse.AtomRegistry:
    return sparse.AtomRegistry(_sequence(args), args.kmax)


def cmd_sparse_build(args) -> int:
    h = sparse.build_map(args.point, _registry(args), args.depth)
    u = np.linspace(float(h.x_P) - 5, float(h.x_P) + 5, args.grid)
    inc, where = sparse.strictly_increasing(h, u)
    audit = sparse.derivative_audit(h)
    if args.csv:
        sparse.export_samples_csv(h, args.csv, u)
    return _emit(args, {"point": h.point, "depth": h.depth,
                        "atoms": len(h.materialized_atoms()),
                        "gapBound": float(h.gap_bound()),
                        "strictlyIncreasing": inc, "firstViolation": where,
                        "derivativeAudit": {k: audit[k] for k in
                                            ("sup_norms", "max_ratio_to_M", "passed")}},
                 inc and audit["passed"])


def cmd_sparse_eval(args) -> int:
    reg = _registry(args)
    h = sparse.build_map(args.point, reg, args.depth)
    rows = []
    for u in args.u:
        if args.inverse:
            x, prov = sparse.inverse_eval(h, u)
            rows.append({"w": u, "x": x, "provenance": prov})
        else:
            val, prov = sparse.eval_with_provenance(h, u)
            rows.append({"u": u, "value": float(val), "exact": val, "provenance": prov,
                         "atom": list(reg[prov].key) if prov != sparse.POINT else None})
    return _emit(args, {"rows": rows}, True)


def cmd_sparse_report(args) -> int:
    pts = _load_table(args.points).reshape(-1, 2)
    qs = _load_table(args.queries).ravel()
    rep = sparse.sparseness_report(pts, qs, _registry(args), args.depth, audit=not args.no_audit)
    ok = rep["all_resolved"] and rep.get("derivative_audit", {}).get("passed", True)
    return _emit(args, rep, ok)


def cmd_wetzel_family(args) -> int:
    g = wetzel.build_flat_on_cantor(_sequence(args), args.level, args.kmax)
    members = wetzel.distinct_family(g)
    rng = np.random.default_rng(args.seed)
    if len(members) > args.sample:
        members = [members[i] for i in np.sort(rng.choice(len(members), args.sample, replace=False))]
    x = np.linspace(-0.1, 1.1, args.check_grid)
    tv = wetzel.two_value_check(members, x)
    sep = wetzel.separation_audit(members, x, pairs=args.pairs, seed=args.seed)
    if args.csv:
        flat.export_samples_csv(g, args.csv, x, [0])
    return _emit(args, {"gaps": len(g.cantor.gaps), "windows": len(wetzel.family_windows(g)),
                        "distinctFunctions": len(wetzel.distinct_family(g)),
                        "sampled": len(members), "beta": g.beta, "B": g.B,
                        "twoValued": vars(tv), "separation": sep},
                 tv.passed and sep["passed"])


def cmd_wetzel_equalizer(args) -> int:
    if args.triple not in wetzel.ANALYTIC_TRIPLES:
        raise UsageError(f"unknown triple {args.triple!r}; known: {', '.join(wetzel.ANALYTIC_TRIPLES)}")
    f1, f2, f3 = wetzel.ANALYTIC_TRIPLES[args.triple]
    r = wetzel.equalizer_demo(f1, f2, f3, tuple(args.interval), args.grid, args.delta)
    return _emit(args, {"pairRoots": {f"{i}-{j}": v for (i, j), v in r.pair_roots.items()},
                        "points": r.points, "degeneratePairs": r.degenerate_pairs,
                        "minSeparation": r.min_separation, "discrete": r.discrete},
                 r.discrete)


def cmd_envelope_fit(args) -> int:
    seq = _sequence(args)
    prof = envelope.DerivativeNormProfile(_load_table(args.profile).ravel(), source=args.profile)
    fits = envelope.fit_envelope(prof, seq, args.B_grid)
    rows = [{"B": f.B, "beta": f.beta, "slack": f.slack, "worstOrder": f.worst_order}
            for f in fits]
    return _emit(args, {"fits": rows}, all(f.feasible for f in fits))


def cmd_envelope_check(args) -> int:
    seq = _sequence(args)
    prof = envelope.DerivativeNormProfile(_load_table(args.profile).ravel(), source=args.profile)
    f = envelope.check_membership(prof, seq, args.beta, args.B)
    return _emit(args, {"slack": f.slack, "perOrderSlack": f.per_order_slack,
                        "feasible": f.feasible, "firstViolation": f.first_violation},
                 f.feasible)


def cmd_refute_poly(args) -> int:
    rng = np.random.default_rng(args.seed)
    chains = []
    for _ in range(args.trials):
        fam, cols = polyrefute.random_instance(rng, args.degree, args.per_column)
        c = polyrefute.pigeonhole_refine(fam, cols, args.per_column)
        chains.append({"columns": cols, "sizes": c.sizes, "passed": c.passed})
    res = {"bound": args.per_column ** (args.degree + 1), "chains": chains}
    ok = all(c["passed"] for c in chains)
    if args.exhaustive:
        ex = polyrefute.exhaustive_line_search()
        res["exhaustive"] = {k: ex[k] for k in ("max_family", "bound", "witness", "passed")}
        ok = ok and ex["passed"]
    return _emit(args, res, ok)


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--registry", help=f"weight registry JSON (default ${weights.REGISTRY_ENV} or built-in)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", help="write the JSON report here instead of stdout")
    seqarg = argparse.ArgumentParser(add_help=False)
    seqarg.add_argument("--seq", default="gevrey2", help="sequence name from the registry")
    seqarg.add_argument("--kmax", type=int, default=flat.DEFAULT_K_MAX)

    p = argparse.ArgumentParser(prog="dcsparse", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, parents, sp=sub, **kw):
        q = sp.add_parser(name, parents=parents, **kw)
        q.set_defaults(func=func)
        return q

    q = add("classify", cmd_classify, [common, seqarg], help="Carleman verdict for a sequence")
    q = add("convexify", cmd_convexify, [common, seqarg], help="log-convex minorant")
    q = add("bump", cmd_bump, [common, seqarg], help="flat bump with derivative certificate")
    q.add_argument("--interval", type=_pair, default=(0.0, 1.0))
    q.add_argument("--eps", type=float, default=1.0)
    q.add_argument("--grid", type=int, default=10_000)
    q.add_argument("--csv")
    q = add("transition", cmd_transition, [common, seqarg], help="monotone flat transition")
    q.add_argument("--delta", type=float, default=1.0)
    q.add_argument("--i", type=int, default=1)
    q.add_argument("--grid", type=int, default=10_000)
    q.add_argument("--csv")

    sp = sub.add_parser("sparse", help="sparse piecewise map h_P").add_subparsers(dest="action", required=True)
    mapargs = argparse.ArgumentParser(add_help=False)
    mapargs.add_argument("--depth", type=int, default=sparse.DEFAULT_DEPTH)
    q = add("build", cmd_sparse_build, [common, seqarg, mapargs], sp)
    q.add_argument("--point", type=_pair, required=True)
    q.add_argument("--grid", type=int, default=100_001)
    q.add_argument("--csv")
    q = add("eval", cmd_sparse_eval, [common, seqarg, mapargs], sp)
    q.add_argument("--point", type=_pair, required=True)
    q.add_argument("--u", type=float, nargs="+", required=True)
    q.add_argument("--inverse", action="store_true", help="solve h(x) = u instead")
    q = add("report", cmd_sparse_report, [common, seqarg, mapargs], sp)
    q.add_argument("--points", required=True, help="CSV rows x,y or JSON list of pairs")
    q.add_argument("--queries", required=True, help="CSV column or JSON list")
    q.add_argument("--no-audit", action="store_true")

    wp = sub.add_parser("wetzel", help="two-valued family and equalizer demo").add_subparsers(dest="action", required=True)
    q = add("family", cmd_wetzel_family, [common, seqarg], wp)
    q.add_argument("--level", type=int, default=6)
    q.add_argument("--check-grid", type=int, default=10_000)
    q.add_argument("--sample", type=int, default=1000)
    q.add_argument("--pairs", type=int, default=100)
    q.add_argument("--csv")
    q = add("equalizer", cmd_wetzel_equalizer, [common], wp)
    q.add_argument("--triple", default="shifted-sines")
    q.add_argument("--interval", type=_pair, default=(0.0, 2 * math.pi))
    q.add_argument("--grid", type=int, default=10_001)
    q.add_argument("--delta", type=float, default=1e-3)

    ep = sub.add_parser("envelope", help="envelope fits on derivative-norm profiles").add_subparsers(dest="action", required=True)
    q = add("fit", cmd_envelope_fit, [common, seqarg], ep)
    q.add_argument("--profile", required=True)
    q.add_argument("--B-grid", dest="B_grid", type=_range, default="0.5:4:0.1")
    q = add("check", cmd_envelope_check, [common, seqarg], ep)
    q.add_argument("--profile", required=True)
    q.add_argument("--beta", type=float, required=True)
    q.add_argument("--B", type=float, required=True)

    q = add("refute-poly", cmd_refute_poly, [common], help="pigeonhole bound for polynomial families")
    q.add_argument("--degree", type=int, default=1)
    q.add_argument("--per-column", type=int, default=2)
    q.add_argument("--trials", type=int, default=200)
    q.add_argument("--exhaustive", action="store_true", help="also run the integer-line search")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command in ("sparse", "wetzel", "envelope"):
        args.command = f"{args.command} {args.action}"
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"dcsparse: error: {exc}", file=sys.stderr)
        return 2
    except (flat.SynthesisError, ValueError, ArithmeticError) as exc:
        print(f"dcsparse: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
