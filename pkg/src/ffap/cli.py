"""Command line front end.

Every command prints a small table to stdout and, with ``--out``, appends one
JSON record per run.  Exit codes: 0 pass, 1 a check failed, 2 bad usage or input.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import hashlib
import json
import sys
import time
from pathlib import Path

from . import runtime
from .apcount import ap_list, counterexample_family, restricted_density
from .ffcore import DenseFunction, FieldParams
from .gowers import STRATEGIES, GowersError, gowers_norm, phase_function, phase_norm_closed_form
from .polymap import PolyMap, parse
from .reports import jsonable
from .subspace import (
    greedy_max_subspace, maximality_certificate, restricted_ap_pipeline, subspace_bound_report,
)
from .suites import EXTRA_SUITES, SUITES, numeric_digest, run_suite
from .variety import (
    PointSet, dim_proxy, level_set, level_set_sizes, main_condition, singular_locus, wstar_count,
    wstar_lambda, wstar_sample,
)


class UsageError(ValueError):
    """Bad arguments or input documents (exit code 2)."""


class CheckFailed(Exception):
    """A run that produced a structured result but must exit 1."""

    def __init__(self, message: str, results: dict | None = None):
        super().__init__(message)
        self.results = results or {}


# --- inputs -------------------------------------------------------------------


def load_map(path: str) -> PolyMap:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise UsageError(f"cannot read map document {path!r}: {exc.strerror}") from None
    try:
        P = parse(data)
    except ValueError as exc:
        raise UsageError(f"{path}: {exc}") from None
    if P.params.size > runtime.budget():
        raise UsageError(f"budget {runtime.budget()} is smaller than p^n = {P.params.size}")
    return P


def parse_vector(text: str, length: int, what: str) -> list[int]:
    try:
        vals = [int(t) for t in text.replace(" ", "").split(",") if t != ""]
    except ValueError:
        raise UsageError(f"{what} must be comma-separated integers, got {text!r}") from None
    if len(vals) != length:
        raise UsageError(f"{what} has {len(vals)} entries, expected {length}")
    return vals


def read_index_list(path: str, params: FieldParams | None = None) -> PointSet:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read index list {path!r}: {exc.strerror}") from None
    try:
        S = PointSet.from_text(text, params)
    except ValueError as exc:
        raise UsageError(f"{path}: {exc}") from None
    if params is not None and S.params != params:
        raise UsageError(f"{path}: header p, n do not match the map")
    return S


def parse_set_spec(spec: str, P: PolyMap) -> PointSet:
    """``levelset:<v>``, ``random:<density>:<seed>`` or a path to an index list."""
    if spec.startswith("levelset:"):
        return level_set(P, parse_vector(spec.split(":", 1)[1], P.R, "levelset value"))
    if spec.startswith("random:"):
        parts = spec.split(":")
        if len(parts) != 3:
            raise UsageError("random set spec is random:<density>:<seed>")
        try:
            density, seed = float(parts[1]), int(parts[2])
        except ValueError:
            raise UsageError(f"bad random set spec {spec!r}") from None
        if not 0 <= density <= 1:
            raise UsageError("random set density must lie in [0, 1]")
        return PointSet.random(P.params, density, seed)
    return read_index_list(spec, P.params)


def _file_hash(path: str) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()[:16]


# --- output -------------------------------------------------------------------


def _table(rows) -> str:
    rows = [(str(k), v if isinstance(v, str) else json.dumps(jsonable(v))) for k, v in rows]
    w = max((len(k) for k, _ in rows), default=0)
    return "".join(f"{k.ljust(w)}  {v}\n" for k, v in rows)


def _append_record(path: str, record: dict) -> None:
    with open(path, "a", encoding="utf-8") as fh:
        fh.write(json.dumps(jsonable(record), sort_keys=True) + "\n")


# --- commands -----------------------------------------------------------------
# Each returns (fingerprint, parameters, results, passed, table rows).


def cmd_levelset(args):
    P = load_map(args.map)
    params = {"p": P.p, "n": P.n, "d": P.d, "R": P.R}
    if args.all_v:
        sizes = level_set_sizes(P)
        total = sum(sizes.values())
        results = {"sizes": [[list(v), c] for v, c in sorted(sizes.items())], "total": total}
        rows = [("values", len(sizes)), ("total", total), ("p^n", P.params.size)]
        return P.fingerprint(), {**params, "all_v": True}, results, total == P.params.size, rows
    if args.v is None:
        raise UsageError("give --v or --all-v")
    v = parse_vector(args.v, P.R, "v")
    S = level_set(P, v)
    sing = singular_locus(P)
    results = {
        "count": S.count,
        "dim_proxy": dim_proxy(S),
        "singular_count": sing.count,
        "singular_dim_proxy": dim_proxy(sing),
        "K_proxy": P.n - dim_proxy(sing),
    }
    if args.K is not None:
        try:
            results["condition"] = main_condition(P.p, P.n, P.d, P.R, args.K, args.eps).to_dict()
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    if args.export:
        Path(args.export).write_text(S.to_text())
    if args.export_singular:
        Path(args.export_singular).write_text(sing.to_text())
    rows = [("v", v), ("|S_v|", S.count), ("dim_proxy(S_v)", f"{results['dim_proxy']:.6f}"),
            ("|singular locus|", sing.count), ("dim_proxy(locus)", f"{results['singular_dim_proxy']:.6f}")]
    if "condition" in results:
        rows.append(("condition slack", results["condition"]["slack"]))
    return P.fingerprint(), {**params, "v": v, "K": args.K, "eps": args.eps}, results, None, rows


def _gowers_source(args):
    picked = sum(x is not None for x in (args.map, args.function, args.constant))
    if picked != 1:
        raise UsageError("give exactly one of --map, --function, --constant")
    if args.map is not None:
        P = load_map(args.map)
        if args.alpha is None:
            raise UsageError("--map needs --alpha (phase mode)")
        alpha = parse_vector(args.alpha, P.R, "alpha")
        return phase_function(P, alpha), P, alpha, P.fingerprint()
    if args.function is not None:
        params = FieldParams(args.p, args.n) if args.p is not None and args.n is not None else None
        S = read_index_list(args.function, params)
        return DenseFunction.indicator(S.params, S.bits), None, None, _file_hash(args.function)
    if args.p is None or args.n is None:
        raise UsageError("--constant needs --p and --n")
    try:
        c = complex(args.constant)
    except ValueError:
        raise UsageError(f"bad constant {args.constant!r}") from None
    params = FieldParams(args.p, args.n)
    return DenseFunction.constant(params, c), None, None, f"constant:{args.constant}"


def cmd_gowers(args):
    f, P, alpha, fp = _gowers_source(args)
    l = args.l if args.l is not None else (P.d if P is not None else None)
    if l is None:
        raise UsageError("--l is required")
    if args.strategy == "fourier" and l != 2:
        raise UsageError("strategy fourier only computes U^2")
    if args.strategy == "closed_form" and (P is None or l != P.d):
        raise UsageError("strategy closed_form needs --map/--alpha and l = deg P")
    if l < 1:
        raise UsageError("l must be >= 1")
    params = {"p": f.params.p, "n": f.params.n, "l": l, "strategy": args.strategy, "alpha": alpha}
    if args.strategy == "closed_form":
        rep = phase_norm_closed_form(P, alpha)
    else:
        rep = gowers_norm(f, l, args.strategy)
    results = {"value": rep.value, "raw_power": rep.raw_power, "strategy": rep.strategy}
    rows = [("l", l), ("strategy", rep.strategy), ("||f||", f"{rep.value:.15g}"), ("||f||^(2^l)", f"{rep.raw_power:.15g}")]
    passed = None
    if P is not None and l == P.d:
        # phase mode: cross-check against the other route
        if args.strategy == "closed_form":
            closed, direct = rep, gowers_norm(f, l)
        else:
            closed, direct = phase_norm_closed_form(P, alpha), rep
        gap = abs(closed.raw_power - direct.raw_power)
        passed = gap <= runtime.ineq_tol()
        results.update(closed_form_raw=closed.raw_power, direct_raw=direct.raw_power,
                       agreement_gap=gap, wstar_lambda=closed.meta["wstar_lambda"])
        rows += [("closed form gap", f"{gap:.3e}"), ("agree", passed)]
    return fp, params, results, passed, rows


def cmd_verify(args):
    name = args.suite
    if name != "all" and name not in SUITES and name not in EXTRA_SUITES:
        raise UsageError(f"unknown suite {name!r}; choose from all, {', '.join([*SUITES, *EXTRA_SUITES])}")
    out = run_suite(name, fault=args.inject_fault)
    reports = [r for reps in out.values() for r in reps]
    failed = [r for r in reports if r.passed is False]
    rows = [(suite, f"{sum(r.passed is not False for r in reps)}/{len(reps)} pass") for suite, reps in out.items()]
    for r in failed[:20]:
        diff = r.lhs - r.rhs if isinstance(r.lhs, (int, float)) and isinstance(r.rhs, (int, float)) else None
        rows.append(("FAIL " + r.name, f"lhs={r.lhs!r} rhs={r.rhs!r} diff={diff!r} instance={json.dumps(jsonable(r.instance))}"))
    if len(failed) > 20:
        rows.append(("...", f"{len(failed) - 20} more failures"))
    results = {"suites": {k: [r.to_dict() for r in v] for k, v in out.items()},
               "digest": hashlib.sha256(numeric_digest(out).encode()).hexdigest(),
               "failed": len(failed), "total": len(reports)}
    rows.append(("digest", results["digest"]))
    return f"suite:{name}", {"suite": name, "inject_fault": args.inject_fault}, results, not failed, rows


def cmd_subspace(args):
    P = load_map(args.map)
    seed = args.seed if args.random else None
    M = greedy_max_subspace(P, seed=seed)
    cert = maximality_certificate(P, M)
    bound = subspace_bound_report(P, M)
    results = {"dim": M.dim, "basis": M.basis.tolist(), "certificate": cert, "bound": bound.to_dict()}
    if args.export:
        Path(args.export).write_text(M.export())
    rows = [("dim M", M.dim), ("basis", M.basis.tolist()), ("maximal", cert["maximal"]),
            ("(n/R)^(1/d)", f"{bound.rhs:.6f}"), ("ratio", f"{bound.details['ratio']:.6f}")]
    params = {"p": P.p, "n": P.n, "d": P.d, "R": P.R, "seed": seed}
    return P.fingerprint(), params, results, bool(cert["maximal"]), rows


def cmd_apcount(args):
    P = load_map(args.map)
    v = parse_vector(args.v, P.R, "v")
    A = parse_set_spec(args.A, P)
    S = level_set(P, v)
    params = {"p": P.p, "n": P.n, "d": P.d, "R": P.R, "v": v, "A": args.A, "l": args.l}
    if args.l < 1:
        raise UsageError("l must be >= 1")
    if S.count == 0:
        raise CheckFailed(f"level set S_v is empty for v={v}", {"A_count": A.count, "S_count": 0})
    rep = restricted_density(A, S, args.l)
    results = {"report": rep.to_dict(), "A_count": A.count, "S_count": S.count}
    wit = ap_list(A, S, args.l, limit=args.witnesses)
    results["witnesses"] = wit
    rows = [("|A|", A.count), ("|S_v|", S.count), ("density", f"{rep.density:.15g}"),
            ("progressions", rep.count), ("nontrivial", rep.nontrivial_count), ("identity gap", f"{rep.identity_gap:.3e}"),
            ("witnesses", wit)]
    if args.pipeline:
        if any(v):
            raise UsageError("--pipeline uses the zero set; give v = 0")
        pipe = restricted_ap_pipeline(P, A, args.l, seed=None)
        results["pipeline"] = pipe
        rows.append(("pipeline", f"dim={pipe['dim']} status={pipe['status']} verified={pipe['verified']}"))
    passed = rep.identity_gap <= runtime.TOL_IDENTITY * max(1.0, P.params.size / S.count)
    if args.pipeline and results["pipeline"]["verified"] is False:
        passed = False
    return P.fingerprint(), params, results, passed, rows


def cmd_counterexample(args):
    try:
        Q, A, rep = counterexample_family(args.p, args.n, args.d, seed=args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    stmt = f"all {args.d + 1}-AP gaps satisfy P(y)=0"
    results = {"report": rep.to_dict(), "statement": stmt, "holds": bool(rep.passed)}
    rows = [(stmt, "true" if rep.passed else "false"), ("|A|", A.count),
            ("nontrivial progressions", rep.details["nontrivial_progressions"]),
            ("distinct gaps", rep.details["distinct_gaps"])]
    return Q.fingerprint(), {"p": args.p, "n": args.n, "d": args.d}, results, bool(rep.passed), rows


def cmd_wstar(args):
    P = load_map(args.map)
    lam = parse_vector(args.lam, P.R, "lambda") if args.lam is not None else None
    params = {"p": P.p, "n": P.n, "d": P.d, "R": P.R, "lambda": lam, "sample": args.sample}
    space = P.params.size ** (P.d - 1)
    if args.sample:
        est = wstar_sample(P, args.sample, args.seed, lam)
        rows = [("samples", args.sample), ("estimate", f"{est['estimate']:.6g} +- {est['estimate_stderr']:.3g}")]
        return P.fingerprint(), {**params, "seed": args.seed}, {"sampled": est, "exact": False}, None, rows
    try:
        count = wstar_lambda(P, lam) if lam is not None else wstar_count(P)
    except runtime.BudgetExceeded as exc:
        raise runtime.BudgetExceeded(f"{exc}; pass --sample N for a Monte Carlo estimate") from None
    rows = [("|W*|" if lam is None else "|W*(lambda)|", count), ("tuples", space), ("fraction", f"{count / space:.9g}")]
    return P.fingerprint(), params, {"count": count, "tuples": space, "exact": True}, None, rows


# --- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("run configuration")
    g.add_argument("--budget", type=int, default=runtime.DEFAULT_BUDGET, help="max enumeration size (default 2^31)")
    g.add_argument("--workers", type=int, default=1)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--tolerance", type=float, default=None, help="inequality tolerance (default 1e-9)")
    g.add_argument("--out", help="append a JSON record to this file")
    g.add_argument("--sample", type=int, default=None, help="allow Monte Carlo sampling with N samples")

    ap = argparse.ArgumentParser(prog="ffap", description="Restricted progressions over F_p^n: exact desk-scale experiments.")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("levelset", parents=[common], help="level set and singular locus of a map")
    s.add_argument("map")
    s.add_argument("--v", help="comma-separated value in F_p^R")
    s.add_argument("--all-v", action="store_true", help="sizes of every level set")
    s.add_argument("--K", type=int, help="codimension for the main condition report")
    s.add_argument("--eps", type=float, default=0.0)
    s.add_argument("--export", help="write S_v as an index list")
    s.add_argument("--export-singular", help="write the singular locus as an index list")
    s.set_defaults(func=cmd_levelset)

    s = sub.add_parser("gowers", parents=[common], help="Gowers U^l norm")
    s.add_argument("--map", help="map document (phase mode, with --alpha)")
    s.add_argument("--alpha", help="comma-separated frequency in F_p^R")
    s.add_argument("--function", help="index list; the norm of its indicator")
    s.add_argument("--constant", help="constant function value (with --p, --n)")
    s.add_argument("--p", type=int)
    s.add_argument("--n", type=int)
    s.add_argument("--l", type=int)
    s.add_argument("--strategy", choices=STRATEGIES, default="recursive")
    s.set_defaults(func=cmd_gowers)

    s = sub.add_parser("verify", parents=[common], help="run a verification suite")
    s.add_argument("suite")
    s.add_argument("--inject-fault", action="store_true", help="perturb a coefficient (negative control)")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("subspace", parents=[common], help="greedy maximal subspace in the zero set")
    s.add_argument("map")
    s.add_argument("--random", action="store_true", help="pick extension vectors at random (uses --seed)")
    s.add_argument("--export", help="write the basis rows")
    s.set_defaults(func=cmd_subspace)

    s = sub.add_parser("apcount", parents=[common], help="progressions in A with gaps in S_v")
    s.add_argument("map")
    s.add_argument("--A", required=True, help="index list path, levelset:<v> or random:<density>:<seed>")
    s.add_argument("--v", required=True)
    s.add_argument("--l", type=int, default=3)
    s.add_argument("--witnesses", type=int, default=10)
    s.add_argument("--pipeline", action="store_true", help="also run the subspace/coset search")
    s.set_defaults(func=cmd_apcount)

    s = sub.add_parser("counterexample", parents=[common], help="sum of powers zero set and its progressions")
    s.add_argument("p", type=int)
    s.add_argument("n", type=int)
    s.add_argument("d", type=int)
    s.set_defaults(func=cmd_counterexample)

    s = sub.add_parser("wstar", parents=[common], help="size of W* or W*(lambda)")
    s.add_argument("map")
    s.add_argument("--lambda", dest="lam")
    s.set_defaults(func=cmd_wstar)
    return ap


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    record = {"timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(), "command": args.command,
              "argv": list(sys.argv[1:] if argv is None else argv)}
    t0 = time.perf_counter()
    code = 0
    try:
        if args.workers < 1 or args.budget < 1:
            raise UsageError("--workers and --budget must be >= 1")
        if args.sample is not None and args.sample < 1:
            raise UsageError("--sample must be >= 1")
        if args.tolerance is not None and args.tolerance < 0:
            raise UsageError("--tolerance must be >= 0")
        with runtime.configure(workers=args.workers, budget=args.budget, tolerance=args.tolerance):
            fp, params, results, passed, rows = args.func(args)
        record.update(fingerprint=fp, parameters=params, results=results, passed=passed)
        sys.stdout.write(_table(rows))
        if passed is False:
            code = 1
    except CheckFailed as exc:
        record.update(passed=False, error={"type": "check", "message": str(exc)}, results=exc.results)
        print(f"error: {exc}", file=sys.stderr)
        code = 1
    except GowersError as exc:
        record.update(passed=False, error={"type": "GowersError", "message": str(exc)})
        print(f"error: {exc}", file=sys.stderr)
        code = 1
    except (UsageError, runtime.BudgetExceeded, ValueError) as exc:
        record.update(passed=None, error={"type": type(exc).__name__, "message": str(exc)})
        print(f"error: {exc}", file=sys.stderr)
        code = 2
    record["config"] = {"budget": args.budget, "workers": args.workers, "seed": args.seed,
                        "tolerance": args.tolerance if args.tolerance is not None else runtime.TOL_INEQUALITY,
                        "sample": args.sample}
    record["exit_code"] = code
    record["wall_time"] = time.perf_counter() - t0
    if args.out:
        _append_record(args.out, record)
    return code


if __name__ == "__main__":
    sys.exit(main())
