"""Command line entry point: ``stbatch {construct,serve,verify,bound,bench}``.

Code files hold the generator matrix as ``n N`` followed by ``n`` rows of
0/1 characters.  Constructions also write ``FILE.json`` beside the code with
what is needed to serve requests natively.  Indices on the command line and in
JSON output are 1-based; request vectors are hex.

Exit status: 0 success, 1 property or serving failure, 2 usage or I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import affine, partitions, qcalc, simplex
from .gf2 import BitMatrix
from .model import (
    RecoveryPlan,
    RequestMultiset,
    SystematicCode,
    default_workers,
    replication_code,
    solve_plan_exact,
    verify_batch_property,
    verify_plan,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _emit(obj: dict, as_json: bool, text: str | None = None) -> None:
    if as_json or text is None:
        print(json.dumps(obj, sort_keys=True))
    else:
        print(text)


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc.strerror}") from None


def _sidecar(path: str) -> Path:
    return Path(path + ".json")


def _load_code(path: str) -> tuple[SystematicCode, dict | None]:
    try:
        code = SystematicCode(BitMatrix.from_text(_read(path)))
    except ValueError as exc:
        raise UsageError(f"bad code file {path}: {exc}") from None
    meta = None
    if path != "-" and _sidecar(path).exists():
        meta = json.loads(_sidecar(path).read_text())
    return code, meta


def _parse_request(text: str, functional: bool, n: int | None = None) -> RequestMultiset:
    entries = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        target, sep, mult = item.partition(":")
        try:
            a = int(mult) if sep else 1
            if functional:
                value = int(target, 16)
            else:
                value = int(target) - 1
                if value < 0:
                    raise ValueError
        except ValueError:
            raise UsageError(f"bad request item {item!r}") from None
        entries.append((value, a))
    if not entries:
        raise UsageError("empty request")
    try:
        req = RequestMultiset(tuple(entries), functional=functional)
        if n is not None:
            req.demand_vectors(n)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return req


# -- construct ----------------------------------------------------------------


def _construct_simplex(args) -> int:
    code = simplex.simplex_code(args.n)
    _write(args.out, code.generator.to_text())
    if args.out and args.out != "-":
        _sidecar(args.out).write_text(json.dumps({"construction": "simplex", "n": args.n, "seed": args.seed}, sort_keys=True))
    report = {"construction": "simplex", "n": args.n, "length": code.length, "redundancy": code.redundancy, "seed": args.seed}
    print(json.dumps(report, sort_keys=True), file=sys.stderr)
    return EXIT_OK


def _construct_recursive(args) -> int:
    n0 = args.n - args.u * (args.v - 1)
    if n0 < 1:
        raise UsageError("need n - u(v-1) >= 1")
    if args.base == "replication":
        base = replication_code(n0, args.t)
    else:
        if not args.base_file:
            raise UsageError("--base file needs --base-file")
        base, _ = _load_code(args.base_file)
    try:
        family = partitions.random_complete_family(args.n, args.u, args.v, seed=args.seed, max_restarts=args.max_restarts)
        code = partitions.recursive_code(family, base)
    except partitions.FamilySearchExhausted as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_FAIL
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    _write(args.out, code.generator.to_text())
    family_text = family.to_text()
    if args.family_out:
        _write(args.family_out, family_text)
    if args.out and args.out != "-":
        meta = {
            "construction": "recursive",
            "n": args.n,
            "u": args.u,
            "v": args.v,
            "seed": args.seed,
            "family": family_text,
            "base": base.generator.to_text(),
        }
        _sidecar(args.out).write_text(json.dumps(meta, sort_keys=True))
    report = {
        "construction": "recursive",
        "n": args.n,
        "u": args.u,
        "v": args.v,
        "family_size": len(family),
        "base_redundancy": base.redundancy,
        "redundancy": code.redundancy,
        "seed": args.seed,
    }
    print(json.dumps(report, sort_keys=True), file=sys.stderr)
    return EXIT_OK


def _construct_affine(args) -> int:
    try:
        plane = affine.AffinePlane(args.q)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    d1, d2 = affine.default_parameters(args.t, args.q)
    p1 = d1 if args.p1 is None else args.p1
    p2 = d2 if args.p2 is None else args.p2
    try:
        built = affine.sample_construction(plane, p1, p2, seed=args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    _write(args.out, built.code.generator.to_text())
    if args.out and args.out != "-":
        meta = {"construction": "affine", **built.metadata()}
        _sidecar(args.out).write_text(json.dumps(meta, sort_keys=True))
    report = {
        "construction": "affine",
        "q": args.q,
        "p1": p1,
        "p2": p2,
        "redundancy": built.redundancy,
        "reference": 3 * p1 * args.q * args.q,
        "seed": args.seed,
    }
    print(json.dumps(report, sort_keys=True), file=sys.stderr)
    return EXIT_OK


# -- serve --------------------------------------------------------------------


def _cmd_serve(args) -> int:
    if args.simplex:
        if args.n is None:
            raise UsageError("--simplex needs --n")
        req = _parse_request(args.request, functional=True, n=args.n)
        code = simplex.simplex_code(args.n)
        try:
            result = simplex.serve_functional_routed(args.n, req)
        except simplex.CapabilityExceeded as exc:
            _emit({"ok": False, "error": str(exc), "seed": args.seed}, True)
            return EXIT_FAIL
        out = result.plan.to_json_obj(code, functional=True)
        out.update({"ok": True, "route": result.route, "seed": args.seed})
        _emit(out, True)
        return EXIT_OK

    code, meta = _load_code(args.code)
    req = _parse_request(args.request, functional=args.functional, n=code.n)
    construction = (meta or {}).get("construction")
    plan: RecoveryPlan | None
    method = "exact"
    try:
        if construction == "affine" and not args.functional and not args.exact:
            built = affine.RandomBatchCode.from_metadata(meta)
            method = "affine-lines"
            try:
                plan = affine.serve_requests(built, req, allow_systematic=args.allow_systematic)
            except affine.ServingFailed as exc:
                msg = f"index {exc.target + 1}: found {exc.found} of {exc.needed} recovering sets"
                _emit({"ok": False, "error": msg, "target": exc.target + 1, "found": exc.found, "seed": args.seed}, True)
                return EXIT_FAIL
        elif construction == "recursive" and not args.functional and not args.exact:
            family = partitions.PartitionFamily.from_text(meta["family"], meta["u"], meta["v"])
            base = SystematicCode(BitMatrix.from_text(meta["base"]))
            method = "recursive"
            plan = partitions.recursive_serve(family, base, req)
        elif construction == "simplex" and args.functional and not args.exact:
            method = "simplex"
            plan = simplex.serve_functional(code.n, req)
        else:
            plan = solve_plan_exact(code, req, args.max_set_size)
    except (ValueError, partitions.ServeFailure) as exc:
        _emit({"ok": False, "error": str(exc), "seed": args.seed}, True)
        return EXIT_FAIL
    if plan is None:
        _emit({"ok": False, "error": "no plan found", "method": method, "seed": args.seed}, True)
        return EXIT_FAIL
    check = verify_plan(code, req, plan)
    out = plan.to_json_obj(functional=args.functional)
    out.update({"ok": bool(check), "method": method, "seed": args.seed})
    if not check:
        out["error"] = check.reason
    _emit(out, True)
    return EXIT_OK if check else EXIT_FAIL


# -- verify -------------------------------------------------------------------


def _cmd_verify(args) -> int:
    code, _ = _load_code(args.code)
    try:
        report = verify_batch_property(
            code,
            args.s,
            args.t,
            args.mode,
            functional=args.functional,
            max_set_size=args.max_set_size,
            samples=args.samples,
            seed=args.seed,
            allow_fewer=args.allow_fewer,
            cap=args.cap,
            workers=args.workers,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    obj = report.to_json_obj()
    obj["seed"] = args.seed
    text = f"{'PASS' if report.passed else 'FAIL'} s={args.s} t={args.t} mode={args.mode} checked={report.checked} seed={args.seed}"
    if report.first_failure is not None:
        text += f" first_failure={obj['first_failure']}"
    _emit(obj, args.json, text)
    return EXIT_OK if report.passed else EXIT_FAIL


# -- bound --------------------------------------------------------------------


def _parse_factors(text: str | None, s: int) -> list[tuple[int, int]]:
    if not text:
        return qcalc.default_factorization(s)
    vs = [int(x) for x in text.split(",") if x.strip()]
    chain = []
    u = s
    for v in vs:
        if v < 1 or u % v:
            raise UsageError(f"factor {v} does not divide {u}")
        u //= v
        chain.append((u, v))
    return chain


def _cmd_bound(args) -> int:
    try:
        if args.kind == "lower":
            res = qcalc.lower_bound_redundancy(args.n, args.s, args.t, include_trivial=args.include_trivial)
        elif args.kind == "upper":
            base = args.base_r if args.base_r is not None else (args.t - 1) * args.n
            res = qcalc.recursive_upper_bound(args.n, args.t, _parse_factors(args.factors, args.s), base)
        else:
            if args.r is None or args.u is None or args.v is None:
                raise UsageError("--kind feasibility needs --r --u --v")
            ok = qcalc.ordered_batch_feasible(args.r, args.u, args.v, args.n)
            obj = {
                "kind": "feasibility",
                "feasible": ok,
                "lhs": qcalc.ordered_batch_monomials(args.r, args.u, args.v),
                "rhs": qcalc.binom(args.n, args.u),
                "source": "ordered-batch-monomial",
                "seed": args.seed,
            }
            _emit(obj, args.json, f"feasible={str(ok).lower()} source=ordered-batch-monomial")
            return EXIT_OK
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    obj = {"kind": res.kind, "value": str(res.value), "source": res.source, "seed": args.seed}
    _emit(obj, args.json, f"{res.kind} bound {res.value} (source {res.source})")
    return EXIT_OK


# -- bench --------------------------------------------------------------------


def _cmd_bench(args) -> int:
    start = time.perf_counter()
    if args.target == "affine":
        stats = affine.estimate_failure_rate(
            args.q,
            args.t,
            args.s,
            args.p1,
            args.p2,
            code_samples=args.codes,
            request_samples=args.requests,
            seed=args.seed,
            allow_systematic=args.allow_systematic,
            workers=args.workers,
        )
        obj = stats.to_json_obj()
        ok = stats.invalid_plans == 0
    else:
        import numpy as np

        from .model import sample_multiset

        rng = np.random.default_rng(args.seed)
        n = args.n
        t = args.t if args.t is not None else 1 << (n - 1)
        pool = list(range(1, 1 << n))
        routes: dict[str, int] = {}
        failures = 0
        for _ in range(args.samples):
            req = RequestMultiset.vectors(sample_multiset(rng, pool, args.s, t))
            try:
                route = simplex.serve_functional_routed(n, req).route
            except simplex.CapabilityExceeded:
                failures += 1
                continue
            routes[route] = routes.get(route, 0) + 1
        obj = {"n": n, "s": args.s, "t": t, "samples": args.samples, "failures": failures, "routes": routes, "seed": args.seed}
        ok = failures == 0
    if args.timing:
        obj["seconds"] = round(time.perf_counter() - start, 3)
    _emit(obj, True)
    return EXIT_OK if ok else EXIT_FAIL


# -- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stbatch", description="(s, t)-batch codes: construct, serve, verify, bound.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seed=True):
        if seed:
            p.add_argument("--seed", type=int, default=0)
        p.add_argument("--json", action="store_true", help="machine-readable output")

    con = sub.add_parser("construct", help="build a code")
    con_sub = con.add_subparsers(dest="kind", required=True)
    p = con_sub.add_parser("simplex")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--out")
    common(p)
    p.set_defaults(func=_construct_simplex)

    p = con_sub.add_parser("recursive")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--u", type=int, required=True)
    p.add_argument("--v", type=int, required=True)
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--base", choices=["replication", "file"], default="replication")
    p.add_argument("--base-file")
    p.add_argument("--max-restarts", type=int, default=20)
    p.add_argument("--out")
    p.add_argument("--family-out")
    common(p)
    p.set_defaults(func=_construct_recursive)

    p = con_sub.add_parser("affine")
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--p1", type=float)
    p.add_argument("--p2", type=float)
    p.add_argument("--out")
    common(p)
    p.set_defaults(func=_construct_affine)

    p = sub.add_parser("serve", help="find a recovery plan for one request")
    p.add_argument("--code", default="-", help="code file ('-' for stdin)")
    p.add_argument("--simplex", action="store_true", help="serve on the simplex code of dimension --n")
    p.add_argument("--n", type=int)
    p.add_argument("--request", required=True, help='"i:a,i:a" (1-based indices) or hex vectors with --functional/--simplex')
    p.add_argument("--functional", action="store_true")
    p.add_argument("--exact", action="store_true", help="ignore construction metadata and use the exact solver")
    p.add_argument("--allow-systematic", action="store_true")
    p.add_argument("--max-set-size", type=int)
    common(p)
    p.set_defaults(func=_cmd_serve)

    p = sub.add_parser("verify", help="check the (s, t)-batch property")
    p.add_argument("--code", default="-")
    p.add_argument("--s", type=int, required=True)
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--mode", choices=["exhaustive", "sampled"], default="exhaustive")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--functional", action="store_true")
    p.add_argument("--max-set-size", type=int)
    p.add_argument("--allow-fewer", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--cap", type=int, default=10**6)
    p.add_argument("--workers", type=int, default=None)
    common(p)
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("bound", help="redundancy bounds")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--s", type=int, default=1)
    p.add_argument("--t", type=int, default=2)
    p.add_argument("--kind", choices=["lower", "upper", "feasibility", "feasible"], default="lower")
    p.add_argument("--include-trivial", action="store_true")
    p.add_argument("--factors", help="comma-separated v_i of the partition chain (upper)")
    p.add_argument("--base-r", type=int, help="known t-PIR redundancy (upper); default (t-1)*n")
    p.add_argument("--r", type=int)
    p.add_argument("--u", type=int)
    p.add_argument("--v", type=int)
    common(p)
    p.set_defaults(func=_cmd_bound)

    p = sub.add_parser("bench", help="empirical runs")
    p.add_argument("target", choices=["affine", "simplex"])
    p.add_argument("--q", type=int, default=11)
    p.add_argument("--n", type=int, default=5)
    p.add_argument("--t", type=int)
    p.add_argument("--s", type=int, default=1)
    p.add_argument("--p1", type=float)
    p.add_argument("--p2", type=float)
    p.add_argument("--codes", type=int, default=50)
    p.add_argument("--requests", type=int, default=100)
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--allow-systematic", action="store_true")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--timing", action="store_true", help="include wall time (breaks byte-identical output)")
    common(p)
    p.set_defaults(func=_cmd_bench)
    return parser


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if getattr(args, "workers", 1) is None:
        args.workers = default_workers()
    if args.command == "bench" and args.target == "affine" and args.t is None:
        args.t = 3
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"stbatch: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
