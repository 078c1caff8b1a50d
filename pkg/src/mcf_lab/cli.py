"""Command-line entry point: ``mcf-lab expand | verify | construct``.

Exit codes: 0 every row holds, 1 usage error, 2 precision exhausted,
3 a bound row is violated.
"""
from __future__ import annotations

import argparse
import json
import os
import random
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from . import analysis as an
from .corpus import random_pair, random_triple
from .engine import ExpansionTrace, Status, from_digits, identity_suite
from .errors import InsufficientPrecision, InvalidPlan, MCFError
from .oracle import thread_cap
from .padic import PAdicScalar, check_prime, parse_scalar, split_p_part
from .report import BoundReport

EXIT_OK, EXIT_USAGE, EXIT_PRECISION, EXIT_VIOLATION = 0, 1, 2, 3

SUITES = ("identities", "rate", "upper", "growth", "heights", "steps", "dependence")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass
class RunConfig:
    p: int
    alpha: Optional[str] = None
    beta: Optional[str] = None
    depth: int = 20
    seed: int = 0
    fmt: str = "json"
    out: Optional[str] = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        try:
            check_prime(self.p)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        if self.depth < 0:
            raise UsageError("depth must be >= 0")
        if self.fmt not in ("json", "csv"):
            raise UsageError("format must be json or csv")


# input handling

def parse_inputs(cfg: RunConfig) -> tuple[PAdicScalar, PAdicScalar]:
    if cfg.alpha is None or cfg.beta is None:
        raise UsageError("--alpha and --beta are required")
    try:
        return parse_scalar(cfg.alpha, cfg.p), parse_scalar(cfg.beta, cfg.p)
    except MCFError:
        raise
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def parse_ell(text: str, length: int) -> tuple[int, ...]:
    """``"1,1,1,..."`` or ``"1,2,3,..."``; a trailing ``...`` continues the
    arithmetic progression of the last two entries (or repeats a single one)."""
    parts = [s.strip() for s in text.split(",") if s.strip()]
    dots = bool(parts) and parts[-1] == "..."
    if dots:
        parts = parts[:-1]
    try:
        vals = [int(s) for s in parts]
    except ValueError:
        raise UsageError(f"cannot parse ell sequence {text!r}") from None
    if not vals:
        raise UsageError("ell needs at least one entry")
    if dots and len(vals) >= 2:
        step = vals[-1] - vals[-2]
        while len(vals) < length:
            vals.append(vals[-1] + step)
    return tuple(vals)


def trace_from_inputs(cfg: RunConfig) -> ExpansionTrace:
    alpha, beta = parse_inputs(cfg)
    source = {"alpha": cfg.alpha, "beta": cfg.beta, "depth": cfg.depth}
    return ExpansionTrace.from_inputs(alpha, beta, cfg.depth, keep_quotients=True, source=source)


def load_trace(path: str) -> ExpansionTrace:
    """Rebuild a trace from its JSON file; digits are re-validated against the inputs."""
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if "trace" in data:  # output of construct
        data = data["trace"]
    p = int(data["p"])
    src = data.get("input") or {}
    a = [Fraction(s["a"]) for s in data["steps"]]
    b = [Fraction(s["b"]) for s in data["steps"]]
    if "proxy_index" in src:
        e = from_digits(p, a, b, Status.DEPTH_LIMITED)
        return ExpansionTrace(e, proxy_index=int(src["proxy_index"]), source=src)
    cfg = RunConfig(p, src.get("alpha"), src.get("beta"), int(src.get("depth", len(a))))
    trace = trace_from_inputs(cfg)
    if trace.expansion.digit_pairs() != list(zip(a, b)):
        raise UsageError(f"digits in {path} do not match a fresh expansion of its inputs")
    return trace


def plan_from_args(args, length: int) -> Optional[an.GrowthPlan]:
    chosen = [x for x in (args.ell, args.D, args.unit_k or None) if x is not None]
    if len(chosen) > 1:
        raise UsageError("choose one of --ell, --D, --unit-k")
    if args.ell is not None:
        return an.GrowthPlan(ell=parse_ell(args.ell, length), slack=args.slack)
    if args.D is not None:
        return an.default_degree_plan(args.D, slack=args.slack)
    if args.unit_k:
        return an.GrowthPlan.unit_k(length)
    return None


# suites

def _rational(x: PAdicScalar) -> Optional[Fraction]:
    return x.value if x.is_exact else None


def _rational_pair(trace: ExpansionTrace) -> Optional[tuple[Fraction, Fraction]]:
    if trace.proxy_index is not None:
        return None
    a, b = _rational(trace.alpha), _rational(trace.beta)
    return None if a is None or b is None else (a, b)


def triple_for(alpha: Fraction, beta: Fraction, p: int) -> tuple[Fraction, Fraction, int]:
    """(x0, y0, z0) with x0/z0 = alpha, y0/z0 = beta, z0 an integer prime to p."""
    z0 = alpha.denominator * beta.denominator
    _, z0 = split_p_part(z0, p)
    return alpha * z0, beta * z0, z0


def default_relation(alpha: Fraction, beta: Fraction) -> tuple[Fraction, Fraction, Fraction]:
    """A linear relation A alpha + B beta + C = 0 satisfied by a rational pair."""
    if alpha == 0 and beta == 0:
        return Fraction(1), Fraction(0), Fraction(0)
    return beta, -alpha, Fraction(0)


def checked_index(trace: ExpansionTrace) -> int:
    """Last index to check: the requested n for constructions, else the last digit."""
    src = trace.source
    if trace.proxy_index is not None and "margin" in src:
        return trace.proxy_index - int(src["margin"])
    return trace.length - 1


def run_suite(name: str, trace: ExpansionTrace, depth: int,
              relation: Optional[tuple] = None) -> Optional[BoundReport]:
    """One suite on one trace; None when the suite does not apply to the input."""
    p = trace.p
    last = checked_index(trace)
    if name == "identities":
        return identity_suite(trace, last)
    if name == "rate":
        rep = an.check_rate_theorem(trace, last)
        src_plan = trace.source.get("plan", {})
        if "k" in src_plan and set(src_plan["k"]) == {1}:
            rep.extend(an.check_tightness(trace, last))
        return rep
    if name == "upper":
        return an.check_upper_bound(trace, last)
    if name == "growth":
        return an.growth_bound(trace, last)
    pair = _rational_pair(trace)
    if name == "heights":
        if pair is None or last < 1:
            return None
        triples = an.convergent_sequence(trace, last)
        rep = BoundReport("heights", params={"p": p})
        for n in range(0, min(3, last - 1) + 1):
            rep.extend(an.check_height_floor(pair[0], pair[1], p, n, triples))
        return rep
    if name == "steps":
        if pair is None:
            return None
        return an.step_bound(*triple_for(pair[0], pair[1], p), p).report
    if name == "dependence":
        if relation is None:
            if pair is None:
                return None
            relation = default_relation(*pair)
        return an.linear_dependence_monitor(trace, relation, depth)
    raise UsageError(f"unknown suite {name!r}")


def _batch_job(job) -> dict:
    suites, p, seed, depth, index = job
    rng = random.Random(f"{seed}:{index}")
    out = {}
    if "steps" in suites:
        x0, y0, z0 = random_triple(rng, p)
        out["steps"] = an.step_bound(x0, y0, z0, p).report
    rest = [s for s in suites if s != "steps"]
    if rest:
        alpha, beta = random_pair(rng, p)
        trace = ExpansionTrace.from_inputs(PAdicScalar(p, alpha), PAdicScalar(p, beta), depth,
                                           source={"alpha": str(alpha), "beta": str(beta)})
        for s in rest:
            rep = run_suite(s, trace, depth)
            if rep is not None:
                out[s] = rep
    return out


def run_batch(suites, p: int, seed: int, depth: int, count: int) -> dict[str, BoundReport]:
    jobs = [(tuple(suites), p, seed, depth, i) for i in range(count)]
    workers = min(thread_cap(), max(1, count))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(_batch_job, jobs))
    else:
        parts = [_batch_job(j) for j in jobs]
    merged: dict[str, BoundReport] = {}
    for i, part in enumerate(parts):
        for name, rep in part.items():
            agg = merged.setdefault(name, BoundReport(name, params={"p": p, "seed": seed,
                                                                    "batch": count}))
            for row in rep.rows:
                row.note = (row.note + "; " if row.note else "") + f"case {i}"
            agg.extend(rep)
    for name, agg in merged.items():
        cases = {r.note.rsplit("case ", 1)[1] for r in agg.rows}
        failed = {r.note.rsplit("case ", 1)[1] for r in agg.rows if not r.satisfied}
        agg.params["cases"] = len(cases)
        agg.params["cases_passing"] = len(cases - failed)
    return merged


# output

def render(obj, fmt: str) -> str:
    if isinstance(obj, BoundReport):
        return obj.to_json() if fmt == "json" else obj.to_csv()
    if fmt == "csv":
        raise UsageError("this output is only available as json")
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def emit(text: str, out: Optional[str]) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def trace_csv(trace: ExpansionTrace) -> str:
    import csv
    import io
    d = trace.to_dict()
    buf = io.StringIO()
    cols = ["n", "a", "b", "A", "B", "C", "tildeA", "tildeB", "h", "k", "K", "vVa", "vVb"]
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\r\n")
    w.writeheader()
    for s in d["steps"]:
        w.writerow(s)
    return buf.getvalue()


# commands

def cmd_expand(args) -> int:
    cfg = RunConfig(args.p, args.alpha, args.beta, args.depth, fmt=args.format, out=args.out)
    trace = trace_from_inputs(cfg)
    emit(trace.to_json() if cfg.fmt == "json" else trace_csv(trace), cfg.out)
    if trace.expansion.status is Status.PRECISION_EXHAUSTED:
        print(f"precision exhausted after {trace.length} certified digit pairs", file=sys.stderr)
        return EXIT_PRECISION
    return EXIT_OK


def cmd_verify(args) -> int:
    suites = list(SUITES) if args.suite == "all" else [args.suite]
    relation = None
    if args.relation:
        try:
            relation = tuple(Fraction(x) for x in args.relation.split(","))
        except ValueError:
            raise UsageError(f"cannot parse relation {args.relation!r}") from None
        if len(relation) != 3:
            raise UsageError("--relation needs three rationals A,B,C")
    if args.batch is not None:
        if args.batch < 1:
            raise UsageError("--batch must be >= 1")
        check_prime(args.p)
        reports = run_batch(suites, args.p, args.seed, args.depth, args.batch)
    else:
        if args.trace:
            trace = load_trace(args.trace)
        else:
            length = args.n + 1
            plan = plan_from_args(args, length + 200)
            if plan is not None:
                margin = args.margin if args.margin is not None else an.default_margin(plan)
                check_prime(args.p)
                trace = an.construct_fast(plan, args.n, args.p, args.seed, margin)
            else:
                cfg = RunConfig(args.p, args.alpha, args.beta, args.depth)
                trace = trace_from_inputs(cfg)
        reports = {}
        for s in suites:
            rep = run_suite(s, trace, trace.length - 1, relation)
            if rep is not None:
                reports[s] = rep
    return write_reports(reports, args)


def write_reports(reports: dict[str, BoundReport], args) -> int:
    ext = "json" if args.format == "json" else "csv"
    if args.out:
        os.makedirs(args.out, exist_ok=True)
    for name, rep in reports.items():
        text = render(rep, args.format)
        if args.out:
            emit(text, os.path.join(args.out, f"{name.replace(' ', '_')}.{ext}"))
        else:
            emit(text, None)
        print(rep, file=sys.stderr)
    ok = all(r.all_hold for r in reports.values())
    return EXIT_OK if ok else EXIT_VIOLATION


def cmd_construct(args) -> int:
    check_prime(args.p)
    length = args.n + (args.margin or 40) + 2
    plan = plan_from_args(args, length)
    if plan is None:
        raise UsageError("construct needs --ell, --D or --unit-k")
    margin = args.margin if args.margin is not None else an.default_margin(plan)
    trace = an.construct_fast(plan, args.n, args.p, args.seed, margin)
    if plan.ell is not None:
        reports = [an.check_growth_plan(trace, plan, args.n)]
    elif args.D is not None:
        reports = list(an.fast_relation_suite(args.D, plan, args.n, args.p, args.seed, margin,
                                              trace=trace))
    else:
        reports = [an.check_rate_theorem(trace, args.n), an.check_tightness(trace, args.n)]
    if args.format == "csv":
        text = "".join(r.to_csv() for r in reports)
    else:
        text = json.dumps({"trace": trace.to_dict(), "reports": [r.to_dict() for r in reports]},
                          indent=2, sort_keys=True) + "\n"
    emit(text, args.out)
    for r in reports:
        print(r, file=sys.stderr)
    return EXIT_OK if all(r.all_hold for r in reports) else EXIT_VIOLATION


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--p", type=int, default=5, help="odd prime (default 5)")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--out", help="output file (expand, construct) or directory (verify)")
    common.add_argument("--seed", type=int, default=0)

    inputs = argparse.ArgumentParser(add_help=False)
    inputs.add_argument("--alpha", help="num/den or root:c0,...,cd@seed@precision[+q|*q...]")
    inputs.add_argument("--beta")
    inputs.add_argument("--depth", type=int, default=20)

    plan = argparse.ArgumentParser(add_help=False)
    plan.add_argument("--ell", help='plan sequence, e.g. "1,1,1,..." or "1,2,3,..."')
    plan.add_argument("--D", type=int, help="degree-D construction")
    plan.add_argument("--unit-k", action="store_true", help="k_n = 1 for every n")
    plan.add_argument("--n", type=int, default=20, help="last checked index")
    plan.add_argument("--margin", type=int, help="proxy depth beyond n")
    plan.add_argument("--slack", type=int, default=0, help="random excess per k_n")

    parser = _Parser(prog="mcf-lab", description="p-adic Jacobi-Perron expansions and bounds")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_exp = sub.add_parser("expand", parents=[common, inputs], help="expand a pair and write its trace")
    p_exp.set_defaults(func=cmd_expand)

    p_ver = sub.add_parser("verify", parents=[common, inputs, plan], help="run bound suites")
    p_ver.add_argument("--suite", choices=SUITES + ("all",), default="all")
    p_ver.add_argument("--batch", type=int, help="run on this many seeded random inputs")
    p_ver.add_argument("--trace", help="re-verify a trace file written by expand")
    p_ver.add_argument("--relation", help="A,B,C with A alpha + B beta + C = 0")
    p_ver.set_defaults(func=cmd_verify)

    p_con = sub.add_parser("construct", parents=[common, plan], help="build a planned expansion")
    p_con.set_defaults(func=cmd_construct)
    return parser


def main(argv=None) -> int:
    if hasattr(sys, "set_int_max_str_digits"):
        sys.set_int_max_str_digits(0)  # exact serialization of deep convergents
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "depth", 0) is not None and getattr(args, "depth", 0) < 0:
            raise UsageError("depth must be >= 0")
        return args.func(args)
    except (UsageError, InvalidPlan) as exc:
        print(f"mcf-lab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InsufficientPrecision as exc:
        print(f"mcf-lab: precision exhausted: {exc}", file=sys.stderr)
        return EXIT_PRECISION
    except (ValueError, OSError) as exc:
        print(f"mcf-lab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
