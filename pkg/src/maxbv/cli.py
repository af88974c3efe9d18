"""Command-line interface: ``maxbv <verb> ...``.

Exit status is 0 on success, 1 when a check fails and 2 on usage or input
errors. Files named by ``--out`` are written atomically; without ``--out``
output goes to stdout.

Rational literals may be written ``p/q``, as integers, or as decimals (``0.1``
is exactly 1/10). ``inf`` is accepted wherever a radius may be unbounded, and
list options take comma-separated values or a power range ``2^-3..2^-6``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import re
import sys
import tempfile
from fractions import Fraction

from . import __version__
from .core import StepFn, as_rat, rat_str
from .errors import BudgetExceeded, MaxBVError
from .grid2d import GridFn2D, blowup_experiment, discrete_tv, growth_table_2d
from .maximal1d import (
    check_bd_bound,
    check_convergence,
    check_counterexample,
    check_poincare,
    check_weak_type,
    growth_table_1d,
    maximal_eval,
    maximal_profile,
)
from .orlicz import luxemburg_norm
from .verify import SUITES, CheckReport, replay, run_suite


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# literals and IO
# ---------------------------------------------------------------------------

_POW = re.compile(r"^\s*(\d+)\s*\^\s*(-?\d+)\s*$")


def parse_rat(s: str) -> Fraction:
    m = _POW.match(s)
    if m:
        return Fraction(int(m.group(1))) ** int(m.group(2))
    try:
        return as_rat(s.strip())
    except (ValueError, ZeroDivisionError, TypeError) as e:
        raise UsageError(f"not a rational literal: {s!r}") from e


def parse_radius(s: str):
    if s.strip().lower() in ("inf", "infinity", "oo"):
        return None
    R = parse_rat(s)
    if R <= 0:
        raise UsageError(f"radius must be positive, got {s}")
    return R


def parse_list(s: str) -> list:
    """Comma list, or ``b^e1..b^e2`` stepping the exponent by one."""
    if ".." in s:
        a, b = s.split("..", 1)
        ma, mb = _POW.match(a), _POW.match(b)
        if not (ma and mb) or ma.group(1) != mb.group(1):
            raise UsageError(f"range must look like 2^-3..2^-6, got {s!r}")
        base, e1, e2 = int(ma.group(1)), int(ma.group(2)), int(mb.group(2))
        step = 1 if e2 >= e1 else -1
        return [Fraction(base) ** e for e in range(e1, e2 + step, step)]
    return [parse_rat(x) for x in s.split(",") if x.strip()]


def _read_json(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from e
    except json.JSONDecodeError as e:
        raise UsageError(f"{path} is not valid JSON: {e}") from e


def _read_fn(path: str):
    d = _read_json(path)
    return GridFn2D.from_dict(d) if "nx" in d else StepFn.from_dict(d)


def _read_step(path: str) -> StepFn:
    f = _read_fn(path)
    if not isinstance(f, StepFn):
        raise UsageError(f"{path} holds a grid, a 1D step function is required")
    return f


def _read_grid(path: str) -> GridFn2D:
    f = _read_fn(path)
    if not isinstance(f, GridFn2D):
        raise UsageError(f"{path} holds a step function, a grid is required")
    return f


def write_atomic(path: str, text: str) -> None:
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".maxbv-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(text: str, out: str | None) -> None:
    if out:
        write_atomic(out, text)
    else:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")


def _csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


def _dict_rows_csv(rows: list, tag: str) -> str:
    cols = list(rows[0]) if rows else []
    out = [cols + ["tag"]]
    for r in rows:
        out.append([_cell(r[c]) for c in cols] + [tag])
    return _csv(out)


def _cell(v):
    if isinstance(v, Fraction):
        return rat_str(v)
    if isinstance(v, float):
        return repr(v)
    return v


def _report_out(rep: CheckReport, out: str | None) -> int:
    _emit(json.dumps(rep.to_dict(), indent=1, sort_keys=True), out)
    print(rep.line(), file=sys.stderr)
    return 0 if rep.passed else 1


# ---------------------------------------------------------------------------
# verbs
# ---------------------------------------------------------------------------


def cmd_eval(a) -> int:
    f = _read_step(a.f)
    res = maximal_eval(f, parse_rat(a.x), parse_radius(a.R))
    if a.json:
        text = json.dumps({"x": rat_str(parse_rat(a.x)), "value": rat_str(res.value), "value_decimal": float(res.value),
                           "witness": [rat_str(res.witness.lo), rat_str(res.witness.hi)],
                           "degenerate": res.degenerate}, sort_keys=True)
    else:
        text = (f"{rat_str(res.value)}\t{float(res.value)!r}\n"
                f"witness [{rat_str(res.witness.lo)},{rat_str(res.witness.hi)}]")
    _emit(text, a.out)
    return 0


def cmd_profile(a) -> int:
    f = _read_step(a.f)
    try:
        prof = maximal_profile(f, parse_radius(a.R), a.tol, var_tol=a.var_tol)
        status = 0
    except BudgetExceeded as e:
        prof, status = e.partial, 1
        print(f"warning: {e}; writing the partial profile", file=sys.stderr)
    _emit(_csv(prof.csv_rows(a.tag)), a.out)
    print(f"l1={prof.l1_estimate!r} l1_error={prof.l1_error:.3g} variation_lower={rat_str(prof.variation_lower)} "
          f"nodes={len(prof.nodes)} depth={prof.refinement_depth}", file=sys.stderr)
    return status


def cmd_check(a) -> int:
    k = a.kind
    if k == "bd":
        rep = check_bd_bound(_read_step(a.f), _finite(a.R), a.tol)
    elif k == "weak":
        rep = check_weak_type(_read_step(a.f), parse_list(a.t), a.tol)
    elif k == "poincare":
        rep = check_poincare(_read_step(a.f), _finite(a.R), a.tol)
    elif k == "counterexample":
        rep = check_counterexample(a.n_max, parse_rat(a.R), a.tol, baseline=a.baseline)
    elif k == "convergence":
        rep = check_convergence(_read_step(a.f), parse_list(a.scales), a.tol)
    elif k == "growth1d":
        rows, rep = growth_table_1d(_read_step(a.f), parse_list(a.Rs), a.tol)
        if a.table:
            write_atomic(a.table, _csv([("R_exact", "R", "l1_MRf", "ratio", "tag")]
                                       + [(rat_str(R), repr(float(R)), repr(l1), repr(q), rep.claim_id)
                                          for R, l1, q in rows]))
    else:  # pragma: no cover - argparse restricts choices
        raise UsageError(k)
    return _report_out(rep, a.out)


def _finite(s):
    R = parse_radius(s)
    if R is None:
        raise UsageError("this check needs a finite R")
    return R


def cmd_grid(a) -> int:
    if a.kind == "blowup":
        rows, rep = blowup_experiment([float(d) for d in parse_list(a.deltas)], float(_finite(a.R)), a.n)
        _emit(_dict_rows_csv(rows, rep.claim_id), a.out)
        if a.report:
            write_atomic(a.report, json.dumps(rep.to_dict(), indent=1, sort_keys=True))
        print(rep.line(), file=sys.stderr)
        return 0 if rep.passed else 1
    if a.kind == "growth":
        rows, rep = growth_table_2d(_read_grid(a.f), [float(R) for R in parse_list(a.Rs)])
        _emit(_dict_rows_csv(rows, rep.claim_id), a.out)
        if a.report:
            write_atomic(a.report, json.dumps(rep.to_dict(), indent=1, sort_keys=True))
        print(rep.line(), file=sys.stderr)
        return 0 if rep.passed else 1
    g = _read_grid(a.f)
    th = [float(t) for t in parse_list(a.thresholds)] if a.thresholds else None
    res = discrete_tv(g, th)
    _emit(json.dumps({"tv": res.tv, "coarea_tv": res.coarea_tv, "levels_used": res.levels_used}, sort_keys=True), a.out)
    return 0


def cmd_orlicz(a) -> int:
    g = _read_fn(a.f)
    r = parse_rat(a.r)
    norm = luxemburg_norm(g, r, a.tol)
    _emit(json.dumps({"luxemburg_norm": norm, "r": rat_str(r), "tol": a.tol}, sort_keys=True), a.out)
    return 0


def cmd_suite(a) -> int:
    res = run_suite(a.name, a.seed)
    _emit(res.to_json(), a.out)
    for r in res.failures():
        print(r.line(), file=sys.stderr)
    print(f"{res.suite}: {len(res.reports) - len(res.failures())}/{len(res.reports)} passed "
          f"in {res.wall_time:.1f}s", file=sys.stderr)
    return 0 if res.passed else 1


def cmd_replay(a) -> int:
    d = _read_json(a.report)
    reports = d["reports"] if "reports" in d else [d]
    if a.failed_only:
        reports = [r for r in reports if not r.get("passed", False)]
    out, ok = [], True
    for r in reports:
        new = replay(r)
        same = new.passed == r.get("passed")
        ok &= new.passed
        out.append({"claim_id": new.claim_id, "passed": new.passed, "matches_original": same,
                    "report": new.to_dict()})
        print(f"{new.line()}{'' if same else ' (differs from the stored report)'}", file=sys.stderr)
    _emit(json.dumps(out, indent=1, sort_keys=True), a.out)
    return 0 if ok else 1


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(2)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="maxbv", description="Local maximal functions: exact 1D evaluation, profiles, checks and 2D grids.")
    p.add_argument("--version", action="version", version=f"maxbv {__version__}")
    sub = p.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    e = sub.add_parser("eval", help="exact M_R f(x) with a witness interval")
    e.add_argument("--f", required=True, help="step function JSON")
    e.add_argument("--R", default="inf")
    e.add_argument("--x", required=True)
    e.add_argument("--json", action="store_true")
    e.add_argument("--out")
    e.set_defaults(func=cmd_eval)

    pr = sub.add_parser("profile", help="adaptive profile of M_R f as CSV")
    pr.add_argument("--f", required=True)
    pr.add_argument("--R", default="inf")
    pr.add_argument("--tol", type=float, default=1e-6)
    pr.add_argument("--var-tol", type=float, default=None)
    pr.add_argument("--tag", default="plumbing")
    pr.add_argument("--out")
    pr.set_defaults(func=cmd_profile)

    c = sub.add_parser("check", help="run one quantitative check")
    csub = c.add_subparsers(dest="kind", required=True, parser_class=_Parser)
    for name, needs_f in (("bd", True), ("weak", True), ("poincare", True), ("counterexample", False),
                          ("convergence", True), ("growth1d", True)):
        q = csub.add_parser(name)
        if needs_f:
            q.add_argument("--f", required=True)
        q.add_argument("--tol", type=float, default=1e-3 if name in ("counterexample", "convergence") else 1e-6)
        q.add_argument("--out")
        if name in ("bd", "poincare"):
            q.add_argument("--R", required=True)
        if name == "weak":
            q.add_argument("--t", required=True, help="thresholds, e.g. 1/2,1,2")
        if name == "counterexample":
            q.add_argument("--R", default="1/4")
            q.add_argument("--n-max", type=int, default=20)
            q.add_argument("--baseline", type=int, default=10)
        if name == "convergence":
            q.add_argument("--scales", default="2^-1..2^-8")
        if name == "growth1d":
            q.add_argument("--Rs", default="1,4,16,64")
            q.add_argument("--table", help="also write the growth table as CSV")
    c.set_defaults(func=cmd_check)

    g = sub.add_parser("grid", help="2D grid experiments")
    gsub = g.add_subparsers(dest="kind", required=True, parser_class=_Parser)
    b = gsub.add_parser("blowup")
    b.add_argument("--deltas", default="2^-3..2^-6")
    b.add_argument("--R", default="4")
    b.add_argument("--n", type=int, default=512)
    b.add_argument("--out")
    b.add_argument("--report")
    gr = gsub.add_parser("growth")
    gr.add_argument("--f", required=True)
    gr.add_argument("--Rs", default="1,4,16,64")
    gr.add_argument("--out")
    gr.add_argument("--report")
    t = gsub.add_parser("tv")
    t.add_argument("--f", required=True)
    t.add_argument("--thresholds")
    t.add_argument("--out")
    g.set_defaults(func=cmd_grid)

    o = sub.add_parser("orlicz", help="Orlicz norms")
    osub = o.add_subparsers(dest="kind", required=True, parser_class=_Parser)
    n = osub.add_parser("norm")
    n.add_argument("--f", required=True)
    n.add_argument("--r", default="1")
    n.add_argument("--tol", type=float, default=1e-10)
    n.add_argument("--out")
    o.set_defaults(func=cmd_orlicz)

    s = sub.add_parser("suite", help="run a verification suite")
    s.add_argument("name", choices=list(SUITES) + ["all"])
    s.add_argument("--seed", type=int, default=7)
    s.add_argument("--out")
    s.set_defaults(func=cmd_suite)

    r = sub.add_parser("replay", help="re-run the checks stored in a report or suite JSON")
    r.add_argument("report")
    r.add_argument("--failed-only", action="store_true")
    r.add_argument("--out")
    r.set_defaults(func=cmd_replay)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as e:
        print(f"maxbv: error: {e}", file=sys.stderr)
        return 2
    except BudgetExceeded as e:
        print(f"maxbv: {e}", file=sys.stderr)
        return 1
    except (MaxBVError, ValueError, KeyError) as e:
        print(f"maxbv: error: {type(e).__name__}: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
