"""Exact local uncentered maximal function in one dimension.

For a step function the average of ``|f|`` over ``[a, b]`` is
``(F(b) - F(a)) / (b - a)`` with ``F`` piecewise linear, so on every cell
(``a`` in one piece, ``b`` in another) the average is a ratio of affine
functions of ``(a, b)`` and attains its maximum at a vertex of the cell's
feasible polygon. The vertices come in two families:

* intervals not touching ``x``: pairs of breakpoints ``(p_i, p_j)`` and the
  length-``R`` intervals ``(p_i, p_i + R)``, ``(p_j - R, p_j)``. These do not
  depend on the query point, only on whether they cover it, so their upper
  envelope is tabulated once per ``(f, R)``;
* intervals with an endpoint at ``x``: ``(p_i, x)``, ``(x, p_j)``,
  ``(x - R, x)``, ``(x, x + R)``, enumerated per query.

All arithmetic is exact (``gmpy2.mpq`` internally, ``Fraction`` at the API).
"""

from __future__ import annotations

import bisect
import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np
from gmpy2 import mpq

from .core import (
    Interval,
    StepFn,
    as_rat,
    bv_norm,
    indicator,
    integral_abs,
    lp_power_sum,
    pos_neg_parts,
    rat_str,
    support_neighborhood,
    support_neighborhood_length,
    variation,
)
from .errors import BudgetExceeded, MarginTooSmall, NonPositiveR, OutsideDomain

INF = math.inf

__all__ = [
    "INF",
    "MaxQueryResult",
    "SampledProfile",
    "CheckReport",
    "MaximalEvaluator",
    "evaluator",
    "maximal_eval",
    "maximal_profile",
    "indicator_l1_closed_form",
    "check_indicator_profile",
    "bd_constant",
    "log_plus",
    "check_bd_bound",
    "check_weak_type",
    "sampled_rearrangement",
    "check_poincare",
    "dyadic_counterexample",
    "counterexample_bound",
    "check_counterexample",
    "check_convergence",
    "growth_table_1d",
]


def _to_frac(q) -> Fraction:
    return Fraction(int(q.numerator), int(q.denominator))


def _norm_R(R):
    """``None`` for an unrestricted operator, else a positive Fraction."""
    if R is None:
        return None
    if isinstance(R, float) and math.isinf(R):
        if R < 0:
            raise NonPositiveR("R must be positive")
        return None
    if isinstance(R, str) and R.strip().lower() in ("inf", "infinity", "oo"):
        return None
    R = as_rat(R)
    if R <= 0:
        raise NonPositiveR(f"R must be positive, got {R}")
    return R


def log_plus(x) -> float:
    """``max(0, ln x)``; infinite for an unrestricted radius."""
    if x is None or (isinstance(x, float) and math.isinf(x)):
        return INF
    x = float(x)
    return math.log(x) if x > 1 else 0.0


def max_depth_default() -> int:
    return int(os.environ.get("MAXBV_MAX_DEPTH", "24"))


@dataclass(frozen=True)
class MaxQueryResult:
    value: Fraction
    witness: Interval
    degenerate: bool = False


class MaximalEvaluator:
    """Exact ``M_R f`` at arbitrary rational points for one fixed ``(f, R)``.

    ``R=None`` (or ``math.inf``) gives the unrestricted uncentered operator.
    Intervals are confined to the domain of ``f``.
    """

    def __init__(self, f: StepFn, R=None):
        self.f = f
        self.R = _norm_R(R)
        g = f.abs()
        self.g = g
        self._R = None if self.R is None else mpq(self.R)
        self._pts = [mpq(p) for p in g.points]
        self._vals = [mpq(v) for v in g.values]
        F = [mpq(0)]
        for k, v in enumerate(self._vals):
            F.append(F[-1] + v * (self._pts[k + 1] - self._pts[k]))
        self._F = F
        self._sup = max(self._vals)
        self._build_envelope()

    # -- antiderivative of |f| ----------------------------------------------
    def _Fat(self, x):
        pts = self._pts
        k = bisect.bisect_right(pts, x) - 1
        if k >= len(self._vals):
            k = len(self._vals) - 1
        return self._F[k] + self._vals[k] * (x - pts[k])

    def _static_candidates(self):
        pts, F, R = self._pts, self._F, self._R
        n = len(pts)
        lo, hi = pts[0], pts[-1]
        for i in range(n):
            for j in range(i + 1, n):
                d = pts[j] - pts[i]
                if R is not None and d > R:
                    break
                yield pts[i], pts[j], (F[j] - F[i]) / d
        if R is not None:
            for i in range(n):
                b = pts[i] + R
                if b < hi:
                    yield pts[i], b, (self._Fat(b) - F[i]) / R
                a = pts[i] - R
                if a > lo:
                    yield a, pts[i], (F[i] - self._Fat(a)) / R

    def _build_envelope(self):
        cands = list(self._static_candidates())
        ends = sorted({c[0] for c in cands} | {c[1] for c in cands})
        idx = {e: k for k, e in enumerate(ends)}
        at_point = [None] * len(ends)
        in_gap = [None] * max(len(ends) - 1, 0)
        for a, b, v in cands:
            cand = (v, b - a, a, b)
            ka, kb = idx[a], idx[b]
            for k in range(ka, kb + 1):
                if _beats(cand, at_point[k]):
                    at_point[k] = cand
            for k in range(ka, kb):
                if _beats(cand, in_gap[k]):
                    in_gap[k] = cand
        self._ends, self._at_point, self._in_gap = ends, at_point, in_gap

    # -- queries ---------------------------------------------------------------
    def _query(self, x):
        """Best ``(value, length, a, b)`` over positive-length intervals containing x."""
        ends = self._ends
        best = None
        k = bisect.bisect_left(ends, x)
        if k < len(ends) and ends[k] == x:
            best = self._at_point[k]
        elif 0 < k < len(ends):
            best = self._in_gap[k - 1]
        if best is None:
            bv, bl, ba, bb = mpq(-1), mpq(0), x, x
        else:
            bv, bl, ba, bb = best

        pts, F, R = self._pts, self._F, self._R
        lo, hi = pts[0], pts[-1]
        Fx = self._Fat(x)
        start = 0 if R is None else bisect.bisect_left(pts, x - R)
        i = start
        while pts[i] < x:
            d = x - pts[i]
            v = (Fx - F[i]) / d
            if v > bv or (v == bv and (d < bl or (d == bl and pts[i] < ba))):
                bv, bl, ba, bb = v, d, pts[i], x
            i += 1
        j = bisect.bisect_right(pts, x)
        n = len(pts)
        while j < n:
            d = pts[j] - x
            if R is not None and d > R:
                break
            v = (F[j] - Fx) / d
            if v > bv or (v == bv and (d < bl or (d == bl and x < ba))):
                bv, bl, ba, bb = v, d, x, pts[j]
            j += 1
        if R is not None:
            a = x - R
            if a >= lo:
                v = (Fx - self._Fat(a)) / R
                if v > bv or (v == bv and (R < bl or (R == bl and a < ba))):
                    bv, bl, ba, bb = v, R, a, x
            b = x + R
            if b <= hi:
                v = (self._Fat(b) - Fx) / R
                if v > bv or (v == bv and (R < bl or (R == bl and x < ba))):
                    bv, bl, ba, bb = v, R, x, b
        return bv, bl, ba, bb

    def _canonical(self, x):
        pts, vals = self._pts, self._vals
        k = bisect.bisect_left(pts, x)
        if pts[k] == x:
            left = vals[k - 1] if k > 0 else vals[0]
            right = vals[k] if k < len(vals) else vals[-1]
            return max(left, right)
        return vals[k - 1]

    def value_mpq(self, x):
        x = mpq(x)
        v = self._query(x)[0]
        c = self._canonical(x)
        return c if c > v else v

    def value(self, x) -> Fraction:
        return _to_frac(self.value_mpq(as_rat(x)))

    def query(self, x) -> MaxQueryResult:
        xr = as_rat(x)
        if xr not in self.f.domain:
            raise OutsideDomain(f"{xr} outside {self.f.domain}")
        x = mpq(xr)
        v, _, a, b = self._query(x)
        c = self._canonical(x)
        if c > v:
            return MaxQueryResult(_to_frac(c), Interval(xr, xr), degenerate=True)
        return MaxQueryResult(_to_frac(v), Interval(_to_frac(a), _to_frac(b)))


def _beats(cand, best) -> bool:
    """Larger average wins; ties go to the shorter, then the leftmost interval."""
    if best is None:
        return True
    if cand[0] != best[0]:
        return cand[0] > best[0]
    if cand[1] != best[1]:
        return cand[1] < best[1]
    return cand[2] < best[2]


@lru_cache(maxsize=32)
def _cached_evaluator(f: StepFn, R) -> MaximalEvaluator:
    return MaximalEvaluator(f, R)


def evaluator(f: StepFn, R=None) -> MaximalEvaluator:
    """Shared evaluator for ``(f, R)``; the envelope table is built once."""
    return _cached_evaluator(f, _norm_R(R))


def maximal_eval(f: StepFn, x, R=None) -> MaxQueryResult:
    """Exact ``M_R f(x)`` with a witness interval (``R=None`` or ``inf``: no cap)."""
    x = as_rat(x)
    if x not in f.domain:
        raise OutsideDomain(f"{x} outside {f.domain}")
    return evaluator(f, R).query(x)


# ---------------------------------------------------------------------------
# adaptive profiles
# ---------------------------------------------------------------------------


@dataclass
class SampledProfile:
    """``M_R f`` tabulated exactly on an adaptively refined node set."""

    nodes: tuple
    values: tuple
    refinement_depth: int
    variation_lower: Fraction
    l1_estimate: float
    l1_error: float
    R: Fraction | None = None
    converged: bool = True
    history: list = field(default_factory=list)

    def arrays(self):
        x = np.array([float(n) for n in self.nodes])
        y = np.array([float(v) for v in self.values])
        return x, y

    def l1_trapezoid(self) -> float:
        x, y = self.arrays()
        return math.fsum((x[1:] - x[:-1]) * (y[1:] + y[:-1]) / 2)

    def dm_l2_squared(self) -> float:
        """Sum of squared difference quotients; a lower bound for the integral of (DM)^2."""
        x, y = self.arrays()
        dx, dy = np.diff(x), np.diff(y)
        return math.fsum(dy * dy / dx)

    def csv_rows(self, tag="plumbing"):
        yield ("node_exact", "node", "value_exact", "value", "tag")
        for n, v in zip(self.nodes, self.values):
            yield (rat_str(n), repr(float(n)), rat_str(v), repr(float(v)), tag)


def _turning_runs(vals):
    """Indices ``(i, j)`` of extremal plateaus in a sequence.

    Nodes ``i..j`` share one value, the sequence rises into the plateau and
    falls out of it (or vice versa). Returns ``(i, j, kind)`` triples with
    kind ``+1`` for maxima and ``-1`` for minima; sequence ends are excluded.
    """
    runs = []
    n = len(vals)
    prev_dir = 0
    k = 0
    while k < n - 1:
        j = k
        while j + 1 < n and vals[j + 1] == vals[k]:
            j += 1
        if j == n - 1:
            break
        d = 1 if vals[j + 1] > vals[j] else -1
        if prev_dir and d != prev_dir:
            runs.append((k, j, prev_dir))
        prev_dir = d
        k = j + 1
    return runs


def _exact_variation(vals):
    """Variation of a sequence, summed over monotone runs so big rationals never pile up."""
    total = mpq(0)
    anchor = vals[0]
    prev_dir = 0
    for a, b in zip(vals, vals[1:]):
        if a == b:
            continue
        d = 1 if b > a else -1
        if prev_dir and d != prev_dir:
            total += abs(a - anchor)
            anchor = a
        prev_dir = d
    total += abs(vals[-1] - anchor)
    return total


def maximal_profile(f: StepFn, R, tol: float, *, var_tol: float | None = None,
                    max_depth: int | None = None, min_depth: int = 2) -> SampledProfile:
    """Adaptive tabulation of ``M_R f`` over the domain of ``f``.

    Seeds are the breakpoints, the domain ends and every breakpoint shifted by
    ``±R``. Each panel ``[u, w]`` is sampled at its quarter points and carries
    a three-point and a five-point Simpson sum; a third of their difference
    bounds the five-point error both where ``M_R f`` is smooth and across
    kinks. Panels are halved, largest error first, until the summed error is
    at most ``tol``, and quartered while a discrete extremum could hide an
    excursion worth more than ``var_tol / (#extrema)`` of variation. ``l1_estimate`` is
    the five-point sum and ``l1_error`` the summed estimate.

    Raises :class:`BudgetExceeded` (with the partial profile attached) when
    ``max_depth`` halvings do not suffice.
    """
    ev = evaluator(f, R)
    Rq = ev._R
    var_tol = tol if var_tol is None else var_tol
    max_depth = max_depth_default() if max_depth is None else max_depth
    lo, hi = ev._pts[0], ev._pts[-1]

    if f.is_zero():
        nodes = (f.domain.lo, f.domain.hi)
        return SampledProfile(nodes, (Fraction(0), Fraction(0)), 0, Fraction(0), 0.0, 0.0, ev.R)

    seeds = set(ev._pts)
    if Rq is not None:
        for p in ev._pts:
            for s in (p - Rq, p + Rq):
                if lo < s < hi:
                    seeds.add(s)
    seeds = sorted(seeds)
    cache = {}

    def M(x):
        v = cache.get(x)
        if v is None:
            v = ev.value_mpq(x)
            cache[x] = v
        return v

    g_pts = ev._pts
    g_vals = ev._vals

    def min_abs_f(u, w):
        i = max(bisect.bisect_right(g_pts, u) - 1, 0)
        j = min(bisect.bisect_left(g_pts, w), len(g_vals))
        return min(g_vals[i:max(j, i + 1)])

    def max_abs_f(u, w):
        if Rq is not None:
            u, w = max(u - Rq, lo), min(w + Rq, hi)
        else:
            u, w = lo, hi
        i = max(bisect.bisect_right(g_pts, u) - 1, 0)
        j = min(bisect.bisect_left(g_pts, w), len(g_vals))
        return max(g_vals[i:max(j, i + 1)])

    def sample(panels):
        xs, ys = [], []
        for u, w in panels:
            h = (w - u) / 4
            for k in range(4):
                x = u + k * h
                xs.append(x)
                ys.append(M(x))
        xs.append(panels[-1][1])
        ys.append(M(panels[-1][1]))
        return xs, ys

    def panel_errors(panels, ys):
        fine, err = [], []
        for p, (u, w) in enumerate(panels):
            v = [float(ys[4 * p + k]) for k in range(5)]
            h = float(w - u)
            coarse = h * (v[0] + 4 * v[2] + v[4]) / 6
            s = h * (v[0] + 4 * v[1] + 2 * v[2] + 4 * v[3] + v[4]) / 12
            fine.append(s)
            err.append(abs(s - coarse) / 3)
        return fine, err

    panels = list(zip(seeds, seeds[1:]))
    depth = 0
    history = []

    while True:
        xs, ys = sample(panels)
        fine, err = panel_errors(panels, ys)
        l1, l1_err = math.fsum(fine), math.fsum(err)
        history.append((depth, len(panels), l1, l1_err))
        n = len(panels)
        if depth < min_depth:
            flags = [True] * n
        else:
            flags = [False] * n
            if l1_err > tol:
                # halve the worst panels until what is left fits in a quarter of the budget
                rest = l1_err
                for p in sorted(range(n), key=err.__getitem__, reverse=True):
                    if rest <= tol / 4:
                        break
                    flags[p] = True
                    rest -= err[p]
            runs = _turning_runs(ys)
            if runs:
                share = var_tol / len(runs)
                for i, j, kind in runs:
                    # equal exact values across the plateau mean it is flat; an
                    # excursion can only hide in the two gaps that bracket it
                    v = ys[i]
                    for t in (i - 1, j):
                        gap = float(xs[t + 1] - xs[t])
                        slope = abs(float(ys[t + 1] - ys[t])) / gap
                        p = min(t // 4, n - 1)
                        u, w = panels[p]
                        room = float(max_abs_f(u, w) - v) if kind > 0 else float(v - min_abs_f(u, w))
                        if room > 0 and 2 * min(slope * gap, room) > share:
                            flags[p] = flags[p] or 2
        if not any(flags):
            return _make_profile(xs, ys, depth, l1, l1_err, ev.R, True, history)
        if depth >= max_depth:
            raise BudgetExceeded(
                f"profile not stable after {depth} refinements",
                partial=_make_profile(xs, ys, depth, l1, l1_err, ev.R, False, history),
            )
        new = []
        for (u, w), fl in zip(panels, flags):
            if fl is True:
                m = (u + w) / 2
                new += [(u, m), (m, w)]
            elif fl:
                # extremum panels shrink faster: the error there is only linear in the width
                q = (w - u) / 4
                new += [(u + k * q, u + (k + 1) * q) for k in range(4)]
            else:
                new.append((u, w))
        panels = new
        depth += 1


def _make_profile(xs, ys, depth, l1, l1_err, R, converged, history):
    return SampledProfile(
        tuple(_to_frac(x) for x in xs),
        tuple(_to_frac(y) for y in ys),
        depth,
        _to_frac(_exact_variation(ys)),
        l1,
        l1_err,
        R,
        converged,
        list(history),
    )


# ---------------------------------------------------------------------------
# verification reports
# ---------------------------------------------------------------------------


def _jsonable(v):
    if isinstance(v, Fraction):
        return rat_str(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


@dataclass
class CheckReport:
    """Outcome of one quantitative check.

    ``margin`` is ``bound - measured`` in the direction of the inequality
    (non-negative when the check holds without using its tolerance).
    ``instance`` holds enough data to replay the check.
    """

    claim_id: str
    measured: dict
    bound: object
    margin: float
    passed: bool
    provenance: list = field(default_factory=list)
    instance: dict | None = None
    notes: str = ""

    def to_dict(self) -> dict:
        return {
            "claim_id": self.claim_id,
            "measured": _jsonable(self.measured),
            "bound": _jsonable(self.bound),
            "margin": float(self.margin),
            "passed": bool(self.passed),
            "provenance": list(self.provenance),
            "instance": _jsonable(self.instance),
            "notes": self.notes,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CheckReport":
        return cls(d["claim_id"], d["measured"], d["bound"], d["margin"], d["passed"],
                   d.get("provenance", []), d.get("instance"), d.get("notes", ""))

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.claim_id}: margin={self.margin:.6g}"


def indicator_l1_closed_form(R) -> float:
    """Closed form of ``||M_R chi_[0,1]||_1`` on the line, valid for ``R >= 1``."""
    R = float(R)
    return 1 + 1 / R + 2 * math.log(R)


def check_indicator_profile(R, tol: float = 1e-6, *, window=12, claim_id: str = "remark-log") -> CheckReport:
    """Profile of ``M_R chi_[0,1]`` on ``[-window, window]`` against its closed forms.

    ``||M_R chi||_1 = 1 + 1/R + 2 ln R`` and the variation is exactly 2, for ``R >= 1``.
    """
    R = as_rat(R)
    if R < 1:
        raise ValueError("the closed form needs R >= 1")
    window = as_rat(window)
    f = indicator(Interval(-window, window), [(0, 1)])
    prof = maximal_profile(f, R, tol / 10)
    want = indicator_l1_closed_form(R)
    err_l1 = abs(prof.l1_estimate - want)
    err_v = abs(float(prof.variation_lower) - 2)
    return CheckReport(
        claim_id,
        {"l1_MRf": prof.l1_estimate, "l1_closed_form": want, "variation_MRf_lower": prof.variation_lower,
         "nodes": len(prof.nodes)},
        want,
        tol - max(err_l1, err_v),
        bool(err_l1 <= tol and err_v <= tol),
        ["oracle:indicator-closed-form"],
        {"R": rat_str(R), "tol": tol, "window": rat_str(window)},
    )


def bd_constant(R) -> float:
    return 3 * (1 + 2 * log_plus(R))


def check_bd_bound(f: StepFn, R, tol: float = 1e-6, *, profile_tol: float | None = None,
                   claim_id: str = "bd") -> CheckReport:
    """Check the L^1 and derivative bounds for ``M_R f`` on the domain of ``f``.

    Asserts ``||M_R f||_1 <= 3(1 + 2 log+ R)||f||_1 + 3 V(|f|)`` with the
    profile's own error estimate added to the measured side, the contraction
    ``V(M_R f) <= V(|f|)`` for the certified lower bound of the variation, and
    the combined W^{1,1} forms with constants 4 and ``max{3(1+2log+R), 4}``.
    """
    R = _norm_R(R)
    if R is None:
        raise NonPositiveR("the bound needs a finite radius")
    prof = maximal_profile(f, R, profile_tol if profile_tol is not None else tol)
    l1f = integral_abs(f)
    v_abs = variation(f.abs())
    c = bd_constant(R)
    l1_bound = c * float(l1f) + 3 * float(v_abs)
    w11 = prof.l1_estimate + float(prof.variation_lower)
    w11_bound = c * float(l1f) + 4 * float(v_abs)
    w11_bound_max = max(c, 4.0) * float(bv_norm(f))
    l1_ok = prof.l1_estimate + prof.l1_error <= l1_bound + tol
    var_ok = prof.variation_lower <= v_abs + Fraction(tol)
    w11_ok = w11 + prof.l1_error <= min(w11_bound, w11_bound_max) + tol
    return CheckReport(
        claim_id,
        {
            "l1_MRf": prof.l1_estimate,
            "l1_error": prof.l1_error,
            "variation_MRf_lower": prof.variation_lower,
            "l1_f": l1f,
            "variation_abs_f": v_abs,
            "w11_MRf": w11,
            "w11_bound": w11_bound,
            "w11_bound_max_form": w11_bound_max,
            "depth": prof.refinement_depth,
        },
        l1_bound,
        l1_bound - prof.l1_estimate,
        bool(l1_ok and var_ok and w11_ok),
        ["bound:l1-and-variation"],
        {"f": f.to_dict(), "R": rat_str(R), "tol": tol},
    )


def _measure_above(x, y, s) -> float:
    """Measure of ``{PL > s}`` for the piecewise-linear interpolant of ``(x, y)``."""
    dx = np.diff(x)
    a, b = y[:-1], y[1:]
    top, bot = np.maximum(a, b), np.minimum(a, b)
    span = np.where(top > bot, top - bot, 1.0)
    frac = np.where(bot > s, 1.0, np.where(top <= s, 0.0, (top - s) / span))
    return float(math.fsum(frac * dx))


def sampled_rearrangement(profile: SampledProfile, ts) -> list:
    """Non-increasing rearrangement of the profile's piecewise-linear interpolant at ``ts``."""
    x, y = profile.arrays()
    total = x[-1] - x[0]
    out = []
    for t in ts:
        t = float(t)
        if t >= total:
            out.append(0.0)
            continue
        lo, hi = 0.0, float(y.max())
        if _measure_above(x, y, lo) <= t:
            out.append(0.0)
            continue
        for _ in range(80):
            mid = (lo + hi) / 2
            if _measure_above(x, y, mid) <= t:
                hi = mid
            else:
                lo = mid
        out.append(hi)
    return out


def check_weak_type(f: StepFn, thresholds, tol: float = 1e-6, *, profile_tol: float = 1e-6,
                    claim_id: str = "weak-type") -> CheckReport:
    """Check ``(Mf)^*(t) <= 2 ||f||_1 / t`` for the unrestricted operator."""
    l1f = float(integral_abs(f))
    ts = [float(t) for t in thresholds]
    if f.is_zero():
        lhs = [0.0] * len(ts)
    else:
        prof = maximal_profile(f, None, profile_tol)
        lhs = sampled_rearrangement(prof, ts)
    rhs = [2 * l1f / t for t in ts]
    margins = [r - l for l, r in zip(lhs, rhs)]
    return CheckReport(
        claim_id,
        {"t": ts, "rearranged_Mf": lhs, "l1_f": l1f},
        rhs,
        min(margins) if margins else math.inf,
        all(m >= -tol for m in margins),
        ["bound:weak-type"],
        {"f": f.to_dict(), "thresholds": ts, "tol": tol},
    )


def check_poincare(f: StepFn, R, tol: float = 1e-6, *, profile_tol: float | None = None,
                   claim_id: str = "poincare") -> CheckReport:
    """Check ``||f||_2^2 <= min{term1, term2}`` for compactly supported ``f``.

    ``term2 = lambda(N)^2 ||D M_R f||_2^2`` and ``term1`` adds the squared
    L^1 bound divided by ``lambda(N)``; ``N`` is the closed ``R``-neighbourhood
    of the support, measured exactly. The derivative norm comes from squared
    difference quotients on the profile, which can only underestimate it.
    """
    R = _norm_R(R)
    if R is None:
        raise NonPositiveR("the inequality needs a finite radius")
    hull = support_neighborhood(f, R)
    if not f.domain.contains_interval(hull):
        raise MarginTooSmall(f"support plus R-margin {hull} leaves the domain {f.domain}")
    prof = maximal_profile(f, R, profile_tol if profile_tol is not None else tol)
    f2 = lp_power_sum(f, 2)
    lam = support_neighborhood_length(f, R)
    dm2 = prof.dm_l2_squared()
    c = bd_constant(R)
    lamf = float(lam)
    term1 = c * c / lamf * float(bv_norm(f)) ** 2 + lamf * lamf / 2 * dm2
    term2 = lamf * lamf * dm2
    bound = min(term1, term2)
    return CheckReport(
        claim_id,
        {"f_l2_squared": f2, "lambda_N": lam, "lambda_hull": hull.length, "dm_l2_squared": dm2,
         "term1": term1, "term2": term2},
        bound,
        bound - float(f2),
        float(f2) <= bound + tol,
        ["bound:poincare"],
        {"f": f.to_dict(), "R": rat_str(R), "tol": tol},
    )


def dyadic_counterexample(n_max: int, left_len=1000, domain: Interval | None = None) -> StepFn:
    """Indicator of ``[-left_len, 0]`` and the blocks ``[2^-n, 2^-n + 2^-n-1]``, ``n = 0..n_max``."""
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    left_len = as_rat(left_len)
    if left_len <= 0:
        raise ValueError("left_len must be positive")
    if domain is None:
        domain = Interval(-left_len - 2, 4)
    spans = [(-left_len, Fraction(0))]
    for n in range(n_max + 1):
        a = Fraction(1, 2 ** n)
        spans.append((a, a + a / 2))
    return indicator(domain, spans)


def counterexample_bound(R) -> tuple:
    """``(N, 2 + 2(N+1) + sum_{n>N} 2^(-n+2)/R)`` with ``N`` least such that ``2^(-N+1) < R``."""
    R = as_rat(R)
    N = 1
    while Fraction(2) ** (1 - N) >= R:
        N += 1
    tail = Fraction(2) ** (2 - N) / R
    return N, 2 + 2 * (N + 1) + tail


def check_counterexample(n_max: int = 20, R=Fraction(1, 4), tol: float = 1e-3, *, baseline: int = 10,
                         left_len=1000, claim_id: str = "counterexample") -> CheckReport:
    """Bounded ``V(M_R f)`` against linearly growing ``V(f)`` on the dyadic family."""
    R = as_rat(R)
    if not 0 < R < 1:
        raise ValueError("the per-block estimate assumes 0 < R < 1")
    N, bound = counterexample_bound(R)
    out = {}
    for n in (baseline, n_max):
        f = dyadic_counterexample(n, left_len)
        prof = maximal_profile(f, R, 1e-2, var_tol=tol)
        out[n] = (variation(f), prof.variation_lower)
    vm_base, vm_top = float(out[baseline][1]), float(out[n_max][1])
    rel = abs(vm_top - vm_base) / max(vm_top, vm_base)
    exact_ok = all(out[n][0] == 2 * (n + 2) for n in out)
    worst = max(vm_base, vm_top)
    return CheckReport(
        claim_id,
        {
            "N": N,
            "variation_f": {str(n): out[n][0] for n in out},
            "variation_MRf_lower": {str(n): out[n][1] for n in out},
            "relative_change": rel,
        },
        bound,
        float(bound) - worst,
        bool(worst <= float(bound) + tol and exact_ok and rel < 0.01),
        ["bound:counterexample"],
        {"n_max": n_max, "baseline": baseline, "R": rat_str(R), "tol": tol, "left_len": rat_str(as_rat(left_len))},
    )


def check_convergence(f: StepFn, scales, tol: float = 1e-3, *, mono_tol: float = 1e-9,
                      profile_tol: float = 1e-7, claim_id: str = "charact") -> CheckReport:
    """``M_a f -> f`` in L^1 as ``a -> 0`` and the semicontinuity direction for the variation.

    Works on the positive and negative parts separately:
    ``||M_a f+ - f+||_1 + ||M_a f- - f-||_1`` must be
    non-increasing along the (decreasing) scales and end below
    ``0.05 ||f||_BV``, and ``V(f)`` must not exceed the smallest
    ``V(M_a f+) + V(M_a f-)`` over the scales by more than ``tol``.
    Because ``M_a h >= h`` pointwise, ``||M_a h - h||_1 = ||M_a h||_1 - ||h||_1``.
    """
    scales = [as_rat(a) for a in scales]
    if any(a <= 0 for a in scales) or any(b >= a for a, b in zip(scales, scales[1:])):
        raise ValueError("scales must be positive and strictly decreasing")
    parts = [p for p in pos_neg_parts(f) if not p.is_zero()]
    diffs, vars_ = [], []
    for a in scales:
        d, v = 0.0, Fraction(0)
        for p in parts:
            prof = maximal_profile(p, a, profile_tol, var_tol=tol)
            d += prof.l1_estimate - float(integral_abs(p))
            v += prof.variation_lower
        diffs.append(d)
        vars_.append(v)
    vf = variation(f)
    monotone = all(b <= a + mono_tol for a, b in zip(diffs, diffs[1:]))
    bvf = float(bv_norm(f))
    small = (diffs[-1] < 0.05 * bvf) if diffs else True
    vmin = min(vars_) if vars_ else Fraction(0)
    semi = float(vf) <= float(vmin) + tol
    return CheckReport(
        claim_id,
        {
            "scales": scales,
            "l1_distance": diffs,
            "variation_M_parts": vars_,
            "variation_f": vf,
            "variation_at_finest_scale": vars_[-1] if vars_ else Fraction(0),
            "bv_norm_f": bvf,
        },
        float(vf),
        float(vmin) - float(vf),
        bool(monotone and small and semi),
        ["bound:differentiation", "bound:semicontinuity"],
        {"f": f.to_dict(), "scales": scales, "tol": tol},
        notes="" if (monotone and small) else "L1 convergence condition failed",
    )


def growth_table_1d(f: StepFn, Rs, tol: float = 1e-6, *, claim_id: str = "growth1d"):
    """Rows ``(R, ||M_R f||_1, ratio to 1 + log+ R)`` and a bounded-ratio report."""
    Rs = [as_rat(R) for R in Rs]
    if any(b <= a for a, b in zip(Rs, Rs[1:])):
        raise ValueError("Rs must be increasing")
    rows = []
    for R in Rs:
        l1 = maximal_profile(f, R, tol).l1_estimate
        rows.append((R, l1, l1 / (1 + log_plus(R))))
    ratios = [r[2] for r in rows if r[2] > 0]
    spread = max(ratios) / min(ratios) if ratios else 1.0
    report = CheckReport(
        claim_id,
        {"R": [r[0] for r in rows], "l1_MRf": [r[1] for r in rows], "ratio": [r[2] for r in rows]},
        10.0,
        10.0 - spread,
        spread < 10,
        ["bound:l1-growth"],
        {"f": f.to_dict(), "Rs": Rs, "tol": tol},
    )
    return rows, report
