"""Exact rational step functions.

Every 1D input in maxbv is a :class:`StepFn`: a bounded interval split by
rational breakpoints into open pieces, each carrying a rational value.
Values at breakpoints are never stored; wherever a pointwise value is
needed it comes from :func:`canonical_at` (the max of the two sides), so
changing a function on a null set can never change a computed quantity.
"""

from __future__ import annotations

import bisect
import json
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Iterator, Sequence

import mpmath

from .errors import (
    BreakpointOutsideDomain,
    CountMismatch,
    InvalidExponent,
    NonMonotoneBreakpoints,
    OutsideDomain,
    WindowOutsideDomain,
    ZeroFunction,
)

Rat = Fraction

__all__ = [
    "Rat",
    "as_rat",
    "rat_str",
    "Interval",
    "StepFn",
    "RearrangedFn",
    "step_new",
    "constant",
    "indicator",
    "integral_abs",
    "lp_power_sum",
    "lp_norm",
    "variation",
    "bv_norm",
    "canonical_at",
    "rearrangement",
    "pos_neg_parts",
    "support_neighborhood",
    "support_neighborhood_length",
]


def as_rat(x) -> Fraction:
    """Coerce ints, Fractions, gmpy2 rationals, floats and strings to Fraction.

    Strings may be ``"p/q"``, integers or decimal literals (``"0.1"`` is the
    exact decimal 1/10). Floats are converted exactly (binary64 is dyadic).
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    if isinstance(x, float):
        return Fraction(x)
    if isinstance(x, Rational) or hasattr(x, "numerator"):
        return Fraction(int(x.numerator), int(x.denominator))
    raise TypeError(f"cannot interpret {x!r} as a rational")


def rat_str(q: Fraction) -> str:
    """Exact text form: ``"p/q"``, or ``"p"`` for integers."""
    q = as_rat(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


@dataclass(frozen=True)
class Interval:
    """Closed interval ``[lo, hi]`` with exact endpoints.

    ``lo == hi`` is tolerated so that degenerate maximal-function witnesses
    can be represented; function domains always have positive length.
    """

    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        object.__setattr__(self, "lo", as_rat(self.lo))
        object.__setattr__(self, "hi", as_rat(self.hi))
        if self.lo > self.hi:
            raise ValueError(f"interval with lo > hi: [{self.lo}, {self.hi}]")

    @property
    def length(self) -> Fraction:
        return self.hi - self.lo

    @property
    def is_degenerate(self) -> bool:
        return self.lo == self.hi

    def __contains__(self, x) -> bool:
        return self.lo <= x <= self.hi

    def contains_interval(self, other: "Interval") -> bool:
        return self.lo <= other.lo and other.hi <= self.hi

    def __iter__(self):
        yield self.lo
        yield self.hi

    def __repr__(self):
        return f"[{rat_str(self.lo)}, {rat_str(self.hi)}]"


@dataclass(frozen=True)
class StepFn:
    """Piecewise-constant function on a bounded interval.

    ``values[k]`` is the value on the open piece between ``points[k]`` and
    ``points[k + 1]``, where ``points = (lo, *breakpoints, hi)``. Adjacent
    pieces with equal values are merged on construction, so two StepFns
    representing the same function compare equal.
    """

    domain: Interval
    breakpoints: tuple
    values: tuple

    def __post_init__(self):
        dom = self.domain
        if not isinstance(dom, Interval):
            dom = Interval(*dom)
        if dom.length <= 0:
            raise ValueError("domain must have positive length")
        bps = tuple(as_rat(b) for b in self.breakpoints)
        vals = tuple(as_rat(v) for v in self.values)
        if len(vals) != len(bps) + 1:
            raise CountMismatch(
                f"{len(vals)} values for {len(bps)} breakpoints (need {len(bps) + 1})"
            )
        for a, b in zip(bps, bps[1:]):
            if not a < b:
                raise NonMonotoneBreakpoints(f"breakpoints not strictly increasing at {a}, {b}")
        for b in bps:
            if not dom.lo < b < dom.hi:
                raise BreakpointOutsideDomain(f"breakpoint {b} not strictly inside {dom}")
        merged_b, merged_v = [], [vals[0]]
        for b, v in zip(bps, vals[1:]):
            if v == merged_v[-1]:
                continue
            merged_b.append(b)
            merged_v.append(v)
        object.__setattr__(self, "domain", dom)
        object.__setattr__(self, "breakpoints", tuple(merged_b))
        object.__setattr__(self, "values", tuple(merged_v))

    # -- structure -----------------------------------------------------------
    @property
    def points(self) -> tuple:
        return (self.domain.lo, *self.breakpoints, self.domain.hi)

    @property
    def n_pieces(self) -> int:
        return len(self.values)

    def pieces(self) -> Iterator[tuple]:
        """Yield ``(lo, hi, value)`` for each piece, left to right."""
        pts = self.points
        for k, v in enumerate(self.values):
            yield pts[k], pts[k + 1], v

    def piece_index(self, x) -> int:
        """Index of the piece whose closure contains ``x``, preferring the right piece."""
        x = as_rat(x)
        if x not in self.domain:
            raise OutsideDomain(f"{x} outside {self.domain}")
        k = bisect.bisect_right(self.breakpoints, x)
        return min(k, self.n_pieces - 1)

    def is_zero(self) -> bool:
        return all(v == 0 for v in self.values)

    def sup_abs(self) -> Fraction:
        return max(abs(v) for v in self.values)

    # -- algebra -------------------------------------------------------------
    def map(self, fn) -> "StepFn":
        return StepFn(self.domain, self.breakpoints, tuple(fn(v) for v in self.values))

    def abs(self) -> "StepFn":
        return self.map(abs)

    def scale(self, c) -> "StepFn":
        c = as_rat(c)
        return self.map(lambda v: c * v)

    def __neg__(self):
        return self.map(lambda v: -v)

    def _combine(self, other: "StepFn", op) -> "StepFn":
        if self.domain != other.domain:
            raise ValueError("step functions live on different domains")
        bps = sorted(set(self.breakpoints) | set(other.breakpoints))
        pts = (self.domain.lo, *bps, self.domain.hi)
        vals = []
        for a, b in zip(pts, pts[1:]):
            mid = (a + b) / 2
            vals.append(op(self.values[self.piece_index(mid)], other.values[other.piece_index(mid)]))
        return StepFn(self.domain, bps, vals)

    def __add__(self, other):
        return self._combine(other, lambda a, b: a + b)

    def __sub__(self, other):
        return self._combine(other, lambda a, b: a - b)

    def extend(self, domain: Interval) -> "StepFn":
        """Zero extension to a larger domain."""
        domain = domain if isinstance(domain, Interval) else Interval(*domain)
        if not domain.contains_interval(self.domain):
            raise WindowOutsideDomain(f"{domain} does not contain {self.domain}")
        bps, vals = [], []
        if domain.lo < self.domain.lo:
            bps.append(self.domain.lo)
            vals.append(Fraction(0))
        vals.append(self.values[0])
        for b, v in zip(self.breakpoints, self.values[1:]):
            bps.append(b)
            vals.append(v)
        if self.domain.hi < domain.hi:
            bps.append(self.domain.hi)
            vals.append(Fraction(0))
        return StepFn(domain, bps, vals)

    # -- serialization -------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "domain": [rat_str(self.domain.lo), rat_str(self.domain.hi)],
            "breakpoints": [rat_str(b) for b in self.breakpoints],
            "values": [rat_str(v) for v in self.values],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "StepFn":
        lo, hi = d["domain"]
        return step_new(Interval(as_rat(lo), as_rat(hi)), d.get("breakpoints", []), d["values"])

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "StepFn":
        return cls.from_dict(json.loads(text))


class RearrangedFn(StepFn):
    """Non-increasing step function on ``[0, measure)``: the output of :func:`rearrangement`."""

    def __post_init__(self):
        super().__post_init__()
        if self.domain.lo != 0:
            raise ValueError("a rearrangement lives on [0, measure)")
        if any(a < b for a, b in zip(self.values, self.values[1:])):
            raise ValueError("rearranged values must be non-increasing")


def step_new(domain, breakpoints: Iterable, values: Iterable) -> StepFn:
    """Validated, canonical step function (adjacent equal pieces merged)."""
    if not isinstance(domain, Interval):
        domain = Interval(*domain)
    return StepFn(domain, tuple(breakpoints), tuple(values))


def constant(domain, c) -> StepFn:
    return step_new(domain, [], [c])


def indicator(domain, intervals: Sequence) -> StepFn:
    """Indicator of a finite union of closed intervals inside ``domain``.

    The union is taken up to null sets, so touching intervals merge.
    """
    if not isinstance(domain, Interval):
        domain = Interval(*domain)
    spans = sorted((as_rat(a), as_rat(b)) for a, b in intervals)
    merged = []
    for a, b in spans:
        if not (domain.lo <= a < b <= domain.hi):
            raise BreakpointOutsideDomain(f"[{a}, {b}] not a positive-length subset of {domain}")
        if merged and a <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], b)
        else:
            merged.append([a, b])
    bps, vals = [], [Fraction(0)]
    for a, b in merged:
        if a > domain.lo:
            bps.append(a)
            vals.append(Fraction(1))
        else:
            vals[-1] = Fraction(1)
        if b < domain.hi:
            bps.append(b)
            vals.append(Fraction(0))
    return step_new(domain, bps, vals)


def integral_abs(f: StepFn, window: Interval | None = None) -> Fraction:
    """Exact integral of ``|f|`` over ``window`` (default: the whole domain)."""
    if window is None:
        window = f.domain
    elif not isinstance(window, Interval):
        window = Interval(*window)
    if not f.domain.contains_interval(window):
        raise WindowOutsideDomain(f"{window} not inside {f.domain}")
    total = Fraction(0)
    for a, b, v in f.pieces():
        lo, hi = max(a, window.lo), min(b, window.hi)
        if lo < hi:
            total += abs(v) * (hi - lo)
    return total


def lp_power_sum(f: StepFn, p: int) -> Fraction:
    """Exact ``sum |v_i|^p * length_i`` for a positive integer exponent."""
    return sum((abs(v) ** p * (b - a) for a, b, v in f.pieces()), Fraction(0))


def lp_norm(f: StepFn, p=1):
    """L^p norm of ``f``.

    Returns an exact Fraction for ``p == 1``. For other exponents the result
    is an ``mpmath.mpf`` at 40 significant digits; for integer ``p`` the inner
    sum is computed exactly first so the only rounding is the final root.
    """
    p = as_rat(p)
    if p < 1:
        raise InvalidExponent(f"L^p needs p >= 1, got {p}")
    if p == 1:
        return integral_abs(f)
    with mpmath.workdps(40):
        if p.denominator == 1:
            inner = lp_power_sum(f, int(p))
            return mpmath.root(mpmath.mpf(inner.numerator) / inner.denominator, int(p))
        pp = mpmath.mpf(p.numerator) / p.denominator
        inner = mpmath.fsum(
            mpmath.power(mpmath.mpf(abs(v).numerator) / abs(v).denominator, pp)
            * (mpmath.mpf((b - a).numerator) / (b - a).denominator)
            for a, b, v in f.pieces()
        )
        return mpmath.power(inner, 1 / pp)


def variation(f: StepFn) -> Fraction:
    """Pointwise variation of the canonical representative: the sum of |jumps|."""
    return sum((abs(b - a) for a, b in zip(f.values, f.values[1:])), Fraction(0))


def bv_norm(f: StepFn) -> Fraction:
    return integral_abs(f) + variation(f)


def canonical_at(f: StepFn, x) -> Fraction:
    """Value of the canonical representative at ``x``.

    Interior points take the piece value, breakpoints the larger of the two
    adjacent values, domain endpoints the one-sided value.
    """
    x = as_rat(x)
    if x not in f.domain:
        raise OutsideDomain(f"{x} outside {f.domain}")
    k = bisect.bisect_left(f.breakpoints, x)
    if k < len(f.breakpoints) and f.breakpoints[k] == x:
        return max(f.values[k], f.values[k + 1])
    return f.values[k]


def rearrangement(f: StepFn) -> RearrangedFn:
    """Non-increasing rearrangement of ``|f|`` on ``[0, measure of domain)``."""
    mass = {}
    for a, b, v in f.pieces():
        mass[abs(v)] = mass.get(abs(v), Fraction(0)) + (b - a)
    levels = sorted(mass, reverse=True)
    bps, pos = [], Fraction(0)
    for v in levels[:-1]:
        pos += mass[v]
        bps.append(pos)
    return RearrangedFn(Interval(0, f.domain.length), tuple(bps), tuple(levels))


def pos_neg_parts(f: StepFn) -> tuple:
    """``(f+, f-)`` with ``f = f+ - f-`` and both parts non-negative."""
    zero = Fraction(0)
    return f.map(lambda v: max(v, zero)), f.map(lambda v: max(-v, zero))


def _support_spans(f: StepFn) -> list:
    spans = []
    for a, b, v in f.pieces():
        if v == 0:
            continue
        if spans and spans[-1][1] == a:
            spans[-1][1] = b
        else:
            spans.append([a, b])
    if not spans:
        raise ZeroFunction("the zero function has empty support")
    return spans


def support_neighborhood(f: StepFn, R, ambient: Interval | None = None) -> Interval:
    """Convex hull of ``supp f + [-R, R]``, clipped to ``ambient`` when given."""
    R = as_rat(R)
    if R <= 0:
        raise ValueError("R must be positive")
    spans = _support_spans(f)
    lo, hi = spans[0][0] - R, spans[-1][1] + R
    if ambient is not None:
        lo, hi = max(lo, ambient.lo), min(hi, ambient.hi)
    return Interval(lo, hi)


def support_neighborhood_length(f: StepFn, R, ambient: Interval | None = None) -> Fraction:
    """Exact measure of the union ``supp f + [-R, R]`` (clipped to ``ambient``)."""
    R = as_rat(R)
    if R <= 0:
        raise ValueError("R must be positive")
    grown = []
    for a, b in _support_spans(f):
        lo, hi = a - R, b + R
        if ambient is not None:
            lo, hi = max(lo, ambient.lo), min(hi, ambient.hi)
        if grown and lo <= grown[-1][1]:
            grown[-1][1] = max(grown[-1][1], hi)
        else:
            grown.append([lo, hi])
    return sum((hi - lo for lo, hi in grown), Fraction(0))
