"""Orlicz modulars and Luxemburg norms of type L(log+ L)^r.

Both step functions and grids reduce to a finite list of ``(value, measure)``
pairs; all logarithms go through mpmath so each piece contributes with an
absolute error far below 1e-12.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import mpmath
import numpy as np

from .core import StepFn, as_rat
from .errors import InvalidExponent, NoConvergence, NonPositiveT
from .grid2d import GridFn2D
from .maximal1d import CheckReport

__all__ = ["OrliczParams", "orlicz_modular", "luxemburg_norm", "check_embedding", "embedding_constant"]

_DPS = 40


@dataclass(frozen=True)
class OrliczParams:
    r: Fraction = Fraction(1)
    d: int = 2

    def __post_init__(self):
        object.__setattr__(self, "r", as_rat(self.r))
        if self.r < 1:
            raise InvalidExponent("r must be at least 1")
        if self.d < 1:
            raise InvalidExponent("d must be at least 1")


def _masses(g):
    """Distinct ``|value| > 0`` with their total measure, in increasing value order."""
    if isinstance(g, StepFn):
        acc = {}
        for a, b, v in g.pieces():
            v = abs(v)
            if v and b > a:
                acc[v] = acc.get(v, 0) + (b - a)
        return [(mpmath.mpf(v.numerator) / v.denominator, mpmath.mpf(m.numerator) / m.denominator)
                for v, m in sorted(acc.items())]
    if isinstance(g, GridFn2D):
        vals, counts = np.unique(np.abs(g.values), return_counts=True)
        area = mpmath.mpf(g.cell_area)
        return [(mpmath.mpf(float(v)), area * int(c)) for v, c in zip(vals, counts) if v > 0]
    raise TypeError(f"unsupported function type {type(g).__name__}")


def _sup(masses):
    return masses[-1][0] if masses else mpmath.mpf(0)


def _modular(masses, t, r):
    total = mpmath.mpf(0)
    for v, m in masses:
        u = v / t
        if u > 1:
            total += m * u * mpmath.log(u) ** r
    return total


def orlicz_modular(g, t, r=1):
    """``sum over pieces of measure * (v/t) * (log+(v/t))^r``."""
    t = float(t) if not isinstance(t, Fraction) else t
    if not t > 0:
        raise NonPositiveT("t must be positive")
    r = as_rat(r)
    if r < 1:
        raise InvalidExponent("r must be at least 1")
    with mpmath.workdps(_DPS):
        tt = mpmath.mpf(t.numerator) / t.denominator if isinstance(t, Fraction) else mpmath.mpf(t)
        rr = mpmath.mpf(r.numerator) / r.denominator
        return _modular(_masses(g), tt, rr)


def luxemburg_norm(g, r=1, tol: float = 1e-10, *, max_iter: int = 4000) -> float:
    """``inf{t > 0 : modular(t) <= 1}`` by bisection.

    The returned ``t`` satisfies ``modular(t) in [1 - tol, 1]``. The zero
    function has norm 0.
    """
    r = as_rat(r)
    if r < 1:
        raise InvalidExponent("r must be at least 1")
    if not tol > 0:
        raise ValueError("tol must be positive")
    with mpmath.workdps(_DPS):
        masses = _masses(g)
        if not masses:
            return 0.0
        rr = mpmath.mpf(r.numerator) / r.denominator
        hi = _sup(masses)
        lo = hi * mpmath.mpf("1e-6")
        it = 0
        while _modular(masses, lo, rr) <= 1:
            lo /= 2
            it += 1
            if it > max_iter:
                raise NoConvergence("could not bracket the norm")
        # invariant: modular(lo) > 1 >= modular(hi)
        while True:
            mh = _modular(masses, hi, rr)
            if mh >= 1 - tol:
                return float(hi)
            mid = (lo + hi) / 2
            if _modular(masses, mid, rr) > 1:
                lo = mid
            else:
                hi = mid
            it += 1
            if it > max_iter:
                raise NoConvergence(f"bisection stalled after {max_iter} steps")


def _lp(g, p) -> float:
    masses = _masses(g)
    return float(mpmath.fsum(m * v ** p for v, m in masses) ** (mpmath.mpf(1) / p))


def embedding_constant(r, d: int) -> float:
    """``(r(d-1))^(r(d-1)/d)``."""
    s = float(as_rat(r)) * (d - 1)
    return s ** (s / d)


def check_embedding(g, r=1, d: int = 2, tol: float = 1e-8, *, claim_id: str = "orlicz-embedding") -> CheckReport:
    """``||g||_{L(log+L)^r} <= (r(d-1))^(r(d-1)/d) ||g||_{d/(d-1)}``, checked for ``d = 2``."""
    if d != 2:
        raise ValueError("only d = 2 is supported")
    params = OrliczParams(r, d)
    with mpmath.workdps(_DPS):
        norm = luxemburg_norm(g, params.r, tol=1e-12)
        l2 = _lp(g, 2)
    bound = embedding_constant(params.r, d) * l2
    return CheckReport(
        claim_id,
        {"luxemburg_norm": norm, "l2_norm": l2, "r": params.r, "d": d},
        bound,
        bound - norm,
        norm <= bound + tol,
        ["bound:orlicz-embedding"],
        {"g": g.to_dict(), "r": params.r, "d": d, "tol": tol},
    )

