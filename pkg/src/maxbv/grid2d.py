"""Maximal operators and total variation for cell-constant grid functions.

A :class:`GridFn2D` lives on a rectangle split into ``nx x ny`` equal cells;
``values[i, j]`` is the value on the cell with x-index ``i`` and y-index
``j``. All operators work on ``|g|`` and return values at cell centers.

The sup-of-averages kernel is :func:`maximal_1d_float`, a vectorized copy of
the exact candidate enumeration in :mod:`maxbv.maximal1d`. Passing
``exact=True`` to :func:`directional_maximal` routes rows through the exact
engine instead; the two are cross-checked in the test suite.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .core import Interval, StepFn
from .errors import BadShape, BudgetExceeded, NonFiniteValue, NonPositiveR, ResolutionTooCoarse
from .maximal1d import CheckReport, evaluator

__all__ = [
    "GridFn2D",
    "TVResult",
    "grid_new",
    "maximal_1d_float",
    "directional_maximal",
    "iterated_maximal",
    "strong_maximal",
    "square_maximal",
    "discrete_tv",
    "f_delta",
    "blowup_oracle_tv",
    "blowup_experiment",
    "growth_table_2d",
    "convergence_2d",
]


@dataclass(frozen=True, eq=False)
class GridFn2D:
    rect: tuple
    nx: int
    ny: int
    values: np.ndarray

    def __post_init__(self):
        x0, x1, y0, y1 = (float(c) for c in self.rect)
        if not (x0 < x1 and y0 < y1):
            raise BadShape(f"degenerate rectangle {self.rect}")
        if self.nx < 2 or self.ny < 2:
            raise BadShape("need at least 2 cells per axis")
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.nx, self.ny):
            raise BadShape(f"values shape {v.shape} != {(self.nx, self.ny)}")
        if not np.all(np.isfinite(v)):
            raise NonFiniteValue("grid values must be finite")
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "rect", (x0, x1, y0, y1))
        object.__setattr__(self, "values", v)

    @property
    def hx(self) -> float:
        return (self.rect[1] - self.rect[0]) / self.nx

    @property
    def hy(self) -> float:
        return (self.rect[3] - self.rect[2]) / self.ny

    @property
    def cell_area(self) -> float:
        return self.hx * self.hy

    def centers(self):
        x0, _, y0, _ = self.rect
        xs = x0 + (np.arange(self.nx) + 0.5) * self.hx
        ys = y0 + (np.arange(self.ny) + 0.5) * self.hy
        return xs, ys

    def with_values(self, values) -> "GridFn2D":
        return GridFn2D(self.rect, self.nx, self.ny, values)

    def l1(self) -> float:
        return float(np.abs(self.values).sum() * self.cell_area)

    def bv_norm(self) -> float:
        return self.l1() + discrete_tv(self).tv

    def to_dict(self) -> dict:
        return {"rect": list(self.rect), "nx": self.nx, "ny": self.ny,
                "values": [float(v) for v in self.values.ravel()]}

    @classmethod
    def from_dict(cls, d: dict) -> "GridFn2D":
        nx, ny = int(d["nx"]), int(d["ny"])
        vals = np.asarray(d["values"], dtype=float)
        if vals.size != nx * ny:
            raise BadShape(f"{vals.size} values for a {nx}x{ny} grid")
        return cls(tuple(d["rect"]), nx, ny, vals.reshape(nx, ny))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, s: str) -> "GridFn2D":
        return cls.from_dict(json.loads(s))


def grid_new(rect, nx: int, ny: int, values) -> GridFn2D:
    return GridFn2D(tuple(rect), int(nx), int(ny), values)


# ---------------------------------------------------------------------------
# 1D kernel
# ---------------------------------------------------------------------------


def _pieces(v, lo, h):
    cut = np.flatnonzero(v[1:] != v[:-1]) + 1
    starts = np.concatenate(([0], cut))
    p = lo + np.concatenate((starts, [len(v)])) * h
    c = v[starts]
    F = np.concatenate(([0.0], np.cumsum(c * np.diff(p))))
    # piece index of every cell
    k = np.repeat(np.arange(len(c)), np.diff(np.concatenate((starts, [len(v)]))))
    return p, c, F, k


def maximal_1d_float(v, lo: float, h: float, cap: float | None = None) -> np.ndarray:
    """Local maximal function of a cell-constant row, sampled at cell centers.

    ``v`` holds the cell values (absolute values are taken), cells start at
    ``lo`` with width ``h``, and admissible intervals have length at most
    ``cap`` (``None``: no limit). Candidates are the same as in the exact
    engine: breakpoint pairs, breakpoint plus a full ``cap`` length, and
    intervals with one end at the query point.
    """
    v = np.abs(np.asarray(v, dtype=float))
    n = len(v)
    hi = lo + n * h
    if cap is not None and cap >= hi - lo:
        cap = None
    p, c, F, k = _pieces(v, lo, h)
    m = len(c)
    x = lo + (np.arange(n) + 0.5) * h
    Fx = F[k] + c[k] * (x - p[k])
    best = v.copy()
    if m == 1:
        return best

    # breakpoint pairs (i, j) with i <= k < j, via suffix max over j then prefix max over i
    L = p[None, :] - p[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        avg = (F[None, :] - F[:, None]) / L
    ok = L > 0
    if cap is not None:
        ok &= L <= cap * (1 + 1e-12)
    avg = np.where(ok, avg, -np.inf)
    suffix = np.maximum.accumulate(avg[:, ::-1], axis=1)[:, ::-1]
    B = suffix[:, 1:m + 1]  # B[i, kk] = max_{j >= kk+1} avg[i, j]
    Q = np.maximum.accumulate(B, axis=0)
    static = Q[np.arange(m), np.arange(m)]
    best = np.maximum(best, static[k])

    with np.errstate(divide="ignore", invalid="ignore"):
        # [p_i, x] and [x, p_j]
        d_left = x[:, None] - p[None, :]
        a_left = (Fx[:, None] - F[None, :]) / d_left
        m_left = d_left > 0
        d_right = p[None, :] - x[:, None]
        a_right = (F[None, :] - Fx[:, None]) / d_right
        m_right = d_right > 0
        if cap is not None:
            m_left &= d_left <= cap
            m_right &= d_right <= cap
        best = np.maximum(best, np.where(m_left, a_left, -np.inf).max(axis=1))
        best = np.maximum(best, np.where(m_right, a_right, -np.inf).max(axis=1))

    if cap is not None:
        def F_at(t):
            return np.interp(t, p, F)

        # [p_i, p_i + cap] and [p_j - cap, p_j]
        slack = 1e-12 * (hi - lo)
        s_ok = p + cap <= hi + slack
        aR = (F_at(np.minimum(p + cap, hi)) - F) / cap
        inR = (p[None, :] <= x[:, None]) & (x[:, None] <= p[None, :] + cap) & s_ok[None, :]
        best = np.maximum(best, np.where(inR, aR[None, :], -np.inf).max(axis=1))
        e_ok = p - cap >= lo - slack
        aL = (F - F_at(np.maximum(p - cap, lo))) / cap
        inL = (p[None, :] - cap <= x[:, None]) & (x[:, None] <= p[None, :]) & e_ok[None, :]
        best = np.maximum(best, np.where(inL, aL[None, :], -np.inf).max(axis=1))
        # [x - cap, x] and [x, x + cap]
        # inside x's own piece the average is v itself; skipping those avoids
        # dividing round-off by a tiny cap
        pk1 = p[np.minimum(k + 1, m)]
        okl = (x - cap >= lo) & (x - cap < p[k])
        best = np.where(okl, np.maximum(best, (Fx - F_at(np.maximum(x - cap, lo))) / cap), best)
        okr = (x + cap <= hi) & (x + cap > pk1)
        best = np.where(okr, np.maximum(best, (F_at(np.minimum(x + cap, hi)) - Fx) / cap), best)
    return best


def _row_exact(v, lo, h, cap):
    n = len(v)
    dom = Interval(Fraction(lo), Fraction(lo) + n * Fraction(h))
    bps = [Fraction(lo) + i * Fraction(h) for i in range(1, n)]
    f = StepFn(dom, tuple(bps), tuple(Fraction(float(a)) for a in np.abs(v)))
    ev = evaluator(f, None if cap is None else Fraction(cap))
    return np.array([float(ev.value(Fraction(lo) + (i + Fraction(1, 2)) * Fraction(h))) for i in range(n)])


def _norm_T(T):
    if T is None:
        return None
    T = float(T)
    if math.isinf(T):
        return None
    if not T > 0:
        raise NonPositiveR("T must be positive")
    return T


# ---------------------------------------------------------------------------
# operators
# ---------------------------------------------------------------------------


def directional_maximal(g: GridFn2D, axis: int, T=None, *, exact: bool = False) -> GridFn2D:
    """Apply the 1D local maximal operator along x (``axis=1``) or y (``axis=2``)."""
    if axis not in (1, 2):
        raise ValueError("axis must be 1 or 2")
    T = _norm_T(T)
    V = np.abs(g.values)
    if axis == 2:
        V = V.T
        lo, h = g.rect[2], g.hy
    else:
        lo, h = g.rect[0], g.hx
    # rows are 2nd index for axis 1: a "line" is V[:, j]
    lines = V.T
    out = np.empty_like(lines)
    seen = {}
    for r, line in enumerate(lines):
        key = line.tobytes()
        res = seen.get(key)
        if res is None:
            res = _row_exact(line, lo, h, T) if exact else maximal_1d_float(line, lo, h, T)
            seen[key] = res
        out[r] = res
    out = out.T
    if axis == 2:
        out = out.T
    return g.with_values(out)


def iterated_maximal(g: GridFn2D, T=None) -> GridFn2D:
    """``M^2 o M^1``: y-direction operator applied to the x-direction output."""
    return directional_maximal(directional_maximal(g, 1, T), 2, T)


def _sliding_max(a, k, axis=0):
    """``out[t] = max(a[t - k + 1 .. t])`` along ``axis``, clipped at the start."""
    a = np.moveaxis(a, axis, 0)
    n = a.shape[0]
    pad = np.full((k - 1,) + a.shape[1:], -np.inf)
    b = np.concatenate((pad, a), axis=0)
    # sparse-table doubling
    span, cur = 1, b
    while span * 2 <= k:
        cur = np.maximum(cur[:-span], cur[span:])
        span *= 2
    out = np.maximum(cur[:n], cur[k - span:k - span + n])
    return np.moveaxis(out, 0, axis)


def strong_maximal(g: GridFn2D, T=None, *, max_groups: int = 200_000) -> GridFn2D:
    """Sup of averages over rectangles of diameter at most ``T`` containing each cell center.

    Vertical extents are grid-aligned row windows; horizontal extents are
    continuous and handled by the 1D kernel on the window's column averages
    with cap ``sqrt(T^2 - height^2)``. Windows whose normalized column
    profile and cap coincide share one kernel call.
    """
    T = _norm_T(T)
    V = np.abs(g.values)
    nx, ny = g.nx, g.ny
    width = g.rect[1] - g.rect[0]
    S = np.concatenate((np.zeros((nx, 1)), np.cumsum(V, axis=1)), axis=1)  # S[:, j] = sum of rows < j
    groups = {}
    for k in range(1, ny + 1):
        height = k * g.hy
        if T is None:
            cap = None
        elif height > T * (1 + 1e-12):
            break
        else:
            cap = math.sqrt(max(T * T - height * height, 0.0))
            if cap >= width:
                cap = None
            elif cap == 0.0:
                continue
        A = ((S[:, k:] - S[:, :-k]) / k).T  # (windows, nx); window j0 covers rows j0..j0+k-1
        scale = A.max(axis=1)
        nz = np.flatnonzero(scale > 0)
        if len(nz) == 0:
            continue
        N = np.round(A[nz] / scale[nz, None], 12)
        uniq, inv = np.unique(N, axis=0, return_inverse=True)
        inv = np.asarray(inv).ravel()
        for u in range(len(uniq)):
            key = (uniq[u].tobytes(), cap)
            entry = groups.get(key)
            if entry is None:
                if len(groups) >= max_groups:
                    raise BudgetExceeded(f"more than {max_groups} window groups", partial=None)
                entry = groups[key] = [uniq[u], cap, np.zeros(ny)]
            sel = nz[inv == u]
            # row y sees the windows starting in [y-k+1, y]
            s = np.full(ny, -np.inf)
            s[sel] = scale[sel]
            entry[2] = np.maximum(entry[2], _sliding_max(s, k))
    out = V.copy()
    for prof, cap, C in groups.values():
        Mv = maximal_1d_float(prof, g.rect[0], g.hx, cap)
        out = np.maximum(out, Mv[:, None] * np.maximum(C, 0.0)[None, :])
    return g.with_values(out)


def square_maximal(g: GridFn2D, R=None) -> GridFn2D:
    """Sup of averages over grid-aligned ``k x k`` cell blocks of diameter at most ``R``."""
    R = _norm_T(R)
    V = np.abs(g.values)
    nx, ny = g.nx, g.ny
    P = np.zeros((nx + 1, ny + 1))
    P[1:, 1:] = V.cumsum(0).cumsum(1)
    out = V.copy()
    diag = math.hypot(g.hx, g.hy)
    for k in range(2, min(nx, ny) + 1):
        if R is not None and k * diag > R * (1 + 1e-12):
            break
        A = (P[k:, k:] - P[:-k, k:] - P[k:, :-k] + P[:-k, :-k]) / (k * k)
        # cell (i, j) sees windows starting in [i-k+1, i] x [j-k+1, j]
        A = np.concatenate((A, np.full((k - 1, A.shape[1]), -np.inf)), axis=0)
        A = np.concatenate((A, np.full((A.shape[0], k - 1), -np.inf)), axis=1)
        W = _sliding_max(_sliding_max(A, k, 0), k, 1)
        out = np.maximum(out, W)
    return g.with_values(out)


# ---------------------------------------------------------------------------
# total variation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TVResult:
    tv: float
    coarea_tv: float
    levels_used: int


def discrete_tv(g: GridFn2D, thresholds=None) -> TVResult:
    """Anisotropic l1 variation over interior edges, plus the coarea sum over level sets."""
    V = g.values
    dx = np.abs(np.diff(V, axis=0))
    dy = np.abs(np.diff(V, axis=1))
    tv = math.fsum((dx * g.hy).ravel()) + math.fsum((dy * g.hx).ravel())

    if thresholds is None:
        levels = np.unique(V)
    else:
        levels = np.unique(np.asarray(thresholds, dtype=float))
    if len(levels) < 2:
        return TVResult(tv, 0.0, 0)
    # edge (a, b) lies on the boundary of {g > t} iff min(a, b) <= t < max(a, b)
    perim = np.zeros(len(levels) + 1)
    for lo_v, hi_v, w in (
        (np.minimum(V[:-1], V[1:]), np.maximum(V[:-1], V[1:]), g.hy),
        (np.minimum(V[:, :-1], V[:, 1:]), np.maximum(V[:, :-1], V[:, 1:]), g.hx),
    ):
        a = np.searchsorted(levels, lo_v.ravel(), side="left")
        b = np.searchsorted(levels, hi_v.ravel(), side="left")
        np.add.at(perim, a, w)
        np.add.at(perim, b, -w)
    P = np.cumsum(perim)[: len(levels) - 1]
    gaps = np.diff(levels)
    return TVResult(tv, math.fsum(P * gaps), len(levels) - 1)


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------

BLOWUP_RECT = (-0.5, 0.5, -0.5, 0.5)


def f_delta(delta, n: int, rect=BLOWUP_RECT) -> GridFn2D:
    """Indicator of ``[0, delta]^2`` on an ``n x n`` grid; the square must be cell-aligned."""
    g = GridFn2D(tuple(rect), n, n, np.zeros((n, n)))
    delta = float(delta)
    ix = (0.0 - g.rect[0]) / g.hx, (delta - g.rect[0]) / g.hx
    iy = (0.0 - g.rect[2]) / g.hy, (delta - g.rect[2]) / g.hy
    for a in ix + iy:
        if abs(a - round(a)) > 1e-9:
            raise ResolutionTooCoarse(f"delta={delta} is not aligned with an {n}x{n} grid")
    V = np.zeros((n, n))
    V[round(ix[0]):round(ix[1]), round(iy[0]):round(iy[1])] = 1.0
    return g.with_values(V)


def blowup_oracle_tv(delta, rect=BLOWUP_RECT) -> float:
    """Closed-form l1 variation of ``M^1 f_delta`` on ``rect`` when ``R`` exceeds its width.

    On the strip ``0 <= y <= delta`` the function is ``delta/(delta - x)`` left
    of the square, 1 on it and ``delta/x`` right of it; it vanishes off the
    strip. Horizontal variation inside the strip plus the two jumps across
    ``y = 0`` and ``y = delta`` give the total.
    """
    d = float(delta)
    x0, x1 = rect[0], rect[1]
    left, right = -x0, x1
    horiz = d * ((1 - d / (d + left)) + (1 - d / right))
    integral = d * math.log((d + left) / d) + d + d * math.log(right / d)
    return horiz + 2 * integral


def _grid_for(delta, n):
    cells = float(delta) * n / (BLOWUP_RECT[1] - BLOWUP_RECT[0])
    if cells < 8 - 1e-9:
        raise ResolutionTooCoarse(f"delta={delta} spans {cells:g} cells, need at least 8")
    return f_delta(delta, n)


def blowup_experiment(deltas, R=4.0, n: int = 512, *, variants=("directional", "iterated", "strong"),
                      claim_id: str = "blowup"):
    """Variation of the maximal functions of ``f_delta`` as ``delta`` shrinks.

    Returns ``(rows, report)``. Each row holds ``delta``, ``bv`` (exact
    ``delta^2 + 4 delta``), the oracle variation, and per variant the
    measured variation with its ratios to ``delta ln(1/delta)`` and to ``bv``.
    The report passes when the directional output matches ``delta/x`` to 1%
    on the strip, its log-ratio is within 20% of the oracle's, and for every
    variant the ratio to ``bv`` strictly increases with final/initial > 1.5.
    """
    deltas = [float(d) for d in deltas]
    if any(not 0 < d < 1 for d in deltas) or any(b >= a for a, b in zip(deltas, deltas[1:])):
        raise ValueError("deltas must decrease inside (0, 1)")
    if not float(R) > 2:
        raise ValueError("R must exceed 2")
    ops = {
        "directional": lambda g: directional_maximal(g, 1, R),
        "iterated": lambda g: iterated_maximal(g, R),
        "strong": lambda g: strong_maximal(g, R),
    }
    rows = []
    strip_err = []
    oracle_ok = []
    for d in deltas:
        g = _grid_for(d, n)
        bv = d * d + 4 * d
        oracle = blowup_oracle_tv(d)
        row = {"delta": d, "n": n, "bv": bv, "oracle_tv": oracle,
               "oracle_log_ratio": oracle / (d * math.log(1 / d))}
        for name in variants:
            M = ops[name](g)
            tv = discrete_tv(M).tv
            row[f"{name}_tv"] = tv
            row[f"{name}_log_ratio"] = tv / (d * math.log(1 / d))
            row[f"{name}_bv_ratio"] = tv / bv
            if name == "directional":
                xs, ys = g.centers()
                cols = xs > d
                strip = (ys > 0) & (ys < d)
                got = M.values[np.ix_(cols, strip)]
                want = (d / xs[cols])[:, None]
                err = float(np.max(np.abs(got - want) / want))
                row["strip_rel_err"] = err
                strip_err.append(err)
                oracle_ok.append(abs(row["directional_log_ratio"] / row["oracle_log_ratio"] - 1) <= 0.2)
        rows.append(row)

    increasing = {}
    for name in variants:
        r = [row[f"{name}_bv_ratio"] for row in rows]
        increasing[name] = all(b > a for a, b in zip(r, r[1:])) and (r[-1] / r[0] > 1.5 if len(r) > 1 else True)
    a_ok = all(e <= 0.01 for e in strip_err)
    b_ok = all(oracle_ok)
    passed = a_ok and b_ok and all(increasing.values())
    margin = min([0.01 - e for e in strip_err] or [math.inf])
    report = CheckReport(
        claim_id,
        {"rows": rows, "strip_ok": a_ok, "oracle_ok": b_ok, "increasing": increasing},
        {"strip_rel_err": 0.01, "oracle_band": 0.2, "growth_factor": 1.5},
        margin,
        bool(passed),
        ["bound:unbounded-variation", "oracle:blowup-closed-form"],
        {"deltas": deltas, "R": float(R), "n": n, "rect": list(BLOWUP_RECT)},
    )
    return rows, report


def growth_table_2d(g: GridFn2D, Rs, *, claim_id: str = "growth2d"):
    """L^1 norms of every operator for each ``R``, with the bounded-ratio checks."""
    Rs = [float(R) for R in Rs]
    if any(b <= a for a, b in zip(Rs, Rs[1:])):
        raise ValueError("Rs must be increasing")
    rows = []
    for R in Rs:
        rows.append({
            "R": R,
            "strong_l1": strong_maximal(g, R).l1(),
            "iterated_l1": iterated_maximal(g, R).l1(),
            "square_l1": square_maximal(g, R).l1(),
            "directional_l1": directional_maximal(g, 1, R).l1(),
        })
    lp = [math.log(R) if R > 1 else 0.0 for R in Rs]
    rs = [r["strong_l1"] / (1 + L * L) for r, L in zip(rows, lp)]
    rq = [r["square_l1"] / (1 + L) for r, L in zip(rows, lp)]
    for r, a, b in zip(rows, rs, rq):
        r["strong_ratio"] = a
        r["square_ratio"] = b

    def spread(xs):
        xs = [x for x in xs if x > 0]
        return max(xs) / min(xs) if xs else 1.0

    s1, s2 = spread(rs), spread(rq)
    report = CheckReport(
        claim_id,
        {"rows": rows, "strong_spread": s1, "square_spread": s2},
        10.0,
        10.0 - max(s1, s2),
        bool(s1 < 10 and s2 < 10),
        ["bound:l1-growth"],
        {"g": g.to_dict(), "Rs": Rs},
    )
    return rows, report


def convergence_2d(g: GridFn2D, scales, tol: float = 1e-9, *, claim_id: str = "convergence2d") -> CheckReport:
    """``||S_a g - |g| ||_1`` must not increase as the scale ``a`` shrinks."""
    scales = [float(a) for a in scales]
    if any(b >= a for a, b in zip(scales, scales[1:])):
        raise ValueError("scales must be decreasing")
    h = max(g.hx, g.hy)
    if any(a < 2 * h - 1e-12 for a in scales):
        raise ResolutionTooCoarse("every scale must span at least two cells")
    base = np.abs(g.values)
    dists = {}
    for name, op in (("directional", lambda a: directional_maximal(g, 1, a)),
                     ("strong", lambda a: strong_maximal(g, a))):
        dists[name] = [float((op(a).values - base).sum() * g.cell_area) for a in scales]
    ok = all(all(b <= a + tol for a, b in zip(d, d[1:])) for d in dists.values())
    slack = [a - b for d in dists.values() for a, b in zip(d, d[1:])]
    return CheckReport(
        claim_id,
        {"scales": scales, **{f"{k}_l1_distance": v for k, v in dists.items()}},
        tol,
        min(slack) if slack else math.inf,
        ok,
        ["bound:differentiation"],
        {"g": g.to_dict(), "scales": scales, "tol": tol},
    )
