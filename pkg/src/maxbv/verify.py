"""Claim registry and reproducible verification suites.

Every check that maxbv knows how to run is registered as a :class:`ClaimSpec`
whose anchor formula is listed in the bundled ``claims.txt`` manifest. A suite
is a pure function of its name and seed; wall time is kept on the result
object but never serialized, so two runs produce byte-identical JSON.
"""

from __future__ import annotations

import json
import random
import time
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources

import mpmath
import numpy as np

from . import __version__
from .core import Interval, StepFn, as_rat, indicator, rat_str
from .errors import UnknownSuite
from .grid2d import GridFn2D, blowup_experiment, growth_table_2d
from .maximal1d import (
    CheckReport,
    check_bd_bound,
    check_convergence,
    check_counterexample,
    check_indicator_profile,
    check_poincare,
    check_weak_type,
    growth_table_1d,
    maximal_profile,
)
from .orlicz import check_embedding, luxemburg_norm

__all__ = [
    "ClaimSpec",
    "SuiteResult",
    "CLAIMS",
    "SUITES",
    "load_manifest",
    "random_stepfn",
    "random_grid",
    "two_bump_grid",
    "run_suite",
    "replay",
]


@dataclass(frozen=True)
class ClaimSpec:
    claim_id: str
    anchor: str
    generator: str
    tolerance: float
    bound: str

    def __post_init__(self):
        if not self.anchor.strip():
            raise ValueError(f"{self.claim_id}: empty anchor")
        if not self.tolerance > 0:
            raise ValueError(f"{self.claim_id}: tolerance must be positive")


CLAIMS = {c.claim_id: c for c in [
    ClaimSpec("remark-log", "||M_R chi_[0,1]||_1 = 1 + 1/R + 2 log R",
              "chi_[0,1] on [-12,12], R in {1,2,4,8}", 1e-6, "1 + 1/R + 2 ln R; variation 2"),
    ClaimSpec("bd", "||M_R f||_1 <= 3(1 + 2 log+ R)||f||_1 + 3|D|f||(I)",
              "chi_[0,1] and 200 seeded step functions (<= 20 pieces), R in {1/4,1,4}", 1e-6,
              "3(1+2log+R)||f||_1 + 3V(|f|); V(M_R f) <= V(|f|)"),
    ClaimSpec("weak-type", "(Mf)*(t) <= 2||f||_1 / t",
              "chi_[0,1] and 50 seeded step functions, 50 thresholds", 1e-6, "2||f||_1/t"),
    ClaimSpec("poincare", "||f||_2^2 <= min{term1, lambda(N)^2 ||D M_R f||_2^2}",
              "chi_[0,1] (R=1) and 50 seeded compactly supported step functions, R in {1/2,2}", 1e-6,
              "min{c^2 ||f||_BV^2/lambda(N) + lambda(N)^2/2 ||DM_Rf||_2^2, lambda(N)^2 ||DM_Rf||_2^2}"),
    ClaimSpec("poincare-dm", "||D M_1 chi_[0,1]||_2^2 = 2",
              "chi_[0,1] on [-8,8], R=1", 1e-4, "2"),
    ClaimSpec("counterexample", "V(M_R f) <= 2 + 2(N+1) + sum_{n>N} 2^(-n+2)/R",
              "dyadic block family, n_max in {10,20}, R=1/4", 1e-3, "13 for R=1/4"),
    ClaimSpec("charact", "||M_a f - f||_1 -> 0 and V(f) <= liminf V(M_a f)",
              "chi_[0,1] and 20 seeded step functions, a = 2^-k, k=1..8", 1e-3, "V(f) <= min_k V(M_a f) + tol"),
    ClaimSpec("blowup", "|D M^1_R f_delta| = Theta(delta log 1/delta)",
              "f_delta = chi_[0,delta]^2 on (-1/2,1/2)^2, delta = 2^-3..2^-6, R=4, 512x512", 0.2,
              "within 20% of the closed-form variation ratio; ratio to ||f_delta||_BV increasing"),
    ClaimSpec("growth1d", "||M_R f||_1 <= c ||f||_1 log+ R",
              "chi_[0,1] on [-64,64], R in {1,4,16,64}", 10.0, "max/min of ||M_R f||_1/(1+ln+R) < 10"),
    ClaimSpec("growth2d", "||M^S_R f||_1 <= c(||f||_BV + (log+ R)^2 ||f||_1)",
              "two-bump grid 128x128 on [0,64]^2, R in {1,4,16,64}", 10.0,
              "max/min of ||M^S_R f||_1/(1+(ln+R)^2) and ||M_R f||_1/(1+ln+R) < 10"),
    ClaimSpec("orlicz-norm", "||g||_{L log+ L} = inf{t > 0 : int (|g|/t) log+(|g|/t) <= 1}",
              "g = 1 on [0,1], r = 1", 1e-4, "1/u with u ln u = 1"),
    ClaimSpec("orlicz-embedding", "||g||_{L(log+L)^r} <= (r(d-1))^(r(d-1)/d) ||g||_{d/(d-1)}",
              "100 seeded 16x16 grids on [0,1]^2, r in {1,2}, d=2", 1e-8, "r^(r/2) ||g||_2"),
]}


def load_manifest() -> dict:
    """Parse ``claims.txt``: one ``claim_id = anchor`` per line, ``#`` comments."""
    text = resources.files("maxbv").joinpath("claims.txt").read_text(encoding="utf-8")
    out = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, _, val = line.partition("=")
        out[key.strip()] = val.strip()
    return out


# ---------------------------------------------------------------------------
# seeded families
# ---------------------------------------------------------------------------


def _sub_seed(seed: int, tag: str, i: int) -> int:
    # stable across Python runs (no hash randomization)
    h = 0
    for ch in f"{seed}:{tag}:{i}":
        h = (h * 1_000_003 + ord(ch)) % (1 << 61)
    return h


def random_stepfn(seed: int, max_pieces: int = 20, value_range=(-4, 4),
                  domain: Interval = Interval(Fraction(-8), Fraction(8)), *, denom: int = 8) -> StepFn:
    """Reproducible step function with dyadic breakpoints (``1/denom`` grid) and quarter-integer values."""
    if max_pieces < 1:
        raise ValueError("max_pieces must be at least 1")
    rng = random.Random(seed)
    lo, hi = as_rat(domain.lo), as_rat(domain.hi)
    slots = int((hi - lo) * denom) - 1
    n = rng.randint(1, max_pieces)
    n = min(n, slots + 1)
    cuts = sorted(rng.sample(range(1, slots + 1), n - 1))
    bps = [lo + Fraction(c, denom) for c in cuts]
    vlo, vhi = value_range
    vals = [Fraction(rng.randint(int(4 * vlo), int(4 * vhi)), 4) for _ in range(n)]
    return StepFn(Interval(lo, hi), tuple(bps), tuple(vals))


def random_grid(seed: int, n: int = 16, levels: int = 16) -> GridFn2D:
    """``n x n`` grid on the unit square with values in ``{0, 1/2, ..., levels/2}``."""
    rng = np.random.default_rng(seed)
    return GridFn2D((0.0, 1.0, 0.0, 1.0), n, n, rng.integers(0, levels + 1, size=(n, n)) / 2)


def two_bump_grid(n: int = 128, size: float = 64.0) -> GridFn2D:
    """A unit bump and a taller thin bump, cell-aligned on ``[0, size]^2``."""
    V = np.zeros((n, n))
    h = size / n
    c = lambda t: int(round(t / h))  # noqa: E731
    V[c(8):c(10), c(8):c(10)] = 1.0
    V[c(40):c(41), c(20):c(24)] = 2.0
    return GridFn2D((0.0, size, 0.0, size), n, n, V)


def _chi(window=12):
    w = Fraction(window)
    return indicator(Interval(-w, w), [(0, 1)])


# ---------------------------------------------------------------------------
# suites
# ---------------------------------------------------------------------------


BD_RS = (Fraction(1, 4), Fraction(1), Fraction(4))
WEAK_TS = [2.0 ** (-3 + 10 * k / 49) for k in range(50)]
CHARACT_SCALES = [Fraction(1, 2 ** k) for k in range(1, 9)]


def _suite_remark_log(seed):
    return [check_indicator_profile(R, 1e-6, claim_id=f"remark-log[R={R}]") for R in (1, 2, 4, 8)]


def _suite_bd(seed, count=200):
    out = []
    fs = [("chi", _chi())] + [(str(i), random_stepfn(_sub_seed(seed, "bd", i), 20)) for i in range(count)]
    for name, f in fs:
        for R in BD_RS:
            out.append(check_bd_bound(f, R, 1e-6, claim_id=f"bd[{name},R={rat_str(R)}]"))
    return out


def _suite_weak(seed, count=50):
    out = [check_weak_type(_chi(64), WEAK_TS, 1e-6, claim_id="weak-type[chi]")]
    for i in range(count):
        f = random_stepfn(_sub_seed(seed, "weak", i), 20)
        out.append(check_weak_type(f, WEAK_TS, 1e-6, claim_id=f"weak-type[{i}]"))
    return out


def poincare_instance(seed: int, R) -> StepFn:
    R = as_rat(R)
    f = random_stepfn(seed, 10, domain=Interval(Fraction(-4), Fraction(4)))
    return f.extend(Interval(-4 - R - 1, 4 + R + 1))


def poincare_dm_report(claim_id="poincare-dm") -> CheckReport:
    """Closed-form cross-check: ``M_1 chi_[0,1]`` has slope -1 on ``[1, 2]`` and is flat elsewhere."""
    prof = maximal_profile(indicator(Interval(-8, 8), [(0, 1)]), 1, 1e-8)
    got = prof.dm_l2_squared()
    return CheckReport(claim_id, {"dm_l2_squared": got}, 2.0, 1e-4 - abs(got - 2), abs(got - 2) <= 1e-4,
                       ["oracle:indicator-closed-form"], {"R": "1"})


def _suite_poincare(seed, count=50):
    out = [check_poincare(indicator(Interval(-8, 8), [(0, 1)]), 1, 1e-6, claim_id="poincare[chi,R=1]"),
           poincare_dm_report()]
    for i in range(count):
        for R in (Fraction(1, 2), Fraction(2)):
            f = poincare_instance(_sub_seed(seed, "poincare", i), R)
            if f.is_zero():
                continue
            out.append(check_poincare(f, R, 1e-6, claim_id=f"poincare[{i},R={rat_str(R)}]"))
    return out


def _suite_counterexample(seed):
    return [check_counterexample(20, Fraction(1, 4), 1e-3, claim_id="counterexample[R=1/4]")]


def _suite_charact(seed, count=20):
    out = [check_convergence(_chi(4), CHARACT_SCALES, 1e-3, claim_id="charact[chi]")]
    for i in range(count):
        f = random_stepfn(_sub_seed(seed, "charact", i), 10)
        out.append(check_convergence(f, CHARACT_SCALES, 1e-3, claim_id=f"charact[{i}]"))
    return out


def _suite_blowup(seed):
    return [blowup_experiment([2.0 ** -k for k in range(3, 7)], 4.0, 512, claim_id="blowup[R=4]")[1]]


def _suite_growth(seed):
    Rs = [1, 4, 16, 64]
    _, r1 = growth_table_1d(_chi(64), Rs, 1e-6, claim_id="growth1d[chi]")
    _, r2 = growth_table_2d(two_bump_grid(), Rs, claim_id="growth2d[two-bump]")
    return [r1, r2]


def orlicz_oracle_report(claim_id="orlicz-norm[g=1]") -> CheckReport:
    g = indicator(Interval(0, 1), [(0, 1)])
    got = luxemburg_norm(g, 1, 1e-12)
    with mpmath.workdps(30):
        u = mpmath.findroot(lambda u: u * mpmath.log(u) - 1, 1.7)
        want = float(1 / u)
    err = abs(got - want)
    return CheckReport(claim_id, {"luxemburg_norm": got, "oracle": want}, want, 1e-4 - err, err <= 1e-4,
                       ["oracle:u-log-u"], {"r": "1"})


def _suite_orlicz(seed, count=100):
    out = [orlicz_oracle_report()]
    for i in range(count):
        g = random_grid(_sub_seed(seed, "orlicz", i))
        for r in (1, 2):
            out.append(check_embedding(g, r, 2, 1e-8, claim_id=f"orlicz-embedding[{i},r={r}]"))
    return out


SUITES = {
    "remark-log": _suite_remark_log,
    "bd": _suite_bd,
    "weak-type": _suite_weak,
    "poincare": _suite_poincare,
    "counterexample": _suite_counterexample,
    "charact": _suite_charact,
    "blowup": _suite_blowup,
    "growth": _suite_growth,
    "orlicz": _suite_orlicz,
}


@dataclass
class SuiteResult:
    suite: str
    seed: int
    reports: list
    version: str = __version__
    wall_time: float = field(default=0.0, compare=False)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.reports)

    def failures(self) -> list:
        return [r for r in self.reports if not r.passed]

    def to_dict(self) -> dict:
        # wall time is left out on purpose: the serialized form is a pure function of (suite, seed)
        return {
            "suite": self.suite,
            "seed": self.seed,
            "version": self.version,
            "passed": self.passed,
            "n_reports": len(self.reports),
            "n_failed": len(self.failures()),
            "reports": [r.to_dict() for r in self.reports],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)


def run_suite(name: str, seed: int = 7) -> SuiteResult:
    if name != "all" and name not in SUITES:
        raise UnknownSuite(name)
    t0 = time.perf_counter()
    names = list(SUITES) if name == "all" else [name]
    reports = []
    for n in names:
        reports.extend(SUITES[n](seed))
    return SuiteResult(name, seed, reports, wall_time=time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# replay
# ---------------------------------------------------------------------------


def _fn(d):
    return GridFn2D.from_dict(d) if "nx" in d else StepFn.from_dict(d)


_REPLAY = {
    "remark-log": lambda i, c: check_indicator_profile(i["R"], i["tol"], window=i["window"], claim_id=c),
    "bd": lambda i, c: check_bd_bound(_fn(i["f"]), i["R"], i["tol"], claim_id=c),
    "weak-type": lambda i, c: check_weak_type(_fn(i["f"]), i["thresholds"], i["tol"], claim_id=c),
    "poincare": lambda i, c: check_poincare(_fn(i["f"]), i["R"], i["tol"], claim_id=c),
    "poincare-dm": lambda i, c: poincare_dm_report(c),
    "counterexample": lambda i, c: check_counterexample(i["n_max"], i["R"], i["tol"], baseline=i["baseline"],
                                                        left_len=i["left_len"], claim_id=c),
    "charact": lambda i, c: check_convergence(_fn(i["f"]), i["scales"], i["tol"], claim_id=c),
    "blowup": lambda i, c: blowup_experiment(i["deltas"], i["R"], i["n"], claim_id=c)[1],
    "growth1d": lambda i, c: growth_table_1d(_fn(i["f"]), i["Rs"], i["tol"], claim_id=c)[1],
    "growth2d": lambda i, c: growth_table_2d(_fn(i["g"]), i["Rs"], claim_id=c)[1],
    "orlicz-norm": lambda i, c: orlicz_oracle_report(c),
    "orlicz-embedding": lambda i, c: check_embedding(_fn(i["g"]), i["r"], i["d"], i["tol"], claim_id=c),
}


def claim_kind(claim_id: str) -> str:
    return claim_id.split("[", 1)[0]


def replay(report) -> CheckReport:
    """Re-run the check behind a serialized report from its embedded instance."""
    if isinstance(report, CheckReport):
        report = report.to_dict()
    kind = claim_kind(report["claim_id"])
    fn = _REPLAY.get(kind)
    if fn is None:
        raise UnknownSuite(kind)
    return fn(report.get("instance") or {}, report["claim_id"])
