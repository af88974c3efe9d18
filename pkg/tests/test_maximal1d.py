import math
from fractions import Fraction

import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import step_fns
from maxbv.core import Interval, constant, indicator, integral_abs, step_new, variation
from maxbv.errors import BudgetExceeded, MarginTooSmall, NonPositiveR, OutsideDomain
from maxbv.maximal1d import (
    CheckReport,
    check_bd_bound,
    check_convergence,
    check_counterexample,
    check_indicator_profile,
    check_poincare,
    check_weak_type,
    counterexample_bound,
    dyadic_counterexample,
    evaluator,
    growth_table_1d,
    indicator_l1_closed_form,
    maximal_eval,
    maximal_profile,
    sampled_rearrangement,
)

F = Fraction

queries = st.integers(-15, 15).map(lambda k: F(k, 4) + F(1, 7))
radii = st.sampled_from([F(1, 4), F(1, 2), F(1), F(3, 2), F(4), None])


def avg(f, a, b):
    return integral_abs(f, Interval(a, b)) / (b - a)


# -- worked examples ---------------------------------------------------------

def test_eval_examples(chi01):
    r = maximal_eval(chi01, F(3, 2), 1)
    assert r.value == F(1, 2) and r.witness == Interval(F(1, 2), F(3, 2))
    assert maximal_eval(chi01, 3, 1).value == 0
    r = maximal_eval(chi01, -1, None)
    assert r.value == F(1, 2) and r.witness == Interval(-1, 1)
    assert maximal_eval(chi01, F(1, 2), math.inf).value == 1


def test_eval_errors(chi01):
    with pytest.raises(OutsideDomain):
        maximal_eval(chi01, 9, 1)
    with pytest.raises(NonPositiveR):
        maximal_eval(chi01, 0, -1)


@pytest.mark.parametrize("x, want", [
    (F(1, 2), 1), (2, F(1, 2)), (F(5, 2), F(2, 5)), (F(7, 2), F(1, 6)), (5, 0),
    (-1, F(1, 2)), (F(-5, 2), F(1, 6)), (-4, 0),
])
def test_indicator_closed_form_R3(chi01, x, want):
    # 1 on [0,1], 1/x on (1,R], (1+R-x)/R on (R,R+1), mirrored on the left
    assert maximal_eval(chi01, x, 3).value == want


def test_constant_is_fixed():
    f = constant((0, 5), F(-3, 2))
    for x in (0, F(1, 3), 5):
        assert maximal_eval(f, x, F(1, 2)).value == F(3, 2)


def test_degenerate_witness_at_jump():
    f = step_new((0, 4), [1, 2], [0, 5, 0])
    r = maximal_eval(f, F(3, 2), F(1, 8))
    assert r.value == 5 and r.witness.length <= F(1, 8)


# -- properties --------------------------------------------------------------

@settings(max_examples=60, deadline=None)
@given(step_fns(), queries, radii)
def test_witness_average_matches(f, x, R):
    from maxbv.core import canonical_at

    r = maximal_eval(f, x, R)
    if r.degenerate:
        assert r.value == abs(canonical_at(f, x))
    else:
        assert avg(f, r.witness.lo, r.witness.hi) == r.value
        assert x in r.witness
        if R is not None:
            assert r.witness.length <= R


@settings(max_examples=60, deadline=None)
@given(step_fns(), queries, radii)
def test_domination(f, x, R):
    from maxbv.core import canonical_at

    assert maximal_eval(f, x, R).value >= abs(canonical_at(f, x))


@settings(max_examples=60, deadline=None)
@given(step_fns(), queries)
def test_monotone_in_R(f, x):
    vals = [maximal_eval(f, x, R).value for R in (F(1, 4), F(1), F(4), None)]
    assert vals == sorted(vals)


@settings(max_examples=60, deadline=None)
@given(step_fns(), queries, radii, st.integers(-8, 8))
def test_homogeneity(f, x, R, k):
    c = F(k, 2)
    assert maximal_eval(f.scale(c), x, R).value == abs(c) * maximal_eval(f, x, R).value


@settings(max_examples=60, deadline=None)
@given(step_fns(max_pieces=4), step_fns(max_pieces=4), queries, radii)
def test_sublinear(f, g, x, R):
    assert maximal_eval(f + g, x, R).value <= maximal_eval(f, x, R).value + maximal_eval(g, x, R).value


@settings(max_examples=25, deadline=None)
@given(step_fns(max_pieces=4, lo=-2, hi=2), st.integers(-7, 7), st.sampled_from([F(1, 2), F(1), None]))
def test_grid_sandwich(f, k, R):
    # averages over intervals with endpoints on a dyadic grid bound M from below,
    # and refining the grid can only close the gap
    x = F(k, 4) + F(1, 13)
    lo, hi = f.domain.lo, f.domain.hi
    M = maximal_eval(f, x, R).value
    gaps = []
    for h in (F(1, 8), F(1, 16)):
        grid = [lo + i * h for i in range(int((hi - lo) / h) + 1)]
        best = max(
            avg(f, a, b) for a in grid if a <= x for b in grid
            if b >= x and b > a and (R is None or b - a <= R)
        )
        assert best <= M
        gaps.append(M - best)
    assert gaps[1] <= gaps[0]


# -- profiles ----------------------------------------------------------------

@pytest.mark.parametrize("R", [1, 2, 4, 8])
def test_profile_closed_form(R):
    f = indicator(Interval(-12, 12), [(0, 1)])
    p = maximal_profile(f, R, 1e-7)
    assert abs(p.l1_estimate - indicator_l1_closed_form(R)) < 1e-6
    assert p.variation_lower == 2
    assert p.converged
    assert p.l1_error <= 1e-7


def test_closed_form_symbolic():
    # independent derivation of the L1 norm on the line
    x, R = sp.symbols("x R", positive=True)
    right = sp.integrate(1 / x, (x, 1, R)) + sp.integrate((1 + R - x) / R, (x, R, R + 1))
    total = 1 + 2 * right
    assert sp.simplify(total - (1 + 1 / R + 2 * sp.log(R))) == 0


def test_dm_l2_symbolic_and_profile():
    x = sp.symbols("x")
    # R = 1: M = x + 1 on [-1, 0], 1 on [0, 1], 2 - x on [1, 2]
    exact = sp.integrate(sp.diff(x + 1, x) ** 2, (x, -1, 0)) + sp.integrate(sp.diff(2 - x, x) ** 2, (x, 1, 2))
    assert exact == 2
    p = maximal_profile(indicator(Interval(-8, 8), [(0, 1)]), 1, 1e-8)
    assert abs(p.dm_l2_squared() - 2) < 1e-4


def test_profile_nodes_include_seeds(chi01):
    p = maximal_profile(chi01, F(3, 2), 1e-4)
    for s in (0, 1, F(-3, 2), F(5, 2), F(3, 2), F(-1, 2)):
        assert F(s) in p.nodes


def test_profile_zero_function():
    p = maximal_profile(constant((0, 3), 0), 1, 1e-6)
    assert p.l1_estimate == 0 and p.variation_lower == 0


def test_profile_budget(chi01):
    with pytest.raises(BudgetExceeded) as e:
        maximal_profile(chi01, 2, 1e-12, max_depth=3)
    assert e.value.partial is not None and not e.value.partial.converged


def test_profile_depth_from_env(chi01, monkeypatch):
    monkeypatch.setenv("MAXBV_MAX_DEPTH", "2")
    with pytest.raises(BudgetExceeded):
        maximal_profile(chi01, 2, 1e-12)


def test_profile_csv_rows(chi01):
    rows = list(maximal_profile(chi01, 1, 1e-3).csv_rows("t"))
    assert rows[0] == ("node_exact", "node", "value_exact", "value", "tag")
    assert rows[1][0] == "-8" and rows[1][-1] == "t"


def test_evaluator_cached(chi01):
    assert evaluator(chi01, 1) is evaluator(chi01, F(1))


# -- checks ------------------------------------------------------------------

def test_bd_indicator(chi01):
    for R in (F(1, 4), 1, 4):
        rep = check_bd_bound(chi01, R)
        assert rep.passed, rep.to_dict()


def test_bd_needs_finite_R(chi01):
    with pytest.raises(NonPositiveR):
        check_bd_bound(chi01, None)


def test_weak_indicator():
    f = indicator(Interval(-64, 64), [(0, 1)])
    rep = check_weak_type(f, [F(1, 2), 1, 2, 4])
    assert rep.passed
    # on the line (Mf)*(t) = 2/(t+1) for t >= 1
    for t, v in zip(rep.measured["t"][1:], rep.measured["rearranged_Mf"][1:]):
        assert abs(v - 2 / (t + 1)) < 1e-3


def test_rearrangement_of_profile():
    p = maximal_profile(indicator(Interval(-64, 64), [(0, 1)]), None, 1e-6)
    r = sampled_rearrangement(p, [0, 1, 3, 200])
    assert r[0] == pytest.approx(1) and r[1] == pytest.approx(1, abs=1e-6)
    assert r[2] == pytest.approx(0.5, abs=1e-3) and r[3] == 0


def test_poincare_indicator():
    rep = check_poincare(indicator(Interval(-8, 8), [(0, 1)]), 1)
    assert rep.passed
    assert rep.measured["lambda_N"] == 3
    assert rep.measured["dm_l2_squared"] == pytest.approx(2, abs=1e-4)


def test_poincare_margin():
    with pytest.raises(MarginTooSmall):
        check_poincare(indicator(Interval(-1, 3), [(0, 1)]), 2)


def test_counterexample_bound_value():
    assert counterexample_bound(F(1, 4)) == (4, 13)
    N, b = counterexample_bound(F(1, 2))
    assert N == 3 and b == 2 + 8 + F(2) ** -1 / F(1, 2)


@pytest.mark.parametrize("n", [1, 4, 10])
def test_counterexample_variation(n):
    assert variation(dyadic_counterexample(n)) == 2 * (n + 2)


def test_counterexample_check():
    rep = check_counterexample(12, F(1, 4), baseline=10)
    assert rep.passed
    with pytest.raises(ValueError):
        check_counterexample(12, 1)


def test_convergence_indicator():
    rep = check_convergence(indicator(Interval(-4, 4), [(0, 1)]), [F(1, 2 ** k) for k in range(1, 6)])
    assert rep.passed
    d = rep.measured["l1_distance"]
    # ||M_a chi - chi||_1 = a for a <= 1
    for k, v in enumerate(d, start=1):
        assert v == pytest.approx(2.0 ** -k, abs=1e-6)


def test_convergence_scales_validated(chi01):
    with pytest.raises(ValueError):
        check_convergence(chi01, [F(1, 4), F(1, 2)])


def test_growth_table(chi01):
    rows, rep = growth_table_1d(indicator(Interval(-64, 64), [(0, 1)]), [1, 4, 16])
    l1 = [r[1] for r in rows]
    assert l1 == sorted(l1) and rep.passed
    assert l1[1] == pytest.approx(indicator_l1_closed_form(4), abs=1e-5)


def test_indicator_profile_check():
    assert check_indicator_profile(2).passed


def test_report_roundtrip(chi01):
    rep = check_bd_bound(chi01, 1)
    d = rep.to_dict()
    assert CheckReport.from_dict(d).to_dict() == d
    assert variation(step_new((0, 1), [], [1])) == 0
