from fractions import Fraction

import pytest
from hypothesis import strategies as st

from maxbv.core import Interval, StepFn

_acceptance = []


def pytest_runtest_logreport(report):
    if "test_acceptance.py" in report.nodeid and report.when == "call":
        _acceptance.append((report.nodeid.split("::")[-1], report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _acceptance:
        terminalreporter.write_line(f"{'PASS' if outcome == 'passed' else 'FAIL'}  {name}")


dyadic = st.integers(-64, 64).map(lambda k: Fraction(k, 4))


@st.composite
def step_fns(draw, max_pieces=6, lo=-4, hi=4, denom=4, values=dyadic):
    """Step functions on ``[lo, hi]`` with breakpoints on the ``1/denom`` grid."""
    slots = list(range(1, (hi - lo) * denom))
    n = draw(st.integers(1, max_pieces))
    cuts = sorted(draw(st.lists(st.sampled_from(slots), min_size=n - 1, max_size=n - 1, unique=True)))
    vals = draw(st.lists(values, min_size=n, max_size=n))
    bps = tuple(Fraction(lo) + Fraction(c, denom) for c in cuts)
    return StepFn(Interval(Fraction(lo), Fraction(hi)), bps, tuple(vals))


@pytest.fixture
def chi01():
    from maxbv.core import indicator

    return indicator(Interval(-8, 8), [(0, 1)])
