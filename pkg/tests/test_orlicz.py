import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest

from maxbv.core import constant, indicator
from maxbv.errors import InvalidExponent, NonPositiveT
from maxbv.grid2d import grid_new
from maxbv.orlicz import OrliczParams, check_embedding, embedding_constant, luxemburg_norm, orlicz_modular


def const_grid(c, n=4):
    return grid_new((0.0, 1.0, 0.0, 1.0), n, n, np.full((n, n), float(c)))


def test_modular_constant_e():
    g = const_grid(math.e)
    assert float(orlicz_modular(g, 1)) == pytest.approx(math.e, rel=1e-14)


def test_modular_vanishes_above_sup():
    g = const_grid(3)
    assert orlicz_modular(g, 3) == 0
    assert orlicz_modular(g, 10) == 0


def test_modular_step_fn_exact_t():
    f = indicator((0, 4), [(0, 2)]).scale(5)
    expected = 2 * 5 * math.log(5)
    assert float(orlicz_modular(f, Fraction(1))) == pytest.approx(expected, rel=1e-14)


def test_modular_validation():
    with pytest.raises(NonPositiveT):
        orlicz_modular(const_grid(1), 0)
    with pytest.raises(InvalidExponent):
        orlicz_modular(const_grid(1), 1, r=Fraction(1, 2))
    with pytest.raises(InvalidExponent):
        OrliczParams(Fraction(1, 2))


@pytest.mark.parametrize("c", [1, math.e, 7.5])
def test_norm_of_constant_vs_root_finder(c):
    # measure 1: (c/t) log(c/t) = 1
    with mpmath.workdps(30):
        u = mpmath.findroot(lambda u: u * mpmath.log(u) - 1, 1.8)
        oracle = float(mpmath.mpf(c) / u)
    assert luxemburg_norm(const_grid(c), 1, tol=1e-13) == pytest.approx(oracle, rel=1e-10)


def test_norm_of_one_reference_digits():
    assert luxemburg_norm(const_grid(1), 1) == pytest.approx(0.5671432904, abs=1e-9)
    assert luxemburg_norm(const_grid(math.e), 1) == pytest.approx(1.5416553, abs=1e-6)


def test_norm_r2_vs_root_finder():
    with mpmath.workdps(30):
        u = mpmath.findroot(lambda u: u * mpmath.log(u) ** 2 - 1, 2.0)
    assert luxemburg_norm(const_grid(2), 2, tol=1e-13) == pytest.approx(float(2 / u), rel=1e-10)


def test_norm_modular_bracket():
    g = grid_new((0.0, 2.0, 0.0, 1.0), 4, 2, np.arange(8.0).reshape(4, 2))
    t = luxemburg_norm(g, 1, tol=1e-10)
    m = float(orlicz_modular(g, t))
    assert 1 - 1e-10 <= m <= 1


def test_zero_function():
    assert luxemburg_norm(const_grid(0), 1) == 0.0
    assert luxemburg_norm(constant((0, 1), 0), 2) == 0.0


def test_norm_homogeneous():
    g = grid_new((0.0, 1.0, 0.0, 1.0), 3, 3, np.arange(9.0).reshape(3, 3))
    a = luxemburg_norm(g, 1, tol=1e-13)
    b = luxemburg_norm(g.with_values(3 * g.values), 1, tol=1e-13)
    assert b == pytest.approx(3 * a, rel=1e-10)


def test_embedding_constant():
    assert embedding_constant(1, 2) == 1.0
    assert embedding_constant(2, 2) == pytest.approx(2.0)


@pytest.mark.parametrize("r", [1, 2])
def test_check_embedding(r):
    rep = check_embedding(const_grid(1), r)
    assert rep.passed and rep.margin > 0
    with pytest.raises(ValueError):
        check_embedding(const_grid(1), r, d=3)
