import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from natmetric.completion import CylinderMeasure, sample_point
from natmetric.density import WindowSchedule
from natmetric.lln import (SURROGATE_NOTE, chebyshev_bound, distinct_irrationals, sampled_ud_experiment,
                           shadowing_check, v_set_density)
from natmetric.partitions import adapted_hierarchy, product_hierarchy
from natmetric.sequences import PiecewiseMonotoneFn

WS = WindowSchedule.geometric(10**3, 10**4)


def test_bound_formula():
    assert chebyshev_bound(1.0, 100, 0.2) == 1.0 - 1.0 / (100 * 0.2 * 0.2)
    assert chebyshev_bound(0.5, 3, 0.9) == 1.0 - 0.25 / (3 * 0.81)


def test_distinct_irrationals():
    a = distinct_irrationals(50, 7)
    assert a == distinct_irrationals(50, 7)
    assert len({s.alpha for s in a}) == 50
    assert all(s.alpha != s.alpha.to_integral_value() for s in a)


def test_single_sequence_wide_eps(phi):
    rep = v_set_density([phi], None, 2.0, WS, check_continuity=False)
    assert rep.bound == 0.75 and rep.estimate == 1.0 and rep.passed


def test_zero_function(phi, sqrt2):
    zero = lambda x: np.zeros_like(x)
    rep = v_set_density([phi, sqrt2], zero, 0.1, WS, check_continuity=False)
    assert rep.C == 0.0 and rep.estimate == 1.0 and rep.passed


def test_vacuous_bound(phi):
    rep = v_set_density([phi], None, 0.1, WS, check_continuity=False)
    assert rep.vacuous and rep.passed


def test_continuity_precondition(phi, sqrt2):
    assert v_set_density([phi, sqrt2], None, 0.3, WS).continuity_ok


@given(st.floats(0.01, 0.5), st.floats(0.01, 0.5))
@settings(max_examples=15, deadline=None)
def test_v_monotone_in_eps(e1, e2):
    e1, e2 = sorted((e1, e2))
    specs = distinct_irrationals(5, 3)
    f = PiecewiseMonotoneFn.tent()
    r1 = v_set_density(specs, f, e1, WS, check_continuity=False)
    r2 = v_set_density(specs, f, e2, WS, check_continuity=False)
    assert all(a <= b for a, b in zip(r1.counts, r2.counts))


@pytest.fixture(scope="module")
def product3(phi, sqrt2, sqrt3):
    return product_hierarchy([phi, sqrt2, sqrt3], 3, 10**5)


def test_sampled_surrogate(product3):
    rep = sampled_ud_experiment(product3.specs, product3, 60, 1, 0.9)
    assert rep.bound == pytest.approx(1 - 1 / (3 * 0.81))
    assert rep.passed and rep.note == SURROGATE_NOTE
    again = sampled_ud_experiment(product3.specs, product3, 60, 1, 0.9)
    assert [r.deviation for r in rep.rows] == [r.deviation for r in again.rows]


def test_sampled_trivial_cases(phi, sqrt2):
    h1 = product_hierarchy([phi, sqrt2], 1, 10**4)
    rep = sampled_ud_experiment([phi], h1, 40, 0, 1.01)
    assert rep.fraction == 1.0 and rep.passed
    rep = sampled_ud_experiment([phi], h1, 0, 0, 0.5)
    assert rep.rows == [] and rep.passed
    with pytest.raises(TypeError):
        sampled_ud_experiment([phi], adapted_hierarchy(phi, 2, 10**4), 5, 0, 0.5)


def test_shadowing(phi):
    cm = CylinderMeasure(adapted_hierarchy(phi, 4, 10**5), 10**5)
    specs = [phi] * 4
    eps = [2.0 ** (1 - n) for n in range(1, 5)]
    for seed in range(5):
        pt = sample_point(cm, seed)
        rep = shadowing_check(specs, pt, eps)
        assert rep.passed
        assert all(r.deviation <= 2.0**-r.n + 1e-9 for r in rep.rows[1:])
        assert all(r.deviation == 0.0 for r in shadowing_check(specs, pt, eps, pick="rep").rows)
        wide = shadowing_check(specs, pt, [3.0] * 4)
        assert all(r.level == 0 and r.deviation <= 1.0 for r in wide.rows)
