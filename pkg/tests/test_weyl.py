import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from natmetric.density import WindowSchedule, partial_mean
from natmetric.sequences import (Constant, FracMultiples, PiecewiseMonotoneFn, PointwiseSum, Reciprocal,
                                 VanDerCorput)
from natmetric.weyl import integral_target, integral_test, moment_test, tabulated, ud_mod1_verdict

W5 = WindowSchedule.geometric(10**3, 10**5)
UNIFORM = tabulated([0.0, 1.0], [0.0, 1.0])


def test_moments_phi(phi):
    rep = moment_test(phi, 5, WindowSchedule.single(10**5), 0.01)
    assert rep.passed
    assert [rep.targets[h] for h in range(1, 6)] == [1 / 2, 1 / 3, 1 / 4, 1 / 5, 1 / 6]
    # brute-force oracle for the attained values
    v = phi.head(10**5).tolist()
    for h in (1, 3, 5):
        assert rep.moments[h][-1] == pytest.approx(sum(x**h for x in v) / len(v), abs=1e-12)


def test_moments_fail_and_reject():
    rep = moment_test(Constant(1.0), 5, W5, 0.01)
    assert not rep.passed and all(m == 1.0 for h in rep.moments for m in rep.moments[h])
    assert moment_test(VanDerCorput(2), 3, WindowSchedule.single(10**5)).passed
    with pytest.raises(ValueError):
        moment_test(PointwiseSum((Constant(0.9), Constant(0.9))), 3, W5)


@pytest.mark.parametrize("spec", [FracMultiples("0.7548776662466927600"), VanDerCorput(5), Reciprocal()])
def test_first_moment_is_partial_mean(spec):
    rep = moment_test(spec, 1, W5)
    assert rep.moments[1] == [partial_mean(spec, N) for N in W5.windows]


@given(st.sampled_from([VanDerCorput(2), Reciprocal(), FracMultiples("0.1234567891011121314")]),
       st.integers(1, 6))
@settings(max_examples=20, deadline=None)
def test_moment_monotone(spec, h):
    rep = moment_test(spec, h + 1, WindowSchedule((10, 100, 5000)))
    for a, b in zip(rep.moments[h + 1], rep.moments[h]):
        assert a <= b


@pytest.mark.parametrize("f,target", [(None, 1 / 2), (PiecewiseMonotoneFn.power(2.0), 1 / 3),
                                      (PiecewiseMonotoneFn.tent(), 1 / 2)])
def test_integral_examples(phi, f, target):
    assert integral_target(f, UNIFORM, 0.0, 1.0, 0.01) == pytest.approx(target, abs=1e-3)
    assert integral_test(phi, f, UNIFORM, 10**5, 0.01, interval=(0.0, 1.0)) <= 0.01


def test_integral_target_validation():
    with pytest.raises(ValueError):
        integral_target(None, tabulated([0, 0.5, 1], [0, 0.8, 0.6]), 0, 1, 0.01)
    with pytest.raises(ValueError):
        integral_target(None, tabulated([0, 1], [0.1, 1]), 0, 1, 0.01)


def test_ramp_converges_to_interval_mass(phi):
    # trapezoids around [0.25, 0.5) with shrinking ramps; lambda([0.25, 0.5)) = 1/4
    devs_target, devs_emp = [], []
    for w in (0.1, 0.03, 0.01):
        ramp = lambda x, w=w: np.interp(x, [0.25 - w, 0.25, 0.5, 0.5 + w], [0.0, 1.0, 1.0, 0.0])
        devs_target.append(abs(integral_target(ramp, UNIFORM, 0.0, 1.0, 1e-4) - 0.25))
        devs_emp.append(abs(partial_mean(ramp(phi.head(10**5)), 10**5) - 0.25))
    assert devs_target[0] > devs_target[1] > devs_target[2]
    assert devs_emp[0] > devs_emp[1] > devs_emp[2]
    assert devs_target[-1] == pytest.approx(0.01, abs=1e-3)


def test_ud_verdicts(phi):
    assert ud_mod1_verdict(phi, W5).passed
    assert not ud_mod1_verdict(Constant(0.3), W5).passed
    assert ud_mod1_verdict(PointwiseSum((phi, Reciprocal()), mod1=True), W5).passed
