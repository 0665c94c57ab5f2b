import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from natmetric.completion import (CylinderMeasure, cylinder_measure, df_tilde, extend_sequence, measure_density,
                                  nu_measurable_check, sample_point, sample_points)
from natmetric.density import NATURALS, Explicit, Preimage, Progression, Union, WindowSchedule, density_report
from natmetric.distribution import empirical_df
from natmetric.partitions import adapted_hierarchy, polyadic_hierarchy, product_hierarchy
from natmetric.sequences import Constant, Reciprocal, half_open

W = 10**5


@pytest.fixture(scope="module")
def poly3():
    return CylinderMeasure(polyadic_hierarchy(3, W), W)


@pytest.fixture(scope="module")
def poly6():
    return CylinderMeasure(polyadic_hierarchy(6), 10**6)


@pytest.fixture(scope="module")
def cm_phi(phi):
    return CylinderMeasure(adapted_hierarchy(phi, 4, W), W)


def test_cylinder_examples(poly3, cm_phi, phi):
    assert cylinder_measure(poly3, (0, 1, 1)) == pytest.approx(1 / 6, abs=1e-3)
    assert cylinder_measure(poly3, ()) == 1.0
    with pytest.raises(KeyError):
        cylinder_measure(poly3, (0, 0, 1))
    with pytest.raises(KeyError):
        cylinder_measure(poly3, (0, 1, 1, 1))
    count = int(np.sum((phi.head(W) >= 0.25) & (phi.head(W) < 0.5)))
    assert cylinder_measure(cm_phi, (0, 1)) == count / W
    assert cylinder_measure(cm_phi, (0, 1)) == pytest.approx(0.25, abs=1e-3)


@pytest.mark.parametrize("name", ["poly3", "cm_phi"])
def test_normalisation(request, name):
    cm = request.getfixturevalue(name)
    assert cm.level_sums() == [1.0] * (cm.depth + 1)
    for k in range(cm.depth):
        for parent, (kids, cum) in cm.children[k].items():
            assert int(cum[-1]) == cm.counts[k][parent]
            assert all(cm.parent[k + 1][c] == parent for c in kids.tolist())


def test_sampling_is_deterministic(poly3):
    assert sample_point(poly3, 42, 7) == sample_point(poly3, 42, 7)
    assert sample_points(poly3, 20, 1) == sample_points(poly3, 20, 1)
    assert sample_points(poly3, 20, 1) != sample_points(poly3, 20, 2)


def test_sample_frequencies(poly3):
    n = 10**4
    freq = Counter(p.path[-1] for p in sample_points(poly3, n, 2024))
    for r in range(6):
        p = poly3.density(3, r)
        sigma = math.sqrt(p * (1 - p) / n)
        assert abs(freq[r] / n - p) <= 3 * sigma


def test_sample_paths_are_coherent(cm_phi):
    for p in sample_points(cm_phi, 200, 3):
        assert cm_phi.coherent(p.path)
        assert cm_phi.labels[cm_phi.depth][p.representative - 1] == p.path[-1]


def test_depth_zero(phi):
    cm = CylinderMeasure(product_hierarchy([phi], 0, 1000), 1000)
    assert sample_point(cm, 0).path == ()


def test_extension(phi, cm_phi):
    for p in sample_points(cm_phi, 30, 5):
        ext = extend_sequence(phi, p)
        assert ext.uniformly_continuous
        assert ext.oscillation <= 2.0**-4 + 1e-9
        assert ext.low <= ext.value <= ext.high
    ext = extend_sequence(Constant(0.4), sample_point(cm_phi, 9))
    assert ext.oscillation == 0.0


def test_extension_warns_when_not_continuous(poly3):
    pt = sample_point(poly3, 11)
    with pytest.warns(UserWarning, match="uniformly continuous"):
        ext = extend_sequence(Reciprocal(), pt)
    # the cell holds its representative r <= 6 and members far out with 1/n near 0
    assert ext.oscillation >= 1 / 6 - 1 / W


def test_measure_density_examples(poly6):
    assert measure_density(poly6, Progression(2, 2), 6) == pytest.approx(0.5, abs=1e-3)
    for level in range(1, 7):
        assert measure_density(poly6, Explicit((5,)), level) == pytest.approx(1 / math.factorial(level), abs=1e-3)
    assert measure_density(poly6, NATURALS, 4) == 1.0
    with pytest.raises(ValueError):
        measure_density(poly6, NATURALS, 7)


aps = st.lists(st.tuples(st.integers(0, 30), st.integers(1, 30)), min_size=1, max_size=4)


@given(aps)
@settings(max_examples=25, deadline=None)
def test_monotone_and_dominant(poly3, parts):
    S = Union(tuple(Progression(r, m) for r, m in parts))
    nus = [measure_density(poly3, S, k) for k in range(poly3.depth + 1)]
    assert all(a >= b - 1e-3 for a, b in zip(nus, nus[1:]))
    rep = density_report(S, WindowSchedule.geometric(10**3, W))
    assert rep.upper <= nus[-1] + 1e-3


def test_nu_examples(poly6, phi):
    rep = nu_measurable_check(poly6, Progression(3, 4), 6)
    assert rep.measurable and rep.nu == pytest.approx(0.25, abs=1e-3) and rep.matches_density
    rep = nu_measurable_check(poly6, Preimage(phi, half_open(0, 0.5)), 6)
    assert not rep.measurable and rep.total == pytest.approx(2.0, abs=1e-3)
    assert "under-cover" in rep.note
    rep = nu_measurable_check(poly6, Explicit(()), 6)
    assert rep.nu_star == 0.0 and rep.measurable


def test_df_tilde(phi, cm_phi):
    b = {x.x: x for x in df_tilde(phi, cm_phi, [0.3, 0.5], 3)}
    assert b[0.3].low == pytest.approx(0.25, abs=1e-3) and b[0.3].high == pytest.approx(0.375, abs=1e-3)
    assert b[0.5].low - 1e-3 <= 0.5 <= b[0.5].high + 1e-3
    lo, hi = df_tilde(phi, cm_phi, [-0.1, 1.5], 4)
    assert (lo.low, lo.high) == (0.0, 0.0) and (hi.low, hi.high) == (1.0, 1.0)


def test_df_tilde_nested_and_contains_edf(phi, cm_phi):
    grid = [0.1, 0.33, 0.5, 0.71, 0.9]
    F = empirical_df(phi, W)
    prev = None
    for level in range(cm_phi.depth + 1):
        rows = df_tilde(phi, cm_phi, grid, level)
        for i, r in enumerate(rows):
            assert r.low <= F(r.x) <= r.high
            if prev is not None:
                assert prev[i].low <= r.low and r.high <= prev[i].high
        prev = rows
