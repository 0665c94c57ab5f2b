import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from natmetric.density import NATURALS, Progression
from natmetric.partitions import (CustomHierarchy, NaturalMetric, adapted_hierarchy, ball_trace, dump_hierarchy,
                                  first_divergence_level, load_hierarchy, metric_eval, metric_interval,
                                  naturality_check, polyadic_hierarchy, product_hierarchy,
                                  uniform_continuity_check)
from natmetric.sequences import PHI, Constant, FracMultiples, Reciprocal, SequenceSpec, VanDerCorput

pts = st.integers(1, 10**4)


def residue_metric(a, b, L):
    """Truncated psi-sum for the residue hierarchy, plus the tail when a != b."""
    total = sum(((a - b) % math.factorial(n) != 0) / 2**n for n in range(1, L + 1))
    sep = any((a - b) % math.factorial(n) for n in range(1, L + 1))
    return total + (2.0**-L if a != b and sep else 0.0)


def test_polyadic_examples():
    h = polyadic_hierarchy(3, calibration_window=10**5)
    assert h.num_cells(3) == 6
    assert np.allclose(h.densities[3], 1 / 6)
    assert h.check_refinement() is None
    M = NaturalMetric(polyadic_hierarchy(5))
    assert first_divergence_level(M, 1, 7) == 4
    assert first_divergence_level(M, 1, 2) == 2
    # 1 and 3 agree mod 1 and mod 2, differ mod 6
    assert first_divergence_level(M, 1, 3) == 3
    assert first_divergence_level(M, 9, 9) is None
    assert metric_eval(M, 1, 7) == 0.125
    assert metric_eval(M, 1, 2) == 0.5
    assert metric_eval(M, 5, 5) == 0.0
    with pytest.raises(ValueError):
        polyadic_hierarchy(13)


def test_unseparated_interval():
    M = NaturalMetric(polyadic_hierarchy(3))
    assert first_divergence_level(M, 1, 7) is None
    assert metric_eval(M, 1, 7) == 0.0
    assert metric_interval(M, 1, 7) == (0.0, 0.125)
    assert metric_interval(M, 4, 4) == (0.0, 0.0)


@given(pts, pts)
@settings(max_examples=200, deadline=None)
def test_closed_form_equals_direct_sum(a, b):
    M = NaturalMetric(polyadic_hierarchy(6))
    lev = first_divergence_level(M, a, b)
    if lev is not None:
        assert metric_eval(M, a, b) == 2.0 ** (1 - lev) == residue_metric(a, b, 6)
        assert float(M.direct_sum(a, b)) + 2.0**-6 == metric_eval(M, a, b)


@given(pts, pts, st.integers(1, 6))
@settings(max_examples=200, deadline=None)
def test_polyadic_balls_are_residue_classes(a, b, n):
    M = NaturalMetric(polyadic_hierarchy(6))
    lo, hi = metric_interval(M, a, b)
    congruent = (a - b) % math.factorial(n) == 0
    # d < 2^(1-n), equivalently d <= 2^-n, exactly when a = b mod n!
    assert (hi < 2.0 ** (1 - n)) == congruent
    assert (hi <= 2.0 ** -n) == congruent


@pytest.mark.parametrize("which", ["polyadic", "adapted", "product"])
@given(a=pts, b=pts, c=pts)
@settings(max_examples=150, deadline=None)
def test_metric_axioms(hierarchies, which, a, b, c):
    M = hierarchies[which]
    dab, dba = metric_eval(M, a, b), metric_eval(M, b, a)
    assert dab == dba
    assert (dab == 0) == (a == b or first_divergence_level(M, a, b) is None)
    assert metric_eval(M, a, c) <= max(dab, metric_eval(M, b, c))
    psi = [int(M.psi(k, a, b)) for k in range(1, M.depth + 1)]
    assert psi == sorted(psi)


@pytest.fixture(scope="module")
def hierarchies(phi, sqrt2, sqrt3):
    return {"polyadic": NaturalMetric(polyadic_hierarchy(7)),
            "adapted": NaturalMetric(adapted_hierarchy(phi, 8, 10**5)),
            "product": NaturalMetric(product_hierarchy([phi, sqrt2, sqrt3], 3, 10**5))}


def test_adapted_examples(phi, adapted_phi):
    v = phi.head(10**6)
    assert np.array_equal(adapted_phi.densities[3] * 10**6, np.bincount(np.floor(v * 8).astype(int)))
    assert np.allclose(adapted_phi.densities[3], 1 / 8, atol=1e-3)
    h = adapted_hierarchy(VanDerCorput(2), 2, 10**5)
    assert np.allclose(h.densities[2], 1 / 4, atol=1e-3)
    with pytest.raises(ValueError, match="DF not increasing"):
        adapted_hierarchy(Constant(0.5), 2)


class HalfAtom(SequenceSpec):
    """0.5 at even n, frac(n phi) at odd n: an atom of mass 1/2 on the dyadic midpoint."""

    def values(self, ns):
        ns = np.asarray(ns)
        return np.where(ns % 2 == 0, 0.5, FracMultiples(PHI).values(ns))

    @property
    def range(self):
        return (0.0, 1.0)


def test_adapted_breakpoints_avoid_atoms():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        h = adapted_hierarchy(HalfAtom(), 3, 10**5)
    # 0.5 is nudged rightward first, to 0.75; finer levels split the nudged intervals
    assert h.breaks[0].tolist() == [0.75]
    assert h.breaks[1].tolist() == [0.375, 0.75, 0.875]
    assert all(0.5 not in b for b in h.breaks)
    with pytest.warns(UserWarning, match="one-to-one"):
        adapted_hierarchy(HalfAtom(), 1, 10**4)


def test_product_examples(phi, sqrt2):
    h1 = product_hierarchy([phi, sqrt2], 1, 10**5)
    assert h1.num_cells(1) == 2 and np.allclose(h1.densities[1], 0.5, atol=1e-3)
    h2 = product_hierarchy([phi, sqrt2], 2, 10**5)
    assert h2.num_cells(2) == 16 and np.allclose(h2.densities[2], 1 / 16, atol=2e-3)
    h0 = product_hierarchy([phi], 0, 10**4)
    assert h0.depth == 0 and h0.cell(0, 0) == NATURALS
    # labels against direct dyadic indices
    ns = np.arange(1, 1001)
    i1 = np.minimum(np.floor(phi.values(ns) * 4), 3)
    i2 = np.minimum(np.floor(sqrt2.values(ns) * 4), 3)
    assert np.array_equal(h2.labels(2, ns), i1 + 4 * i2)
    assert h2.decode(2, 7) == (3, 1)


def test_product_pruning_recorded(phi):
    h = product_hierarchy([phi, phi], 2, 10**4)
    # (v, v) only fills diagonal cells
    assert len(h.pruned[2]) == 12
    assert np.all(h.densities[2][h.pruned[2]] == 0)


def test_ball_traces():
    M = NaturalMetric(polyadic_hierarchy(6))
    assert ball_trace(M, 1, 0.3).cell == Progression(1, 2)
    assert ball_trace(M, 1, 0.2).cell == Progression(1, 6)
    assert ball_trace(M, 2, 0.6).cell == NATURALS
    assert ball_trace(M, 5, 1.5).cell == NATURALS
    with pytest.raises(ValueError, match="resolution"):
        ball_trace(M, 1, 2.0**-6)


@pytest.mark.parametrize("n,eps", [(1, 0.3), (2, 0.6), (17, 0.1), (5, 0.05), (3, 1.0)])
def test_ball_trace_brute_force(n, eps):
    M = NaturalMetric(polyadic_hierarchy(6))
    bt = ball_trace(M, n, eps)
    ms = np.arange(1, 3001)
    inside = np.array([metric_eval(M, n, int(m)) < eps for m in ms])
    assert np.array_equal(bt.cell.contains(ms), inside)
    assert max(metric_eval(M, n, int(m)) for m in ms[inside]) == bt.quantized_radius


def test_naturality(adapted_phi):
    rep = naturality_check(polyadic_hierarchy(5), 10**6)
    assert rep.passed
    assert np.allclose(rep.deepest.value, 1 / 120, atol=1e-3)
    assert naturality_check(adapted_phi, 10**6).passed


def planted():
    # level 2 splits the evens by n mod 4 and leaves label 3 empty
    def lab(level, ns):
        if level == 1:
            return ns % 2
        return np.where(ns % 2 == 1, 2, (ns % 4 == 0).astype(np.int64))
    return CustomHierarchy(lab, (2, 4), "planted", calibration_window=10**5)


def test_planted_empty_cell():
    h = planted()
    assert h.check_refinement() is None
    rep = naturality_check(h, 10**5)
    assert not rep.cond_i
    assert ("i", 2, 3) in rep.witnesses


def test_partition_and_density_sums(adapted_phi):
    ns = np.arange(1, 10**4 + 1)
    for k in range(adapted_phi.depth + 1):
        lab = adapted_phi.labels(k, ns)
        assert lab.min() >= 0 and lab.max() < adapted_phi.num_cells(k)
        assert adapted_phi.densities[k].sum() == pytest.approx(1.0, abs=1e-9)


def test_uniform_continuity(phi, adapted_phi):
    mod = uniform_continuity_check(phi, NaturalMetric(adapted_phi), 10**4)
    for k, d in enumerate(mod.deltas):
        assert d <= 2.0**-k + 1e-9
    rec = uniform_continuity_check(Reciprocal(), NaturalMetric(polyadic_hierarchy(5)), 10**4)
    assert all(d >= 0.5 for d in rec.deltas) and not rec.uniformly_continuous
    a, b = rec.witnesses[-1]
    assert (a - b) % 120 == 0
    const = uniform_continuity_check(Constant(0.2), NaturalMetric(polyadic_hierarchy(4)), 10**3)
    assert const.deltas == [0.0] * 5 and const.uniformly_continuous


@pytest.mark.parametrize("build", [lambda phi: polyadic_hierarchy(7),
                                   lambda phi: adapted_hierarchy(phi, 4, 10**5),
                                   lambda phi: product_hierarchy([phi, VanDerCorput(2)], 2, 10**5)])
def test_serialisation_round_trip(phi, build):
    h = build(phi)
    text = dump_hierarchy(h)
    back = load_hierarchy(text)
    assert dump_hierarchy(back) == text
    assert back.provenance == h.provenance
    ns = np.arange(1, 5001)
    for k in range(h.depth + 1):
        assert np.array_equal(back.labels(k, ns), h.labels(k, ns))
    with pytest.raises(ValueError):
        dump_hierarchy(planted())
