"""Finite-depth model of the completion of N under a hierarchy metric.

A point of the completion is a coherent path of cell labels (one per level);
the natural measure of the set of points through a cell is the cell's
density.  Everything here is estimated from the members of 1..window.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .density import DEFAULT_TOL, SetSpec, WindowSchedule, density_report, Complement
from .partitions import (CALIBRATION_WINDOW, NaturalMetric, PartitionHierarchy,
                         _group_extrema, _naturals, uniform_continuity_check)
from .sequences import SequenceSpec

RNG_NAME = "philox4x64"

#: closures are approximated by the cells meeting S inside the window, which can under-cover
CLOSURE_NOTE = "cl(S) ~ union of level cells meeting S within the window (may under-cover)"


def point_rng(seed: int, index: int = 0) -> np.random.Generator:
    """Counter-based generator keyed by (seed, index); streams never overlap."""
    seed = int(seed) & (2 ** 64 - 1)
    return np.random.Generator(np.random.Philox(key=(int(index) << 64) | seed))


class CylinderMeasure:
    """Per-level cell densities of a hierarchy, read off the window 1..N.

    Densities are kept as integer member counts, so child counts add up to
    the parent count exactly and every level sums to N.
    """

    def __init__(self, h: PartitionHierarchy, window: int = CALIBRATION_WINDOW):
        self.h = h
        self.window = int(window)
        ns = _naturals(self.window)
        self.labels = [h.labels(k, ns) for k in range(h.depth + 1)]
        self.counts = []    # level -> {label: count}
        self.reps = []      # level -> {label: least member}
        self.parent = []    # level -> {label: parent label}
        self.children = []  # level -> {label: (child labels, cumulative counts)}
        for k, lab in enumerate(self.labels):
            uniq, first, cnt = np.unique(lab, return_index=True, return_counts=True)
            self.counts.append(dict(zip(uniq.tolist(), cnt.tolist())))
            self.reps.append(dict(zip(uniq.tolist(), (first + 1).tolist())))
            if k:
                par = self.labels[k - 1][first]
                self.parent.append(dict(zip(uniq.tolist(), par.tolist())))
            else:
                self.parent.append({})
        for k in range(h.depth):
            kids = {}
            for child, par in sorted(self.parent[k + 1].items()):
                kids.setdefault(par, []).append(child)
            self.children.append({p: (np.array(c), np.cumsum([self.counts[k + 1][x] for x in c]))
                                  for p, c in kids.items()})
        self._uc_cache = {}

    @property
    def depth(self):
        return self.h.depth

    def density(self, level, label) -> float:
        return self.counts[level].get(label, 0) / self.window

    def coherent(self, path) -> bool:
        prev = 0
        for level, label in enumerate(path, start=1):
            if level > self.depth or self.parent[level].get(label) != prev:
                return False
            prev = label
        return True

    def level_sums(self):
        return [sum(c.values()) / self.window for c in self.counts]

    def members(self, level, label, window=None) -> np.ndarray:
        """Members of the cell within 1..window (window <= self.window)."""
        w = self.window if window is None else min(int(window), self.window)
        return np.flatnonzero(self.labels[level][:w] == label) + 1


def cylinder_measure(cm: CylinderMeasure, prefix=()) -> float:
    """Measure of the cylinder of completion points through the prefix's cell."""
    prefix = tuple(prefix)
    if not prefix:
        return 1.0
    if not cm.coherent(prefix):
        raise KeyError(f"unknown or incoherent cell path {prefix}")
    return cm.density(len(prefix), prefix[-1])


@dataclass
class CompletionPoint:
    path: tuple
    representative: int
    seed: int
    index: int = 0
    measure: CylinderMeasure | None = field(default=None, repr=False, compare=False)

    def path_text(self) -> str:
        return ",".join(str(x) for x in self.path)


def sample_point(cm: CylinderMeasure, seed: int, index: int = 0) -> CompletionPoint:
    """Walk down the levels choosing each child with probability child/parent density."""
    rng = point_rng(seed, index)
    path = []
    label = 0
    for k in range(cm.depth):
        kids, cum = cm.children[k][label]
        r = rng.integers(int(cum[-1]))
        label = int(kids[np.searchsorted(cum, r, side="right")])
        path.append(label)
    rep = cm.reps[cm.depth][label] if cm.depth else 1
    return CompletionPoint(tuple(path), int(rep), int(seed), int(index), cm)


def sample_points(cm: CylinderMeasure, count: int, seed: int) -> list[CompletionPoint]:
    return [sample_point(cm, seed, i) for i in range(count)]


@dataclass
class Extension:
    value: float
    oscillation: float
    low: float
    high: float
    uniformly_continuous: bool | None


def extend_sequence(spec: SequenceSpec, point: CompletionPoint, window: int | None = None,
                    check: bool = True, tol: float | None = None) -> Extension:
    """Value of the continuous extension at a completion point, with its error bar.

    The value is v(representative); the bar is the oscillation of v over the
    deepest cell of the point's path within the window.  The continuity check
    accepts a deepest-level modulus below ``tol``, by default the largest
    nonzero distance 2^(1-L) of the truncated metric.
    """
    cm = point.measure
    level = len(point.path)
    label = point.path[-1] if point.path else 0
    members = cm.members(level, label, window)
    if members.size == 0:
        raise ValueError("cell has no members in the window")
    vals = spec.values(members)
    lo, hi = float(vals.min()), float(vals.max())
    uc = None
    if check:
        if tol is None:
            tol = max(DEFAULT_TOL, 2.0 ** (1 - cm.depth))
        key = (str(spec), tol)
        if key not in cm._uc_cache:
            w = min(cm.window, 10 ** 5)
            cm._uc_cache[key] = uniform_continuity_check(spec, NaturalMetric(cm.h), w, tol)
        uc = cm._uc_cache[key].uniformly_continuous
        if not uc:
            warnings.warn(f"{spec} does not look uniformly continuous for {cm.h.provenance}",
                          stacklevel=2)
    value = float(spec.values(np.array([point.representative]))[0])
    return Extension(value, hi - lo, lo, hi, uc)


def measure_density(cm: CylinderMeasure, S: SetSpec, level: int, window: int | None = None) -> float:
    """nu*(S) at finite depth: total density of the level cells meeting S in the window."""
    if not 0 <= level <= cm.depth:
        raise ValueError("level outside the hierarchy")
    w = cm.window if window is None else min(int(window), cm.window)
    hit = np.unique(cm.labels[level][:w][S.mask(w)])
    return sum(cm.counts[level][x] for x in hit.tolist()) / cm.window


@dataclass
class NuReport:
    level: int
    nu_star: float
    nu_star_complement: float
    measurable: bool
    nu: float | None
    density: object
    matches_density: bool | None  # nu(S) = d(S) when measurable
    dominance: bool                # upper density <= nu*(S) + tol
    tol: float
    note: str = CLOSURE_NOTE

    @property
    def total(self):
        return self.nu_star + self.nu_star_complement


def nu_measurable_check(cm: CylinderMeasure, S: SetSpec, level: int, window: int | None = None,
                        tol: float = DEFAULT_TOL, schedule: WindowSchedule | None = None) -> NuReport:
    w = cm.window if window is None else min(int(window), cm.window)
    a = measure_density(cm, S, level, w)
    b = measure_density(cm, Complement(S), level, w)
    measurable = a + b <= 1.0 + tol
    if schedule is None:
        schedule = WindowSchedule.geometric(max(1, w // 100), w)
    rep = density_report(S, schedule, tol)
    matches = (rep.exists and abs(rep.value - a) <= tol) if measurable else None
    return NuReport(level, a, b, measurable, a if measurable else None, rep, matches,
                    rep.upper <= a + tol, tol)


@dataclass
class Bracket:
    x: float
    low: float
    high: float


def df_tilde(spec: SequenceSpec, cm: CylinderMeasure, x_grid, level: int,
             window: int | None = None) -> list[Bracket]:
    """Brackets [F_low(x), F_high(x)] for P(v~ <= x) from level-cell images.

    F_low counts cells lying entirely at or below x, F_high adds the cells
    straddling x.
    """
    w = cm.window if window is None else min(int(window), cm.window)
    lab = cm.labels[level][:w]
    vals = spec.values(_naturals(w))
    _, labels, _, mx, mn = _group_extrema(lab, vals)
    dens = np.array([cm.counts[level][x] for x in labels.tolist()], dtype=np.int64)
    out = []
    for x in x_grid:
        low = int(dens[mx <= x].sum())
        high = int(dens[mn <= x].sum())
        out.append(Bracket(float(x), low / cm.window, high / cm.window))
    return out
