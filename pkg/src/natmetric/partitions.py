"""Nested partitions of N and the metric they induce.

A hierarchy assigns every n a cell label at each level 1..L, each level
refining the previous one.  With psi_k(a, b) = 1 when a and b sit in
different level-k cells, the metric is d(a, b) = sum_k psi_k(a, b) / 2^k.
Refinement makes psi monotone in k, so the sum collapses to 2^(1 - k_ab)
where k_ab is the first level separating a and b; pairs not separated by
level L have 0 <= d <= 2^-L.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .density import DEFAULT_TOL, NATURALS, Progression, SetSpec, WindowSchedule
from .sequences import SequenceSpec

CALIBRATION_WINDOW = 10 ** 6
SEPARATION_WINDOW = 10 ** 4
MAX_POLYADIC_DEPTH = 12
MAX_CACHED_CELLS = 10 ** 6
DENSITY_FLOOR = 1e-6
ATOM_FLOOR = 1e-4


def _naturals(N):
    return np.arange(1, N + 1, dtype=np.int64)


class PartitionHierarchy:
    """Base class.  Subclasses supply ``_labels(level, ns)`` and ``num_cells``.

    Labels run over 0..num_cells(level)-1; level 0 is the single cell N.
    ``densities[level]`` caches per-cell density estimates (None when the
    level has too many cells to tabulate).
    """

    depth: int
    calibration_window: int

    def __init__(self, depth, calibration_window=CALIBRATION_WINDOW, densities=None):
        self.depth = int(depth)
        self.calibration_window = int(calibration_window)
        self.pruned = {}
        if densities is None:
            densities = self._calibrate()
        self.densities = densities

    # -- interface ---------------------------------------------------------
    def _labels(self, level, ns):
        raise NotImplementedError

    def num_cells(self, level) -> int:
        raise NotImplementedError

    @property
    def provenance(self) -> str:
        raise NotImplementedError

    # -- shared ------------------------------------------------------------
    def labels(self, level, ns) -> np.ndarray:
        if not 0 <= level <= self.depth:
            raise ValueError(f"level {level} outside 0..{self.depth}")
        ns = np.asarray(ns, dtype=np.int64)
        if level == 0:
            return np.zeros(ns.shape, dtype=np.int64)
        return np.asarray(self._labels(level, ns), dtype=np.int64)

    def label(self, level, n) -> int:
        return int(self.labels(level, np.array([n]))[0])

    def label_table(self, N) -> np.ndarray:
        """Array of shape (depth+1, N): labels of 1..N at every level."""
        ns = _naturals(N)
        return np.stack([self.labels(k, ns) for k in range(self.depth + 1)])

    def _calibrate(self):
        ns = _naturals(self.calibration_window)
        out = {0: np.ones(1)}
        for level in range(1, self.depth + 1):
            k = self.num_cells(level)
            if k > MAX_CACHED_CELLS:
                out[level] = None
                continue
            counts = np.bincount(self.labels(level, ns), minlength=k)
            out[level] = counts / self.calibration_window
        return out

    def cell_density(self, level, label) -> float:
        table = self.densities.get(level)
        if table is None:
            raise ValueError(f"no density table for level {level}")
        return float(table[label])

    def cell(self, level, label) -> SetSpec:
        if level == 0:
            return NATURALS
        return CellSet(self, level, int(label))

    def check_refinement(self, window=SEPARATION_WINDOW):
        """First (level, n) where a level-(k+1) cell straddles two level-k cells, or None."""
        table = self.label_table(window)
        for level in range(1, self.depth):
            parent, child = table[level], table[level + 1]
            order = np.argsort(child, kind="stable")
            c, p = child[order], parent[order]
            bad = np.flatnonzero((np.diff(c) == 0) & (np.diff(p) != 0))
            if bad.size:
                return level + 1, int(order[bad[0] + 1]) + 1
        return None

    def unseparated_pairs(self, window=SEPARATION_WINDOW) -> int:
        """Number of pairs a < b <= window sharing their level-L cell."""
        deepest = self.labels(self.depth, _naturals(window))
        _, counts = np.unique(deepest, return_counts=True)
        return int(np.sum(counts * (counts - 1) // 2))

    def __repr__(self):
        return f"<{type(self).__name__} {self.provenance} depth={self.depth}>"

    def __str__(self):
        return self.provenance


@dataclass(frozen=True)
class CellSet(SetSpec):
    hierarchy: PartitionHierarchy = field(compare=False)
    level: int
    label: int
    name: str = ""

    def __post_init__(self):
        if not self.name:
            object.__setattr__(self, "name", self.hierarchy.provenance)

    def contains(self, ns):
        return self.hierarchy.labels(self.level, ns) == self.label

    def __str__(self):
        return f"cell({self.name},{self.level},{self.label})"


class PolyadicHierarchy(PartitionHierarchy):
    """Level k cells are the residue classes mod k!."""

    def __init__(self, depth, calibration_window=CALIBRATION_WINDOW, densities=None):
        if not 1 <= depth <= MAX_POLYADIC_DEPTH:
            raise ValueError(f"polyadic depth must be in 1..{MAX_POLYADIC_DEPTH}")
        super().__init__(depth, calibration_window, densities)

    def _labels(self, level, ns):
        return ns % math.factorial(level)

    def num_cells(self, level):
        return math.factorial(level)

    def _calibrate(self):
        # residue classes have density exactly 1/k!
        return {k: (np.full(math.factorial(k), 1.0 / math.factorial(k))
                    if math.factorial(k) <= MAX_CACHED_CELLS else None)
                for k in range(self.depth + 1)}

    def cell_density(self, level, label):
        return 1.0 / math.factorial(level)

    def cell(self, level, label):
        return Progression(int(label), math.factorial(level))

    @property
    def provenance(self):
        return f"polyadic({self.depth})"


class IntervalHierarchy(PartitionHierarchy):
    """Cells are preimages v^-1(I) of nested interval systems on [a, b].

    ``breaks[k-1]`` holds the interior breakpoints of level k; intervals are
    half-open ``[a_j, a_{j+1})`` with the last one closed, so a value equal
    to a breakpoint falls in the cell to its right.
    """

    def __init__(self, seq, breaks, calibration_window=CALIBRATION_WINDOW,
                 densities=None, name=None):
        self.seq = seq
        self.breaks = [np.asarray(b, dtype=np.float64) for b in breaks]
        self._name = name
        super().__init__(len(self.breaks), calibration_window, densities)

    def _labels(self, level, ns):
        return np.searchsorted(self.breaks[level - 1], self.seq.values(ns), side="right")

    def num_cells(self, level):
        return self.breaks[level - 1].size + 1

    def edges(self, level):
        a, b = self.seq.range
        return np.concatenate([[a], self.breaks[level - 1], [b]])

    @property
    def provenance(self):
        return self._name or f"intervals({self.seq},{self.depth})"


class ProductHierarchy(PartitionHierarchy):
    """Level m cells: intersections of v_k^-1(I^(m)_{i_k}) for k = 1..m.

    I^(m)_i = [i/2^m, (i+1)/2^m) with the last interval closed at 1.  Labels
    encode (i_1, ..., i_m) in base 2^m, i_1 least significant.  Cells with no
    member in the calibration window are recorded in ``pruned``.
    """

    def __init__(self, specs, depth, calibration_window=CALIBRATION_WINDOW, densities=None):
        self.specs = tuple(specs)
        if depth < 0 or depth > len(self.specs):
            raise ValueError("product depth needs at least that many sequences")
        for s in self.specs:
            lo, hi = s.range
            if lo < 0 or hi > 1:
                raise ValueError("product hierarchy needs sequences in [0, 1]")
        super().__init__(depth, calibration_window, densities)
        self.pruned = {m: np.flatnonzero(self.densities[m] == 0).tolist()
                       for m in range(1, self.depth + 1) if self.densities[m] is not None}

    def _labels(self, level, ns):
        scale = 2 ** level
        out = np.zeros(ns.shape, dtype=np.int64)
        for k in range(level - 1, -1, -1):
            idx = np.minimum(np.floor(self.specs[k].values(ns) * scale), scale - 1)
            out = out * scale + idx.astype(np.int64)
        return out

    def decode(self, level, label):
        scale = 2 ** level
        return tuple((label // scale ** k) % scale for k in range(level))

    def num_cells(self, level):
        return (2 ** level) ** level

    @property
    def provenance(self):
        return "product(%s,m=%d)" % (",".join(str(s) for s in self.specs), self.depth)


class CustomHierarchy(PartitionHierarchy):
    """Hierarchy from a user labelling function ``labeler(level, ns)``."""

    def __init__(self, labeler, cell_counts, name="custom",
                 calibration_window=CALIBRATION_WINDOW, densities=None):
        self.labeler = labeler
        self.cell_counts = tuple(int(c) for c in cell_counts)
        self.name = name
        super().__init__(len(self.cell_counts), calibration_window, densities)

    def _labels(self, level, ns):
        return self.labeler(level, ns)

    def num_cells(self, level):
        return 1 if level == 0 else self.cell_counts[level - 1]

    @property
    def provenance(self):
        return self.name


# ---------------------------------------------------------------------------
# builders


def polyadic_hierarchy(L, calibration_window=CALIBRATION_WINDOW) -> PolyadicHierarchy:
    return PolyadicHierarchy(L, calibration_window)


def _is_atom(sample, x, width, N):
    eta = width * 1e-9
    lo = np.searchsorted(sample, x - eta, side="left")
    hi = np.searchsorted(sample, x + eta, side="right")
    return (hi - lo) / N > ATOM_FLOOR


def _nudge(sample, x, left, right, width, N, tries=40):
    """Move ``x`` off an empirical atom, staying strictly inside (left, right).

    Offsets halve on every round and the right side is tried first.
    """
    if not _is_atom(sample, x, width, N):
        return x
    step = min(x - left, right - x) / 2
    for _ in range(tries):
        for cand in (x + step, x - step):
            if left < cand < right and not _is_atom(sample, cand, width, N):
                return cand
        step /= 2
    raise ValueError("DF not increasing: no continuity point near %r" % x)


def adapted_hierarchy(spec: SequenceSpec, K_max: int, calibration_window=CALIBRATION_WINDOW,
                      floor=DENSITY_FLOOR, separation_window=SEPARATION_WINDOW) -> IntervalHierarchy:
    """Cells v^-1(I_j^(K)) for dyadic divisions of the range, nudged to continuity points."""
    if K_max < 1:
        raise ValueError("K_max must be >= 1")
    a, b = spec.range
    if not a < b:
        raise ValueError("DF not increasing: degenerate range")
    N = int(calibration_window)
    sample = np.sort(spec.head(N))
    width = b - a
    dup_window = min(N, separation_window)
    if np.unique(spec.head(dup_window)).size < dup_window:
        warnings.warn(f"{spec} is not one-to-one on 1..{dup_window}", stacklevel=2)
    points = []
    breaks = []
    for K in range(1, K_max + 1):
        edges = [a] + points + [b]
        # midpoints of the current intervals: the dyadic points unless a coarser point was nudged
        new = [_nudge(sample, (l + r) / 2, l, r, width, N) for l, r in zip(edges, edges[1:])]
        points = sorted(points + new)
        cuts = np.asarray(points)
        counts = np.diff(np.concatenate([[0], np.searchsorted(sample, cuts, side="left"), [N]]))
        if np.any(counts / N < floor):
            j = int(np.argmin(counts))
            raise ValueError(f"DF not increasing: level {K} cell {j} has empirical density {counts[j] / N}")
        breaks.append(cuts)
    name = f"adapted({spec},{K_max})" if calibration_window == CALIBRATION_WINDOW else \
        f"adapted({spec},{K_max},window={calibration_window})"
    return IntervalHierarchy(spec, breaks, calibration_window, name=name)


def product_hierarchy(specs, m_max: int, calibration_window=CALIBRATION_WINDOW) -> ProductHierarchy:
    if m_max > 3:
        warnings.warn("product cells shrink like 2^(-m^2); m > 3 leaves most cells empty", stacklevel=2)
    return ProductHierarchy(specs, m_max, calibration_window)


# ---------------------------------------------------------------------------
# the metric


class NaturalMetric:
    """The metric of a hierarchy, evaluated through its first separating level."""

    def __init__(self, hierarchy: PartitionHierarchy):
        self.h = hierarchy

    @property
    def depth(self):
        return self.h.depth

    @property
    def resolution(self) -> float:
        return 2.0 ** -self.h.depth

    def psi(self, level, a, b):
        return np.where(self.h.labels(level, a) != self.h.labels(level, b), 1, 0)

    def first_divergence(self, a, b) -> np.ndarray:
        """Vectorised first separating level; 0 where no level <= L separates."""
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        out = np.zeros(np.broadcast(a, b).shape, dtype=np.int64)
        for level in range(1, self.h.depth + 1):
            split = (self.h.labels(level, a) != self.h.labels(level, b)) & (out == 0)
            out[split] = level
        return out

    def evaluate(self, a, b) -> np.ndarray:
        lev = self.first_divergence(a, b)
        return np.where(lev > 0, np.ldexp(1.0, 1 - lev), 0.0)

    def direct_sum(self, a, b) -> np.ndarray:
        """Truncated sum of psi_k / 2^k over k <= L, without the closed form."""
        total = np.zeros(np.broadcast(np.asarray(a), np.asarray(b)).shape)
        for level in range(1, self.h.depth + 1):
            total = total + self.psi(level, a, b) * 2.0 ** -level
        return total


def first_divergence_level(M: NaturalMetric, a: int, b: int) -> int | None:
    """Least level with different cells, or None when a, b share every level <= L."""
    lev = int(M.first_divergence(a, b))
    return lev or None


def metric_eval(M: NaturalMetric, a: int, b: int) -> float:
    """d(a, b); exact when separated, 0.0 otherwise (true value within ``metric_interval``)."""
    if a < 1 or b < 1:
        raise ValueError("points of N start at 1")
    lev = first_divergence_level(M, a, b)
    return 0.0 if lev is None else 2.0 ** (1 - lev)


def metric_interval(M: NaturalMetric, a: int, b: int) -> tuple[float, float]:
    lev = first_divergence_level(M, a, b)
    if lev is not None:
        v = 2.0 ** (1 - lev)
        return v, v
    return (0.0, 0.0) if a == b else (0.0, M.resolution)


def ball_level(eps: float, depth: int) -> int:
    """Level whose cells are the balls of radius ``eps``.

    d takes the values 2^(1-j); d(n, m) < eps iff n and m share every level
    below the least j with 2^(1-j) < eps, i.e. they share level j - 1.
    """
    if not eps > 0:
        raise ValueError("radius must be positive")
    j = 1
    while 2.0 ** (1 - j) >= eps:
        j += 1
    level = j - 1
    if level > depth:
        raise ValueError(f"radius {eps} is below resolution 2^-{depth}")
    return level


@dataclass
class BallTrace:
    center: int
    radius: float
    level: int
    cell: SetSpec
    quantized_radius: float  # largest distance actually attained inside the ball


def ball_trace(M: NaturalMetric, n: int, eps: float) -> BallTrace:
    """B(n, eps) intersected with N, returned as the level cell of ``n``."""
    level = ball_level(eps, M.depth)
    cell = M.h.cell(level, M.h.label(level, n)) if level else NATURALS
    q = 2.0 ** -level
    return BallTrace(n, eps, level, cell, q)


# ---------------------------------------------------------------------------
# finite-depth naturality


@dataclass
class CellDensities:
    level: int
    windows: tuple
    counts: np.ndarray  # shape (len(windows), num_cells)
    lower: np.ndarray
    upper: np.ndarray
    value: np.ndarray
    exists: np.ndarray


def cell_density_reports(h: PartitionHierarchy, level: int, schedule: WindowSchedule,
                         tol: float = DEFAULT_TOL) -> CellDensities:
    """Density reports of every level cell at once (bincount per window)."""
    ws = schedule.windows
    lab = h.labels(level, _naturals(ws[-1]))
    k = h.num_cells(level)
    counts = np.stack([np.bincount(lab[:w], minlength=k) for w in ws])
    means = counts / np.asarray(ws)[:, None]
    tail = means[len(ws) - math.ceil(len(ws) / 2):]
    lo, hi = tail.min(axis=0), tail.max(axis=0)
    return CellDensities(level, ws, counts, lo, hi, means[-1], hi - lo <= tol)


@dataclass
class NaturalityReport:
    cond_i: bool
    cond_ii: bool
    witnesses: list
    levels: list  # per-level dicts
    deepest: CellDensities | None = None

    @property
    def passed(self):
        return self.cond_i and self.cond_ii


def _max_distance_to_rep(h, table, level):
    """Largest d(rep, m) over sampled members m of each level cell (rep = least member).

    In an ultrametric this bounds the cell diameter.
    """
    lab = table[level]
    _, first, inverse = np.unique(lab, return_index=True, return_inverse=True)
    reps = first[inverse]
    diverge = np.zeros(lab.size, dtype=np.int64)
    for k in range(1, h.depth + 1):
        split = (table[k] != table[k][reps]) & (diverge == 0)
        diverge[split] = k
    dist = np.where(diverge > 0, np.ldexp(1.0, 1 - diverge), 0.0)
    if not dist.size:
        return 0.0, None
    i = int(np.argmax(dist))
    return float(dist[i]), (int(reps[i]) + 1, i + 1)


def naturality_check(h: PartitionHierarchy, window=CALIBRATION_WINDOW, tol: float = DEFAULT_TOL,
                     schedule: WindowSchedule | None = None,
                     separation_window=SEPARATION_WINDOW) -> NaturalityReport:
    """Finite-depth form of the two naturality conditions.

    (i)  every deepest cell has a density that exists and exceeds ``tol``;
    (ii) at each level k the cells partition N exactly, each has a density,
         and every cell has diameter <= 2^-k < 2^(1-k).
    """
    if schedule is None:
        schedule = WindowSchedule.geometric(max(1, window // 100), window)
    witnesses = []
    levels = []
    cond_ii = True
    table = h.label_table(min(separation_window, schedule.last))
    deepest = None
    for level in range(0, h.depth + 1):
        k = h.num_cells(level)
        lab_ok = True
        if level:
            lab = h.labels(level, _naturals(schedule.last))
            lab_ok = bool(lab.min() >= 0 and lab.max() < k)
        cd = cell_density_reports(h, level, schedule, tol) if lab_ok else None
        exact = lab_ok and bool(np.all(cd.counts.sum(axis=1) == np.asarray(schedule.windows)))
        all_exist = lab_ok and bool(cd.exists.all())
        diam, wit = _max_distance_to_rep(h, table, level)
        bound = 2.0 ** -level if level else 1.0
        info = dict(level=level, cells=k, partition_exact=exact, densities_exist=all_exist,
                    density_sum=float(cd.value.sum()) if cd is not None else float("nan"),
                    max_diameter=diam, diameter_bound=bound)
        levels.append(info)
        if not (exact and all_exist and diam <= bound):
            cond_ii = False
            witnesses.append(("ii", level, wit if diam > bound else None))
        if level == h.depth:
            deepest = cd
    cond_i = deepest is not None
    if deepest is not None:
        bad = np.flatnonzero(~deepest.exists | (deepest.value <= tol))
        if bad.size:
            cond_i = False
            witnesses.append(("i", h.depth, int(bad[0])))
    return NaturalityReport(cond_i, cond_ii, witnesses, levels, deepest)


@dataclass
class ContinuityModulus:
    deltas: list  # delta(k) for k = 0..L
    witnesses: list  # (a, b) pairs attaining delta(k)
    tol: float

    @property
    def uniformly_continuous(self) -> bool:
        return self.deltas[-1] < self.tol


def _group_extrema(labels, values):
    order = np.argsort(labels, kind="stable")
    sl, sv = labels[order], values[order]
    starts = np.flatnonzero(np.r_[True, sl[1:] != sl[:-1]])
    return order, sl[starts], starts, np.maximum.reduceat(sv, starts), np.minimum.reduceat(sv, starts)


def uniform_continuity_check(spec: SequenceSpec, M: NaturalMetric, window=SEPARATION_WINDOW,
                             tol: float = DEFAULT_TOL) -> ContinuityModulus:
    """delta(k) = max |v(a) - v(b)| over a, b <= window with d(a, b) <= 2^-k.

    d(a, b) <= 2^-k exactly when a and b share their level-k cell, so
    delta(k) is the largest oscillation of v over a level-k cell.
    """
    ns = _naturals(window)
    vals = spec.values(ns)
    deltas, witnesses = [], []
    for level in range(M.depth + 1):
        lab = M.h.labels(level, ns)
        order, _, starts, mx, mn = _group_extrema(lab, vals)
        g = int(np.argmax(mx - mn))
        deltas.append(float(mx[g] - mn[g]))
        end = starts[g + 1] if g + 1 < starts.size else order.size
        members = order[starts[g]:end]
        sub = vals[members]
        witnesses.append((int(members[np.argmin(sub)]) + 1, int(members[np.argmax(sub)]) + 1))
    return ContinuityModulus(deltas, witnesses, tol)


# ---------------------------------------------------------------------------
# text serialisation


def dump_hierarchy(h: PartitionHierarchy) -> str:
    """One header line, then one line per level: cell count and densities (12 digits)."""
    if isinstance(h, CustomHierarchy):
        raise ValueError("custom hierarchies have no textual provenance")
    lines = [f"# hierarchy {h.provenance} depth={h.depth} window={h.calibration_window}"]
    for level in range(1, h.depth + 1):
        table = h.densities.get(level)
        if table is None:
            body = "none"
        elif np.all(table == table[0]):
            body = "uniform " + format(float(table[0]), ".12g")
        else:
            body = " ".join(format(float(d), ".12g") for d in table)
        lines.append(f"level {level} cells {h.num_cells(level)} {body}")
    return "\n".join(lines) + "\n"


def load_hierarchy(text: str) -> PartitionHierarchy:
    from .expr import parse_hierarchy

    lines = [ln for ln in text.splitlines() if ln.strip()]
    head = lines[0].split()
    if head[:2] != ["#", "hierarchy"]:
        raise ValueError("not a hierarchy dump")
    window = int(head[-1].split("=")[1])
    h = parse_hierarchy(" ".join(head[2:-2]), calibration_window=window)
    densities = {0: np.ones(1)}
    for ln in lines[1:]:
        parts = ln.split()
        level, cells = int(parts[1]), int(parts[3])
        if parts[4] == "none":
            densities[level] = None
        elif parts[4] == "uniform":
            densities[level] = np.full(cells, float(parts[5]))
        else:
            densities[level] = np.array([float(x) for x in parts[4:]])
    h.densities = densities
    return h
