"""Subsets of N = {1, 2, 3, ...}, windowed means and asymptotic densities.

A limit over N -> infinity is replaced by a finite ``WindowSchedule``.  The
upper and lower densities are read off the tail of the schedule (the last
ceil(k/2) windows); the density "exists" when the two agree within ``tol``.
Counts of set members are integers, so every E_N(chi_S) is an exact ratio.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .reduction import exact_sum, window_means
from .sequences import Interval, SequenceSpec

DEFAULT_TOL = 1e-3


# ---------------------------------------------------------------------------
# set specs


class SetSpec:
    """A subset of N with a total, deterministic, vectorised membership test."""

    def contains(self, ns) -> np.ndarray:
        raise NotImplementedError

    def mask(self, N: int) -> np.ndarray:
        return self.contains(np.arange(1, N + 1, dtype=np.int64))


@dataclass(frozen=True)
class Progression(SetSpec):
    """r + (m) = {n : n = r mod m}."""

    r: int
    m: int

    def __post_init__(self):
        if int(self.m) < 1:
            raise ValueError("modulus must be positive")
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "r", int(self.r))

    def contains(self, ns):
        return np.asarray(ns, dtype=np.int64) % self.m == self.r % self.m

    def __str__(self):
        return f"ap({self.r},{self.m})"


NATURALS = Progression(0, 1)


@dataclass(frozen=True)
class Explicit(SetSpec):
    elements: tuple

    def __post_init__(self):
        elems = tuple(sorted({int(e) for e in self.elements}))
        if elems and elems[0] < 1:
            raise ValueError("explicit sets hold positive integers")
        object.__setattr__(self, "elements", elems)

    def contains(self, ns):
        return np.isin(np.asarray(ns, dtype=np.int64), np.asarray(self.elements, dtype=np.int64))

    def __str__(self):
        return "set(%s)" % ",".join(str(e) for e in self.elements)


@dataclass(frozen=True)
class Complement(SetSpec):
    inner: SetSpec

    def contains(self, ns):
        return ~self.inner.contains(ns)

    def __str__(self):
        return f"compl({self.inner})"


@dataclass(frozen=True)
class Union(SetSpec):
    parts: tuple

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(self.parts))

    def contains(self, ns):
        out = np.zeros(np.shape(ns), dtype=bool)
        for p in self.parts:
            out |= p.contains(ns)
        return out

    def __str__(self):
        return "union(%s)" % ",".join(str(p) for p in self.parts)


@dataclass(frozen=True)
class Intersection(SetSpec):
    parts: tuple

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(self.parts))

    def contains(self, ns):
        out = np.ones(np.shape(ns), dtype=bool)
        for p in self.parts:
            out &= p.contains(ns)
        return out

    def __str__(self):
        return "inter(%s)" % ",".join(str(p) for p in self.parts)


@dataclass(frozen=True)
class Preimage(SetSpec):
    """{n : v(n) in interval}."""

    seq: SequenceSpec
    interval: Interval

    def contains(self, ns):
        return self.interval.contains(self.seq.values(ns))

    def __str__(self):
        return f"pre({self.seq},{self.interval})"


@dataclass(frozen=True)
class Predicate(SetSpec):
    """Programmatic generator; ``fn`` must be a pure vectorised function of n."""

    name: str
    fn: Callable = field(compare=False, repr=False)

    def contains(self, ns):
        return np.asarray(self.fn(np.asarray(ns, dtype=np.int64)), dtype=bool)

    def __str__(self):
        return self.name


def _bit_length(ns):
    # exact for n < 2**53: the float conversion is exact and frexp gives the exponent
    return np.frexp(np.asarray(ns, dtype=np.float64))[1]


def _even_dyadic_blocks(ns):
    return (_bit_length(ns) - 1) % 2 == 0


#: union over k >= 0 of [2^(2k), 2^(2k+1)); has lower density 1/3 and upper 2/3
DYADIC_BLOCKS = Predicate("blocks", _even_dyadic_blocks)

NAMED_SETS = {"blocks": DYADIC_BLOCKS}


@dataclass(frozen=True)
class Indicator(SequenceSpec):
    """v(n) = 1 if n in S else 0."""

    inner: SetSpec

    def values(self, ns):
        return self.inner.contains(ns).astype(np.float64)

    @property
    def range(self):
        return (0.0, 1.0)

    def __str__(self):
        return f"ind({self.inner})"


def member(S: SetSpec, n: int) -> bool:
    if n < 1:
        raise ValueError("N starts at 1")
    return bool(S.contains(np.array([n], dtype=np.int64))[0])


# ---------------------------------------------------------------------------
# windows and reports


@dataclass(frozen=True)
class WindowSchedule:
    windows: tuple

    def __post_init__(self):
        ws = tuple(int(w) for w in self.windows)
        if not ws:
            raise ValueError("empty window schedule")
        if ws[0] < 1 or any(b <= a for a, b in zip(ws, ws[1:])):
            raise ValueError("windows must be strictly increasing positive integers")
        object.__setattr__(self, "windows", ws)

    @classmethod
    def geometric(cls, start, stop, ratio=10):
        start, stop = int(round(start)), int(round(stop))
        if start < 1 or stop < start or ratio <= 1:
            raise ValueError("bad geometric schedule")
        ws, w = [], float(start)
        while int(round(w)) <= stop:
            ws.append(int(round(w)))
            w *= ratio
        if ws[-1] != stop:
            ws.append(stop)
        return cls(tuple(dict.fromkeys(ws)))

    @classmethod
    def single(cls, N):
        return cls((int(N),))

    @property
    def last(self) -> int:
        return self.windows[-1]

    def tail(self) -> tuple:
        k = len(self.windows)
        return self.windows[k - math.ceil(k / 2):]

    def __str__(self):
        return ",".join(str(w) for w in self.windows)


@dataclass
class DensityReport:
    """Tail estimate of a limit of windowed means.

    ``means[i]`` is E_N at ``windows[i]``; ``lower``/``upper`` are the tail
    extrema standing in for liminf/limsup and ``value`` is the final mean.
    """

    windows: tuple
    means: list
    lower: float
    upper: float
    value: float
    exists: bool
    tol: float
    complement_ok: bool | None = None

    @property
    def spread(self) -> float:
        return self.upper - self.lower


def tail_report(windows, means, tol) -> DensityReport:
    k = len(windows)
    tail = means[k - math.ceil(k / 2):]
    lo, hi = min(tail), max(tail)
    return DensityReport(tuple(windows), list(means), lo, hi, means[-1], hi - lo <= tol, tol)


def _check_tol(tol):
    if not tol > 0:
        raise ValueError("tol must be positive")


def window_counts(mask: np.ndarray, windows) -> list[int]:
    csum = np.cumsum(mask, dtype=np.int64)
    return [int(csum[w - 1]) for w in windows]


def density_report(S: SetSpec, schedule: WindowSchedule, tol: float = DEFAULT_TOL) -> DensityReport:
    """Windowed densities of ``S`` with an existence verdict.

    Also verifies E_N(chi_S) + E_N(chi_{N\\S}) = 1 at every window, which is
    exact because both sides are integer counts over N.
    """
    _check_tol(tol)
    ws = schedule.windows
    mask = S.mask(ws[-1])
    counts = window_counts(mask, ws)
    comp = window_counts(Complement(S).mask(ws[-1]), ws)
    rep = tail_report(ws, [c / w for c, w in zip(counts, ws)], tol)
    rep.complement_ok = all(c + d == w for c, d, w in zip(counts, comp, ws))
    return rep


def mask_report(mask: np.ndarray, schedule: WindowSchedule, tol: float = DEFAULT_TOL) -> DensityReport:
    """Like ``density_report`` for a precomputed membership mask of 1..N."""
    _check_tol(tol)
    ws = schedule.windows
    counts = window_counts(mask, ws)
    return tail_report(ws, [c / w for c, w in zip(counts, ws)], tol)


def partial_mean(v: SequenceSpec | np.ndarray, N: int, workers: int | None = None) -> float:
    """E_N(v) = (1/N) * sum_{n <= N} v(n) with a fixed blocked reduction order."""
    if N < 1:
        raise ValueError("N must be >= 1")
    vals = v.head(N) if isinstance(v, SequenceSpec) else np.asarray(v, dtype=np.float64)[:N]
    return exact_sum(vals, workers=workers) / N


def mean_report(values: np.ndarray, schedule: WindowSchedule, tol: float = DEFAULT_TOL,
                workers: int | None = None) -> DensityReport:
    _check_tol(tol)
    ws = schedule.windows
    return tail_report(ws, window_means(values, ws, workers=workers), tol)
