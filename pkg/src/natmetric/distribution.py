"""Empirical distribution functions and statistics of bounded sequences."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .density import (DEFAULT_TOL, DensityReport, WindowSchedule, mask_report,
                      mean_report, partial_mean)
from .reduction import exact_sum
from .sequences import Interval, SequenceSpec, apply_fn

DISPERSION_FLOOR = 1e-12

#: how the weak-a.d.f. statistic is read: every term is a full double sum
STRAUCH_READING = ("S(N,M) = (1/MN) sum_{n<=N,m<=M} |v(n)-v(m)| "
                   "- (1/2N^2) sum_{n,n'<=N} |v(n)-v(n')| "
                   "- (1/2M^2) sum_{m,m'<=M} |v(m)-v(m')|")


@dataclass
class EmpiricalDF:
    """F_N(x) = #{n <= N : v(n) < x} / N."""

    N: int
    sample: np.ndarray  # sorted

    def count_below(self, x):
        return np.searchsorted(self.sample, x, side="left")

    def __call__(self, x):
        return self.count_below(x) / self.N

    def count_in(self, interval: Interval) -> int:
        left = np.searchsorted(self.sample, interval.lo, side="left" if interval.lo_closed else "right")
        right = np.searchsorted(self.sample, interval.hi, side="right" if interval.hi_closed else "left")
        return max(0, int(right) - int(left))

    def measure(self, c, d) -> Fraction:
        """lambda_F([c, d)) = F_N(d) - F_N(c), as an exact fraction."""
        return Fraction(int(self.count_below(d)) - int(self.count_below(c)), self.N)

    def measure_of(self, intervals) -> Fraction:
        return Fraction(sum(self.count_in(i) for i in intervals), self.N)

    def sup_distance(self, G) -> float:
        """sup_x |F_N(x) - G(x)|, scanned at the jumps of F_N (both one-sided limits)."""
        s = self.sample
        g = np.asarray(G(s), dtype=np.float64)
        left = np.searchsorted(s, s, side="left") / self.N
        right = np.searchsorted(s, s, side="right") / self.N
        return float(max(np.max(np.abs(left - g)), np.max(np.abs(right - g))))


def empirical_df(spec: SequenceSpec, N: int) -> EmpiricalDF:
    if N < 1:
        raise ValueError("N must be >= 1")
    return EmpiricalDF(N, np.sort(spec.head(N)))


def adf_estimate(spec: SequenceSpec, schedule: WindowSchedule, x_grid, tol: float = DEFAULT_TOL):
    """Density report of v^-1((-inf, x)) for each x of a sorted grid.

    Returns a list of ``(x, DensityReport)`` pairs.
    """
    xs = [float(x) for x in x_grid]
    if any(b < a for a, b in zip(xs, xs[1:])):
        raise ValueError("x grid must be sorted")
    vals = spec.head(schedule.last)
    return [(x, mask_report(vals < x, schedule, tol)) for x in xs]


def _pair_abs_sum(a: np.ndarray, b: np.ndarray, tile: int = 512) -> float:
    partial = []
    for i in range(0, a.size, tile):
        block = np.abs(a[i:i + tile, None] - b[None, :])
        partial.append(float(block.sum()))
    return math.fsum(partial)


def strauch_statistic(spec: SequenceSpec, N: int, M: int) -> float:
    """Direct O(NM) evaluation of the weak-a.d.f. statistic (see ``STRAUCH_READING``)."""
    if N < 1 or M < 1:
        raise ValueError("N and M must be >= 1")
    vals = spec.head(max(N, M))
    vn, vm = vals[:N], vals[:M]
    cross = _pair_abs_sum(vn, vm) / (M * N)
    inner_n = _pair_abs_sum(vn, vn) / (2 * N * N)
    inner_m = _pair_abs_sum(vm, vm) / (2 * M * M)
    return cross - inner_n - inner_m


@dataclass
class ContinuityReport:
    a_grid: tuple
    etas: tuple
    table: dict  # (a, eta) -> upper density estimate of v^-1((a - eta, a + eta))
    tol: float
    passed: bool

    def worst(self):
        eta = min(self.etas)
        return max(self.table[(a, eta)] for a in self.a_grid)


def continuity_diagnostic(spec: SequenceSpec, a_grid, eta_schedule, schedule: WindowSchedule,
                          tol: float = DEFAULT_TOL) -> ContinuityReport:
    """Upper-density estimates of shrinking neighbourhoods of each grid point.

    A continuous a.d.f. is plausible when, for every ``a``, the estimate at
    the smallest ``eta`` falls below ``tol``.
    """
    etas = tuple(float(e) for e in eta_schedule)
    if any(e <= 0 for e in etas) or any(b >= a for a, b in zip(etas, etas[1:])):
        raise ValueError("eta schedule must be positive and decreasing")
    grid = tuple(float(a) for a in a_grid)
    vals = spec.head(schedule.last)
    table = {}
    for a in grid:
        for eta in etas:
            mask = (vals > a - eta) & (vals < a + eta)
            table[(a, eta)] = mask_report(mask, schedule, tol).upper
    passed = all(table[(a, etas[-1])] < tol for a in grid)
    return ContinuityReport(grid, etas, table, tol, passed)


def mean(spec: SequenceSpec, schedule: WindowSchedule, tol: float = DEFAULT_TOL) -> DensityReport:
    """Tail-stabilised E(v); non-convergence shows up as ``exists=False``."""
    return mean_report(spec.head(schedule.last), schedule, tol)


def dispersion(spec: SequenceSpec, schedule: WindowSchedule, tol: float = DEFAULT_TOL) -> DensityReport:
    """D^2_N(v) = E_N((v - E(v))^2), with E(v) estimated at the final window."""
    vals = spec.head(schedule.last)
    centre = partial_mean(vals, schedule.last)
    return mean_report((vals - centre) ** 2, schedule, tol)


@dataclass
class CorrelationReport:
    N: int
    mean_u: float
    mean_v: float
    disp_u: float
    disp_v: float
    cov: float
    rho: float
    slope: float
    intercept: float
    residual_dispersion: float

    @property
    def residual_identity(self) -> float:
        """(1 - rho^2) D^2(u), the closed form of the residual dispersion."""
        return (1.0 - self.rho ** 2) * self.disp_u

    @property
    def affine_identity(self) -> float:
        """(1 - rho) D^2(u); agrees with the residual whenever rho is 0 or 1."""
        return (1.0 - self.rho) * self.disp_u


def correlation(u: SequenceSpec, v: SequenceSpec, schedule: WindowSchedule | int) -> CorrelationReport:
    """Correlation of u and v at the final window.

    rho = |E(uv) - E(u)E(v)| / (D(u) D(v)); ``slope`` = cov / D^2(v) and
    ``intercept`` = E(u) - slope E(v) give the least-squares line u ~ slope*v + intercept.
    """
    N = schedule if isinstance(schedule, int) else schedule.last
    uu, vv = u.head(N), v.head(N)
    eu, ev = exact_sum(uu) / N, exact_sum(vv) / N
    du, dv = uu - eu, vv - ev
    disp_u = exact_sum(du * du) / N
    disp_v = exact_sum(dv * dv) / N
    if disp_u < DISPERSION_FLOOR or disp_v < DISPERSION_FLOOR:
        raise ValueError("degenerate dispersion")
    cov = exact_sum(du * dv) / N
    rho = abs(cov) / math.sqrt(disp_u * disp_v)
    slope = cov / disp_v
    resid = du - slope * dv
    resid_disp = exact_sum(resid * resid) / N
    return CorrelationReport(N, eu, ev, disp_u, disp_v, cov, rho, slope,
                             eu - slope * ev, resid_disp)


def independence_statistic(specs, fs, N: int) -> float:
    """E_N(f_1(v_1) ... f_k(v_k)) - prod_j E_N(f_j(v_j)); ``None`` in ``fs`` is the identity."""
    if len(specs) < 2:
        raise ValueError("need at least two sequences")
    fs = list(fs) if fs is not None else [None] * len(specs)
    if len(fs) != len(specs):
        raise ValueError("one function per sequence")
    cols = [apply_fn(f, s.head(N)) for s, f in zip(specs, fs)]
    prod = cols[0].copy()
    for c in cols[1:]:
        prod = prod * c
    joint = exact_sum(prod) / N
    marg = 1.0
    for c in cols:
        marg *= exact_sum(c) / N
    return joint - marg


@dataclass
class JointADF:
    report: DensityReport
    marginals: list
    product: float


def joint_adf(specs, x_vector, schedule: WindowSchedule, tol: float = DEFAULT_TOL) -> JointADF:
    """Density of the intersection of the v_j^-1((-inf, x_j)), next to prod F_j(x_j)."""
    if len(specs) != len(x_vector):
        raise ValueError("dimension mismatch")
    N = schedule.last
    joint = np.ones(N, dtype=bool)
    marginals = []
    for s, x in zip(specs, x_vector):
        m = s.head(N) < x
        joint &= m
        marginals.append(int(m.sum()) / N)
    return JointADF(mask_report(joint, schedule, tol), marginals, math.prod(marginals))
