"""Moment and integral forms of the Weyl criterion."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .density import WindowSchedule
from .distribution import adf_estimate
from .reduction import window_means
from .sequences import SequenceSpec, apply_fn

H_DEFAULT = 5
DYADIC_DEPTH = 7
UD_TOL = 0.01


@dataclass
class MomentReport:
    windows: tuple
    moments: dict  # h -> [E_N(v^h) for N in windows]
    targets: dict  # h -> 1/(h+1)
    max_deviation: float
    tol: float
    passed: bool

    def deviations(self, h):
        return [abs(m - self.targets[h]) for m in self.moments[h]]


def _check_unit_range(spec):
    lo, hi = spec.range
    if lo < 0.0 or hi > 1.0:
        raise ValueError(f"sequence range [{lo}, {hi}] is not inside [0, 1]")


def moment_test(spec: SequenceSpec, h_max: int, schedule: WindowSchedule, tol: float = UD_TOL) -> MomentReport:
    """E_N(v^h) against 1/(h+1) for h = 1..h_max; judged at the final window."""
    _check_unit_range(spec)
    if h_max < 1:
        raise ValueError("h_max must be >= 1")
    vals = spec.head(schedule.last)
    moments, targets = {}, {}
    power = np.ones_like(vals)
    for h in range(1, h_max + 1):
        power = power * vals
        moments[h] = window_means(power, schedule.windows)
        targets[h] = 1.0 / (h + 1)
    worst = max(abs(moments[h][-1] - targets[h]) for h in moments)
    return MomentReport(schedule.windows, moments, targets, worst, tol, worst <= tol)


def stieltjes(f, F, a: float, b: float, cells: int) -> float:
    """Midpoint rule for the Stieltjes integral of f against F over [a, b]."""
    xs = np.linspace(a, b, cells + 1)
    mids = 0.5 * (xs[:-1] + xs[1:])
    dF = np.diff(np.asarray(F(xs), dtype=np.float64))
    return float(np.sum(apply_fn(f, mids) * dF))


def tabulated(xs, Fs):
    """Target distribution function given as a table, linearly interpolated."""
    xs = np.asarray(xs, dtype=np.float64)
    Fs = np.asarray(Fs, dtype=np.float64)
    return lambda x: np.interp(x, xs, Fs)


def integral_target(f, F, a: float, b: float, tol: float, cells: int = 64, max_cells: int = 1 << 22) -> float:
    """Integral of f dF, doubling the grid until successive values differ by < tol/10."""
    check = np.asarray(F(np.linspace(a, b, 4 * cells + 1)), dtype=np.float64)
    if np.any(np.diff(check) < 0):
        raise ValueError("target distribution function is not monotone")
    if abs(check[0]) > 1e-12 or abs(check[-1] - 1.0) > 1e-12:
        raise ValueError("target must satisfy F(a) = 0 and F(b) = 1")
    prev = stieltjes(f, F, a, b, cells)
    while cells < max_cells:
        cells *= 2
        cur = stieltjes(f, F, a, b, cells)
        if abs(cur - prev) < tol / 10:
            return cur
        prev = cur
    return prev


def integral_test(spec: SequenceSpec, f, target_F, N: int, tol: float = UD_TOL,
                  interval: tuple | None = None, cells: int = 64) -> float:
    """|E_N(f(v)) - integral of f dF| for a target distribution function on [a, b]."""
    a, b = interval if interval is not None else spec.range
    target = integral_target(f, target_F, a, b, tol, cells)
    empirical = window_means(apply_fn(f, spec.head(N)), (N,))[0]
    return abs(empirical - target)


@dataclass
class UDReport:
    moments: MomentReport
    grid: tuple
    adf_values: tuple
    adf_exists: tuple
    adf_deviation: float
    tol: float
    passed: bool


def ud_mod1_verdict(spec: SequenceSpec, schedule: WindowSchedule, tol: float = UD_TOL) -> UDReport:
    """Uniform distribution mod 1: moments h <= 5 and the a.d.f. on a dyadic grid."""
    mom = moment_test(spec, H_DEFAULT, schedule, tol)
    grid = tuple(j / 2 ** DYADIC_DEPTH for j in range(2 ** DYADIC_DEPTH + 1))
    rows = adf_estimate(spec, schedule, grid, tol)
    values = tuple(r.value for _, r in rows)
    exists = tuple(r.exists for _, r in rows)
    dev = max(abs(v - x) for v, x in zip(values, grid))
    ok = mom.passed and all(exists) and dev <= tol
    return UDReport(mom, grid, values, exists, dev, tol, ok)
