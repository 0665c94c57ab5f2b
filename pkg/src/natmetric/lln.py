"""Law-of-large-numbers experiments at desk scale.

``v_set_density`` estimates the density of

    V(N, eps) = {n : |(1/N) sum_j f(v_j(n)) - (1/N) sum_j int f dF_j| <= eps}

and compares it with the Chebyshev bound 1 - C^2 / (N eps^2).
``sampled_ud_experiment`` samples completion points of a product hierarchy
and checks the same bound on the extended values; with m <= 3 levels this is
a bounded-depth surrogate for uniform distribution of v_alpha, not a test of it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .completion import CylinderMeasure, extend_sequence, point_rng, sample_point
from .density import DEFAULT_TOL, DensityReport, WindowSchedule, mask_report, window_counts
from .distribution import continuity_diagnostic
from .partitions import ProductHierarchy, ball_level
from .reduction import exact_sum
from .sequences import FracMultiples, apply_fn, sqrt_decimal, sup_abs

SURROGATE_NOTE = ("bounded-depth Chebyshev surrogate: checks |E_m(v_alpha) - mean int x dF_j| <= eps "
                  "on sampled alpha; uniform distribution of v_alpha itself is not tested")


def chebyshev_bound(C: float, N: int, eps: float) -> float:
    return 1.0 - C * C / (N * eps * eps)


def distinct_irrationals(count: int, seed: int) -> list[FracMultiples]:
    """frac(n sqrt(q)) for ``count`` distinct non-square q drawn with a seeded generator."""
    rng = point_rng(seed)
    seen, out = set(), []
    while len(out) < count:
        q = int(rng.integers(2, 10 ** 6))
        r = math.isqrt(q)
        if r * r == q or q in seen:
            continue
        seen.add(q)
        out.append(FracMultiples(sqrt_decimal(q)))
    return out


@dataclass
class LLNReport:
    n_seq: int
    eps: float
    C: float
    counts: list          # |V(N, eps) cap [1, w]| per window w
    density: DensityReport
    bound: float
    passed: bool
    vacuous: bool
    integrals: list
    continuity_ok: bool | None = None

    @property
    def estimate(self) -> float:
        return self.density.value


def v_set_density(specs, f, eps: float, schedule: WindowSchedule, tol: float = DEFAULT_TOL,
                  check_continuity: bool = True) -> LLNReport:
    """Windowed density of V(N, eps) against 1 - C^2/(N eps^2), C = sup |f| on the range.

    The integrals int f dF_j are the empirical Stieltjes integrals at the
    final window, i.e. E_W(f(v_j)).
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    specs = list(specs)
    n_seq = len(specs)
    W = schedule.last
    lo = min(s.range[0] for s in specs)
    hi = max(s.range[1] for s in specs)
    C = sup_abs(f, lo, hi)
    avg = np.zeros(W)
    integrals = []
    for s in specs:
        col = apply_fn(f, s.head(W))
        integrals.append(exact_sum(col) / W)
        avg += col
    avg /= n_seq
    target = math.fsum(integrals) / n_seq
    member = np.abs(avg - target) <= eps
    rep = mask_report(member, schedule, tol)
    bound = chebyshev_bound(C, n_seq, eps)
    vacuous = bound <= 0
    cont = None
    if check_continuity:
        grid = [j / 8 for j in range(9)]
        cont = all(continuity_diagnostic(s, [lo + (hi - lo) * g for g in grid], (1e-2, 1e-3, 1e-4),
                                         schedule, tol).passed for s in specs)
    return LLNReport(n_seq, eps, C, window_counts(member, schedule.windows), rep, bound,
                     vacuous or rep.value >= bound - tol, vacuous, integrals, cont)


@dataclass
class SampleRow:
    index: int
    seed: int
    path: tuple
    values: list
    oscillations: list
    deviation: float | None
    passed: bool
    reason: str = ""


@dataclass
class SampledUDReport:
    m: int
    eps: float
    seed: int
    rows: list
    bound: float
    sigma: float
    threshold: float
    fraction: float
    passed: bool
    note: str = SURROGATE_NOTE


def sampled_ud_experiment(specs, h: ProductHierarchy, num_samples: int, seed: int, eps: float,
                          cm: CylinderMeasure | None = None, window: int | None = None) -> SampledUDReport:
    """Sample alpha, extend v_1..v_m at alpha and check the Chebyshev surrogate.

    A sample passes when |(1/m) sum_n v~_n(alpha) - (1/m) sum_j int x dF_j| <= eps.
    The passing fraction is compared with 1 - C^2/(m eps^2) - 3 sigma, where
    sigma is the binomial standard error of that bound.
    """
    if not isinstance(h, ProductHierarchy):
        raise TypeError("sampled_ud_experiment needs a product hierarchy")
    m = h.depth
    if m > 3:
        raise ValueError("depth > 3 is empty at desk-scale windows")
    if cm is None:
        cm = CylinderMeasure(h, window or h.calibration_window)
    specs = list(specs)[:m]
    W = cm.window
    integrals = [exact_sum(s.head(W)) / W for s in specs]
    target = math.fsum(integrals) / m if m else 0.0
    C = max((sup_abs(None, *s.range) for s in specs), default=0.0)
    bound = chebyshev_bound(C, m, eps) if m else 1.0
    p = min(1.0, max(0.0, bound))
    sigma = math.sqrt(p * (1 - p) / num_samples) if num_samples else 0.0
    rows = []
    for i in range(num_samples):
        pt = sample_point(cm, seed, i)
        try:
            ext = [extend_sequence(s, pt, check=False) for s in specs]
        except ValueError as exc:
            rows.append(SampleRow(i, seed, pt.path, [], [], None, False, str(exc)))
            continue
        vals = [e.value for e in ext]
        dev = abs(math.fsum(vals) / m - target) if m else 0.0
        rows.append(SampleRow(i, seed, pt.path, vals, [e.oscillation for e in ext], dev, dev <= eps))
    done = [r for r in rows if r.deviation is not None]
    frac = sum(r.passed for r in done) / len(done) if done else 1.0
    threshold = bound - 3 * sigma
    return SampledUDReport(m, eps, seed, rows, bound, sigma, threshold, frac,
                           (not done) or frac >= threshold)


@dataclass
class ShadowRow:
    n: int
    eps: float
    level: int
    k: int
    deviation: float
    allowed: float
    ok: bool


@dataclass
class ShadowReport:
    rows: list
    max_violation: float

    @property
    def passed(self):
        return self.max_violation == 0.0


def shadowing_check(specs, point, eps_schedule, pick: str = "far", window: int | None = None) -> ShadowReport:
    """For each n pick k_n in B(alpha, eps_n) and compare v_n(k_n) with v~_n(alpha).

    The allowance is the oscillation of v_n over alpha's deepest cell plus 2^-n.
    ``pick`` is "far" (largest ball member in the window) or "rep" (alpha's
    representative).
    """
    cm = point.measure
    rows = []
    worst = 0.0
    for n, (spec, eps) in enumerate(zip(specs, eps_schedule), start=1):
        level = ball_level(eps, cm.depth)
        label = point.path[level - 1] if level else 0
        ball = cm.members(level, label, window)
        if ball.size == 0:
            raise ValueError("empty ball trace within window")
        if pick == "rep":
            k = point.representative
        elif pick == "far":
            k = int(ball[-1])
        else:
            raise ValueError(f"unknown pick rule {pick!r}")
        ext = extend_sequence(spec, point, window, check=False)
        dev = abs(float(spec.values(np.array([k]))[0]) - ext.value)
        allowed = ext.oscillation + 2.0 ** -n
        worst = max(worst, dev - allowed)
        rows.append(ShadowRow(n, float(eps), level, k, dev, allowed, dev <= allowed))
    return ShadowReport(rows, max(0.0, worst))
