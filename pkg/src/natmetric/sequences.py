"""Bounded real sequences v(1), v(2), ... described symbolically.

Every spec evaluates vectorised over an array of indices (``values``) and
declares a closed range ``[lo, hi]`` that contains all of its values.
Fractional parts of ``n * alpha`` (and of real polynomials in n) are
computed in 64-bit fixed point: ``alpha`` is stored as an integer multiple
of 2**-64 and the products wrap modulo 2**64, which is exactly "mod 1".
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import Decimal, localcontext
from typing import Callable

import numpy as np

_TWO64 = 1 << 64
_SCALE53 = 2.0 ** -53


def _as_decimal(x) -> Decimal:
    if isinstance(x, Decimal):
        return x
    if isinstance(x, float):
        return Decimal(repr(x))
    return Decimal(str(x))


def fixed_point_fraction(x) -> int:
    """Integer A with A / 2**64 the fractional part of ``x`` (rounded)."""
    with localcontext() as ctx:
        ctx.prec = 60
        d = _as_decimal(x)
        frac = d - d.to_integral_value(rounding="ROUND_FLOOR")
        return int((frac * _TWO64).to_integral_value()) % _TWO64


def frac_poly_values(ns: np.ndarray, fixed_coeffs: list[int]) -> np.ndarray:
    """frac(sum_k c_k n**k) with ``c_k`` given as 64-bit fixed-point fractions."""
    n = np.asarray(ns).astype(np.uint64)
    acc = np.zeros(n.shape, dtype=np.uint64)
    power = np.ones(n.shape, dtype=np.uint64)
    with np.errstate(over="ignore"):
        for k, c in enumerate(fixed_coeffs):
            if k:
                power = power * n
            if c:
                acc = acc + power * np.uint64(c)
    # keep the top 53 bits so the conversion is exact and never reaches 1.0
    return (acc >> np.uint64(11)).astype(np.float64) * _SCALE53


@dataclass(frozen=True)
class Interval:
    """Real interval with explicit endpoint closure; ``lo`` may be -inf."""

    lo: float
    hi: float
    lo_closed: bool = True
    hi_closed: bool = False

    def contains(self, x):
        x = np.asarray(x, dtype=np.float64)
        left = x >= self.lo if self.lo_closed else x > self.lo
        right = x <= self.hi if self.hi_closed else x < self.hi
        return left & right

    @property
    def empty(self) -> bool:
        if self.lo < self.hi:
            return False
        return not (self.lo == self.hi and self.lo_closed and self.hi_closed)

    def __str__(self):
        def num(x):
            if math.isinf(x):
                return "-inf" if x < 0 else "inf"
            return repr(float(x))

        return "%s%s,%s%s" % ("[" if self.lo_closed else "(", num(self.lo),
                              num(self.hi), "]" if self.hi_closed else ")")


def half_open(lo, hi) -> Interval:
    return Interval(float(lo), float(hi), True, False)


def below(x) -> Interval:
    """The ray (-inf, x)."""
    return Interval(-math.inf, float(x), False, False)


# ---------------------------------------------------------------------------
# piecewise strictly monotone maps


@dataclass(frozen=True)
class PiecewiseMonotoneFn:
    """Continuous map on ``[xs[0], xs[-1]]``, strictly monotone on each piece.

    Piece i maps ``[xs[i], xs[i+1]]`` onto ``[ys[i], ys[i+1]]`` by
    ``y = ys[i] + (ys[i+1] - ys[i]) * t**powers[i]`` with ``t`` the relative
    position in the piece.  Power 1 gives the affine case; a long table of
    breakpoints gives table interpolation.
    """

    xs: tuple
    ys: tuple
    powers: tuple = None

    def __post_init__(self):
        xs = tuple(float(x) for x in self.xs)
        ys = tuple(float(y) for y in self.ys)
        powers = self.powers
        if powers is None:
            powers = (1.0,) * (len(xs) - 1)
        powers = tuple(float(p) for p in powers)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)
        object.__setattr__(self, "powers", powers)
        if len(xs) < 2 or len(ys) != len(xs) or len(powers) != len(xs) - 1:
            raise ValueError("need m+1 breakpoints, m+1 values and m powers")
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        if any(b == a for a, b in zip(ys, ys[1:])):
            raise ValueError("each piece must be strictly monotone")
        if any(p <= 0 for p in powers):
            raise ValueError("powers must be positive")

    @classmethod
    def identity(cls, a=0.0, b=1.0):
        return cls((a, b), (a, b))

    @classmethod
    def power(cls, p, a=0.0, b=1.0):
        return cls((a, b), (a, b), (p,))

    @classmethod
    def tent(cls, a=0.0, b=1.0, peak=None):
        mid = (a + b) / 2
        peak = b if peak is None else peak
        return cls((a, mid, b), (a, peak, a))

    @property
    def domain(self):
        return self.xs[0], self.xs[-1]

    @property
    def pieces(self) -> int:
        return len(self.powers)

    @property
    def value_range(self):
        # monotone pieces: extrema sit at breakpoints
        return min(self.ys), max(self.ys)

    @property
    def sup_abs(self) -> float:
        return max(abs(y) for y in self.ys)

    def __call__(self, x):
        x = np.clip(np.asarray(x, dtype=np.float64), self.xs[0], self.xs[-1])
        xs = np.asarray(self.xs)
        ys = np.asarray(self.ys)
        ps = np.asarray(self.powers)
        i = np.clip(np.searchsorted(xs, x, side="right") - 1, 0, self.pieces - 1)
        t = (x - xs[i]) / (xs[i + 1] - xs[i])
        return ys[i] + (ys[i + 1] - ys[i]) * np.power(t, ps[i])

    def _inverse(self, i, y):
        x0, x1 = self.xs[i], self.xs[i + 1]
        y0, y1 = self.ys[i], self.ys[i + 1]
        t = (y - y0) / (y1 - y0)
        t = min(1.0, max(0.0, t))
        return x0 + (x1 - x0) * t ** (1.0 / self.powers[i])

    def preimage(self, interval: Interval) -> list[Interval]:
        """f^-1(interval) as at most one interval per piece.

        Pieces are taken half-open ``[xs[i], xs[i+1])`` (the last one closed)
        so the returned intervals are pairwise disjoint.
        """
        out = []
        m = self.pieces
        for i in range(m):
            y0, y1 = self.ys[i], self.ys[i + 1]
            ylo, yhi = min(y0, y1), max(y0, y1)
            lo, lo_c = interval.lo, interval.lo_closed
            hi, hi_c = interval.hi, interval.hi_closed
            if lo < ylo or (lo == ylo and lo_c):
                lo, lo_c = ylo, True
            if hi > yhi or (hi == yhi and hi_c):
                hi, hi_c = yhi, True
            if lo > hi or (lo == hi and not (lo_c and hi_c)):
                continue
            a, b = self._inverse(i, lo), self._inverse(i, hi)
            a_c, b_c = lo_c, hi_c
            if y1 < y0:
                a, b, a_c, b_c = b, a, b_c, a_c
            # restrict to the half-open piece
            if i < m - 1 and b == self.xs[i + 1]:
                b_c = False
            piece = Interval(a, b, a_c, b_c)
            if not piece.empty:
                out.append(piece)
        return out

    def __str__(self):
        body = ",".join(f"{float(x)!r},{float(y)!r}" for x, y in zip(self.xs, self.ys))
        if any(p != 1.0 for p in self.powers):
            body += ",powers=list(%s)" % ",".join(repr(float(p)) for p in self.powers)
        return f"pw({body})"


# ---------------------------------------------------------------------------
# sequence specs


class SequenceSpec:
    """Base class: a bounded real sequence indexed from n = 1."""

    def values(self, ns) -> np.ndarray:
        raise NotImplementedError

    @property
    def range(self) -> tuple[float, float]:
        raise NotImplementedError

    def head(self, N: int) -> np.ndarray:
        return self.values(np.arange(1, N + 1, dtype=np.int64))


@dataclass(frozen=True)
class FracMultiples(SequenceSpec):
    """v(n) = n*alpha mod 1."""

    alpha: Decimal

    def __post_init__(self):
        object.__setattr__(self, "alpha", _as_decimal(self.alpha))

    def values(self, ns):
        return frac_poly_values(ns, [0, fixed_point_fraction(self.alpha)])

    @property
    def range(self):
        return 0.0, 1.0

    def __str__(self):
        return f"frac(alpha={self.alpha})"


@dataclass(frozen=True)
class PolyFrac(SequenceSpec):
    """v(n) = frac(c0 + c1 n + c2 n^2 + ...)."""

    coefficients: tuple

    def __post_init__(self):
        object.__setattr__(self, "coefficients",
                           tuple(_as_decimal(c) for c in self.coefficients))

    def values(self, ns):
        return frac_poly_values(ns, [fixed_point_fraction(c) for c in self.coefficients])

    @property
    def range(self):
        return 0.0, 1.0

    def __str__(self):
        return "poly(%s)" % ",".join(str(c) for c in self.coefficients)


@dataclass(frozen=True)
class VanDerCorput(SequenceSpec):
    base: int = 2

    def __post_init__(self):
        if int(self.base) < 2:
            raise ValueError("van der Corput base must be >= 2")
        object.__setattr__(self, "base", int(self.base))

    def values(self, ns):
        # reversed digits as an integer over base**k; one rounding in the final division
        n = np.array(ns, dtype=np.int64, copy=True)
        num = np.zeros(n.shape, dtype=np.int64)
        den = 1
        while np.any(n):
            num = num * self.base + n % self.base
            n //= self.base
            den *= self.base
        return num / float(den)

    @property
    def range(self):
        return 0.0, 1.0

    def __str__(self):
        return f"vdc(base={self.base})"


@dataclass(frozen=True)
class Constant(SequenceSpec):
    c: float

    def __post_init__(self):
        object.__setattr__(self, "c", float(self.c))

    def values(self, ns):
        return np.full(np.shape(ns), self.c)

    @property
    def range(self):
        return self.c, self.c

    def __str__(self):
        return f"const({self.c!r})"


@dataclass(frozen=True)
class Reciprocal(SequenceSpec):
    """v(n) = 1/n."""

    def values(self, ns):
        return 1.0 / np.asarray(ns, dtype=np.float64)

    @property
    def range(self):
        return 0.0, 1.0

    def __str__(self):
        return "recip"


@dataclass(frozen=True)
class Affine(SequenceSpec):
    """v(n) = a * inner(n) + b."""

    a: float
    b: float
    inner: SequenceSpec

    def __post_init__(self):
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "b", float(self.b))

    def values(self, ns):
        return self.a * self.inner.values(ns) + self.b

    @property
    def range(self):
        lo, hi = self.inner.range
        ends = (self.a * lo + self.b, self.a * hi + self.b)
        return min(ends), max(ends)

    def __str__(self):
        return f"affine({self.a!r},{self.b!r},{self.inner})"


@dataclass(frozen=True)
class PointwiseSum(SequenceSpec):
    """Termwise sum; with ``mod1`` the result is reduced into [0, 1)."""

    terms: tuple
    mod1: bool = False

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        if not self.terms:
            raise ValueError("sum needs at least one term")

    def values(self, ns):
        total = self.terms[0].values(ns)
        for t in self.terms[1:]:
            total = total + t.values(ns)
        if self.mod1:
            total = total - np.floor(total)
            total[total >= 1.0] = 0.0
        return total

    @property
    def range(self):
        if self.mod1:
            return 0.0, 1.0
        los, his = zip(*(t.range for t in self.terms))
        return math.fsum(los), math.fsum(his)

    def __str__(self):
        inner = ",".join(str(t) for t in self.terms)
        return f"sum({inner},mod=1)" if self.mod1 else f"sum({inner})"


@dataclass(frozen=True)
class Transform(SequenceSpec):
    """v(n) = f(inner(n)) for a piecewise strictly monotone f."""

    f: PiecewiseMonotoneFn
    inner: SequenceSpec

    def values(self, ns):
        return self.f(self.inner.values(ns))

    @property
    def range(self):
        return self.f.value_range

    def __str__(self):
        return f"map({self.f},{self.inner})"


def eval_seq(spec: SequenceSpec, n: int) -> float:
    if n < 1:
        raise ValueError("sequences are indexed from n = 1")
    return float(spec.values(np.array([n], dtype=np.int64))[0])


def apply_fn(f: Callable | None, x: np.ndarray) -> np.ndarray:
    """Apply an optional vectorised map; ``None`` means the identity."""
    if f is None:
        return x
    out = f(x)
    return np.broadcast_to(np.asarray(out, dtype=np.float64), np.shape(x))


def sup_abs(f: Callable | None, lo: float, hi: float, grid: int = 4097) -> float:
    """sup |f| over [lo, hi]; exact for piecewise monotone maps, sampled otherwise."""
    if f is None:
        return max(abs(lo), abs(hi))
    if isinstance(f, PiecewiseMonotoneFn):
        return f.sup_abs
    xs = np.linspace(lo, hi, grid)
    return float(np.max(np.abs(apply_fn(f, xs))))


# Irrational parameters used throughout, to 30 significant digits.
PHI = Decimal("0.618033988749894848204586834366")  # golden ratio conjugate
SQRT2 = Decimal("1.41421356237309504880168872421")
SQRT3 = Decimal("1.73205080756887729352744634151")


def sqrt_decimal(q: int, digits: int = 30) -> Decimal:
    with localcontext() as ctx:
        ctx.prec = digits
        return Decimal(q).sqrt()
