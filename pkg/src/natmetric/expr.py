"""Text expressions for sequences, sets and hierarchies.

Grammar (whitespace ignored)::

    expr     := NAME [ "(" [arg ("," arg)*] ")" ]
    arg      := NAME "=" value | value
    value    := NUMBER | interval | expr
    interval := ("[" | "(") NUMBER "," NUMBER ("]" | ")")

Sequences: frac(alpha=A) vdc(base=B) const(C) recip poly(c0,c1,..)
affine(a,b,SEQ) sum(SEQ,..[,mod=1]) map(pw(x0,y0,x1,y1,..[,powers=list(..)]),SEQ)
ind(SET) is the 0/1 indicator sequence of a set.
Sets: ap(r,m) set(n1,..) union(..) inter(..) compl(S) pre(SEQ,[x1,x2)) blocks
Hierarchies: polyadic(L) adapted(SEQ,K[,window=W]) product(SEQ,..,m=M[,window=W])

``str()`` of every parsed object is its canonical form and parses back to
an equal object.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from decimal import Decimal

from . import density as D
from . import sequences as S

_TOKEN = re.compile(r"\s*(?:(?P<num>[-+]?(?:inf|(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?))"
                    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<punct>[()\[\],=]))")


class SpecSyntaxError(ValueError):
    def __init__(self, message, text, pos):
        self.pos = pos
        self.text = text
        super().__init__(f"{message} at position {pos}\n  {text}\n  {' ' * pos}^")


@dataclass
class Call:
    name: str
    pos: int
    args: list = field(default_factory=list)
    kwargs: dict = field(default_factory=dict)
    kwpos: dict = field(default_factory=dict)


@dataclass
class Num:
    text: str
    pos: int


@dataclass
class Span:
    lo: Num
    hi: Num
    lo_closed: bool
    hi_closed: bool
    pos: int


class _Parser:
    def __init__(self, text):
        self.text = text
        self.toks = []
        pos = 0
        while pos < len(text):
            if text[pos:].strip() == "":
                break
            m = _TOKEN.match(text, pos)
            if not m or m.end() == pos:
                raise SpecSyntaxError("unexpected character", text, pos)
            kind = m.lastgroup
            start = m.start(kind)
            self.toks.append((kind, m.group(kind), start))
            pos = m.end()
        self.i = 0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else ("end", "", len(self.text))

    def take(self, value=None):
        tok = self.peek()
        if value is not None and tok[1] != value:
            raise SpecSyntaxError(f"expected {value!r}", self.text, tok[2])
        if tok[0] == "end":
            raise SpecSyntaxError("unexpected end of input", self.text, tok[2])
        self.i += 1
        return tok

    def parse(self):
        node = self.value()
        kind, _, pos = self.peek()
        if kind != "end":
            raise SpecSyntaxError("trailing input", self.text, pos)
        return node

    def value(self):
        kind, tok, pos = self.peek()
        if kind == "num":
            self.i += 1
            return Num(tok, pos)
        if tok in ("[", "("):
            return self.interval()
        if kind == "name":
            return self.call()
        raise SpecSyntaxError("expected a value", self.text, pos)

    def interval(self):
        _, open_tok, pos = self.take()
        lo = self.number()
        self.take(",")
        hi = self.number()
        _, close_tok, cpos = self.take()
        if close_tok not in ("]", ")"):
            raise SpecSyntaxError("expected ']' or ')'", self.text, cpos)
        return Span(lo, hi, open_tok == "[", close_tok == "]", pos)

    def number(self):
        kind, tok, pos = self.take()
        if kind != "num":
            raise SpecSyntaxError("expected a number", self.text, pos)
        return Num(tok, pos)

    def call(self):
        _, name, pos = self.take()
        node = Call(name, pos)
        if self.peek()[1] != "(":
            return node
        self.take("(")
        if self.peek()[1] == ")":
            self.take(")")
            return node
        while True:
            kind, tok, tpos = self.peek()
            nxt = self.toks[self.i + 1] if self.i + 1 < len(self.toks) else None
            if kind == "name" and nxt is not None and nxt[1] == "=":
                self.i += 2
                if tok in node.kwargs:
                    raise SpecSyntaxError(f"duplicate argument {tok!r}", self.text, tpos)
                node.kwpos[tok] = tpos
                node.kwargs[tok] = self.value()
            else:
                if node.kwargs:
                    raise SpecSyntaxError("positional argument after keyword", self.text, tpos)
                node.args.append(self.value())
            _, sep, spos = self.take()
            if sep == ")":
                return node
            if sep != ",":
                raise SpecSyntaxError("expected ',' or ')'", self.text, spos)


class _Builder:
    def __init__(self, text, calibration_window=None, lazy=False):
        self.text = text
        self.window = calibration_window
        self.lazy = lazy  # hierarchies: return canonical text instead of calibrating

    def fail(self, msg, pos):
        raise SpecSyntaxError(msg, self.text, pos)

    # -- leaf helpers ------------------------------------------------------
    def num(self, node, kind=float):
        if not isinstance(node, Num):
            self.fail("expected a number", node.pos)
        if kind is Decimal:
            return Decimal(node.text)
        if kind is int:
            v = float(node.text)
            if not math.isfinite(v) or v != int(v):
                self.fail("expected an integer", node.pos)
            return int(v)
        return float(node.text)

    def arg(self, node, name, index, default=None, required=True):
        if name in node.kwargs:
            return node.kwargs.pop(name)
        if index is not None and index < len(node.args):
            return node.args[index]
        if required:
            self.fail(f"{node.name} needs argument {name!r}", node.pos)
        return default

    def done(self, node, used_positional):
        if node.kwargs:
            key = next(iter(node.kwargs))
            self.fail(f"unknown argument {key!r} for {node.name}", node.kwpos[key])
        if len(node.args) > used_positional:
            self.fail(f"too many arguments for {node.name}", node.args[used_positional].pos)

    # -- dispatch ----------------------------------------------------------
    def build(self, node):
        if not isinstance(node, Call):
            self.fail("expected an expression", node.pos)
        method = getattr(self, "b_" + node.name, None)
        if method is None:
            self.fail(f"unknown name {node.name!r}", node.pos)
        return method(node)

    def seq(self, node):
        obj = self.build(node) if isinstance(node, Call) else self.fail("expected a sequence", node.pos)
        if not isinstance(obj, S.SequenceSpec):
            self.fail("expected a sequence", node.pos)
        return obj

    def set(self, node):
        obj = self.build(node) if isinstance(node, Call) else self.fail("expected a set", node.pos)
        if not isinstance(obj, D.SetSpec):
            self.fail("expected a set", node.pos)
        return obj

    # -- sequences ---------------------------------------------------------
    def b_frac(self, node):
        alpha = self.num(self.arg(node, "alpha", 0), Decimal)
        self.done(node, 1)
        return S.FracMultiples(alpha)

    def b_vdc(self, node):
        base = self.num(self.arg(node, "base", 0), int)
        self.done(node, 1)
        if base < 2:
            self.fail("base must be >= 2", node.pos)
        return S.VanDerCorput(base)

    def b_const(self, node):
        c = self.num(self.arg(node, "c", 0))
        self.done(node, 1)
        return S.Constant(c)

    def b_recip(self, node):
        self.done(node, 0)
        return S.Reciprocal()

    def b_poly(self, node):
        coeffs = [self.num(a, Decimal) for a in node.args]
        node.args = []
        self.done(node, 0)
        if not coeffs:
            self.fail("poly needs coefficients", node.pos)
        return S.PolyFrac(tuple(coeffs))

    def b_affine(self, node):
        a = self.num(self.arg(node, "a", 0))
        b = self.num(self.arg(node, "b", 1))
        inner = self.seq(self.arg(node, "inner", 2))
        self.done(node, 3)
        return S.Affine(a, b, inner)

    def b_sum(self, node):
        mod = node.kwargs.pop("mod", None)
        terms = tuple(self.seq(a) for a in node.args)
        node.args = []
        self.done(node, 0)
        if not terms:
            self.fail("sum needs terms", node.pos)
        if mod is not None and self.num(mod) != 1.0:
            self.fail("only mod=1 is supported", mod.pos)
        return S.PointwiseSum(terms, mod is not None)

    def b_pw(self, node):
        powers = node.kwargs.pop("powers", None)
        nums = [self.num(a) for a in node.args]
        node.args = []
        self.done(node, 0)
        if len(nums) < 4 or len(nums) % 2:
            self.fail("pw needs x0,y0,x1,y1,... pairs", node.pos)
        ps = None
        if powers is not None:
            if not isinstance(powers, Call) or powers.name != "list":
                self.fail("powers must be list(...)", powers.pos)
            ps = [self.num(p) for p in powers.args]
        try:
            return S.PiecewiseMonotoneFn(tuple(nums[0::2]), tuple(nums[1::2]), ps)
        except ValueError as exc:
            self.fail(str(exc), node.pos)

    def b_map(self, node):
        fnode = self.arg(node, "f", 0)
        f = self.build(fnode)
        if not isinstance(f, S.PiecewiseMonotoneFn):
            self.fail("map needs a pw(...) function", fnode.pos)
        inner = self.seq(self.arg(node, "inner", 1))
        self.done(node, 2)
        return S.Transform(f, inner)

    # -- sets ----------------------------------------------------------------
    def b_ap(self, node):
        r = self.num(self.arg(node, "r", 0), int)
        m = self.num(self.arg(node, "m", 1), int)
        self.done(node, 2)
        if m < 1:
            self.fail("modulus must be positive", node.pos)
        return D.Progression(r, m)

    def b_set(self, node):
        elems = [self.num(a, int) for a in node.args]
        if any(e < 1 for e in elems):
            self.fail("set elements must be positive", node.pos)
        node.args = []
        self.done(node, 0)
        return D.Explicit(tuple(elems))

    def b_union(self, node):
        parts = tuple(self.set(a) for a in node.args)
        node.args = []
        self.done(node, 0)
        return D.Union(parts)

    def b_inter(self, node):
        parts = tuple(self.set(a) for a in node.args)
        node.args = []
        self.done(node, 0)
        return D.Intersection(parts)

    def b_compl(self, node):
        inner = self.set(self.arg(node, "inner", 0))
        self.done(node, 1)
        return D.Complement(inner)

    def b_pre(self, node):
        seq = self.seq(self.arg(node, "seq", 0))
        span = self.arg(node, "interval", 1)
        self.done(node, 2)
        if not isinstance(span, Span):
            self.fail("expected an interval like [0,0.5)", span.pos)
        lo, hi = self.num(span.lo), self.num(span.hi)
        if hi < lo:
            self.fail("empty interval", span.pos)
        return D.Preimage(seq, S.Interval(lo, hi, span.lo_closed, span.hi_closed))

    def b_ind(self, node):
        inner = self.set(self.arg(node, "inner", 0))
        self.done(node, 1)
        return D.Indicator(inner)

    def b_blocks(self, node):
        self.done(node, 0)
        return D.DYADIC_BLOCKS

    # -- hierarchies ---------------------------------------------------------
    def _window(self, node):
        w = node.kwargs.pop("window", None)
        if w is not None:
            return self.num(w, int)
        return self.window

    def b_polyadic(self, node):
        from .partitions import CALIBRATION_WINDOW, PolyadicHierarchy, MAX_POLYADIC_DEPTH

        L = self.num(self.arg(node, "L", 0), int)
        window = self._window(node) or CALIBRATION_WINDOW
        self.done(node, 1)
        if not 1 <= L <= MAX_POLYADIC_DEPTH:
            self.fail(f"polyadic depth must be in 1..{MAX_POLYADIC_DEPTH}", node.pos)
        if self.lazy:
            return f"polyadic({L})"
        return PolyadicHierarchy(L, window)

    def b_adapted(self, node):
        from .partitions import CALIBRATION_WINDOW, adapted_hierarchy

        seq = self.seq(self.arg(node, "seq", 0))
        K = self.num(self.arg(node, "K", 1), int)
        explicit = "window" in node.kwargs
        window = self._window(node) or CALIBRATION_WINDOW
        self.done(node, 2)
        if K < 1:
            self.fail("K must be >= 1", node.pos)
        if self.lazy:
            return f"adapted({seq},{K}" + (f",window={window})" if explicit else ")")
        return adapted_hierarchy(seq, K, window)

    def b_product(self, node):
        from .partitions import CALIBRATION_WINDOW, product_hierarchy

        m = self.num(self.arg(node, "m", None), int)
        window = self._window(node) or CALIBRATION_WINDOW
        specs = [self.seq(a) for a in node.args]
        node.args = []
        self.done(node, 0)
        if not 0 <= m <= len(specs):
            self.fail("product needs m <= number of sequences", node.pos)
        if self.lazy:
            return "product(%s,m=%d)" % (",".join(map(str, specs)), m)
        return product_hierarchy(specs, m, window)


def parse_spec_expr(text: str, calibration_window=None):
    """Parse a sequence, set or hierarchy expression."""
    tree = _Parser(text).parse()
    return _Builder(text, calibration_window).build(tree)


def parse_sequence(text: str) -> S.SequenceSpec:
    obj = parse_spec_expr(text)
    if not isinstance(obj, S.SequenceSpec):
        raise SpecSyntaxError("expected a sequence expression", text, 0)
    return obj


def parse_set(text: str) -> D.SetSpec:
    obj = parse_spec_expr(text)
    if not isinstance(obj, D.SetSpec):
        raise SpecSyntaxError("expected a set expression", text, 0)
    return obj


def parse_fn(text: str):
    """``id`` (identity) or a pw(...) expression."""
    if text.strip() in ("id", "identity"):
        return None
    obj = parse_spec_expr(text)
    if not isinstance(obj, S.PiecewiseMonotoneFn):
        raise SpecSyntaxError("expected id or pw(...)", text, 0)
    return obj


def canonical_hierarchy(text: str) -> str:
    """Validate a hierarchy expression and return its canonical text without calibrating."""
    tree = _Parser(text).parse()
    if not isinstance(tree, Call) or tree.name not in ("polyadic", "adapted", "product"):
        raise SpecSyntaxError("expected a hierarchy expression", text, 0)
    return _Builder(text, lazy=True).build(tree)


def parse_hierarchy(text: str, calibration_window=None):
    from .partitions import PartitionHierarchy

    obj = parse_spec_expr(text, calibration_window)
    if not isinstance(obj, PartitionHierarchy):
        raise SpecSyntaxError("expected a hierarchy expression", text, 0)
    return obj
