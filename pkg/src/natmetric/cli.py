"""Command-line front end: one subcommand per analysis, CSV reports.

Every report starts with ``# config: <canonical command line>``, followed by
the header ``quantity,key,window,value`` and one row per reported number.
Exit status: 0 pass, 1 fail, 2 usage error.
"""
from __future__ import annotations

import argparse
import csv
import io
import os
import shlex
import sys
import tempfile
from dataclasses import dataclass, field
from decimal import Decimal

from . import completion, distribution, lln, partitions, weyl
from .density import DEFAULT_TOL, WindowSchedule, density_report
from .expr import SpecSyntaxError, canonical_hierarchy, parse_fn, parse_hierarchy, parse_sequence, parse_set
from .sequences import PHI, SQRT2, SQRT3, FracMultiples

HEADER = ("quantity", "key", "window", "value")
DEFAULT_UD = tuple(str(FracMultiples(a)) for a in (PHI, SQRT2, SQRT3))


class UsageError(ValueError):
    pass


# ---------------------------------------------------------------------------
# option kinds: text -> canonical text, and canonical text -> value


def _int(text):
    text = str(text).strip()
    if "^" in text:
        base, exp = text.split("^")
        value = int(base) ** int(exp)
    else:
        f = float(text)
        if f != int(f):
            raise UsageError(f"not an integer: {text}")
        value = int(f)
    return value


def _float(text):
    return float(text)


def _windows(text):
    text = str(text).strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) not in (2, 3):
            raise UsageError(f"bad window shorthand {text!r}; use start:stop[:ratio]")
        ratio = float(parts[2]) if len(parts) == 3 else 10.0
        return WindowSchedule.geometric(_int(parts[0]), _int(parts[1]), ratio)
    return WindowSchedule(tuple(_int(p) for p in text.split(",")))


def _floats(text):
    return [float(x) for x in str(text).split(",") if x.strip()]


def _pair(text):
    a, b = str(text).replace(":", ",").split(",")
    return _int(a), _int(b)


def _ball(text):
    n, eps = str(text).split(":")
    return _int(n), float(eps)


KINDS = {
    # kind: (parse, canonical text)
    "int": (_int, lambda v: str(v)),
    "float": (_float, lambda v: repr(v)),
    "windows": (_windows, str),
    "floats": (_floats, lambda v: ",".join(repr(x) for x in v)),
    "set": (parse_set, str),
    "seq": (parse_sequence, str),
    "fn": (parse_fn, lambda v: "id" if v is None else str(v)),
    "hier": (lambda t: t, lambda t: t),  # built lazily; canonicalised through the parser
    "pair": (_pair, lambda v: f"{v[0]},{v[1]}"),
    "ball": (_ball, lambda v: f"{v[0]}:{v[1]!r}"),
    "choice": (str, str),
}


@dataclass(frozen=True)
class Opt:
    name: str
    kind: str
    default: object = None   # None: required (or empty when many)
    many: bool = False
    choices: tuple = ()
    help: str = ""


COMMON_TOL = Opt("tol", "float", repr(DEFAULT_TOL), help="existence tolerance")

COMMANDS = {
    "density": [Opt("set", "set", help="set expression"), Opt("windows", "windows", "1e4:1e6"), COMMON_TOL],
    "adf": [Opt("seq", "seq"), Opt("grid", "floats", "0,0.25,0.5,0.75,1"),
            Opt("windows", "windows", "1e4:1e6"), COMMON_TOL],
    "weyl": [Opt("seq", "seq"), Opt("hmax", "int", "5"), Opt("N", "int", ""),
             Opt("windows", "windows", "1e3:1e5"), Opt("tol", "float", repr(weyl.UD_TOL)),
             Opt("mode", "choice", "moments", choices=("moments", "ud"))],
    "strauch": [Opt("seq", "seq"), Opt("N", "int", "2000"), Opt("M", "int", "2000"),
                Opt("tol", "float", "0.02")],
    "independence": [Opt("seq", "seq", many=True), Opt("f", "fn", many=True),
                     Opt("N", "int", "1e5"), Opt("tol", "float", "0.01")],
    "corr": [Opt("u", "seq"), Opt("v", "seq"), Opt("N", "int", "1e5")],
    "metric": [Opt("hierarchy", "hier"), Opt("pair", "pair", many=True), Opt("ball", "ball", many=True)],
    "naturality": [Opt("hierarchy", "hier"), Opt("window", "int", "1e6"), COMMON_TOL],
    "nu": [Opt("hierarchy", "hier"), Opt("set", "set"), Opt("level", "int", ""),
           Opt("window", "int", "1e6"), COMMON_TOL],
    "dftilde": [Opt("hierarchy", "hier"), Opt("seq", "seq"), Opt("grid", "floats", "0,0.25,0.5,0.75,1"),
                Opt("level", "int", ""), Opt("window", "int", "1e6")],
    "lln": [Opt("seq", "seq", many=True), Opt("count", "int", "100"), Opt("seed", "int", "0"),
            Opt("f", "fn", "id"), Opt("eps", "float", "0.2"), Opt("windows", "windows", "1e4:1e5"),
            COMMON_TOL],
    "sample-ud": [Opt("seq", "seq", many=True), Opt("m", "int", "3"), Opt("samples", "int", "200"),
                  Opt("seed", "int", "0"), Opt("eps", "float", "0.9"), Opt("window", "int", "1e6")],
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="natmetric", description="Densities, distribution functions and natural metrics on N.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, opts in COMMANDS.items():
        sp = sub.add_parser(name)
        for o in opts:
            kw = dict(help=o.help or None)
            if o.many:
                kw["action"] = "append"
            if o.choices:
                kw["choices"] = o.choices
            sp.add_argument("--" + o.name, dest=o.name, **kw)
        sp.add_argument("--out", help="output CSV path (default: standard output)")
    return p


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved invocation; ``options`` holds canonical text per option."""

    command: str
    options: tuple  # ((name, text or tuple of texts), ...) in declaration order
    out: str | None = field(default=None, compare=False)

    def canonical(self) -> str:
        parts = [self.command]
        for name, text in self.options:
            for t in (text if isinstance(text, tuple) else (text,)):
                if t != "":
                    parts += ["--" + name, shlex.quote(t)]
        return " ".join(parts)

    def value(self, name):
        kind = {o.name: o for o in COMMANDS[self.command]}[name]
        text = dict(self.options)[name]
        parse = KINDS[kind.kind][0]
        if kind.many:
            return [parse(t) for t in text]
        return None if text == "" else parse(text)

    @classmethod
    def from_argv(cls, argv) -> "RunConfig":
        ns = build_parser().parse_args(list(argv))
        opts = []
        for o in COMMANDS[ns.command]:
            raw = getattr(ns, o.name)
            if o.many:
                texts = tuple(_canonical(o, t) for t in (raw or ()))
                opts.append((o.name, texts))
                continue
            if raw is None:
                if o.default is None:
                    raise UsageError(f"{ns.command}: --{o.name} is required")
                raw = o.default
            opts.append((o.name, _canonical(o, raw) if raw != "" else ""))
        return cls(ns.command, tuple(opts), ns.out)

    @classmethod
    def parse(cls, line: str) -> "RunConfig":
        return cls.from_argv(shlex.split(line))


def _canonical(o: Opt, text):
    try:
        if o.kind == "hier":
            return canonical_hierarchy(text)
        parse, show = KINDS[o.kind]
        return show(parse(text))
    except SpecSyntaxError as exc:
        raise UsageError(f"--{o.name}: {exc}") from None
    except (ValueError, TypeError) as exc:
        raise UsageError(f"--{o.name} {text!r}: {exc}") from None


# ---------------------------------------------------------------------------
# subcommands; each returns (rows, passed)


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, Decimal)):
        return str(v)
    if isinstance(v, float):
        return format(v, ".12g")
    try:
        return format(float(v), ".12g") if hasattr(v, "dtype") else str(v)
    except TypeError:
        return str(v)


def _report_rows(rep, prefix=""):
    rows = [(prefix + "mean", "", N, m) for N, m in zip(rep.windows, rep.means)]
    rows += [(prefix + "lower", "", "", rep.lower), (prefix + "upper", "", "", rep.upper),
             (prefix + "value", "", "", rep.value), (prefix + "exists", "", "", rep.exists)]
    return rows


def run_density(c):
    rep = density_report(c.value("set"), c.value("windows"), c.value("tol"))
    rows = _report_rows(rep) + [("complement_ok", "", "", rep.complement_ok)]
    return rows, rep.exists


def run_adf(c):
    rows, ok = [], True
    for x, rep in distribution.adf_estimate(c.value("seq"), c.value("windows"), c.value("grid"), c.value("tol")):
        rows += [("F", x, "", rep.value), ("spread", x, "", rep.spread), ("exists", x, "", rep.exists)]
        ok &= rep.exists
    return rows, ok


def run_weyl(c):
    N = c.value("N")
    schedule = WindowSchedule.single(N) if N else c.value("windows")
    spec, tol = c.value("seq"), c.value("tol")
    if c.value("mode") == "ud":
        rep = weyl.ud_mod1_verdict(spec, schedule, tol)
        mom, ok = rep.moments, rep.passed
        extra = [("adf_deviation", "", schedule.last, rep.adf_deviation), ("adf_exists", "", "", all(rep.adf_exists))]
    else:
        mom = weyl.moment_test(spec, c.value("hmax"), schedule, tol)
        ok, extra = mom.passed, []
    rows = []
    for h in mom.moments:
        rows += [("moment", h, N_, m) for N_, m in zip(mom.windows, mom.moments[h])]
        rows.append(("target", h, "", mom.targets[h]))
    rows += [("max_deviation", "", schedule.last, mom.max_deviation)] + extra
    return rows, ok


def run_strauch(c):
    stat = distribution.strauch_statistic(c.value("seq"), c.value("N"), c.value("M"))
    return [("statistic", "", "", stat), ("reading", "", "", distribution.STRAUCH_READING)], abs(stat) <= c.value("tol")


def run_independence(c):
    specs = c.value("seq")
    fs = c.value("f") or [None] * len(specs)
    if len(fs) == 1:
        fs = fs * len(specs)
    if len(specs) < 2 or len(fs) != len(specs):
        raise UsageError("independence needs >= 2 --seq and one --f per sequence (or a single --f)")
    stat = distribution.independence_statistic(specs, fs, c.value("N"))
    return [("statistic", "", c.value("N"), stat)], abs(stat) <= c.value("tol")


def run_corr(c):
    try:
        r = distribution.correlation(c.value("u"), c.value("v"), c.value("N"))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    names = ("mean_u", "mean_v", "disp_u", "disp_v", "cov", "rho", "slope", "intercept",
             "residual_dispersion", "residual_identity", "affine_identity")
    return [(n, "", r.N, getattr(r, n)) for n in names], True


def _hierarchy(c, window=None):
    return parse_hierarchy(dict(c.options)["hierarchy"], calibration_window=window)


def run_metric(c):
    pairs, balls = c.value("pair"), c.value("ball")
    if not pairs and not balls:
        raise UsageError("metric needs at least one --pair or --ball")
    M = partitions.NaturalMetric(_hierarchy(c))
    rows = []
    for a, b in pairs:
        key = f"{a}:{b}"
        lo, hi = partitions.metric_interval(M, a, b)
        rows += [("distance", key, "", partitions.metric_eval(M, a, b)),
                 ("level", key, "", partitions.first_divergence_level(M, a, b)),
                 ("lower", key, "", lo), ("upper", key, "", hi)]
    for n, eps in balls:
        bt = partitions.ball_trace(M, n, eps)
        key = f"{n}:{eps!r}"
        rows += [("ball_level", key, "", bt.level), ("ball_cell", key, "", str(bt.cell)),
                 ("ball_radius", key, "", bt.quantized_radius)]
    return rows, True


def run_naturality(c):
    window = c.value("window")
    rep = partitions.naturality_check(_hierarchy(c, window), window, c.value("tol"))
    rows = []
    for info in rep.levels:
        lv = info["level"]
        rows += [(k, lv, "", info[k]) for k in ("cells", "partition_exact", "densities_exist",
                                                 "density_sum", "max_diameter", "diameter_bound")]
    if rep.deepest is not None:
        rows += [("min_cell_density", rep.deepest.level, window, float(rep.deepest.value.min())),
                 ("max_cell_density", rep.deepest.level, window, float(rep.deepest.value.max()))]
    rows += [("cond_i", "", "", rep.cond_i), ("cond_ii", "", "", rep.cond_ii)]
    rows += [("witness", w[0], w[1], str(w[2])) for w in rep.witnesses]
    return rows, rep.passed


def _level(c, h):
    level = c.value("level")
    level = h.depth if level is None else level
    if not 0 <= level <= h.depth:
        raise UsageError(f"--level must be in 0..{h.depth}")
    return level


def run_nu(c):
    window = c.value("window")
    h = _hierarchy(c, window)
    cm = completion.CylinderMeasure(h, window)
    rep = completion.nu_measurable_check(cm, c.value("set"), _level(c, h), window, c.value("tol"))
    rows = [("nu_star", rep.level, window, rep.nu_star), ("nu_star_complement", rep.level, window,
                                                           rep.nu_star_complement),
            ("total", rep.level, window, rep.total), ("measurable", rep.level, "", rep.measurable),
            ("nu", rep.level, "", rep.nu), ("upper_density", "", "", rep.density.upper),
            ("matches_density", "", "", rep.matches_density), ("dominance", "", "", rep.dominance),
            ("note", "", "", rep.note)]
    return rows, rep.measurable


def run_dftilde(c):
    window = c.value("window")
    h = _hierarchy(c, window)
    cm = completion.CylinderMeasure(h, window)
    level = _level(c, h)
    rows = []
    for b in completion.df_tilde(c.value("seq"), cm, c.value("grid"), level, window):
        rows += [("low", b.x, level, b.low), ("high", b.x, level, b.high)]
    return rows, True


def run_lln(c):
    specs = c.value("seq") or lln.distinct_irrationals(c.value("count"), c.value("seed"))
    rep = lln.v_set_density(specs, c.value("f"), c.value("eps"), c.value("windows"), c.value("tol"),
                            check_continuity=False)
    rows = [("count", "", w, n) for w, n in zip(c.value("windows").windows, rep.counts)]
    rows += _report_rows(rep.density)
    rows += [("sequences", "", "", rep.n_seq), ("C", "", "", rep.C), ("bound", "", "", rep.bound),
             ("vacuous", "", "", rep.vacuous), ("passed", "", "", rep.passed)]
    return rows, rep.passed


def run_sample_ud(c):
    specs = c.value("seq") or [parse_sequence(t) for t in DEFAULT_UD]
    window = c.value("window")
    h = partitions.product_hierarchy(specs, c.value("m"), window)
    rep = lln.sampled_ud_experiment(specs, h, c.value("samples"), c.value("seed"), c.value("eps"))
    rows = []
    for r in rep.rows:
        rows += [("path", r.index, "", ";".join(str(x) for x in r.path)),
                 ("deviation", r.index, "", r.deviation), ("sample_passed", r.index, "", r.passed)]
    rows += [("fraction", "", "", rep.fraction), ("bound", "", "", rep.bound), ("sigma", "", "", rep.sigma),
             ("threshold", "", "", rep.threshold), ("passed", "", "", rep.passed),
             ("rng", "", "", completion.RNG_NAME), ("note", "", "", rep.note)]
    return rows, rep.passed


RUNNERS = {
    "density": run_density, "adf": run_adf, "weyl": run_weyl, "strauch": run_strauch,
    "independence": run_independence, "corr": run_corr, "metric": run_metric,
    "naturality": run_naturality, "nu": run_nu, "dftilde": run_dftilde, "lln": run_lln,
    "sample-ud": run_sample_ud,
}


def render(config: RunConfig, rows) -> str:
    buf = io.StringIO()
    buf.write(f"# config: {config.canonical()}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(HEADER)
    for row in rows:
        w.writerow([_fmt(x) for x in row])
    return buf.getvalue()


def write_atomic(path: str, text: str):
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".natmetric-", suffix=".csv")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def run(config: RunConfig) -> tuple[int, str]:
    rows, passed = RUNNERS[config.command](config)
    return (0 if passed else 1), render(config, rows)


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        config = RunConfig.from_argv(argv)
        code, text = run(config)
    except UsageError as exc:
        print(f"natmetric: error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError, TypeError) as exc:
        print(f"natmetric: error: {exc}", file=sys.stderr)
        return 2
    if config.out:
        write_atomic(config.out, text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
