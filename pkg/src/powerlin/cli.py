"""Command-line front door.

Exit codes: 0 success, 1 a verify battery failed, 2 a mathematical
obstruction (OBSTRUCTED, CONDITIONS_VIOLATED), 3 a precondition or parse
error.  Reports are deterministic: identical argv gives identical bytes.
"""

import argparse
import json
import sys
from dataclasses import dataclass, fields, is_dataclass
from fractions import Fraction

from .errors import OBSTRUCTION_CODES, PowerlinError, fail
from .ring import QQ, Nil, format_coeff, parse_ring
from .series import (INF, AtLeast, Series, SeriesVec, detect_names, dump_series, format_series,
                     load_series, parse_poly, substitute_partial)


class UsageError(Exception):
    pass


class _ArgParser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclass
class RunConfig:
    subcommand: str
    order: int
    ring: object
    L: list
    seed: int
    format: str
    work_bound: object


# serialization


def _num(x):
    if x == INF:
        return "inf"
    if isinstance(x, AtLeast):
        return f">={x.value}"
    return str(x)


def _series_out(s, names=None):
    return {"expr": format_series(s, names), "validity": _num(s.validity), "file": dump_series(s)}


def _plain(obj):
    """JSON-ready form of reports, witnesses and results."""
    if isinstance(obj, Series):
        return _series_out(obj)
    if isinstance(obj, SeriesVec):
        return [_series_out(c) for c in obj]
    if isinstance(obj, (Fraction, Nil)):
        return format_coeff(obj)
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, int):
        return obj
    if isinstance(obj, float):
        return _num(obj)
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if is_dataclass(obj):
        return {f.name: _plain(getattr(obj, f.name)) for f in fields(obj)}
    return str(obj)


def _render_text(report):
    lines = []

    def emit(key, val):
        if isinstance(val, dict) and "expr" in val and "file" in val:
            lines.append(f"{key} = {val['expr']}  (valid to {val['validity']})")
        elif isinstance(val, dict):
            for k, v in val.items():
                emit(f"{key}.{k}", v)
        elif isinstance(val, list) and val and all(isinstance(v, (dict, list)) for v in val):
            for i, v in enumerate(val):
                emit(f"{key}[{i}]", v)
        else:
            lines.append(f"{key} = {json.dumps(val) if not isinstance(val, str) else val}")

    for k, v in report.items():
        emit(k, v)
    return "\n".join(lines) + "\n"


def _kappas(bundle):
    maps = {name: getattr(bundle, name) for name in ("ell", "h", "sigma", "sigma_h")}
    return {name: _num(m.kappa) for name, m in maps.items() if m is not None}


def _residual_order(s):
    s = s.truncate(s.validity)
    return "inf" if s.is_zero() else _num(s.order())


# input helpers


def _read(path):
    with open(path) as fh:
        return fh.read()


def _names(text, n, extra=()):
    """Variable names for an n-variable polynomial written in x, y, z or x1..xn."""
    found = [nm for nm in detect_names(text, *extra) if nm not in ("e",)]
    for cand in (["x", "y", "z"][:n] if n <= 3 else None, [f"x{i + 1}" for i in range(n)]):
        if cand and set(found) <= set(cand):
            return cand
    if len(found) == n:
        return found
    fail("PARSE_ERROR", f"cannot match variables {found} to {n} coordinates")


def _read_series_list(path, names, ring=QQ):
    """A series file, or one expression per line."""
    text = _read(path)
    if text.lstrip().startswith("nvars="):
        obj = load_series(text)
        return list(obj) if isinstance(obj, SeriesVec) else [obj]
    return [parse_poly(ln, names, ring) for ln in text.splitlines()
            if ln.strip() and not ln.lstrip().startswith("#")]


def _parse_matrix(text):
    return [[Fraction(c) for c in row.split(",")] for row in text.split(";")]


def _require_standard_grading(cfg):
    if any(w != 1 for w in cfg.L):
        fail("DOMAIN_MISMATCH", f"{cfg.subcommand} works with the standard grading L = 1 only")


# subcommands


def cmd_lift_arc(args, cfg):
    from .arcspace import Jet, hypersurface_chart, lift_jet_general, lift_jet_hypersurface

    _require_standard_grading(cfg)
    jet = Jet.load(_read(args.jet))
    names = _names(" ".join(args.poly), jet.n)
    fs = [parse_poly(p, names) for p in args.poly]
    N = cfg.order
    report = {"jet_level": jet.level}
    if args.general or len(fs) > 1:
        lift = lift_jet_general(fs, jet, N)
        arc = lift.arc
        report.update(rank=lift.rank, smith_eps=lift.smith.eps)
    else:
        from .arcspace import classify_jet

        tag = classify_jet(fs[0], jet)
        chart = hypersurface_chart(fs[0], jet, tag)
        fiber = SeriesVec(_read_series_list(args.fiber, ["t"])) if args.fiber else None
        arc = lift_jet_hypersurface(fs[0], jet, N, tag=tag, fiber=fiber, chart=chart)
        report["stratum"] = {"i": tag.i, "e_prime": tag.e_prime, "ord_f": _num(tag.ord_f)}
        report["kappa"] = _kappas(chart.bundle)
    report["residual_order"] = [
        _residual_order(substitute_partial(f, arc, 0, N, check_order=False).truncate(N)) for f in fs]
    report["arc"] = arc
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(dump_series(arc))
    return report


def cmd_classify(args, cfg):
    from .arcspace import Jet, classify_jet

    jet = Jet.load(_read(args.jet))
    f = parse_poly(args.poly, _names(args.poly, jet.n))
    tag = classify_jet(f, jet)
    threshold = jet.level + tag.e_prime + 1
    return {"stratum": {"i": tag.i, "e_prime": tag.e_prime, "ord_f": _num(tag.ord_f)},
            "liftable": tag.ord_f >= threshold, "threshold": threshold}


def cmd_trivialize(args, cfg):
    from .arcspace import Jet, trivialize

    _require_standard_grading(cfg)
    arc = SeriesVec(_read_series_list(args.arc, ["t"]))
    f = parse_poly(args.poly, _names(args.poly, len(arc)))
    jet = Jet.from_arcs(arc, args.level)
    N = min(cfg.order, arc.validity)
    _, zeta = trivialize(f, jet, arc, N, chart_index=args.chart)
    return {"jet": jet.values, "fiber": zeta}


def cmd_ode(args, cfg):
    from .apps import OdeSystem, ode_bundle, solve_ode

    _require_standard_grading(cfg)
    init = [Fraction(c) for c in args.init.replace(";", ",").split(",") if c.strip()]
    sysm = OdeSystem.parse(_read(args.system), init)
    x = solve_ode(sysm, cfg.order, seed=cfg.seed)
    bundle = ode_bundle(sysm, probes=0)
    return {"q": sysm.q, "kappa": _kappas(bundle), "x": x}


def cmd_tougeron(args, cfg):
    from .apps import TougeronInstance, tougeron_lift

    inst = TougeronInstance.parse(args.F, _read(args.rep))
    res = tougeron_lift(inst, cfg.order, seed=cfg.seed)
    report = {"kappa": _kappas(res.bundle), "y": res.y}
    report["membership"] = "unchecked" if res.membership is None else res.membership
    return report


def cmd_wavrik(args, cfg):
    from .apps import wavrik_lift

    F = parse_poly(args.F, ["x", "y"])
    text = _read(args.approx)
    ybar = load_series(text) if text.lstrip().startswith("nvars=") else parse_poly(text.strip(), ["x"])
    res = wavrik_lift(F, ybar, args.agree, cfg.order)
    return {"e": res.e, "agreement": res.agreement,
            "discriminant_order": _num(res.discriminant_order), "y": res.y}


def cmd_invert_germ(args, cfg):
    from .apps import invert_germ

    _require_standard_grading(cfg)
    ftext, btext = _read(args.f), _read(args.b)
    lam = _parse_matrix(args.lam)
    names = _names(ftext + " " + btext, len(lam))
    f = SeriesVec(_read_series_list(args.f, names))
    b = SeriesVec(_read_series_list(args.b, names))
    res = invert_germ(f, b, lam, cfg.order, seed=cfg.seed)
    return {"kappa": _kappas(res.bundle), "u": res.u}


def cmd_drinfeld(args, cfg):
    from .apps import DrinfeldData, base_point_data, drinfeld_conditions, drinfeld_deform

    ring = cfg.ring
    if ring.is_field:
        fail("DOMAIN_MISMATCH", "drinfeld needs a test ring --ring Q[e]/e^K with K >= 2")
    gamma0 = SeriesVec(_read_series_list(args.gamma0, ["t"]))
    n = len(gamma0) - 1
    xn = ["x"] if n == 1 else [f"x{i + 1}" for i in range(n)]
    f = parse_poly(args.f, xn + ["y"])
    if args.base_point:
        data = base_point_data(f, gamma0, ring, args.r)
    else:
        if not (args.q and args.xbar and args.ybar):
            fail("PARSE_ERROR", "give --q, --xbar and --ybar, or --base-point")
        xbar = _read_series_list(args.xbar, ["t"], ring)
        ybar = _read_series_list(args.ybar, ["t"], ring)
        data = DrinfeldData(f, gamma0, ring, parse_poly(args.q, ["t"], ring), xbar, ybar[0], args.r)
    free = SeriesVec(_read_series_list(args.free, ["t"], ring)) if args.free else None
    res = drinfeld_deform(data, free=free, N=cfg.order, seed=cfg.seed)
    return {"ring": ring.name(), "conditions_violated": drinfeld_conditions(data),
            "iterations": res.iterations, "gamma": res.gamma, "xi": res.xi, "eta": res.eta}


def cmd_canonical_form(args, cfg):
    from .nmatrix import RowFiniteMatrix, canonical_form

    ell = RowFiniteMatrix.load(_read(args.matrix), cfg.ring)
    N = cfg.order
    W = None if cfg.work_bound is None else int(cfg.work_bound * (N + ell.bandwidth() + 1))
    cf = canonical_form(ell, N, W)
    inside = [(i, j) for i, j in cf.pivots if j <= N]
    return {"window": N, "work_bound": cf.work_bound, "pivots": inside,
            "kernel_columns": cf.kernel_columns()}


def cmd_verify(args, cfg):
    from .suites import run_suite

    rep = run_suite(args.suite, cfg.seed, work_bound=cfg.work_bound)
    checks = [{"name": c.name, "passed": c.passed, "instances": c.instances,
               **({"witness": _plain(c.witness)} if not c.passed else {})} for c in rep.checks]
    return {"suite": rep.suite, "seed": rep.seed, "passed": rep.passed, "checks": checks}


COMMANDS = {
    "lift-arc": cmd_lift_arc,
    "classify": cmd_classify,
    "trivialize": cmd_trivialize,
    "ode": cmd_ode,
    "tougeron": cmd_tougeron,
    "wavrik": cmd_wavrik,
    "invert-germ": cmd_invert_germ,
    "drinfeld": cmd_drinfeld,
    "canonical-form": cmd_canonical_form,
    "verify": cmd_verify,
}


def build_parser():
    common = _ArgParser(add_help=False)
    common.add_argument("--order", type=int, default=10, help="target validity N")
    common.add_argument("--ring", default=None, help="Q or Q[e]/e^K")
    common.add_argument("--L", default=None, help="comma-separated grading weights")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--format", choices=["text", "json"], default="text")
    common.add_argument("--work-bound", type=Fraction, default=None,
                        help="multiplier for the elimination working window")
    parser = _ArgParser(prog="powerlin", description="Exact power-series linearization toolkit")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_ArgParser)

    p = sub.add_parser("lift-arc", parents=[common])
    p.add_argument("--poly", action="append", required=True)
    p.add_argument("--jet", required=True)
    p.add_argument("--general", action="store_true")
    p.add_argument("--fiber")
    p.add_argument("--out")

    p = sub.add_parser("classify", parents=[common])
    p.add_argument("--poly", required=True)
    p.add_argument("--jet", required=True)

    p = sub.add_parser("trivialize", parents=[common])
    p.add_argument("--poly", required=True)
    p.add_argument("--arc", required=True)
    p.add_argument("--level", type=int, required=True)
    p.add_argument("--chart", type=int, default=None)

    p = sub.add_parser("ode", parents=[common])
    p.add_argument("--system", required=True)
    p.add_argument("--init", required=True)

    p = sub.add_parser("tougeron", parents=[common])
    p.add_argument("--F", required=True)
    p.add_argument("--rep", required=True)

    p = sub.add_parser("wavrik", parents=[common])
    p.add_argument("--F", required=True)
    p.add_argument("--approx", required=True)
    p.add_argument("--agree", type=int, required=True)

    p = sub.add_parser("invert-germ", parents=[common])
    p.add_argument("--f", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--lambda", dest="lam", required=True, help="rows separated by ';'")

    p = sub.add_parser("drinfeld", parents=[common])
    p.add_argument("--f", required=True)
    p.add_argument("--gamma0", required=True)
    p.add_argument("--q")
    p.add_argument("--xbar")
    p.add_argument("--ybar")
    p.add_argument("--r", type=int, default=2)
    p.add_argument("--free")
    p.add_argument("--base-point", action="store_true")

    p = sub.add_parser("canonical-form", parents=[common])
    p.add_argument("--matrix", required=True)

    p = sub.add_parser("verify", parents=[common])
    p.add_argument("suite")
    return parser


def _config(args):
    L = [Fraction(w) for w in args.L.split(",")] if args.L else [1]
    ring = parse_ring(args.ring) if args.ring else QQ
    return RunConfig(args.command, args.order, ring, L, args.seed, args.format, args.work_bound)


def _format_hint(argv):
    # errors raised while parsing still honor --format json
    for i, a in enumerate(argv):
        if a == "--format=json" or (a == "--format" and argv[i + 1:i + 2] == ["json"]):
            return "json"
    return "text"


def run(argv, out=None):
    """Execute one invocation; returns the exit code."""
    out = out or sys.stdout
    fmt = _format_hint(argv)
    try:
        args = build_parser().parse_args(argv)
        cfg = _config(args)
        fmt = cfg.format
        report = {"command": cfg.subcommand, "status": "ok"}
        report.update(COMMANDS[cfg.subcommand](args, cfg))
        code = 0
        if cfg.subcommand == "verify" and not report["passed"]:
            report["status"] = "failed"
            code = 1
    except PowerlinError as exc:
        code = 2 if exc.code in OBSTRUCTION_CODES else 3
        report = {"status": exc.code, "message": exc.message}
        if exc.witness is not None:
            report["witness"] = exc.witness
    except (UsageError, ValueError, OSError, ZeroDivisionError, KeyError) as exc:
        code = 3
        report = {"status": "PARSE_ERROR", "message": str(exc)}
    plain = _plain(report)
    if fmt == "json":
        out.write(json.dumps(plain, sort_keys=True, indent=2) + "\n")
    else:
        out.write(_render_text(plain))
    return code


def main():
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
