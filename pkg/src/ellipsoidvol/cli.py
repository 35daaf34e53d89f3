"""Command line interface.

Exit codes: 0 success, 1 bad input or infeasible target, 2 a verification
check failed, 3 numerical non-convergence.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from typing import List, Optional

import numpy as np

from . import inverse, montecarlo, verify
from .quadrature import DEFAULT_SPEC, NonConvergence, QuadratureSpec
from .volumes import Semiaxes, forward

EXIT_OK, EXIT_INPUT, EXIT_CONTRACT, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _floats(text: str, n: Optional[int] = None) -> List[float]:
    try:
        vals = [float(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma separated list of numbers: {text!r}")
    if n is not None and len(vals) != n:
        raise argparse.ArgumentTypeError(f"expected {n} comma separated values, got {len(vals)}")
    return vals


def _triple(text):
    return _floats(text, 3)


def _positive(kind):
    def conv(text):
        v = kind(text)
        if not v > 0:
            raise argparse.ArgumentTypeError(f"must be positive: {text}")
        return v
    return conv


def _num(x):
    if x is None or (isinstance(x, float) and not math.isfinite(x)):
        return None
    return float(x)


def _emit(record: dict, fmt: str, out=None):
    out = out or sys.stdout
    if fmt == "json":
        out.write(json.dumps(record) + "\n")
        return
    if fmt == "csv":
        flat = {}
        for k, v in record.items():
            if isinstance(v, (list, tuple)):
                for i, x in enumerate(v):
                    flat[f"{k}{i + 1}"] = x
            else:
                flat[k] = v
        out.write(",".join(flat) + "\n")
        out.write(",".join("" if v is None else f"{v:.17g}" if isinstance(v, float) else str(v)
                           for v in flat.values()) + "\n")
        return
    for k, v in record.items():
        if isinstance(v, float):
            v = f"{v:.9g}"
        elif isinstance(v, (list, tuple)):
            v = ", ".join(f"{x:.9g}" if isinstance(x, float) else str(x) for x in v)
        out.write(f"{k}: {v}\n")


def _add_format(p):
    p.add_argument("--format", choices=("human", "json", "csv"), default="human")


def _mc_common(p):
    p.add_argument("--samples", type=_positive(int), required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--streams", type=_positive(int), default=1)
    _add_format(p)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ellipsoidvol", description="Intrinsic volumes of 3-D ellipsoids.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("forward", help="intrinsic volumes from semiaxes")
    p.add_argument("--axes", type=_triple, required=True)
    p.add_argument("--rel-tol", type=_positive(float), default=DEFAULT_SPEC.rel_tol)
    _add_format(p)

    p = sub.add_parser("invert", help="semiaxes from intrinsic volumes")
    p.add_argument("--volumes", type=_triple, required=True)
    p.add_argument("--tol", type=_positive(float), default=inverse.InversionSpec().residual_tol)
    p.add_argument("--max-iter", type=_positive(int), default=inverse.InversionSpec().max_iterations)
    p.add_argument("--ball-slack", type=float, default=1e-9,
                   help="relative amount V1 may fall below the ball bound (rounded input)")
    _add_format(p)

    mc = sub.add_parser("mc", help="Monte Carlo estimators").add_subparsers(
        dest="estimator", required=True, parser_class=_Parser)
    p = mc.add_parser("tsirelson")
    p.add_argument("--axes", type=_floats, required=True)
    p.add_argument("--m", type=_positive(int), required=True)
    _mc_common(p)
    p = mc.add_parser("kubota")
    p.add_argument("--axes", type=_triple, required=True)
    p.add_argument("--k", type=int, choices=(1, 2), required=True)
    _mc_common(p)
    p = mc.add_parser("steiner")
    p.add_argument("--axes", type=_triple, required=True)
    p.add_argument("--t", type=_positive(float), required=True)
    _mc_common(p)

    ver = sub.add_parser("verify", help="checks of the uniqueness argument").add_subparsers(
        dest="check", required=True, parser_class=_Parser)
    p = ver.add_parser("identity")
    p.add_argument("--count", type=_positive(int), default=10_000)
    p.add_argument("--seed", type=int, default=0)
    _add_format(p)
    p = ver.add_parser("kernel")
    p.add_argument("--n", type=_positive(int), default=200)
    _add_format(p)
    p = ver.add_parser("lemma1")
    p.add_argument("--C", type=_floats, default=[0.5, 1.0, 8.0])
    p.add_argument("--n-samples", type=int, default=200)
    _add_format(p)
    p = ver.add_parser("lemma2")
    p.add_argument("--lo", type=_positive(float), default=0.2)
    p.add_argument("--hi", type=_positive(float), default=5.0)
    p.add_argument("--count", type=_positive(int), default=1000)
    p.add_argument("--seed", type=int, default=0)
    _add_format(p)

    p = sub.add_parser("trace", help="trace the curve V1 = const, V3 = const")
    p.add_argument("--axes", type=_triple, required=True)
    p.add_argument("--step", type=_positive(float), default=0.01)
    p.add_argument("--max-steps", type=_positive(int), default=100_000)
    p.add_argument("--out", required=True)
    _add_format(p)
    return parser


def _cmd_forward(args):
    w = forward(Semiaxes(*args.axes), QuadratureSpec(rel_tol=args.rel_tol))
    _emit({"v1": w.v1, "v2": w.v2, "v3": w.v3}, args.format)
    return EXIT_OK


def _cmd_invert(args):
    spec = inverse.InversionSpec(residual_tol=args.tol, max_iterations=args.max_iter,
                                 ball_slack=args.ball_slack)
    rep = inverse.invert(args.volumes, spec)
    rec = {
        "axes": None if rep.axes is None else [float(x) for x in rep.axes],
        "residual": [_num(x) for x in rep.residual] if rep.axes is not None else None,
        "iterations": rep.iterations,
        "status": rep.status.value,
    }
    _emit(rec, args.format)
    for v in rep.violations:
        print(f"infeasible: {v}", file=sys.stderr)
    return {inverse.Status.CONVERGED: EXIT_OK,
            inverse.Status.INFEASIBLE: EXIT_INPUT,
            inverse.Status.NO_CONVERGENCE: EXIT_NUMERIC}[rep.status]


def _cmd_mc(args):
    spec = montecarlo.McSpec(args.samples, args.seed, args.streams)
    extra = {}
    if args.estimator == "tsirelson":
        est = montecarlo.mc_tsirelson(args.axes, args.m, spec)
    elif args.estimator == "kubota":
        est = montecarlo.kubota_estimate(args.axes, args.k, spec)
    else:
        chk = montecarlo.steiner_volume_check(args.axes, args.t, spec)
        est, extra = chk.mc, {"polynomial": chk.polynomial}
    _emit({"mean": est.mean, "std_error": est.std_error, "samples": est.samples, **extra}, args.format)
    return EXIT_OK


def _cmd_verify(args):
    check = args.check
    if check == "identity":
        rng = np.random.default_rng(args.seed)
        worst = 0.0
        for _ in range(args.count):
            s, t = np.exp(rng.uniform(math.log(0.01), math.log(100), 2))
            a, b, c = np.exp(rng.uniform(math.log(0.1), math.log(10), 3))
            worst = max(worst, verify.det_identity_eval(s, t, a, b, c).residual)
        anchor = verify.det_identity_eval(1, 2, 3, 2, 1)
        ok = worst <= 1e-12 and abs(anchor.lhs + 9 / 1300) <= 1e-15
        rec = {"max_residual": worst, "anchor_lhs": anchor.lhs, "anchor_rhs": anchor.rhs, "ok": ok}
    elif check == "kernel":
        g = np.geomspace(0.01, 100, args.n)
        k = verify.kernel_sign(g[:, None], g[None, :])
        st = g[:, None] * g[None, :]
        zeros = k == 0
        ok = bool((k <= 0).all() and np.all(st[zeros] == 1.0))
        rec = {"max_value": float(k.max()), "zeros": int(zeros.sum()), "ok": ok,
               "report": "min value <= 0 everywhere, zero locus st=1" if ok else "kernel sign violated"}
    elif check == "lemma1":
        found = {}
        ok = True
        for C in args.C:
            pts = verify.lemma1_critical_points(C, n_samples=args.n_samples)
            found[f"{C:g}"] = pts
            ok &= len(pts) == 1 and abs(pts[0] / C ** (1 / 3) - 1) <= 1e-8
        rec = {"critical_points": {k: [float(x) for x in v] for k, v in found.items()}, "ok": bool(ok)}
    else:
        rep = verify.lemma2_scan(verify.GridSpec(args.lo, args.hi, args.count, args.seed))
        ok = rep.sign != 0
        rec = {"sign": rep.sign, "min_abs_det": rep.min_abs_det, "samples": rep.samples,
               "jacobian_sign": rep.sign * rep.jacobian_sign_factor, "ok": ok}
    if args.format == "human":
        rec = {k: v for k, v in rec.items() if k != "critical_points"} | (
            {f"C={k}": v for k, v in rec.get("critical_points", {}).items()})
    _emit(rec, args.format)
    return EXIT_OK if rec["ok"] else EXIT_CONTRACT


def _cmd_trace(args):
    curve = verify.trace_intersection_curve(Semiaxes(*args.axes), args.step, args.max_steps)
    curve.to_csv(args.out)
    rec = {"points": len(curve.points), "closed": curve.closed, "closure_gap": _num(curve.closure_gap),
           "symmetric_points": len(curve.symmetric_points),
           "v2_monotone_arcs": sum(curve.arc_monotone()), "out": args.out}
    _emit(rec, args.format)
    ok = curve.closed and len(curve.symmetric_points) == 6 and all(curve.arc_monotone())
    return EXIT_OK if ok else EXIT_CONTRACT


COMMANDS = {"forward": _cmd_forward, "invert": _cmd_invert, "mc": _cmd_mc,
            "verify": _cmd_verify, "trace": _cmd_trace}


def run(argv: Optional[List[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INPUT
    except (NonConvergence, verify.CorrectorFailure) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, verify.DegenerateStart) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def main() -> None:
    sys.exit(run())
