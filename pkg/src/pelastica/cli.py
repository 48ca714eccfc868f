"""Command-line entry point: ``pelastica <subcommand> ...``."""

from __future__ import annotations

import argparse
import csv
import io
import sys

import numpy as np

from . import special
from .curves import reflect_planar
from .energy import bending_energy, energy_report, sobolev_distance
from .errors import InputError, NumericalError
from .fileio import (
    atomic_write,
    curve_to_csv,
    curve_to_json,
    json_dumps,
    read_curve,
    read_reports,
    read_spec,
    reports_to_csv,
    write_curve,
    write_svg,
)
from .flatcore import align_first_sigma, build, classify_arrangement, model_boundary, stability_verdict
from .perturbations import (
    angle_perturbation,
    base_report,
    check_condition_C,
    cyclic_shift,
    detect_joints,
    insert_segments_at_joints,
    locate_perturbed_joints,
    make_report,
    rotation_perturbation,
)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERICAL = 3
EXIT_USAGE = 64

SPECIAL_FNS = ("F", "K", "am", "sech", "tanh", "d2sech", "d2tanh")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _add_globals(p: argparse.ArgumentParser, suppress: bool) -> None:
    default = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--quad-tol", type=float, default=default(None), help="quadrature tolerance for the special functions")
    p.add_argument("--grid-step", type=float, default=default(None), help="arclength step of sampled curves")
    p.add_argument("--seed", type=int, default=default(0), help="random seed")
    p.add_argument("--format", choices=("csv", "json"), default=default(None), help="output format where a choice exists")


def _context(args, p: float):
    if args.quad_tol is None:
        return special.PContext(p)
    return special.PContext(p, quad_tol=args.quad_tol)


def _spec_context(args, spec):
    return _context(args, spec.p)


def _emit(obj) -> None:
    sys.stdout.write(json_dumps(obj) + "\n")


def _parse_grid(text: str) -> np.ndarray:
    try:
        a, b, n = text.split(":")
        a, b, n = float(a), float(b), int(n)
    except ValueError as exc:
        raise InputError(f"grid must look like a:b:n, got {text!r}") from exc
    if n < 1:
        raise InputError("grid needs n >= 1")
    return np.linspace(a, b, n)


def _parse_ns(text: str) -> list[int]:
    try:
        ns = [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise InputError(f"--n must be a comma separated list of integers, got {text!r}") from exc
    if not ns or any(n < 1 for n in ns):
        raise InputError("--n values must be positive integers")
    return sorted(set(ns))


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def cmd_special(args) -> int:
    ctx = _context(args, args.p)
    if args.fn == "K":
        xs = np.array([np.nan])
        vals = np.array([ctx.K])
    else:
        if (args.x is None) == (args.grid is None):
            raise InputError("give exactly one of --x or --grid")
        xs = np.array([args.x]) if args.x is not None else _parse_grid(args.grid)
        if args.fn == "F":
            vals = special.p_elliptic_F(ctx, xs)
        elif args.fn == "am":
            vals = special.amplitude(ctx, xs)
        elif args.fn == "sech":
            vals = special.sech_p(ctx, xs)
        elif args.fn == "tanh":
            vals = special.tanh_p(ctx, xs)
        elif args.fn == "d2sech":
            vals = special.derivative_identities(ctx, xs).d2_sech_pow
        else:
            vals = special.derivative_identities(ctx, xs).d2_tanh
    vals = np.atleast_1d(vals)
    if (args.format or "csv") == "json":
        rows = [{"x": None if np.isnan(x) else float(x), "value": float(v)} for x, v in zip(xs, vals)]
        _emit({"p": ctx.p, "fn": args.fn, "values": rows})
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "value"])
        for x, v in zip(xs, vals):
            w.writerow(["" if np.isnan(x) else repr(float(x)), repr(float(v))])
        sys.stdout.write(buf.getvalue())
    return EXIT_OK


def cmd_build(args) -> int:
    spec = read_spec(args.spec)
    c = build(spec, _spec_context(args, spec), grid_step=args.grid_step)
    if args.out:
        if args.format == "csv":
            atomic_write(args.out, curve_to_csv(c))
        elif args.format == "json":
            atomic_write(args.out, curve_to_json(c))
        else:
            write_curve(c, args.out)
    if args.svg:
        write_svg(c, args.svg)
    _emit({"length": c.length, "samples": c.n, "bending": bending_energy(c, spec.p)})
    return EXIT_OK


def cmd_classify(args) -> int:
    spec = read_spec(args.spec)
    d = spec.d if args.dim is None else args.dim
    cls = classify_arrangement(spec)
    out = {"arrangement": cls.kind, "verdict": stability_verdict(spec, d)}
    if cls.violating_indices:
        out["violating_indices"] = list(cls.violating_indices)
    _emit(out)
    return EXIT_OK


def cmd_energy(args) -> int:
    c = read_curve(args.infile)
    rep = energy_report(c, args.p)
    _emit({"bending": rep.bending, "length": rep.length})
    return EXIT_OK


def cmd_dist(args) -> int:
    a = read_curve(args.a)
    b = read_curve(args.b)
    _emit({"w2p_dist": sobolev_distance(a, b, args.p)})
    return EXIT_OK


def perturbation_reports(spec, family: str, ns, ctx, grid_step=None, amplitude: float = 1.0, seed: int = 0):
    """Base row followed by one report per ``n`` for the chosen family."""
    if family == "rotate":
        work = align_first_sigma(spec) if spec.d >= 3 else spec
        base = build(work, ctx, grid_step=grid_step)
        reps = [base_report(base, spec.p)]
        for n in ns:
            reps.append(rotation_perturbation(base, work, n, ctx)[1])
        return reps
    if family == "shift":
        base = build(spec, ctx, grid_step=grid_step)
        reps = [base_report(base, spec.p)]
        for n in ns:
            reps.append(cyclic_shift(base, 1.0 / n, spec.p, n)[1])
        return reps
    if family == "insert":
        # perturb the planar curve with angle amplitude amplitude/n, glue at the moved joints
        # and compare with the glued base curve
        base = reflect_planar(build(spec, ctx, grid_step=grid_step))
        joints = detect_joints(base, spec, ctx)
        if joints.M == 0:
            raise InputError("spec has no joints (needs adjacent same-direction loops)")
        glued = insert_segments_at_joints(base, joints)
        reps = [base_report(glued, spec.p)]
        for n in ns:
            pert = angle_perturbation(base, amplitude / n, seed)
            moved = locate_perturbed_joints(pert, joints)
            reps.append(make_report(n, insert_segments_at_joints(pert, moved), glued, spec.p))
        return reps
    raise InputError(f"unknown family {family!r}")


def cmd_perturb(args) -> int:
    spec = read_spec(args.spec)
    ns = _parse_ns(args.n)
    reps = perturbation_reports(spec, args.family, ns, _spec_context(args, spec), args.grid_step, args.amplitude, args.seed)
    text = reports_to_csv(reps)
    if args.out:
        atomic_write(args.out, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_verify_c(args) -> int:
    reps = read_reports(args.report)
    spec = read_spec(args.spec) if args.spec else None
    p = args.p if args.p is not None else (spec.p if spec is not None else None)
    if p is None:
        raise InputError("verify-c needs --p or --spec")
    base_rows = [r for r in reps if r.n == 0]
    if base_rows:
        base = base_rows[0].bending
    elif spec is not None:
        base = bending_energy(build(spec, _spec_context(args, spec), grid_step=args.grid_step), p)
    else:
        raise InputError("report has no n = 0 base row; pass --spec to rebuild the base curve")
    v = check_condition_C(base, reps, variant=args.variant, jump_floor=args.jump_floor, curvature_floor=args.curvature_floor, p=p)
    _emit(v.as_dict())
    return EXIT_OK


def cmd_relax(args) -> int:
    from .optimize import stability_probe

    spec = read_spec(args.spec)
    b = model_boundary(spec, _spec_context(args, spec))
    summary = stability_probe(
        spec,
        b,
        trials=args.trials,
        amplitude=args.amplitude,
        seed=args.seed,
        M=args.M,
        rotation_seed=args.rotation_seed,
        grid_step=args.grid_step,
        quad_tol=args.quad_tol,
    )
    text = json_dumps(summary.as_dict())
    if args.out:
        atomic_write(args.out, text + "\n")
    _emit({"descent_fraction": summary.descent_fraction, "base_energy": summary.base_energy, "floor": summary.floor, "label": summary.label})
    return EXIT_OK


def cmd_figures(args) -> int:
    from .figures import reproduce_figures

    try:
        paths = reproduce_figures(args.out_dir, seed=args.seed, grid_step=args.grid_step, quad_tol=args.quad_tol)
    except OSError as exc:
        raise NumericalError(f"cannot write figures: {exc}") from exc
    _emit({"written": [str(p) for p in paths]})
    return EXIT_OK


# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pelastica", description="Flat-core pinned p-elasticae: construction, classification and perturbation checks.")
    _add_globals(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, metavar="subcommand")
    sub.required = True

    def add(name, fn, help):
        p = sub.add_parser(name, help=help)
        _add_globals(p, suppress=True)
        p.set_defaults(func=fn)
        return p

    p = add("special", cmd_special, "evaluate p-elliptic and p-hyperbolic functions")
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--fn", choices=SPECIAL_FNS, required=True)
    p.add_argument("--x", type=float)
    p.add_argument("--grid", help="a:b:n")

    p = add("build", cmd_build, "sample a flat-core from a spec file")
    p.add_argument("--spec", required=True)
    p.add_argument("--out", help="curve file (.json or .csv)")
    p.add_argument("--svg")

    p = add("classify", cmd_classify, "arrangement class and stability verdict")
    p.add_argument("--spec", required=True)
    p.add_argument("--dim", type=int)

    p = add("energy", cmd_energy, "bending energy and length of a curve file")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--p", type=float, required=True)

    p = add("dist", cmd_dist, "discrete W^{2,p} distance of two curve files")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--p", type=float, required=True)

    p = add("perturb", cmd_perturb, "perturbation sweep report")
    p.add_argument("--spec", required=True)
    p.add_argument("--family", choices=("insert", "rotate", "shift"), required=True)
    p.add_argument("--n", default="8,16,32,64")
    p.add_argument("--amplitude", type=float, default=1.0, help="insert family: angle amplitude is amplitude/n")
    p.add_argument("--out")

    p = add("verify-c", cmd_verify_c, "instability conditions verdict for a report CSV")
    p.add_argument("--report", required=True)
    p.add_argument("--variant", choices=("C", "Cp"), default="C")
    p.add_argument("--p", type=float)
    p.add_argument("--spec")
    p.add_argument("--jump-floor", type=float, default=1e-4)
    p.add_argument("--curvature-floor", type=float, default=1e-4)

    p = add("relax", cmd_relax, "relaxation stability probe")
    p.add_argument("--spec", required=True)
    p.add_argument("--M", type=int, default=256)
    p.add_argument("--trials", type=int, default=32)
    p.add_argument("--amplitude", type=float, default=1e-2)
    p.add_argument("--rotation-seed", type=int, help="d >= 3: start trial 0 from the rotation competitor with this n")
    p.add_argument("--out")

    p = add("figures", cmd_figures, "write figure SVGs and the summary table")
    p.add_argument("--out-dir", default="figures")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except InputError as exc:
        print(f"pelastica {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        print(f"pelastica {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"pelastica {args.command}: I/O error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
