"""Command-line interface.

Exit codes: 0 success, 1 numeric failure, 2 domain or validation failure,
3 file-system failure. Data files carry no timestamps, so identical inputs
give byte-identical outputs.
"""

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import DEFAULTS
from .continuation import build_diagram, continue_branch, emit_diagram, start_branch
from .errors import DomainError, GrazslideError
from .fitting import fit_pipeline
from .io import load_normal_form, load_ode, write_csv, write_json
from .ode_model import PoincareState, grazing_data, leading_order_normal_form, trajectory
from .param_search import closed_family, in_family_domain, solve
from .theorem import CYCLE_CSV_HEADER, enumerate_attractors, verify
from .words import pairing_alpha

EXIT_OK, EXIT_NUMERIC, EXIT_DOMAIN, EXIT_IO = 0, 1, 2, 3
TOOL = f"grazslide {__version__}"


def _config(args):
    """Defaults with ``--set key=value`` overrides applied."""
    changes = {}
    for item in getattr(args, "set", None) or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise DomainError(f"--set expects key=value, got {item!r}")
        try:
            kind = type(getattr(DEFAULTS, key))
        except AttributeError:
            raise DomainError(f"unknown config key {key!r}") from None
        try:
            changes[key] = kind(float(value)) if kind is int else kind(value)
        except ValueError:
            raise DomainError(f"bad value for {key}: {value!r}") from None
    try:
        return DEFAULTS.override(**changes)
    except (KeyError, ValueError) as exc:
        raise DomainError(str(exc)) from None


def _triple(text):
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected three comma-separated numbers, got {text!r}") from None
    if len(vals) != 3:
        raise argparse.ArgumentTypeError(f"expected three comma-separated numbers, got {text!r}")
    return vals


def _alpha(x, y, alpha):
    if alpha is not None:
        return alpha
    a = pairing_alpha(x, y)
    if a is None:
        raise DomainError(f"words {x}, {y} are not paired; pass --alpha explicitly")
    return a


def cmd_family(args):
    p = closed_family(args.sigma_l, args.sigma_r)
    inside = in_family_domain(args.sigma_l, args.sigma_r)
    write_json({"params": p.to_dict(), "in_domain": inside}, None)
    if args.out and inside:
        write_json(p.to_dict(), args.out)
    if not inside:
        print(f"(sigma_L, sigma_R) = ({args.sigma_l}, {args.sigma_r}) is outside the family's domain",
              file=sys.stderr)
        return EXIT_DOMAIN
    return EXIT_OK


def cmd_solve(args):
    cfg = _config(args)
    alpha = _alpha(args.word_x, args.word_y, args.alpha)
    r = solve(args.word_x, args.word_y, alpha, args.sigma_l, args.sigma_r, args.guess, cfg,
              radius=args.radius)
    write_json(r.params.to_dict(), args.out)
    summary = {"iterations": r.iterations, "residual_norm": r.residual_norm,
               "jacobian_cond": r.jacobian_cond, "verified": r.verified}
    if args.report:
        write_json(summary, args.report)
    return EXIT_OK


def cmd_verify(args):
    cfg = _config(args)
    p = load_normal_form(args.params)
    report = verify(p, args.word_x, args.word_y, tol=args.tol, cfg=cfg)
    out = report.to_dict()
    table = enumerate_attractors(p, args.word_x, args.word_y, args.k_max, cfg.sigma_tol if args.tol is None
                                 else args.tol)
    out["attractors"] = [
        {"k": r.k, "kind": r.kind, "word": r.word, "admissible": r.admissible, "stability": r.stability}
        for r in table.rows
    ]
    out["k_min_estimate"] = table.k_min
    out["tool"] = TOOL
    write_json(out, args.out)
    if not report.overall:
        print(f"verification failed: conditions {', '.join(report.failed())}", file=sys.stderr)
        return EXIT_DOMAIN
    return EXIT_OK


def cmd_phase(args):
    cfg = _config(args)
    p = load_normal_form(args.params)
    table = enumerate_attractors(p, args.word_x, args.word_y, args.k_max, cfg.sigma_tol)
    write_csv(args.out, CYCLE_CSV_HEADER, table.csv_rows())
    return EXIT_OK


def cmd_fit_ode(args):
    p = load_normal_form(args.params)
    report = fit_pipeline(p)
    ode = report.ode if args.gamma is None else report.ode.with_gamma(args.gamma)
    write_json(ode.to_dict(), args.out)
    if args.report:
        d = report.to_dict()
        d["tool"] = TOOL
        write_json(d, args.report)
    return EXIT_OK


def _grazing_summary(p):
    gd = grazing_data(p)
    lo = leading_order_normal_form(p)
    return {
        "gamma_graz": gd.gamma_graz,
        "t_graz": gd.t_graz,
        "X_graz": list(gd.X_graz),
        "Z_graz": gd.Z_graz,
        "A_L": lo.A_L,
        "A_R": lo.A_R,
        "b": lo.b,
        "det_O_L": lo.det_O_L,
        "rho_b": lo.rho_b,
        "conjugate_to_normal_form": lo.conjugate_to_normal_form,
    }


def cmd_graze(args):
    cfg = _config(args)
    p = load_ode(args.ode)
    write_json(_grazing_summary(p), args.out)
    if args.trajectory:
        gd = grazing_data(p)
        q = p.with_gamma(gd.gamma_graz + args.offset)
        rows = trajectory(q, PoincareState(0.0, gd.t_graz, gd.Z_graz), args.segments, cfg)
        write_csv(args.trajectory, ["t", "X", "Y", "Z", "regime"], rows)
    return EXIT_OK


def cmd_continue(args):
    cfg = _config(args)
    p = load_ode(args.ode)
    gg = grazing_data(p).gamma_graz
    if args.gamma_max <= gg:
        raise DomainError(f"--gamma-max {args.gamma_max} must exceed gamma_graz = {gg}")
    g0 = max(args.gamma_min, gg + cfg.start_offset)
    start = start_branch(p, args.word, g0, cfg)
    branch = continue_branch(p, start, (g0, args.gamma_max), args.step, args.word, cfg)
    emit_diagram([branch], args.out, gg, cfg.diag_scale)
    print(f"{branch.label}: {len(branch.points)} points up to gamma - gamma_graz = "
          f"{branch.gamma_end - gg:.6g} ({branch.termination})", file=sys.stderr)
    return EXIT_OK


def _write_diagram(p, out_dir, gamma_max, step, k_max, cfg):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    d = build_diagram(p, gamma_max, step, k_max, cfg=cfg)
    for br in d.branches:
        emit_diagram([br], out / f"branch_{br.label}.csv", d.gamma_graz, cfg.diag_scale)
    n = emit_diagram(d.branches, out / "diagram.csv", d.gamma_graz, cfg.diag_scale)
    folds = [{"pair": list(k), "verdict": f.verdict, "gamma_k": f.gamma_k,
              "gamma_k_minus_gamma_graz": f.gamma_k - d.gamma_graz, "bracket": f.bracket,
              "certificate": f.certificate, "separation": f.separation, "reason": f.reason}
             for k, f in d.folds.items()]
    summary = {"tool": TOOL, "gamma_graz": d.gamma_graz, "rows": n, "folds": folds,
               "branches": [{"label": b.label, "word": b.word, "points": len(b.points),
                             "termination": b.termination, "error": b.error} for b in d.branches]}
    write_json(summary, out / "folds.json")
    return d


def cmd_diagram(args):
    cfg = _config(args)
    p = load_ode(args.ode)
    d = _write_diagram(p, args.out_dir, args.gamma_max, args.step, args.k_max, cfg)
    for (a, b), f in d.folds.items():
        print(f"{a}/{b}: {f.verdict} {f.gamma_k - d.gamma_graz:.6g}", file=sys.stderr)
    return EXIT_OK


PIPELINE_STAGES = ("family", "verify", "fit", "graze", "diagram")


def cmd_pipeline(args):
    out = Path(args.out_dir)
    if args.dry_run:
        plan = [
            f"family: closed-form normal form at (sigma_L, sigma_R) = ({args.sigma_l}, {args.sigma_r})"
            f" -> {out / 'normal_form.json'}",
            f"verify: conditions for X = RLR, Y = LR -> {out / 'verify.json'}",
            f"fit: ODE coefficients -> {out / 'ode.json'}, {out / 'fit.json'}",
            f"graze: grazing data and leading-order map -> {out / 'grazing.json'}",
            f"diagram: branches up to gamma_graz + {args.gamma_max}, step {args.step}, "
            f"k <= {args.k_max} -> {out / 'diagram'}/",
        ]
        print("\n".join(plan))
        return EXIT_OK
    cfg = _config(args)
    out.mkdir(parents=True, exist_ok=True)
    stage = "family"
    try:
        if not in_family_domain(args.sigma_l, args.sigma_r):
            raise DomainError(f"({args.sigma_l}, {args.sigma_r}) is outside the family's domain")
        p = closed_family(args.sigma_l, args.sigma_r)
        write_json(p.to_dict(), out / "normal_form.json")
        stage = "verify"
        report = verify(p, "RLR", "LR", cfg=cfg)
        write_json(report.to_dict(), out / "verify.json")
        if not report.overall:
            raise DomainError(f"conditions {', '.join(report.failed())} fail")
        stage = "fit"
        fit = fit_pipeline(p)
        write_json(fit.ode.to_dict(), out / "ode.json")
        write_json(fit.to_dict(), out / "fit.json")
        stage = "graze"
        write_json(_grazing_summary(fit.ode), out / "grazing.json")
        stage = "diagram"
        _write_diagram(fit.ode, out / "diagram", args.gamma_max, args.step, args.k_max, cfg)
    except GrazslideError as exc:
        print(f"pipeline stopped at stage '{stage}': {exc}", file=sys.stderr)
        return exc.exit_code
    return EXIT_OK


def _add_config(sp):
    sp.add_argument("--set", action="append", metavar="KEY=VALUE",
                    help="override a numeric default (e.g. orbit_tol=1e-11)")


def build_parser():
    ap = argparse.ArgumentParser(prog="grazslide", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=TOOL)
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("family", help="closed-form parameters for X = RLR, Y = LR")
    sp.add_argument("--sigma-l", type=float, required=True)
    sp.add_argument("--sigma-r", type=float, required=True)
    sp.add_argument("--out", help="write the flat parameter JSON here")
    sp.set_defaults(func=cmd_family)

    sp = sub.add_parser("solve", help="Newton synthesis of normal-form parameters")
    sp.add_argument("--word-x", required=True)
    sp.add_argument("--word-y", required=True)
    sp.add_argument("--alpha", type=int, help="pairing index (default: from the words)")
    sp.add_argument("--sigma-l", type=float, required=True)
    sp.add_argument("--sigma-r", type=float, required=True)
    sp.add_argument("--guess", type=_triple, required=True, metavar="TAU_L,TAU_R,DELTA_L")
    sp.add_argument("--radius", type=float, help="half-width of the multi-start box")
    sp.add_argument("--out", help="parameter JSON (default: stdout)")
    sp.add_argument("--report", help="solver summary JSON")
    _add_config(sp)
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("verify", help="check the infinitely-many-attractors conditions")
    sp.add_argument("--params", required=True)
    sp.add_argument("--word-x", required=True)
    sp.add_argument("--word-y", required=True)
    sp.add_argument("--tol", type=float, help="equality and on-Sigma tolerance")
    sp.add_argument("--k-max", type=int, default=DEFAULTS.k_max)
    sp.add_argument("--out", help="report JSON (default: stdout)")
    _add_config(sp)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("phase", help="table of X^kY and X^kY^0bar cycle points")
    sp.add_argument("--params", required=True)
    sp.add_argument("--word-x", required=True)
    sp.add_argument("--word-y", required=True)
    sp.add_argument("--k-max", type=int, default=DEFAULTS.k_max)
    sp.add_argument("--out", required=True, help="cycle CSV")
    _add_config(sp)
    sp.set_defaults(func=cmd_phase)

    sp = sub.add_parser("fit-ode", help="ODE coefficients realising a normal form")
    sp.add_argument("--params", required=True)
    sp.add_argument("--gamma", type=float, help="store this forcing amplitude with the result")
    sp.add_argument("--out", help="ODE JSON (default: stdout)")
    sp.add_argument("--report", help="fit report JSON")
    sp.set_defaults(func=cmd_fit_ode)

    sp = sub.add_parser("graze", help="grazing data and the leading-order return map")
    sp.add_argument("--ode", required=True)
    sp.add_argument("--out", help="JSON (default: stdout)")
    sp.add_argument("--trajectory", help="also dump a trajectory CSV from the grazing point")
    sp.add_argument("--offset", type=float, default=1e-3, help="gamma - gamma_graz for the trajectory")
    sp.add_argument("--segments", type=int, default=3, help="sliding segments in the trajectory")
    _add_config(sp)
    sp.set_defaults(func=cmd_graze)

    sp = sub.add_parser("continue", help="continue one periodic orbit in gamma")
    sp.add_argument("--ode", required=True)
    sp.add_argument("--word", required=True)
    sp.add_argument("--gamma-min", type=float, required=True)
    sp.add_argument("--gamma-max", type=float, required=True)
    sp.add_argument("--step", type=float, default=2e-3)
    sp.add_argument("--out", required=True, help="branch CSV")
    _add_config(sp)
    sp.set_defaults(func=cmd_continue)

    for name, helptext in (("diagram", "the standard bifurcation-diagram branch set"),
                           ("pipeline", "family -> verify -> fit -> graze -> diagram")):
        sp = sub.add_parser(name, help=helptext)
        if name == "diagram":
            sp.add_argument("--ode", required=True)
        else:
            sp.add_argument("--sigma-l", type=float, default=0.2)
            sp.add_argument("--sigma-r", type=float, default=1.75)
            sp.add_argument("--dry-run", action="store_true", help="print the stage plan only")
        sp.add_argument("--out-dir", required=True)
        sp.add_argument("--gamma-max", type=float, default=0.04, help="largest gamma - gamma_graz")
        sp.add_argument("--step", type=float, default=2e-3)
        sp.add_argument("--k-max", type=int, default=4)
        _add_config(sp)
        sp.set_defaults(func=cmd_diagram if name == "diagram" else cmd_pipeline)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except GrazslideError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, KeyError, ZeroDivisionError, np.linalg.LinAlgError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
