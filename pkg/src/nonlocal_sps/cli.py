"""Command-line front end.

    python -m nonlocal_sps layers|approx|solve|compare FILE --eps 1e-4 [--N 512]
    python -m nonlocal_sps check-quadratic FILE [--lambda 1.6]
    python -m nonlocal_sps control PLANT --v0 "t^2" --eps 1e-4
    python -m nonlocal_sps turning FILE --gamma 0.25 --eps-ladder 1e-2,1e-3

Every command computes all of its output in memory first and then writes the
files atomically, so a failing run leaves nothing behind. Exit codes: 0 ok,
2 input error, 3 numerical failure. ``SPS_LOG`` sets the log level.
"""

from __future__ import annotations

import argparse
import io
import json
import logging
import os
import sys
import tempfile
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import approximation as approx_mod
from . import control, layers, quadratic, reference, turning
from . import exprlang as el
from .problem import Problem, ProblemError, ReducedProblemError, load_problem

log = logging.getLogger("nonlocal_sps")

EXIT_INPUT = 2
EXIT_NUMERIC = 3
BASE_COLUMNS = ["t", "eta", "zeta", "zeta_hat", "psi", "v_corr", "y_tilde"]


class InputError(Exception):
    pass


# --------------------------------------------------------------------------- output


def fmt(x: float) -> str:
    return "%.17g" % x


def csv_text(columns: Sequence[str], data: Sequence[np.ndarray]) -> str:
    buf = io.StringIO()
    buf.write(",".join(columns) + "\n")
    for row in zip(*data):
        buf.write(",".join(fmt(float(v)) for v in row) + "\n")
    return buf.getvalue()


def json_text(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def eps_tag(eps: float) -> str:
    return f"eps{eps:g}"


# --------------------------------------------------------------------------- input


def read_json(path: str) -> dict:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise InputError(f"no such file: {path}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(doc, dict):
        raise InputError(f"{path}: expected a JSON object")
    return doc


def parse_ladder(text: str) -> list[float]:
    try:
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise InputError(f"bad epsilon ladder {text!r}") from None
    if not vals or any(v <= 0 for v in vals) or any(b >= a for a, b in zip(vals, vals[1:])):
        raise InputError("epsilon ladder must be positive and strictly decreasing")
    return vals


def epsilons(args: argparse.Namespace, doc: dict) -> list[float]:
    if args.eps_ladder:
        return parse_ladder(args.eps_ladder)
    if args.eps is not None:
        if args.eps <= 0:
            raise InputError("--eps must be positive")
        return [args.eps]
    if "epsilon" in doc:
        return [float(doc["epsilon"])]
    raise InputError("give --eps or --eps-ladder")


def load(args: argparse.Namespace) -> tuple[dict, Problem]:
    doc = read_json(args.file)
    return doc, load_problem(doc, lam=args.lam, delta=args.delta)


# --------------------------------------------------------------------------- commands


def _layer_columns(appr: approx_mod.Approximation, t: np.ndarray) -> list[np.ndarray]:
    fam = appr.layers
    lam = appr.problem.lam
    return [t, appr.path.eta(t), layers.zeta(fam, t), layers.zeta_hat(fam, t),
            layers.psi(fam, lam, t), layers.v_corr(fam, lam, t), appr.y_tilde(t)]


def cmd_layers(args: argparse.Namespace) -> dict[str, str]:
    doc, p = load(args)
    out = {}
    t = np.linspace(p.a, p.b, args.grid)
    for eps in epsilons(args, doc):
        appr = approx_mod.build(p, eps)
        out[f"layers_{eps_tag(eps)}.csv"] = csv_text(BASE_COLUMNS, _layer_columns(appr, t))
    return out


def cmd_approx(args: argparse.Namespace) -> dict[str, str]:
    doc, p = load(args)
    out = {}
    t = np.linspace(p.a, p.b, args.grid)
    eta_g = float(reduced_eta(p, p.gamma))
    ladder = []
    for eps in epsilons(args, doc):
        appr = approx_mod.build(p, eps)
        cols = _layer_columns(appr, t)
        out[f"approx_{eps_tag(eps)}.csv"] = csv_text(BASE_COLUMNS, cols)
        ends = appr.y_tilde(np.array([p.a, p.gamma, p.b]))
        ladder.append({
            "epsilon": eps, "s": appr.layers.s, "C": appr.C, "case_id": appr.case_id,
            "y_tilde_a": float(ends[0]),
            "bc_defect": float(max(abs(ends[0] - ends[1]), abs(ends[1] - ends[2]))),
            "limit_gap": float(abs(ends[0] - eta_g)),
            "max_abs_v_corr": float(np.max(np.abs(cols[5]))),
        })
    out["approx_ladder.json"] = json_text({"ladder": ladder})
    return out


def reduced_eta(p: Problem, t: float) -> float:
    from .problem import reduced_path
    return float(reduced_path(p).eta(np.array([t]))[0])


def _solve_columns(p: Problem, eps: float, N: int, with_err: bool):
    sol = reference.solve_bvp3(p, N, eps)
    appr = approx_mod.build(p, eps)
    cols = _layer_columns(appr, sol.t) + [sol.y, sol.w]
    names = BASE_COLUMNS + ["y_ref", "w_ref"]
    if with_err:
        cols.append(np.abs(sol.y - cols[6]))
        names = names + ["err"]
    return sol, appr, names, cols


def cmd_solve(args: argparse.Namespace) -> dict[str, str]:
    doc, p = load(args)
    out = {}
    for eps in epsilons(args, doc):
        _, _, names, cols = _solve_columns(p, eps, args.N, with_err=False)
        out[f"solve_{eps_tag(eps)}.csv"] = csv_text(names, cols)
    return out


def cmd_compare(args: argparse.Namespace) -> dict[str, str]:
    doc, p = load(args)
    out = {}
    ladder = []
    for eps in epsilons(args, doc):
        sol, appr, names, cols = _solve_columns(p, eps, args.N, with_err=True)
        out[f"compare_{eps_tag(eps)}.csv"] = csv_text(names, cols)
        metrics = reference.compare(sol, appr).as_dict()
        out[f"compare_{eps_tag(eps)}.json"] = json_text(metrics)
        ladder.append({"epsilon": eps, **metrics})
    if len(ladder) > 1:
        ratios = [b["max_err"] / a["max_err"] for a, b in zip(ladder, ladder[1:])]
        out["compare_ladder.json"] = json_text({"ladder": ladder, "error_ratios": ratios})
    return out


def cmd_check_quadratic(args: argparse.Namespace) -> dict[str, str]:
    doc = read_json(args.file)
    try:
        inst = quadratic.from_problem_doc(doc)
    except KeyError as exc:
        raise InputError(f"missing key {exc}") from None
    interval = quadratic.lambda_interval(inst)
    report: dict[str, Any] = {"interval": None if interval is None else list(interval)}
    lam = args.lam if args.lam is not None else doc.get("lambda")
    if lam is not None:
        report["conditions"] = quadratic.check_conditions(inst, float(lam)).as_dict()
    return {"check_quadratic.json": json_text(report)}


def cmd_control(args: argparse.Namespace) -> dict[str, str]:
    doc = read_json(args.file)
    if args.lam is not None:
        doc["lambda"] = args.lam
    if args.delta is not None:
        doc["delta"] = args.delta
    try:
        plant = control.load_plant(doc)
    except KeyError as exc:
        raise InputError(f"missing key {exc}") from None
    v0_src = args.v0 or doc.get("v0")
    if not v0_src:
        raise InputError("give --v0")
    v0 = el.parse(v0_src, ("t",))
    eps = epsilons(args, doc)[0]
    checks = control.check_plant(plant)
    u0, eta0 = control.synthesize_input(plant, v0)
    t = np.linspace(plant.a, plant.b, args.grid)
    v0_vals = el.compile_expr(v0, ("t",))(t)
    bound = control.output_error_bound(plant, v0, eps)
    report = {**bound.as_dict(), "v0": el.to_string(v0),
              "g_monotone": checks.g_monotone, "max_abs_df_sampled": checks.max_abs_df,
              "lipschitz_ok": checks.lipschitz_ok}
    return {"u0.csv": csv_text(["t", "v0", "eta0", "u0"], [t, v0_vals, eta0(t), u0(t)]),
            "control.json": json_text(report)}


def cmd_turning(args: argparse.Namespace) -> dict[str, str]:
    doc = read_json(args.file)
    try:
        f_src = doc["f_tilde"]
        y0 = float(doc["y0"])
    except KeyError as exc:
        raise InputError(f"missing key {exc}") from None
    gamma = args.gamma if args.gamma is not None else float(doc.get("gamma", 0.25))
    b = float(doc.get("b", 2 * gamma))
    eps_list = epsilons(args, doc)
    out: dict[str, str] = {}
    controls = doc.get("controls")
    rows = ("epsilon", "y1", "t_star", "t_star_quadrature", "drift")
    runs = []
    if "u" in el.variables(el.parse(f_src, ("u", "y"))):
        if not controls:
            raise InputError("f_tilde depends on u: give a 'controls' list")
    else:
        f_tilde = el.parse(f_src, ("y",))
        for eps in eps_list:
            ap = turning.AutonomousProblem(f_tilde, y0, None, gamma, b, eps)
            y1, t_star = turning.shoot_bc(ap)
            ap1 = ap.with_slope(y1)
            t_quad = turning.turning_time(ap1)
            run = {"epsilon": eps, "y1": y1, "t_star": t_star, "t_star_quadrature": t_quad,
                   "drift": t_star - gamma / 2}
            if f_tilde == turning.EXP_Y:
                run["t_star_closed_form"] = turning.exp_turning_time(ap1)
            runs.append(run)
            traj = turning.integrate(ap1, gamma)
            out[f"turning_{eps_tag(eps)}.csv"] = csv_text(["t", "y", "yp"],
                                                          [traj.t, traj.y, traj.yp])
        keys = list(rows)
        if f_tilde == turning.EXP_Y:
            keys.append("t_star_closed_form")
        out["turning.csv"] = csv_text(keys, [np.array([r[k] for r in runs]) for k in keys])
    report: dict[str, Any] = {"f_tilde": f_src, "gamma": gamma, "y0": y0, "runs": runs}
    if controls:
        scan = turning.turning_scan(f_src, controls, eps_list, gamma, y0)
        report["scan"] = scan.as_dict()["runs"]
    out["turning.json"] = json_text(report)
    return out


COMMANDS = {
    "layers": cmd_layers, "approx": cmd_approx, "solve": cmd_solve, "compare": cmd_compare,
    "check-quadratic": cmd_check_quadratic, "control": cmd_control, "turning": cmd_turning,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nonlocal_sps",
        description="Boundary-layer approximation of singularly perturbed three-point problems.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("file", help="JSON problem/plant file")
        sp.add_argument("--eps", type=float, help="perturbation parameter")
        sp.add_argument("--eps-ladder", help="comma-separated, strictly decreasing")
        sp.add_argument("--N", type=int, default=512, help="mesh intervals (multiple of 4)")
        sp.add_argument("--grid", type=int, default=201, help="points of the output grid")
        sp.add_argument("--out-dir", default=".", help="output directory")
        sp.add_argument("--lambda", dest="lam", type=float, help="override lambda")
        sp.add_argument("--delta", type=float, help="override tube width delta")
        sp.add_argument("--v0", help="desired output v0(t) (control)")
        sp.add_argument("--gamma", type=float, help="interior point (turning)")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    level = os.environ.get("SPS_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    args = build_parser().parse_args(argv)
    try:
        if args.grid < 2:
            raise InputError("--grid must be at least 2")
        files = COMMANDS[args.command](args)
    except (InputError, ProblemError, el.ExprError, control.PlantError, KeyError,
            TypeError, reference.MeshError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (reference.SolverDivergence, ReducedProblemError, turning.TurningPointError,
            ArithmeticError, ValueError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    out_dir = Path(args.out_dir)
    for name, text in files.items():
        write_atomic(out_dir / name, text)
        log.info("wrote %s", out_dir / name)
    return 0


if __name__ == "__main__":
    sys.exit(main())
