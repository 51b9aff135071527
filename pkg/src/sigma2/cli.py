"""Command-line entry point: ``sigma2 <verify-example|identities|residual|flow> ...``.

Reports go to standard output (or ``--out``), diagnostics to standard error.
Exit codes: 0 success, 1 a check failed, 2 usage or configuration error
(nothing is written to the report stream in that case).
"""

from __future__ import annotations

import argparse
import math
import os
import sys

from .errors import ChartDomainError, ExprError, SingularInput, Sigma2Error, StalledFlow
from .expr import GV_WARPING, catalog_metric, eval_expr, parse_expr, resolve_metric
from .flow import DEFAULT_ETA, init_grid, flow_run
from .functionals import SIGMA2_COUPLING, el_report
from .identities import SuiteConfig, run_suite
from .report import el_report_dict, write_report
from .sampling import halton_points

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
DEFAULT_SEED = 0
DEFAULT_TOL = 1e-8
ABS_FLOOR = 1e-12
SCALAR_RTOL = 1e-9
CRITICAL_FIELDS = ("grad_Ft_norm", "eq1_norm", "eq2_value", "weitzenbock_residual", "pde_residual")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _seed(text: str) -> int:
    try:
        value = int(text, 10)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from None
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"seed must lie in [0, 2^64), got {value}")
    return value


def _point(text: str) -> tuple:
    parts = text.split(",")
    try:
        values = tuple(float(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"point must be x,y,z, got {text!r}") from None
    if len(values) != 3 or not all(math.isfinite(v) for v in values):
        raise argparse.ArgumentTypeError(f"point must be three finite numbers x,y,z, got {text!r}")
    return values


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def _nonneg_real(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a real number, got {text!r}") from None
    if not (math.isfinite(value) and value >= 0):
        raise argparse.ArgumentTypeError(f"expected a non-negative real, got {text!r}")
    return value


def _real(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a real number, got {text!r}") from None
    if not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"expected a finite real, got {text!r}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sigma2", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, fmt):
        p.add_argument("--seed", type=_seed, default=None, help="RNG seed (default: $SIGMA2_SEED or 0)")
        p.add_argument("--out", default=None, help="write the report here instead of stdout")
        p.add_argument("--format", choices=("json", "csv"), default=fmt)

    p = sub.add_parser("verify-example", help="check the explicit critical example")
    common(p, "json")
    p.add_argument("--samples", type=_positive_int, default=100)
    p.add_argument("--tol", type=_nonneg_real, default=DEFAULT_TOL)

    p = sub.add_parser("identities", help="run the identity and inequality suite")
    common(p, "json")
    p.add_argument("--matrix-trials", type=_positive_int, default=100_000)
    p.add_argument("--chart-trials", type=_positive_int, default=200)

    p = sub.add_parser("residual", help="Euler-Lagrange residuals of a metric")
    common(p, "json")
    p.add_argument("--metric", default="gv_example", help="catalog name or metric spec file")
    p.add_argument("--t", type=_real, default=SIGMA2_COUPLING)
    p.add_argument("--point", type=_point, action="append", default=None)
    p.add_argument("--samples", type=_positive_int, default=20)
    p.add_argument("--tol", type=_nonneg_real, default=DEFAULT_TOL)

    p = sub.add_parser("flow", help="gradient descent of F_t on the 3-torus")
    common(p, "csv")
    p.add_argument("--n", type=_positive_int, default=8)
    p.add_argument("--amplitude", type=_nonneg_real, default=0.01)
    p.add_argument("--t", type=_real, default=SIGMA2_COUPLING)
    p.add_argument("--steps", type=int, default=500)
    p.add_argument("--eta", type=_nonneg_real, default=DEFAULT_ETA)
    p.add_argument("--target-grad", type=_nonneg_real, default=1e-10)
    return parser


def resolve_seed(flag, environ=None) -> int:
    """--seed wins; otherwise SIGMA2_SEED; otherwise the fixed default."""
    if flag is not None:
        return flag
    environ = os.environ if environ is None else environ
    text = environ.get("SIGMA2_SEED")
    if text is None or text == "":
        return DEFAULT_SEED
    try:
        return _seed(text)
    except argparse.ArgumentTypeError as exc:
        raise UsageError(f"SIGMA2_SEED: {exc}") from None


def _within(value: float, scale: float, tol: float) -> bool:
    return abs(value) <= tol * scale + ABS_FLOOR


def _critical(report, tol: float, fields) -> tuple[bool, dict]:
    worst = {}
    ok = True
    for name in fields:
        worst[f"max_{name}"] = max((rec.scaled(name) for _, rec in report.points), default=0.0)
        ok &= all(_within(getattr(rec, name), rec.scales[name], tol) for _, rec in report.points)
    return ok, worst


def cmd_verify_example(args, seed: int):
    if args.format != "json":
        raise UsageError("verify-example reports are json only")
    chart = catalog_metric("gv_example")
    points = halton_points(args.samples, seed)
    report = el_report(chart, points, SIGMA2_COUPLING)
    f = parse_expr(GV_WARPING)
    table = []
    worst_rel = 0.0
    for p, rec in report.points:
        exact = -8.0 / eval_expr(f, p)
        rel = abs(rec.scalar - exact) / abs(exact)
        worst_rel = max(worst_rel, rel)
        table.append({"point": list(p), "R": rec.scalar, "R_exact": exact, "rel_error": rel})
    ok_res, worst = _critical(report, args.tol, CRITICAL_FIELDS)
    ok_scalar = worst_rel <= SCALAR_RTOL
    payload = {
        "command": "verify-example",
        "metric": report.metric_name,
        "t": report.t,
        "seed": seed,
        "samples": args.samples,
        "tolerance": args.tol,
        **worst,
        "scalar_curvature": {"max_rel_error": worst_rel, "tolerance": SCALAR_RTOL, "table": table},
        "summary": report.summary(),
        "pass": ok_res and ok_scalar,
    }
    _print_scalar_table(table)
    return payload, EXIT_OK if payload["pass"] else EXIT_FAIL


def _print_scalar_table(table) -> None:
    err = sys.stderr
    err.write(f"{'x':>10} {'y':>10} {'z':>10} {'R':>22} {'-8/(1+x^2+y^2)':>22} {'rel err':>10}\n")
    for row in table:
        x, y, z = row["point"]
        err.write(f"{x:10.6f} {y:10.6f} {z:10.6f} {row['R']:22.15e} {row['R_exact']:22.15e} {row['rel_error']:10.2e}\n")


def cmd_identities(args, seed: int):
    if args.format != "json":
        raise UsageError("identities reports are json only")
    cfg = SuiteConfig(seed=seed, n_matrix_trials=args.matrix_trials, n_chart_trials=args.chart_trials)
    report = run_suite(cfg)
    for c in report.checks:
        status = "ok" if c.failed == 0 else "FAIL"
        sys.stderr.write(f"{c.name:<22} {status:<4} passed={c.passed} failed={c.failed} skipped={c.skipped} worst={c.worst}\n")
    return report, EXIT_OK if report.overall else EXIT_FAIL


def cmd_residual(args, seed: int):
    if args.format != "json":
        raise UsageError("residual reports are json only")
    chart = resolve_metric(args.metric)
    points = args.point if args.point else halton_points(args.samples, seed)
    report = el_report(chart, points, args.t)
    # the sigma_2 equations only describe criticality at the sigma_2 coupling
    fields = CRITICAL_FIELDS if args.t == SIGMA2_COUPLING else ("grad_Ft_norm",)
    ok, worst = _critical(report, args.tol, fields)
    payload = {"command": "residual", **el_report_dict(report), "tolerance": args.tol, **worst, "critical": ok}
    return payload, EXIT_OK if ok else EXIT_FAIL


def cmd_flow(args, seed: int):
    if args.format != "csv":
        raise UsageError("flow trajectories are csv only")
    if args.steps < 0:
        raise UsageError("--steps must be non-negative")
    if not args.eta > 0:
        raise UsageError("--eta must be positive")
    state = init_grid(args.n, args.amplitude, seed, args.t)
    try:
        state, traj = flow_run(state, args.steps, args.target_grad, eta=args.eta)
    except StalledFlow as exc:
        sys.stderr.write(f"flow stalled: {exc}\n")
        return exc.trajectory, EXIT_FAIL
    sys.stderr.write(
        f"flow finished at step {state.step}: energy {state.snap.energy:.6e}, grad norm {state.snap.grad_norm:.6e}\n"
    )
    return traj, EXIT_OK


COMMANDS = {
    "verify-example": cmd_verify_example,
    "identities": cmd_identities,
    "residual": cmd_residual,
    "flow": cmd_flow,
}


def _emit(data: bytes, out) -> None:
    if out is None:
        sys.stdout.write(data.decode("utf-8"))
        sys.stdout.flush()
    else:
        with open(out, "wb") as fh:
            fh.write(data)


def run_cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        seed = resolve_seed(args.seed)
        report, code = COMMANDS[args.command](args, seed)
        data = write_report(report, args.format)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except UsageError as exc:
        sys.stderr.write(f"{exc}\n")
        return EXIT_USAGE
    except (Sigma2Error, ExprError, ChartDomainError, SingularInput, OSError) as exc:
        sys.stderr.write(f"sigma2: error: {exc}\n")
        return EXIT_USAGE
    try:
        _emit(data, args.out)
    except OSError as exc:
        sys.stderr.write(f"sigma2: error: cannot write report: {exc}\n")
        return EXIT_USAGE
    return code


def main() -> None:
    sys.exit(run_cli())
