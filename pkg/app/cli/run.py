"""Command-line entry point: ``python -m app.cli.run <command> ...``.

Exit status 0 when every invoked check passes, 1 on a numerical failure (error
JSON on stderr and in ``error.json``), 2 on usage errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Callable, Optional, Sequence

import pandas as pd
from dotenv import load_dotenv
from pydantic import ValidationError

from app.schemas.config import (
    Command,
    HarnessSettings,
    IterationMethod,
    LinearSolver,
    RunConfig,
    SolverOptions,
)
from app.schemas.domain import DomainSpec, load_domain
from app.services.errors import AnalysisError, InvalidInputError
from app.services.exitwalk import compare_torsion, write_estimates_csv, wos_exit_time
from app.services.export import resolve_output_dir, write_frame, write_json, write_run_metadata
from app.services.field import write_field_csv
from app.services.geometry import scale_domain
from app.services.inequalities import SUITES, run_suite, write_aggregate
from app.services.phase import EnergySystem, phase_portrait, write_level_sets
from app.services.radial import calibrate, radial_c_p, shoot_ball, solve_slab
from app.services.solver import solve_domain

load_dotenv()

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1

_PHASE_SYSTEMS = {"slab": EnergySystem.SLAB, "ball_critical": EnergySystem.BALL_CRITICAL}


def _float_list(text: str) -> list[float]:
    try:
        return [float(item) for item in text.split(",") if item.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got '{text}'") from exc


def _point(text: str) -> list[float]:
    values = _float_list(text)
    if len(values) < 2:
        raise argparse.ArgumentTypeError(f"a point needs at least two coordinates, got '{text}'")
    return values


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--out", type=Path, default=None, help="output directory (default: $OUTPUT_DIR or reports/)")
    parser.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])


def _add_solver(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--h", type=float, default=1.0 / 64.0, help="grid spacing")
    parser.add_argument("--tol", type=float, default=1e-8, help="relative change of Phi_p at convergence")
    parser.add_argument("--max-iter", type=int, default=5000)
    parser.add_argument("--seed", type=int, default=None, help="random positive start instead of the torsion seed")
    parser.add_argument("--method", choices=[m.value for m in IterationMethod], default=IterationMethod.FIXED_POINT.value)
    parser.add_argument("--linear-solver", choices=[s.value for s in LinearSolver], default=LinearSolver.CG.value)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="python -m app.cli.run", description="p-torsional rigidity toolkit")
    commands = parser.add_subparsers(dest="command", required=True)

    solve = commands.add_parser("solve", help="grid C_p / R_p of a planar domain")
    solve.add_argument("--domain", type=Path, required=True, help="JSON domain file")
    solve.add_argument("--p", type=float, required=True)
    _add_solver(solve)
    _add_common(solve)

    radial = commands.add_parser("radial", help="slab or ball profile by shooting")
    radial.add_argument("--system", choices=["ball", "slab"], required=True)
    radial.add_argument("--n", type=int, default=2, help="dimension of the ball")
    radial.add_argument("--p", type=float, required=True)
    radial.add_argument("--lam", type=float, default=1.0, help="slab multiplier, or calibration target of a ball")
    radial.add_argument("--calibrate", action="store_true", help="rescale a ball profile to --lam")
    _add_common(radial)

    phase = commands.add_parser("phase", help="energy level sets in the (u, u') plane")
    phase.add_argument("--system", choices=sorted(_PHASE_SYSTEMS), required=True)
    phase.add_argument("--p", type=float, default=None)
    phase.add_argument("--n", type=int, default=None)
    phase.add_argument("--lam", type=float, default=1.0)
    phase.add_argument("--variant", choices=["conserved", "printed"], default="conserved")
    phase.add_argument("--levels", type=_float_list, required=True, help="comma-separated energy levels")
    phase.add_argument("--emit-svg", action="store_true")
    _add_common(phase)

    verify = commands.add_parser("verify", help="run a verification suite")
    verify.add_argument("--suite", choices=["all", *SUITES], default="all")
    verify.add_argument("--h", type=float, default=1.0 / 64.0)
    verify.add_argument("--tol", type=float, default=1e-8)
    verify.add_argument("--linear-solver", choices=[s.value for s in LinearSolver], default=LinearSolver.CG.value)
    verify.add_argument("--seed", type=int, default=20240601)
    verify.add_argument("--paths", type=int, default=100_000)
    verify.add_argument("--workers", type=int, default=1)
    _add_common(verify)

    walk = commands.add_parser("exitwalk", help="walk-on-spheres exit times")
    walk.add_argument("--domain", type=Path, required=True)
    walk.add_argument("--point", type=_point, action="append", required=True, help="x,y (repeatable)")
    walk.add_argument("--paths", type=int, default=100_000)
    walk.add_argument("--eps", type=float, default=None)
    walk.add_argument("--seed", type=int, default=0)
    walk.add_argument("--workers", type=int, default=1)
    walk.add_argument("--compare", action="store_true", help="check against the grid torsion function")
    walk.add_argument("--h", type=float, default=1.0 / 64.0)
    _add_common(walk)

    sweep = commands.add_parser("sweep", help="C_p over p values and scale factors")
    sweep.add_argument("--domain", type=Path, required=True)
    sweep.add_argument("--p-list", type=_float_list, required=True)
    sweep.add_argument("--r-list", type=_float_list, default=[1.0])
    _add_solver(sweep)
    _add_common(sweep)

    serve = commands.add_parser("serve", help="start the HTTP API")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    serve.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    """Strict RunConfig from a parsed namespace; raises ValidationError on bad values."""

    values = {key: value for key, value in vars(args).items() if value is not None}
    solver_fields = {
        "tol": values.get("tol"),
        "max_iter": values.get("max_iter"),
        "seed": values.get("seed") if args.command in ("solve", "sweep") else None,
        "method": values.get("method"),
        "linear_solver": values.get("linear_solver"),
    }
    solver = SolverOptions(**{key: value for key, value in solver_fields.items() if value is not None})
    payload = {
        "command": args.command,
        "domain_path": values.get("domain"),
        "p": values.get("p"),
        "p_list": values.get("p_list", []),
        "r_list": values.get("r_list", []),
        "h": values.get("h", 1.0 / 64.0),
        "solver": solver,
        "seed": values.get("seed", 0),
        "out_dir": values.get("out"),
        "emit_svg": bool(values.get("emit_svg", False)),
        "workers": values.get("workers", 1),
        "log_level": values.get("log_level", "INFO"),
        "system": values.get("system"),
        "n": values.get("n"),
        "lam": values.get("lam", 1.0),
        "levels": values.get("levels", []),
        "variant": values.get("variant", "conserved"),
        "suite": values.get("suite", "all"),
        "points": values.get("point", []),
        "paths": values.get("paths", 100_000),
        "eps": values.get("eps"),
        "calibrate": values.get("calibrate", False),
        "compare": values.get("compare", False),
        "host": values.get("host", "127.0.0.1"),
        "port": values.get("port", 8000),
    }
    return RunConfig(**payload)


def _domain(config: RunConfig) -> DomainSpec:
    if config.domain_path is None:
        raise InvalidInputError(f"'{config.command.value}' needs --domain")
    return load_domain(config.domain_path)


def _run_solve(config: RunConfig, out_dir: Path) -> bool:
    domain = _domain(config)
    if config.p is None:
        raise InvalidInputError("solve needs --p")
    result = solve_domain(domain, config.p, config.h, config.solver)
    write_json(out_dir / "solve.json", result.to_report())
    write_field_csv(result.u, out_dir / "field.csv")
    print(
        f"solve {domain.kind} p={config.p:g} h={config.h:g}: C_p={result.c_p:.10g} "
        f"R_p={result.r_p:.10g} residual={result.pde_residual:.2e} iterations={result.iterations}"
    )
    return True


def _run_radial(config: RunConfig, out_dir: Path) -> bool:
    if config.p is None:
        raise InvalidInputError("radial needs --p")
    if config.system == "slab":
        profile = solve_slab(config.p, config.lam)
    else:
        profile = shoot_ball(config.n or 2, config.p)
        if config.calibrate:
            profile = calibrate(profile, config.lam)
    write_json(out_dir / "radial.json", profile.to_report())
    write_frame(out_dir / "radial.csv", profile.to_frame(), [f"system={profile.system}", f"n={profile.n}"])
    print(
        f"radial {profile.system} n={profile.n} p={profile.p:g}: lambda={profile.lam:.12g} "
        f"C_p={radial_c_p(profile):.12g} u_max={profile.u_max:.12g}"
    )
    return True


def _run_phase(config: RunConfig, out_dir: Path) -> bool:
    system = _PHASE_SYSTEMS.get(config.system or "")
    if system is None:
        raise InvalidInputError(f"unknown phase system '{config.system}'")
    parameters: dict = {"lam": config.lam}
    if system is EnergySystem.SLAB:
        parameters["p"] = config.p
    else:
        parameters.update({"n": config.n, "variant": config.variant})
    data = phase_portrait(system, parameters, config.levels)
    manifest = write_level_sets(data, out_dir, emit_svg=config.emit_svg)
    print(
        f"phase {system.value}: {len(manifest.curve_files)} levels, "
        f"{sum(manifest.point_counts)} points, max level error {manifest.max_level_error:.2e}"
    )
    return True


def _run_verify(config: RunConfig, out_dir: Path) -> bool:
    settings = HarnessSettings(
        h=config.h,
        solver=config.solver,
        seed=config.seed,
        paths=config.paths,
        workers=config.workers,
    )
    report = run_suite(config.suite, settings)
    write_aggregate(report, out_dir)
    for check in report.checks:
        print(check.summary_line())
    print(f"suite {report.suite}: {report.counts}")
    return report.all_passed


def _run_exitwalk(config: RunConfig, out_dir: Path) -> bool:
    domain = _domain(config)
    if config.compare:
        check = compare_torsion(
            domain, config.points, config.paths, seed=config.seed, h=config.h, options=config.solver, workers=config.workers
        )
        write_json(out_dir / "exitwalk_check.json", check)
        print(check.summary_line())
        return check.passed
    estimates = [
        wos_exit_time(domain, point, config.paths, eps=config.eps, seed=config.seed + index, workers=config.workers)
        for index, point in enumerate(config.points)
    ]
    write_estimates_csv(estimates, out_dir / "exitwalk.csv")
    write_json(out_dir / "exitwalk.json", [estimate.to_report().model_dump(mode="json") for estimate in estimates])
    for estimate in estimates:
        print(f"exitwalk {list(estimate.point)}: mean={estimate.mean:.6g} +- {estimate.std_error:.2g}")
    return True


def _run_sweep(config: RunConfig, out_dir: Path) -> bool:
    domain = _domain(config)
    if not config.p_list:
        raise InvalidInputError("sweep needs --p-list")
    rows = []
    for r in config.r_list or [1.0]:
        scaled = domain if r == 1.0 else scale_domain(domain, r)
        for p in config.p_list:
            result = solve_domain(scaled, p, config.h * r, config.solver)
            rows.append(
                {
                    "r": r,
                    "p": p,
                    "h": config.h * r,
                    "c_p": result.c_p,
                    "r_p": result.r_p,
                    "volume": result.volume,
                    "normalized": result.volume ** (2.0 / p) * result.c_p,
                    "iterations": result.iterations,
                }
            )
            print(f"sweep {domain.kind} r={r:g} p={p:g}: C_p={result.c_p:.10g}")
    write_frame(out_dir / "sweep.csv", pd.DataFrame(rows), [f"domain={domain.kind}"])
    return True


def _run_serve(config: RunConfig, out_dir: Optional[Path]) -> bool:
    import uvicorn

    uvicorn.run("app.main:app", host=config.host, port=config.port)
    return True


_HANDLERS: dict[Command, Callable[[RunConfig, Path], bool]] = {
    Command.SOLVE: _run_solve,
    Command.RADIAL: _run_radial,
    Command.PHASE: _run_phase,
    Command.VERIFY: _run_verify,
    Command.EXITWALK: _run_exitwalk,
    Command.SWEEP: _run_sweep,
}


def run(config: RunConfig) -> int:
    if config.command is Command.SERVE:
        _run_serve(config, None)
        return EXIT_OK

    out_dir = resolve_output_dir(config.out_dir)
    try:
        passed = _HANDLERS[config.command](config, out_dir)
    except AnalysisError as exc:
        payload = exc.to_payload()
        logger.error("%s failed: %s", config.command.value, exc)
        print(json.dumps(payload, ensure_ascii=False), file=sys.stderr)
        write_json(out_dir / "error.json", payload)
        return EXIT_FAILURE
    write_run_metadata(out_dir, config.command.value, {"config": config.model_dump(mode="json")})
    return EXIT_OK if passed else EXIT_FAILURE


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = config_from_args(args)
    except ValidationError as exc:
        parser.error(str(exc))
    logging.basicConfig(
        level=getattr(logging, config.log_level),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
