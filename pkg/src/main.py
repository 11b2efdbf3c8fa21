"""
Main Entry Point for the matrix AKNS hierarchy toolkit

This module wires the command line: scenario runs, symbolic hierarchy and
charge printing, exact soliton and GLM solutions, linear kernels, Burgers
reductions and standalone residual verification.
"""

import json
import logging
import argparse
import sys
from typing import List, Optional

import numpy as np

from src.glm.kernel import read_kernel_csv, sample_kernel, write_kernel_csv
from src.glm.solver import solve_glm
from src.hierarchy.lax import derive_eom, time_component
from src.linearsol.burgers import HeatSolution, cole_hopf_burgers
from src.linearsol.kernels import airy_kernel, discrete_kernel
from src.pipeline.reports import (
    charges_frame,
    field_frame,
    read_field_csv,
    report_json,
    samples_frame,
    write_csv,
)
from src.pipeline.scenarios import find_scenario, list_scenarios, load, parse_grid, run_scenario
from src.riccati.expansion import charge_density, gamma_terms
from src.soliton.config import SolitonConfig, parse_complex, parse_matrix
from src.soliton.fields import SolitonField
from src.utils.config_loader import load_app_config, load_parameter_file
from src.utils.errors import (
    EXIT_CONFIG_ERROR,
    EXIT_OK,
    EXIT_VERIFICATION_FAILED,
    AknsError,
    ConfigError,
    DegenerateDispersion,
    GridMismatch,
    SingularScaling,
)
from src.utils.grid import GridField
from src.verify.conservation import DRIFT_TOLERANCE, conservation_drift
from src.verify.equations import (
    COMPACT_EQUATIONS,
    KERNEL_EQUATIONS,
    EQUATION_FLOWS,
    EquationId,
    EquationSpec,
    pde_residual,
    to_compact,
)
from src.verify.fd import FdScheme

# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)

# Raised while preparing inputs; reported as configuration problems
PRECONDITION_ERRORS = (ConfigError, GridMismatch, DegenerateDispersion, SingularScaling)


def parse_grid_spec(spec: str, option: str = "--grid") -> np.ndarray:
    """Grid from "x_min,x_max,dx"."""
    parts = spec.split(",")
    if len(parts) != 3:
        raise ConfigError(option, f"expected 'x_min,x_max,dx', got '{spec}'")
    try:
        x_min, x_max, dx = (float(p) for p in parts)
    except ValueError:
        raise ConfigError(option, f"expected three numbers, got '{spec}'")
    return parse_grid({"x_min": x_min, "x_max": x_max, "dx": dx}, option)


def parse_time_spec(spec: str, option: str = "--times") -> np.ndarray:
    """Time levels from "t_start,dt,steps"."""
    parts = spec.split(",")
    if len(parts) != 3:
        raise ConfigError(option, f"expected 't_start,dt,steps', got '{spec}'")
    try:
        t_start, dt, steps = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ConfigError(option, f"expected 't_start,dt,steps', got '{spec}'")
    if dt <= 0 or steps < 1:
        raise ConfigError(option, "dt and steps must be positive")
    return t_start + dt * np.arange(steps)


def _emit(path: Optional[str], text: str) -> None:
    if path:
        with open(path, "w") as f:
            f.write(text)
        logger.info(f"Saved to: {path}")
    else:
        print(text, end="" if text.endswith("\n") else "\n")


def _soliton_from_file(path: str, block: str = "soliton") -> SolitonConfig:
    data = load_parameter_file(path)
    if block not in data:
        raise ConfigError(block, f"{path} has no '{block}' block")
    return SolitonConfig.from_dict(data["parameters"], data[block], path=block)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_run(args, app_config) -> int:
    logger.info("\n[Step 1/3] Loading scenario...")
    scenario = load(find_scenario(args.scenario))
    logger.info(f"Scenario loaded: {scenario.name} (target {scenario.target})")

    logger.info("\n[Step 2/3] Running checks...")
    report = run_scenario(scenario, app_config, args.output, args.workers)

    logger.info("\n[Step 3/3] Summary")
    logger.info("=" * 80)
    for check in report["checks"]:
        logger.info(f"  {'PASS' if check['pass'] else 'FAIL'}  {check['name']:<28} {check['value']:.3e}")
    logger.info("=" * 80)
    if not report["pass"]:
        logger.error(f"Verification failed: {', '.join(report['failed'])}")
        return EXIT_VERIFICATION_FAILED
    logger.info(f"ALL {len(report['checks'])} CHECKS PASSED")
    return EXIT_OK


def cmd_list(args, app_config) -> int:
    for name, description in list_scenarios(args.directory):
        print(f"{name:<24} {description}")
    return EXIT_OK


def cmd_hierarchy(args, app_config) -> int:
    max_depth = app_config["hierarchy_max_depth"]
    if not 0 <= args.n <= max_depth:
        raise ConfigError("--n", f"must be in [0, {max_depth}], got {args.n}")
    component = time_component(args.n, max_depth)
    eom = derive_eom(args.n, max_depth) if args.n >= 1 else None
    if args.format == "json":
        payload = {"n": args.n, "V": component.to_json(), "eom": eom.to_json() if eom else None}
        _emit(args.out, report_json(payload))
    else:
        text = f"V({args.n}) =\n{component.to_text()}\n"
        if eom:
            text += f"\n{eom.to_text()}\n"
        _emit(args.out, text)
    return EXIT_OK


def cmd_charges(args, app_config) -> int:
    if not args.scenario:
        series = gamma_terms(args.kmax, args.variant)
        densities = "\n".join(
            f"rho({k}) = {charge_density(k, args.variant).to_text()}" for k in range(1, args.kmax + 1)
        )
        _emit(args.out, f"{series.to_text()}\n\n{densities}\n")
        return EXIT_OK

    scenario = load(find_scenario(args.scenario))
    if "soliton" not in scenario.blocks or "grid" not in scenario.blocks:
        raise ConfigError("soliton", "charges --scenario needs a scenario with 'soliton' and 'grid' blocks")
    cfg = SolitonConfig.from_dict(scenario.parameters, scenario.block("soliton"))
    x = parse_grid(scenario.block("grid"))
    times = parse_time_spec(args.times) if args.times else np.linspace(0.0, 1.0, 21)
    trajectory = SolitonField(config=cfg, provenance="matrix-solve-L").sample(x, times)
    p = cfg.params
    if cfg.flow in EQUATION_FLOWS.values():
        trajectory = to_compact(trajectory, cfg.flow, p.w1, p.w2, p.what1, p.what2)
    scheme = FdScheme(app_config["default_fd_order"], app_config["default_boundary_policy"])
    tolerance = app_config["tolerances"].get("conservation", DRIFT_TOLERANCE)
    reports = conservation_drift(args.kmax, trajectory, scheme, args.variant, args.workers, tolerance)
    _emit(args.out, report_json({"scenario": scenario.name, "charges": [r.to_dict() for r in reports]}))
    if args.csv:
        write_csv(charges_frame(reports), args.csv)
    drifting = [r.k for r in reports if not r.drift < tolerance]
    if drifting:
        logger.error(f"Verification failed: conservation of I({drifting[0]})")
        return EXIT_VERIFICATION_FAILED
    return EXIT_OK


def cmd_soliton(args, app_config) -> int:
    cfg = _soliton_from_file(args.config)
    x = parse_grid_spec(args.grid)
    times = parse_time_spec(args.times) if args.times else np.array([0.0])
    provenance = args.provenance or ("closed-form-TL" if cfg.xi is not None else "matrix-solve-L")
    field = SolitonField(config=cfg, provenance=provenance).sample(x, times)
    write_csv(field_frame(field), args.out)
    return EXIT_OK


def _glm_inputs(args, x: np.ndarray):
    if args.kernel == "soliton":
        if not args.config:
            raise ConfigError("--config", "the soliton kernel needs a parameter file")
        cfg = _soliton_from_file(args.config, "kernel")
        f, f_hat = sample_kernel(discrete_kernel(cfg.params, cfg.b, cfg.b_hat), x, args.t)
        return f, f_hat, cfg.params.w1, cfg.params.w2
    if args.kernel == "airy":
        w1, w2 = parse_complex(args.w1, "--w1"), parse_complex(args.w2, "--w2")
        linear = airy_kernel(float(np.real(w1)), float(np.real(w2)), args.t if args.t else -1.0, [[1.0]], [[1.0]])
        f, f_hat = sample_kernel(linear, x)
        return f, f_hat, w1, w2
    if not args.path:
        raise ConfigError("--path", "the file kernel needs a CSV path")
    blocks = read_kernel_csv(args.path, x)
    for name in ("f", "f_hat"):
        if name not in blocks:
            raise ConfigError("--path", f"kernel file has no block '{name}'")
    return blocks["f"], blocks["f_hat"], parse_complex(args.w1, "--w1"), parse_complex(args.w2, "--w2")


def cmd_glm(args, app_config) -> int:
    if args.dx <= 0:
        raise ConfigError("--dx", f"must be positive, got {args.dx}")
    x = parse_grid({"x_min": args.xmin, "x_max": args.xmax, "dx": args.dx}, "--xmax")
    f, f_hat, w1, w2 = _glm_inputs(args, x)
    solution = solve_glm(f, f_hat, w1, w2, app_config["glm_decay_gate"], args.workers)
    write_csv(field_frame(solution.field(args.t or 0.0)), args.out)
    if args.kernels:
        write_kernel_csv(args.kernels, solution.blocks())
    return EXIT_OK


def _verify_source(args, spec: EquationSpec, app_config):
    """Fields (or kernel samples) the equation is checked on."""
    if args.source == "file":
        if not args.path:
            raise ConfigError("--path", "the file source needs a field CSV")
        return read_field_csv(args.path, flow=spec.flow)
    if not args.config:
        raise ConfigError("--config", f"the {args.source} source needs a parameter file")
    x = parse_grid_spec(args.grid)
    times = parse_time_spec(args.times)

    if args.source == "soliton":
        cfg = _soliton_from_file(args.config)
        if spec.eq in KERNEL_EQUATIONS:
            return discrete_kernel(cfg.params, cfg.b, cfg.b_hat).sample(x, x, times)
        field = SolitonField(config=cfg, provenance="matrix-solve-L").sample(x, times)
    else:
        cfg = _soliton_from_file(args.config, "kernel")
        kernel = discrete_kernel(cfg.params, cfg.b, cfg.b_hat)
        gate = app_config["glm_decay_gate"]
        snapshots = []
        for t in times:
            f, f_hat = sample_kernel(kernel, x, t)
            snapshots.append(solve_glm(f, f_hat, cfg.params.w1, cfg.params.w2, gate, args.workers))
        field = GridField(
            x=x, t=times,
            u=np.stack([s.u for s in snapshots]),
            uhat=np.stack([s.uhat for s in snapshots]),
            flow=cfg.flow, label="glm",
        )

    if spec.eq in COMPACT_EQUATIONS:
        p = cfg.params
        field = to_compact(field, EQUATION_FLOWS[spec.eq], p.w1, p.w2, p.what1, p.what2)
    return field


def cmd_verify(args, app_config) -> int:
    eq = EquationId(args.eq)
    params = {}
    if args.config and args.source != "file":
        params = load_parameter_file(args.config)["parameters"]
    w1 = parse_complex(params["w1"], "parameters.w1") if "w1" in params else None
    w2 = parse_complex(params["w2"], "parameters.w2") if "w2" in params else None
    what1 = parse_complex(params.get("what1", 1.0), "parameters.what1")
    what2 = parse_complex(params.get("what2", 1.0), "parameters.what2")
    try:
        spec = EquationSpec(eq=eq, w1=w1, w2=w2, what1=what1, what2=what2, nu=args.nu, n=args.n)
    except ValueError as e:
        raise ConfigError("--eq", str(e))

    samples = _verify_source(args, spec, app_config)
    scheme = FdScheme(args.fd_order or app_config["default_fd_order"], app_config["default_boundary_policy"])
    tolerance = args.tolerance or app_config["tolerances"].get(eq.value)
    verdict = pde_residual(spec, samples, scheme, tolerance)
    _emit(args.out, report_json(verdict.to_dict()))
    if not verdict.passed:
        logger.error(f"Verification failed: {verdict.equation} residual {verdict.residual:.3e}")
        return EXIT_VERIFICATION_FAILED
    return EXIT_OK


def cmd_airy(args, app_config) -> int:
    x = parse_grid_spec(args.grid)
    linear = airy_kernel(args.w1, args.w2, args.t, parse_matrix(json.loads(args.m), "--m"),
                         parse_matrix(json.loads(args.m_hat), "--m-hat"))
    write_csv(samples_frame(x, linear.f(x, np.zeros_like(x)), value_name="f", t=args.t), args.out)
    return EXIT_OK


def cmd_burgers(args, app_config) -> int:
    chi = parse_grid_spec(args.grid)
    tau = parse_time_spec(args.times)
    if args.phi == "gaussian":
        phi = HeatSolution.gaussian(args.nu_hat, args.amplitude, 0.0, args.tau0)
    else:
        phi = HeatSolution.twohump(args.nu_hat, (args.amplitude, args.amplitude / 2), (-2.0, 2.0), args.tau0)
    try:
        solution = cole_hopf_burgers(phi, args.nu_hat, parse_matrix(json.loads(args.b), "--b"))
    except ValueError as e:
        raise ConfigError("--b", str(e))
    write_csv(field_frame(solution.sample(chi, tau)), args.out)
    logger.info(f"Burgers viscosity nu = {solution.viscosity}")
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "list": cmd_list,
    "hierarchy": cmd_hierarchy,
    "charges": cmd_charges,
    "soliton": cmd_soliton,
    "glm": cmd_glm,
    "verify": cmd_verify,
    "airy": cmd_airy,
    "burgers": cmd_burgers,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='akns', description='Matrix AKNS hierarchy toolkit')
    parser.add_argument('--debug', action='store_true', help='Enable debug logging')
    parser.add_argument('--config-file', default='data/config.json', help='Path to application configuration file')
    parser.add_argument('--workers', type=int, default=None, help='Worker threads (capped by AKNS_THREADS)')
    sub = parser.add_subparsers(dest='command', required=True)

    run = sub.add_parser('run', help='Run a scenario file or bundled scenario name')
    run.add_argument('scenario')
    run.add_argument('--output', default=None, help='Output directory (default from config)')

    listing = sub.add_parser('list', help='List bundled scenarios')
    listing.add_argument('--directory', default='data/scenarios')

    hierarchy = sub.add_parser('hierarchy', help='Print V(n) and the derived equations of motion')
    hierarchy.add_argument('--n', type=int, required=True)
    hierarchy.add_argument('--format', choices=['text', 'json'], default='text')
    hierarchy.add_argument('--out', default=None)

    charges = sub.add_parser('charges', help='Riccati terms, or charge drift along a scenario soliton')
    charges.add_argument('--kmax', type=int, default=3)
    charges.add_argument('--variant', choices=['plain', 'hat'], default='plain')
    charges.add_argument('--scenario', default=None)
    charges.add_argument('--times', default=None, help="t_start,dt,steps")
    charges.add_argument('--out', default=None)
    charges.add_argument('--csv', default=None, help='Charge time series CSV')

    soliton = sub.add_parser('soliton', help='Sample an exact soliton')
    soliton.add_argument('--config', required=True, help="JSON with 'parameters' and 'soliton' blocks")
    soliton.add_argument('--grid', required=True, help="x_min,x_max,dx")
    soliton.add_argument('--times', default=None, help="t_start,dt,steps")
    soliton.add_argument('--provenance', choices=['closed-form-TL', 'matrix-solve-L'], default=None)
    soliton.add_argument('--out', required=True)

    glm = sub.add_parser('glm', help='Solve the discretized GLM equations')
    glm.add_argument('--kernel', choices=['soliton', 'airy', 'file'], required=True)
    glm.add_argument('--dx', type=float, required=True)
    glm.add_argument('--xmax', type=float, required=True)
    glm.add_argument('--xmin', type=float, default=0.0)
    glm.add_argument('--t', type=float, default=None)
    glm.add_argument('--config', default=None, help="JSON with 'parameters' and 'kernel' blocks")
    glm.add_argument('--path', default=None, help='Kernel CSV for --kernel file')
    glm.add_argument('--w1', default='1')
    glm.add_argument('--w2', default='-2')
    glm.add_argument('--out', required=True)
    glm.add_argument('--kernels', default=None, help='Also write the A, B, C, D kernels')

    verify = sub.add_parser('verify', help='Residual of one equation')
    verify.add_argument('--eq', choices=[e.value for e in EquationId], required=True)
    verify.add_argument('--source', choices=['soliton', 'glm', 'file'], required=True)
    verify.add_argument('--config', default=None)
    verify.add_argument('--path', default=None, help='Field CSV for --source file')
    verify.add_argument('--grid', default='-15,15,0.005')
    verify.add_argument('--times', default='0,0.005,5')
    verify.add_argument('--nu', type=float, default=None)
    verify.add_argument('--n', type=int, default=None)
    verify.add_argument('--fd-order', type=int, choices=[2, 4], default=None)
    verify.add_argument('--tolerance', type=float, default=None)
    verify.add_argument('--out', default=None)

    airy = sub.add_parser('airy', help='Sample the Airy kernel of the mKdV linear problem')
    airy.add_argument('--grid', required=True)
    airy.add_argument('--w1', type=float, default=1.0)
    airy.add_argument('--w2', type=float, default=-2.0)
    airy.add_argument('--t', type=float, default=-1.0)
    airy.add_argument('--m', default='[[1]]')
    airy.add_argument('--m-hat', default='[[1]]')
    airy.add_argument('--out', required=True)

    burgers = sub.add_parser('burgers', help='Sample a matrix Cole-Hopf Burgers solution')
    burgers.add_argument('--phi', choices=['gaussian', 'twohump'], default='gaussian')
    burgers.add_argument('--nu-hat', type=float, default=0.5)
    burgers.add_argument('--amplitude', type=float, default=1.0)
    burgers.add_argument('--tau0', type=float, default=1.0)
    burgers.add_argument('--b', default='[[1]]')
    burgers.add_argument('--grid', required=True)
    burgers.add_argument('--times', default='0,0.005,5')
    burgers.add_argument('--out', required=True)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, dispatch the subcommand and map failures to exit codes."""
    args = build_parser().parse_args(argv)

    # Set logging level
    if args.debug:
        logging.getLogger().setLevel(logging.DEBUG)
        logger.debug("Debug mode enabled")

    try:
        app_config = load_app_config(args.config_file)
        return COMMANDS[args.command](args, app_config)

    except FileNotFoundError as e:
        logger.error(f"File not found: {e}")
        return EXIT_CONFIG_ERROR

    except json.JSONDecodeError as e:
        logger.error(f"Invalid JSON: {e}")
        return EXIT_CONFIG_ERROR

    except PRECONDITION_ERRORS as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG_ERROR

    except AknsError as e:
        logger.error(f"Verification failed: {type(e).__name__}: {e}")
        return EXIT_VERIFICATION_FAILED

    except Exception as e:
        logger.error(f"An error occurred: {e}", exc_info=True)
        return EXIT_VERIFICATION_FAILED


def cli() -> None:
    sys.exit(main())


if __name__ == "__main__":
    exit(main())
