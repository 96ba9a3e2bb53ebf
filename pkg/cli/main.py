import argparse
import sys
from typing import Callable, Dict, List, Optional, Tuple

import pandas as pd

import config
from cli.experiment_config import ExperimentConfig
from closed_form.exp_exp import ExpExpParams, asymptotic_shape
from heavy_tail.envelope import calibrate_heavy_envelope, heavy_table
from heavy_tail.truncated import truncated_diagnostics
from lyapunov_bounds.classify import classify
from lyapunov_bounds.drift import bound_envelope, calibrate_delta, drift_check
from lyapunov_bounds.profile import build_profile, profile_table
from monte_carlo.estimator import curve_frame, decay_exponent_fit, estimate_ruin, ruin_curve
from monte_carlo.gamma_limit import gamma_limit_test, power_growth_test
from monte_carlo.validation import compare_with_closed_form
from stochastic_model.premium_rate import CriticalPower
from utilities.errors import ModelError, NumericalError
from utilities.files.data_loader_client import UniversalDataLoader
from utilities.logger import Logger

logger = Logger.get_logger()

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3

# a command returns a table (CSV) or a text line, plus extra header lines
Result = Tuple[object, List[str]]


def _simulate(cfg: ExperimentConfig, seed: int, threads: Optional[int]) -> Result:
    p = cfg.params
    estimate = estimate_ruin(
        cfg.model, p.x, p.n_paths, caps=p.caps(p.x), seed=seed, threads=threads, exact_ci=p.exact_ci
    )
    return curve_frame([estimate]), []


def _curve(cfg, seed, threads) -> Result:
    p = cfg.params
    curve = ruin_curve(
        cfg.model, p.grid, p.n_paths, caps=p.grid_caps(), seed=seed, threads=threads, exact_ci=p.exact_ci
    )
    return curve_frame(curve), []


def _fit(cfg, seed, threads) -> Result:
    p = cfg.params
    curve = ruin_curve(cfg.model, p.grid, p.n_paths, caps=p.grid_caps(), seed=seed, threads=threads)
    fit = decay_exponent_fit(curve)
    lines = []
    constants = cfg.model.derived_constants()
    if constants.rho is not None:
        lines.append(f"rho={constants.rho:.12g}")
    table = pd.DataFrame(
        [{"rho_hat": fit.rho_hat, "stderr": fit.stderr, "intercept": fit.intercept, "n_points": fit.n_points}]
    )
    return table, lines


def _bounds(cfg, seed, threads) -> Result:
    p = cfg.params
    profile = build_profile(cfg.model)
    report = drift_check(profile, cfg.model, p.grid, p.n_draws, seed=seed, threads=threads)
    if report.x_hat is None:
        raise NumericalError("drift signs never settled on the grid; widen the grid or add draws")
    profile = report.profile
    delta = p.delta
    if delta is None:
        delta = calibrate_delta(profile, cfg.model, p.n_paths, seed=seed, threads=threads)
    levels = p.bounds_levels or tuple(x for x in p.grid if x > report.x_hat)
    rows = []
    for x in levels:
        envelope = bound_envelope(profile, cfg.model, x, delta)
        rows.append(
            {
                "x": envelope.x,
                "lower": envelope.lower,
                "upper": envelope.upper,
                "lower_shape": envelope.lower_shape,
                "delta": delta,
            }
        )
    table = pd.DataFrame(rows, columns=["x", "lower", "upper", "lower_shape", "delta"])
    return table, [f"x_hat={report.x_hat:g}", f"C_p={profile.C_p:.12g}"]


def _classify(cfg, seed, threads) -> Result:
    return str(classify(cfg.model)), []


def _gamma_test(cfg, seed, threads) -> Result:
    p = cfg.params
    if isinstance(cfg.model.rate, CriticalPower):
        growth = power_growth_test(cfg.model, p.n_steps, p.n_paths, seed=seed, threads=threads)
        table = pd.DataFrame(
            [{"mean": growth.mean, "stderr": growth.stderr, "reference": growth.reference, "n_survivors": growth.n_survivors}]
        )
        return table, []
    result = gamma_limit_test(cfg.model, p.n_steps, p.n_paths, seed=seed, threads=threads)
    lines = [
        f"mean={result.mean:.12g} reference_mean={result.reference_mean:.12g}",
        f"variance={result.variance:.12g} reference_variance={result.reference_variance:.12g}",
        f"n_survivors={result.n_survivors}",
    ]
    return result.quantiles, lines


def _heavy(cfg, seed, threads) -> Result:
    p = cfg.params
    if not p.anchors:
        raise ModelError("heavy needs experiment.anchors (two or more levels)")
    calibration = calibrate_heavy_envelope(
        cfg.model, p.anchors, p.n_paths, caps=p.grid_caps(), seed=seed, threads=threads
    )
    curve = ruin_curve(cfg.model, p.grid, p.n_paths, caps=p.grid_caps(), seed=seed + 1, threads=threads)
    psi_tilde = None
    lines = [f"c_lower={calibration.c_lower:.12g} c_upper={calibration.c_upper:.12g}"]
    if p.truncated_paths > 0:
        diagnostics = [
            truncated_diagnostics(cfg.model, x, p.truncated_paths, caps=p.caps(x), seed=seed, threads=threads)
            for x in p.grid
        ]
        psi_tilde = [d.psi_tilde_hat for d in diagnostics]
        lines.extend(f"x={d.x:g} rhs={d.rhs:.6g} slack={d.slack:.6g}" for d in diagnostics)
    return heavy_table(cfg.model, curve, calibration, psi_tilde), lines


def _validate_expexp(cfg, seed, threads) -> Result:
    p = cfg.params
    table = compare_with_closed_form(
        cfg.model, p.grid, p.n_paths, caps=p.grid_caps(), seed=seed, threads=threads
    )
    shape = asymptotic_shape(ExpExpParams.from_model(cfg.model))
    return table, [f"asymptotic_shape={shape.kind}"]


def _profile_export(cfg, seed, threads) -> Result:
    return profile_table(build_profile(cfg.model), cfg.params.grid), []


COMMANDS: Dict[str, Callable[[ExperimentConfig, int, Optional[int]], Result]] = {
    "simulate": _simulate,
    "curve": _curve,
    "fit": _fit,
    "bounds": _bounds,
    "classify": _classify,
    "gamma-test": _gamma_test,
    "heavy": _heavy,
    "validate-expexp": _validate_expexp,
    "profile-export": _profile_export,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ruin", description="Ruin probabilities under a level-dependent premium rate."
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="JSON experiment config")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--threads", type=int, default=None, help="worker processes (default: all cores)")
    parser.add_argument("--out", default=None, help="output path (default: stdout)")
    return parser


def _write(result, lines: List[str], args, cfg: ExperimentConfig, out) -> None:
    loader = UniversalDataLoader()
    if isinstance(result, pd.DataFrame):
        # the thread count is left out so output does not depend on it
        metadata = [
            f"command={args.command}",
            f"config={cfg.echo()}",
            f"seed={args.seed}",
            f"version={config.APP_VERSION}",
            *lines,
        ]
        loader.save_csv(result, out=out, path=args.out, metadata=metadata)
    elif args.out is not None:
        with open(args.out, "w", encoding="utf-8") as f:
            f.write(f"{result}\n")
    else:
        out.write(f"{result}\n")


def run(argv: Optional[List[str]] = None, out=None) -> int:
    out = out or sys.stdout
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_CONFIG

    try:
        data = UniversalDataLoader().load_json_as_dict(args.config)
        cfg = ExperimentConfig.from_dict(data)
        logger.info(f"Running {args.command} with seed={args.seed}")
        result, lines = COMMANDS[args.command](cfg, args.seed, args.threads)
        _write(result, lines, args, cfg, out)
    except NumericalError as e:
        logger.error(f"Numerical failure: {e}")
        return EXIT_NUMERICAL
    except (ModelError, ValueError, FileNotFoundError, KeyError) as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    try:
        logger.info("Application startup initiated")
        sys.exit(run())
    except KeyboardInterrupt:
        logger.info("Run stopped by user")
    except Exception as e:
        logger.critical(f"Critical error in main: {e}")
        raise
