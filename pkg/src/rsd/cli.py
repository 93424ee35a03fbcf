"""Command-line entry point: config ingestion, subcommand dispatch and
report emission.

Config files are JSON with matrices as row-major arrays of arrays:

    {
      "system": {"A": [[...]], "Q": [[...]]},
      "base_sensors": [{"C": [[...]], "R": [[...]], "label": "s1"}, ...],
      "redundant_sensors": [...],
      "design": {"num_sensors": 2, "rows_per_sensor": 1, "R": [[...]],
                 "norm_bound": 5.0, "epsilon": 1e-5,
                 "C_r0": [[...]], "max_iters": 200},
      "simulate": {"steps": 20000, "trials": 1, "seed": 42, "burn_in": 200}
    }

redundant_sensors is consumed by analyze and simulate; design and simulate
read their own sections.  Exit codes: 0 success, 1 config error, 2
validation failure, 3 solver failure, 4 design infeasibility.  Set
RSD_LOG=debug|info|warning|error to control stderr logging verbosity.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .analysis import (
    classify_ordering,
    inertia,
    strict_improvement_condition,
    trace_gap,
    verify_lyapunov_identity,
)
from .design import (
    DesignError,
    DesignSpec,
    design_redundant_sensors,
)
from .model import (
    LinearSystem,
    Sensor,
    SensorBank,
    ValidationError,
    augment,
    check_observability,
    validate_system,
)
from .riccati import (
    SolverError,
    solve_dare_fixed_point,
    solve_dare_symplectic,
)
from .simulate import (
    SimConfig,
    SimulationError,
    compare_networks,
    write_histogram_csv,
    write_trajectory_csv,
)

logger = logging.getLogger("rsd.cli")

CROSS_METHOD_TOL = 1e-7


class ConfigError(Exception):
    """Configuration problem; messages are qualified with the JSON path."""


@dataclass
class Report:
    """Machine-readable outcome of one subcommand.

    All numbers serialize at full round-trip precision, so re-parsing the
    JSON reproduces every matrix bit-exactly.  summary holds the
    human-readable lines printed to stdout.
    """

    command: str
    version: str
    timing: float
    results: dict = field(default_factory=dict)
    verdicts: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)
    summary: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "version": self.version,
            "timing": self.timing,
            "results": _jsonable(self.results),
            "verdicts": _jsonable(self.verdicts),
            "diagnostics": _jsonable(self.diagnostics),
            "summary": list(self.summary),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @staticmethod
    def from_json(text: str) -> "Report":
        data = json.loads(text)
        return Report(
            command=data["command"],
            version=data["version"],
            timing=data["timing"],
            results=data["results"],
            verdicts=data["verdicts"],
            diagnostics=data["diagnostics"],
            summary=data["summary"],
        )


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"real": float(obj.real), "imag": float(obj.imag)}
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


# ----------------------------------------------------------- config loading

@dataclass
class Config:
    """Parsed configuration: module inputs plus the raw JSON sections."""

    sys: LinearSystem
    base: SensorBank
    redundant: Optional[SensorBank]
    design: Optional[dict]
    simulate: dict


def _require(mapping, key, path):
    if not isinstance(mapping, dict):
        raise ConfigError(f"{path}: expected an object")
    if key not in mapping:
        raise ConfigError(f"{path}.{key}: missing required entry")
    return mapping[key]


def _matrix(value, path) -> np.ndarray:
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError(
            f"{path}: expected a matrix as an array of arrays of numbers")
    if arr.ndim != 2 or arr.size == 0:
        raise ConfigError(
            f"{path}: expected a nonempty two-dimensional matrix, got "
            f"shape {arr.shape}")
    return arr


def _number(value, path) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}: expected a number")
    return float(value)


def _integer(value, path) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{path}: expected an integer")
    return value


def _sensor_bank(entries, path, default_prefix) -> SensorBank:
    if not isinstance(entries, list) or not entries:
        raise ConfigError(f"{path}: expected a nonempty array of sensors")
    sensors = []
    for i, entry in enumerate(entries):
        spath = f"{path}[{i}]"
        C = _matrix(_require(entry, "C", spath), f"{spath}.C")
        R = _matrix(_require(entry, "R", spath), f"{spath}.R")
        label = entry.get("label", f"{default_prefix}{i + 1}")
        if not isinstance(label, str):
            raise ConfigError(f"{spath}.label: expected a string")
        try:
            sensors.append(Sensor(C=C, R=R, label=label))
        except ValidationError as exc:
            raise ConfigError(f"{spath}: {exc}")
    try:
        return SensorBank(sensors)
    except ValidationError as exc:
        raise ConfigError(f"{path}: {exc}")


def load_config(path) -> Config:
    """Parse and structurally validate a config file.

    Raises ConfigError with a path-qualified message for malformed JSON,
    missing entries and values that the model layer rejects.
    """
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc}")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}")
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be an object")

    system = _require(data, "system", "config")
    A = _matrix(_require(system, "A", "config.system"), "config.system.A")
    Q = _matrix(_require(system, "Q", "config.system"), "config.system.Q")
    try:
        sys_ = LinearSystem(A=A, Q=Q)
    except ValidationError as exc:
        raise ConfigError(f"config.system: {exc}")

    base = _sensor_bank(_require(data, "base_sensors", "config"),
                        "config.base_sensors", "sensor")
    if base.n != sys_.n:
        raise ConfigError(
            f"config.base_sensors: state dimension {base.n} does not match "
            f"config.system.A ({sys_.n})")

    redundant = None
    if data.get("redundant_sensors"):
        redundant = _sensor_bank(data["redundant_sensors"],
                                 "config.redundant_sensors", "redundant")
        if redundant.n != sys_.n:
            raise ConfigError(
                f"config.redundant_sensors: state dimension {redundant.n} "
                f"does not match config.system.A ({sys_.n})")

    design = None
    if "design" in data:
        dpath = "config.design"
        section = data["design"]
        design = {
            "num_sensors": _integer(
                _require(section, "num_sensors", dpath),
                f"{dpath}.num_sensors"),
            "rows_per_sensor": _integer(
                _require(section, "rows_per_sensor", dpath),
                f"{dpath}.rows_per_sensor"),
            "R": _matrix(_require(section, "R", dpath), f"{dpath}.R"),
            "norm_bound": _number(
                _require(section, "norm_bound", dpath),
                f"{dpath}.norm_bound"),
            "epsilon": _number(section.get("epsilon", 1e-5),
                               f"{dpath}.epsilon"),
            "C_r0": (_matrix(section["C_r0"], f"{dpath}.C_r0")
                     if section.get("C_r0") is not None else None),
            "max_iters": _integer(section.get("max_iters", 200),
                                  f"{dpath}.max_iters"),
        }
        if design["num_sensors"] < 1 or design["rows_per_sensor"] < 1:
            raise ConfigError(
                f"{dpath}: num_sensors and rows_per_sensor must be positive")

    spath = "config.simulate"
    section = data.get("simulate", {})
    simulate = {
        "steps": _integer(section.get("steps", 20000), f"{spath}.steps"),
        "trials": _integer(section.get("trials", 1), f"{spath}.trials"),
        "seed": _integer(section.get("seed", 0), f"{spath}.seed"),
        "burn_in": _integer(section.get("burn_in", 200),
                            f"{spath}.burn_in"),
    }
    logger.info("loaded config %s (n=%d, %d base sensors)", path, sys_.n,
                len(base))
    return Config(sys=sys_, base=base, redundant=redundant, design=design,
                  simulate=simulate)


# ------------------------------------------------------------- subcommands

def cmd_validate(config: Config, args) -> Report:
    """Check invertibility, controllability and collective observability."""
    t0 = time.perf_counter()
    report = validate_system(config.sys)
    observable, obs_rank = check_observability(config.sys, config.base)
    failures = list(report.warnings)
    if not observable:
        failures.append(
            f"base network is not collectively observable "
            f"(rank {obs_rank} < {config.sys.n})")
    if not report.all_pass or not observable:
        raise ValidationError("; ".join(failures))
    out = Report(
        command="validate",
        version=__version__,
        timing=time.perf_counter() - t0,
        results={
            "condition_number": report.condition_number,
            "controllability_rank": report.controllability_rank,
            "observability_rank": obs_rank,
        },
        verdicts={
            "invertibility": report.invertibility_pass,
            "controllability": report.controllability_pass,
            "observability": observable,
            "all_pass": True,
        },
        diagnostics={"warnings": report.warnings},
    )
    out.summary = [
        "validate: all checks passed",
        f"  A condition number {report.condition_number:.6g}, "
        f"controllability rank {report.controllability_rank}, "
        f"observability rank {obs_rank}",
    ]
    return out


def _solve_network(config: Config, bank: SensorBank, method: str) -> dict:
    entry = {}
    if method in ("fixed", "both"):
        fixed = solve_dare_fixed_point(config.sys, bank)
        entry.update({
            "P": fixed.P, "P_posteriori": fixed.P_p, "gain": fixed.K,
            "trace": float(np.trace(fixed.P)),
            "residual": fixed.residual,
            "iterations": fixed.iterations,
            "method": "fixed_point",
        })
    if method in ("symplectic", "both"):
        sym, spectrum = solve_dare_symplectic(config.sys, bank.G, bank=bank)
        entry.update({
            "P": sym.P, "P_posteriori": sym.P_p, "gain": sym.K,
            "trace": float(np.trace(sym.P)),
            "residual": sym.residual,
            "method": "symplectic",
            "unit_circle_margin": spectrum.unit_circle_margin,
        })
        if method == "both":
            scale = 1.0 + np.abs(sym.P).max()
            entry["discrepancy"] = float(np.abs(fixed.P - sym.P).max()
                                         / scale)
            entry["method"] = "both"
    return entry


def cmd_dare(config: Config, args) -> Report:
    """Solve the steady-state Riccati equation for the configured banks."""
    t0 = time.perf_counter()
    networks = {"base": config.base}
    if config.redundant is not None:
        networks["augmented"] = augment(config.base, config.redundant)
    method = args.method
    results = {name: _solve_network(config, bank, method)
               for name, bank in networks.items()}
    verdicts = {}
    if method == "both":
        worst = max(entry["discrepancy"] for entry in results.values())
        verdicts["cross_method_agreement"] = worst <= CROSS_METHOD_TOL
        verdicts["worst_discrepancy"] = worst
    out = Report(
        command="dare",
        version=__version__,
        timing=time.perf_counter() - t0,
        results=results,
        verdicts=verdicts,
    )
    out.summary = [f"dare ({method}):"]
    for name, entry in results.items():
        out.summary.append(
            f"  {name}: trace(P) = {entry['trace']:.12g}, residual "
            f"{entry['residual']:.3e}")
        if "discrepancy" in entry:
            out.summary.append(
                f"  {name}: cross-method discrepancy "
                f"{entry['discrepancy']:.3e}")
    return out


def cmd_analyze(config: Config, args) -> Report:
    """Quantify the effect of the redundant sensors on the base network."""
    if config.redundant is None:
        raise ConfigError(
            "config.redundant_sensors: required for analyze")
    t0 = time.perf_counter()
    sys_, base, redundant = config.sys, config.base, config.redundant
    augmented = augment(base, redundant)
    sol_base, _ = solve_dare_symplectic(sys_, base.G, bank=base)
    sol_aug, _ = solve_dare_symplectic(sys_, augmented.G, bank=augmented)
    gap = trace_gap(sys_, base, redundant)
    verdict = classify_ordering(sol_base.P, sol_aug.P)
    improvement = strict_improvement_condition(sys_, base.G, redundant.G)
    lyap_residual = verify_lyapunov_identity(sys_, base, redundant,
                                             sol_base.P, sol_aug.P)
    classification = verdict.classification.value
    strict = classification == "StrictlyGreater"
    warnings = []
    if np.abs(redundant.G).max() == 0.0:
        warnings.append(
            "redundant sensors contribute no information (zero output "
            "rows); the error covariance is unchanged")
    out = Report(
        command="analyze",
        version=__version__,
        timing=time.perf_counter() - t0,
        results={
            "P_base": sol_base.P,
            "P_augmented": sol_aug.P,
            "P_base_posteriori": sol_base.P_p,
            "P_augmented_posteriori": sol_aug.P_p,
            "trace_base": gap.tr_base,
            "trace_augmented": gap.tr_augmented,
            "trace_gap": gap.gap,
            "difference_eigenvalues": verdict.eigenvalues_of_difference,
            "inertia_priori": inertia(sol_base.P - sol_aug.P),
            "inertia_posteriori": inertia(sol_base.P_p - sol_aug.P_p),
            "kernel_basis": verdict.kernel_basis,
            "shared_eigenpairs": improvement.matches,
        },
        verdicts={
            "classification": classification,
            "kernel_dimension": verdict.kernel_dimension,
            "strict_improvement": strict,
            "no_shared_stable_eigenpair": not improvement.found,
            "spectral_test_consistent": strict == (not improvement.found),
            "warnings": warnings,
        },
        diagnostics={
            "lyapunov_identity_residual": lyap_residual,
            "ordering_tolerance": verdict.tolerance,
            "spectral_test_inconclusive": improvement.inconclusive,
        },
    )
    out.summary = [
        f"analyze: {classification}, kernel dimension "
        f"{verdict.kernel_dimension}",
        f"  trace {gap.tr_base:.12g} -> {gap.tr_augmented:.12g} "
        f"(gap {gap.gap:.12g})",
        f"  shared stable eigenpair: "
        f"{'yes' if improvement.found else 'no'}; identity residual "
        f"{lyap_residual:.3e}",
    ]
    out.summary.extend(f"  warning: {w}" for w in warnings)
    return out


def cmd_design(config: Config, args) -> Report:
    """Design redundant sensor rows and post-validate the result."""
    if config.design is None:
        raise ConfigError("config.design: required for design")
    t0 = time.perf_counter()
    d = config.design
    partition = (d["rows_per_sensor"],) * d["num_sensors"]
    try:
        spec = DesignSpec(
            sys=config.sys,
            base=config.base,
            row_partition=partition,
            R_tilde=d["R"],
            norm_bound=d["norm_bound"],
            C_r0=d["C_r0"],
            epsilon=d["epsilon"],
            max_outer_iterations=d["max_iters"],
        )
    except ValidationError as exc:
        raise ConfigError(f"config.design: {exc}")
    result = design_redundant_sensors(spec)
    if result.status == "numerical_failure":
        raise SolverError(f"design loop failed: {result.message}")
    if args.csv_dir:
        directory = Path(args.csv_dir)
        directory.mkdir(parents=True, exist_ok=True)
        path = directory / "gamma_trajectory.csv"
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["iter", "gamma"])
            for i, gamma in enumerate(result.gamma_trajectory):
                writer.writerow([i, repr(float(gamma))])
        logger.info("wrote %s", path)
    post = result.post_validation
    out = Report(
        command="design",
        version=__version__,
        timing=time.perf_counter() - t0,
        results={
            "gamma_star": result.gamma_star,
            "C_star": result.C_star,
            "X_star": result.X_star,
            "gram": result.gram,
            "row_block_norms": result.row_block_norms,
            "gamma_trajectory": result.gamma_trajectory,
            "iterations": result.iterations,
            "dare_trace": post.dare_trace,
            "bound_gap": post.bound_gap,
            "residuals": post.residuals,
        },
        verdicts={
            "status": result.status,
            "converged": result.status == "converged",
            "rows_within_budget": all(
                norm <= spec.norm_bound + 1e-6
                for norm in result.row_block_norms),
            "post_validation_pass": (
                post.dare_trace
                <= result.gamma_star + 1e-6 * (1 + result.gamma_star)
                and post.residuals["x_inverse_vs_dare"]
                <= 1e-4 * (1 + post.dare_trace)),
        },
        diagnostics={
            "wall_time": result.diagnostics["wall_time"],
            "outer_iterations": result.diagnostics["outer_iterations"],
            "message": result.message,
        },
    )
    norms = ", ".join(f"{v:.6g}" for v in result.row_block_norms)
    out.summary = [
        f"design: {result.status} in {result.iterations} iterations, "
        f"gamma* = {result.gamma_star:.12g}",
        f"  row norms [{norms}] (budget {spec.norm_bound:g})",
        f"  augmented trace {post.dare_trace:.12g}, certified improvement "
        f">= {post.bound_gap:.12g}",
    ]
    return out


def cmd_simulate(config: Config, args) -> Report:
    """Run seeded Monte-Carlo filtering for the configured networks."""
    t0 = time.perf_counter()
    section = dict(config.simulate)
    for key in ("steps", "trials", "seed"):
        value = getattr(args, key, None)
        if value is not None:
            section[key] = value
    try:
        sim_config = SimConfig(**section)
    except ValidationError as exc:
        raise ConfigError(f"config.simulate: {exc}")
    labels = ["base"]
    banks = [config.base]
    if config.redundant is not None:
        labels.append("augmented")
        banks.append(augment(config.base, config.redundant))
    comparison = compare_networks(config.sys, banks, sim_config,
                                  labels=labels)
    results = {}
    within = {}
    for label, output in zip(comparison.labels, comparison.outputs):
        rel = np.abs(np.diag(output.empirical_covariance)
                     / np.diag(output.predicted_covariance) - 1)
        results[label] = {
            "empirical_covariance": output.empirical_covariance,
            "predicted_covariance": output.predicted_covariance,
            "empirical_mse": float(np.trace(output.empirical_covariance)),
            "predicted_mse": float(np.trace(output.predicted_covariance)),
            "max_relative_variance_error": float(rel.max()),
        }
        within[label] = bool(rel.max() < 0.05)
    ratios = {
        f"{comparison.labels[j]}_vs_{comparison.labels[i]}": ratio
        for (i, j), ratio in comparison.variance_ratios.items()
    }
    written = []
    if args.csv_dir:
        for label, output in zip(comparison.labels, comparison.outputs):
            directory = Path(args.csv_dir) / label
            directory.mkdir(parents=True, exist_ok=True)
            path = directory / "trajectory.csv"
            write_trajectory_csv(output, path)
            written.append(str(path))
            for j in range(config.sys.n):
                path = directory / f"histogram_{j + 1}.csv"
                write_histogram_csv(output, j, path)
                written.append(str(path))
        logger.info("wrote %d CSV files under %s", len(written),
                    args.csv_dir)
    out = Report(
        command="simulate",
        version=__version__,
        timing=time.perf_counter() - t0,
        results={
            "networks": results,
            "variance_ratios": ratios,
            "steps": sim_config.steps,
            "trials": sim_config.trials,
            "seed": sim_config.seed,
            "burn_in": sim_config.burn_in,
        },
        verdicts={"variances_within_5pct": within},
        diagnostics={"csv_files": written},
    )
    out.summary = [
        f"simulate: {sim_config.steps} steps x {sim_config.trials} "
        f"trial(s), seed {sim_config.seed}",
    ]
    for label in comparison.labels:
        entry = results[label]
        out.summary.append(
            f"  {label}: empirical MSE {entry['empirical_mse']:.6g} vs "
            f"predicted {entry['predicted_mse']:.6g} "
            f"(max element error {entry['max_relative_variance_error']:.2%})")
    for name, ratio in ratios.items():
        values = ", ".join(f"{v:.4f}" for v in np.atleast_1d(ratio))
        out.summary.append(f"  variance ratio {name}: [{values}]")
    return out


HANDLERS = {
    "validate": cmd_validate,
    "dare": cmd_dare,
    "analyze": cmd_analyze,
    "design": cmd_design,
    "simulate": cmd_simulate,
}


# ------------------------------------------------------------------ driver

class _Parser(argparse.ArgumentParser):
    # usage mistakes are config errors (exit 1), not validation failures
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"config error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="rsd",
        description="Steady-state estimation accuracy analysis and "
                    "redundant-sensor design for linear sensor networks.",
    )
    parser.add_argument("--version", action="version",
                        version=f"rsd {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("-c", "--config", required=True,
                       help="path to the JSON config file")
        p.add_argument("--out", help="write the JSON report to this path")

    p = sub.add_parser("validate",
                       help="check the model preconditions")
    common(p)

    p = sub.add_parser("dare", help="solve the steady-state Riccati "
                                    "equation")
    common(p)
    p.add_argument("--method", choices=["fixed", "symplectic", "both"],
                   default="both",
                   help="solution route (default: both, with cross-check)")

    p = sub.add_parser("analyze", help="quantify the redundant sensors' "
                                       "effect")
    common(p)

    p = sub.add_parser("design", help="design redundant sensor rows")
    common(p)
    p.add_argument("--csv-dir",
                   help="write gamma_trajectory.csv to this directory")

    p = sub.add_parser("simulate", help="seeded Monte-Carlo filtering")
    common(p)
    p.add_argument("--csv-dir",
                   help="write per-network trajectory and histogram CSVs")
    p.add_argument("--steps", type=int, help="override simulate.steps")
    p.add_argument("--trials", type=int, help="override simulate.trials")
    p.add_argument("--seed", type=int, help="override simulate.seed")
    return parser


def _setup_logging():
    name = os.environ.get("RSD_LOG", "warning").strip().upper()
    level = getattr(logging, name, None)
    if not isinstance(level, int):
        level = logging.WARNING
    logging.basicConfig(level=level, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    _setup_logging()
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config)
        report = HANDLERS[args.command](config, args)
        for line in report.summary:
            print(line)
        if args.out:
            try:
                Path(args.out).write_text(report.to_json() + "\n")
            except OSError as exc:
                raise ConfigError(f"{args.out}: {exc}")
            print(f"report written to {args.out}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except ValidationError as exc:
        print(f"validation failure: {exc}", file=sys.stderr)
        return 2
    except (SolverError, SimulationError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 3
    except DesignError as exc:
        print(f"design infeasibility: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
