"""
Experiment orchestration behind the command line: config ingestion, sweeps, replications
and the row builders of every CSV report.
"""

from concurrent.futures import ProcessPoolExecutor
import json
import math
from pathlib import Path
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from typing import Any, NamedTuple

from loguru import logger
import numpy as np

from src.config import settings
from src.constants.modes import MODE_COLUMNS, MODE_ORDER, Scheme
from src.constants.scenarios import (
    CONFORMANCE_TOL,
    IDENTITY_TOL,
    MC_SIGMAS,
    SIM_RELATIVE_TOL,
    SWEEP_PARAMETERS,
)
from src.exceptions import ConfigError
from src.schemas.analytic import AnalysisResult, OperatingPoint
from src.schemas.channel import LinkStats, PowerConstraints, SystemGeometry
from src.schemas.experiment import ExperimentConfig
from src.schemas.rates import AlphaLattice, RateSet
from src.schemas.simulation import SimConfig, SimReport
from src.services.analytic import (
    analyze,
    negative_control_operating_point,
    rate_identity_residuals,
    throughput_forms,
)
from src.services.channel import derive_stats
from src.services.lattice import build_alpha_lattice, rate_ladder
from src.services.simulation import replication_streams, run_simulation
from src.services.validate import (
    brute_force_mode_probs,
    conformance_grid,
    mc_joint_ccdf_grid,
    normalization_residual,
    scheme2_conformance,
)
from src.utils.csv_output import provenance
from src.utils.units import db_to_linear


PROVENANCE_COLUMNS = ["schema_version", "config_hash", "seed"]

MODE_TABLE_COLUMNS = [
    "scheme",
    "w",
    "alpha",
    *MODE_COLUMNS.values(),
    "tau_t",
    "tau_t_norm",
    *PROVENANCE_COLUMNS,
]

SWEEP_COLUMNS = [
    "parameter",
    "value",
    "scheme",
    "case",
    "w_star",
    "alpha_star",
    "tau1",
    "tau2",
    "tau3",
    "tau_t",
    "tau_t_norm",
    *PROVENANCE_COLUMNS,
]

SIMULATION_COLUMNS = [
    "scheme",
    "replication",
    "slots",
    "policy_alpha",
    "case",
    "negative_control",
    "tau1_hat",
    "tau2_hat",
    "tau2_ideal_hat",
    "tau3_hat",
    "tau_t_hat",
    *(f"freq_{column.removeprefix('p_')}" for column in MODE_COLUMNS.values()),
    "mean_occupancy",
    "final_occupancy",
    "occupancy_drift",
    "shortfall_slots",
    "tau1",
    "tau2",
    "tau3",
    "tau_t",
    "rel_err_tau1",
    "rel_err_tau2",
    "rel_err_tau3",
    "rel_err_tau_t",
    "balance_gap",
    "stable",
    *PROVENANCE_COLUMNS,
]

VALIDATION_COLUMNS = [
    "check",
    "scheme",
    "value",
    "tolerance",
    "required",
    "passed",
    *PROVENANCE_COLUMNS,
]


class ExperimentInputs(NamedTuple):
    geometry: SystemGeometry
    power: PowerConstraints
    stats: LinkStats
    rates: RateSet


def load_experiment_config(path: str | Path) -> ExperimentConfig:
    """
    Read an experiment config from a JSON or TOML file.

    Raises:
        ConfigError: If the file cannot be read or has an unknown extension
        pydantic.ValidationError: If the content does not describe a valid experiment
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"Cannot read config {path}: {exc}") from exc

    match path.suffix.lower():
        case ".json":
            try:
                data = json.loads(text)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"Malformed JSON in {path}: {exc}") from exc
        case ".toml":
            try:
                data = tomllib.loads(text)
            except tomllib.TOMLDecodeError as exc:
                raise ConfigError(f"Malformed TOML in {path}: {exc}") from exc
        case _:
            raise ConfigError(f"Unsupported config format '{path.suffix}', use .json or .toml")

    config = ExperimentConfig.model_validate(data)
    logger.debug(f"Loaded experiment config from {path}")
    return config


def build_inputs(config: ExperimentConfig) -> ExperimentInputs:
    """
    Convert a config into linear-scale model inputs; dB values are converted here only.
    """
    geometry = SystemGeometry(**config.geometry.model_dump())
    power = PowerConstraints(
        gamma_max=db_to_linear(config.powers.gamma_max_db),
        gamma_p=db_to_linear(config.powers.gamma_p_db),
    )
    if config.rates.levels is not None:
        ladder = rate_ladder(config.rates.levels, config.rates.scale)
        rates = RateSet(r1=ladder, r2=ladder)
    else:
        rates = RateSet(r1=config.rates.r1, r2=config.rates.r2)
    return ExperimentInputs(geometry, power, derive_stats(geometry, power), rates)


def schemes_for(selection: str) -> tuple[Scheme, ...]:
    if selection == "both":
        return Scheme.RELAY_ONLY, Scheme.COOPERATIVE
    return (Scheme(int(selection)),)


def apply_sweep_value(config: ExperimentConfig, parameter: str, value: Any) -> ExperimentConfig:
    """
    Copy of the config with one swept parameter replaced.

    Raises:
        ConfigError: For an unknown parameter, or a rate parameter on explicit ladders
    """
    block = SWEEP_PARAMETERS.get(parameter)
    if block is None:
        known = ", ".join(sorted(SWEEP_PARAMETERS))
        raise ConfigError(f"Unknown sweep parameter '{parameter}', expected one of: {known}")
    if block == "rates" and config.rates.levels is None:
        raise ConfigError(f"Sweeping '{parameter}' needs a levels/scale rate block")
    data = config.model_dump()
    data[block][parameter] = value
    return ExperimentConfig.model_validate(data)


def stats_report(config: ExperimentConfig) -> list[str]:
    """
    Human-readable lines with the derived link statistics and the α lattice.
    """
    inputs = build_inputs(config)
    stats = inputs.stats
    lattice = build_alpha_lattice(inputs.rates)

    def triple(values: tuple[float, ...]) -> str:
        return "(" + ", ".join(f"{value:.6g}" for value in values) + ")"

    return [
        f"gamma_max = {stats.gamma_max:.6g}",
        f"gamma_p = {stats.gamma_p:.6g}",
        f"pip = {'true' if stats.is_pip else 'false'}",
        f"omega_h = {triple(stats.omega_h)}",
        f"omega_g = {triple(stats.omega_g)}",
        f"lambda = {triple(stats.lambda_)}",
        f"mu = {triple(stats.mu)}",
        f"p = {triple(stats.p)}",
        f"r1 = [{', '.join(str(rate) for rate in inputs.rates.r1)}]",
        f"r2 = [{', '.join(str(rate) for rate in inputs.rates.r2)}]",
        f"alpha_lattice = {_lattice_text(lattice)}",
    ]


def _lattice_text(lattice: AlphaLattice) -> str:
    return "{" + ", ".join(str(value) for value in lattice.values) + "}"


def mode_rows(config: ExperimentConfig, schemes: tuple[Scheme, ...]) -> list[dict[str, Any]]:
    """
    One row per (scheme, α_w): the eight mode probabilities and τ_t(α_w).
    """
    inputs = build_inputs(config)
    meta = provenance(config, None)
    rows = []
    for scheme in schemes:
        result = analyze(inputs.stats, inputs.rates, scheme)
        table = result.table
        for w, alpha in enumerate(table.alphas):
            row: dict[str, Any] = {"scheme": int(scheme), "w": w, "alpha": alpha, **meta}
            for mode in MODE_ORDER:
                row[MODE_COLUMNS[mode]] = table.prob(mode, w)
            tau_t = result.throughput.per_alpha[w]
            row["tau_t"] = tau_t
            row["tau_t_norm"] = tau_t / table.max_rate
            rows.append(row)
    return rows


def _operating_row(result: AnalysisResult) -> dict[str, Any]:
    op = result.operating_point
    return {
        "case": op.case.kind,
        "w_star": op.w_star,
        "alpha_star": op.alpha_star,
        "tau1": op.tau1,
        "tau2": op.tau2,
        "tau3": op.tau3,
        "tau_t": op.tau_t,
        "tau_t_norm": op.tau_t_norm,
    }


def sweep_rows(config: ExperimentConfig, schemes: tuple[Scheme, ...]) -> list[dict[str, Any]]:
    """
    Analytic operating point per sweep value and scheme, in sweep order.

    Raises:
        ConfigError: If the config has no sweep block or names an unknown parameter
    """
    if config.sweep is None:
        raise ConfigError("throughput-sweep needs a 'sweep' block in the config")
    parameter = config.sweep.parameter
    meta = provenance(config, None)
    rows = []
    for value in config.sweep.values:
        point = apply_sweep_value(config, parameter, value)
        inputs = build_inputs(point)
        logger.info(f"Sweep {parameter}={value}")
        for scheme in schemes:
            result = analyze(inputs.stats, inputs.rates, scheme)
            rows.append(
                {
                    "parameter": parameter,
                    "value": value,
                    "scheme": int(scheme),
                    **_operating_row(result),
                    **meta,
                }
            )
    return rows


def _replicate(
    job: tuple[SimConfig, LinkStats, RateSet, OperatingPoint, Scheme, np.random.Generator, int],
) -> SimReport:
    config, stats, rates, op, scheme, rng, replication = job
    return run_simulation(config, stats, rates, op, scheme, rng=rng, replication=replication)


def run_replications(
    config: SimConfig,
    stats: LinkStats,
    rates: RateSet,
    op: OperatingPoint,
    scheme: Scheme,
    workers: int | None = None,
) -> list[SimReport]:
    """
    Independent replications on streams spawned from config.seed, returned in replication
    order whether they run sequentially or on a process pool.
    """
    workers = settings.WORKERS if workers is None else workers
    streams = replication_streams(config.seed, config.replications)
    jobs = [
        (config, stats, rates, op, scheme, rng, replication)
        for replication, rng in enumerate(streams)
    ]
    if workers > 1 and len(jobs) > 1:
        logger.info(f"Running {len(jobs)} replications on {workers} workers")
        with ProcessPoolExecutor(max_workers=workers) as executor:
            return list(executor.map(_replicate, jobs))
    return [_replicate(job) for job in jobs]


def mean_of_means(reports: list[SimReport]) -> dict[str, float]:
    """
    Replication average of the throughput and drift estimates.
    """
    fields = ("tau1_hat", "tau2_hat", "tau2_ideal_hat", "tau3_hat", "tau_t_hat", "occupancy_drift")
    return {
        field: math.fsum(getattr(report, field) for report in reports) / len(reports)
        for field in fields
    }


def _relative_error(estimate: float, reference: float) -> float:
    if reference == 0.0:
        return estimate - reference
    return (estimate - reference) / reference


def simulation_passes(row: dict[str, Any]) -> bool:
    """
    Acceptance of one simulated row: throughput within 1%, balanced links, bounded drift.
    """
    return (
        abs(row["rel_err_tau_t"]) <= SIM_RELATIVE_TOL
        and row["balance_gap"] <= SIM_RELATIVE_TOL
        and row["stable"]
    )


def simulation_rows(
    config: ExperimentConfig,
    schemes: tuple[Scheme, ...],
    negative_control: bool = False,
) -> list[dict[str, Any]]:
    """
    One row per (scheme, replication) with simulated and analytic values side by side.
    """
    inputs = build_inputs(config)
    sim = config.simulation
    sim_config = SimConfig(
        slots=sim.slots, seed=sim.seed, warmup=sim.warmup, replications=sim.replications
    )
    meta = provenance(config, sim.seed)
    rows = []
    for scheme in schemes:
        result = analyze(inputs.stats, inputs.rates, scheme)
        op = result.operating_point
        if negative_control:
            op = negative_control_operating_point(result.table, op)
        reports = run_replications(sim_config, inputs.stats, inputs.rates, op, scheme)
        for report in reports:
            row: dict[str, Any] = {
                "scheme": int(scheme),
                "replication": report.replication,
                "slots": report.slots,
                "policy_alpha": report.policy_alpha,
                "case": op.case.kind,
                "negative_control": negative_control,
                "tau1_hat": report.tau1_hat,
                "tau2_hat": report.tau2_hat,
                "tau2_ideal_hat": report.tau2_ideal_hat,
                "tau3_hat": report.tau3_hat,
                "tau_t_hat": report.tau_t_hat,
                "mean_occupancy": report.mean_occupancy,
                "final_occupancy": report.final_occupancy,
                "occupancy_drift": report.occupancy_drift,
                "shortfall_slots": report.shortfall_slots,
                "tau1": op.tau1,
                "tau2": op.tau2,
                "tau3": op.tau3,
                "tau_t": op.tau_t,
                "rel_err_tau1": _relative_error(report.tau1_hat, op.tau1),
                "rel_err_tau2": _relative_error(report.tau2_hat, op.tau2),
                "rel_err_tau3": _relative_error(report.tau3_hat, op.tau3),
                "rel_err_tau_t": _relative_error(report.tau_t_hat, op.tau_t),
                "balance_gap": abs(_relative_error(report.tau1_hat, report.tau2_hat)),
                "stable": abs(report.occupancy_drift) <= settings.STABLE_DRIFT_TOLERANCE,
                **meta,
            }
            for mode in MODE_ORDER:
                row[f"freq_{MODE_COLUMNS[mode].removeprefix('p_')}"] = report.mode_freq[mode]
            rows.append(row)
        if len(reports) > 1:
            logger.info(f"Scheme {int(scheme)} replication means: {mean_of_means(reports)}")
    return rows


def _check(
    name: str,
    scheme: Scheme,
    value: float,
    tolerance: float,
    required: bool = True,
) -> dict[str, Any]:
    return {
        "check": name,
        "scheme": int(scheme),
        "value": value,
        "tolerance": tolerance,
        "required": required,
        "passed": value <= tolerance,
    }


def _largest_z_score(estimates: list[float], expected: list[float], samples: int) -> float:
    largest = 0.0
    for estimate, value in zip(estimates, expected, strict=True):
        sigma = math.sqrt(max(value * (1.0 - value), 0.0) / samples)
        gap = abs(estimate - value)
        if sigma > 0.0:
            largest = max(largest, gap / sigma)
        elif gap > 0.0:
            largest = math.inf
    return largest


def validation_rows(
    config: ExperimentConfig,
    schemes: tuple[Scheme, ...],
    samples: int | None = None,
) -> list[dict[str, Any]]:
    """
    Oracle checks per scheme: normalization, rate identities, forward/backward throughput
    agreement, brute-force mode frequencies and, for the combining scheme, CCDF conformance.

    Monte Carlo checks are reported in standard errors against a 3σ tolerance.
    """
    inputs = build_inputs(config)
    stats, rates = inputs.stats, inputs.rates
    samples = config.simulation.slots if samples is None else samples
    seed = config.simulation.seed
    meta = provenance(config, seed)
    rows = []
    for scheme in schemes:
        result = analyze(stats, rates, scheme)
        table = result.table
        checks = [_check("normalization", scheme, normalization_residual(stats, rates, scheme), IDENTITY_TOL)]
        for name, value in rate_identity_residuals(table).items():
            checks.append(_check(f"identity_{name}", scheme, value, IDENTITY_TOL))

        gaps = [0.0]
        for w in range(table.last_index + 1):
            forward, backward = throughput_forms(table, w)
            if forward is not None and backward is not None:
                gaps.append(abs(forward - backward))
        checks.append(_check("throughput_forms", scheme, max(gaps), IDENTITY_TOL))
        checks.append(
            _check(
                "operating_point_minimum",
                scheme,
                abs(result.operating_point.tau_t - result.throughput.tau_t),
                IDENTITY_TOL,
            )
        )

        w_star = result.operating_point.w_star
        frequencies = brute_force_mode_probs(stats, rates, table.alphas[w_star], scheme, samples, seed)
        checks.append(
            _check(
                "mode_frequencies_sigma",
                scheme,
                _largest_z_score(
                    [frequencies[mode] for mode in MODE_ORDER],
                    [table.prob(mode, w_star) for mode in MODE_ORDER],
                    samples,
                ),
                MC_SIGMAS,
            )
        )

        if scheme == Scheme.COOPERATIVE:
            grid = conformance_grid()
            report = scheme2_conformance(stats, grid)
            estimates = mc_joint_ccdf_grid(stats, grid, scheme, samples, seed)
            checks.append(
                _check(
                    "ccdf_quadrature_sigma",
                    scheme,
                    _largest_z_score(
                        [estimate.estimate for estimate in estimates],
                        [row.quadrature for row in report.rows],
                        samples,
                    ),
                    MC_SIGMAS,
                )
            )
            for verdict in report.verdicts:
                checks.append(
                    _check(
                        f"conformance_{verdict.name}",
                        scheme,
                        verdict.max_deviation,
                        CONFORMANCE_TOL,
                        required=verdict.name == "exact_pip",
                    )
                )
        rows.extend({**check, **meta} for check in checks)
    return rows
