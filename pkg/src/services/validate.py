"""
Independent numerical oracles for the closed forms: adaptive quadrature, Monte Carlo
estimators and brute-force mode frequencies.
"""

from collections import Counter
from collections.abc import Callable, Iterable, Sequence
from fractions import Fraction
import itertools
import math

from loguru import logger
import numpy as np
from scipy.integrate import quad

from src.config import settings
from src.constants.modes import Mode, Scheme
from src.constants.scenarios import CONFORMANCE_GRID_VALUES, CONFORMANCE_TOL
from src.exceptions import InvalidArgumentError, NumericFailureError
from src.schemas.channel import LinkStats
from src.schemas.rates import RateSet, RateTripletIndex
from src.schemas.validation import (
    ConformanceReport,
    ConformanceRow,
    FormVerdict,
    MonteCarloEstimate,
    QuadratureResult,
)
from src.services.analytic import TripletProbabilities
from src.services.channel import (
    joint_ccdf_scheme2,
    joint_ccdf_scheme2_pip,
    joint_ccdf_scheme2_pip_exact,
    joint_ccdf_scheme2_printed,
    sample_snr_arrays,
)
from src.services.lattice import admissible_triplets, classify_mode, require_combinable, thresholds
from src.services.simulation import feasible_index_arrays


TRUNCATION_FACTOR = 50.0


def quadrature(
    integrand: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float | None = None,
    limit: int | None = None,
) -> QuadratureResult:
    """
    Adaptive Gauss-Kronrod integration with an absolute tolerance.

    Args:
        integrand: Bounded function on [lo, hi]
        lo: Lower limit
        hi: Upper limit, may be +inf
        tol: Absolute tolerance, settings.QUAD_TOL by default
        limit: Subdivision cap, settings.QUAD_LIMIT by default

    Returns:
        QuadratureResult with abs_error_estimate <= tol

    Raises:
        InvalidArgumentError: If lo > hi or tol <= 0
        NumericFailureError: If the error estimate exceeds tol
    """
    tol = settings.QUAD_TOL if tol is None else tol
    limit = settings.QUAD_LIMIT if limit is None else limit
    if not tol > 0:
        raise InvalidArgumentError(f"Tolerance must be positive, got {tol}")
    if math.isnan(lo) or math.isnan(hi) or lo > hi:
        raise InvalidArgumentError(f"Need lo <= hi, got [{lo}, {hi}]")
    if lo == hi:
        return QuadratureResult(value=0.0, abs_error_estimate=0.0, subdivisions=0)

    result = quad(integrand, lo, hi, epsabs=tol, epsrel=0.0, limit=limit, full_output=1)
    value, abs_error, info = result[0], result[1], result[2]
    if abs_error > tol:
        raise NumericFailureError(
            f"Quadrature on [{lo}, {hi}] stopped at error {abs_error:.3g}",
            achieved_tolerance=abs_error,
            partial_value=value,
        )
    if len(result) > 3:
        logger.debug(f"Quadrature on [{lo}, {hi}] accepted at error {abs_error:.3g}: {result[3]}")
    return QuadratureResult(value=value, abs_error_estimate=abs_error, subdivisions=int(info["last"]))


def truncated_quadrature(
    integrand: Callable[[float], float],
    lo: float,
    scale: float,
    tail: Callable[[float], float],
    tol: float | None = None,
) -> QuadratureResult:
    """
    Semi-infinite integral cut at lo + 50·scale, with the analytic tail bound tail(cut)
    added to the error estimate.
    """
    cut = lo + TRUNCATION_FACTOR * scale
    body = quadrature(integrand, lo, cut, tol)
    return QuadratureResult(
        value=body.value,
        abs_error_estimate=body.abs_error_estimate + abs(tail(cut)),
        subdivisions=body.subdivisions,
    )


def _check_samples(n: int):
    if n < 1:
        raise InvalidArgumentError(f"Need at least one sample, got {n}")
    if n < 10_000:
        logger.warning(f"Monte Carlo with only {n} samples")


def _chunks(n: int) -> Iterable[int]:
    for start in range(0, n, settings.MC_CHUNK):
        yield min(settings.MC_CHUNK, n - start)


def _estimate(hits: int, n: int) -> MonteCarloEstimate:
    estimate = hits / n
    return MonteCarloEstimate(
        estimate=estimate,
        std_error=math.sqrt(estimate * (1.0 - estimate) / n),
        samples=n,
    )


def mc_joint_ccdf_grid(
    stats: LinkStats,
    points: Sequence[tuple[float, float, float]],
    scheme: Scheme,
    n: int,
    seed: int,
) -> list[MonteCarloEstimate]:
    """
    Frequency estimates of Pr{γ1 ≥ y1, X ≥ y2, γ3 ≥ y3} for many points from one sample set.

    X is γ2 for the relay-only scheme and γ2 + γ3 when the destination combines.
    """
    _check_samples(n)
    rng = np.random.default_rng(seed)
    grid = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    hits = np.zeros(len(grid), dtype=np.int64)
    for size in _chunks(n):
        snr = sample_snr_arrays(stats, rng, size)
        link2 = snr[:, 1] + snr[:, 2] if scheme == Scheme.COOPERATIVE else snr[:, 1]
        for index, (y1, y2, y3) in enumerate(grid):
            hits[index] += np.count_nonzero((snr[:, 0] >= y1) & (link2 >= y2) & (snr[:, 2] >= y3))
    return [_estimate(int(count), n) for count in hits]


def mc_joint_ccdf(
    stats: LinkStats,
    y1: float,
    y2: float,
    y3: float,
    scheme: Scheme,
    n: int,
    seed: int,
) -> MonteCarloEstimate:
    return mc_joint_ccdf_grid(stats, [(y1, y2, y3)], scheme, n, seed)[0]


def brute_force_mode_probs(
    stats: LinkStats,
    rates: RateSet,
    alpha: Fraction,
    scheme: Scheme,
    n: int,
    seed: int,
) -> dict[Mode, float]:
    """
    Mode frequencies from sampled SNRs, classified directly without inclusion-exclusion.
    """
    _check_samples(n)
    if scheme == Scheme.COOPERATIVE:
        require_combinable(rates)
    rng = np.random.default_rng(seed)
    snr_thresholds = thresholds(rates)
    triplet_counts: Counter[RateTripletIndex] = Counter()
    for size in _chunks(n):
        indices = feasible_index_arrays(sample_snr_arrays(stats, rng, size), snr_thresholds, scheme)
        unique, counts = np.unique(indices, axis=0, return_counts=True)
        for row, count in zip(unique, counts, strict=True):
            triplet_counts[RateTripletIndex(*(int(k) for k in row))] += int(count)

    mode_counts: Counter[Mode] = Counter()
    for triplet, count in triplet_counts.items():
        mode_counts[classify_mode(alpha, triplet, rates)] += count
    return {mode: mode_counts[mode] / n for mode in Mode}


def normalization_residual(stats: LinkStats, rates: RateSet, scheme: Scheme) -> float:
    """
    |Σ joint_prob - 1| over every admissible rate triplet.
    """
    calculator = TripletProbabilities(stats, rates, scheme)
    total = math.fsum(
        calculator.probability(triplet) for triplet in admissible_triplets(rates, scheme)
    )
    return abs(total - 1.0)


def conformance_grid(
    values: Sequence[float] = CONFORMANCE_GRID_VALUES,
) -> list[tuple[float, float, float]]:
    return list(itertools.product(values, repeat=3))


def _verdict(name: str, deviations: list[float], tol: float) -> FormVerdict:
    largest = max(deviations, default=0.0)
    conforming = largest <= tol
    if not conforming:
        logger.warning(f"Closed form '{name}' deviates from quadrature by {largest:.3g}")
    return FormVerdict(name=name, max_deviation=largest, conforming=conforming)


def scheme2_conformance(
    stats: LinkStats,
    grid: Iterable[tuple[float, float, float]] | None = None,
    tol: float = CONFORMANCE_TOL,
) -> ConformanceReport:
    """
    Compare every closed form of the combining CCDF with the quadrature path.

    The printed and exact PIP forms are only evaluated in the PIP regime.

    Returns:
        ConformanceReport with one row per grid point and one verdict per closed form
    """
    points = conformance_grid() if grid is None else list(grid)
    rows = []
    for y1, y2, y3 in points:
        rows.append(
            ConformanceRow(
                y1=y1,
                y2=y2,
                y3=y3,
                quadrature=joint_ccdf_scheme2(stats, y1, y2, y3),
                printed_general=joint_ccdf_scheme2_printed(stats, y1, y2, y3),
                printed_pip=joint_ccdf_scheme2_pip(stats, y1, y2, y3) if stats.is_pip else None,
                exact_pip=(
                    joint_ccdf_scheme2_pip_exact(stats, y1, y2, y3) if stats.is_pip else None
                ),
            )
        )

    verdicts = [
        _verdict("printed_general", [abs(row.printed_general - row.quadrature) for row in rows], tol)
    ]
    if stats.is_pip:
        verdicts.append(
            _verdict("printed_pip", [abs(row.printed_pip - row.quadrature) for row in rows], tol)
        )
        verdicts.append(
            _verdict("exact_pip", [abs(row.exact_pip - row.quadrature) for row in rows], tol)
        )
    return ConformanceReport(rows=rows, verdicts=verdicts, tolerance=tol)
