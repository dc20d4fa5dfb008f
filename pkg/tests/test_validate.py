import math

import pytest

from src.constants.modes import Mode, Scheme
from src.exceptions import InvalidArgumentError, NumericFailureError
from src.services.channel import ccdf_gamma2, joint_ccdf, pdf_gamma2
from src.services.validate import (
    brute_force_mode_probs,
    conformance_grid,
    mc_joint_ccdf,
    mc_joint_ccdf_grid,
    normalization_residual,
    quadrature,
    scheme2_conformance,
    truncated_quadrature,
)


def test_quadrature_of_constant():
    result = quadrature(lambda x: 1.0, 0.0, 1.0)
    assert result.value == pytest.approx(1.0, abs=1e-12)
    assert result.abs_error_estimate <= 1e-9
    assert result.subdivisions >= 1


def test_quadrature_empty_interval():
    result = quadrature(math.exp, 2.0, 2.0)
    assert result.value == 0.0
    assert result.subdivisions == 0


@pytest.mark.parametrize(
    ("lo", "hi", "tol"),
    [(1.0, 0.0, None), (math.nan, 1.0, None), (0.0, 1.0, 0.0), (0.0, 1.0, -1e-3)],
)
def test_quadrature_rejects_bad_arguments(lo, hi, tol):
    with pytest.raises(InvalidArgumentError):
        quadrature(lambda x: x, lo, hi, tol)


def test_quadrature_reports_failure():
    with pytest.raises(NumericFailureError):
        quadrature(lambda x: math.sin(100.0 * x), 0.0, 10.0, tol=1e-12, limit=1)


def test_pip_density_integrates_to_one(near_stats):
    result = quadrature(lambda y: pdf_gamma2(near_stats, y), 0.0, math.inf, tol=1e-8)
    assert result.value == pytest.approx(1.0, abs=1e-7)


def test_peak_limited_density_integrates_to_one(peak_limited_stats):
    stats = peak_limited_stats
    result = truncated_quadrature(
        lambda y: pdf_gamma2(stats, y),
        0.0,
        max(stats.lambda_[1], stats.mu[1]),
        lambda y: ccdf_gamma2(stats, y),
    )
    assert result.value == pytest.approx(1.0, abs=1e-8)
    assert result.abs_error_estimate <= 1e-8


def test_monte_carlo_at_origin(near_stats):
    estimate = mc_joint_ccdf(near_stats, 0.0, 0.0, 0.0, Scheme.RELAY_ONLY, n=1_000, seed=1)
    assert estimate.estimate == 1.0
    assert estimate.std_error == 0.0
    assert estimate.samples == 1_000


def test_monte_carlo_rejects_empty_sample(near_stats):
    with pytest.raises(InvalidArgumentError):
        mc_joint_ccdf(near_stats, 0.0, 0.0, 0.0, Scheme.RELAY_ONLY, n=0, seed=1)


@pytest.mark.parametrize("scheme", list(Scheme))
def test_monte_carlo_agrees_with_closed_forms(near_stats, peak_limited_stats, scheme):
    points = [(0.0, 3.0, 0.0), (1.0, 3.0, 1.0), (3.0, 8.0, 0.5)]
    for stats in (near_stats, peak_limited_stats):
        estimates = mc_joint_ccdf_grid(stats, points, scheme, n=200_000, seed=17)
        for point, estimate in zip(points, estimates, strict=True):
            expected = joint_ccdf(stats, *point, scheme)
            assert estimate.agrees_with(expected, sigmas=4.0, floor=1e-6), point


@pytest.mark.parametrize("scheme", list(Scheme))
def test_brute_force_modes_match_table(near_results, near_stats, single_rate, scheme):
    table = near_results[scheme].table
    n = 200_000
    for w, alpha in enumerate(table.alphas):
        frequencies = brute_force_mode_probs(near_stats, single_rate, alpha, scheme, n=n, seed=w)
        assert math.fsum(frequencies.values()) == pytest.approx(1.0)
        for mode in Mode:
            expected = table.prob(mode, w)
            sigma = math.sqrt(expected * (1.0 - expected) / n)
            assert abs(frequencies[mode] - expected) <= 4.0 * sigma + 1e-12, (w, mode)


def test_brute_force_silent_channel(silent_stats, single_rate):
    frequencies = brute_force_mode_probs(silent_stats, single_rate, 0, Scheme.RELAY_ONLY, n=10_000, seed=0)
    assert frequencies[Mode.NONE] == 1.0


@pytest.mark.parametrize("scheme", list(Scheme))
def test_normalization_residual(near_stats, peak_limited_stats, single_rate, scheme):
    for stats in (near_stats, peak_limited_stats):
        assert normalization_residual(stats, single_rate, scheme) <= 1e-9


def test_conformance_grid_size():
    grid = conformance_grid()
    assert len(grid) == 125
    assert (0.0, 0.0, 0.0) in grid
    assert (10.0, 3.0, 0.5) in grid
    assert {point[0] for point in grid} == {0.0, 0.5, 1.0, 3.0, 10.0}


def test_exact_pip_conforms_at_top_of_grid(near_stats):
    report = scheme2_conformance(near_stats, grid=[(10.0, 10.0, 0.0), (0.0, 10.0, 3.0), (10.0, 10.0, 10.0)])
    assert report.verdict("exact_pip").max_deviation <= 1e-9


def test_quadrature_accepts_small_error_despite_warning():
    # Integrand of order 1e-9 on a kink: quad may warn while the estimate meets tol.
    result = quadrature(lambda x: 1e-9 * abs(x - 1.0 / 3.0), 0.0, 1.0, tol=1e-9, limit=1)
    assert result.abs_error_estimate <= 1e-9
    assert result.value == pytest.approx(1e-9 * 5.0 / 18.0, abs=1e-9)


def test_conformance_in_pip_regime(near_stats):
    report = scheme2_conformance(near_stats)
    assert len(report.rows) == 125
    assert report.verdict("exact_pip").conforming
    assert not report.verdict("printed_pip").conforming
    assert not report.verdict("printed_general").conforming
    for row in report.rows:
        assert row.exact_pip == pytest.approx(row.quadrature, abs=report.tolerance)


def test_conformance_with_peak_power(peak_limited_stats):
    report = scheme2_conformance(peak_limited_stats, grid=[(0.0, 3.0, 0.0), (1.0, 1.0, 3.0)])
    assert [verdict.name for verdict in report.verdicts] == ["printed_general"]
    assert report.rows[0].printed_pip is None
    with pytest.raises(KeyError):
        report.verdict("exact_pip")
