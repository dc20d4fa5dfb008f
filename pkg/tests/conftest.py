from fractions import Fraction

import pytest

from src.constants.modes import Mode, Scheme
from src.constants.scenarios import REFERENCE_SCENARIOS
from src.schemas.analytic import ModeRateTable
from src.schemas.channel import PowerConstraints, SystemGeometry
from src.schemas.experiment import ExperimentConfig
from src.schemas.rates import RateSet
from src.services.analytic import analyze
from src.services.channel import derive_stats
from src.services.experiments import build_inputs
from src.utils.units import db_to_linear


SINGLE_RATE = RateSet(r1=(0, 2), r2=(0, 2))


@pytest.fixture(scope="session")
def near_config() -> ExperimentConfig:
    return ExperimentConfig.model_validate(REFERENCE_SCENARIOS["relay_near_primary"])


@pytest.fixture(scope="session")
def far_config() -> ExperimentConfig:
    return ExperimentConfig.model_validate(REFERENCE_SCENARIOS["relay_far_from_primary"])


@pytest.fixture(scope="session")
def near_stats(near_config):
    return build_inputs(near_config).stats


@pytest.fixture(scope="session")
def far_stats(far_config):
    return build_inputs(far_config).stats


@pytest.fixture(scope="session")
def single_rate() -> RateSet:
    return SINGLE_RATE


@pytest.fixture(scope="session")
def peak_limited_stats():
    """
    Finite peak power (10 dB) so the peak-power branch of every law is active.
    """
    geometry = SystemGeometry(d1=1, d2=1, d3=2, d1p=3, d2p=1.5)
    power = PowerConstraints(gamma_max=db_to_linear(10), gamma_p=db_to_linear(-5))
    return derive_stats(geometry, power)


@pytest.fixture(scope="session")
def silent_stats():
    geometry = SystemGeometry(d1=1, d2=1, d3=2, d1p=3, d2p=1.5)
    return derive_stats(geometry, PowerConstraints(gamma_max=0.0, gamma_p=db_to_linear(-5)))


@pytest.fixture(scope="session")
def near_results(near_stats):
    return {scheme: analyze(near_stats, SINGLE_RATE, scheme) for scheme in Scheme}


@pytest.fixture(scope="session")
def far_results(far_stats):
    return {scheme: analyze(far_stats, SINGLE_RATE, scheme) for scheme in Scheme}


def rate_table(rows: list[dict[Mode, tuple[float, float, float]]]) -> ModeRateTable:
    """
    Table on an evenly spaced lattice with the given per-mode link rates; modes left out
    carry no rate. Mode probabilities are all zero.
    """
    last = len(rows) - 1
    alphas = tuple(Fraction(w, last) for w in range(last + 1))
    mode_probs = tuple({mode: 0.0 for mode in Mode} for _ in rows)
    link_rates = tuple({mode: row.get(mode, (0.0, 0.0, 0.0)) for mode in Mode} for row in rows)
    return ModeRateTable(
        scheme=Scheme.RELAY_ONLY,
        alphas=alphas,
        mode_probs=mode_probs,
        link_rates=link_rates,
        max_rate=2.0,
    )


def synthetic_table(r11: list[float], r22: list[float]) -> ModeRateTable:
    """
    Table on an evenly spaced lattice where only modes 1 and 2 carry rate.
    """
    return rate_table(
        [
            {Mode.ONE: (one, 0.0, 0.0), Mode.TWO: (0.0, two, 0.0)}
            for one, two in zip(r11, r22, strict=True)
        ]
    )
