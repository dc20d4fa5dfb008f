"""
Fading and interference channel model.

Instantaneous SNRs follow γ_i = min(γmax, γp / |g_i|²) · |h_i|² with Rayleigh fading on the
data links (|h_i|² exponential with mean Ω_h,i) and on the interference links (|g_i|² exponential
with mean Ω_g,i). Links 1 and 3 share the source interference fade g1.
"""

import math

from loguru import logger
import numpy as np
from scipy.integrate import quad

from src.config import settings
from src.constants.modes import Scheme
from src.exceptions import (
    InvalidArgumentError,
    InvalidParameterError,
    InvalidStateError,
    NumericFailureError,
)
from src.schemas.channel import LinkStats, PowerConstraints, SnrTriplet, SystemGeometry


def derive_stats(geom: SystemGeometry, power: PowerConstraints) -> LinkStats:
    """
    Channel variances and average SNR parameters of the three links.

    Args:
        geom: Node distances and path-loss exponent
        power: Peak transmit SNR and interference limit (linear scale)

    Returns:
        LinkStats with λ_i = γmax·Ω_h,i, μ_i = γp·Ω_h,i/Ω_g,i and p_i = exp(-μ_i/λ_i)

    Raises:
        InvalidParameterError: On non-positive distances, exponent or γp, or negative γmax
    """
    distances = {"d1": geom.d1, "d2": geom.d2, "d3": geom.d3, "d1p": geom.d1p, "d2p": geom.d2p}
    for name, value in distances.items():
        if not value > 0 or not math.isfinite(value):
            raise InvalidParameterError(f"Distance {name} must be positive and finite, got {value}")
    if not geom.alpha_pl > 0:
        raise InvalidParameterError(f"Path-loss exponent must be positive, got {geom.alpha_pl}")
    if not power.gamma_p > 0 or not math.isfinite(power.gamma_p):
        raise InvalidParameterError(f"gamma_p must be positive and finite, got {power.gamma_p}")
    if not power.gamma_max >= 0:
        raise InvalidParameterError(f"gamma_max must be nonnegative, got {power.gamma_max}")

    shadowing = 10.0 ** (-geom.shadowing_db / 10.0)
    omega_h = (
        geom.d1 ** (-geom.alpha_pl),
        geom.d2 ** (-geom.alpha_pl),
        geom.d3 ** (-geom.alpha_pl) * shadowing,
    )
    omega_g1 = geom.d1p ** (-geom.alpha_pl)
    omega_g = (omega_g1, geom.d2p ** (-geom.alpha_pl), omega_g1)

    lambda_ = tuple(power.gamma_max * oh for oh in omega_h)
    mu = tuple(power.gamma_p * oh / og for oh, og in zip(omega_h, omega_g, strict=True))
    if power.is_pip:
        p = (1.0, 1.0, 1.0)
    elif power.is_degenerate:
        logger.warning("gamma_max = 0: every link is silent")
        p = (0.0, 0.0, 0.0)
    else:
        p = tuple(math.exp(-m / lam) for m, lam in zip(mu, lambda_, strict=True))

    stats = LinkStats(
        omega_h=omega_h,
        omega_g=omega_g,
        lambda_=lambda_,
        mu=mu,
        p=p,
        gamma_max=power.gamma_max,
        gamma_p=power.gamma_p,
    )
    logger.debug(f"Derived link stats: mu={stats.mu}, p={stats.p}, pip={stats.is_pip}")
    return stats


def sample_snr_arrays(stats: LinkStats, rng: np.random.Generator, n: int) -> np.ndarray:
    """
    Draw n independent SNR triplets as an (n, 3) array.
    """
    h = rng.exponential(scale=stats.omega_h, size=(n, 3))
    return sample_transmit_snr(stats, rng, n) * h


def sample_transmit_snr(stats: LinkStats, rng: np.random.Generator, n: int) -> np.ndarray:
    """
    Transmit SNRs min(γmax, γp/|g_i|²) as an (n, 3) array; columns 0 and 2 share g1.

    A column sits below γmax exactly when the interference limit binds, which happens with
    probability p_i.
    """
    g1 = rng.exponential(scale=stats.omega_g[0], size=n)
    g2 = rng.exponential(scale=stats.omega_g[1], size=n)
    g = np.column_stack((g1, g2, g1))
    with np.errstate(divide="ignore"):
        return np.minimum(stats.gamma_max, stats.gamma_p / g)


def sample_snr_inverse(stats: LinkStats, rng: np.random.Generator, n: int) -> np.ndarray:
    """
    Same law as sample_snr_arrays, drawn through the inverse transmit SNR
    G_i = max(1/γmax, |g_i|²/γp) and γ_i = |h_i|² / G_i.
    """
    h = rng.exponential(scale=stats.omega_h, size=(n, 3))
    g1 = rng.exponential(scale=stats.omega_g[0], size=n)
    g2 = rng.exponential(scale=stats.omega_g[1], size=n)
    g = np.column_stack((g1, g2, g1))
    floor = math.inf if stats.is_degenerate else 1.0 / stats.gamma_max
    inverse = np.maximum(floor, g / stats.gamma_p)
    with np.errstate(divide="ignore"):
        return h / inverse


def sample_snr_triplet(stats: LinkStats, rng: np.random.Generator) -> SnrTriplet:
    g1, g2, g3 = sample_snr_arrays(stats, rng, 1)[0]
    return SnrTriplet(g1=float(g1), g2=float(g2), g3=float(g3))


def _decay(y: float, lam: float) -> float:
    if y == 0.0 or math.isinf(lam):
        return 1.0
    if lam == 0.0:
        return 0.0
    return math.exp(-y / lam)


def _check_arguments(*values: float):
    for value in values:
        if value < 0 or math.isnan(value):
            raise InvalidArgumentError(f"SNR argument must be nonnegative, got {value}")


def ccdf_gamma2(stats: LinkStats, y: float) -> float:
    """
    Pr{γ2 ≥ y} = e^(-y/λ2)·[1 - p2 + p2/(1 + y/μ2)].
    """
    _check_arguments(y)
    if math.isinf(y):
        return 0.0
    lam, mu, p = stats.lambda_[1], stats.mu[1], stats.p[1]
    return _decay(y, lam) * (1.0 - p + p / (1.0 + y / mu))


def pdf_gamma2(stats: LinkStats, y: float) -> float:
    """
    Density of γ2.

    In the PIP regime this is (1/μ2)/(1 + y/μ2)². With γmax = 0 the law is a point mass
    at 0 and the density part is 0.
    """
    _check_arguments(y)
    if math.isinf(y):
        return 0.0
    lam, mu, p = stats.lambda_[1], stats.mu[1], stats.p[1]
    if lam == 0.0:
        return 0.0
    shape = 1.0 + y / mu
    rational = (p / mu) / (shape * shape)
    if math.isinf(lam):
        return rational
    return math.exp(-y / lam) * ((1.0 - p) / lam + p / (lam * shape) + rational)


def joint_ccdf_13(stats: LinkStats, y1: float, y3: float) -> float:
    """
    Pr{γ1 ≥ y1, γ3 ≥ y3} for the pair sharing the source interference fade.
    """
    _check_arguments(y1, y3)
    if math.isinf(y1) or math.isinf(y3):
        return 0.0
    lam1, lam3 = stats.lambda_[0], stats.lambda_[2]
    mu1, mu3 = stats.mu[0], stats.mu[2]
    p1 = stats.p[0]
    return _decay(y1, lam1) * _decay(y3, lam3) * (1.0 - p1 + p1 / (1.0 + y1 / mu1 + y3 / mu3))


def joint_ccdf_scheme1(stats: LinkStats, y1: float, y2: float, y3: float) -> float:
    _check_arguments(y1, y2, y3)
    return joint_ccdf_13(stats, y1, y3) * ccdf_gamma2(stats, y2)


def _combining_integral(stats: LinkStats, y1: float, y2: float, y4: float) -> float:
    """
    ∫_0^y4 Pr{γ1 ≥ y1, γ3 ≥ y2 - x} f_γ2(x) dx by adaptive quadrature.

    Convergence is judged on the error estimate alone: quad warnings on integrands near
    the tolerance floor are logged and accepted when the estimate meets
    max(QUAD_TOL, QUAD_REL_TOL·|value|).
    """
    if y4 == 0.0:
        return 0.0
    result = quad(
        lambda x: joint_ccdf_13(stats, y1, max(y2 - x, 0.0)) * pdf_gamma2(stats, x),
        0.0,
        y4,
        epsabs=settings.QUAD_TOL,
        epsrel=settings.QUAD_REL_TOL,
        limit=settings.QUAD_LIMIT,
        full_output=1,
    )
    value, abs_error = result[0], result[1]
    if abs_error > max(settings.QUAD_TOL, settings.QUAD_REL_TOL * abs(value)):
        raise NumericFailureError(
            f"Combining integral did not converge on [0, {y4}]",
            achieved_tolerance=abs_error,
            partial_value=value,
        )
    if len(result) > 3:
        logger.debug(f"Combining integral on [0, {y4}] accepted at error {abs_error:.3g}: {result[3]}")
    return value


def joint_ccdf_scheme2(stats: LinkStats, y1: float, y2: float, y3: float) -> float:
    """
    Pr{γ1 ≥ y1, γ2 + γ3 ≥ y2, γ3 ≥ y3} when the destination combines relay and source.

    Conditioning on γ2 = x: above y4 = max(y2 - y3, 0) the γ3 ≥ y3 constraint dominates,
    below it γ3 must reach y2 - x.

    Raises:
        InvalidArgumentError: On a negative argument
        NumericFailureError: If the quadrature does not reach the configured tolerance
    """
    _check_arguments(y1, y2, y3)
    if math.isinf(y1) or math.isinf(y2) or math.isinf(y3):
        return 0.0
    y4 = max(y2 - y3, 0.0)
    upper = ccdf_gamma2(stats, y4) * joint_ccdf_13(stats, y1, y3)
    return upper + _combining_integral(stats, y1, y2, y4)


def joint_ccdf_scheme2_printed(stats: LinkStats, y1: float, y2: float, y3: float) -> float:
    """
    Three-term form I - II + III with II = F_γ2(y2)·F13(y1, y2).

    Kept for conformance reporting; it falls short of the definitional probability by II whenever
    II is nonzero. Use joint_ccdf_scheme2.
    """
    _check_arguments(y1, y2, y3)
    if math.isinf(y1) or math.isinf(y2) or math.isinf(y3):
        return 0.0
    y4 = max(y2 - y3, 0.0)
    first = ccdf_gamma2(stats, y4) * joint_ccdf_13(stats, y1, y3)
    second = (1.0 - ccdf_gamma2(stats, y2)) * joint_ccdf_13(stats, y1, y2)
    return first - second + _combining_integral(stats, y1, y2, y4)


def _require_pip(stats: LinkStats):
    if not stats.is_pip:
        raise InvalidStateError("PIP closed form requires gamma_max = inf")


def joint_ccdf_scheme2_pip(stats: LinkStats, y1: float, y2: float, y3: float) -> float:
    """
    PIP closed form of the three-term expression, evaluated term by term.

    Collapses to 1/(1 + y1/μ1 + y3/μ3) for y2 ≤ y3 but departs from the definitional
    probability when y2 > y3; see joint_ccdf_scheme2_pip_exact for the conforming form.

    Raises:
        InvalidStateError: Outside the PIP regime
    """
    _require_pip(stats)
    _check_arguments(y1, y2, y3)
    if math.isinf(y1) or math.isinf(y2) or math.isinf(y3):
        return 0.0
    mu1, mu2, mu3 = stats.mu
    a = 1.0 + y1 / mu1
    y4 = max(y2 - y3, 0.0)
    t = y4 / mu2
    c = a + (y2 + mu2) / mu3

    head = 1.0 / ((a + y3 / mu3) * (1.0 + t))
    b = 1.0 / (a + max(y2, y3) / mu3)
    cdf2 = 1.0 - 1.0 / (1.0 + y2 / mu2)
    fraction = t / ((1.0 + t) * c)
    log_arg = (1.0 + t / ((mu3 / mu2) * (a + y3 / mu3))) * (1.0 + t)
    tail = (mu2 / mu3) / (c * c) * math.log(log_arg)
    return head - b * cdf2 * fraction + tail


def joint_ccdf_scheme2_pip_exact(stats: LinkStats, y1: float, y2: float, y3: float) -> float:
    """
    Closed form of joint_ccdf_scheme2 in the PIP regime.

    With A = 1 + y1/μ1, T = y4/μ2 and c = A + (y2 + μ2)/μ3:
    F = 1/((A + y3/μ3)(1 + T)) + (1/c)·T/(1 + T) + (μ2/μ3)/c²·ln[(1 + T)(A + y2/μ3)/(A + y3/μ3)]

    Raises:
        InvalidStateError: Outside the PIP regime
    """
    _require_pip(stats)
    _check_arguments(y1, y2, y3)
    if math.isinf(y1) or math.isinf(y2) or math.isinf(y3):
        return 0.0
    mu1, mu2, mu3 = stats.mu
    a = 1.0 + y1 / mu1
    y4 = max(y2 - y3, 0.0)
    t = y4 / mu2
    c = a + (y2 + mu2) / mu3
    upper = 1.0 / ((a + y3 / mu3) * (1.0 + t))
    if y4 == 0.0:
        return upper
    ratio = (a + y2 / mu3) / (a + y3 / mu3)
    lower = (t / (1.0 + t)) / c + (mu2 / mu3) / (c * c) * (math.log1p(t) + math.log(ratio))
    return upper + lower


def joint_ccdf(stats: LinkStats, y1: float, y2: float, y3: float, scheme: Scheme) -> float:
    if scheme == Scheme.RELAY_ONLY:
        return joint_ccdf_scheme1(stats, y1, y2, y3)
    return joint_ccdf_scheme2(stats, y1, y2, y3)
