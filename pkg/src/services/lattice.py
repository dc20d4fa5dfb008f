from collections.abc import Iterator, Sequence
from fractions import Fraction
import itertools

from loguru import logger

from src.constants.modes import Mode, Scheme
from src.exceptions import InvalidParameterError
from src.schemas.rates import AlphaLattice, RateSet, RateTripletIndex, SnrThresholds
from src.utils.units import to_fraction


TIE_BY_EXCLUDED_LINK = {0: Mode.NOT_ONE, 1: Mode.NOT_TWO, 2: Mode.NOT_THREE}
SINGLE_BY_LINK = {0: Mode.ONE, 1: Mode.TWO, 2: Mode.THREE}


def rate_ladder(levels: int, scale: Fraction | float | str) -> tuple[Fraction, ...]:
    """
    Rates [0, S, 2S, ..., K·S] for K levels with scale S.
    """
    step = to_fraction(scale)
    if levels < 1 or step <= 0:
        raise InvalidParameterError(f"Need levels >= 1 and scale > 0, got {levels}, {scale}")
    return tuple(step * k for k in range(levels + 1))


def thresholds(rates: RateSet) -> SnrThresholds:
    """
    SNR thresholds 2^R - 1 for each link with a +inf sentinel after the top rate.

    Link 3 uses the ladder of link 1.
    """
    def ladder(values: Sequence[Fraction]) -> tuple[float, ...]:
        return (*(2.0 ** float(rate) - 1.0 for rate in values), float("inf"))

    link1 = ladder(rates.r1)
    return SnrThresholds(g1=link1, g2=ladder(rates.r2), g3=link1)


def build_alpha_lattice(rates: RateSet) -> AlphaLattice:
    """
    Weights α at which two or three decision metrics can tie.

    Candidates are 1 - R3/R2 (links 2 and 3), R2/(R1 + R2) (links 1 and 2) and R3/R1
    (links 1 and 3) over all rate pairs with nonzero denominator. Values outside [0, 1]
    cannot produce a tie and are dropped; 0 and 1 are always kept.
    """
    r1 = rates.r1
    r2 = rates.r2
    r3 = rates.r1
    candidates: set[Fraction] = {Fraction(0), Fraction(1)}

    for rate3, rate2 in itertools.product(r3, r2):
        if rate2 != 0:
            candidates.add(1 - rate3 / rate2)
    for rate1, rate2 in itertools.product(r1, r2):
        if rate1 + rate2 != 0:
            candidates.add(rate2 / (rate1 + rate2))
    for rate3, rate1 in itertools.product(r3, r1):
        if rate1 != 0:
            candidates.add(rate3 / rate1)

    values = tuple(sorted(value for value in candidates if 0 <= value <= 1))
    logger.debug(f"Alpha lattice with {len(values)} values from {len(candidates)} candidates")
    return AlphaLattice(values=values)


def decision_metrics(
    alpha: Fraction,
    triplet: RateTripletIndex,
    rates: RateSet,
) -> tuple[Fraction, Fraction, Fraction]:
    """
    Weighted rates (α·R1, (1 - α)·R2, R3) of a rate-index triplet, exact.
    """
    k1, k2, k3 = triplet
    return alpha * rates.r1[k1], (1 - alpha) * rates.r2[k2], rates.r1[k3]


def mode_of_metrics(metrics: Sequence[Fraction]) -> Mode:
    top = max(metrics)
    if top == 0:
        return Mode.NONE
    winners = [index for index, value in enumerate(metrics) if value == top]
    if len(winners) == 1:
        return SINGLE_BY_LINK[winners[0]]
    if len(winners) == 2:
        excluded = ({0, 1, 2} - set(winners)).pop()
        return TIE_BY_EXCLUDED_LINK[excluded]
    return Mode.ALL


def classify_mode(alpha: Fraction, triplet: RateTripletIndex, rates: RateSet) -> Mode:
    return mode_of_metrics(decision_metrics(alpha, triplet, rates))


def admissible_triplets(rates: RateSet, scheme: Scheme) -> Iterator[RateTripletIndex]:
    """
    Rate-index triplets of the constellation: the full cube for the relay-only scheme,
    the prism k2 >= k3 when the destination combines.
    """
    for k1, k2, k3 in itertools.product(
        range(rates.k1_max + 1), range(rates.k2_max + 1), range(rates.k3_max + 1)
    ):
        if scheme == Scheme.COOPERATIVE and k2 < k3:
            continue
        yield RateTripletIndex(k1, k2, k3)


def enumerate_domain_sets(
    alpha: Fraction,
    rates: RateSet,
    scheme: Scheme,
) -> dict[Mode, frozenset[RateTripletIndex]]:
    members: dict[Mode, set[RateTripletIndex]] = {mode: set() for mode in Mode}
    for triplet in admissible_triplets(rates, scheme):
        members[classify_mode(alpha, triplet, rates)].add(triplet)
    return {mode: frozenset(triplets) for mode, triplets in members.items()}


def require_combinable(rates: RateSet):
    """
    The combining constellation pairs index k of link 2 with index k of link 3, so both
    ladders must match.

    Raises:
        InvalidParameterError: If r1 and r2 differ
    """
    if rates.r1 != rates.r2:
        raise InvalidParameterError("Cooperative scheme requires identical rate ladders r1 == r2")
