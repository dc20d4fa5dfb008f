"""
Closed-form performance engine.

Joint rate-triplet probabilities by inclusion-exclusion over the joint CCDF, per-mode link
rates on the α lattice, buffer-stability classification, coin-toss probabilities and the
optimum system throughput.
"""

from collections.abc import Mapping, Sequence
import itertools
import math

from loguru import logger

from src.constants.modes import (
    LINK1_FORWARD_MODES,
    LINK2_BACKWARD_MODES,
    Mode,
    Scheme,
    StabilityCaseKind,
)
from src.constants.scenarios import COMPARISON_EPS, IDENTITY_TOL, PROBABILITY_SLACK
from src.exceptions import InternalInconsistencyError, InvalidParameterError
from src.schemas.analytic import (
    AnalysisResult,
    CoinTosses,
    ModeRateTable,
    OperatingPoint,
    StabilityCase,
    ThroughputResult,
)
from src.schemas.channel import LinkStats
from src.schemas.rates import AlphaLattice, RateSet, RateTripletIndex
from src.services.channel import joint_ccdf
from src.services.lattice import (
    admissible_triplets,
    build_alpha_lattice,
    classify_mode,
    require_combinable,
    thresholds,
)


class TripletProbabilities:
    """
    Joint probabilities of rate-index triplets for one set of link statistics.

    CCDF values are cached by threshold-index triple, since neighbouring triplets share
    corners.
    """

    def __init__(self, stats: LinkStats, rates: RateSet, scheme: Scheme):
        if scheme == Scheme.COOPERATIVE:
            require_combinable(rates)
        self.stats = stats
        self.rates = rates
        self.scheme = scheme
        self._thresholds = thresholds(rates)
        self._cache: dict[tuple[int, int, int], float] = {}

    def _ccdf(self, i1: int, i2: int, i3: int) -> float:
        key = (i1, i2, i3)
        if key not in self._cache:
            self._cache[key] = joint_ccdf(
                self.stats,
                self._thresholds.g1[i1],
                self._thresholds.g2[i2],
                self._thresholds.g3[i3],
                self.scheme,
            )
        return self._cache[key]

    def _link2_offsets(self, k2: int, k3: int) -> tuple[int, ...]:
        if self.scheme == Scheme.RELAY_ONLY or k2 > k3:
            return 0, 1
        if k2 == k3:
            return -k2, 1
        return ()

    def probability(self, triplet: RateTripletIndex) -> float:
        if not self.rates.contains(triplet):
            raise InvalidParameterError(f"Triplet {triplet} outside the rate constellation")
        k1, k2, k3 = triplet
        terms = []
        for j1, j2, j3 in itertools.product((0, 1), self._link2_offsets(k2, k3), (0, 1)):
            sign = -1.0 if (j1 + max(j2, 0) + j3) % 2 else 1.0
            terms.append(sign * self._ccdf(k1 + j1, k2 + j2, k3 + j3))
        return math.fsum(terms)

    @property
    def cache_size(self) -> int:
        return len(self._cache)


def joint_prob(
    stats: LinkStats,
    rates: RateSet,
    triplet: RateTripletIndex,
    scheme: Scheme,
) -> float:
    """
    Probability that the maximal feasible rate indices equal the given triplet.

    Args:
        stats: Link statistics
        rates: Rate ladders
        triplet: Rate-index triplet (k1, k2, k3)
        scheme: Relay-only or cooperative combining

    Returns:
        Joint probability, 0 for triplets outside the combining prism

    Raises:
        InvalidParameterError: Triplet out of bounds, or cooperative scheme with r1 != r2
        NumericFailureError: Propagated from the combining quadrature
    """
    return TripletProbabilities(stats, rates, scheme).probability(triplet)


def mode_table(
    stats: LinkStats,
    rates: RateSet,
    lattice: AlphaLattice,
    scheme: Scheme,
) -> ModeRateTable:
    calculator = TripletProbabilities(stats, rates, scheme)
    probabilities = {
        triplet: calculator.probability(triplet)
        for triplet in admissible_triplets(rates, scheme)
    }
    logger.debug(
        f"Scheme {int(scheme)}: {len(probabilities)} triplets, "
        f"{calculator.cache_size} CCDF evaluations"
    )
    return tabulate_modes(probabilities, rates, lattice, scheme)


def tabulate_modes(
    probabilities: Mapping[RateTripletIndex, float],
    rates: RateSet,
    lattice: AlphaLattice,
    scheme: Scheme,
) -> ModeRateTable:
    """
    Mode probabilities and per-mode link rates for a given rate-triplet distribution.

    Triplets missing from probabilities carry no mass.
    """
    mode_probs = []
    link_rates = []
    for alpha in lattice.values:
        prob_terms: dict[Mode, list[float]] = {mode: [] for mode in Mode}
        rate_terms: dict[Mode, tuple[list[float], list[float], list[float]]] = {
            mode: ([], [], []) for mode in Mode
        }
        for triplet, probability in probabilities.items():
            mode = classify_mode(alpha, triplet, rates)
            prob_terms[mode].append(probability)
            k1, k2, k3 = triplet
            for link, k in ((1, k1), (2, k2), (3, k3)):
                rate_terms[mode][link - 1].append(probability * float(rates.rate(link, k)))
        mode_probs.append({mode: math.fsum(terms) for mode, terms in prob_terms.items()})
        link_rates.append(
            {
                mode: tuple(math.fsum(terms) for terms in per_link)
                for mode, per_link in rate_terms.items()
            }
        )

    return ModeRateTable(
        scheme=scheme,
        alphas=lattice.values,
        mode_probs=tuple(mode_probs),
        link_rates=tuple(link_rates),
        max_rate=float(rates.max_rate),
    )


def _r11(table: ModeRateTable, w: int) -> float:
    return table.rate(1, (Mode.ONE,), w)


def _r22(table: ModeRateTable, w: int) -> float:
    return table.rate(2, (Mode.TWO,), w)


def _tau_t(forward: float | None, backward: float | None) -> float:
    return forward if forward is not None else backward


def throughput_forms(table: ModeRateTable, w: int) -> tuple[float | None, float | None]:
    """
    Forward (w != W) and backward (w != 0) expressions of the system throughput at α_w.
    """
    alpha = float(table.alphas[w])
    forward = None
    backward = None
    if w != table.last_index:
        forward = (
            alpha * table.rate(1, LINK1_FORWARD_MODES, w)
            + (1.0 - alpha) * _r22(table, w)
            + table.rate(3, (Mode.THREE, Mode.NOT_ONE), w)
        )
    if w != 0:
        backward = (
            alpha * _r11(table, w)
            + (1.0 - alpha) * table.rate(2, LINK2_BACKWARD_MODES, w)
            + table.rate(3, (Mode.THREE, Mode.NOT_TWO), w)
        )
    return forward, backward


def _close(a: float, b: float) -> bool:
    return abs(a - b) <= IDENTITY_TOL * max(1.0, abs(a), abs(b))


def lattice_minimizers(per_alpha: Sequence[float]) -> tuple[int, ...]:
    """
    Lattice indices whose throughput is within IDENTITY_TOL of the minimum, ascending.

    Values that differ by less than the tolerance are treated as tied, so underflowing
    throughputs near zero all count as minimal.
    """
    lowest = min(per_alpha)
    return tuple(w for w, value in enumerate(per_alpha) if _close(value, lowest))


def balance_index(case: StabilityCase, last_index: int) -> int:
    """
    Lattice index whose throughput the stability case attains: α_W for Case2, α_{w*} otherwise.
    """
    if case.kind == StabilityCaseKind.CASE2:
        return last_index
    return case.w_star


def system_throughput(table: ModeRateTable, case: StabilityCase | None = None) -> ThroughputResult:
    """
    Minimum over the lattice of the system throughput and where it is attained.

    Ties within IDENTITY_TOL go to the balancing point of case when one is given, otherwise
    to the lowest index.

    Raises:
        InternalInconsistencyError: If forward and backward forms disagree at some α_w, or
            the balancing point of case is not a lattice minimizer
    """
    values = []
    for w in range(table.last_index + 1):
        forward, backward = throughput_forms(table, w)
        if forward is not None and backward is not None:
            if abs(forward - backward) > IDENTITY_TOL * max(1.0, abs(forward)):
                raise InternalInconsistencyError(
                    f"Throughput forms disagree at w={w}: {forward} vs {backward}"
                )
        values.append(_tau_t(forward, backward))
    minimizers = lattice_minimizers(values)
    w_star = minimizers[0]
    if case is not None:
        w_star = balance_index(case, table.last_index)
        if w_star not in minimizers:
            raise InternalInconsistencyError(
                f"{case.kind.value} balances at w={w_star}, lattice minimum at {minimizers}"
            )
    tau_t = values[w_star]
    return ThroughputResult(
        tau_t=tau_t,
        alpha_star=table.alphas[w_star],
        w_star=w_star,
        per_alpha=tuple(values),
    )


def _ge(a: float, b: float) -> bool:
    return a >= b - COMPARISON_EPS


def _refine_case3(table: ModeRateTable, z: int) -> StabilityCaseKind:
    r11 = _r11(table, z)
    r22 = _r22(table, z)
    if _ge(r11, table.rate(2, (Mode.TWO, Mode.NOT_THREE), z)):
        return StabilityCaseKind.CASE3A
    if _ge(r22, table.rate(1, (Mode.ONE, Mode.NOT_THREE), z)):
        return StabilityCaseKind.CASE3C
    return StabilityCaseKind.CASE3B


def classify_stability(table: ModeRateTable) -> StabilityCase:
    """
    Locate the lattice value at which the buffer can be balanced.

    Case1 when the largest outflow is below the smallest nonzero-weight inflow
    (R2²(α0) < R1¹(α1)), Case2 symmetrically at the top, otherwise an interior z with
    R2²(α_{z-1}) >= R1¹(α_z) and R1¹(α_{z+1}) >= R2²(α_z), refined into 3a/3b/3c.

    Raises:
        InternalInconsistencyError: If no case applies
    """
    last = table.last_index
    if _r22(table, 0) < _r11(table, 1) - COMPARISON_EPS:
        case = StabilityCase(kind=StabilityCaseKind.CASE1, w_star=0)
    elif _r11(table, last) < _r22(table, last - 1) - COMPARISON_EPS:
        case = StabilityCase(kind=StabilityCaseKind.CASE2, w_star=last - 1)
    elif last == 1:
        # R2²(α0) == R1¹(α1): the throttle probability is 1 and Case1 balances exactly.
        case = StabilityCase(kind=StabilityCaseKind.CASE1, w_star=0)
    else:
        candidates = [
            z
            for z in range(1, last)
            if _ge(_r22(table, z - 1), _r11(table, z)) and _ge(_r11(table, z + 1), _r22(table, z))
        ]
        if not candidates:
            raise InternalInconsistencyError("No stability case holds for this mode table")
        z = candidates[0]
        if len(candidates) > 1:
            minimizers = lattice_minimizers(system_throughput(table).per_alpha)
            z = next((index for index in candidates if index in minimizers), z)
            logger.warning(f"Several balancing points {candidates}, keeping z={z}")
        case = StabilityCase(kind=_refine_case3(table, z), w_star=z)
    logger.debug(f"Stability case {case.kind.value} at w*={case.w_star}")
    return case


def link_throughputs(
    table: ModeRateTable,
    w: int,
    tosses: CoinTosses,
) -> tuple[float, float, float]:
    """
    Long-run rates (τ1, τ2, τ3) of the selector running at α_w with the given coin tosses.
    """
    def rate(link: int, *modes: Mode) -> float:
        return table.rate(link, modes, w)

    tau1 = math.fsum(
        [
            tosses.p1_one * rate(1, Mode.ONE),
            tosses.p1_not2 * rate(1, Mode.NOT_TWO, Mode.ALL),
            tosses.p1_not3 * rate(1, Mode.NOT_THREE),
        ]
    )
    tau2 = math.fsum(
        [
            tosses.p2_two * rate(2, Mode.TWO),
            tosses.p2_not1 * rate(2, Mode.NOT_ONE, Mode.ALL),
            tosses.p2_not3 * rate(2, Mode.NOT_THREE),
        ]
    )
    tau3 = math.fsum(
        [
            rate(3, Mode.THREE),
            (1.0 - tosses.p1_not2) * rate(3, Mode.NOT_TWO),
            (1.0 - tosses.p2_not1) * rate(3, Mode.NOT_ONE),
            max(0.0, 1.0 - tosses.p2_not1 - tosses.p1_not2) * rate(3, Mode.ALL),
        ]
    )
    return tau1, tau2, tau3


def _ratio(numerator: float, denominator: float, label: str) -> float:
    """
    Solved coin-toss probability numerator/denominator, clipped to [0, 1].

    Clipping is accepted while the rate it leaves unbalanced, |numerator - p·denominator|,
    is within PROBABILITY_SLACK·denominator or COMPARISON_EPS. A tie set whose rate has
    underflowed therefore resolves to the nearest bound.
    """
    if denominator <= 0.0:
        return 0.0
    value = numerator / denominator
    clipped = min(max(value, 0.0), 1.0)
    if clipped == value:
        return value
    unbalanced = abs(numerator - clipped * denominator)
    if unbalanced > max(PROBABILITY_SLACK * denominator, COMPARISON_EPS):
        raise InternalInconsistencyError(f"Solved {label} = {value} outside [0, 1]")
    logger.warning(f"Clipped {label} from {value:.6g} to {clipped} (unbalanced rate {unbalanced:.3g})")
    return clipped


def _solve_tosses(
    table: ModeRateTable,
    case: StabilityCase,
) -> tuple[int, CoinTosses, float]:
    """
    Policy index, coin tosses and the buffered throughput predicted by the case formulas.
    """
    last = table.last_index
    match case.kind:
        case StabilityCaseKind.CASE1:
            w = min(1, last)
            p1_one = _ratio(_r22(table, 0), _r11(table, w), "P1^1")
            tosses = CoinTosses(p1_one=p1_one, p1_not2=0.0, p2_not1=1.0, p1_not3=0.0)
            return w, tosses, _r22(table, 0)
        case StabilityCaseKind.CASE2:
            w = last - 1
            p2_two = _ratio(_r11(table, last), _r22(table, w), "P2^2")
            tosses = CoinTosses(p2_two=p2_two, p1_not2=1.0, p2_not1=0.0, p1_not3=1.0)
            return w, tosses, _r11(table, last)

    z = case.w_star
    alpha = float(table.alphas[z])
    r11 = _r11(table, z)
    r22 = _r22(table, z)
    r2_two_not3 = table.rate(2, (Mode.TWO, Mode.NOT_THREE), z)
    r1_one_not3 = table.rate(1, (Mode.ONE, Mode.NOT_THREE), z)

    match case.kind:
        case StabilityCaseKind.CASE3A:
            p2_not1 = _ratio(
                r11 - r2_two_not3, table.rate(2, (Mode.NOT_ONE, Mode.ALL), z), "P2^~1"
            )
            return z, CoinTosses(p2_not1=p2_not1, p1_not2=0.0, p1_not3=0.0), r11
        case StabilityCaseKind.CASE3C:
            p1_not2 = _ratio(
                r22 - r1_one_not3, table.rate(1, (Mode.NOT_TWO, Mode.ALL), z), "P1^~2"
            )
            return z, CoinTosses(p1_not2=p1_not2, p2_not1=0.0, p1_not3=1.0), r22
        case _:
            tie_rate = table.rate(1, (Mode.NOT_THREE,), z) + table.rate(2, (Mode.NOT_THREE,), z)
            p1_not3 = _ratio(r2_two_not3 - r11, tie_rate, "P1^~3")
            from_link1 = r11 + (1.0 - alpha) * (r2_two_not3 - r11)
            from_link2 = r22 + alpha * (r1_one_not3 - r22)
            if not _close(from_link1, from_link2):
                raise InternalInconsistencyError(
                    f"Case 3b throughput expressions disagree: {from_link1} vs {from_link2}"
                )
            return z, CoinTosses(p1_not3=p1_not3, p1_not2=0.0, p2_not1=0.0), from_link1


def solve_operating_point(table: ModeRateTable, case: StabilityCase) -> OperatingPoint:
    """
    Coin-toss probabilities that balance the relay buffer, and the resulting throughputs.

    Args:
        table: Mode rate table over the whole lattice
        case: Output of classify_stability for the same table

    Returns:
        OperatingPoint with τ1 = τ2 and τ_t = τ2 + τ3

    Raises:
        InternalInconsistencyError: If a solved probability leaves [0, 1] or the balance fails
    """
    policy_index, tosses, predicted = _solve_tosses(table, case)
    tau1, tau2, tau3 = link_throughputs(table, policy_index, tosses)
    if not _close(tau1, tau2):
        raise InternalInconsistencyError(f"Buffer not balanced: tau1={tau1}, tau2={tau2}")
    if not _close(tau2, predicted):
        raise InternalInconsistencyError(
            f"Buffered throughput {tau2} differs from the case formula {predicted}"
        )
    tau_t = tau2 + tau3
    logger.debug(
        f"Operating point {case.kind.value}: alpha={table.alphas[policy_index]}, "
        f"tosses={tosses.model_dump()}, tau_t={tau_t:.6g}"
    )
    return OperatingPoint(
        case=case,
        alpha_star=table.alphas[case.w_star],
        policy_index=policy_index,
        policy_alpha=table.alphas[policy_index],
        tosses=tosses,
        tau1=tau1,
        tau2=tau2,
        tau3=tau3,
        tau_t=tau_t,
        tau_t_norm=tau_t / table.max_rate,
    )


def negative_control_operating_point(table: ModeRateTable, op: OperatingPoint) -> OperatingPoint:
    """
    Deliberately unbalanced policy: run at α_W with P1¹ = P2² = 1, keeping the tie tosses.
    """
    last = table.last_index
    tosses = op.tosses.model_copy(update={"p1_one": 1.0, "p2_two": 1.0})
    tau1, tau2, tau3 = link_throughputs(table, last, tosses)
    return OperatingPoint(
        case=op.case,
        alpha_star=op.alpha_star,
        policy_index=last,
        policy_alpha=table.alphas[last],
        tosses=tosses,
        tau1=tau1,
        tau2=tau2,
        tau3=tau3,
        tau_t=tau2 + tau3,
        tau_t_norm=(tau2 + tau3) / table.max_rate,
    )


def rate_identity_residuals(table: ModeRateTable) -> dict[str, float]:
    """
    Largest deviation of each rate-equality and rate-continuity identity over the lattice.

    Continuity is checked where both sides are interior: link 1 and link 2 for
    1 <= w <= W-1, link 3 for 1 <= w <= W. At the endpoints the forward link-1 and backward
    link-2 sets are empty and are reported as their raw rates.
    """
    last = table.last_index
    residuals = {
        "equality_not1": 0.0,
        "equality_not2": 0.0,
        "equality_not3": 0.0,
        "equality_all": 0.0,
        "continuity_link1": 0.0,
        "continuity_link2": 0.0,
        "continuity_link3": 0.0,
        "empty_boundary_sets": 0.0,
    }

    def bump(name: str, value: float):
        residuals[name] = max(residuals[name], abs(value))

    for w in range(last + 1):
        alpha = float(table.alphas[w])

        def rate(link: int, *modes: Mode, index: int = w) -> float:
            return table.rate(link, modes, index)

        bump("equality_not1", rate(3, Mode.NOT_ONE) - (1 - alpha) * rate(2, Mode.NOT_ONE))
        bump("equality_not2", rate(3, Mode.NOT_TWO) - alpha * rate(1, Mode.NOT_TWO))
        bump("equality_not3", alpha * rate(1, Mode.NOT_THREE) - (1 - alpha) * rate(2, Mode.NOT_THREE))
        bump("equality_all", rate(3, Mode.ALL) - alpha * rate(1, Mode.ALL))
        bump("equality_all", rate(3, Mode.ALL) - (1 - alpha) * rate(2, Mode.ALL))

        if 1 <= w <= last - 1:
            bump("continuity_link1", rate(1, *LINK1_FORWARD_MODES) - rate(1, Mode.ONE, index=w + 1))
            bump("continuity_link2", rate(2, *LINK2_BACKWARD_MODES) - rate(2, Mode.TWO, index=w - 1))
        if w >= 1:
            bump(
                "continuity_link3",
                rate(3, Mode.THREE, Mode.NOT_TWO) - rate(3, Mode.THREE, Mode.NOT_ONE, index=w - 1),
            )

    bump("empty_boundary_sets", table.rate(1, LINK1_FORWARD_MODES, 0))
    bump("empty_boundary_sets", table.rate(2, LINK2_BACKWARD_MODES, last))
    return residuals


def analyze(stats: LinkStats, rates: RateSet, scheme: Scheme) -> AnalysisResult:
    """
    Full analytic pipeline: lattice, mode table, stability case, operating point, throughput.

    Raises:
        InternalInconsistencyError: If the operating point and the lattice minimum disagree
    """
    lattice = build_alpha_lattice(rates)
    table = mode_table(stats, rates, lattice, scheme)
    case = classify_stability(table)
    op = solve_operating_point(table, case)
    throughput = system_throughput(table, case)
    if not _close(op.tau_t, throughput.tau_t):
        raise InternalInconsistencyError(
            f"Operating point throughput {op.tau_t} differs from lattice minimum {throughput.tau_t}"
        )
    return AnalysisResult(table=table, case=case, operating_point=op, throughput=throughput)
