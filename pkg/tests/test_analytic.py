from fractions import Fraction
import math

from hypothesis import given, settings as hypothesis_settings, strategies as st
import pytest

from src.constants.modes import Mode, Scheme, StabilityCaseKind
from src.exceptions import InternalInconsistencyError, InvalidParameterError
from src.schemas.analytic import CoinTosses, StabilityCase
from src.schemas.channel import PowerConstraints, SystemGeometry
from src.schemas.rates import RateSet, RateTripletIndex
from src.services.analytic import (
    analyze,
    balance_index,
    classify_stability,
    joint_prob,
    lattice_minimizers,
    link_throughputs,
    mode_table,
    negative_control_operating_point,
    rate_identity_residuals,
    solve_operating_point,
    system_throughput,
    tabulate_modes,
    throughput_forms,
)
from src.services.channel import ccdf_gamma2, derive_stats, joint_ccdf_13
from src.services.lattice import build_alpha_lattice, rate_ladder
from src.utils.units import db_to_linear
from tests.conftest import rate_table, synthetic_table


TABLE_TOL = 2e-3

NEAR_RELAY_ONLY_MODES = [
    {Mode.TWO: 0.1935, Mode.THREE: 0.1935, Mode.NOT_ONE: 0.0689, Mode.NONE: 0.5440},
    {
        Mode.ONE: 0.3686,
        Mode.TWO: 0.0624,
        Mode.THREE: 0.2624,
        Mode.NOT_THREE: 0.1311,
        Mode.NONE: 0.1754,
    },
    {Mode.ONE: 0.4997, Mode.THREE: 0.0221, Mode.NOT_TWO: 0.2403, Mode.NONE: 0.2379},
]

NORMALISED_THROUGHPUT = {
    ("near", Scheme.RELAY_ONLY): (0.4559, 0.5435, 0.7621),
    ("near", Scheme.COOPERATIVE): (0.5313, 0.5521, 0.7621),
    ("far", Scheme.RELAY_ONLY): (0.8082, 0.6003, 0.7621),
    ("far", Scheme.COOPERATIVE): (0.8560, 0.6062, 0.7621),
}

THREE_LEVELS = RateSet(r1=(0, 1, 2), r2=(0, 1, 2))

# Hand-made rate-triplet laws on {0, 1, 2}, lattice {0, 1/3, 1/2, 2/3, 1}. The first puts a
# link 2 / link 3 tie at α = 1/2, the second its mirror image between links 1 and 3.
LINK2_TIE_LAW = {
    RateTripletIndex(2, 0, 0): 0.30,
    RateTripletIndex(0, 2, 1): 0.25,
    RateTripletIndex(0, 1, 0): 0.20,
    RateTripletIndex(0, 0, 0): 0.25,
}
LINK1_TIE_LAW = {
    RateTripletIndex(0, 2, 0): 0.30,
    RateTripletIndex(2, 0, 1): 0.25,
    RateTripletIndex(1, 0, 0): 0.20,
    RateTripletIndex(0, 0, 0): 0.25,
}
LINK2_TIE_THROUGHPUT = (0.7, 2 / 3, 0.65, 0.4 + 0.2 / 3 + 0.25, 0.85)


@pytest.fixture(scope="module")
def results(near_results, far_results):
    return {"near": near_results, "far": far_results}


@pytest.mark.parametrize("w", [0, 1, 2])
def test_near_relay_only_mode_rows(near_results, w):
    table = near_results[Scheme.RELAY_ONLY].table
    expected = NEAR_RELAY_ONLY_MODES[w]
    for mode in Mode:
        assert table.prob(mode, w) == pytest.approx(expected.get(mode, 0.0), abs=TABLE_TOL)


def test_far_cooperative_first_row(far_results):
    table = far_results[Scheme.COOPERATIVE].table
    assert table.prob(Mode.TWO, 0) == pytest.approx(0.5936, abs=TABLE_TOL)
    assert table.prob(Mode.NOT_ONE, 0) == pytest.approx(0.2624, abs=TABLE_TOL)
    assert table.prob(Mode.NONE, 0) == pytest.approx(0.1440, abs=TABLE_TOL)
    assert table.prob(Mode.THREE, 0) == 0.0


@pytest.mark.parametrize(("block", "scheme"), list(NORMALISED_THROUGHPUT))
def test_throughput_per_alpha(results, block, scheme):
    result = results[block][scheme]
    normalised = [value / result.table.max_rate for value in result.throughput.per_alpha]
    assert normalised == pytest.approx(NORMALISED_THROUGHPUT[(block, scheme)], abs=TABLE_TOL)


@pytest.mark.parametrize("scheme", list(Scheme))
def test_near_block_is_case1(near_results, scheme):
    result = near_results[scheme]
    assert result.case == StabilityCase(kind=StabilityCaseKind.CASE1, w_star=0)
    op = result.operating_point
    assert op.policy_index == 1
    assert op.policy_alpha == Fraction(1, 2)
    assert op.tau_t_norm == pytest.approx(NORMALISED_THROUGHPUT[("near", scheme)][0], abs=TABLE_TOL)
    assert result.throughput.w_star == 0


@pytest.mark.parametrize("scheme", list(Scheme))
def test_far_block_is_interior(far_results, scheme):
    result = far_results[scheme]
    assert result.case == StabilityCase(kind=StabilityCaseKind.CASE3B, w_star=1)
    assert result.throughput.w_star == 1
    assert result.operating_point.alpha_star == Fraction(1, 2)


def test_far_relay_only_coin_toss(far_results):
    tosses = far_results[Scheme.RELAY_ONLY].operating_point.tosses
    assert tosses.p1_not3 == pytest.approx(0.5623, abs=TABLE_TOL)
    assert tosses.p1_not3 + tosses.p2_not3 == pytest.approx(1.0)


@pytest.mark.parametrize("block", ["near", "far"])
@pytest.mark.parametrize("scheme", list(Scheme))
def test_operating_point_balances_buffer(results, block, scheme):
    op = results[block][scheme].operating_point
    assert op.tau1 == pytest.approx(op.tau2, abs=1e-9)
    assert op.tau_t == pytest.approx(op.tau2 + op.tau3, abs=1e-12)
    assert op.tau_t == pytest.approx(results[block][scheme].throughput.tau_t, abs=1e-9)
    for value in op.tosses.model_dump().values():
        assert 0.0 <= value <= 1.0


@pytest.mark.parametrize("block", ["near", "far"])
def test_combining_never_hurts(results, block):
    relay_only = results[block][Scheme.RELAY_ONLY].operating_point.tau_t
    combining = results[block][Scheme.COOPERATIVE].operating_point.tau_t
    assert combining >= relay_only - 1e-6


def test_combining_gain_larger_when_relay_near_primary(results):
    def gap(block: str) -> float:
        return (
            results[block][Scheme.COOPERATIVE].operating_point.tau_t
            - results[block][Scheme.RELAY_ONLY].operating_point.tau_t
        )

    assert gap("near") >= gap("far")


def test_joint_prob_single_triplets(near_stats, single_rate):
    # P(γ1 < 3, γ2 >= 3, γ3 < 3), the relay-only mode-2 slot at α1
    assert joint_prob(near_stats, single_rate, RateTripletIndex(0, 1, 0), Scheme.RELAY_ONLY) == (
        pytest.approx(0.0624, abs=TABLE_TOL)
    )
    assert joint_prob(near_stats, single_rate, RateTripletIndex(0, 0, 1), Scheme.COOPERATIVE) == 0.0


def test_mode_two_factorises_in_pip(near_results, near_stats):
    expected = ccdf_gamma2(near_stats, 3.0) * (1.0 - joint_ccdf_13(near_stats, 0.0, 3.0))
    assert near_results[Scheme.RELAY_ONLY].table.prob(Mode.TWO, 0) == pytest.approx(expected, abs=1e-12)


def test_joint_prob_rejects_bad_input(near_stats, single_rate):
    with pytest.raises(InvalidParameterError):
        joint_prob(near_stats, single_rate, RateTripletIndex(2, 0, 0), Scheme.RELAY_ONLY)
    with pytest.raises(InvalidParameterError):
        joint_prob(near_stats, RateSet(r1=(0, 1), r2=(0, 2)), RateTripletIndex(0, 0, 0), Scheme.COOPERATIVE)


def test_throughput_forms_at_endpoints(near_results):
    table = near_results[Scheme.RELAY_ONLY].table
    forward, backward = throughput_forms(table, 0)
    assert backward is None
    assert forward is not None
    forward, backward = throughput_forms(table, table.last_index)
    assert forward is None
    forward, backward = throughput_forms(table, 1)
    assert forward == pytest.approx(backward, abs=1e-9)


def test_classify_case2_and_solve():
    table = synthetic_table(r11=[0.0, 0.2, 0.2], r22=[1.5, 0.8, 0.0])
    case = classify_stability(table)
    assert case == StabilityCase(kind=StabilityCaseKind.CASE2, w_star=1)
    op = solve_operating_point(table, case)
    assert op.policy_index == 1
    assert op.tosses.p2_two == pytest.approx(0.25)
    assert op.tau1 == pytest.approx(0.2)
    assert op.tau2 == pytest.approx(0.2)


def test_classify_case1_on_single_step_lattice():
    table = synthetic_table(r11=[0.0, 1.0], r22=[0.5, 0.5])
    case = classify_stability(table)
    assert case.kind == StabilityCaseKind.CASE1
    op = solve_operating_point(table, case)
    assert op.tosses.p1_one == pytest.approx(0.5)


@pytest.mark.parametrize(
    ("law", "kind", "toss", "per_alpha"),
    [
        (LINK2_TIE_LAW, StabilityCaseKind.CASE3A, "p2_not1", LINK2_TIE_THROUGHPUT),
        (LINK1_TIE_LAW, StabilityCaseKind.CASE3C, "p1_not2", LINK2_TIE_THROUGHPUT[::-1]),
    ],
    ids=["link2-tie", "link1-tie"],
)
def test_interior_case_solved_by_tie_toss(law, kind, toss, per_alpha):
    table = tabulate_modes(law, THREE_LEVELS, build_alpha_lattice(THREE_LEVELS), Scheme.RELAY_ONLY)
    assert table.alphas == tuple(Fraction(n, d) for n, d in [(0, 1), (1, 3), (1, 2), (2, 3), (1, 1)])
    for w in range(table.last_index + 1):
        assert math.fsum(table.mode_probs[w].values()) == pytest.approx(1.0, abs=1e-12)
    for name, value in rate_identity_residuals(table).items():
        assert value <= 1e-12, name

    case = classify_stability(table)
    assert case == StabilityCase(kind=kind, w_star=2)
    op = solve_operating_point(table, case)
    assert getattr(op.tosses, toss) == pytest.approx(0.8)
    assert op.policy_alpha == Fraction(1, 2)
    assert (op.tau1, op.tau2, op.tau3) == pytest.approx((0.6, 0.6, 0.05))

    throughput = system_throughput(table, case)
    assert throughput.per_alpha == pytest.approx(per_alpha)
    assert throughput.w_star == 2
    assert op.tau_t == pytest.approx(throughput.tau_t)


def test_underflowing_tie_set_clips_toss():
    # Deep fade: the link 2 / link 3 tie set at α = 1/2 carries about 1e-218 of rate
    # against 1.7e-17 left to balance.
    rates = RateSet(r1=(0, 1), r2=(0, 2))
    law = {
        RateTripletIndex(1, 0, 0): 1.7e-17,
        RateTripletIndex(0, 1, 1): 9.45e-219,
        RateTripletIndex(0, 0, 0): 1.0 - 1.7e-17,
    }
    table = tabulate_modes(law, rates, build_alpha_lattice(rates), Scheme.RELAY_ONLY)
    case = classify_stability(table)
    assert case == StabilityCase(kind=StabilityCaseKind.CASE3A, w_star=1)
    assert table.rate(2, (Mode.NOT_ONE, Mode.ALL), 1) == pytest.approx(1.89e-218, rel=1e-9)

    op = solve_operating_point(table, case)
    assert op.tosses.p2_not1 == 1.0
    throughput = system_throughput(table, case)
    assert lattice_minimizers(throughput.per_alpha) == (0, 1, 2, 3)
    assert throughput.w_star == case.w_star
    assert system_throughput(table).w_star == 0
    assert op.tau_t == pytest.approx(throughput.tau_t, abs=1e-12)


def test_unbalanced_tie_toss_still_rejected():
    table = rate_table(
        [
            {Mode.TWO: (0.0, 1.0, 0.0)},
            {Mode.ONE: (0.9, 0.0, 0.0), Mode.TWO: (0.0, 0.1, 0.0), Mode.NOT_ONE: (0.0, 0.2, 0.1)},
            {Mode.ONE: (1.0, 0.0, 0.0)},
        ]
    )
    case = classify_stability(table)
    assert case.kind == StabilityCaseKind.CASE3A
    with pytest.raises(InternalInconsistencyError, match="outside"):
        solve_operating_point(table, case)


def test_case2_minimum_sits_at_top_of_lattice():
    table = synthetic_table(r11=[0.0, 0.2, 0.2], r22=[1.5, 0.8, 0.0])
    case = classify_stability(table)
    assert balance_index(case, table.last_index) == 2
    assert system_throughput(table, case).w_star == 2
    assert system_throughput(table).w_star == 2


def test_balancing_point_off_the_minimum_is_rejected(near_results):
    table = near_results[Scheme.RELAY_ONLY].table
    with pytest.raises(InternalInconsistencyError):
        system_throughput(table, StabilityCase(kind=StabilityCaseKind.CASE3B, w_star=1))


def test_link_throughputs_follow_tosses(near_results):
    table = near_results[Scheme.RELAY_ONLY].table
    greedy = link_throughputs(table, 1, CoinTosses())
    throttled = link_throughputs(table, 1, CoinTosses(p1_one=0.5))
    assert throttled[0] == pytest.approx(greedy[0] / 2)
    assert throttled[1:] == greedy[1:]


def test_negative_control_starves_link_two(near_results):
    result = near_results[Scheme.RELAY_ONLY]
    control = negative_control_operating_point(result.table, result.operating_point)
    assert control.policy_alpha == 1
    assert control.tosses.p1_one == 1.0
    assert control.tau2 == 0.0
    assert control.tau1 == pytest.approx(2 * 0.4997, abs=2 * TABLE_TOL)


def test_identity_residuals_on_reference(near_results, far_results):
    for results in (near_results, far_results):
        for result in results.values():
            for name, value in rate_identity_residuals(result.table).items():
                assert value <= 1e-9, name


geometries = st.builds(
    SystemGeometry,
    d1=st.floats(min_value=0.5, max_value=2.0),
    d2=st.floats(min_value=0.5, max_value=2.0),
    d3=st.floats(min_value=1.0, max_value=3.0),
    d1p=st.floats(min_value=1.0, max_value=4.0),
    d2p=st.floats(min_value=1.0, max_value=4.0),
    alpha_pl=st.sampled_from([2.0, 3.0, 4.0]),
)
powers = st.builds(
    lambda gamma_p_db, gamma_max_db: PowerConstraints(
        gamma_max=db_to_linear(gamma_max_db), gamma_p=db_to_linear(gamma_p_db)
    ),
    gamma_p_db=st.floats(min_value=-5.0, max_value=10.0),
    gamma_max_db=st.one_of(st.just("inf"), st.floats(min_value=-5.0, max_value=25.0)),
)
ladders = st.builds(
    lambda levels, scale: rate_ladder(levels, scale),
    levels=st.integers(min_value=1, max_value=4),
    scale=st.sampled_from(["0.5", "1", "1.75", "2"]),
)
equal_rate_sets = ladders.map(lambda ladder: RateSet(r1=ladder, r2=ladder))
unequal_rate_sets = st.builds(lambda r1, r2: RateSet(r1=r1, r2=r2), ladders, ladders)
# Combining pairs link-2 and link-3 indices, so scheme 2 only draws equal ladders.
configurations = st.one_of(
    st.tuples(st.just(Scheme.RELAY_ONLY), st.one_of(equal_rate_sets, unequal_rate_sets)),
    st.tuples(st.just(Scheme.COOPERATIVE), equal_rate_sets),
)


@given(geometry=geometries, power=powers, configuration=configurations)
@hypothesis_settings(max_examples=100, deadline=None)
def test_probabilities_normalise(geometry, power, configuration):
    scheme, rates = configuration
    stats = derive_stats(geometry, power)
    table = mode_table(stats, rates, build_alpha_lattice(rates), scheme)
    for w in range(table.last_index + 1):
        assert math.fsum(table.mode_probs[w].values()) == pytest.approx(1.0, abs=1e-9)


@given(geometry=geometries, power=powers, configuration=configurations)
@hypothesis_settings(max_examples=100, deadline=None)
def test_rate_identities_hold(geometry, power, configuration):
    scheme, rates = configuration
    stats = derive_stats(geometry, power)
    table = mode_table(stats, rates, build_alpha_lattice(rates), scheme)
    for name, value in rate_identity_residuals(table).items():
        assert value <= 1e-9, name


@given(geometry=geometries, power=powers, configuration=configurations)
@hypothesis_settings(max_examples=100, deadline=None)
def test_case_and_lattice_minimum_agree(geometry, power, configuration):
    scheme, rates = configuration
    result = analyze(derive_stats(geometry, power), rates, scheme)
    throughput = result.throughput
    w_star = balance_index(result.case, result.table.last_index)
    minimizers = lattice_minimizers(throughput.per_alpha)

    assert throughput.w_star == w_star
    assert w_star in minimizers
    assert throughput.tau_t == pytest.approx(min(throughput.per_alpha), abs=1e-9)
    assert result.operating_point.tau_t == pytest.approx(throughput.tau_t, abs=1e-9)
    if len(minimizers) == 1:
        assert system_throughput(result.table).w_star == w_star
