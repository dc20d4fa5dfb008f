from collections.abc import Iterable
from fractions import Fraction
import math

from pydantic import BaseModel, ConfigDict

from src.constants.modes import Mode, Scheme, StabilityCaseKind


class ModeRateTable(BaseModel):
    """
    Mode probabilities and per-mode link rates for every lattice value.

    link_rates[w][mode][i - 1] is the rate of link i averaged over the domain set of mode
    at α_w, i.e. the sum of P(triplet) · R_i over that set.
    """

    scheme: Scheme
    alphas: tuple[Fraction, ...]
    mode_probs: tuple[dict[Mode, float], ...]
    link_rates: tuple[dict[Mode, tuple[float, float, float]], ...]
    max_rate: float

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @property
    def last_index(self) -> int:
        return len(self.alphas) - 1

    def prob(self, mode: Mode, w: int) -> float:
        return self.mode_probs[w][mode]

    def rate(self, link: int, modes: Iterable[Mode], w: int) -> float:
        """
        Rate of a link summed over several domain sets at α_w.
        """
        return math.fsum(self.link_rates[w][mode][link - 1] for mode in modes)


class StabilityCase(BaseModel):
    kind: StabilityCaseKind
    w_star: int

    model_config = ConfigDict(frozen=True)


class CoinTosses(BaseModel):
    """
    Selection probabilities per mode. Tie mass of mode ~N is carried by P1_not2 and P2_not1.
    """

    p1_one: float = 1.0
    p2_two: float = 1.0
    p1_not2: float = 0.0
    p2_not1: float = 0.0
    p1_not3: float = 0.0

    model_config = ConfigDict(frozen=True)

    @property
    def p2_not3(self) -> float:
        return 1.0 - self.p1_not3

    def link_probabilities(self, mode: Mode) -> tuple[float, float, float]:
        """
        Probability of serving link 1, 2 or 3 in a slot of the given mode; the rest is silence.
        """
        match mode:
            case Mode.NONE:
                return 0.0, 0.0, 0.0
            case Mode.ONE:
                return self.p1_one, 0.0, 0.0
            case Mode.TWO:
                return 0.0, self.p2_two, 0.0
            case Mode.THREE:
                return 0.0, 0.0, 1.0
            case Mode.NOT_ONE:
                return 0.0, self.p2_not1, 1.0 - self.p2_not1
            case Mode.NOT_TWO:
                return self.p1_not2, 0.0, 1.0 - self.p1_not2
            case Mode.NOT_THREE:
                return self.p1_not3, self.p2_not3, 0.0
            case Mode.ALL:
                return self.p1_not2, self.p2_not1, max(0.0, 1.0 - self.p1_not2 - self.p2_not1)
        raise ValueError(f"Unknown mode {mode!r}")


class OperatingPoint(BaseModel):
    """
    Solved buffer-stable operating point.

    alpha_star is the lattice value at w_star; the selector runs at policy_alpha, which
    differs from alpha_star only for the boundary cases (α1 for Case1, α_{W-1} for Case2).
    """

    case: StabilityCase
    alpha_star: Fraction
    policy_index: int
    policy_alpha: Fraction
    tosses: CoinTosses
    tau1: float
    tau2: float
    tau3: float
    tau_t: float
    tau_t_norm: float

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @property
    def w_star(self) -> int:
        return self.case.w_star


class ThroughputResult(BaseModel):
    tau_t: float
    alpha_star: Fraction
    w_star: int
    per_alpha: tuple[float, ...]

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)


class AnalysisResult(BaseModel):
    table: ModeRateTable
    case: StabilityCase
    operating_point: OperatingPoint
    throughput: ThroughputResult

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)
