from fractions import Fraction

from pydantic import BaseModel, ConfigDict, Field

from src.constants.modes import Mode


class SimConfig(BaseModel):
    slots: int = Field(ge=0)
    seed: int = Field(ge=0)
    warmup: float = Field(default=0.01, ge=0, lt=1)
    replications: int = Field(default=1, ge=1)

    model_config = ConfigDict(frozen=True)


class SlotDecision(BaseModel):
    """
    Outcome of one slot. selected_link 0 means silence.
    """

    mode: Mode
    selected_link: int = Field(ge=0, le=3)
    rate: Fraction
    coin_toss_used: bool

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)


class BufferState(BaseModel):
    occupancy: Fraction = Fraction(0)

    model_config = ConfigDict(arbitrary_types_allowed=True)

    def push(self, bits: Fraction):
        self.occupancy += bits

    def pop(self, bits: Fraction) -> Fraction:
        """
        Remove up to `bits` and return what was actually delivered.
        """
        delivered = min(bits, self.occupancy)
        self.occupancy -= delivered
        return delivered


class SimReport(BaseModel):
    tau1_hat: float
    tau2_hat: float
    tau2_ideal_hat: float
    tau3_hat: float
    tau_t_hat: float
    mode_freq: dict[Mode, float]
    mean_occupancy: float
    final_occupancy: float
    occupancy_drift: float
    shortfall_slots: int
    slots: int
    seed: int
    replication: int = 0
    policy_alpha: Fraction

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)
