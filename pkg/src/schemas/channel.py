import math

from pydantic import BaseModel, ConfigDict, Field


class SystemGeometry(BaseModel):
    """
    Normalised node distances.

    d1, d2, d3 are the S–R, R–D and S–D distances; d1p and d2p the S→P and R→P
    interference distances. Link 3 reuses the source interference channel, so there is
    no separate d3p. shadowing_db attenuates the direct link on top of path loss.
    """

    d1: float
    d2: float
    d3: float
    d1p: float
    d2p: float
    alpha_pl: float = 3.0
    shadowing_db: float = 0.0

    model_config = ConfigDict(frozen=True)


class PowerConstraints(BaseModel):
    gamma_max: float
    gamma_p: float

    model_config = ConfigDict(frozen=True)

    @property
    def is_pip(self) -> bool:
        return math.isinf(self.gamma_max)

    @property
    def is_degenerate(self) -> bool:
        return self.gamma_max == 0.0


class LinkStats(BaseModel):
    """
    Per-link channel variances and average SNR parameters, index 0..2 for links 1..3.

    lambda_ is the average SNR under peak power, mu the average SNR under the interference
    limit, p the probability that peak power violates the interference limit.
    """

    omega_h: tuple[float, float, float]
    omega_g: tuple[float, float, float]
    lambda_: tuple[float, float, float]
    mu: tuple[float, float, float]
    p: tuple[float, float, float]
    gamma_max: float
    gamma_p: float

    model_config = ConfigDict(frozen=True)

    @property
    def is_pip(self) -> bool:
        return math.isinf(self.gamma_max)

    @property
    def is_degenerate(self) -> bool:
        return self.gamma_max == 0.0


class SnrTriplet(BaseModel):
    g1: float = Field(ge=0, allow_inf_nan=False)
    g2: float = Field(ge=0, allow_inf_nan=False)
    g3: float = Field(ge=0, allow_inf_nan=False)

    model_config = ConfigDict(frozen=True)
