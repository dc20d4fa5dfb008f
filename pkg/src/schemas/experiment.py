import math
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.config import settings


class GeometryBlock(BaseModel):
    d1: float = Field(gt=0)
    d2: float = Field(gt=0)
    d3: float = Field(gt=0)
    d1p: float = Field(gt=0)
    d2p: float = Field(gt=0)
    alpha_pl: float = Field(default=3.0, gt=0)
    shadowing_db: float = Field(default=0.0, ge=0)

    model_config = ConfigDict(extra="forbid")


class PowerBlock(BaseModel):
    gamma_p_db: float
    gamma_max_db: float | str = "inf"

    model_config = ConfigDict(extra="forbid")

    @field_validator("gamma_p_db")
    @classmethod
    def finite_gamma_p(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("gamma_p_db must be finite")
        return value

    @field_validator("gamma_max_db")
    @classmethod
    def known_gamma_max(cls, value: float | str) -> float | str:
        if isinstance(value, str):
            token = value.strip().lower()
            if token not in {"inf", "+inf", "-inf"}:
                try:
                    return float(token)
                except ValueError as exc:
                    raise ValueError("gamma_max_db must be a number, 'inf' or '-inf'") from exc
            return token
        return value


class RateBlock(BaseModel):
    """
    Either explicit ladders r1/r2 or `levels` K with `scale` S giving [0, S, ..., K·S].
    """

    r1: list[str | int | float] | None = None
    r2: list[str | int | float] | None = None
    levels: int | None = Field(default=None, ge=1)
    scale: str | int | float | None = None

    model_config = ConfigDict(extra="forbid")

    @model_validator(mode="after")
    def one_form(self) -> "RateBlock":
        explicit = self.r1 is not None or self.r2 is not None
        ladder = self.levels is not None or self.scale is not None
        if explicit == ladder:
            raise ValueError("Give either r1/r2 or levels/scale")
        if explicit and (self.r1 is None or self.r2 is None):
            raise ValueError("Both r1 and r2 are required")
        if ladder and (self.levels is None or self.scale is None):
            raise ValueError("Both levels and scale are required")
        return self


class SimulationBlock(BaseModel):
    slots: int = Field(default_factory=lambda: settings.DEFAULT_SLOTS, ge=1)
    seed: int = Field(default_factory=lambda: settings.DEFAULT_SEED, ge=0)
    warmup: float = Field(default_factory=lambda: settings.WARMUP_FRACTION, ge=0, lt=1)
    replications: int = Field(default=1, ge=1)

    model_config = ConfigDict(extra="forbid")


class SweepBlock(BaseModel):
    parameter: str
    values: list[float | str] = Field(min_length=1)

    model_config = ConfigDict(extra="forbid")


class ExperimentConfig(BaseModel):
    geometry: GeometryBlock
    powers: PowerBlock
    rates: RateBlock
    scheme: Literal["1", "2", "both"] = "both"
    simulation: SimulationBlock = Field(default_factory=SimulationBlock)
    sweep: SweepBlock | None = None

    model_config = ConfigDict(extra="forbid")

    @field_validator("scheme", mode="before")
    @classmethod
    def scheme_as_text(cls, value: object) -> object:
        return str(value) if isinstance(value, int) else value
