from fractions import Fraction
from typing import Any, NamedTuple

from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from src.utils.units import to_fraction


class RateTripletIndex(NamedTuple):
    k1: int
    k2: int
    k3: int


class RateSet(BaseModel):
    """
    Exact transmission rates in bits/slot.

    r1 serves links 1 and 3 (the source uses one rate ladder), r2 serves link 2.
    Both ladders start at 0 and are strictly ascending.
    """

    r1: tuple[Fraction, ...]
    r2: tuple[Fraction, ...]

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @field_validator("r1", "r2", mode="before")
    @classmethod
    def to_exact(cls, value: Any) -> tuple[Fraction, ...]:
        return tuple(to_fraction(item) for item in value)

    @model_validator(mode="after")
    def check_ladders(self) -> "RateSet":
        for name, ladder in (("r1", self.r1), ("r2", self.r2)):
            if not ladder or ladder[0] != 0:
                raise ValueError(f"{name} must start with rate 0")
            if any(b <= a for a, b in zip(ladder, ladder[1:], strict=False)):
                raise ValueError(f"{name} must be strictly ascending")
        if self.r1[-1] == 0 and self.r2[-1] == 0:
            raise ValueError("At least one nonzero rate is required")
        return self

    @property
    def k1_max(self) -> int:
        return len(self.r1) - 1

    @property
    def k2_max(self) -> int:
        return len(self.r2) - 1

    @property
    def k3_max(self) -> int:
        return len(self.r1) - 1

    @property
    def max_rate(self) -> Fraction:
        return max(self.r1[-1], self.r2[-1])

    def rate(self, link: int, k: int) -> Fraction:
        return self.r2[k] if link == 2 else self.r1[k]

    def contains(self, triplet: RateTripletIndex) -> bool:
        k1, k2, k3 = triplet
        return 0 <= k1 <= self.k1_max and 0 <= k2 <= self.k2_max and 0 <= k3 <= self.k3_max


class SnrThresholds(BaseModel):
    """
    Decoding thresholds 2^R - 1 per link, each followed by a +inf sentinel.
    """

    g1: tuple[float, ...]
    g2: tuple[float, ...]
    g3: tuple[float, ...]

    model_config = ConfigDict(frozen=True)

    def link(self, link: int) -> tuple[float, ...]:
        return (self.g1, self.g2, self.g3)[link - 1]


class AlphaLattice(BaseModel):
    values: tuple[Fraction, ...]

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @model_validator(mode="after")
    def check_values(self) -> "AlphaLattice":
        if self.values[0] != 0 or self.values[-1] != 1:
            raise ValueError("Lattice must start at 0 and end at 1")
        if any(b <= a for a, b in zip(self.values, self.values[1:], strict=False)):
            raise ValueError("Lattice values must be strictly ascending")
        return self

    @property
    def last_index(self) -> int:
        return len(self.values) - 1

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, index: int) -> Fraction:
        return self.values[index]
