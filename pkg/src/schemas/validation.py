from pydantic import BaseModel, ConfigDict


class QuadratureResult(BaseModel):
    value: float
    abs_error_estimate: float
    subdivisions: int

    model_config = ConfigDict(frozen=True)


class MonteCarloEstimate(BaseModel):
    estimate: float
    std_error: float
    samples: int

    model_config = ConfigDict(frozen=True)

    def agrees_with(self, value: float, sigmas: float = 3.0, floor: float = 0.0) -> bool:
        return abs(self.estimate - value) <= sigmas * self.std_error + floor


class ConformanceRow(BaseModel):
    y1: float
    y2: float
    y3: float
    quadrature: float
    printed_general: float
    printed_pip: float | None = None
    exact_pip: float | None = None

    model_config = ConfigDict(frozen=True)


class FormVerdict(BaseModel):
    name: str
    max_deviation: float
    conforming: bool

    model_config = ConfigDict(frozen=True)


class ConformanceReport(BaseModel):
    rows: list[ConformanceRow]
    verdicts: list[FormVerdict]
    tolerance: float

    def verdict(self, name: str) -> FormVerdict:
        for verdict in self.verdicts:
            if verdict.name == name:
                return verdict
        raise KeyError(name)
