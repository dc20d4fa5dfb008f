from src.schemas.analytic import (
    AnalysisResult,
    CoinTosses,
    ModeRateTable,
    OperatingPoint,
    StabilityCase,
    ThroughputResult,
)
from src.schemas.channel import LinkStats, PowerConstraints, SnrTriplet, SystemGeometry
from src.schemas.experiment import ExperimentConfig
from src.schemas.rates import AlphaLattice, RateSet, RateTripletIndex, SnrThresholds
from src.schemas.simulation import BufferState, SimConfig, SimReport, SlotDecision
from src.schemas.validation import (
    ConformanceReport,
    ConformanceRow,
    FormVerdict,
    MonteCarloEstimate,
    QuadratureResult,
)

__all__ = [
    "AlphaLattice",
    "AnalysisResult",
    "BufferState",
    "CoinTosses",
    "ConformanceReport",
    "ConformanceRow",
    "ExperimentConfig",
    "FormVerdict",
    "LinkStats",
    "ModeRateTable",
    "MonteCarloEstimate",
    "OperatingPoint",
    "PowerConstraints",
    "QuadratureResult",
    "RateSet",
    "RateTripletIndex",
    "SimConfig",
    "SimReport",
    "SlotDecision",
    "SnrThresholds",
    "SnrTriplet",
    "StabilityCase",
    "SystemGeometry",
    "ThroughputResult",
]
