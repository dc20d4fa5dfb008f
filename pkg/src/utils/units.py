from decimal import Decimal, InvalidOperation
from fractions import Fraction
import math


INF_TOKENS = {"inf", "+inf", "infinity", "pip"}
NEG_INF_TOKENS = {"-inf", "-infinity"}


def db_to_linear(value_db: float | str) -> float:
    """
    Convert a dB figure to linear scale as 10^(x/10).

    "inf" maps to +∞ (PIP regime) and "-inf" to 0 (no transmit power).
    """
    if isinstance(value_db, str):
        token = value_db.strip().lower()
        if token in INF_TOKENS:
            return math.inf
        if token in NEG_INF_TOKENS:
            return 0.0
        value_db = float(token)
    if math.isinf(value_db):
        return math.inf if value_db > 0 else 0.0
    return 10.0 ** (value_db / 10.0)


def to_fraction(value: Fraction | int | float | str | Decimal) -> Fraction:
    """
    Exact rational for a rate entry.

    Floats are read through their shortest decimal text, so 1.75 becomes 7/4 and 0.1 becomes
    1/10 rather than the binary expansion.

    Raises:
        ValueError: If the value is not a finite decimal or ratio
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ValueError(f"Rate must be numeric, got {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"Rate must be finite, got {value!r}")
        return Fraction(repr(value))
    if isinstance(value, Decimal):
        if not value.is_finite():
            raise ValueError(f"Rate must be finite, got {value!r}")
        return Fraction(value)
    text = str(value).strip()
    try:
        return Fraction(text)
    except ValueError:
        try:
            return Fraction(Decimal(text))
        except (InvalidOperation, ValueError) as exc:
            raise ValueError(f"Cannot read rate {value!r} as an exact decimal") from exc


def lcm_of_denominators(values: list[Fraction]) -> int:
    return math.lcm(*(value.denominator for value in values)) if values else 1
