from decimal import Decimal
from enum import Enum
from fractions import Fraction
import math

import pytest

from src.constants.modes import Mode
from src.utils.csv_output import config_hash, format_value, render_csv
from src.utils.units import db_to_linear, lcm_of_denominators, to_fraction


@pytest.mark.parametrize(
    ("value_db", "expected"),
    [(0, 1.0), (10, 10.0), (-10, 0.1), ("20", 100.0)],
)
def test_db_to_linear(value_db, expected):
    assert db_to_linear(value_db) == pytest.approx(expected)


@pytest.mark.parametrize("token", ["inf", "+inf", " INF ", "pip", math.inf])
def test_db_to_linear_infinite_peak(token):
    assert math.isinf(db_to_linear(token))


@pytest.mark.parametrize("token", ["-inf", -math.inf])
def test_db_to_linear_no_power(token):
    assert db_to_linear(token) == 0.0


@pytest.mark.parametrize(
    ("value", "expected"),
    [
        (1.75, Fraction(7, 4)),
        (0.1, Fraction(1, 10)),
        ("1.75", Fraction(7, 4)),
        ("7/4", Fraction(7, 4)),
        (Decimal("0.25"), Fraction(1, 4)),
        (3, Fraction(3)),
    ],
)
def test_to_fraction_reads_decimal_text(value, expected):
    assert to_fraction(value) == expected


@pytest.mark.parametrize("value", ["abc", math.nan, math.inf, True])
def test_to_fraction_rejects(value):
    with pytest.raises(ValueError):
        to_fraction(value)


def test_lcm_of_denominators():
    assert lcm_of_denominators([Fraction(1, 4), Fraction(1, 6), Fraction(2)]) == 12
    assert lcm_of_denominators([]) == 1


class Colour(Enum):
    RED = "red"


@pytest.mark.parametrize(
    ("value", "text"),
    [
        (0.123456789, "0.123457"),
        (Fraction(1, 2), "1/2"),
        (Mode.NOT_ONE, "~1"),
        (Colour.RED, "red"),
        (True, "true"),
        (None, ""),
        (7, "7"),
    ],
)
def test_format_value(value, text):
    assert format_value(value) == text


def test_render_csv_is_newline_terminated():
    text = render_csv([{"a": 0.5, "b": Fraction(1, 3)}], ["a", "b"])
    assert text == "a,b\n0.5,1/3\n"


def test_config_hash_is_stable(near_config, far_config):
    assert config_hash(near_config) == config_hash(near_config.model_copy())
    assert config_hash(near_config) != config_hash(far_config)
