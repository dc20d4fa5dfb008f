import enum


class Mode(str, enum.Enum):
    """
    Transmission modes of a slot.

    A mode names the links whose decision metric attains the slot maximum:
    a single link (1, 2, 3), a tie of the two links other than i (~i), a three-way
    tie (~N), or silence when every metric is zero (N).
    """

    NONE = "N"
    ONE = "1"
    TWO = "2"
    THREE = "3"
    NOT_ONE = "~1"
    NOT_TWO = "~2"
    NOT_THREE = "~3"
    ALL = "~N"


class Scheme(enum.IntEnum):
    """
    Relay signalling scheme.

    RELAY_ONLY: the relay transmits alone on link 2.
    COOPERATIVE: source and relay send a space-time codeword, destination sees γ2 + γ3.
    """

    RELAY_ONLY = 1
    COOPERATIVE = 2


class StabilityCaseKind(str, enum.Enum):
    CASE1 = "case1"
    CASE2 = "case2"
    CASE3A = "case3a"
    CASE3B = "case3b"
    CASE3C = "case3c"


MODE_ORDER: tuple[Mode, ...] = (
    Mode.ONE,
    Mode.TWO,
    Mode.THREE,
    Mode.NOT_ONE,
    Mode.NOT_TWO,
    Mode.NOT_THREE,
    Mode.ALL,
    Mode.NONE,
)

TIE_MODES: frozenset[Mode] = frozenset({Mode.NOT_ONE, Mode.NOT_TWO, Mode.NOT_THREE, Mode.ALL})

# Modes whose slots can serve a given link.
LINK1_FORWARD_MODES: tuple[Mode, ...] = (Mode.ONE, Mode.NOT_TWO, Mode.NOT_THREE, Mode.ALL)
LINK2_BACKWARD_MODES: tuple[Mode, ...] = (Mode.TWO, Mode.NOT_ONE, Mode.NOT_THREE, Mode.ALL)
LINK3_MODES: tuple[Mode, ...] = (Mode.THREE, Mode.NOT_ONE, Mode.NOT_TWO, Mode.ALL)

MODE_COLUMNS: dict[Mode, str] = {
    Mode.ONE: "p_mode_1",
    Mode.TWO: "p_mode_2",
    Mode.THREE: "p_mode_3",
    Mode.NOT_ONE: "p_mode_not1",
    Mode.NOT_TWO: "p_mode_not2",
    Mode.NOT_THREE: "p_mode_not3",
    Mode.ALL: "p_mode_all",
    Mode.NONE: "p_mode_none",
}
