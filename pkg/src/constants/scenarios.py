CSV_SCHEMA_VERSION: int = 1

# Tolerances for identities that hold by construction.
IDENTITY_TOL: float = 1e-9
PROBABILITY_SLACK: float = 1e-9
COMPARISON_EPS: float = 1e-12

CONFORMANCE_TOL: float = 1e-6

SWEEP_PARAMETERS: dict[str, str] = {
    "gamma_p_db": "powers",
    "gamma_max_db": "powers",
    "d1": "geometry",
    "d2": "geometry",
    "d3": "geometry",
    "d1p": "geometry",
    "d2p": "geometry",
    "alpha_pl": "geometry",
    "shadowing_db": "geometry",
    "scale": "rates",
    "levels": "rates",
}

# Single rate 2 bits/slot on both hops, PIP at -5 dB, primary near (1.5) or far (3.0) from relay.
REFERENCE_SCENARIOS: dict[str, dict] = {
    "relay_near_primary": {
        "geometry": {"d1": 1, "d2": 1, "d3": 2, "d1p": 3, "d2p": 1.5, "alpha_pl": 3},
        "powers": {"gamma_p_db": -5, "gamma_max_db": "inf"},
        "rates": {"levels": 1, "scale": 2},
        "scheme": "both",
    },
    "relay_far_from_primary": {
        "geometry": {"d1": 1, "d2": 1, "d3": 2, "d1p": 3, "d2p": 3.0, "alpha_pl": 3},
        "powers": {"gamma_p_db": -5, "gamma_max_db": "inf"},
        "rates": {"levels": 1, "scale": 2},
        "scheme": "both",
    },
}

# Per-coordinate SNR thresholds of the default 5x5x5 conformance grid.
CONFORMANCE_GRID_VALUES: tuple[float, ...] = (0.0, 0.5, 1.0, 3.0, 10.0)

SIM_RELATIVE_TOL: float = 0.01
MC_SIGMAS: float = 3.0
