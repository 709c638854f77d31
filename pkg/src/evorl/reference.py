"""Hand-checked reference data for the benchmark worlds: the exact grid-world
Q-function, known grid policies with their returns, and the two notable
hidden-world policies.  Used by the reproduction commands and golden tests."""

from __future__ import annotations

# Column-major state order shared by the grid tables below.
GRID_STATE_ORDER = tuple(f"{c}{r}" for c in "abcde" for r in range(1, 6))

_GRID_Q_RIGHT = (17, 16, 10, 7, 6, 17, 15, 7, 6, 5, 7, 9, 11, 8, 4,
                 6, 6, 7, 4, 2, 1, 2, 1, 2, 1)
_GRID_Q_DOWN = (16, 11, 10, 7, 1, 17, 8, 1, 3, 1, 15, 14, 12, 8, 2,
                6, 7, 7, 3, 1, 7, 6, 4, 3, 1)

# Exact optimal Q-values for every (state, action) pair of the grid world.
GRID_REFERENCE_Q: dict[tuple[str, str], int] = {}
for _i, _s in enumerate(GRID_STATE_ORDER):
    GRID_REFERENCE_Q[(_s, "R")] = _GRID_Q_RIGHT[_i]
    GRID_REFERENCE_Q[(_s, "D")] = _GRID_Q_DOWN[_i]

GRID_OPTIMAL_RETURN = 17

# Known grid policies (action letter per state in GRID_STATE_ORDER) and the
# return each collects from a1.
GRID_KNOWN_POLICIES: dict[int, tuple[str, int]] = {
    1: ("DRDDRRRRRRDRDDRRDRRRDRRDR", 8),
    2: ("DDDDRRRRRRDDRRDRDRRRDRDDR", 9),
    3: ("RDDRRDRDRRDDDRDRDRRRDRDDD", 17),
    5: ("RDDDRDRRDRRDRRDRDRRDDRDDD", 16),
}

GRID_ACTION_IDS = {"R": 0, "D": 1}


def grid_policy_genes(letters: str) -> tuple[int, ...]:
    return tuple(GRID_ACTION_IDS[ch] for ch in letters)


# Hidden world: action ids (L=0, R=1) per observation (red, green, blue).
HIDDEN_ACTION_IDS = {"L": 0, "R": 1}
HIDDEN_OPTIMAL_GENES = (1, 1, 0)          # red R, green R, blue L
HIDDEN_OPTIMAL_RETURN = 1.875
HIDDEN_VALUE_FUNCTION_GENES = (1, 0, 1)   # red R, green L, blue R
HIDDEN_VALUE_FUNCTION_RETURN = 1.0
HIDDEN_Q_BLUE_LEFT = -0.5
HIDDEN_Q_BLUE_RIGHT = 1.0
