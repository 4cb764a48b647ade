"""The two fourth-order thick-bar filter designs and a rounded reference matrix."""

from __future__ import annotations

from functools import lru_cache

from .matrix import CouplingMatrix, TopologyMask, matrix_from_entries
from .prototype import synthesize_matrix
from .response import FrequencyPlan, normalized_frequency

PLAN_1 = FrequencyPlan(3.26e9, 1.15e9)
PLAN_2 = FrequencyPlan(3.35e9, 1.575e9)
PLANS = {1: PLAN_1, 2: PLAN_2}
TZ_HZ = {1: 4.15e9, 2: 4.5e9}
RETURN_LOSS_DB = 20.0
ORDER = 4
SPURIOUS_HZ = 6.0e9

# design 1 rounded to three decimals
ROUNDED_M1_ENTRIES = {
    (0, 1): 1.03, (3, 5): 1.03,
    (1, 2): 0.816, (2, 3): 0.816,
    (1, 4): -0.402, (3, 4): 0.402,
    (1, 1): 0.07, (3, 3): 0.07, (2, 2): 0.378, (4, 4): -0.949,
}


def rounded_m1() -> CouplingMatrix:
    """Design-1 matrix rounded to three decimals (its zero sits near 4.145 GHz)."""
    return matrix_from_entries(ORDER, ROUNDED_M1_ENTRIES)


@lru_cache(maxsize=None)
def design_matrix(design: int, topology: str = "fig7") -> CouplingMatrix:
    """Synthesized matrix for design 1 or 2, transversal or on the four-branch mask."""
    plan = PLANS[design]
    tz = normalized_frequency(plan, TZ_HZ[design])
    mask = TopologyMask.fig7() if topology == "fig7" else None
    return synthesize_matrix(ORDER, RETURN_LOSS_DB, [tz], mask)
