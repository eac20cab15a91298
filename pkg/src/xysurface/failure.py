"""Logical failure checks for a decoded trial."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .decoder import RecoveryPlan
from .errors import InternalError, UsageError
from .lattice import CodeLayout
from .noise import ErrorHistory
from .pauli import PauliOperator, commutes


@dataclass(frozen=True)
class TrialOutcome:
    spatial_failure: bool
    temporal_failure: bool
    defect_count: int
    graph_node_count: int

    @property
    def failed(self) -> bool:
        return self.spatial_failure or self.temporal_failure


def _residual(error: PauliOperator, recovery: PauliOperator, layout: CodeLayout) -> PauliOperator:
    residual = error * recovery
    if layout.syndrome(residual).any():
        raise InternalError("error times recovery still has a syndrome")
    return residual


def spatial_failure(accumulated_error: PauliOperator, spatial_recovery: PauliOperator,
                    layout: CodeLayout) -> bool:
    """True unless error times recovery is a stabilizer (up to phase)."""
    return not layout.in_stabilizer_group(_residual(accumulated_error, spatial_recovery, layout))


def logical_flips(accumulated_error: PauliOperator, spatial_recovery: PauliOperator,
                  layout: CodeLayout) -> list[bool]:
    """Anticommutation of the residual with each logical representative."""
    residual = _residual(accumulated_error, spatial_recovery, layout)
    return [not commutes(residual, op) for op in layout.logicals.representatives]


def temporal_failure(history: ErrorHistory, plan: RecoveryPlan, layout: CodeLayout,
                     T: int | None = None) -> bool:
    """Odd winding of measurement-error plus correction chains in time, for either colour."""
    if not layout.periodic:
        raise UsageError("temporal failures are only defined on the torus")
    T = history.T if T is None else T
    if len(plan.layers) != T:
        raise UsageError("plan and history cover different numbers of rounds")
    last = history.flips[T - 1]
    black = layout.stabilized_colors
    for is_black in (True, False):
        mask = black if is_black else ~black
        parity = int(np.count_nonzero(last & mask)) % 2
        if parity ^ plan.crossings(is_black):
            return True
    return False
