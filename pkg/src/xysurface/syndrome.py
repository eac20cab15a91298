"""Repeated stabilizer readout and spacetime defects.

Outcome rows are the syndrome of the accumulated data error, XOR the round's
measurement flips.  A defect sits wherever two consecutive outcome rows
disagree.  For periodic time the row that precedes round 0 is taken to be
the last round's flips alone, i.e. the spacetime is closed into a 3-torus
by identifying the slice after round ``T-1`` with the slice before round 0
once the accumulated data syndrome has been read off.  Every defect
worldline then closes up to the final data syndrome, and a measurement flip
in the last round produces defects at ``T-1`` and at ``0``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import UsageError
from .lattice import BLACK, CodeLayout, color
from .noise import ErrorHistory

PERIODIC_TIME = "periodic"
FINAL_ROUND_PERFECT = "final-round-perfect"
TIME_BOUNDARIES = (PERIODIC_TIME, FINAL_ROUND_PERFECT)


class Defect(NamedTuple):
    t: int
    r: int
    c: int
    kind: str  # "X" on black vertices, "Y" on white
    virtual: bool = False

    @property
    def vertex(self) -> tuple[int, int]:
        return self.r, self.c


def defect_kind(vertex: tuple[int, int]) -> str:
    return "X" if color(vertex) == BLACK else "Y"


@dataclass(frozen=True, eq=False)
class SyndromeHistory:
    layout: CodeLayout
    outcomes: np.ndarray  # (T, m)
    reference: np.ndarray  # (m,) row preceding round 0 under periodic time
    final: np.ndarray  # (m,) noiseless readout of the final accumulated error

    @property
    def T(self) -> int:
        return self.outcomes.shape[0]


@dataclass(frozen=True, eq=False)
class DefectSet:
    layout: CodeLayout
    slices: int  # number of time slices defects can occupy
    periodic_time: bool
    defects: tuple[Defect, ...]

    def __len__(self) -> int:
        return len(self.defects)

    def __iter__(self):
        return iter(self.defects)

    def dump(self) -> str:
        return "".join(f"{d.t} {d.r} {d.c} {d.kind}\n" for d in self.defects)

    @classmethod
    def parse(cls, text: str, layout: CodeLayout, slices: int, periodic_time: bool = True) -> "DefectSet":
        defects = []
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) not in (3, 4):
                raise UsageError(f"line {lineno}: expected 't r c [type]'")
            try:
                t, r, c = (int(x) for x in parts[:3])
            except ValueError:
                raise UsageError(f"line {lineno}: coordinates must be integers") from None
            v = (r, c)
            if not layout.is_stabilized(v):
                raise UsageError(f"line {lineno}: vertex {v} carries no stabilizer")
            if not 0 <= t < slices:
                raise UsageError(f"line {lineno}: time {t} outside 0..{slices - 1}")
            kind = defect_kind(v)
            if len(parts) == 4 and parts[3].upper().removesuffix("-TYPE") != kind:
                raise UsageError(f"line {lineno}: vertex {v} hosts {kind}-type defects")
            defects.append(Defect(t, r, c, kind))
        if len(set(defects)) != len(defects):
            raise UsageError("duplicate defect in dump")
        return cls(layout, slices, periodic_time, tuple(sorted(defects)))


def measure_rounds(layout: CodeLayout, history: ErrorHistory) -> SyndromeHistory:
    a_x, a_z = layout.check_matrices
    acc_x = np.bitwise_xor.accumulate(history.x, axis=0).astype(np.uint8)
    acc_z = np.bitwise_xor.accumulate(history.z, axis=0).astype(np.uint8)
    syn = ((acc_x @ a_x.T + acc_z @ a_z.T) & 1).astype(bool)
    outcomes = syn ^ history.flips
    return SyndromeHistory(layout, outcomes, history.flips[-1].copy(), syn[-1].copy())


def defect_array(syndromes: SyndromeHistory, time_boundary: str = PERIODIC_TIME) -> np.ndarray:
    """Boolean ``(slices, m)`` array of defects."""
    out = syndromes.outcomes
    if time_boundary == PERIODIC_TIME:
        prev = np.vstack([syndromes.reference[None, :], out[:-1]])
        return out ^ prev
    if time_boundary == FINAL_ROUND_PERFECT:
        rows = np.vstack([out, syndromes.final[None, :]])
        prev = np.vstack([np.zeros_like(out[:1]), out])
        return rows ^ prev
    raise UsageError(f"time boundary must be one of {TIME_BOUNDARIES}")


def extract_defects(syndromes: SyndromeHistory, time_boundary: str = PERIODIC_TIME) -> DefectSet:
    layout = syndromes.layout
    arr = defect_array(syndromes, time_boundary)
    verts = layout.stabilized_vertices
    ts, idx = np.nonzero(arr)
    defects = tuple(
        sorted(Defect(int(t), *verts[i], defect_kind(verts[i])) for t, i in zip(ts, idx))
    )
    return DefectSet(layout, arr.shape[0], time_boundary == PERIODIC_TIME, defects)
