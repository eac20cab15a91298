"""Geometry of the XY surface code: qubits on faces, stabilizers on vertices.

Vertex ``(r, c)`` is black when ``r + c`` is even and carries an all-X
stabilizer; white vertices carry all-Y stabilizers.  Face ``(r, c)`` has
corners ``(r, c)``, ``(r, c+1)``, ``(r+1, c)`` and ``(r+1, c+1)``.

Two layouts are supported:

* ``periodic``: a d x d torus (even d, so the two-colouring is consistent
  around both cycles).  Every vertex is stabilized; two logical qubits.
* ``open``: a d x d patch (odd d) with a (d+1) x (d+1) grid of vertices.
  Interior vertices are all stabilized; on the north and south sides the
  black vertices carry weight-2 stabilizers, on the east and west sides the
  white ones do.  One logical qubit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np

from .errors import InternalError, UsageError
from .pauli import BinaryMatrix, EchelonBasis, PauliOperator, commutes, rank

PERIODIC = "periodic"
OPEN = "open"
BOUNDARIES = (PERIODIC, OPEN)

BLACK = "black"
WHITE = "white"


def color(vertex: tuple[int, int]) -> str:
    r, c = vertex
    return BLACK if (r + c) % 2 == 0 else WHITE


def stabilizer_kind(vertex: tuple[int, int]) -> str:
    """Pauli letter of the stabilizer a vertex would carry (X on black, Y on white)."""
    return "X" if color(vertex) == BLACK else "Y"


@dataclass(frozen=True)
class SymmetryLine:
    orientation: str  # "row" or "column"
    index: int
    vertices: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class LogicalSet:
    """Logical representatives listed as conjugate pairs ``(a0, b0, a1, b1, ...)``."""

    representatives: tuple[PauliOperator, ...]

    @property
    def pairs(self) -> list[tuple[PauliOperator, PauliOperator]]:
        reps = self.representatives
        return [(reps[i], reps[i + 1]) for i in range(0, len(reps), 2)]


@dataclass(frozen=True, eq=False)
class CodeLayout:
    d: int
    boundary: str
    vertices: tuple[tuple[int, int], ...]
    stabilized_vertices: tuple[tuple[int, int], ...]
    logicals: LogicalSet = field(repr=False, default=None)

    @property
    def n(self) -> int:
        return self.d * self.d

    @property
    def periodic(self) -> bool:
        return self.boundary == PERIODIC

    @property
    def size(self) -> int:
        """Number of vertex rows (and columns)."""
        return self.d if self.periodic else self.d + 1

    def face_index(self, r: int, c: int) -> int:
        if self.periodic:
            r %= self.d
            c %= self.d
        elif not (0 <= r < self.d and 0 <= c < self.d):
            raise UsageError(f"face ({r}, {c}) outside the patch")
        return r * self.d + c

    def face_of(self, index: int) -> tuple[int, int]:
        return divmod(index, self.d)

    def wrap(self, vertex: tuple[int, int]) -> tuple[int, int]:
        if self.periodic:
            return vertex[0] % self.d, vertex[1] % self.d
        return vertex

    def faces_of_vertex(self, vertex: tuple[int, int]) -> list[int]:
        r, c = vertex
        out = []
        for fr, fc in ((r - 1, c - 1), (r - 1, c), (r, c - 1), (r, c)):
            if self.periodic:
                out.append(self.face_index(fr, fc))
            elif 0 <= fr < self.d and 0 <= fc < self.d:
                out.append(fr * self.d + fc)
        return out

    @cached_property
    def stabilizer_index(self) -> dict[tuple[int, int], int]:
        return {v: i for i, v in enumerate(self.stabilized_vertices)}

    @cached_property
    def unstabilized_vertices(self) -> tuple[tuple[int, int], ...]:
        stab = self.stabilizer_index
        return tuple(v for v in self.vertices if v not in stab)

    def is_stabilized(self, vertex: tuple[int, int]) -> bool:
        return vertex in self.stabilizer_index

    @cached_property
    def stabilizers(self) -> tuple[PauliOperator, ...]:
        return tuple(
            PauliOperator.from_faces(self.n, stabilizer_kind(v), self.faces_of_vertex(v))
            for v in self.stabilized_vertices
        )

    @cached_property
    def stabilizer_basis(self) -> EchelonBasis:
        return EchelonBasis(s.symplectic() for s in self.stabilizers)

    @cached_property
    def check_matrices(self) -> tuple[np.ndarray, np.ndarray]:
        """``(A_x, A_z)`` with syndrome = ``x @ A_x.T + z @ A_z.T`` (mod 2).

        Black (X-type) checks see the z bits of their faces; white (Y-type)
        checks see ``x xor z``.
        """
        m = len(self.stabilized_vertices)
        a_x = np.zeros((m, self.n), dtype=np.uint8)
        a_z = np.zeros((m, self.n), dtype=np.uint8)
        for i, v in enumerate(self.stabilized_vertices):
            faces = self.faces_of_vertex(v)
            a_z[i, faces] = 1
            if color(v) == WHITE:
                a_x[i, faces] = 1
        return a_x, a_z

    @cached_property
    def stabilized_colors(self) -> np.ndarray:
        """Boolean mask over stabilized vertices, True for black."""
        return np.array([color(v) == BLACK for v in self.stabilized_vertices])

    def syndrome(self, op: PauliOperator) -> np.ndarray:
        a_x, a_z = self.check_matrices
        x = op.x_support.astype(np.uint8)
        z = op.z_support.astype(np.uint8)
        return ((a_x @ x + a_z @ z) % 2).astype(bool)

    def stabilizer_of(self, vertex: tuple[int, int]) -> PauliOperator:
        vertex = self.wrap(tuple(vertex))
        idx = self.stabilizer_index.get(vertex)
        if idx is None:
            raise UsageError(f"vertex {vertex} carries no stabilizer")
        return self.stabilizers[idx]

    def in_stabilizer_group(self, op: PauliOperator) -> bool:
        return op.symplectic() in self.stabilizer_basis

    @cached_property
    def corner_partners(self) -> tuple[tuple[tuple[int, int], tuple[int, int]], ...]:
        """For open patches: each corner with its unstabilized neighbour of the other colour."""
        if self.periodic:
            return ()
        d = self.d
        return (
            ((0, 0), (0, 1)),
            ((0, d), (1, d)),
            ((d, 0), (d - 1, 0)),
            ((d, d), (d, d - 1)),
        )

    def symmetry_lines(self) -> list[SymmetryLine]:
        stab = self.stabilizer_index
        lines = []
        for r in range(self.size):
            verts = tuple(v for v in ((r, c) for c in range(self.size)) if v in stab)
            lines.append(SymmetryLine("row", r, verts))
        for c in range(self.size):
            verts = tuple(v for v in ((r, c) for r in range(self.size)) if v in stab)
            lines.append(SymmetryLine("column", c, verts))
        return lines

    def logical_operators(self) -> LogicalSet:
        return self.logicals

    def render(self) -> str:
        """Text picture: vertices as X/Y (stabilized) or . (bare), faces as o."""
        lines = []
        for r in range(self.size):
            row = []
            for c in range(self.size):
                v = (r, c)
                row.append(stabilizer_kind(v) if self.is_stabilized(v) else ".")
            lines.append(" ".join(row))
            if r < self.d and (self.periodic or r < self.size - 1):
                lines.append(" " + " ".join("o" for _ in range(self.d)))
        return "\n".join(lines)


def _nullspace(rows: list[int], ncols: int) -> list[int]:
    """Basis of ``{v : popcount(row & v) even for all rows}``."""
    pivot_rows: list[tuple[int, int]] = []
    for row in rows:
        for col, prow in pivot_rows:
            if (row >> col) & 1:
                row ^= prow
        if row:
            col = (row & -row).bit_length() - 1
            # keep the reduced form: clear this column from earlier pivots
            pivot_rows = [
                (c, pr ^ row if (pr >> col) & 1 else pr) for c, pr in pivot_rows
            ]
            pivot_rows.append((col, row))
    pivot_cols = {c for c, _ in pivot_rows}
    basis = []
    for free in range(ncols):
        if free in pivot_cols:
            continue
        v = 1 << free
        for col, prow in pivot_rows:
            if (prow >> free) & 1:
                v |= 1 << col
        basis.append(v)
    return basis


def _sympl(a: int, b: int, n: int) -> int:
    mask = (1 << n) - 1
    return (((a & mask) & (b >> n)).bit_count() + ((a >> n) & (b & mask)).bit_count()) & 1


def _op_from_symplectic(v: int, n: int) -> PauliOperator:
    mask = (1 << n) - 1
    return PauliOperator(n, v & mask, v >> n)


def _generic_logicals(layout: CodeLayout) -> LogicalSet:
    n = layout.n
    mask = (1 << n) - 1
    # v commutes with s  <=>  popcount(v & swap(s)) even
    swapped = [(s.symplectic() >> n) | ((s.symplectic() & mask) << n) for s in layout.stabilizers]
    pool = [v for v in _nullspace(swapped, 2 * n) if v not in layout.stabilizer_basis]
    reps = []
    while pool:
        a = pool.pop(0)
        partner = next((i for i, b in enumerate(pool) if _sympl(a, b, n)), None)
        if partner is None:
            continue
        b = pool.pop(partner)
        pool = [
            c ^ (a if _sympl(c, b, n) else 0) ^ (b if _sympl(c, a, n) else 0) for c in pool
        ]
        reps += [_op_from_symplectic(a, n), _op_from_symplectic(b, n)]
    return LogicalSet(tuple(reps))


def _torus_logicals(d: int) -> LogicalSet:
    n = d * d
    row = [c for c in range(d)]
    col = [r * d for r in range(d)]
    z_row = PauliOperator.from_faces(n, "Z", row)
    x_col = PauliOperator.from_faces(n, "X", col)
    z_col = PauliOperator.from_faces(n, "Z", col)
    x_row = PauliOperator.from_faces(n, "X", row)
    return LogicalSet((z_row, x_col, z_col, x_row))


def _validate(layout: CodeLayout, expected_k: int) -> None:
    stabs = layout.stabilizers
    for i, s in enumerate(stabs):
        for t in stabs[i + 1:]:
            if not commutes(s, t):
                raise InternalError("stabilizers do not commute")
    r = rank(BinaryMatrix(tuple(s.symplectic() for s in stabs), 2 * layout.n))
    if layout.n - r != expected_k:
        raise InternalError(f"expected {expected_k} logical qubits, found {layout.n - r}")
    reps = layout.logicals.pairs
    if len(reps) != expected_k:
        raise InternalError("wrong number of logical pairs")
    for i, (a, b) in enumerate(reps):
        if commutes(a, b):
            raise InternalError("logical pair commutes")
        for op in (a, b):
            if any(not commutes(op, s) for s in stabs):
                raise InternalError("logical operator has a syndrome")
        for a2, b2 in reps[i + 1:]:
            if not all(commutes(p, q) for p in (a, b) for q in (a2, b2)):
                raise InternalError("distinct logical pairs do not commute")


@lru_cache(maxsize=None)
def build_code(d: int, boundary: str = PERIODIC) -> CodeLayout:
    if boundary not in BOUNDARIES:
        raise UsageError(f"boundary must be one of {BOUNDARIES}, got {boundary!r}")
    if not isinstance(d, (int, np.integer)) or d < 3:
        raise UsageError(f"distance must be an integer >= 3, got {d!r}")
    d = int(d)
    if boundary == PERIODIC:
        if d % 2:
            raise UsageError("the torus layout needs an even distance")
        vertices = tuple((r, c) for r in range(d) for c in range(d))
        layout = CodeLayout(d, boundary, vertices, vertices, _torus_logicals(d))
        expected_k = 2
    else:
        if d % 2 == 0:
            raise UsageError("the open layout needs an odd distance")
        vertices = tuple((r, c) for r in range(d + 1) for c in range(d + 1))
        stabilized = tuple(v for v in vertices if _open_stabilized(v, d))
        layout = CodeLayout(d, boundary, vertices, stabilized)
        object.__setattr__(layout, "logicals", _generic_logicals(layout))
        expected_k = 1
    _validate(layout, expected_k)
    return layout


def _open_stabilized(vertex: tuple[int, int], d: int) -> bool:
    r, c = vertex
    on_ns = r in (0, d)
    on_ew = c in (0, d)
    if on_ns and on_ew:
        return False
    if on_ns:
        return color(vertex) == BLACK
    if on_ew:
        return color(vertex) == WHITE
    return True
