"""Symmetry-assisted matching decoder.

Each defect is matched twice, once as a horizontal (H) node and once as a
vertical (V) node.  H nodes pay the cheap parallel step weight for column
separation and the diagonal weight for row separation; V nodes the other
way round.  Following H and V matches alternately links defects into closed
clusters.  Consecutive defects of the same type inside a cluster are joined
by correction strings; clusters left with an odd number of each type
(charged) are paired up afterwards by a small matching on cluster
distances.

On open patches every unstabilized boundary vertex hosts a virtual H/V node
pair in each time slice, joined by a zero-weight edge, so a defect can be
absorbed by the boundary.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, shortest_path

from .errors import DecodeInfeasible, InternalError, UsageError
from .lattice import CodeLayout
from .matching import Matching, WeightedGraph, mwpm, mwpm_commensurate
from .noise import NoiseParams
from .pauli import PauliOperator
from .syndrome import Defect, DefectSet, defect_kind

logger = logging.getLogger(__name__)

H = "H"
V = "V"


# --- weights and distance -------------------------------------------------


class StepWeights(NamedTuple):
    mu_t: float
    mu_p: float
    mu_d: float

    def values(self) -> tuple[float, float, float]:
        return self.mu_t, self.mu_p, self.mu_d


def step_weights(params: NoiseParams) -> StepWeights:
    """Time, parallel and diagonal step weights (negative log-likelihoods).

    ``mu_d`` is infinite at infinite bias and ``mu_t`` is infinite when
    measurements are perfect.
    """
    p, q, eta = params.p, params.q, params.eta
    if p <= 0 or p >= 1:
        raise UsageError(f"step weights need 0 < p < 1, got p={p}")
    odds = math.log(p / (1 - p))
    if math.isinf(eta):
        mu_p = -odds
        mu_d = math.inf
    else:
        mu_p = -math.log(eta / (eta + 1)) - odds
        mu_d = -math.log(1 / (2 * (eta + 1))) - odds
    mu_t = math.inf if q == 0 else -math.log(q / (1 - q))
    return StepWeights(mu_t, mu_p, mu_d)


class DecoderNode(NamedTuple):
    site: Defect  # real defect, or a virtual marker at an unstabilized vertex
    orientation: str  # "H" or "V"

    @property
    def virtual(self) -> bool:
        return self.site.virtual


def _axis_sep(a: int, b: int, period: int | None) -> int:
    s = abs(a - b)
    if period:
        s = min(s, period - s)
    return s


def _term(steps: int, weight: float) -> float:
    return steps * weight if steps else 0.0


def node_distance(
    a: DecoderNode,
    b: DecoderNode,
    weights: StepWeights,
    layout: CodeLayout,
    slices: int,
    periodic_time: bool = True,
) -> float:
    if a.orientation != b.orientation:
        raise UsageError("only nodes of the same orientation are compared")
    period = layout.d if layout.periodic else None
    dt = _axis_sep(a.site.t, b.site.t, slices if periodic_time else None)
    dr = _axis_sep(a.site.r, b.site.r, period)
    dc = _axis_sep(a.site.c, b.site.c, period)
    if a.orientation == H:
        d_diag, d_par = dr, dc
    else:
        d_diag, d_par = dc, dr
    if d_par >= d_diag:
        d_par -= d_diag
    else:
        d_par = (d_diag - d_par) % 2
    return _term(dt, weights.mu_t) + _term(d_par, weights.mu_p) + _term(d_diag, weights.mu_d)


def distance(a, b, weights: StepWeights, layout: CodeLayout, T: int, periodic_time: bool = True) -> float:
    """Distance between two same-orientation decoder nodes.

    Nodes may be given as :class:`DecoderNode` or as ``(r, c, t, orientation)``.
    """
    if not isinstance(a, DecoderNode):
        a = _node_from_tuple(a)
    if not isinstance(b, DecoderNode):
        b = _node_from_tuple(b)
    return node_distance(a, b, weights, layout, T, periodic_time)


def _node_from_tuple(node) -> DecoderNode:
    r, c, t, orientation = node
    return DecoderNode(Defect(t, r, c, defect_kind((r, c))), orientation)


def _distance_matrix(sites: list[Defect], orientation: str, weights: StepWeights,
                     layout: CodeLayout, slices: int, periodic_time: bool) -> np.ndarray:
    coords = np.array([(s.t, s.r, s.c) for s in sites], dtype=np.int64).reshape(-1, 3)
    sep = np.abs(coords[:, None, :] - coords[None, :, :])
    if periodic_time:
        sep[..., 0] = np.minimum(sep[..., 0], slices - sep[..., 0])
    if layout.periodic:
        sep[..., 1:] = np.minimum(sep[..., 1:], layout.d - sep[..., 1:])
    dt = sep[..., 0]
    d_diag, d_par = (sep[..., 1], sep[..., 2]) if orientation == H else (sep[..., 2], sep[..., 1])
    d_par = np.where(d_par >= d_diag, d_par - d_diag, (d_diag - d_par) % 2)
    out = np.zeros(dt.shape)
    with np.errstate(invalid="ignore"):
        for steps, w in ((dt, weights.mu_t), (d_par, weights.mu_p), (d_diag, weights.mu_d)):
            out += np.where(steps > 0, steps * w, 0.0)
    return out


# --- decoding graph --------------------------------------------------------


def virtual_sites(layout: CodeLayout, slices: int) -> list[Defect]:
    return [
        Defect(t, r, c, defect_kind((r, c)), True)
        for t in range(slices)
        for r, c in layout.unstabilized_vertices
    ]


@dataclass(frozen=True, eq=False)
class DecodingGraph:
    nodes: tuple[DecoderNode, ...]
    graph: WeightedGraph
    offset: float  # constant added to every edge to keep weights non-negative


def build_decoding_graph(
    defects: DefectSet,
    layout: CodeLayout,
    weights: StepWeights,
    T: int | None = None,
) -> DecodingGraph:
    """Complete same-orientation graph over H and V copies of every defect.

    Virtual H/V pairs are added at unstabilized boundary vertices for every
    time slice and linked by zero-weight edges.
    """
    slices = defects.slices if T is None else T
    periodic_time = defects.periodic_time
    sites = list(defects.defects) + virtual_sites(layout, slices)
    nodes = []
    for s in sites:
        nodes.append(DecoderNode(s, H))
        nodes.append(DecoderNode(s, V))
    edges = []
    for k, orientation in enumerate((H, V)):
        dist = _distance_matrix(sites, orientation, weights, layout, slices, periodic_time)
        iu, ju = np.triu_indices(len(sites), 1)
        w = dist[iu, ju]
        keep = np.isfinite(w)
        for i, j, wt in zip(iu[keep], ju[keep], w[keep]):
            edges.append((2 * int(i) + k, 2 * int(j) + k, float(wt)))
    n_real = len(defects)
    for i in range(n_real, len(sites)):
        edges.append((2 * i, 2 * i + 1, 0.0))
    low = min((w for _, _, w in edges), default=0.0)
    offset = -low if low < 0 else 0.0
    if offset:
        edges = [(u, v, w + offset) for u, v, w in edges]
    return DecodingGraph(tuple(nodes), WeightedGraph(len(nodes), tuple(edges)), offset)


def mwpm_by_component(graph: WeightedGraph) -> Matching:
    """Run :func:`mwpm` separately on each connected component."""
    n = graph.n
    if n == 0:
        return Matching((), 0.0)
    us = np.array([e[0] for e in graph.edges], dtype=np.int64)
    vs = np.array([e[1] for e in graph.edges], dtype=np.int64)
    adj = csr_matrix((np.ones(len(us)), (us, vs)), shape=(n, n))
    ncomp, labels = connected_components(adj, directed=False)
    if ncomp == 1:
        return mwpm(graph)
    members = [[] for _ in range(ncomp)]
    for v, lab in enumerate(labels):
        members[lab].append(v)
    local = {}
    for lab, nodes in enumerate(members):
        for i, v in enumerate(nodes):
            local[v] = (lab, i)
    comp_edges = [[] for _ in range(ncomp)]
    for u, v, w in graph.edges:
        lab, i = local[u]
        comp_edges[lab].append((i, local[v][1], w))
    pairs = []
    total = 0.0
    for lab, nodes in enumerate(members):
        m = mwpm(WeightedGraph(len(nodes), tuple(comp_edges[lab])))
        pairs.extend((nodes[i], nodes[j]) for i, j in m.pairs)
        total += m.weight
    pairs = tuple(sorted((min(u, v), max(u, v)) for u, v in pairs))
    return Matching(pairs, total)


# --- pairing of sites -------------------------------------------------------


@dataclass
class SitePairing:
    """H and V partners of every site taking part in the main matching.

    Unused virtual sites (matched only to their own twin) are absent.
    """

    h_mate: dict[Defect, Defect] = field(default_factory=dict)
    v_mate: dict[Defect, Defect] = field(default_factory=dict)

    def add(self, orientation: str, a: Defect, b: Defect) -> None:
        table = self.h_mate if orientation == H else self.v_mate
        if a in table or b in table:
            raise InternalError("site matched twice in one orientation")
        table[a] = b
        table[b] = a

    def weight(self, weights: StepWeights, layout: CodeLayout, slices: int, periodic_time: bool) -> float:
        total = 0.0
        for orientation, table in ((H, self.h_mate), (V, self.v_mate)):
            for a, b in table.items():
                if a < b:
                    total += node_distance(
                        DecoderNode(a, orientation), DecoderNode(b, orientation),
                        weights, layout, slices, periodic_time,
                    )
        return total


def pairing_from_matching(dg: DecodingGraph, matching: Matching) -> SitePairing:
    pairing = SitePairing()
    for u, v in matching.pairs:
        a, b = dg.nodes[u], dg.nodes[v]
        if a.site == b.site:
            continue  # virtual twin matched to itself: boundary pair unused
        if a.orientation != b.orientation:
            raise InternalError("matched nodes of different orientation")
        pairing.add(a.orientation, a.site, b.site)
    return pairing


# --- clusters ---------------------------------------------------------------


@dataclass(frozen=True)
class Cluster:
    defects: tuple[Defect, ...]

    @property
    def x_defects(self) -> list[Defect]:
        return [d for d in self.defects if d.kind == "X"]

    @property
    def y_defects(self) -> list[Defect]:
        return [d for d in self.defects if d.kind == "Y"]

    @property
    def charged(self) -> bool:
        return len(self.x_defects) % 2 == 1

    @property
    def charge(self) -> str:
        return "charged" if self.charged else "neutral"


def form_clusters(pairing: SitePairing) -> list[Cluster]:
    """Follow V then H matches alternately from each unvisited site."""
    h_mate, v_mate = pairing.h_mate, pairing.v_mate
    if h_mate.keys() != v_mate.keys():
        raise InternalError("some site lacks an H or a V partner")
    seen = set()
    clusters = []
    for start in sorted(h_mate):
        if start in seen:
            continue
        chain = [start]
        seen.add(start)
        cur = v_mate[start]
        use_h = True
        while cur != start:
            if cur in seen:
                raise InternalError("cluster chain does not close")
            chain.append(cur)
            seen.add(cur)
            cur = h_mate[cur] if use_h else v_mate[cur]
            use_h = not use_h
        if len(chain) % 2:
            raise InternalError("cluster of odd length")
        c = Cluster(tuple(chain))
        if len(c.x_defects) % 2 != len(c.y_defects) % 2:
            raise InternalError("cluster with unequal type parities")
        clusters.append(c)
    return clusters


# --- correction strings -----------------------------------------------------


def _signed_sep(a: int, b: int, period: int | None) -> int:
    # halfway round a cycle, take the way that does not wrap so that strings
    # joining the same two rows (or columns) always cover the same stretch
    s = b - a
    if period:
        s %= period
        if s > period / 2 or (s == period / 2 and b < a):
            s -= period
    return s


def _steps(n_main: int, n_side: int, side_dir: int, side_pos: int, side_max: int | None) -> list[int]:
    """Side-axis offsets for ``n_main`` diagonal moves that net ``n_side * side_dir``."""
    out = [side_dir] * n_side
    pos = side_pos + side_dir * n_side
    zig = 1 if side_max is None or pos + 1 <= side_max else -1
    for i in range(n_main - n_side):
        out.append(zig if i % 2 == 0 else -zig)
    return out


def string_faces(a: tuple[int, int], b: tuple[int, int], layout: CodeLayout,
                 shift: tuple[int, int] | None = None) -> list[int]:
    """Faces of a shortest diagonal staircase between same-colour vertices.

    ``shift`` fixes the displacement ``(dr, dc)`` from ``a`` to ``b``, which
    picks the way round the torus; by default the shortest one is used.
    """
    period = layout.d if layout.periodic else None
    if shift is None:
        dr = _signed_sep(a[0], b[0], period)
        dc = _signed_sep(a[1], b[1], period)
    else:
        dr, dc = shift
    if (dr + dc) % 2:
        raise InternalError(f"vertices {a} and {b} have different colours")
    limit = None if layout.periodic else layout.d
    r, c = a
    if abs(dr) >= abs(dc):
        rows = [1 if dr > 0 else -1] * abs(dr)
        cols = _steps(abs(dr), abs(dc), 1 if dc >= 0 else -1, c, limit)
    else:
        cols = [1 if dc > 0 else -1] * abs(dc)
        rows = _steps(abs(dc), abs(dr), 1 if dr >= 0 else -1, r, limit)
    faces = []
    for sr, sc in zip(rows, cols):
        faces.append(layout.face_index(min(r, r + sr), min(c, c + sc)))
        r += sr
        c += sc
    return faces


def string_operator(a: Defect, b: Defect, layout: CodeLayout,
                    shift: tuple[int, int] | None = None) -> PauliOperator:
    """Y string between X-type defects, X string between Y-type defects."""
    if a.kind != b.kind:
        raise InternalError("string endpoints of different type")
    letter = "Y" if a.kind == "X" else "X"
    return PauliOperator.from_faces(layout.n, letter, string_faces(a.vertex, b.vertex, layout, shift))


class Segment(NamedTuple):
    """Two same-type defects to be joined; ``shift`` is ``(dt, dr, dc)`` from ``a`` to ``b`` if fixed."""

    a: Defect
    b: Defect
    shift: tuple[int, int, int] | None = None


def _hop(u: Defect, v: Defect, layout: CodeLayout, slices: int, periodic_time: bool) -> tuple[int, int, int]:
    period = layout.d if layout.periodic else None
    return (
        _signed_sep(u.t, v.t, slices if periodic_time else None),
        _signed_sep(u.r, v.r, period),
        _signed_sep(u.c, v.c, period),
    )


def orient_cluster(cluster: Cluster, layout: CodeLayout, slices: int = 1,
                   periodic_time: bool = True) -> Cluster:
    """Rotate a cluster chain by one site if that tames the X-bearing hops.

    Pairing consecutive same-type defects leaves X or Y content along every
    other hop of the chain (the first, third, ...).  Starting one site later
    swaps that set for the complementary one.  The set with the smaller net
    displacement is kept, so a chain that winds round the torus one way does
    not drag low-rate content round with it; ties go to the shorter set.
    """
    chain = cluster.defects
    if len(chain) < 4:
        return cluster
    net = [[0, 0], [0, 0]]
    lengths = [0, 0]
    for i, u in enumerate(chain):
        h = _hop(u, chain[(i + 1) % len(chain)], layout, slices, periodic_time)
        net[i % 2][0] += h[1]
        net[i % 2][1] += h[2]
        lengths[i % 2] += abs(h[1]) + abs(h[2])
    keys = [(abs(n[0]) + abs(n[1]), length) for n, length in zip(net, lengths)]
    if keys[1] < keys[0]:
        return Cluster(chain[1:] + chain[:1])
    return cluster


def _cluster_segments(cluster: Cluster, layout: CodeLayout | None = None, slices: int = 1,
                      periodic_time: bool = True) -> tuple[list[Segment], Defect | None, Defect | None]:
    """Join consecutive same-type defects of a cluster.

    With a layout, each string follows the cluster's own chain of matched
    hops, so on the torus it winds the same way the chain does.
    """
    chain = cluster.defects
    offsets = None
    if layout is not None:
        offsets = [(0, 0, 0)]
        for u, v in zip(chain[:-1], chain[1:]):
            h = _hop(u, v, layout, slices, periodic_time)
            offsets.append(tuple(o + s for o, s in zip(offsets[-1], h)))
    segments = []
    leftovers = []
    for kind in ("X", "Y"):
        idx = [i for i, d in enumerate(chain) if d.kind == kind]
        for i, j in zip(idx[0:-1:2], idx[1::2]):
            shift = None
            if offsets is not None:
                shift = tuple(b - a for a, b in zip(offsets[i], offsets[j]))
            segments.append(Segment(chain[i], chain[j], shift))
        leftovers.append(chain[idx[-1]] if len(idx) % 2 else None)
    return segments, leftovers[0], leftovers[1]


def local_correction(cluster: Cluster, layout: CodeLayout) -> PauliOperator:
    op = PauliOperator.identity(layout.n)
    for a, b, shift in _cluster_segments(cluster, layout)[0]:
        op = op * string_operator(a, b, layout, shift[1:])
    return op


# --- residual matching of charged clusters ------------------------------------


def _manhattan_blocks(coords: np.ndarray, starts: np.ndarray, layout: CodeLayout,
                      slices: int, periodic_time: bool) -> np.ndarray:
    sep = np.abs(coords[:, None, :] - coords[None, :, :])
    if periodic_time:
        sep[..., 0] = np.minimum(sep[..., 0], slices - sep[..., 0])
    if layout.periodic:
        sep[..., 1:] = np.minimum(sep[..., 1:], layout.d - sep[..., 1:])
    dist = sep.sum(axis=2)
    dist = np.minimum.reduceat(dist, starts, axis=0)
    return np.minimum.reduceat(dist, starts, axis=1)


def _time_sep(a: int, b: int, slices: int, periodic_time: bool) -> int:
    return _axis_sep(a, b, slices if periodic_time else None)


def residual_segments(
    clusters: Iterable[Cluster],
    layout: CodeLayout,
    slices: int = 1,
    periodic_time: bool = True,
) -> list[tuple[Defect, Defect]]:
    """Strings that neutralise the charged clusters.

    Charged clusters are paired by minimum-weight matching on Manhattan
    cluster distances (time included).  A route between two charged clusters
    may hop through neutral clusters holding both defect types, entering and
    leaving at their first X-type and first Y-type defects.  On open patches
    a route may end at a corner, where a virtual X/Y defect pair sits in
    every time slice.
    """
    charged = []
    relays = []
    for cl in clusters:
        xs, ys = cl.x_defects, cl.y_defects
        if cl.charged:
            charged.append((cl, xs[-1], ys[-1]))
        elif xs and ys:
            relays.append((cl, xs[0], ys[0]))
    if not charged:
        return []
    k = len(charged)
    if layout.periodic and k % 2:
        raise DecodeInfeasible("odd number of charged clusters on the torus")
    members = charged + relays
    coords = []
    starts = []
    for cl, _, _ in members:
        starts.append(len(coords))
        coords.extend((d.t, d.r, d.c) for d in cl.defects)
    coords = np.array(coords, dtype=np.int64)
    starts = np.array(starts, dtype=np.int64)
    dist = _manhattan_blocks(coords, starts, layout, slices, periodic_time).astype(float)
    np.fill_diagonal(dist, 0.0)
    route, pred = shortest_path(dist, method="D", directed=False, indices=np.arange(k),
                                return_predecessors=True)

    corners = layout.corner_partners
    if corners:
        # distance from each member to the nearest corner pair, ignoring time
        corner_pts = np.array([v for pair in corners for v in pair])
        sep = np.abs(coords[:, None, 1:] - corner_pts[None, :, :]).sum(axis=2)
        nearest = np.minimum.reduceat(sep, starts, axis=0)  # members x corner vertices
        per_corner = nearest.reshape(len(members), len(corners), 2).min(axis=2)
        to_corner = per_corner.min(axis=1).astype(float)
        best_corner = per_corner.argmin(axis=1)
        via = route + to_corner[None, :]
        exit_member = via.argmin(axis=1)
        exit_cost = via[np.arange(k), exit_member]

    if corners:
        n = 2 * k
        edges = [(i, j, float(route[i, j])) for i in range(k) for j in range(i + 1, k)]
        edges += [(i, k + i, float(exit_cost[i])) for i in range(k)]
        edges += [(k + i, k + j, 0.0) for i in range(k) for j in range(i + 1, k)]
    else:
        n = k
        edges = [(i, j, float(route[i, j])) for i in range(k) for j in range(i + 1, k)]
    matching = mwpm(WeightedGraph(n, tuple(edges)))

    def path(i: int, j: int) -> list[int]:
        hops = [j]
        while hops[-1] != i:
            hops.append(int(pred[i, hops[-1]]))
        return hops[::-1]

    def chain_points(hops: list[int]) -> tuple[list[Defect], list[Defect]]:
        xs, ys = [], []
        for h in hops:
            _, x, y = members[h]
            xs.append(x)
            ys.append(y)
        return xs, ys

    segments = []
    for u, v in matching.pairs:
        if u >= k and v >= k:
            continue
        if v < k:
            xs, ys = chain_points(path(u, v))
        else:
            j = int(exit_member[u])
            xs, ys = chain_points(path(u, j))
            black, white = _corner_sites(corners[int(best_corner[j])], xs[-1].t)
            xs.append(black)
            ys.append(white)
        for chain in (xs, ys):
            segments.extend(Segment(a, b) for a, b in zip(chain[:-1], chain[1:]))
    return segments


def _corner_sites(pair, t: int) -> tuple[Defect, Defect]:
    sites = [Defect(t, r, c, defect_kind((r, c)), True) for r, c in pair]
    sites.sort(key=lambda s: s.kind)  # X-type (black) first
    return sites[0], sites[1]


def residual_decode(clusters: Iterable[Cluster], layout: CodeLayout, slices: int = 1,
                    periodic_time: bool = True) -> PauliOperator:
    op = PauliOperator.identity(layout.n)
    for a, b, _ in residual_segments(clusters, layout, slices, periodic_time):
        op = op * string_operator(a, b, layout)
    return op


# --- recovery plan ----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class RecoveryPlan:
    """Spatial correction plus inferred measurement-flip corrections.

    ``layers[t]`` is the part of the spatial correction attributed to time
    slice ``t``; ``spatial`` is their product.  ``temporal`` holds
    ``((r, c), round)`` flip corrections.
    """

    spatial: PauliOperator
    temporal: frozenset
    layers: tuple[PauliOperator, ...]
    clusters: tuple[Cluster, ...] = ()
    node_count: int = 0

    def crossings(self, black: bool) -> int:
        """Parity of temporal corrections on the last round for one colour class."""
        last = len(self.layers) - 1
        return sum(
            1 for (v, t) in self.temporal if t == last and ((v[0] + v[1]) % 2 == 0) == black
        ) % 2


def _time_path(ta: int, tb: int, slices: int, periodic_time: bool) -> list[int]:
    """Rounds flipped to carry a defect from slice ``ta`` to slice ``tb``.

    On a tie the path that avoids the seam between the last and the first
    slice is taken.
    """
    lo, hi = min(ta, tb), max(ta, tb)
    if not periodic_time or hi - lo <= slices - (hi - lo):
        return list(range(lo, hi))
    return list(range(hi, slices)) + list(range(0, lo))


def _time_steps(ta: int, dt: int, slices: int) -> list[int]:
    """Rounds flipped to carry a defect ``dt`` slices on from ``ta`` (either sign)."""
    if dt >= 0:
        return [(ta + k) % slices for k in range(dt)]
    return [(ta + dt + k) % slices for k in range(-dt)]


def assemble_plan(segments: list[Segment], layout: CodeLayout, slices: int,
                  periodic_time: bool) -> tuple[list[list[int]], dict]:
    """Place each string in a slice of a real endpoint and carry the other end in time."""
    layer_masks = [[0, 0] for _ in range(slices)]
    temporal: dict = {}
    for seg in segments:
        a, b, shift = Segment(*seg)
        if a.virtual and not b.virtual:
            a, b = b, a
            shift = None if shift is None else tuple(-s for s in shift)
        op = string_operator(a, b, layout, None if shift is None else shift[1:])
        slab = a.t
        layer_masks[slab][0] ^= op.x
        layer_masks[slab][1] ^= op.z
        if a.virtual or b.virtual:
            continue
        if shift is None:
            rounds = _time_path(a.t, b.t, slices, periodic_time) if b.t != a.t else []
        else:
            rounds = _time_steps(a.t, shift[0], slices)
        for rnd in rounds:
            key = (b.vertex, rnd)
            temporal[key] = not temporal.get(key, False)
    return layer_masks, temporal


def build_plan(segments, layout: CodeLayout, slices: int, periodic_time: bool,
               clusters=(), node_count: int = 0) -> RecoveryPlan:
    masks, temporal = assemble_plan(segments, layout, slices, periodic_time)
    layers = tuple(PauliOperator(layout.n, x, z) for x, z in masks)
    total = PauliOperator.identity(layout.n)
    for op in layers:
        total = total * op
    flips = frozenset(k for k, v in temporal.items() if v)
    return RecoveryPlan(total, flips, layers, tuple(clusters), node_count)


def plan_defects(plan: RecoveryPlan, layout: CodeLayout, periodic_time: bool = True) -> np.ndarray:
    """Defect pattern ``(slices, m)`` that the plan's spacetime correction would produce."""
    slices = len(plan.layers)
    m = len(layout.stabilized_vertices)
    out = np.zeros((slices, m), dtype=bool)
    for t, op in enumerate(plan.layers):
        out[t] ^= layout.syndrome(op)
    index = layout.stabilizer_index
    for v, rnd in plan.temporal:
        i = index[v]
        out[rnd, i] ^= True
        nxt = rnd + 1
        if nxt < slices:
            out[nxt, i] ^= True
        elif periodic_time:
            out[0, i] ^= True
    return out


# --- top level ----------------------------------------------------------------


def sparse_applicable(weights: StepWeights) -> bool:
    """The lattice shortest-path form of the distance needs non-negative steps and mu_d >= mu_p."""
    return all(w >= 0 for w in weights.values()) and weights.mu_d >= weights.mu_p


def weight_unit(weights: StepWeights) -> float | None:
    """The common step when only one weight is finite (infinite bias, perfect measurements)."""
    finite = [w for w in weights.values() if math.isfinite(w)]
    if len(finite) == 1 and finite[0] != 0:
        return abs(finite[0])
    return None


METHODS = ("auto", "sparse", "dense", "dense-grid")


def main_pairing(defects: DefectSet, layout: CodeLayout, weights: StepWeights,
                 method: str = "auto") -> SitePairing:
    """Optimal H/V pairing.

    ``sparse`` solves a T-join on the spacetime lattice, ``dense`` runs the
    blossom code on the complete graph, ``dense-grid`` hands the complete
    graph to PyMatching when all weights share one step size.
    """
    if method == "auto":
        if sparse_applicable(weights):
            method = "sparse"
        else:
            method = "dense-grid" if weight_unit(weights) else "dense"
    if method == "sparse":
        from .spacetime import lattice_matcher

        matcher = lattice_matcher(layout, weights, defects.slices, defects.periodic_time)
        return matcher.pair(defects)
    if method == "dense":
        dg = build_decoding_graph(defects, layout, weights)
        return pairing_from_matching(dg, mwpm_by_component(dg.graph))
    if method == "dense-grid":
        unit = weight_unit(weights)
        if unit is None:
            raise UsageError("dense-grid matching needs a single finite step weight")
        dg = build_decoding_graph(defects, layout, weights)
        return pairing_from_matching(dg, mwpm_commensurate(dg.graph, unit))
    raise UsageError(f"unknown matching method {method!r}")


def decode(defects: DefectSet, layout: CodeLayout, params: NoiseParams, T: int | None = None,
           method: str = "auto") -> RecoveryPlan:
    slices = defects.slices
    if T is not None and T + (0 if defects.periodic_time else 1) != slices:
        raise UsageError("round count does not match the defect set")
    node_count = 2 * len(defects) + 2 * len(layout.unstabilized_vertices) * slices
    if not defects.defects:
        return build_plan([], layout, slices, defects.periodic_time, (), node_count)
    weights = step_weights(params)
    pairing = main_pairing(defects, layout, weights, method)
    clusters = [orient_cluster(cl, layout, slices, defects.periodic_time) for cl in form_clusters(pairing)]
    segments = []
    for cl in clusters:
        segments.extend(_cluster_segments(cl, layout, slices, defects.periodic_time)[0])
    segments.extend(residual_segments(clusters, layout, slices, defects.periodic_time))
    return build_plan(segments, layout, slices, defects.periodic_time, clusters, node_count)
