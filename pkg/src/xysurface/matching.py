"""Minimum-weight perfect matching on general graphs.

``mwpm`` runs Edmonds' primal-dual blossom algorithm (the O(n^3) variant
with per-blossom best-edge bookkeeping due to Galil) on the transformed
weights ``2 W - w``, asking for a maximum-weight matching of maximum
cardinality.  Every perfect matching has the same number of edges, so the
maximum of the transformed total is the minimum of the original total.

``mwpm_commensurate`` handles graphs whose weights are all integer multiples
of one unit by handing a shifted copy to PyMatching: adding a large constant
to every edge makes any odd-degree edge set that is not a perfect matching
cost more than every perfect matching, and integer weights survive
PyMatching's weight discretisation exactly.

``brute_force_matching`` enumerates all perfect matchings and is only meant
as a reference for small graphs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import pymatching

from .errors import DecodeInfeasible, UsageError

BRUTE_FORCE_LIMIT = 12
_PYMATCHING_LEVELS = 2**24 - 1


@dataclass(frozen=True)
class WeightedGraph:
    n: int
    edges: tuple[tuple[int, int, float], ...]

    def __post_init__(self):
        seen = set()
        for u, v, w in self.edges:
            if u == v:
                raise UsageError(f"self-loop at node {u}")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise UsageError(f"edge ({u}, {v}) references a missing node")
            if not (math.isfinite(w) and w >= 0):
                raise UsageError(f"edge ({u}, {v}) has weight {w}; need finite and >= 0")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise UsageError(f"duplicate edge {key}")
            seen.add(key)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int, float]]) -> "WeightedGraph":
        return cls(n, tuple((int(u), int(v), float(w)) for u, v, w in edges))

    @classmethod
    def complete(cls, weights: Sequence[Sequence[float]]) -> "WeightedGraph":
        """Complete graph from a symmetric matrix; infinite entries are left out."""
        n = len(weights)
        edges = [
            (i, j, float(weights[i][j]))
            for i in range(n)
            for j in range(i + 1, n)
            if math.isfinite(weights[i][j])
        ]
        return cls(n, tuple(edges))


@dataclass(frozen=True)
class Matching:
    pairs: tuple[tuple[int, int], ...]
    weight: float

    def mate_of(self) -> dict[int, int]:
        out = {}
        for u, v in self.pairs:
            out[u] = v
            out[v] = u
        return out


def _normalise(pairs: Iterable[tuple[int, int]]) -> tuple[tuple[int, int], ...]:
    return tuple(sorted((min(u, v), max(u, v)) for u, v in pairs))


def brute_force_matching(graph: WeightedGraph) -> Matching:
    n = graph.n
    if n > BRUTE_FORCE_LIMIT:
        raise UsageError(f"brute force is limited to {BRUTE_FORCE_LIMIT} nodes")
    if n % 2:
        raise DecodeInfeasible("odd number of nodes")
    adj = {}
    for u, v, w in graph.edges:
        adj[(u, v)] = adj[(v, u)] = w

    best_weight = math.inf
    best_pairs = None

    def search(free: tuple[int, ...], pairs: list, total: float):
        nonlocal best_weight, best_pairs
        if not free:
            if total < best_weight:
                best_weight, best_pairs = total, list(pairs)
            return
        u, rest = free[0], free[1:]
        for i, v in enumerate(rest):
            w = adj.get((u, v))
            if w is None:
                continue
            pairs.append((u, v))
            search(rest[:i] + rest[i + 1:], pairs, total + w)
            pairs.pop()

    search(tuple(range(n)), [], 0.0)
    if best_pairs is None:
        raise DecodeInfeasible("graph has no perfect matching")
    return Matching(_normalise(best_pairs), best_weight)


def mwpm(graph: WeightedGraph) -> Matching:
    n = graph.n
    if n % 2:
        raise DecodeInfeasible("odd number of nodes")
    if n == 0:
        return Matching((), 0.0)
    # fixed edge order gives reproducible choices among equal optima
    edges = sorted(graph.edges, key=lambda e: (e[2], min(e[0], e[1]), max(e[0], e[1])))
    top = max((w for _, _, w in edges), default=0.0)
    big = 2 * top if top > 0 else 1.0
    mate = _max_weight_matching(n, [(u, v, big - w) for u, v, w in edges])
    if any(m < 0 for m in mate):
        raise DecodeInfeasible("graph has no perfect matching")
    weights = {}
    for u, v, w in graph.edges:
        weights[(u, v)] = weights[(v, u)] = w
    pairs = _normalise((u, mate[u]) for u in range(n) if u < mate[u])
    return Matching(pairs, math.fsum(weights[p] for p in pairs))


def integer_multiples(graph: WeightedGraph, unit: float) -> list[int] | None:
    """Edge weights as multiples of ``unit``, or None if any is off-grid."""
    out = []
    for _, _, w in graph.edges:
        k = round(w / unit)
        if abs(w - k * unit) > 1e-9 * max(1.0, abs(w)):
            return None
        out.append(k)
    return out


def mwpm_commensurate(graph: WeightedGraph, unit: float) -> Matching:
    """Same optimum as :func:`mwpm` for weights on a ``unit`` grid, usually far faster."""
    n = graph.n
    ks = integer_multiples(graph, unit) if unit > 0 else None
    if n == 0 or n % 2 or ks is None or not ks:
        return mwpm(graph)
    top = max(ks)
    shift = n * top + 1
    # distinct totals differ by a whole unit; keep the summed rounding error below half of it
    if _PYMATCHING_LEVELS / (shift + top) <= n:
        return mwpm(graph)
    touched = np.zeros(n, dtype=bool)
    m = pymatching.Matching()
    for (u, v, _), k in zip(graph.edges, ks):
        m.add_edge(u, v, weight=float(k + shift))
        touched[u] = touched[v] = True
    if not touched.all():
        raise DecodeInfeasible("graph has no perfect matching")
    try:
        edges = m.decode_to_edges_array(np.ones(n, dtype=np.uint8))
    except ValueError:
        return mwpm(graph)
    if len(edges) != n // 2 or len(np.unique(edges)) != n:
        return mwpm(graph)
    weights = {}
    for u, v, w in graph.edges:
        weights[(u, v)] = weights[(v, u)] = w
    pairs = _normalise((int(u), int(v)) for u, v in edges)
    return Matching(pairs, math.fsum(weights[p] for p in pairs))


def _max_weight_matching(nvertex: int, edges: list[tuple[int, int, float]]) -> list[int]:
    """Maximum-weight matching among maximum-cardinality matchings.

    Returns ``mate`` with ``mate[v]`` the partner of ``v`` or -1.
    Edge ``k`` has endpoints ``2k`` and ``2k + 1``; ``endpoint[p]`` is the
    vertex at endpoint ``p`` and ``p ^ 1`` is the other end.
    """
    nedge = len(edges)
    if nedge == 0:
        return [-1] * nvertex
    maxweight = max(0.0, max(w for _, _, w in edges))
    endpoint = [edges[p >> 1][p & 1] for p in range(2 * nedge)]
    neighbend = [[] for _ in range(nvertex)]
    for k, (i, j, _) in enumerate(edges):
        neighbend[i].append(2 * k + 1)
        neighbend[j].append(2 * k)

    # mate[v]: remote endpoint of v's matched edge, or -1
    mate = [-1] * nvertex
    # labels for top-level blossoms: 0 free, 1 S (outer), 2 T (inner)
    label = [0] * (2 * nvertex)
    labelend = [-1] * (2 * nvertex)
    inblossom = list(range(nvertex))
    blossomparent = [-1] * (2 * nvertex)
    blossomchilds: list = [None] * (2 * nvertex)
    blossombase = list(range(nvertex)) + [-1] * nvertex
    blossomendps: list = [None] * (2 * nvertex)
    bestedge = [-1] * (2 * nvertex)
    blossombestedges: list = [None] * (2 * nvertex)
    unusedblossoms = list(range(nvertex, 2 * nvertex))
    dualvar = [maxweight] * nvertex + [0.0] * nvertex
    allowedge = [False] * nedge
    queue: list[int] = []

    def slack(k):
        i, j, wt = edges[k]
        return dualvar[i] + dualvar[j] - 2 * wt

    def leaves(b):
        if b < nvertex:
            yield b
        else:
            for t in blossomchilds[b]:
                if t < nvertex:
                    yield t
                else:
                    yield from leaves(t)

    def assign_label(w, t, p):
        b = inblossom[w]
        label[w] = label[b] = t
        labelend[w] = labelend[b] = p
        bestedge[w] = bestedge[b] = -1
        if t == 1:
            queue.extend(leaves(b))
        else:
            base = blossombase[b]
            assign_label(endpoint[mate[base]], 1, mate[base] ^ 1)

    def scan_blossom(v, w):
        """Trace back from v and w; return the new blossom's base or -1 on augmenting path."""
        path = []
        base = -1
        while v != -1 or w != -1:
            b = inblossom[v]
            if label[b] & 4:
                base = blossombase[b]
                break
            path.append(b)
            label[b] = 5
            if labelend[b] == -1:
                v = -1
            else:
                v = endpoint[labelend[b]]
                b = inblossom[v]
                v = endpoint[labelend[b]]
            if w != -1:
                v, w = w, v
        for b in path:
            label[b] = 1
        return base

    def add_blossom(base, k):
        v, w, _ = edges[k]
        bb = inblossom[base]
        bv = inblossom[v]
        bw = inblossom[w]
        b = unusedblossoms.pop()
        blossombase[b] = base
        blossomparent[b] = -1
        blossomparent[bb] = b
        path = blossomchilds[b] = []
        endps = blossomendps[b] = []
        while bv != bb:
            blossomparent[bv] = b
            path.append(bv)
            endps.append(labelend[bv])
            v = endpoint[labelend[bv]]
            bv = inblossom[v]
        path.append(bb)
        path.reverse()
        endps.reverse()
        endps.append(2 * k)
        while bw != bb:
            blossomparent[bw] = b
            path.append(bw)
            endps.append(labelend[bw] ^ 1)
            w = endpoint[labelend[bw]]
            bw = inblossom[w]
        label[b] = 1
        labelend[b] = labelend[bb]
        dualvar[b] = 0.0
        for v in leaves(b):
            if label[inblossom[v]] == 2:
                queue.append(v)
            inblossom[v] = b
        bestedgeto = [-1] * (2 * nvertex)
        for bv in path:
            if blossombestedges[bv] is None:
                nblists = [[p >> 1 for p in neighbend[v]] for v in leaves(bv)]
            else:
                nblists = [blossombestedges[bv]]
            for nblist in nblists:
                for k2 in nblist:
                    i, j, _ = edges[k2]
                    if inblossom[j] == b:
                        i, j = j, i
                    bj = inblossom[j]
                    if (
                        bj != b
                        and label[bj] == 1
                        and (bestedgeto[bj] == -1 or slack(k2) < slack(bestedgeto[bj]))
                    ):
                        bestedgeto[bj] = k2
            blossombestedges[bv] = None
            bestedge[bv] = -1
        blossombestedges[b] = [k2 for k2 in bestedgeto if k2 != -1]
        bestedge[b] = -1
        for k2 in blossombestedges[b]:
            if bestedge[b] == -1 or slack(k2) < slack(bestedge[b]):
                bestedge[b] = k2

    def expand_blossom(b, endstage):
        for s in blossomchilds[b]:
            blossomparent[s] = -1
            if s < nvertex:
                inblossom[s] = s
            elif endstage and dualvar[s] == 0:
                expand_blossom(s, endstage)
            else:
                for v in leaves(s):
                    inblossom[v] = s
        if not endstage and label[b] == 2:
            entrychild = inblossom[endpoint[labelend[b] ^ 1]]
            j = blossomchilds[b].index(entrychild)
            if j & 1:
                j -= len(blossomchilds[b])
                jstep = 1
                endptrick = 0
            else:
                jstep = -1
                endptrick = 1
            p = labelend[b]
            while j != 0:
                label[endpoint[p ^ 1]] = 0
                label[endpoint[blossomendps[b][j - endptrick] ^ endptrick ^ 1]] = 0
                assign_label(endpoint[p ^ 1], 2, p)
                allowedge[blossomendps[b][j - endptrick] >> 1] = True
                j += jstep
                p = blossomendps[b][j - endptrick] ^ endptrick
                allowedge[p >> 1] = True
                j += jstep
            bv = blossomchilds[b][j]
            label[endpoint[p ^ 1]] = label[bv] = 2
            labelend[endpoint[p ^ 1]] = labelend[bv] = p
            bestedge[bv] = -1
            j += jstep
            while blossomchilds[b][j] != entrychild:
                bv = blossomchilds[b][j]
                if label[bv] == 1:
                    j += jstep
                    continue
                for v in leaves(bv):
                    if label[v] != 0:
                        break
                if label[v] != 0:
                    label[v] = 0
                    label[endpoint[mate[blossombase[bv]]]] = 0
                    assign_label(v, 2, labelend[v])
                j += jstep
        label[b] = labelend[b] = -1
        blossomchilds[b] = blossomendps[b] = None
        blossombase[b] = -1
        blossombestedges[b] = None
        bestedge[b] = -1
        unusedblossoms.append(b)

    def augment_blossom(b, v):
        t = v
        while blossomparent[t] != b:
            t = blossomparent[t]
        if t >= nvertex:
            augment_blossom(t, v)
        i = j = blossomchilds[b].index(t)
        if i & 1:
            j -= len(blossomchilds[b])
            jstep = 1
            endptrick = 0
        else:
            jstep = -1
            endptrick = 1
        while j != 0:
            j += jstep
            t = blossomchilds[b][j]
            p = blossomendps[b][j - endptrick] ^ endptrick
            if t >= nvertex:
                augment_blossom(t, endpoint[p])
            j += jstep
            t = blossomchilds[b][j]
            if t >= nvertex:
                augment_blossom(t, endpoint[p ^ 1])
            mate[endpoint[p]] = p ^ 1
            mate[endpoint[p ^ 1]] = p
        blossomchilds[b] = blossomchilds[b][i:] + blossomchilds[b][:i]
        blossomendps[b] = blossomendps[b][i:] + blossomendps[b][:i]
        blossombase[b] = blossombase[blossomchilds[b][0]]

    def augment_matching(k):
        v, w, _ = edges[k]
        for s, p in ((v, 2 * k + 1), (w, 2 * k)):
            while True:
                bs = inblossom[s]
                if bs >= nvertex:
                    augment_blossom(bs, s)
                mate[s] = p
                if labelend[bs] == -1:
                    break
                t = endpoint[labelend[bs]]
                bt = inblossom[t]
                s = endpoint[labelend[bt]]
                j = endpoint[labelend[bt] ^ 1]
                if bt >= nvertex:
                    augment_blossom(bt, j)
                mate[j] = labelend[bt]
                p = labelend[bt] ^ 1

    for _ in range(nvertex):
        # new stage
        label[:] = [0] * (2 * nvertex)
        bestedge[:] = [-1] * (2 * nvertex)
        for b in range(nvertex, 2 * nvertex):
            blossombestedges[b] = None
        allowedge[:] = [False] * nedge
        queue[:] = []
        for v in range(nvertex):
            if mate[v] == -1 and label[inblossom[v]] == 0:
                assign_label(v, 1, -1)
        augmented = False
        while True:
            while queue and not augmented:
                v = queue.pop()
                for p in neighbend[v]:
                    k = p >> 1
                    w = endpoint[p]
                    if inblossom[v] == inblossom[w]:
                        continue
                    if not allowedge[k]:
                        kslack = slack(k)
                        if kslack <= 0:
                            allowedge[k] = True
                    if allowedge[k]:
                        if label[inblossom[w]] == 0:
                            assign_label(w, 2, p ^ 1)
                        elif label[inblossom[w]] == 1:
                            base = scan_blossom(v, w)
                            if base >= 0:
                                add_blossom(base, k)
                            else:
                                augment_matching(k)
                                augmented = True
                                break
                        elif label[w] == 0:
                            label[w] = 2
                            labelend[w] = p ^ 1
                    elif label[inblossom[w]] == 1:
                        b = inblossom[v]
                        if bestedge[b] == -1 or kslack < slack(bestedge[b]):
                            bestedge[b] = k
                    elif label[w] == 0:
                        if bestedge[w] == -1 or kslack < slack(bestedge[w]):
                            bestedge[w] = k
            if augmented:
                break

            # no augmenting path yet: adjust duals
            deltatype = -1
            delta = deltaedge = deltablossom = None
            # with maximum cardinality requested, vertex duals may go negative
            for v in range(nvertex):
                if label[inblossom[v]] == 0 and bestedge[v] != -1:
                    d = slack(bestedge[v])
                    if deltatype == -1 or d < delta:
                        delta, deltatype, deltaedge = d, 2, bestedge[v]
            for b in range(2 * nvertex):
                if blossomparent[b] == -1 and label[b] == 1 and bestedge[b] != -1:
                    d = slack(bestedge[b]) / 2
                    if deltatype == -1 or d < delta:
                        delta, deltatype, deltaedge = d, 3, bestedge[b]
            for b in range(nvertex, 2 * nvertex):
                if (
                    blossombase[b] >= 0
                    and blossomparent[b] == -1
                    and label[b] == 2
                    and (deltatype == -1 or dualvar[b] < delta)
                ):
                    delta, deltatype, deltablossom = dualvar[b], 4, b
            if deltatype == -1:
                # no further progress possible; finish with the current matching
                deltatype = 1
                delta = max(0.0, min(dualvar[:nvertex]))

            for v in range(nvertex):
                lab = label[inblossom[v]]
                if lab == 1:
                    dualvar[v] -= delta
                elif lab == 2:
                    dualvar[v] += delta
            for b in range(nvertex, 2 * nvertex):
                if blossombase[b] >= 0 and blossomparent[b] == -1:
                    if label[b] == 1:
                        dualvar[b] += delta
                    elif label[b] == 2:
                        dualvar[b] -= delta

            if deltatype == 1:
                break
            if deltatype == 2:
                allowedge[deltaedge] = True
                i, j, _ = edges[deltaedge]
                if label[inblossom[i]] == 0:
                    i, j = j, i
                queue.append(i)
            elif deltatype == 3:
                allowedge[deltaedge] = True
                i, j, _ = edges[deltaedge]
                queue.append(i)
            else:
                expand_blossom(deltablossom, False)

        if not augmented:
            break
        # expand S-blossoms whose dual reached zero
        for b in range(nvertex, 2 * nvertex):
            if (
                blossomparent[b] == -1
                and blossombase[b] >= 0
                and label[b] == 1
                and dualvar[b] == 0
            ):
                expand_blossom(b, True)

    return [endpoint[p] if p >= 0 else -1 for p in mate]
