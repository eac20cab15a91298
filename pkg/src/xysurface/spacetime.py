"""Main matching on a sparse spacetime lattice.

The H-node distance is the length of a shortest path on a lattice whose
edges are horizontal steps (weight mu_p), diagonal steps (mu_d) and time
steps (mu_t); V nodes use the transposed lattice.  That holds whenever all
three weights are non-negative and mu_d >= mu_p.  Under those conditions a
minimum-weight perfect matching on the complete graph of H/V nodes has the
same cost as a minimum T-join on the union of the two lattices, with the
virtual boundary pairs turned into zero-weight edges between the lattices.

PyMatching solves the T-join.  The returned edge set is cut into walks
between defect nodes; each time a walk uses a boundary edge between the
lattices it is split there, which recovers a perfect matching of H and V
nodes with the optimal total weight.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
import pymatching

from .decoder import H, V, SitePairing, StepWeights
from .errors import DecodeInfeasible, InternalError
from .lattice import CodeLayout
from .syndrome import Defect, DefectSet, defect_kind


class LatticeMatcher:
    def __init__(self, layout: CodeLayout, weights: StepWeights, slices: int, periodic_time: bool):
        self.layout = layout
        self.weights = weights
        self.slices = slices
        self.periodic_time = periodic_time
        self.side = layout.size
        self.per_slice = self.side * self.side
        self.n_h = slices * self.per_slice
        self.twin = {}
        self.matcher = pymatching.Matching()
        for u, v, w in self._edges():
            self.matcher.add_edge(u, v, weight=w, merge_strategy="smallest-weight")
        for t in range(slices):
            for r, c in layout.unstabilized_vertices:
                h = self.node(H, t, r, c)
                v = h + self.n_h
                self.twin[h] = v
                self.twin[v] = h
                self.matcher.add_edge(h, v, weight=0.0, merge_strategy="smallest-weight")
        self.n_nodes = 2 * self.n_h

    def node(self, orientation: str, t: int, r: int, c: int) -> int:
        idx = t * self.per_slice + r * self.side + c
        return idx if orientation == H else idx + self.n_h

    def position(self, node: int) -> tuple[str, int, int, int]:
        orientation = H if node < self.n_h else V
        t, rest = divmod(node % self.n_h, self.per_slice)
        r, c = divmod(rest, self.side)
        return orientation, t, r, c

    def _edges(self):
        mu_t, mu_p, mu_d = self.weights
        S = self.side
        wrap = self.layout.periodic

        def step(r, c, dr, dc):
            r2, c2 = r + dr, c + dc
            if wrap:
                return r2 % S, c2 % S
            if 0 <= r2 < S and 0 <= c2 < S:
                return r2, c2
            return None

        for t in range(self.slices):
            for r in range(S):
                for c in range(S):
                    for orientation, (dr, dc) in ((H, (0, 1)), (V, (1, 0))):
                        nb = step(r, c, dr, dc)
                        if nb is not None and np.isfinite(mu_p):
                            yield self.node(orientation, t, r, c), self.node(orientation, t, *nb), mu_p
                    if np.isfinite(mu_d):
                        for dc in (1, -1):
                            nb = step(r, c, 1, dc)
                            if nb is None:
                                continue
                            for orientation in (H, V):
                                yield self.node(orientation, t, r, c), self.node(orientation, t, *nb), mu_d
                    if np.isfinite(mu_t):
                        t2 = t + 1
                        if t2 == self.slices:
                            if not self.periodic_time or self.slices < 3:
                                continue
                            t2 = 0
                        for orientation in (H, V):
                            yield self.node(orientation, t, r, c), self.node(orientation, t2, r, c), mu_t

    def _site(self, node: int, real: dict) -> Defect:
        _, t, r, c = self.position(node)
        site = real.get((t, r, c))
        if site is None:
            site = Defect(t, r, c, defect_kind((r, c)), True)
        return site

    def pair(self, defects: DefectSet) -> SitePairing:
        real = {(d.t, d.r, d.c): d for d in defects.defects}
        detection = np.zeros(self.n_nodes, dtype=np.uint8)
        targets = []
        for d in defects.defects:
            for orientation in (H, V):
                k = self.node(orientation, d.t, d.r, d.c)
                detection[k] = 1
                targets.append(k)
        try:
            join = self.matcher.decode_to_edges_array(detection)
        except ValueError as exc:
            raise DecodeInfeasible(str(exc)) from exc
        adj: dict[int, list[int]] = {}
        for u, v in join.tolist():
            if v < 0 or u < 0:
                raise InternalError("unexpected boundary edge in the lattice")
            adj.setdefault(u, []).append(v)
            adj.setdefault(v, []).append(u)

        pairing = SitePairing()
        pending = set(targets)
        for start in sorted(targets):
            if start not in pending:
                continue
            pending.discard(start)
            cur = start
            via_twin = False
            stops = [start]
            while True:
                nbrs = adj.get(cur)
                if not nbrs:
                    raise InternalError("edge walk stranded")
                twin = self.twin.get(cur)
                if twin is None:
                    nxt = nbrs[-1]
                elif via_twin:
                    nxt = next(x for x in reversed(nbrs) if x != twin)
                else:
                    nxt = next((x for x in reversed(nbrs) if x != twin), twin)
                nbrs.remove(nxt)
                adj[nxt].remove(cur)
                via_twin = nxt == twin
                if via_twin:
                    stops.extend((cur, nxt))
                cur = nxt
                if cur in pending:
                    pending.discard(cur)
                    stops.append(cur)
                    break
            for a, b in zip(stops[0::2], stops[1::2]):
                orientation = H if a < self.n_h else V
                pairing.add(orientation, self._site(a, real), self._site(b, real))
        return pairing


@lru_cache(maxsize=32)
def lattice_matcher(layout: CodeLayout, weights: StepWeights, slices: int, periodic_time: bool) -> LatticeMatcher:
    return LatticeMatcher(layout, weights, slices, periodic_time)
