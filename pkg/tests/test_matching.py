import itertools
import random
import time

import numpy as np
import pytest

from xysurface.errors import DecodeInfeasible, UsageError
from xysurface.matching import (BRUTE_FORCE_LIMIT, WeightedGraph, brute_force_matching, integer_multiples,
                                mwpm, mwpm_commensurate)

K4 = WeightedGraph.from_edges(4, [(0, 1, 1), (2, 3, 1), (0, 2, 5), (1, 3, 5), (0, 3, 5), (1, 2, 5)])


def _random_complete(rng, n):
    w = [[0.0] * n for _ in range(n)]
    for i, j in itertools.combinations(range(n), 2):
        w[i][j] = w[j][i] = rng.random()
    return WeightedGraph.complete(w)


def test_single_edge():
    m = mwpm(WeightedGraph.from_edges(2, [(0, 1, 0.7)]))
    assert m.pairs == ((0, 1),)
    assert m.weight == 0.7


def test_k4():
    for solve in (mwpm, brute_force_matching):
        m = solve(K4)
        assert m.pairs == ((0, 1), (2, 3))
        assert m.weight == 2


def test_odd_node_count():
    with pytest.raises(DecodeInfeasible):
        mwpm(WeightedGraph.from_edges(3, [(0, 1, 1), (1, 2, 1)]))


def test_no_perfect_matching():
    star = WeightedGraph.from_edges(4, [(0, 1, 1), (0, 2, 1), (0, 3, 1)])
    with pytest.raises(DecodeInfeasible):
        mwpm(star)


def test_empty_graph():
    for solve in (mwpm, brute_force_matching):
        m = solve(WeightedGraph(0, ()))
        assert m.pairs == () and m.weight == 0


def test_brute_force_limit():
    g = _random_complete(random.Random(0), BRUTE_FORCE_LIMIT + 2)
    with pytest.raises(UsageError):
        brute_force_matching(g)


def test_equal_weights():
    g = WeightedGraph.complete([[0 if i == j else 0.5 for j in range(6)] for i in range(6)])
    assert brute_force_matching(g).weight == pytest.approx(1.5)
    assert mwpm(g).weight == pytest.approx(1.5)


@pytest.mark.parametrize("bad", [[(0, 0, 1.0)], [(0, 1, -1.0)], [(0, 1, float("nan"))], [(0, 1, 1), (1, 0, 2)]])
def test_graph_validation(bad):
    with pytest.raises(UsageError):
        WeightedGraph.from_edges(2, bad)


def test_matching_is_perfect_and_uses_edges():
    rng = random.Random(3)
    for _ in range(50):
        n = rng.choice([4, 6, 8, 10])
        edges = {(i, j): rng.random() for i, j in itertools.combinations(range(n), 2) if rng.random() < 0.7}
        for i in range(0, n, 2):  # guarantee a perfect matching exists
            edges.setdefault((i, i + 1), rng.random())
        g = WeightedGraph.from_edges(n, [(i, j, w) for (i, j), w in edges.items()])
        m = mwpm(g)
        assert sorted(v for pr in m.pairs for v in pr) == list(range(n))
        assert all(pr in edges for pr in m.pairs)
        assert m.weight == pytest.approx(brute_force_matching(g).weight, abs=1e-9)


def test_scale_invariance():
    rng = random.Random(8)
    for _ in range(50):
        n = rng.choice([4, 6, 8, 10])
        g = _random_complete(rng, n)
        scaled = WeightedGraph(n, tuple((u, v, 3.7 * w) for u, v, w in g.edges))
        assert mwpm(g).pairs == mwpm(scaled).pairs


def test_deterministic_on_ties():
    g = WeightedGraph.complete([[0 if i == j else 1.0 for j in range(8)] for i in range(8)])
    assert len({mwpm(g).pairs for _ in range(5)}) == 1


def test_integer_multiples():
    g = WeightedGraph.from_edges(4, [(0, 1, 0.0), (1, 2, 2.5), (2, 3, 5.0)])
    assert integer_multiples(g, 2.5) == [0, 1, 2]
    assert integer_multiples(g, 2.0) is None


def test_commensurate_agrees_with_exact():
    rng = random.Random(21)
    for _ in range(200):
        n = rng.choice([4, 6, 8, 10, 12])
        unit = rng.uniform(0.5, 3)
        edges = [(i, j, unit * rng.randint(0, 6)) for i, j in itertools.combinations(range(n), 2)
                 if rng.random() < 0.6]
        edges += [(i, i + 1, unit * rng.randint(0, 6)) for i in range(0, n, 2)
                  if not any(e[:2] == (i, i + 1) for e in edges)]
        g = WeightedGraph.from_edges(n, edges)
        a = mwpm_commensurate(g, unit)
        assert a.weight == pytest.approx(mwpm(g).weight, abs=1e-9)
        assert sorted(v for pr in a.pairs for v in pr) == list(range(n))


def test_runtime_no_worse_than_cubic():
    rng = random.Random(1)
    times = {}
    for n in (20, 60):
        g = _random_complete(rng, n)
        t0 = time.perf_counter()
        mwpm(g)
        times[n] = max(time.perf_counter() - t0, 1e-4)
    assert times[60] / times[20] < 27 * 10  # cubic growth with a generous constant
