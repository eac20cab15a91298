"""Acceptance suite: one PASS/FAIL line per criterion, collected in the terminal summary.

The threshold criteria run full Monte Carlo grids and take most of an hour
on a single core.
"""

import itertools
import math
import random

import numpy as np
import pytest

from xysurface.decoder import H, decode, distance, step_weights
from xysurface.failure import spatial_failure, temporal_failure
from xysurface.harness import TrialConfig, crossing_estimate, fit_threshold, run_batch, run_grid
from xysurface.lattice import build_code
from xysurface.matching import WeightedGraph, brute_force_matching, mwpm
from xysurface.noise import INF, ErrorHistory, NoiseParams, hashing_bound
from xysurface.pauli import PauliOperator
from xysurface.syndrome import extract_defects, measure_rounds


def _grid(start, stop, step):
    return [round(start + i * step, 6) for i in range(int(round((stop - start) / step)) + 1)]


def _curve_text(results):
    return "; ".join(f"d={c.config.d} p={c.config.params.p:g} f={c.rate:.3f}" for c in results.cells)


def test_criterion_01_infinite_bias_open_threshold(criterion):
    with criterion(1, "infinite bias, perfect measurements, open patch: p_th in [0.42, 0.52]") as note:
        res = run_grid([9, 13, 17], _grid(0.38, 0.54, 0.02), "open", INF, trials=5000, seed=1, q=0.0)
        print(_curve_text(res))
        est = fit_threshold(res)
        note["detail"] = f"p_th={est.p_th:.4f} sigma={est.sigma:.4f} nu={est.nu:.3f}"
        assert 0.42 <= est.p_th <= 0.52


def test_criterion_02_infinite_bias_phenomenological_torus(criterion):
    with criterion(2, "infinite bias, q = p, T = d, torus: p_th in [0.055, 0.072]") as note:
        res = run_grid([8, 12, 16], _grid(0.050, 0.075, 0.005), "periodic", INF, trials=2000, seed=7, q=None)
        print(_curve_text(res))
        est = fit_threshold(res)
        note["detail"] = f"p_th={est.p_th:.4f} sigma={est.sigma:.4f} nu={est.nu:.3f}"
        assert 0.055 <= est.p_th <= 0.072


def test_criterion_03_bias_100_phenomenological_open(criterion):
    with criterion(3, "eta = 100, q = p, T = d, open patch: p_th in [0.042, 0.058]") as note:
        res = run_grid([9, 13, 17], _grid(0.040, 0.060, 0.004), "open", 100, trials=2000, seed=3, q=None)
        print(_curve_text(res))
        est = fit_threshold(res)
        note["detail"] = f"p_th={est.p_th:.4f} sigma={est.sigma:.4f} nu={est.nu:.3f}"
        assert 0.042 <= est.p_th <= 0.058


ORDERING_GRIDS = {
    0.5: _grid(0.11, 0.17, 0.01),
    10: _grid(0.14, 0.26, 0.02),
    100: _grid(0.17, 0.32, 0.025),
    INF: _grid(0.175, 0.325, 0.025),
}


def test_criterion_04_threshold_ordering_in_bias(criterion):
    with criterion(4, "torus thresholds increase with eta and stay below hashing bound + 0.01") as note:
        found = {}
        for eta, ps in ORDERING_GRIDS.items():
            res = run_grid([12, 16], ps, "periodic", eta, trials=2000, seed=4, q=0.0)
            print(f"eta={eta}: {_curve_text(res)}")
            # two distances leave no room for a five-parameter fit; use the curve crossing
            found[eta] = crossing_estimate(res)
        note["detail"] = " ".join(f"eta={e}:{p:.4f}(bound {hashing_bound(e):.4f})" for e, p in found.items())
        values = list(found.values())
        assert all(a < b for a, b in zip(values, values[1:]))
        assert all(p <= hashing_bound(e) + 0.01 for e, p in found.items())


def test_criterion_05_matching_oracle(criterion):
    with criterion(5, "mwpm equals brute force on 1000 random graphs") as note:
        rng = random.Random(2024)
        worst = 0.0
        for _ in range(1000):
            n = rng.choice([4, 6, 8, 10])
            w = [[0.0] * n for _ in range(n)]
            for i, j in itertools.combinations(range(n), 2):
                w[i][j] = w[j][i] = rng.random()
            g = WeightedGraph.complete(w)
            worst = max(worst, abs(mwpm(g).weight - brute_force_matching(g).weight))
        note["detail"] = f"max |difference| = {worst:.2e}"
        assert worst <= 1e-9


def _single_error_history(layout, T, t, face=None, letter=None, flip=None):
    m = len(layout.stabilized_vertices)
    x = np.zeros((T, layout.n), dtype=bool)
    z = np.zeros((T, layout.n), dtype=bool)
    f = np.zeros((T, m), dtype=bool)
    if face is not None:
        op = PauliOperator.single(layout.n, face, letter)
        x[t], z[t] = op.x_support, op.z_support
    if flip is not None:
        f[t, flip] = True
    return ErrorHistory(x, z, f)


def _corrected(layout, params, h):
    plan = decode(extract_defects(measure_rounds(layout, h)), layout, params)
    if spatial_failure(h.accumulated(), plan.spatial, layout):
        return False
    return not (layout.periodic and h.T > 1 and temporal_failure(h, plan, layout))


# the torus needs even d, so its nearest admissible size stands in for d = 5
@pytest.mark.parametrize("d,boundary", [(5, "open"), (6, "periodic")])
def test_criterion_06_single_faults_corrected(criterion, d, boundary):
    with criterion(6, f"every single fault corrected, d={d} {boundary}, eta=100") as note:
        layout = build_code(d, boundary)
        ideal = NoiseParams(100, 0.05)
        noisy = NoiseParams(100, 0.05, 0.05)
        T = 5
        bad = []
        count = 0
        for face in range(layout.n):
            for letter in "XYZ":
                count += 1
                if not _corrected(layout, ideal, _single_error_history(layout, 1, 0, face, letter)):
                    bad.append(("ideal", face, letter))
                for t in range(T):
                    count += 1
                    if not _corrected(layout, noisy, _single_error_history(layout, T, t, face, letter)):
                        bad.append(("rounds", t, face, letter))
        for v in range(len(layout.stabilized_vertices)):
            for t in range(T):
                count += 1
                if not _corrected(layout, noisy, _single_error_history(layout, T, t, flip=v)):
                    bad.append(("flip", t, v))
        note["detail"] = f"{count} faults, {len(bad)} uncorrected" + (f", first {bad[0]}" if bad else "")
        assert not bad


def test_criterion_07_symmetry_line_parity(criterion):
    with criterion(7, "pure-Z torus errors leave even defect parity on every symmetry line") as note:
        rng = np.random.default_rng(7)
        odd = 0
        lines_checked = 0
        for d in (4, 6, 8, 10):
            layout = build_code(d, "periodic")
            a_x, a_z = layout.check_matrices
            masks = np.zeros((len(layout.symmetry_lines()), len(layout.stabilized_vertices)), dtype=np.uint8)
            for k, line in enumerate(layout.symmetry_lines()):
                for v in line.vertices:
                    masks[k, layout.stabilizer_index[v]] = 1
            p = rng.uniform(0.01, 0.5, size=(2500, 1))
            z = (rng.random((2500, layout.n)) < p).astype(np.uint8)
            syndromes = (z @ a_z.T) & 1
            parity = (syndromes @ masks.T) & 1
            odd += int(parity.sum())
            lines_checked += parity.size
        note["detail"] = f"10000 errors, {lines_checked} line checks, {odd} odd"
        assert odd == 0


CLOSURE_CASES = [(4, "periodic", False), (4, "periodic", True), (5, "open", False), (5, "open", True)]


@pytest.mark.parametrize("eta", [0.5, 3, 100, INF])
def test_criterion_08_closure(criterion, eta):
    with criterion(8, f"recovery reproduces every observed defect, eta={eta}") as note:
        total = 0
        for d, boundary, phenom in CLOSURE_CASES:
            params = NoiseParams(eta, 0.08, 0.08 if phenom else 0.0)
            cfg = TrialConfig(d, boundary, params, d if phenom else 1, 10_000, seed=8, check_closure=True)
            run_batch(cfg)  # raises on any residual defect
            total += cfg.trials
        note["detail"] = f"{total} trials over {len(CLOSURE_CASES)} configurations"


def test_criterion_09_hashing_bound(criterion):
    with criterion(9, "hashing bound spot values") as note:
        low = hashing_bound(0.5)
        note["detail"] = f"eta=0.5: {low:.6f}, eta=inf: {hashing_bound(INF)}"
        assert abs(low - 0.1893) <= 1e-4
        assert hashing_bound(INF) == 0.5


def test_criterion_10_distance_spot_values(criterion):
    with criterion(10, "distance function spot values") as note:
        w_inf = step_weights(NoiseParams(INF, 0.1))
        w_100 = step_weights(NoiseParams(100, 0.05, 0.05))
        got = [
            distance((2, 3, 0, H), (2, 7, 0, H), w_inf, build_code(12, "periodic"), 1),
            distance((2, 3, 0, H), (2, 3, 0, H), w_inf, build_code(12, "periodic"), 1),
            distance((0, 0, 0, H), (2, 3, 1, H), w_100, build_code(41, "open"), 41),
        ]
        want = [8.7889, 0.0, 22.4042]
        note["detail"] = ", ".join(f"{g:.4f}" for g in got)
        assert all(math.isclose(g, e, abs_tol=1e-4) for g, e in zip(got, want))
