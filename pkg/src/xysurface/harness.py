"""Monte Carlo batches and finite-size-scaling threshold fits."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy.optimize import least_squares

from .decoder import decode, plan_defects
from .errors import FitDegenerate, InternalError, UsageError
from .failure import TrialOutcome, spatial_failure, temporal_failure
from .lattice import BOUNDARIES, build_code
from .noise import NoiseParams, format_eta, sample_history, trial_rng
from .syndrome import PERIODIC_TIME, defect_array, extract_defects, measure_rounds

logger = logging.getLogger(__name__)

FIT_WINDOW = 0.2


@dataclass(frozen=True)
class TrialConfig:
    d: int
    boundary: str
    params: NoiseParams
    T: int
    trials: int
    seed: int = 0
    time_boundary: str = PERIODIC_TIME
    method: str = "auto"
    check_closure: bool = False

    def __post_init__(self):
        if self.boundary not in BOUNDARIES:
            raise UsageError(f"unknown boundary {self.boundary!r}")
        if self.trials < 1:
            raise UsageError("need at least one trial")
        if self.T < 1:
            raise UsageError("need at least one round")
        if self.params.q == 0 and self.T != 1:
            raise UsageError("perfect measurements use a single round")


def default_rounds(d: int, q: float) -> int:
    return d if q > 0 else 1


@dataclass
class CellResult:
    config: TrialConfig
    fail_spatial: int
    fail_temporal: int
    fail_either: int
    failures: np.ndarray = field(repr=False)  # per-trial bitmap of fail_either
    mean_nodes: float = 0.0

    @property
    def trials(self) -> int:
        return self.config.trials

    @property
    def rate(self) -> float:
        return self.fail_either / self.trials

    @property
    def stderr(self) -> float:
        f = self.rate
        return math.sqrt(f * (1 - f) / self.trials)

    def record(self) -> dict:
        c = self.config
        return {
            "d": c.d,
            "boundary": c.boundary,
            "eta": format_eta(c.params.eta),
            "p": c.params.p,
            "q": c.params.q,
            "T": c.T,
            "trials": c.trials,
            "fail_spatial": self.fail_spatial,
            "fail_temporal": self.fail_temporal,
            "fail_either": self.fail_either,
            "seed": c.seed,
        }


@dataclass
class BatchResult:
    cells: list[CellResult]

    def arrays(self):
        d = np.array([c.config.d for c in self.cells], dtype=float)
        p = np.array([c.config.params.p for c in self.cells], dtype=float)
        fails = np.array([c.fail_either for c in self.cells], dtype=float)
        n = np.array([c.trials for c in self.cells], dtype=float)
        return d, p, fails, n


def run_trial(layout, config: TrialConfig, rng: np.random.Generator) -> TrialOutcome:
    params = config.params
    history = sample_history(layout, params, config.T, rng)
    if params.p == 0 and params.q == 0:
        return TrialOutcome(False, False, 0, 0)
    syndromes = measure_rounds(layout, history)
    defects = extract_defects(syndromes, config.time_boundary)
    plan = decode(defects, layout, params, method=config.method)
    if config.check_closure and not np.array_equal(
        plan_defects(plan, layout, defects.periodic_time), defect_array(syndromes, config.time_boundary)
    ):
        raise InternalError("recovery does not reproduce the observed defects")
    spatial = spatial_failure(history.accumulated(), plan.spatial, layout)
    temporal = False
    if layout.periodic and config.time_boundary == PERIODIC_TIME and config.T > 1:
        temporal = temporal_failure(history, plan, layout, config.T)
    return TrialOutcome(spatial, temporal, len(defects), plan.node_count)


def _run_chunk(config: TrialConfig, start: int, stop: int) -> list[TrialOutcome]:
    layout = build_code(config.d, config.boundary)
    return [run_trial(layout, config, trial_rng(config.seed, i)) for i in range(start, stop)]


def run_batch(config: TrialConfig, workers: int = 1) -> CellResult:
    """Run ``config.trials`` independent trials; trial ``i`` always uses stream ``(seed, i)``."""
    n = config.trials
    if workers <= 1:
        outcomes = _run_chunk(config, 0, n)
    else:
        bounds = np.linspace(0, n, min(n, 4 * workers) + 1).astype(int)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_chunk, config, int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:])]
            outcomes = [o for f in futures for o in f.result()]
    spatial = np.array([o.spatial_failure for o in outcomes])
    temporal = np.array([o.temporal_failure for o in outcomes])
    either = spatial | temporal
    nodes = float(np.mean([o.graph_node_count for o in outcomes]))
    return CellResult(config, int(spatial.sum()), int(temporal.sum()), int(either.sum()), either, nodes)


def run_grid(ds, ps, boundary: str, eta, trials: int, seed: int = 0, q=None, rounds=None,
             workers: int = 1, method: str = "auto", progress=None,
             time_boundary: str = PERIODIC_TIME) -> BatchResult:
    """Batches over every (d, p); ``q=None`` means ``q = p``, and ``rounds=None`` means d (or 1 if q = 0)."""
    cells = []
    for d in ds:
        for p in ps:
            qq = p if q is None else q
            T = rounds if rounds is not None else default_rounds(d, qq)
            config = TrialConfig(d, boundary, NoiseParams(eta, p, qq), T, trials, seed, time_boundary, method)
            cell = run_batch(config, workers)
            if progress:
                progress(cell)
            cells.append(cell)
    return BatchResult(cells)


# --- threshold estimation ---------------------------------------------------


@dataclass(frozen=True)
class ThresholdEstimate:
    p_th: float
    sigma: float
    nu: float
    A: float
    B: float
    C: float
    n_points: int
    chi2: float
    dof: int

    def record(self) -> dict:
        return {
            "p_th": self.p_th,
            "sigma": self.sigma,
            "nu": self.nu,
            "A": self.A,
            "B": self.B,
            "C": self.C,
            "n_points": self.n_points,
        }


def _uncertainty(fails: np.ndarray, n: np.ndarray) -> np.ndarray:
    f = fails / n
    sigma = np.sqrt(f * (1 - f) / n)
    # rule of three for cells with no (or only) failures
    return np.where(sigma > 0, sigma, 3.0 / n)


def _curves(d, p, fails, n) -> dict:
    out = {}
    for dist in np.unique(d):
        sel = d == dist
        order = np.argsort(p[sel])
        out[dist] = (p[sel][order], (fails[sel] / n[sel])[order])
    return out


def crossing_points(d, p, fails, n) -> list[float]:
    """Interpolated crossings of each pair of distance curves (smaller-d curve rising more slowly)."""
    curves = _curves(d, p, fails, n)
    found = []
    for d1, d2 in combinations(sorted(curves), 2):
        p1, f1 = curves[d1]
        p2, f2 = curves[d2]
        common = np.intersect1d(np.round(p1, 12), np.round(p2, 12))
        if len(common) < 2:
            continue
        g1 = np.interp(common, p1, f1)
        g2 = np.interp(common, p2, f2)
        diff = g2 - g1
        cands = []
        for k in range(len(common) - 1):
            a, b = diff[k], diff[k + 1]
            if a < 0 <= b or (a <= 0 < b and a != b):
                frac = a / (a - b)
                cands.append(common[k] + frac * (common[k + 1] - common[k]))
        if cands:
            # several sign changes from noise: keep the one nearest the grid middle of them
            found.append(float(np.median(cands)))
    return found


def crossing_estimate(results: BatchResult) -> float:
    points = crossing_points(*results.arrays())
    if not points:
        raise FitDegenerate(
            "no crossing between distance curves; extend the p grid so that larger "
            "distances do better at the low end and worse at the high end"
        )
    return float(np.mean(points))


def _model(theta, d, p):
    p_th, nu, a, b, c = theta
    scale = d ** (1.0 / nu)
    x = (p - p_th) * scale
    return a + b * x + c * x * x, x


def _fit(d, p, f, sigma, theta0):
    def residuals(theta):
        model, _ = _model(theta, d, p)
        return (model - f) / sigma

    def jacobian(theta):
        p_th, nu, a, b, c = theta
        model, x = _model(theta, d, p)
        dfdx = b + 2 * c * x
        cols = [
            dfdx * -(d ** (1.0 / nu)),
            dfdx * -x * np.log(d) / nu**2,
            np.ones_like(x),
            x,
            x * x,
        ]
        return np.column_stack(cols) / sigma[:, None]

    sol = least_squares(residuals, theta0, jac=jacobian, method="lm", xtol=1e-10, ftol=1e-10, gtol=1e-10,
                        max_nfev=10000)
    return sol.x, float(np.sum(sol.fun**2))


def _initial(d, p, f, sigma, p0):
    x = p - p0
    x = x * d
    design = np.column_stack([np.ones_like(x), x, x * x]) / sigma[:, None]
    coef, *_ = np.linalg.lstsq(design, f / sigma, rcond=None)
    return np.array([p0, 1.0, *coef])


def fit_threshold(results: BatchResult, window: float = FIT_WINDOW, jackknife: bool = True) -> ThresholdEstimate:
    d, p, fails, n = results.arrays()
    if len(np.unique(d)) < (3 if jackknife else 2):
        raise FitDegenerate("the fit needs at least three distances")
    p0 = crossing_estimate(results)
    keep = np.abs(p - p0) / p0 <= window + 1e-12
    d, p, fails, n = d[keep], p[keep], fails[keep], n[keep]
    if keep.sum() < 6:
        raise FitDegenerate("fewer than six points inside the fit window around the crossing")
    f = fails / n
    sigma = _uncertainty(fails, n)
    theta, chi2 = _fit(d, p, f, sigma, _initial(d, p, f, sigma, p0))
    if not (0 < theta[0] < 1) or not np.all(np.isfinite(theta)):
        raise FitDegenerate(f"fit wandered to p_th = {theta[0]}")

    spread = 0.0
    if jackknife:
        dists = np.unique(d)
        subs = []
        for drop in dists:
            sel = d != drop
            if len(np.unique(d[sel])) < 2:
                continue
            th, _ = _fit(d[sel], p[sel], f[sel], sigma[sel], theta)
            subs.append(th[0])
        subs = np.array(subs)
        k = len(subs)
        spread = math.sqrt((k - 1) / k * np.sum((subs - subs.mean()) ** 2)) if k > 1 else 0.0
    if not spread > 0:
        # fall back to the curvature of the full fit
        spread = _covariance_sigma(d, p, f, sigma, theta)
    p_th, nu, a, b, c = (float(v) for v in theta)
    return ThresholdEstimate(p_th, spread, nu, a, b, c, int(keep.sum()), chi2, int(keep.sum()) - 5)


def _covariance_sigma(d, p, f, sigma, theta) -> float:
    p_th, nu, a, b, c = theta
    _, x = _model(theta, d, p)
    dfdx = b + 2 * c * x
    jac = np.column_stack([dfdx * -(d ** (1.0 / nu)), dfdx * -x * np.log(d) / nu**2,
                           np.ones_like(x), x, x * x]) / sigma[:, None]
    cov = np.linalg.pinv(jac.T @ jac)
    return float(math.sqrt(max(cov[0, 0], 0.0))) or 1e-12
