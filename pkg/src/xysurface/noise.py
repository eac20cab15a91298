"""Biased Pauli noise with phenomenological measurement errors."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import UsageError
from .lattice import CodeLayout
from .pauli import PauliOperator

INF = math.inf


def parse_eta(value) -> float:
    """Accept a positive number or the string ``"inf"``."""
    if isinstance(value, str):
        if value.strip().lower() in ("inf", "infinity"):
            return INF
        try:
            value = float(value)
        except ValueError:
            raise UsageError(f"bias must be a positive number or 'inf', got {value!r}") from None
    value = float(value)
    if not value > 0:
        raise UsageError(f"bias must be positive, got {value}")
    return value


def format_eta(eta: float):
    """JSON-friendly bias: the literal ``"inf"`` or the number itself."""
    return "inf" if math.isinf(eta) else eta


@dataclass(frozen=True)
class NoiseParams:
    eta: float
    p: float
    q: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "eta", parse_eta(self.eta))
        for name in ("p", "q"):
            v = getattr(self, name)
            if not 0 <= v < 1:
                raise UsageError(f"{name} must lie in [0, 1), got {v}")

    @property
    def p_hr(self) -> float:
        """Rate of Z errors."""
        if math.isinf(self.eta):
            return self.p
        return self.p * self.eta / (self.eta + 1)

    @property
    def p_lr(self) -> float:
        """Rate of X errors, and separately of Y errors."""
        if math.isinf(self.eta):
            return 0.0
        return self.p / (2 * (self.eta + 1))


@dataclass(frozen=True, eq=False)
class ErrorHistory:
    """Fresh data errors and measurement flips for each of ``T`` rounds.

    ``x`` and ``z`` have shape ``(T, n)``; ``flips`` has shape ``(T, m)`` over the
    stabilized vertices in layout order.
    """

    x: np.ndarray
    z: np.ndarray
    flips: np.ndarray

    @property
    def T(self) -> int:
        return self.x.shape[0]

    def fresh(self, t: int) -> PauliOperator:
        return PauliOperator.from_arrays(self.x[t], self.z[t])

    def accumulated(self, t: int | None = None) -> PauliOperator:
        """Product of the fresh errors of rounds ``0..t`` (default: all rounds)."""
        stop = self.T if t is None else t + 1
        x = np.bitwise_xor.reduce(self.x[:stop], axis=0)
        z = np.bitwise_xor.reduce(self.z[:stop], axis=0)
        return PauliOperator.from_arrays(x, z)

    def flip_set(self, layout: CodeLayout, t: int) -> set[tuple[int, int]]:
        verts = layout.stabilized_vertices
        return {verts[i] for i in np.flatnonzero(self.flips[t])}

    @classmethod
    def empty(cls, layout: CodeLayout, T: int = 1) -> "ErrorHistory":
        n, m = layout.n, len(layout.stabilized_vertices)
        return cls(
            np.zeros((T, n), dtype=bool),
            np.zeros((T, n), dtype=bool),
            np.zeros((T, m), dtype=bool),
        )

    @classmethod
    def single_round(cls, layout: CodeLayout, op: PauliOperator) -> "ErrorHistory":
        h = cls.empty(layout, 1)
        h.x[0] = op.x_support
        h.z[0] = op.z_support
        return h


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Independent stream for trial ``trial`` of a run with master ``seed``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(trial,))))


def sample_history(layout: CodeLayout, params: NoiseParams, T: int, rng: np.random.Generator) -> ErrorHistory:
    if T < 1:
        raise UsageError("need at least one round")
    n, m = layout.n, len(layout.stabilized_vertices)
    u = rng.random((T, n))
    p_hr, p_lr = params.p_hr, params.p_lr
    # [Z | X | Y | identity]
    is_z = u < p_hr
    is_x = (u >= p_hr) & (u < p_hr + p_lr)
    is_y = (u >= p_hr + p_lr) & (u < p_hr + 2 * p_lr)
    flips = rng.random((T, m)) < params.q
    return ErrorHistory(is_x | is_y, is_z | is_y, flips)


def _entropy_bits(probs) -> float:
    return -sum(pr * math.log2(pr) for pr in probs if pr > 0)


def hashing_bound(eta, tol: float = 1e-12) -> float:
    """Error rate at which the channel's Shannon entropy reaches one bit."""
    eta = parse_eta(eta)
    if math.isinf(eta):
        return 0.5

    def excess(p: float) -> float:
        params = NoiseParams(eta, p)
        return _entropy_bits((1 - p, params.p_lr, params.p_lr, params.p_hr)) - 1

    lo, hi = 0.0, 0.5
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if excess(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
