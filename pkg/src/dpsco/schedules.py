"""Batch-size, step-size, noise, and averaging-weight schedule constructors.

Every constructor here is a pure function returning immutable data; the
optimizers consume schedules without modifying them.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

# Batch-size multipliers for the two growing-batch regimes: the constant-step
# regime uses 2, the piecewise-geometric step regime uses 4 * sqrt(3).
MULTIPLIER_SZ = 2.0
MULTIPLIER_JNN = 4.0 * math.sqrt(3.0)


class InvalidScheduleError(ValueError):
    """A schedule violates its structural invariants."""


@dataclass(frozen=True)
class Schedule:
    """Per-step batch sizes, step sizes, and noise scales for T steps.

    Invariants: equal lengths, batch sizes >= 1, step sizes >= 0, noise
    scales >= 0. (Zero step sizes are permitted so that ablation runs that
    freeze the iterate remain expressible.)
    """

    batch_sizes: tuple[int, ...]
    step_sizes: tuple[float, ...]
    noise_scales: tuple[float, ...]

    def __post_init__(self):
        T = len(self.batch_sizes)
        if T == 0:
            raise InvalidScheduleError("schedule must have at least one step")
        if len(self.step_sizes) != T or len(self.noise_scales) != T:
            raise InvalidScheduleError("schedule lists must have equal length")
        if any(b < 1 for b in self.batch_sizes):
            raise InvalidScheduleError("batch sizes must be >= 1")
        if any(e < 0 for e in self.step_sizes):
            raise InvalidScheduleError("step sizes must be nonnegative")
        if any(s < 0 for s in self.noise_scales):
            raise InvalidScheduleError("noise scales must be nonnegative")

    @property
    def num_steps(self) -> int:
        return len(self.batch_sizes)

    def total_samples(self) -> int:
        return int(sum(self.batch_sizes))

    @classmethod
    def constant(cls, T: int, batch_size: int, eta: float, sigma: float) -> "Schedule":
        return cls((batch_size,) * T, (eta,) * T, (sigma,) * T)

    def to_json(self) -> str:
        return json.dumps(
            {"B": list(self.batch_sizes), "eta": list(self.step_sizes),
             "sigma": list(self.noise_scales)}
        )

    @classmethod
    def from_json(cls, text: str) -> "Schedule":
        obj = json.loads(text)
        try:
            return cls(
                tuple(int(b) for b in obj["B"]),
                tuple(float(e) for e in obj["eta"]),
                tuple(float(s) for s in obj["sigma"]),
            )
        except KeyError as exc:
            raise InvalidScheduleError(f"schedule JSON missing key {exc}") from exc


@dataclass(frozen=True)
class AveragingWeights:
    """Strictly positive per-iterate weights with their normalization."""

    weights: tuple[float, ...]

    def __post_init__(self):
        if len(self.weights) == 0:
            raise InvalidScheduleError("weights must be nonempty")
        if any(w <= 0 or not math.isfinite(w) for w in self.weights):
            raise InvalidScheduleError("weights must be positive and finite")

    @property
    def normalization(self) -> float:
        return float(sum(self.weights))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.weights, dtype=np.float64)


def snowball_batches(T: int, d: int, rho: float, multiplier: float = MULTIPLIER_SZ) -> list[int]:
    """Growing batch sizes B_t = ceil(multiplier * sqrt(d / (T - t + 1)) / rho).

    The schedule equalizes per-example privacy under amplification by
    iteration; the total satisfies sum B_t <= T + 2 * multiplier * sqrt(dT) / rho.
    """
    if T < 1 or d < 1:
        raise ValueError("T and d must be >= 1")
    if rho <= 0:
        raise ValueError("rho must be positive")
    remaining = np.arange(T, 0, -1, dtype=np.float64)  # T - t + 1 for t = 1..T
    raw = multiplier * np.sqrt(d / remaining) / rho
    return np.ceil(raw).astype(np.int64).tolist()


def constant_step(T: int, D: float, L_G: float) -> list[float]:
    """Fixed step size D / (L_G * sqrt(T)) for all T steps."""
    if T < 1:
        raise ValueError("T must be >= 1")
    if D <= 0 or L_G <= 0:
        raise ValueError("D and L_G must be positive")
    return [D / (L_G * math.sqrt(T))] * T


def jnn_steps(T: int, c: float) -> list[float]:
    """Piecewise-geometric decaying step sizes that remove the log factor
    from the last iterate's excess loss.

    With ell = ceil(log2 T) and band boundaries T_i = T - ceil(T * 2^-i)
    (T_{ell+1} = T), steps in band i equal c * 2^-i / sqrt(T). The sequence is
    nonincreasing; the first step is c / sqrt(T) and the last c * 2^-ell / sqrt(T).
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    ell = max(0, math.ceil(math.log2(T)))
    bounds = [T - math.ceil(T * 2.0 ** (-i)) for i in range(ell + 1)] + [T]
    steps = [0.0] * T
    filled = [False] * T
    for i in range(ell + 1):
        for t in range(bounds[i] + 1, bounds[i + 1] + 1):
            steps[t - 1] = c * 2.0 ** (-i) / math.sqrt(T)
            filled[t - 1] = True
    assert all(filled), "step-size bands must cover every step"
    return steps


def sc_weights(T: int, eta: float, lam: float) -> AveragingWeights:
    """Geometric averaging weights (1 - eta * lam)^-t for strongly convex SGD.

    Requires eta * lam < 1 so the weights are positive and finite; the
    consuming optimizer additionally enforces eta <= 1 / (2 * lam).
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    if eta <= 0 or lam <= 0:
        raise ValueError("eta and lam must be positive")
    if eta * lam >= 1:
        raise InvalidScheduleError(f"eta * lam = {eta * lam} >= 1: weights diverge")
    base = 1.0 - eta * lam
    return AveragingWeights(tuple(base ** (-t) for t in range(1, T + 1)))


def phase_plan(
    n: int,
    eta0: float,
    mode: str = "geometric",
    k_override: int | None = None,
) -> list[tuple[int, float]]:
    """Per-phase (sample count, step size) plan for localization algorithms.

    geometric:
        k = ceil(log2 n) phases with n_i = floor(2^-i * n) and
        eta_i = 4^-i * eta0. Sample counts are floored so they are integers;
        the leftover samples are discarded, which only strengthens privacy.
    doubly_exponential:
        k = ceil(ln ln n) (at least 1, overridable) phases with n_i =
        floor(n / k) and eta_i = 2^(-2^i) * eta0.

    Phases with zero samples are dropped (the plan is truncated at the last
    phase with n_i >= 1). In both modes sum n_i <= n.
    """
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    if eta0 <= 0:
        raise ValueError("eta0 must be positive")
    if mode == "geometric":
        k = math.ceil(math.log2(n))
        plan = [(n >> i, eta0 * 4.0 ** (-i)) for i in range(1, k + 1)]
    elif mode == "doubly_exponential":
        if k_override is not None:
            k = int(k_override)
            if k < 1:
                raise ValueError("k_override must be >= 1")
        else:
            k = max(1, math.ceil(math.log(max(math.log(n), 1.0 + 1e-12))))
        plan = [(n // k, eta0 * 2.0 ** (-(2.0 ** i))) for i in range(1, k + 1)]
    else:
        raise ValueError(f"unknown phase mode {mode!r}")
    plan = [(ni, ei) for ni, ei in plan if ni >= 1]
    if not plan:
        raise InvalidScheduleError(f"phase plan for n = {n} has no nonempty phase")
    assert sum(ni for ni, _ in plan) <= n
    return plan
