"""Grad-TTS style mean-reverting diffusion toward a spectrogram-shaped prior.

Forward process: ``dx = 0.5 * (mu - x) * beta(t) dt + sqrt(beta(t)) dw`` with
identity covariance and a linear ``beta`` on ``t in [0, 1]``. The reverse pass
is the deterministic probability-flow update, discretised on ``t_k = k / T``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DimensionError, DomainError, ValidationError
from .grid import as_grid, check_same_shape

# score(x, mu, t) -> grad_x log p_t(x), same shape as x
ScoreProvider = Callable[[np.ndarray, np.ndarray, float], np.ndarray]
StepCallback = Callable[[int, float, np.ndarray], None]


@dataclass(frozen=True)
class NoiseSchedule:
    beta0: float = 0.05
    beta1: float = 20.0
    steps: int = 1000

    def __post_init__(self):
        if not (self.beta0 > 0 and self.beta1 >= self.beta0):
            raise ValidationError(f"need beta1 >= beta0 > 0, got ({self.beta0}, {self.beta1})")
        if int(self.steps) != self.steps or self.steps < 1:
            raise ValidationError(f"steps must be a positive integer, got {self.steps!r}")

    def beta(self, t: float) -> float:
        return self.beta0 + (self.beta1 - self.beta0) * t

    def times(self) -> np.ndarray:
        """Reverse-pass time grid ``T/T, (T-1)/T, ..., 1/T``."""
        return np.arange(self.steps, 0, -1) / self.steps


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Independent, reproducible stream for trajectory ``stream`` of ``seed``."""
    if stream == 0:
        return np.random.default_rng(seed)
    return np.random.default_rng([seed, stream])


def _check_time(t: float) -> float:
    t = float(t)
    if not 0.0 <= t <= 1.0:
        raise DomainError(f"diffusion time must be in [0, 1], got {t}")
    return t


def gamma(schedule: NoiseSchedule, t: float) -> float:
    """``exp(-integral_0^t beta(s) ds)`` for the linear schedule."""
    t = _check_time(t)
    return math.exp(-(schedule.beta0 * t + 0.5 * (schedule.beta1 - schedule.beta0) * t * t))


def transition_moments(
    schedule: NoiseSchedule, mu: np.ndarray, x0: np.ndarray, t: float
) -> tuple[np.ndarray, float]:
    """Mean and (scalar) variance of ``x_t | x_0``."""
    mu, x0 = as_grid(mu, "mu"), as_grid(x0, "x0")
    check_same_shape(mu, x0)
    g = gamma(schedule, t)
    sg = math.sqrt(g)
    return (1.0 - sg) * mu + sg * x0, 1.0 - g


def forward_diffuse(
    schedule: NoiseSchedule, mu: np.ndarray, x0: np.ndarray, t: float, rng: np.random.Generator
) -> np.ndarray:
    mean, var = transition_moments(schedule, mu, x0, t)
    if var == 0.0:
        return mean
    return mean + math.sqrt(var) * rng.standard_normal(mean.shape)


def sample_prior(mu: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    mu = as_grid(mu, "mu")
    return mu + rng.standard_normal(mu.shape)


def reverse_drift(
    schedule: NoiseSchedule, mu: np.ndarray, x: np.ndarray, score_value: np.ndarray, t: float
) -> np.ndarray:
    """One reverse-step increment ``beta(t) / (2T) * (mu - x - score)``.

    The caller applies it as ``x <- x - dx``.
    """
    t = _check_time(t)
    if mu.shape != x.shape or score_value.shape != x.shape:
        raise DimensionError(
            f"shape mismatch: mu {mu.shape}, x {x.shape}, score {np.shape(score_value)}"
        )
    return (schedule.beta(t) / (2.0 * schedule.steps)) * (mu - x - score_value)


def evaluate_score(provider: ScoreProvider, x: np.ndarray, mu: np.ndarray, t: float) -> np.ndarray:
    s = np.asarray(provider(x, mu, t), dtype=np.float64)
    if s.shape != x.shape:
        raise DimensionError(f"score provider returned shape {s.shape}, expected {x.shape}")
    return s


def reverse_integrate(
    schedule: NoiseSchedule,
    mu: np.ndarray,
    x_init: np.ndarray,
    provider: ScoreProvider,
    on_step: Optional[StepCallback] = None,
) -> np.ndarray:
    """Run the deterministic reverse pass from ``x_init`` down to ``t = 0``.

    ``on_step(k, t, dx)`` is called after each drift evaluation, mostly for
    diagnostics.
    """
    mu = as_grid(mu, "mu")
    x = as_grid(x_init, "x_init").copy()
    check_same_shape(mu, x)
    for k, t in zip(range(schedule.steps, 0, -1), schedule.times()):
        dx = reverse_drift(schedule, mu, x, evaluate_score(provider, x, mu, t), t)
        if on_step is not None:
            on_step(k, t, dx)
        x = x - dx
    return x
