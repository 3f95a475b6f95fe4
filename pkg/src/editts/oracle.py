"""Synthetic priors and an exactly-solvable data model.

The data distribution is a mixture of isotropic Gaussians centred on the
prior mean plus per-component offset grids::

    p_0(x | mu) = sum_k pi_k N(x; mu + offset_k, sigma_k^2 I)

Pushing it through the forward kernel keeps it a mixture, so the score and
log-likelihood at any ``t`` are available in closed form and stand in for a
trained score network.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .diffusion import NoiseSchedule, ScoreProvider, gamma
from .errors import DimensionError, ValidationError
from .grid import as_grid


@dataclass(frozen=True)
class Phoneme:
    duration: int
    center_bin: float
    bandwidth: float
    amplitude: float


@dataclass(frozen=True)
class ToyPriorSpec:
    """A sequence of constant-column segments, one Gaussian bump each."""

    phonemes: tuple[Phoneme, ...]
    n_freq: int = 80
    baseline: float = -1.0

    def __post_init__(self):
        object.__setattr__(self, "phonemes", tuple(self.phonemes))
        if self.n_freq < 1:
            raise ValidationError("n_freq must be positive")
        if not self.phonemes:
            raise ValidationError("a toy prior needs at least one phoneme")
        for p in self.phonemes:
            if int(p.duration) != p.duration or p.duration < 1:
                raise ValidationError(f"phoneme duration must be a positive integer: {p}")
            if not 0 <= p.center_bin < self.n_freq:
                raise ValidationError(f"center_bin outside [0, {self.n_freq}): {p}")
            if not p.bandwidth > 0:
                raise ValidationError(f"bandwidth must be positive: {p}")
            if not math.isfinite(p.amplitude):
                raise ValidationError(f"amplitude must be finite: {p}")

    @property
    def n_frames(self) -> int:
        return sum(int(p.duration) for p in self.phonemes)


def make_toy_prior(spec: ToyPriorSpec) -> np.ndarray:
    f = np.arange(spec.n_freq, dtype=np.float64)
    columns = []
    for p in spec.phonemes:
        col = spec.baseline + p.amplitude * np.exp(-((f - p.center_bin) ** 2) / (2.0 * p.bandwidth**2))
        columns.append(np.repeat(col[:, None], int(p.duration), axis=1))
    return np.concatenate(columns, axis=1)


# Defaults for the desk-scale experiments: six 12-frame "phonemes" with
# well-separated spectral bumps, and a second utterance for content edits.
DEFAULT_SOURCE_PHONEMES = (
    Phoneme(12, 22.0, 3.0, 2.5),
    Phoneme(12, 38.0, 3.5, 2.0),
    Phoneme(12, 40.0, 3.0, 3.0),
    Phoneme(12, 46.0, 4.0, 2.0),
    Phoneme(12, 30.0, 3.0, 2.5),
    Phoneme(12, 18.0, 3.0, 2.0),
)
DEFAULT_TARGET_PHONEMES = (
    Phoneme(12, 34.0, 3.0, 2.0),
    Phoneme(12, 20.0, 3.0, 2.5),
    Phoneme(8, 42.0, 3.5, 2.5),
    Phoneme(14, 52.0, 3.0, 3.0),
    Phoneme(12, 26.0, 3.0, 2.0),
    Phoneme(14, 36.0, 4.0, 2.5),
)


def default_prior_spec(n_freq: int = 80) -> ToyPriorSpec:
    return ToyPriorSpec(DEFAULT_SOURCE_PHONEMES, n_freq=n_freq)


def default_target_spec(n_freq: int = 80) -> ToyPriorSpec:
    return ToyPriorSpec(DEFAULT_TARGET_PHONEMES, n_freq=n_freq)


@dataclass(frozen=True, eq=False)
class GaussianMixtureDataModel:
    """Mixture data model around a conditioning mean ``mu``.

    ``offsets`` has shape ``[K, n_freq, n_frames]``, or ``[K, n_freq, 1]`` for
    offsets that are constant over time; ``variances`` and ``weights`` have
    length ``K``. The score provider built from a model re-centres the
    components on whatever ``mu`` it is called with, so one model serves both
    the original and the perturbed prior (and, with frame-constant offsets,
    grids of any length).
    """

    mu: np.ndarray
    offsets: np.ndarray
    variances: np.ndarray
    weights: np.ndarray = field(default=None)

    def __post_init__(self):
        mu = as_grid(self.mu, "mu")
        offsets = np.asarray(self.offsets, dtype=np.float64)
        if offsets.ndim == 2:
            offsets = offsets[None]
        if not _offsets_fit(offsets, mu.shape):
            raise DimensionError(f"offsets {offsets.shape[1:]} do not match mu {mu.shape}")
        k = offsets.shape[0]
        variances = np.broadcast_to(np.asarray(self.variances, dtype=np.float64), (k,)).copy()
        weights = (
            np.full(k, 1.0 / k)
            if self.weights is None
            else np.asarray(self.weights, dtype=np.float64).reshape(-1)
        )
        if weights.shape != (k,):
            raise DimensionError(f"{weights.size} weights for {k} components")
        if np.any(weights <= 0) or np.any(weights > 1) or abs(weights.sum() - 1.0) > 1e-12:
            raise ValidationError("mixture weights must lie in (0, 1] and sum to 1")
        if np.any(variances < 0) or not np.all(np.isfinite(offsets)):
            raise ValidationError("variances must be non-negative and offsets finite")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "offsets", offsets)
        object.__setattr__(self, "variances", variances)
        object.__setattr__(self, "weights", weights)

    @property
    def frame_constant(self) -> bool:
        return self.offsets.shape[2] == 1

    @property
    def n_components(self) -> int:
        return self.offsets.shape[0]

    def with_mean(self, mu: np.ndarray) -> "GaussianMixtureDataModel":
        return GaussianMixtureDataModel(mu, self.offsets, self.variances, self.weights)


def _offsets_fit(offsets: np.ndarray, shape: tuple[int, ...]) -> bool:
    return offsets.shape[1] == shape[0] and offsets.shape[2] in (1, shape[1])


def stripe_offsets(n_freq: int, n_components: int, amplitude: float, period: float) -> np.ndarray:
    """Harmonic-like frequency stripes, phase-rotated per component; ``[K, n_freq, 1]``."""
    f = np.arange(n_freq, dtype=np.float64)
    phases = 2.0 * math.pi * np.arange(n_components) / n_components
    return amplitude * np.cos(2.0 * math.pi * f[None, :] / period + phases[:, None])[:, :, None]


def default_data_model(
    mu: np.ndarray,
    n_components: int = 3,
    sigma: float = 0.05,
    stripe_amplitude: float = 0.2,
    stripe_period: float = 4.0,
) -> GaussianMixtureDataModel:
    mu = as_grid(mu, "mu")
    offsets = stripe_offsets(mu.shape[0], n_components, stripe_amplitude, stripe_period)
    return GaussianMixtureDataModel(mu, offsets, np.full(n_components, sigma**2))


def _moments(model: GaussianMixtureDataModel, mu: np.ndarray, schedule: NoiseSchedule, t: float):
    g = gamma(schedule, t)
    means = mu[None] + math.sqrt(g) * model.offsets
    var = g * model.variances + (1.0 - g)
    return means, var


def marginal_moments(
    model: GaussianMixtureDataModel, schedule: NoiseSchedule, t: float
) -> list[tuple[np.ndarray, float, float]]:
    """Per component ``(mean_k, var_k, log pi_k)`` of the noised marginal at ``t``."""
    means, var = _moments(model, model.mu, schedule, t)
    means = np.broadcast_to(means, (model.n_components, *model.mu.shape))
    return [(means[k], float(var[k]), float(np.log(model.weights[k]))) for k in range(model.n_components)]


def _log_component_densities(x: np.ndarray, means: np.ndarray, var: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if np.any(var <= 0):
        raise ValidationError("zero-variance component: density undefined at t = 0")
    diff = x[None] - means
    d = x.size
    sq = np.sum(diff.reshape(len(var), -1) ** 2, axis=1)
    return -0.5 * (d * np.log(2.0 * math.pi * var) + sq / var), diff


def _normalise(logits: np.ndarray) -> tuple[np.ndarray, float]:
    top = logits.max()
    w = np.exp(logits - top)
    total = w.sum()
    return w / total, float(top + math.log(total))


def responsibilities(
    model: GaussianMixtureDataModel, schedule: NoiseSchedule, x: np.ndarray, t: float, mu: np.ndarray | None = None
) -> np.ndarray:
    mu = model.mu if mu is None else mu
    means, var = _moments(model, mu, schedule, t)
    logn, _ = _log_component_densities(x, means, var)
    return _normalise(np.log(model.weights) + logn)[0]


def log_likelihood(model: GaussianMixtureDataModel, schedule: NoiseSchedule, x: np.ndarray, t: float) -> float:
    x = as_grid(x, "x")
    if x.shape != model.mu.shape:
        raise DimensionError(f"x {x.shape} does not match model {model.mu.shape}")
    means, var = _moments(model, model.mu, schedule, t)
    logn, _ = _log_component_densities(x, means, var)
    return _normalise(np.log(model.weights) + logn)[1]


def analytic_score(model: GaussianMixtureDataModel, schedule: NoiseSchedule) -> ScoreProvider:
    """Exact ``grad_x log p_t(x | mu)`` for the mixture, as a score provider."""
    log_w = np.log(model.weights)

    def score(x: np.ndarray, mu: np.ndarray, t: float) -> np.ndarray:
        if mu.shape != x.shape or not _offsets_fit(model.offsets, x.shape):
            raise DimensionError(f"score called with x {x.shape}, mu {mu.shape}; model {model.mu.shape}")
        means, var = _moments(model, mu, schedule, t)
        logn, diff = _log_component_densities(x, means, var)
        r, _ = _normalise(log_w + logn)
        if len(r) == 1:
            return -diff[0] / var[0]
        return np.tensordot(r / -var, diff, axes=1)

    return score


def sample_data(model: GaussianMixtureDataModel, rng: np.random.Generator) -> np.ndarray:
    k = int(rng.choice(model.n_components, p=model.weights))
    eps = rng.standard_normal(model.mu.shape)
    return model.mu + model.offsets[k] + math.sqrt(model.variances[k]) * eps


def mixture_for(mu: np.ndarray, components: Sequence[tuple[float, np.ndarray, float]]) -> GaussianMixtureDataModel:
    """Convenience constructor from ``(weight, offset, variance)`` triples."""
    weights, offsets, variances = zip(*components)
    return GaussianMixtureDataModel(mu, np.stack(offsets), np.array(variances), np.array(weights))
