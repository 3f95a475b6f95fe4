"""Prior-perturbation speech editing on a score-based diffusion backbone.

Desk-scale engine: spectrogram-like toy priors, an analytic Gaussian-mixture
score in place of a trained network, pitch-shift and content-replacement
edits, and the metrics used to compare them against naive baselines.
"""

__version__ = "0.1.0"

from .diffusion import NoiseSchedule, make_rng, reverse_integrate, sample_prior
from .edit import content_replace_edit, mel_shift_ablation, naive_concat, pitch_shift_edit
from .grid import EditSpec, PitchKernel
from .oracle import GaussianMixtureDataModel, ToyPriorSpec, analytic_score, default_data_model, make_toy_prior

__all__ = [
    "EditSpec",
    "GaussianMixtureDataModel",
    "NoiseSchedule",
    "PitchKernel",
    "ToyPriorSpec",
    "analytic_score",
    "content_replace_edit",
    "default_data_model",
    "make_rng",
    "make_toy_prior",
    "mel_shift_ablation",
    "naive_concat",
    "pitch_shift_edit",
    "reverse_integrate",
    "sample_prior",
]
