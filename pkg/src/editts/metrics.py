"""Scalar summaries of edit runs: pitch proxy, leakage, splice continuity, NLL."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .diffusion import NoiseSchedule
from .edit import PitchEditResult
from .errors import DimensionError, RangeError
from .grid import as_grid
from .oracle import GaussianMixtureDataModel, log_likelihood

PITCH_COLUMNS = (
    "seed",
    "region_start",
    "region_end",
    "kernel",
    "centroid_delta",
    "leakage",
    "nll_editts",
    "nll_melshift",
    "juncture_disc",
)
CONTENT_COLUMNS = (
    "seed",
    "src_gap_start",
    "src_gap_end",
    "trg_chunk_start",
    "trg_chunk_end",
    "dst_start",
    "dst_end",
    "editts_disc",
    "naive_disc",
    "trg_disc",
)


def freq_centroid(grid: np.ndarray) -> np.ndarray:
    """Per-frame mean frequency index, weighting bins by ``exp(grid)``.

    Serves as a stand-in for an f0 track on log-magnitude grids.
    """
    grid = as_grid(grid)
    w = np.exp(grid - grid.max(axis=0, keepdims=True))
    f = np.arange(grid.shape[0], dtype=np.float64)[:, None]
    return (f * w).sum(axis=0) / w.sum(axis=0)


def centroid_shift(result: PitchEditResult) -> list[float]:
    """Mean centroid change (edit minus plain) inside each edit region."""
    delta = freq_centroid(result.x_edit) - freq_centroid(result.x_plain)
    return [float(delta[s:e].mean()) for s, e in result.spec.regions]


def untouched_frames(result: PitchEditResult) -> np.ndarray:
    return (result.edit_mask == 0) & (result.softening_mask == 0)


def region_leakage(result: PitchEditResult) -> float:
    """Largest change the edit made on frames outside the mask and its ramp."""
    keep = untouched_frames(result)
    if not keep.any():
        return 0.0
    return float(np.max(np.abs(result.x_edit[:, keep] - result.x_plain[:, keep])))


def juncture_discontinuity(grid: np.ndarray, junctures: Iterable[int]) -> float:
    """Mean over junctures ``j`` of ``||grid[:, j] - grid[:, j-1]||^2 / n_freq``."""
    grid = as_grid(grid)
    junctures = list(junctures)
    n_freq, n_frames = grid.shape
    for j in junctures:
        if not 0 < j < n_frames:
            raise RangeError(f"juncture {j} must lie strictly inside (0, {n_frames})")
    if not junctures:
        return 0.0
    jumps = [np.sum((grid[:, j] - grid[:, j - 1]) ** 2) / n_freq for j in junctures]
    return float(np.mean(jumps))


def nll_comparison(
    x_editts: np.ndarray,
    x_melshift: np.ndarray,
    shifted_model: GaussianMixtureDataModel,
    schedule: NoiseSchedule,
) -> tuple[float, float]:
    """Negative log-likelihood of both outputs under the shifted data model at t = 0."""
    for x in (x_editts, x_melshift):
        if np.shape(x) != shifted_model.mu.shape:
            raise DimensionError(f"grid {np.shape(x)} does not match model {shifted_model.mu.shape}")
    return (
        -log_likelihood(shifted_model, schedule, x_editts, 0.0),
        -log_likelihood(shifted_model, schedule, x_melshift, 0.0),
    )


def region_boundaries(regions: Sequence[tuple[int, int]], n_frames: int) -> list[int]:
    return sorted({j for region in regions for j in region if 0 < j < n_frames})


@dataclass
class EditReport:
    """Per-trial pitch-edit summary; one CSV row per edit region."""

    seed: int
    kernel: str
    regions: list[tuple[int, int]]
    centroid_plain: np.ndarray
    centroid_edit: np.ndarray
    centroid_deltas: list[float]
    leakage: float
    nll_editts: float
    nll_melshift: float
    juncture_disc: float
    extras: dict = field(default_factory=dict)

    def rows(self) -> list[dict]:
        return [
            {
                "seed": self.seed,
                "region_start": s,
                "region_end": e,
                "kernel": self.kernel,
                "centroid_delta": d,
                "leakage": self.leakage,
                "nll_editts": self.nll_editts,
                "nll_melshift": self.nll_melshift,
                "juncture_disc": self.juncture_disc,
            }
            for (s, e), d in zip(self.regions, self.centroid_deltas)
        ]


def pitch_report(
    result: PitchEditResult,
    x_melshift: np.ndarray,
    shifted_model: GaussianMixtureDataModel,
    schedule: NoiseSchedule,
    kernel_name: str,
) -> EditReport:
    nll_e, nll_m = nll_comparison(result.x_edit, x_melshift, shifted_model, schedule)
    n_frames = result.x_edit.shape[1]
    return EditReport(
        seed=-1 if result.seed is None else result.seed,
        kernel=kernel_name,
        regions=list(result.spec.regions),
        centroid_plain=freq_centroid(result.x_plain),
        centroid_edit=freq_centroid(result.x_edit),
        centroid_deltas=centroid_shift(result),
        leakage=region_leakage(result),
        nll_editts=nll_e,
        nll_melshift=nll_m,
        juncture_disc=juncture_discontinuity(result.x_edit, region_boundaries(result.spec.regions, n_frames)),
    )


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path, rows: Iterable[dict], columns: Sequence[str]) -> Path:
    """Write rows with a fixed column order; floats use round-trip ``repr``."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row[c]) for c in columns])
    return path


def read_csv(path) -> list[dict]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))
