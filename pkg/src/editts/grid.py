"""Spectrogram-like grids, per-frame edit masks and the pitch-shift kernel.

A grid is a plain 2D ``float64`` array laid out ``[n_freq, n_frames]``
(frequency bins by time frames, log-magnitude semantics). Frame masks are 1D
arrays of length ``n_frames``; they broadcast over every frequency bin.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionError, RangeError, ValidationError

FrameRange = tuple[int, int]

MIN_KERNEL_BINS = 5
KERNEL_OFFSETS = (-2, -1, 0, 1, 2)
DEFAULT_RAMP_G = 16
DEFAULT_RAMP_C = 9


def as_grid(values, name: str = "grid") -> np.ndarray:
    """Coerce ``values`` to a finite 2D float64 array."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2D [n_freq, n_frames], got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite values")
    return arr


def check_same_shape(*grids: np.ndarray) -> None:
    shapes = {g.shape for g in grids}
    if len(shapes) > 1:
        raise DimensionError(f"grid shapes differ: {sorted(shapes)}")


def check_range(rng: Sequence[int], n_frames: int, *, allow_empty: bool = False) -> FrameRange:
    """Validate a half-open frame range against ``n_frames``."""
    try:
        start, end = (int(v) for v in rng)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"frame range must be a (start, end) pair, got {rng!r}") from exc
    if start < 0 or end > n_frames:
        raise RangeError(f"frame range ({start}, {end}) outside [0, {n_frames})")
    if end < start or (end == start and not allow_empty):
        raise RangeError(f"frame range ({start}, {end}) is empty or reversed")
    return start, end


@dataclass(frozen=True)
class EditSpec:
    """Editable frame regions plus the softening ramp lengths.

    Regions are half-open ``(start, end)`` frame ranges, sorted and
    non-overlapping. ``ramp_g`` is the reach of the gradient-softening ramp and
    ``ramp_c`` that of the concatenation-softening ramp.
    """

    regions: tuple[FrameRange, ...] = ()
    ramp_g: int = DEFAULT_RAMP_G
    ramp_c: int = DEFAULT_RAMP_C

    def __post_init__(self):
        regions = tuple((int(s), int(e)) for s, e in self.regions)
        object.__setattr__(self, "regions", regions)
        if self.ramp_g < 0 or self.ramp_c < 0:
            raise ValidationError("ramp lengths must be non-negative")
        prev_end = 0
        for start, end in regions:
            if start < 0:
                raise RangeError(f"region ({start}, {end}) starts before frame 0")
            if start >= end:
                raise ValidationError(f"region ({start}, {end}) is empty or reversed")
            if start < prev_end:
                raise ValidationError("regions must be sorted and non-overlapping")
            prev_end = end

    def check_fits(self, n_frames: int) -> None:
        for start, end in self.regions:
            if end > n_frames:
                raise RangeError(f"region ({start}, {end}) outside [0, {n_frames})")


@dataclass(frozen=True)
class PitchKernel:
    """Five weights applied to frequency offsets ``(-2, -1, 0, +1, +2)``."""

    weights: tuple[float, float, float, float, float]
    name: str = "custom"

    def __post_init__(self):
        w = tuple(float(v) for v in self.weights)
        if len(w) != len(KERNEL_OFFSETS):
            raise ValidationError(f"pitch kernel needs 5 weights, got {len(w)}")
        if any(v < 0 or not np.isfinite(v) for v in w):
            raise ValidationError("pitch kernel weights must be finite and non-negative")
        if abs(sum(w) - 1.0) > 1e-12:
            raise ValidationError(f"pitch kernel weights must sum to 1, got {sum(w)!r}")
        object.__setattr__(self, "weights", w)

    @classmethod
    def named(cls, name: str) -> "PitchKernel":
        try:
            return cls(NAMED_KERNELS[name], name=name)
        except KeyError:
            raise ValidationError(
                f"unknown kernel {name!r}; expected one of {sorted(NAMED_KERNELS)} or 5 weights"
            ) from None

    @classmethod
    def parse(cls, text: str) -> "PitchKernel":
        """Build from a kernel name or a comma-separated list of 5 weights."""
        text = text.strip()
        if text in NAMED_KERNELS:
            return cls.named(text)
        try:
            weights = tuple(float(v) for v in text.split(","))
        except ValueError:
            raise ValidationError(f"cannot parse kernel {text!r}") from None
        return cls(weights, name=text.replace(" ", ""))


NAMED_KERNELS = {
    "up": (0.2, 0.2, 0.6, 0.0, 0.0),
    "down": (0.0, 0.0, 0.6, 0.2, 0.2),
    "aggressive-up": (0.4, 0.4, 0.2, 0.0, 0.0),
    "aggressive-down": (0.0, 0.0, 0.2, 0.4, 0.4),
    "identity": (0.0, 0.0, 1.0, 0.0, 0.0),
}


def _frame_distances(regions: Iterable[FrameRange], n_frames: int) -> np.ndarray:
    """Distance of every frame to the nearest region frame (0 inside, inf if no regions)."""
    idx = np.arange(n_frames)
    dist = np.full(n_frames, np.inf)
    for start, end in regions:
        d = np.where(idx < start, start - idx, np.where(idx >= end, idx - end + 1, 0))
        dist = np.minimum(dist, d)
    return dist


def build_binary_mask(spec: EditSpec, n_frames: int) -> np.ndarray:
    spec.check_fits(n_frames)
    mask = np.zeros(n_frames)
    for start, end in spec.regions:
        mask[start:end] = 1.0
    return mask


def gradient_ramp_weight(i: int, ramp: int = DEFAULT_RAMP_G) -> float:
    """Softening weight of a frame ``i`` frames away from an editable region.

    ``sum(2**(ramp - k) for k in i..ramp) / sum(2**k for k in 0..ramp)``, so
    the weight roughly halves per frame and reaches 0 beyond ``ramp``.
    """
    if i <= 0:
        return 1.0
    if i > ramp:
        return 0.0
    num = sum(2 ** (ramp - k) for k in range(i, ramp + 1))
    den = sum(2**k for k in range(ramp + 1))
    return num / den


def concat_ramp_weight(j: int, ramp: int = DEFAULT_RAMP_C) -> float:
    """Cross-fade weight ``0.1 * (10 - j)`` for the default ramp of 9 frames."""
    if j < 1 or j > ramp:
        return 0.0
    return (1.0 / (ramp + 1)) * (ramp + 1 - j)


def build_gradient_softening_mask(spec: EditSpec, n_frames: int) -> np.ndarray:
    """1 on editable frames, a halving ramp on both sides, 0 beyond ``spec.ramp_g``."""
    spec.check_fits(n_frames)
    dist = _frame_distances(spec.regions, n_frames)
    table = np.array([gradient_ramp_weight(i, spec.ramp_g) for i in range(spec.ramp_g + 1)])
    mask = np.zeros(n_frames)
    near = dist <= spec.ramp_g
    mask[near] = table[dist[near].astype(int)]
    return mask


def build_concat_softening_mask(
    junctures: Iterable[int],
    n_frames: int,
    ramp_c: int = DEFAULT_RAMP_C,
    exclude: FrameRange | None = None,
) -> np.ndarray:
    """Cross-fade weights around splice points.

    A juncture ``J`` sits between frames ``J - 1`` and ``J``; both of those
    frames are at distance 1. Frames inside ``exclude`` (the inserted chunk)
    are left at 0 so only the surrounding frames fade toward the chunk.
    """
    idx = np.arange(n_frames)
    dist = np.full(n_frames, np.inf)
    for j in junctures:
        j = int(j)
        if j < 0 or j > n_frames:
            raise RangeError(f"juncture {j} outside [0, {n_frames}]")
        d = np.where(idx < j, j - idx, idx - j + 1)
        dist = np.minimum(dist, d)
    mask = np.zeros(n_frames)
    for tau in np.flatnonzero(dist <= ramp_c):
        mask[tau] = concat_ramp_weight(int(dist[tau]), ramp_c)
    if exclude is not None:
        start, end = check_range(exclude, n_frames, allow_empty=True)
        mask[start:end] = 0.0
    return mask


def convolve_pitch_kernel(grid: np.ndarray, kernel: PitchKernel) -> np.ndarray:
    """Convolve every frame along frequency; edges are replicate-padded.

    ``out[f] = sum_o w[o] * in[f + o]`` for offsets ``o`` in -2..+2, so the
    "up" weights (0.2, 0.2, 0.6, 0, 0) push energy toward higher bins.
    """
    grid = as_grid(grid)
    n_freq = grid.shape[0]
    if n_freq < MIN_KERNEL_BINS:
        raise DimensionError(f"pitch kernel needs at least {MIN_KERNEL_BINS} bins, got {n_freq}")
    padded = np.pad(grid, ((2, 2), (0, 0)), mode="edge")
    out = np.zeros_like(grid)
    for w, o in zip(kernel.weights, KERNEL_OFFSETS):
        out = out + w * padded[2 + o : 2 + o + n_freq]
    return out


def apply_masked_blend(a: np.ndarray, b: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Per frame: ``mask * b + (1 - mask) * a``.

    Evaluated as ``a + mask * (b - a)`` so that ``mask == 0`` returns ``a`` and
    blending a grid with itself returns it unchanged; ``mask == 1`` returns ``b``.
    """
    a = as_grid(a, "a")
    b = as_grid(b, "b")
    check_same_shape(a, b)
    mask = np.asarray(mask, dtype=np.float64)
    if mask.shape != (a.shape[1],):
        raise DimensionError(f"mask length {mask.shape} does not match {a.shape[1]} frames")
    m = mask[None, :]
    return np.where(m == 1.0, b, a + m * (b - a))


# -- GRID1 text format -------------------------------------------------------


def format_grid(grid: np.ndarray) -> str:
    grid = np.atleast_2d(np.asarray(grid, dtype=np.float64))
    lines = [f"GRID1 {grid.shape[0]} {grid.shape[1]}"]
    lines.extend(" ".join(repr(float(v)) for v in row) for row in grid)
    return "\n".join(lines) + "\n"


def parse_grid(text: str) -> np.ndarray:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValidationError("empty GRID1 document")
    header = lines[0].split()
    if len(header) != 3 or header[0] != "GRID1":
        raise ValidationError(f"bad GRID1 header: {lines[0]!r}")
    n_freq, n_frames = int(header[1]), int(header[2])
    rows = [[float(v) for v in ln.split()] for ln in lines[1:]]
    if len(rows) != n_freq or any(len(r) != n_frames for r in rows):
        raise DimensionError(f"GRID1 body does not match header {n_freq}x{n_frames}")
    return np.array(rows, dtype=np.float64).reshape(n_freq, n_frames)


def write_grid(path, grid: np.ndarray) -> Path:
    """Write a grid (or a 1D mask, as a single row) in GRID1 format."""
    path = Path(path)
    path.write_text(format_grid(grid), encoding="utf-8")
    return path


def read_grid(path) -> np.ndarray:
    return parse_grid(Path(path).read_text(encoding="utf-8"))
