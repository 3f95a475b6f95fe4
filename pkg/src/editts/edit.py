"""Prior-space editing: pitch shift, content replacement and their baselines.

Both edits run two reverse trajectories side by side from the same starting
noise: a reference trajectory on an unedited prior and an edit trajectory on
the perturbed prior. Per frame, the edit trajectory takes a softening-mask
blend of the two per-step increments, so frames far from the edit follow the
reference exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .diffusion import NoiseSchedule, ScoreProvider, evaluate_score, make_rng, reverse_drift, reverse_integrate
from .errors import DimensionError, ValidationError
from .grid import (
    EditSpec,
    FrameRange,
    PitchKernel,
    apply_masked_blend,
    as_grid,
    build_binary_mask,
    build_concat_softening_mask,
    build_gradient_softening_mask,
    check_range,
    check_same_shape,
    convolve_pitch_kernel,
)

RngLike = Union[np.random.Generator, int]
KernelLike = Union[PitchKernel, Sequence[PitchKernel]]

MASK_CONVENTIONS = ("printed", "alg1-style")


def _resolve_rng(rng: RngLike) -> tuple[np.random.Generator, Optional[int]]:
    if isinstance(rng, np.random.Generator):
        return rng, None
    return make_rng(int(rng)), int(rng)


def _region_kernels(spec: EditSpec, kernel: KernelLike) -> list[PitchKernel]:
    if isinstance(kernel, PitchKernel):
        return [kernel] * len(spec.regions)
    kernels = list(kernel)
    if len(kernels) != len(spec.regions):
        raise ValidationError(f"{len(kernels)} kernels for {len(spec.regions)} regions")
    return kernels


@dataclass(frozen=True, eq=False)
class PitchEditResult:
    x_plain: np.ndarray
    x_edit: np.ndarray
    mu: np.ndarray
    mu_edit: np.ndarray
    spec: EditSpec
    seed: Optional[int] = None

    @property
    def edit_mask(self) -> np.ndarray:
        return build_binary_mask(self.spec, self.mu.shape[1])

    @property
    def softening_mask(self) -> np.ndarray:
        return build_gradient_softening_mask(self.spec, self.mu.shape[1])


@dataclass(frozen=True, eq=False)
class ContentEditResult:
    x_edit: np.ndarray
    x_trg: np.ndarray
    mu_edit: np.ndarray
    src_gap: FrameRange
    trg_chunk: FrameRange
    dst_range: FrameRange
    seed: Optional[int] = None

    @property
    def junctures(self) -> list[int]:
        """Interior splice points of ``x_edit``."""
        n = self.x_edit.shape[1]
        return [j for j in self.dst_range if 0 < j < n]


def shift_prior(mu: np.ndarray, spec: EditSpec, kernel: KernelLike) -> np.ndarray:
    """``m * (K * mu) + (1 - m) * mu``, with one kernel per region if given a list."""
    mu = as_grid(mu, "mu")
    mask = build_binary_mask(spec, mu.shape[1])
    target = mu.copy()
    convolved: dict[PitchKernel, np.ndarray] = {}
    for (start, end), k in zip(spec.regions, _region_kernels(spec, kernel)):
        if k not in convolved:
            convolved[k] = convolve_pitch_kernel(mu, k)
        target[:, start:end] = convolved[k][:, start:end]
    return apply_masked_blend(mu, target, mask)


def pitch_shift_edit(
    mu: np.ndarray,
    spec: EditSpec,
    kernel: KernelLike,
    schedule: NoiseSchedule,
    provider: ScoreProvider,
    rng: RngLike,
    edit_noise: Optional[np.ndarray] = None,
) -> PitchEditResult:
    """Shift pitch inside ``spec.regions`` by perturbing the prior.

    Both trajectories start from the same noise draw. ``edit_noise`` replaces
    the edit trajectory's draw; it exists only to build negative controls.

    The blend ``(1 - S) * dx1 + S * dx2`` is evaluated as
    ``dx1 + S * (dx2 - dx1)``, which is the same quantity but stays
    bit-identical to ``dx1`` wherever ``S == 0`` or ``dx1 == dx2``.
    """
    mu = as_grid(mu, "mu")
    gen, seed = _resolve_rng(rng)
    n_frames = mu.shape[1]
    s_g = build_gradient_softening_mask(spec, n_frames)[None, :]
    mu_edit = shift_prior(mu, spec, kernel)

    eps = gen.standard_normal(mu.shape)
    x = mu + eps
    x_edit = mu_edit + (eps if edit_noise is None else as_grid(edit_noise, "edit_noise"))
    check_same_shape(x, x_edit)

    for t in schedule.times():
        dx1 = reverse_drift(schedule, mu, x, evaluate_score(provider, x, mu, t), t)
        dx2 = reverse_drift(schedule, mu_edit, x_edit, evaluate_score(provider, x_edit, mu_edit, t), t)
        x = x - dx1
        x_edit = x_edit - (dx1 + s_g * (dx2 - dx1))

    return PitchEditResult(x, x_edit, mu, mu_edit, spec, seed)


def apply_mel_shift(x: np.ndarray, spec: EditSpec, kernel: KernelLike) -> np.ndarray:
    """Convolve the kernel straight onto a synthesised grid (no denoising)."""
    return shift_prior(x, spec, kernel)


def mel_shift_ablation(
    mu: np.ndarray,
    spec: EditSpec,
    kernel: KernelLike,
    schedule: NoiseSchedule,
    provider: ScoreProvider,
    rng: RngLike,
) -> np.ndarray:
    """Plain synthesis from the unedited prior, then a post-hoc kernel shift.

    Draws its noise exactly like :func:`pitch_shift_edit`, so with the same
    seed the underlying synthesis equals that function's ``x_plain``.
    """
    mu = as_grid(mu, "mu")
    gen, _ = _resolve_rng(rng)
    x = reverse_integrate(schedule, mu, mu + gen.standard_normal(mu.shape), provider)
    return apply_mel_shift(x, spec, kernel)


# -- content replacement -------------------------------------------------------


def split_source_prior(mu_src: np.ndarray, src_gap: FrameRange) -> tuple[np.ndarray, np.ndarray]:
    start, end = check_range(src_gap, mu_src.shape[1])
    return mu_src[:, :start], mu_src[:, end:]


def extract_target_chunk(mu_trg: np.ndarray, trg_chunk: FrameRange) -> np.ndarray:
    start, end = check_range(trg_chunk, mu_trg.shape[1])
    return mu_trg[:, start:end]


def soft_concat(mu_a: np.ndarray, mu_b: np.ndarray, mu_c: np.ndarray, s_c: np.ndarray) -> np.ndarray:
    """Concatenate ``[a | b | c]`` and cross-fade frames near the two junctures.

    A frame with weight ``w`` becomes ``(1 - w) * own + w * edge``, where
    ``edge`` is the boundary column of the chunk on the other side of its
    nearest juncture.
    """
    if not (mu_a.shape[0] == mu_b.shape[0] == mu_c.shape[0]):
        raise DimensionError("chunks must share n_freq")
    na, nb, nc = mu_a.shape[1], mu_b.shape[1], mu_c.shape[1]
    out = np.concatenate([mu_a, mu_b, mu_c], axis=1)
    s_c = np.asarray(s_c, dtype=np.float64)
    if s_c.shape != (out.shape[1],):
        raise DimensionError(f"s_c length {s_c.shape} does not match {out.shape[1]} frames")
    j1, j2 = na, na + nb
    blended = out.copy()
    for tau in np.flatnonzero(s_c):
        w = s_c[tau]
        if tau < j1:
            edge = mu_b[:, 0] if nb else (mu_c[:, 0] if nc else None)
        elif tau >= j2:
            edge = mu_b[:, -1] if nb else (mu_a[:, -1] if na else None)
        elif tau - j1 + 1 <= j2 - tau:
            edge = mu_a[:, -1] if na else None
        else:
            edge = mu_c[:, 0] if nc else None
        if edge is not None:
            blended[:, tau] = (1.0 - w) * out[:, tau] + w * edge
    return blended


def _map_frames(n_out: int, trg_chunk: FrameRange, dst_range: FrameRange, n_src: int) -> np.ndarray:
    """Index into the target grid for each output frame (-1 where none exists)."""
    offset = trg_chunk[0] - dst_range[0]
    idx = np.arange(n_out) + offset
    idx[(idx < 0) | (idx >= n_src)] = -1
    return idx


def slice_and_reshape(
    dx1: np.ndarray, trg_chunk: FrameRange, dst_range: FrameRange, s_g: np.ndarray, out_frames: int
) -> np.ndarray:
    """Move target-trajectory increments into edit-grid coordinates, weighted by ``s_g``.

    Target frame ``trg_chunk[0] + i`` lands on output frame ``dst_range[0] + i``.
    The same offset carries the softening ramp frames around the chunk; output
    frames without a target counterpart get 0.
    """
    c0, c1 = check_range(trg_chunk, dx1.shape[1])
    d0, d1 = check_range(dst_range, out_frames)
    if c1 - c0 != d1 - d0:
        raise DimensionError(f"chunk length {c1 - c0} != destination length {d1 - d0}")
    s_g = np.asarray(s_g, dtype=np.float64)
    if s_g.shape != (out_frames,):
        raise DimensionError(f"s_g length {s_g.shape} does not match {out_frames} frames")
    idx = _map_frames(out_frames, (c0, c1), (d0, d1), dx1.shape[1])
    out = np.zeros((dx1.shape[0], out_frames))
    take = (idx >= 0) & (s_g != 0)
    out[:, take] = s_g[take] * dx1[:, idx[take]]
    return out


def draw_content_noise(
    rng: np.random.Generator, n_freq: int, src_frames: int, trg_frames: int, shared: bool = False
) -> tuple[np.ndarray, np.ndarray]:
    """Starting noise ``(eps_src, eps_trg)``; target first, then source."""
    eps_trg = rng.standard_normal((n_freq, trg_frames))
    if shared:
        if src_frames != trg_frames:
            raise DimensionError("shared noise needs equal source and target lengths")
        return eps_trg.copy(), eps_trg
    return rng.standard_normal((n_freq, src_frames)), eps_trg


def content_replace_edit(
    mu_src: np.ndarray,
    mu_trg: np.ndarray,
    src_gap: FrameRange,
    trg_chunk: FrameRange,
    schedule: NoiseSchedule,
    provider: ScoreProvider,
    rng: RngLike,
    *,
    ramp_g: int = 16,
    ramp_c: int = 9,
    mask_convention: str = "printed",
    noise: Optional[tuple[np.ndarray, np.ndarray]] = None,
    shared_noise: bool = False,
) -> ContentEditResult:
    """Replace ``src_gap`` of the source with ``trg_chunk`` of the target.

    The edit prior is ``soft_concat(src[:gap], trg[chunk], src[gap:])``. The
    edit trajectory's starting noise takes the source draw outside the chunk
    and the target draw inside it, so the chunk starts in the same state in
    both trajectories. ``noise=(eps_src, eps_trg)`` overrides the draws.

    With ``mask_convention="printed"`` the update is
    ``slice_and_reshape(dx1, S_g) + (1 - S_g) * dx2``: the chunk follows the
    target trajectory and the rest follows its own increments.
    ``"alg1-style"`` swaps the roles of the two increments.
    """
    if mask_convention not in MASK_CONVENTIONS:
        raise ValidationError(f"mask_convention must be one of {MASK_CONVENTIONS}")
    mu_src, mu_trg = as_grid(mu_src, "mu_src"), as_grid(mu_trg, "mu_trg")
    if mu_src.shape[0] != mu_trg.shape[0]:
        raise DimensionError("source and target priors must share n_freq")
    gen, seed = _resolve_rng(rng)
    g0, g1 = check_range(src_gap, mu_src.shape[1])
    c0, c1 = check_range(trg_chunk, mu_trg.shape[1])

    mu_a, mu_c = split_source_prior(mu_src, (g0, g1))
    mu_b = extract_target_chunk(mu_trg, (c0, c1))
    dst = (g0, g0 + (c1 - c0))
    n_out = mu_a.shape[1] + mu_b.shape[1] + mu_c.shape[1]
    s_c = build_concat_softening_mask([dst[0], dst[1]], n_out, ramp_c, exclude=dst)
    mu_edit = soft_concat(mu_a, mu_b, mu_c, s_c)

    if noise is None:
        eps_src, eps_trg = draw_content_noise(gen, mu_src.shape[0], mu_src.shape[1], mu_trg.shape[1], shared_noise)
    else:
        eps_src, eps_trg = (as_grid(e, "noise") for e in noise)
        if eps_src.shape != mu_src.shape or eps_trg.shape != mu_trg.shape:
            raise DimensionError("noise shapes must match the source and target priors")
    eps_edit = np.concatenate([eps_src[:, :g0], eps_trg[:, c0:c1], eps_src[:, g1:]], axis=1)

    x_trg = mu_trg + eps_trg
    x_edit = mu_edit + eps_edit
    s_g = build_gradient_softening_mask(EditSpec((dst,), ramp_g=ramp_g), n_out)[None, :]
    idx = _map_frames(n_out, (c0, c1), dst, mu_trg.shape[1])
    has_ref = (idx >= 0) & (s_g[0] > 0)
    ref_idx = np.where(has_ref, idx, 0)

    for t in schedule.times():
        dx1 = reverse_drift(schedule, mu_trg, x_trg, evaluate_score(provider, x_trg, mu_trg, t), t)
        dx2 = reverse_drift(schedule, mu_edit, x_edit, evaluate_score(provider, x_edit, mu_edit, t), t)
        x_trg = x_trg - dx1
        # target increments in edit coordinates; frames outside the ramp or with no
        # target counterpart fall back to their own increment
        placed = np.where(has_ref[None, :], dx1[:, ref_idx], dx2)
        if mask_convention == "printed":
            step = dx2 + s_g * (placed - dx2)
        else:
            step = placed + s_g * (dx2 - placed)
        x_edit = x_edit - step

    return ContentEditResult(x_edit, x_trg, mu_edit, (g0, g1), (c0, c1), dst, seed)


def naive_concat(
    x_src_synth: np.ndarray, x_trg_synth: np.ndarray, src_gap: FrameRange, trg_chunk: FrameRange
) -> np.ndarray:
    """Hard splice of synthesised grids: no blending, no denoising."""
    g0, g1 = check_range(src_gap, x_src_synth.shape[1])
    c0, c1 = check_range(trg_chunk, x_trg_synth.shape[1])
    if x_src_synth.shape[0] != x_trg_synth.shape[0]:
        raise DimensionError("source and target grids must share n_freq")
    return np.concatenate([x_src_synth[:, :g0], x_trg_synth[:, c0:c1], x_src_synth[:, g1:]], axis=1)
