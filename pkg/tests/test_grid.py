from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from editts.errors import DimensionError, RangeError, ValidationError
from editts.grid import (
    EditSpec,
    PitchKernel,
    apply_masked_blend,
    build_binary_mask,
    build_concat_softening_mask,
    build_gradient_softening_mask,
    concat_ramp_weight,
    convolve_pitch_kernel,
    gradient_ramp_weight,
    parse_grid,
    format_grid,
    read_grid,
    write_grid,
)
from editts.metrics import freq_centroid


@pytest.mark.parametrize(
    "regions, n, expected",
    [
        ([(2, 4)], 6, [0, 0, 1, 1, 0, 0]),
        ([], 4, [0, 0, 0, 0]),
        ([(0, 2), (4, 5)], 5, [1, 1, 0, 0, 1]),
    ],
)
def test_binary_mask(regions, n, expected):
    np.testing.assert_array_equal(build_binary_mask(EditSpec(regions), n), expected)


def test_binary_mask_out_of_bounds():
    with pytest.raises(RangeError):
        build_binary_mask(EditSpec([(3, 9)]), 6)


@pytest.mark.parametrize("regions", [[(4, 2)], [(0, 3), (2, 5)], [(3, 5), (0, 2)], [(1, 1)]])
def test_edit_spec_rejects_bad_regions(regions):
    with pytest.raises(ValidationError):
        EditSpec(regions)


def _ramp_oracle(i, ramp=16):
    return Fraction(sum(2 ** (ramp - k) for k in range(i, ramp + 1)), sum(2**k for k in range(ramp + 1)))


def test_gradient_ramp_constants():
    assert gradient_ramp_weight(1) == 65535 / 131071
    assert gradient_ramp_weight(16) == 1 / 131071
    assert gradient_ramp_weight(17) == 0.0
    for i in range(1, 17):
        assert gradient_ramp_weight(i) == float(_ramp_oracle(i))


def test_gradient_softening_mask_shape():
    mask = build_gradient_softening_mask(EditSpec([(20, 25)]), 60)
    np.testing.assert_array_equal(mask[20:25], 1.0)
    assert mask[19] == mask[25] == 65535 / 131071
    assert mask[4] == mask[40] == 1 / 131071
    assert mask[3] == mask[41] == 0.0
    assert np.all(mask[:3] == 0) and np.all(mask[42:] == 0)


def test_gradient_softening_overlapping_ramps_take_max():
    spec = EditSpec([(10, 12), (16, 18)])
    mask = build_gradient_softening_mask(spec, 40)
    # frame 14 is 3 from the first region and 2 from the second
    assert mask[14] == gradient_ramp_weight(2)
    assert mask[13] == gradient_ramp_weight(2)


def test_gradient_ramp_zero_length():
    mask = build_gradient_softening_mask(EditSpec([(2, 4)], ramp_g=0), 8)
    np.testing.assert_array_equal(mask, build_binary_mask(EditSpec([(2, 4)]), 8))


@pytest.mark.parametrize("j, expected", [(1, 0.9), (9, 0.1), (12, 0.0), (0, 0.0)])
def test_concat_ramp_weight(j, expected):
    assert concat_ramp_weight(j) == pytest.approx(expected, abs=1e-15)


def test_concat_ramp_matches_formula_bitwise():
    for j in range(1, 10):
        assert concat_ramp_weight(j) == 0.1 * (10 - j)


def test_concat_softening_mask():
    mask = build_concat_softening_mask([10, 20], 40, exclude=(10, 20))
    assert mask[9] == pytest.approx(0.9)
    assert mask[1] == pytest.approx(0.1)
    assert mask[0] == 0.0
    assert np.all(mask[10:20] == 0)
    assert mask[20] == pytest.approx(0.9)
    assert mask[28] == pytest.approx(0.1)
    assert mask[29] == 0.0


def test_concat_softening_mask_out_of_bounds():
    with pytest.raises(RangeError):
        build_concat_softening_mask([41], 40)


def test_named_kernels_exact():
    assert PitchKernel.named("up").weights == (0.2, 0.2, 0.6, 0.0, 0.0)
    assert PitchKernel.named("down").weights == (0.0, 0.0, 0.6, 0.2, 0.2)
    assert PitchKernel.named("aggressive-up").weights == (0.4, 0.4, 0.2, 0.0, 0.0)


@pytest.mark.parametrize("weights", [(0.5, 0.5, 0.5, 0, 0), (1, 0, 0, 0), (-0.2, 0.4, 0.8, 0, 0)])
def test_kernel_validation(weights):
    with pytest.raises(ValidationError):
        PitchKernel(weights)


def test_kernel_parse():
    assert PitchKernel.parse("up") == PitchKernel.named("up")
    assert PitchKernel.parse("0.1, 0.1, 0.8, 0, 0").weights == (0.1, 0.1, 0.8, 0.0, 0.0)


def _impulse(bin_=10, n_freq=20):
    g = np.zeros((n_freq, 1))
    g[bin_, 0] = 1.0
    return g


def test_convolve_constant_grid_unchanged():
    g = np.full((12, 4), 0.7)
    for name in ("up", "down", "aggressive-up"):
        np.testing.assert_allclose(convolve_pitch_kernel(g, PitchKernel.named(name)), g, atol=1e-15)


def test_convolve_impulse_up():
    out = convolve_pitch_kernel(_impulse(), PitchKernel.named("up"))[:, 0]
    expected = np.zeros(20)
    expected[[10, 11, 12]] = [0.6, 0.2, 0.2]
    np.testing.assert_allclose(out, expected, atol=1e-15)


def test_convolve_impulse_down():
    out = convolve_pitch_kernel(_impulse(), PitchKernel.named("down"))[:, 0]
    expected = np.zeros(20)
    expected[[8, 9, 10]] = [0.2, 0.2, 0.6]
    np.testing.assert_allclose(out, expected, atol=1e-15)


def test_convolve_needs_five_bins():
    with pytest.raises(DimensionError):
        convolve_pitch_kernel(np.zeros((4, 3)), PitchKernel.named("up"))


def test_convolve_identity_is_exact():
    g = np.random.default_rng(0).standard_normal((16, 5))
    assert np.array_equal(convolve_pitch_kernel(g, PitchKernel.named("identity")), g)


def test_convolve_replicate_padding():
    g = np.arange(8, dtype=float)[:, None]
    out = convolve_pitch_kernel(g, PitchKernel.named("up"))[:, 0]
    # bins below 0 replicate bin 0
    assert out[0] == pytest.approx(0.0)
    assert out[1] == pytest.approx(0.2 * 0 + 0.2 * 0 + 0.6 * 1)


def test_masked_blend_examples():
    a = np.array([[1.0, 1.0]])
    b = np.array([[3.0, 5.0]])
    np.testing.assert_array_equal(apply_masked_blend(a, b, [0, 1]), [[1.0, 5.0]])
    np.testing.assert_array_equal(apply_masked_blend(a, b, [0, 0]), a)
    np.testing.assert_array_equal(apply_masked_blend(a, b, [1, 1]), b)


def test_masked_blend_shape_errors():
    with pytest.raises(DimensionError):
        apply_masked_blend(np.zeros((2, 3)), np.zeros((2, 4)), np.zeros(3))
    with pytest.raises(DimensionError):
        apply_masked_blend(np.zeros((2, 3)), np.zeros((2, 3)), np.zeros(4))


small_grids = st.integers(5, 12).flatmap(
    lambda f: st.integers(1, 6).flatmap(
        lambda n: st.lists(st.floats(-5, 5), min_size=f * n, max_size=f * n).map(
            lambda v: np.array(v).reshape(f, n)
        )
    )
)


@settings(max_examples=50, deadline=None)
@given(small_grids, st.lists(st.floats(0, 1), min_size=6, max_size=6))
def test_blend_with_itself_is_identity(grid, weights):
    mask = np.array(weights[: grid.shape[1]] + [0.0] * max(0, grid.shape[1] - 6))[: grid.shape[1]]
    np.testing.assert_array_equal(apply_masked_blend(grid, grid, mask), grid)


@settings(max_examples=50, deadline=None)
@given(
    st.lists(st.tuples(st.integers(0, 60), st.integers(1, 8)), max_size=4),
    st.integers(0, 20),
)
def test_mask_builders_stay_in_unit_interval(raw, ramp):
    regions, pos = [], 0
    for gap, length in raw:
        start = pos + gap
        regions.append((start, start + length))
        pos = start + length
    n = pos + 5
    spec = EditSpec(regions, ramp_g=ramp, ramp_c=min(ramp, 9))
    binary = build_binary_mask(spec, n)
    soft = build_gradient_softening_mask(spec, n)
    assert set(np.unique(binary)) <= {0.0, 1.0}
    assert np.all((soft >= 0) & (soft <= 1))
    np.testing.assert_array_equal(soft[binary == 1], 1.0)
    juncs = [j for r in regions for j in r]
    concat = build_concat_softening_mask(juncs, n, spec.ramp_c)
    assert np.all((concat >= 0) & (concat <= 1))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 30), st.integers(1, 10), st.integers(40, 80))
def test_gradient_mask_non_increasing_with_distance(start, length, n):
    spec = EditSpec([(start, start + length)])
    mask = build_gradient_softening_mask(spec, n)
    right = mask[start + length - 1 :]
    left = mask[: start + 1][::-1]
    assert np.all(np.diff(right) <= 0)
    assert np.all(np.diff(left) <= 0)


@settings(max_examples=50, deadline=None)
@given(small_grids)
def test_convolution_preserves_interior_column_sums(grid):
    # zero the two edge bins on each side so no mass touches the padding
    g = grid.copy()
    g[:2] = 0
    g[-2:] = 0
    g[:4] = 0
    g[-4:] = 0
    out = convolve_pitch_kernel(g, PitchKernel.named("up"))
    np.testing.assert_allclose(out.sum(axis=0), g.sum(axis=0), atol=1e-10)


@pytest.mark.parametrize("center", [20.0, 35.5, 50.0])
def test_kernel_direction_moves_centroid(center):
    f = np.arange(80.0)[:, None]
    bump = -1.0 + 2.5 * np.exp(-((f - center) ** 2) / (2 * 3.0**2))
    base = freq_centroid(bump)[0]
    assert freq_centroid(convolve_pitch_kernel(bump, PitchKernel.named("up")))[0] > base
    assert freq_centroid(convolve_pitch_kernel(bump, PitchKernel.named("down")))[0] < base


def test_grid1_round_trip(tmp_path):
    g = np.random.default_rng(1).standard_normal((6, 9)) * 1e3
    path = write_grid(tmp_path / "g.grid", g)
    assert path.read_text().splitlines()[0] == "GRID1 6 9"
    np.testing.assert_array_equal(read_grid(path), g)


def test_grid1_mask_is_single_row():
    text = format_grid(np.array([0.0, 0.5, 1.0]))
    assert text.splitlines() == ["GRID1 1 3", "0.0 0.5 1.0"]


@pytest.mark.parametrize("text", ["GRID2 1 1\n0\n", "GRID1 2 2\n1 2\n3\n", ""])
def test_grid1_rejects_malformed(text):
    with pytest.raises((ValidationError, DimensionError)):
        parse_grid(text)
