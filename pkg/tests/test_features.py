import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from vidsum.errors import EmptyMask, ModelLoadError, ShapeMismatch
from vidsum.features import (
    ConvMap,
    LatentVector,
    MockBackend,
    OnnxModel,
    channel_sum,
    extract_conv_map,
    extract_latent,
    gaussian_summary,
    largest_connected_component,
    preprocess,
    scda_descriptor,
    sha256_file,
    threshold_mask,
    write_fixture,
)
from vidsum.ingest import Frame

import oracles


def frame(pixels, index=0):
    return Frame(index, index, float(index), np.asarray(pixels, dtype=np.uint8))


def random_frames(n, h=40, w=60, seed=0):
    rng = np.random.default_rng(seed)
    return [frame(rng.integers(0, 256, (h, w, 3)), i) for i in range(n)]


# preprocessing

def test_preprocess_zero_frame():
    out = preprocess(frame(np.zeros((50, 80, 3))))
    assert out.shape == (299, 299, 3)
    assert np.all(out == -1.0)


def test_preprocess_full_frame():
    out = preprocess(frame(np.full((10, 10, 3), 255)))
    assert np.all(out == 1.0)


def test_preprocess_native_size_is_affine_only():
    pixels = np.random.default_rng(1).integers(0, 256, (299, 299, 3)).astype(np.uint8)
    out = preprocess(frame(pixels))
    np.testing.assert_allclose(out, pixels / 127.5 - 1.0, atol=1e-6)


def test_preprocess_range():
    out = preprocess(random_frames(1)[0])
    assert out.dtype == np.float32
    assert out.min() >= -1.0 and out.max() <= 1.0


# Gaussian summary

def test_gaussian_summary_constant():
    g = gaussian_summary(LatentVector(np.full(2048, 3.5), 7))
    assert (g.mu, g.sigma, g.frame_index) == (3.5, 0.0, 7)


def test_gaussian_summary_alternating():
    g = gaussian_summary(LatentVector(np.tile([0.0, 2.0], 1024), 0))
    assert g.mu == 1.0
    assert g.sigma == 1.0  # population std: divides by N


@settings(max_examples=100, deadline=None)
@given(v=arrays(np.float64, 2048, elements=st.floats(-100, 100)), c=st.floats(-50, 50))
def test_gaussian_summary_shift(v, c):
    g = gaussian_summary(LatentVector(v, 0))
    shifted = gaussian_summary(LatentVector(v + c, 0))
    assert g.sigma >= 0
    assert shifted.mu == pytest.approx(g.mu + c, abs=1e-9)
    assert shifted.sigma == pytest.approx(g.sigma, abs=1e-9)


# channel sum / threshold / components

def test_channel_sum_ones():
    np.testing.assert_array_equal(channel_sum(np.ones((2, 2, 3))), np.full((2, 2), 3.0))


def test_channel_sum_single_entry():
    m = np.zeros((3, 4, 5))
    m[1, 2, 3] = 2.5
    grid = channel_sum(ConvMap(m))
    assert np.count_nonzero(grid) == 1 and grid[1, 2] == 2.5


@settings(max_examples=100, deadline=None)
@given(arrays(np.float64, (6, 6, 4), elements=st.floats(0, 10)))
def test_channel_sum_matches_loops(m):
    np.testing.assert_allclose(channel_sum(m), oracles.channel_sum_loops(m), rtol=1e-12, atol=1e-12)


def test_threshold_example():
    np.testing.assert_array_equal(threshold_mask(np.array([[1.0, 2.0], [3.0, 4.0]])),
                                  [[False, False], [True, True]])


def test_threshold_constant_falls_back_to_all():
    assert threshold_mask(np.full((3, 3), 4.0)).all()


def test_threshold_spike():
    grid = np.zeros((4, 4))
    grid[2, 1] = 100.0
    mask = threshold_mask(grid)
    assert mask.sum() == 1 and mask[2, 1]


def mask_from(rows):
    return np.array([[c == "#" for c in r] for r in rows])


def test_lcc_single_blob_unchanged():
    m = mask_from(["....", ".##.", ".##.", "...."])
    np.testing.assert_array_equal(largest_connected_component(m), m)


def test_lcc_keeps_bigger_blob():
    m = mask_from(["###...", "......", "...###", "....##"])
    out = largest_connected_component(m)
    np.testing.assert_array_equal(out, mask_from(["......", "......", "...###", "....##"]))


def test_lcc_tie_goes_to_first_cell():
    m = mask_from(["...##", ".....", "##...", "....."])
    out = largest_connected_component(m)
    np.testing.assert_array_equal(out, mask_from(["...##", ".....", ".....", "....."]))


def test_lcc_diagonal_neighbours_connect():
    m = mask_from(["#...", ".#..", "..#.", "##.#"])
    out = largest_connected_component(m)
    assert out.sum() == 6  # every cell reaches (2,2) diagonally


def test_lcc_empty_mask():
    with pytest.raises(EmptyMask):
        largest_connected_component(np.zeros((3, 3), dtype=bool))


@settings(max_examples=200, deadline=None)
@given(arrays(np.bool_, st.tuples(st.integers(1, 7), st.integers(1, 7))))
def test_lcc_matches_bfs(mask):
    if not mask.any():
        return
    expected = oracles.largest_component_bfs(mask.tolist())
    np.testing.assert_array_equal(largest_connected_component(mask), expected)


# SCDA descriptor

def test_scda_single_active_cell():
    m = np.zeros((5, 5, 4))
    v = np.array([1.0, 0.0, 3.0, 2.0])
    m[2, 3] = v
    d = scda_descriptor(ConvMap(m))
    expected = np.concatenate([v, v]) / np.linalg.norm(np.concatenate([v, v]))
    np.testing.assert_allclose(d.values, expected, atol=1e-15)
    assert not d.degenerate


def test_scda_constant_map():
    c = np.array([0.5, 1.5, 2.0])
    m = np.broadcast_to(c, (4, 4, 3)).copy()
    d = scda_descriptor(ConvMap(m))
    expected = np.concatenate([c, c]) / np.linalg.norm(np.concatenate([c, c]))
    np.testing.assert_allclose(d.values, expected, atol=1e-15)


def test_scda_zero_map_is_degenerate():
    d = scda_descriptor(ConvMap(np.zeros((3, 3, 4))))
    assert d.degenerate
    assert not d.values.any() and d.values.shape == (8,)


@settings(max_examples=200, deadline=None)
@given(arrays(np.float64, (6, 6, 4), elements=st.floats(0, 5)))
def test_scda_matches_loops(m):
    d = scda_descriptor(ConvMap(m))
    np.testing.assert_allclose(d.values, oracles.scda_loops(m), atol=1e-9)
    if not d.degenerate:
        assert abs(np.linalg.norm(d.values) - 1.0) <= 1e-6


# mock backend

@pytest.fixture
def fixture_csv(tmp_path):
    path = tmp_path / "feats.csv"
    write_fixture(path, np.arange(24, dtype=float).reshape(4, 6))
    return path


def test_mock_backend_rows(fixture_csv):
    backend = MockBackend(fixture_csv)
    frames = random_frames(4)
    out = extract_latent(frames, backend)
    assert [v.frame_index for v in out] == [0, 1, 2, 3]
    np.testing.assert_array_equal(out[2].values, np.arange(12, 18))


def test_mock_backend_conv_shape(fixture_csv):
    maps = extract_conv_map(random_frames(2), MockBackend(fixture_csv, conv_shape=(1, 2, 3)))
    assert maps[1].values.shape == (1, 2, 3)
    np.testing.assert_array_equal(maps[1].values.ravel(), np.arange(6, 12))
    default = MockBackend(fixture_csv).extract_conv_map(random_frames(1))[0]
    assert default.values.shape == (1, 1, 6)


def test_mock_backend_errors(tmp_path, fixture_csv):
    with pytest.raises(ShapeMismatch):
        MockBackend(fixture_csv).extract_latent(random_frames(5))
    with pytest.raises(ShapeMismatch):
        MockBackend(fixture_csv, conv_shape=(2, 2, 2))
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n")
    with pytest.raises(ModelLoadError):
        MockBackend(bad)
    with pytest.raises(ModelLoadError):
        MockBackend(tmp_path / "missing.csv")


def test_empty_batches(fixture_csv):
    assert extract_latent([], MockBackend(fixture_csv)) == []
    assert extract_conv_map([], MockBackend(fixture_csv)) == []


def test_fixture_round_trip(tmp_path):
    x = np.random.default_rng(0).normal(size=(3, 5))
    write_fixture(tmp_path / "f.csv", x)
    backend = MockBackend(tmp_path / "f.csv")
    np.testing.assert_array_equal(np.stack([backend.rows[i] for i in range(3)]), x)
