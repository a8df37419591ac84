import io
import math
import subprocess

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vidsum.errors import InconsistentDimensions, UnreadableSource
from vidsum.ingest import (
    Frame,
    FrameStream,
    SourceKind,
    SourceSpec,
    decimation_indices,
    open_source,
    prefetch,
    probe_video,
    sample_frames,
)
from vidsum.synthetic import write_raw

TINY = np.zeros((1, 1, 3), dtype=np.uint8)


def counting_stream(n, fps=25.0):
    # shares one pixel buffer so long streams stay cheap
    return FrameStream(lambda: (Frame(k, k, k / fps, TINY) for k in range(n)), fps)


def source_indices(stream):
    return [f.source_index for f in stream]


def test_frame_rejects_bad_pixels():
    with pytest.raises(ValueError):
        Frame(0, 0, 0.0, np.zeros((0, 4, 3), dtype=np.uint8))
    with pytest.raises(ValueError):
        Frame(0, 0, 0.0, np.zeros((4, 4), dtype=np.uint8))
    with pytest.raises(ValueError):
        Frame(0, 0, 0.0, np.zeros((4, 4, 3), dtype=np.float32))


def test_empty_directory_is_unreadable(tmp_path):
    with pytest.raises(UnreadableSource):
        open_source(SourceSpec(SourceKind.FRAME_DIRECTORY, tmp_path, 1.0, 1.0))


def test_missing_directory_is_unreadable(tmp_path):
    with pytest.raises(UnreadableSource):
        open_source(SourceSpec(SourceKind.FRAME_DIRECTORY, tmp_path / "nope", 1.0, 1.0))


def test_directory_of_five_images(image_dir):
    frames = list(open_source(SourceSpec(SourceKind.FRAME_DIRECTORY, image_dir, 1.0, 1.0)))
    assert [f.index for f in frames] == [0, 1, 2, 3, 4]
    assert [f.source_index for f in frames] == [0, 1, 2, 3, 4]
    assert all(f.pixels.shape == (20, 30, 3) for f in frames)


def test_directory_order_is_lexicographic(image_dir):
    from PIL import Image
    frames = list(open_source(SourceSpec(SourceKind.FRAME_DIRECTORY, image_dir, 1.0, 1.0)))
    expected = np.asarray(Image.open(image_dir / "a.png").convert("RGB"))
    np.testing.assert_array_equal(frames[0].pixels, expected)
    expected = np.asarray(Image.open(image_dir / "b.png").convert("RGB"))
    np.testing.assert_array_equal(frames[1].pixels, expected)


def test_directory_with_mixed_sizes(image_dir):
    from PIL import Image
    Image.fromarray(np.zeros((10, 10, 3), dtype=np.uint8)).save(image_dir / "f.png")
    stream = open_source(SourceSpec(SourceKind.FRAME_DIRECTORY, image_dir, 1.0, 1.0))
    with pytest.raises(InconsistentDimensions):
        list(stream)


def test_source_spec_validation(tmp_path):
    with pytest.raises(ValueError):
        SourceSpec(SourceKind.RAW_PIPE, tmp_path, 30.0, 25.0, 2, 2)
    with pytest.raises(ValueError):
        SourceSpec(SourceKind.RAW_PIPE, tmp_path, 1.0, None, 2, 2)
    with pytest.raises(ValueError):
        SourceSpec(SourceKind.RAW_PIPE, tmp_path, 1.0, 25.0)
    with pytest.raises(ValueError):
        SourceSpec(SourceKind.VIDEO_FILE, tmp_path, 0.0)


def test_sixty_seconds_at_one_fps(tmp_path):
    raw = tmp_path / "clip.rgb"
    arrays = [np.full((2, 2, 3), k % 256, dtype=np.uint8) for k in range(60 * 25)]
    write_raw(raw, arrays)
    frames = list(open_source(SourceSpec(SourceKind.RAW_PIPE, raw, 1.0, 25.0, 2, 2)))
    assert len(frames) == 60
    assert [f.source_index for f in frames[:3]] == [0, 25, 50]
    assert frames[1].pixels[0, 0, 0] == 25
    assert frames[2].timestamp_s == pytest.approx(2.0)


def test_raw_pipe_from_handle():
    payload = bytes(range(12)) * 3
    spec = SourceSpec(SourceKind.RAW_PIPE, io.BytesIO(payload), 1.0, 1.0, height=1, width=4)
    frames = list(open_source(spec))
    assert len(frames) == 3
    np.testing.assert_array_equal(frames[0].pixels.ravel(), np.arange(12))


def test_raw_pipe_truncated_frame():
    spec = SourceSpec(SourceKind.RAW_PIPE, io.BytesIO(b"\x00" * 13), 1.0, 1.0, height=1, width=4)
    with pytest.raises(UnreadableSource):
        list(open_source(spec))


def test_missing_raw_file(tmp_path):
    with pytest.raises(UnreadableSource):
        open_source(SourceSpec(SourceKind.RAW_PIPE, tmp_path / "x.rgb", 1.0, 25.0, 2, 2))


def test_identity_decimation():
    assert source_indices(sample_frames(counting_stream(50), 25, 25)) == list(range(50))


def test_decimation_every_25th():
    out = sample_frames(counting_stream(101), 25, 1)
    assert source_indices(out) == [0, 25, 50, 75, 100]
    assert [f.index for f in out] == [0, 1, 2, 3, 4]


def test_decimation_rounds_half_to_even():
    # step 2.5: 2.5 -> 2 and 7.5 -> 8
    idx = decimation_indices(5, 2)
    assert [next(idx) for _ in range(6)] == [0, 2, 5, 8, 10, 12]


def test_one_hour_at_one_fps():
    out = sample_frames(counting_stream(3600 * 25), 25, 1)
    assert sum(1 for _ in out) == 3600


@settings(max_examples=60, deadline=None)
@given(duration=st.integers(1, 120), native=st.sampled_from([24.0, 25.0, 29.97, 30.0, 50.0, 60.0]),
       ratio=st.floats(0.01, 1.0))
def test_emitted_count_matches_duration(duration, native, ratio):
    sample = native * ratio
    n_source = math.floor(duration * native)
    out = sample_frames(counting_stream(n_source, native), native, sample)
    count = sum(1 for _ in out)
    assert abs(count - math.floor(n_source / native * sample)) <= 1


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 400), native=st.floats(1.0, 60.0), ratio=st.floats(0.05, 1.0))
def test_source_indices_strictly_increase(n, native, ratio):
    idx = source_indices(sample_frames(counting_stream(n, native), native, native * ratio))
    assert idx[0] == 0
    assert all(b > a for a, b in zip(idx, idx[1:]))


def test_decimation_is_deterministic(image_dir):
    stream = open_source(SourceSpec(SourceKind.FRAME_DIRECTORY, image_dir, 2.0, 5.0))
    first, second = list(stream), list(stream)
    assert first == second
    assert [f.source_index for f in first] == [0, 2]


def test_prefetch_keeps_order():
    frames = list(prefetch(counting_stream(500), maxsize=4))
    assert [f.index for f in frames] == list(range(500))


def test_prefetch_reraises_producer_errors():
    def broken():
        yield Frame(0, 0, 0.0, TINY)
        raise UnreadableSource("boom")

    with pytest.raises(UnreadableSource):
        list(prefetch(FrameStream(broken, 1.0)))


def test_prefetch_consumer_can_stop_early():
    it = prefetch(counting_stream(10_000), maxsize=2)
    assert next(it).index == 0
    it.close()


@pytest.fixture(scope="module")
def test_video(tmp_path_factory, ffmpeg_exe):
    path = tmp_path_factory.mktemp("video") / "clip.mp4"
    subprocess.run([ffmpeg_exe, "-v", "error", "-f", "lavfi", "-i",
                    "testsrc=duration=4:size=64x48:rate=25", "-pix_fmt", "yuv420p", str(path)],
                   check=True)
    return path


def test_probe_video(test_video):
    info = probe_video(test_video)
    assert (info.width, info.height) == (64, 48)
    assert info.fps == pytest.approx(25.0)


def test_video_file_decimated(test_video):
    frames = list(open_source(SourceSpec(SourceKind.VIDEO_FILE, test_video, 1.0)))
    assert [f.source_index for f in frames] == [0, 25, 50, 75]
    assert frames[0].pixels.shape == (48, 64, 3)
    assert list(open_source(SourceSpec(SourceKind.VIDEO_FILE, test_video, 1.0))) == frames


def test_missing_video_file(tmp_path):
    with pytest.raises(UnreadableSource):
        open_source(SourceSpec(SourceKind.VIDEO_FILE, tmp_path / "none.mp4", 1.0))


def test_corrupt_video_file(tmp_path, ffmpeg_exe):
    bad = tmp_path / "bad.mp4"
    bad.write_bytes(b"not a video at all" * 10)
    with pytest.raises(UnreadableSource):
        list(open_source(SourceSpec(SourceKind.VIDEO_FILE, bad, 1.0)))
