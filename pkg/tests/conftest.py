import shutil
from pathlib import Path

import numpy as np
import pytest
from PIL import Image

DATA = Path(__file__).parent / "data"


@pytest.fixture
def data_dir():
    return DATA


@pytest.fixture
def image_dir(tmp_path):
    """Five 20x30 PNGs named out of creation order."""
    d = tmp_path / "frames"
    d.mkdir()
    rng = np.random.default_rng(3)
    for name in ["c.png", "a.png", "e.jpg", "b.png", "d.png"]:
        pixels = rng.integers(0, 256, size=(20, 30, 3), dtype=np.uint8)
        Image.fromarray(pixels).save(d / name)
    (d / "notes.txt").write_text("ignored")
    return d


def _ffmpeg():
    try:
        from vidsum.ingest import find_ffmpeg
        return find_ffmpeg()
    except Exception:
        return None


@pytest.fixture(scope="session")
def ffmpeg_exe():
    exe = _ffmpeg()
    if exe is None or not shutil.which(exe) and not Path(exe).exists():
        pytest.skip("no ffmpeg executable available")
    return exe


def write_frame_dir(path, n_frames, height=16, width=24, seed=0):
    """``n_frames`` small PNGs whose sorted order is frame order."""
    path.mkdir(parents=True, exist_ok=True)
    from vidsum.synthetic import solid_frames
    for i, pixels in enumerate(solid_frames(n_frames, height, width, seed)):
        Image.fromarray(pixels).save(path / f"frame_{i:04d}.png")
    return path


@pytest.fixture
def frame_dir(tmp_path):
    def make(n_frames, name="frames"):
        return write_frame_dir(tmp_path / name, n_frames)
    return make
