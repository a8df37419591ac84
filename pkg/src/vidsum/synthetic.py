"""Deterministic synthetic inputs: feature fixtures and plain coloured frames."""

from __future__ import annotations

import numpy as np

from .ingest import Frame, FrameStream


def two_mode_features(n_frames: int = 100, dim: int = 32, mode_b: tuple[int, int] = (30, 60),
                      separation: float = 1.0, noise: float = 0.1, seed: int = 0) -> np.ndarray:
    """Rows drawn around two centres; frames in ``[mode_b[0], mode_b[1])`` use the second.

    The default puts 30% of the frames in mode B, in a stretch the two-segment
    time split never samples from (its key frames are 24 and 74).
    """
    rng = np.random.default_rng(seed)
    centre_a = np.full(dim, -separation)
    centre_b = np.full(dim, separation)
    x = rng.normal(0.0, noise, size=(n_frames, dim))
    in_b = np.zeros(n_frames, dtype=bool)
    in_b[mode_b[0]:mode_b[1]] = True
    x += np.where(in_b[:, None], centre_b, centre_a)
    return x


def solid_frames(n_frames: int, height: int = 36, width: int = 64, seed: int = 0) -> list[np.ndarray]:
    """Frames of one random colour each, with a lighter band so tiles are not flat."""
    rng = np.random.default_rng(seed)
    colors = rng.integers(0, 256, size=(n_frames, 3), dtype=np.uint8)
    frames = []
    for i, c in enumerate(colors):
        f = np.empty((height, width, 3), dtype=np.uint8)
        f[:] = c
        band = (i * width) // max(n_frames, 1)
        f[:, band:band + max(1, width // 16)] = 255
        frames.append(f)
    return frames


def solid_stream(n_frames: int, height: int = 36, width: int = 64, fps: float = 1.0) -> FrameStream:
    return FrameStream.from_arrays(solid_frames(n_frames, height, width), fps)


def black_stream(n_frames: int, height: int = 8, width: int = 8, fps: float = 1.0) -> FrameStream:
    pixels = np.zeros((height, width, 3), dtype=np.uint8)
    frames = [Frame(i, i, i / fps, pixels) for i in range(n_frames)]
    return FrameStream.from_frames(frames, fps)


def write_raw(path, arrays) -> None:
    with open(path, "wb") as fh:
        for a in arrays:
            fh.write(np.ascontiguousarray(a, dtype=np.uint8).tobytes())
