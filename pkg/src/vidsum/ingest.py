"""Frame sources: video files (decoded by an external ffmpeg), raw RGB pipes
and directories of images, all turned into one ordered stream of frames.

Video decoding never happens in-process. ffmpeg is asked for headerless
``rgb24`` rawvideo on stdout, which is the same byte layout as the raw pipe
source, so both share one reader::

    ffmpeg -v error -nostdin -i INPUT -map 0:v:0 -f rawvideo -pix_fmt rgb24 -vsync passthrough -
"""

from __future__ import annotations

import enum
import json
import os
import queue
import re
import shutil
import subprocess
import sys
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import BinaryIO, Callable, Iterable, Iterator

import numpy as np
from PIL import Image

from .errors import EmptySource, InconsistentDimensions, UnreadableSource

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")


@dataclass(frozen=True, eq=False)
class Frame:
    index: int
    source_index: int
    timestamp_s: float
    pixels: np.ndarray = field(repr=False)

    def __post_init__(self):
        p = self.pixels
        if p.ndim != 3 or p.shape[2] != 3 or p.shape[0] < 1 or p.shape[1] < 1:
            raise ValueError(f"frame pixels must be HxWx3, got {p.shape}")
        if p.dtype != np.uint8:
            raise ValueError(f"frame pixels must be uint8, got {p.dtype}")
        if self.index < 0 or self.source_index < 0 or self.timestamp_s < 0:
            raise ValueError("frame indices and timestamp must be non-negative")

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    def __eq__(self, other):
        if not isinstance(other, Frame):
            return NotImplemented
        return (self.index, self.source_index, self.timestamp_s) == (
            other.index, other.source_index, other.timestamp_s,
        ) and np.array_equal(self.pixels, other.pixels)


class SourceKind(enum.Enum):
    VIDEO_FILE = "video"
    FRAME_DIRECTORY = "directory"
    RAW_PIPE = "raw"


@dataclass
class SourceSpec:
    kind: SourceKind
    path: str | os.PathLike | BinaryIO
    sample_fps: float
    native_fps: float | None = None
    # raw pipes carry no header, so the geometry comes from the caller
    height: int | None = None
    width: int | None = None

    def __post_init__(self):
        if self.sample_fps <= 0:
            raise ValueError("sample_fps must be > 0")
        if self.native_fps is not None:
            if self.native_fps <= 0:
                raise ValueError("native_fps must be > 0")
            if self.sample_fps > self.native_fps:
                raise ValueError(
                    f"sample_fps={self.sample_fps} exceeds native_fps={self.native_fps}")
        if self.kind is not SourceKind.VIDEO_FILE and self.native_fps is None:
            raise ValueError(f"native_fps is required for {self.kind.value} sources")
        if self.kind is SourceKind.RAW_PIPE and (not self.height or not self.width):
            raise ValueError("raw pipe sources need height and width")


class FrameStream:
    """Lazy, re-iterable, ordered sequence of frames.

    Each iteration re-opens the underlying source, so two passes over the same
    stream produce identical frames. Streams over a one-shot handle (stdin)
    can only be iterated once.
    """

    def __init__(self, factory: Callable[[], Iterator[Frame]], native_fps: float):
        self._factory = factory
        self.native_fps = native_fps

    def __iter__(self) -> Iterator[Frame]:
        shape = None
        for frame in self._factory():
            if shape is None:
                shape = frame.pixels.shape
            elif frame.pixels.shape != shape:
                raise InconsistentDimensions(
                    f"frame {frame.source_index} is {frame.pixels.shape[:2]}, "
                    f"stream started with {shape[:2]}")
            yield frame

    @classmethod
    def from_frames(cls, frames: Iterable[Frame], native_fps: float = 1.0) -> "FrameStream":
        frames = list(frames)
        return cls(lambda: iter(frames), native_fps)

    @classmethod
    def from_arrays(cls, arrays: Iterable[np.ndarray], native_fps: float = 1.0) -> "FrameStream":
        frames = [Frame(i, i, i / native_fps, np.ascontiguousarray(a, dtype=np.uint8))
                  for i, a in enumerate(arrays)]
        return cls.from_frames(frames, native_fps)


def decimation_indices(native_fps: float, sample_fps: float) -> Iterator[int]:
    """Yield the source frame numbers kept when resampling, in order.

    Index m of the output maps to round(m * native / sample); Python's round()
    resolves .5 to the even neighbour.
    """
    if not 0 < sample_fps <= native_fps:
        raise ValueError(f"need 0 < sample_fps <= native_fps, got {sample_fps}, {native_fps}")
    step = native_fps / sample_fps
    m = 0
    while True:
        yield round(m * step)
        m += 1


def sample_frames(stream: Iterable[Frame], native_fps: float, sample_fps: float) -> FrameStream:
    def factory():
        targets = decimation_indices(native_fps, sample_fps)
        want = next(targets)
        out = 0
        for frame in stream:
            if frame.source_index < want:
                continue
            # targets strictly increase for step >= 1, but a sparse upstream may skip some
            while want < frame.source_index:
                want = next(targets)
            if frame.source_index == want:
                yield Frame(out, frame.source_index, frame.timestamp_s, frame.pixels)
                out += 1
                want = next(targets)

    return FrameStream(factory, native_fps)


def read_raw_frames(handle: BinaryIO, height: int, width: int,
                    native_fps: float) -> Iterator[Frame]:
    size = height * width * 3
    k = 0
    while True:
        buf = _read_exact(handle, size)
        if not buf:
            return
        if len(buf) < size:
            raise UnreadableSource(
                f"truncated frame {k}: got {len(buf)} of {size} bytes")
        pixels = np.frombuffer(buf, dtype=np.uint8).reshape(height, width, 3)
        yield Frame(k, k, k / native_fps, pixels)
        k += 1


def _read_exact(handle: BinaryIO, size: int) -> bytes:
    chunks = []
    remaining = size
    while remaining:
        chunk = handle.read(remaining)
        if not chunk:
            break
        chunks.append(chunk)
        remaining -= len(chunk)
    return b"".join(chunks)


def list_frame_files(directory: str | os.PathLike) -> list[Path]:
    d = Path(directory)
    if not d.is_dir():
        raise UnreadableSource(f"not a directory: {d}")
    files = sorted(p for p in d.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
    if not files:
        raise EmptySource(f"no .png/.jpg images in {d}")
    return files


def _read_directory(files: list[Path], native_fps: float) -> Iterator[Frame]:
    for k, path in enumerate(files):
        try:
            with Image.open(path) as im:
                pixels = np.asarray(im.convert("RGB"), dtype=np.uint8)
        except (OSError, ValueError) as exc:
            raise UnreadableSource(f"cannot decode {path}: {exc}") from exc
        yield Frame(k, k, k / native_fps, pixels)


def find_ffmpeg() -> str:
    exe = os.environ.get("VIDSUM_FFMPEG") or shutil.which("ffmpeg")
    if exe:
        return exe
    try:
        import imageio_ffmpeg
    except ImportError:
        raise UnreadableSource(
            "no ffmpeg executable found; install ffmpeg or set VIDSUM_FFMPEG") from None
    return imageio_ffmpeg.get_ffmpeg_exe()


@dataclass(frozen=True)
class VideoInfo:
    width: int
    height: int
    fps: float


def probe_video(path: str | os.PathLike) -> VideoInfo:
    """Read width, height and frame rate of the first video stream."""
    ffprobe = shutil.which("ffprobe")
    if ffprobe:
        proc = subprocess.run(
            [ffprobe, "-v", "error", "-select_streams", "v:0", "-show_entries",
             "stream=width,height,avg_frame_rate,r_frame_rate", "-of", "json", str(path)],
            capture_output=True, text=True)
        if proc.returncode == 0:
            streams = json.loads(proc.stdout).get("streams") or []
            if streams:
                s = streams[0]
                rate = s.get("avg_frame_rate") or s.get("r_frame_rate")
                if rate in (None, "0/0"):
                    rate = s.get("r_frame_rate")
                num, _, den = rate.partition("/")
                fps = float(num) / float(den or 1)
                return VideoInfo(int(s["width"]), int(s["height"]), fps)
    # plain ffmpeg prints the stream summary on stderr and exits non-zero
    proc = subprocess.run([find_ffmpeg(), "-hide_banner", "-nostdin", "-i", str(path)],
                          capture_output=True, text=True)
    for line in proc.stderr.splitlines():
        if "Video:" not in line:
            continue
        size = re.search(r"[ ,](\d{2,5})x(\d{2,5})[ ,\]]", line)
        fps = re.search(r"([\d.]+) fps", line) or re.search(r"([\d.]+) tbr", line)
        if size and fps:
            return VideoInfo(int(size.group(1)), int(size.group(2)), float(fps.group(1)))
    raise UnreadableSource(f"cannot probe video stream of {path}")


def _read_video(path: str, info: VideoInfo) -> Iterator[Frame]:
    cmd = [find_ffmpeg(), "-v", "error", "-nostdin", "-i", str(path), "-map", "0:v:0",
           "-f", "rawvideo", "-pix_fmt", "rgb24", "-vsync", "passthrough", "-"]
    proc = subprocess.Popen(cmd, stdout=subprocess.PIPE, stderr=subprocess.PIPE)
    try:
        yield from read_raw_frames(proc.stdout, info.height, info.width, info.fps)
    finally:
        proc.stdout.close()
        if proc.poll() is None:
            proc.kill()
        err = proc.stderr.read().decode(errors="replace").strip()
        proc.stderr.close()
        code = proc.wait()
    if code != 0:
        raise UnreadableSource(f"ffmpeg failed on {path}: {err or code}")


def open_source(spec: SourceSpec) -> FrameStream:
    """Open a source and return its frames decimated to ``spec.sample_fps``."""
    if spec.kind is SourceKind.FRAME_DIRECTORY:
        files = list_frame_files(spec.path)
        native = spec.native_fps
        raw = FrameStream(lambda: _read_directory(files, native), native)
    elif spec.kind is SourceKind.RAW_PIPE:
        raw = _raw_stream(spec)
    elif spec.kind is SourceKind.VIDEO_FILE:
        path = str(spec.path)
        if not os.path.isfile(path):
            raise UnreadableSource(f"no such video file: {path}")
        info = probe_video(path)
        native = spec.native_fps or info.fps
        if spec.sample_fps > native:
            raise ValueError(f"sample_fps={spec.sample_fps} exceeds native_fps={native}")
        info = VideoInfo(info.width, info.height, native)
        raw = FrameStream(lambda: _read_video(path, info), native)
    else:
        raise ValueError(f"unknown source kind {spec.kind!r}")
    return sample_frames(raw, raw.native_fps, spec.sample_fps)


def _raw_stream(spec: SourceSpec) -> FrameStream:
    h, w, fps = spec.height, spec.width, spec.native_fps
    src = spec.path
    if hasattr(src, "read"):
        return FrameStream(lambda: read_raw_frames(src, h, w, fps), fps)
    if str(src) == "-":
        return FrameStream(lambda: read_raw_frames(sys.stdin.buffer, h, w, fps), fps)
    path = Path(src)
    if not path.is_file() and not path.is_fifo():
        raise UnreadableSource(f"no such raw stream: {path}")

    def factory():
        with open(path, "rb") as fh:
            yield from read_raw_frames(fh, h, w, fps)

    return FrameStream(factory, fps)


_DONE = object()


def prefetch(frames: Iterable[Frame], maxsize: int = 64) -> Iterator[Frame]:
    """Fill a bounded queue from a background thread and yield in order.

    Errors raised by the producer are re-raised in the consumer.
    """
    q: queue.Queue = queue.Queue(maxsize=maxsize)
    stop = threading.Event()

    def produce():
        try:
            for frame in frames:
                if stop.is_set():
                    return
                q.put(frame)
            q.put(_DONE)
        except BaseException as exc:  # handed to the consumer
            q.put(exc)

    worker = threading.Thread(target=produce, name="frame-decoder", daemon=True)
    worker.start()
    try:
        while True:
            item = q.get()
            if item is _DONE:
                break
            if isinstance(item, BaseException):
                raise item
            yield item
    finally:
        stop.set()
        # unblock a producer stuck on a full queue
        while worker.is_alive():
            try:
                q.get_nowait()
            except queue.Empty:
                worker.join(timeout=0.01)
