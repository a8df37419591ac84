"""Per-frame descriptors.

Two backends produce raw activations: :class:`OnnxModel` runs a frozen
InceptionV3-style classifier from an ONNX file, and :class:`MockBackend`
reads precomputed rows from a CSV fixture so that everything downstream can
run without model weights. On top of those sit the pure descriptor functions:
the Gaussian summary of a latent vector and the SCDA descriptor of a
convolutional map.
"""

from __future__ import annotations

import csv
import hashlib
import os
from dataclasses import dataclass, field
from typing import Iterable, Protocol, Sequence

import numpy as np
from PIL import Image
from scipy import ndimage

from .errors import EmptyMask, ModelLoadError, ShapeMismatch
from .ingest import Frame

INPUT_SIZE = 299
LATENT_DIM = 2048
DEFAULT_LATENT_OUTPUT = "pool"
DEFAULT_CONV_OUTPUT = "conv"

# 3x3 all-ones: diagonal neighbours count as connected
EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)


@dataclass(frozen=True, eq=False)
class LatentVector:
    values: np.ndarray = field(repr=False)
    frame_index: int

    def __post_init__(self):
        if self.values.ndim != 1 or not np.all(np.isfinite(self.values)):
            raise ValueError("latent vector must be 1-D and finite")


@dataclass(frozen=True)
class GaussianSummary:
    mu: float
    sigma: float
    frame_index: int = 0

    def __post_init__(self):
        if not (np.isfinite(self.mu) and np.isfinite(self.sigma)) or self.sigma < 0:
            raise ValueError(f"invalid Gaussian summary ({self.mu}, {self.sigma})")


@dataclass(frozen=True, eq=False)
class ConvMap:
    values: np.ndarray = field(repr=False)  # H' x W' x C'
    frame_index: int = 0

    def __post_init__(self):
        v = self.values
        if v.ndim != 3 or min(v.shape) < 1:
            raise ValueError(f"conv map must be H'xW'xC' with positive dims, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("conv map has non-finite entries")


@dataclass(frozen=True, eq=False)
class ScdaDescriptor:
    values: np.ndarray = field(repr=False)
    frame_index: int = 0
    degenerate: bool = False


class FeatureBackend(Protocol):
    def extract_latent(self, frames: Sequence[Frame]) -> list[LatentVector]: ...

    def extract_conv_map(self, frames: Sequence[Frame]) -> list[ConvMap]: ...


def preprocess(frame: Frame) -> np.ndarray:
    """Bilinear resize to 299x299 and scale 0..255 to [-1, 1]. Returns float32 HxWx3."""
    pixels = frame.pixels
    if pixels.shape[:2] != (INPUT_SIZE, INPUT_SIZE):
        im = Image.fromarray(pixels, mode="RGB").resize(
            (INPUT_SIZE, INPUT_SIZE), Image.Resampling.BILINEAR)
        pixels = np.asarray(im)
    return pixels.astype(np.float32) / np.float32(127.5) - np.float32(1.0)


def sha256_file(path: str | os.PathLike) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


class OnnxModel:
    """Frozen image classifier loaded from an ONNX file.

    The graph must take one float image batch (NCHW or NHWC, 299x299) and
    expose the pooled 2048-wide activation and the last convolutional grid as
    named outputs. The handle is read-only after construction and can be shared
    between threads.
    """

    def __init__(self, path: str | os.PathLike, latent_output: str = DEFAULT_LATENT_OUTPUT,
                 conv_output: str | None = DEFAULT_CONV_OUTPUT, expected_sha256: str | None = None,
                 latent_dim: int = LATENT_DIM, batch_size: int = 16):
        try:
            import onnxruntime as ort
        except ImportError as exc:
            raise ModelLoadError("onnxruntime is not installed") from exc
        if not os.path.isfile(path):
            raise ModelLoadError(f"model file not found: {path}")
        if expected_sha256 is not None:
            digest = sha256_file(path)
            if digest != expected_sha256.lower():
                raise ModelLoadError(f"model checksum {digest} != pinned {expected_sha256}")
        opts = ort.SessionOptions()
        opts.use_deterministic_compute = True
        opts.log_severity_level = 3
        try:
            self._session = ort.InferenceSession(
                str(path), sess_options=opts, providers=["CPUExecutionProvider"])
        except Exception as exc:  # onnxruntime raises its own untyped errors
            raise ModelLoadError(f"cannot load {path}: {exc}") from exc

        inputs = self._session.get_inputs()
        if len(inputs) != 1:
            raise ModelLoadError(f"expected one graph input, found {len(inputs)}")
        self._input_name = inputs[0].name
        shape = inputs[0].shape
        if len(shape) != 4:
            raise ModelLoadError(f"graph input must be 4-D, got {shape}")
        self.channels_first = shape[1] == 3
        self._fixed_batch = isinstance(shape[0], int)

        names = {o.name for o in self._session.get_outputs()}
        for name in (latent_output, conv_output):
            if name is not None and name not in names:
                raise ModelLoadError(f"graph has no output named {name!r} (has {sorted(names)})")
        self.latent_output = latent_output
        self.conv_output = conv_output
        self.latent_dim = latent_dim
        self.batch_size = batch_size
        self.path = str(path)

    def _run(self, frames: Sequence[Frame], output: str) -> np.ndarray:
        chunks = []
        step = 1 if self._fixed_batch else self.batch_size
        for start in range(0, len(frames), step):
            batch = np.stack([preprocess(f) for f in frames[start:start + step]])
            if self.channels_first:
                batch = batch.transpose(0, 3, 1, 2)
            (out,) = self._session.run([output], {self._input_name: np.ascontiguousarray(batch)})
            chunks.append(np.asarray(out))
        return np.concatenate(chunks)

    def extract_latent(self, frames: Sequence[Frame]) -> list[LatentVector]:
        if not frames:
            return []
        out = self._run(frames, self.latent_output).reshape(len(frames), -1)
        if out.shape[1] != self.latent_dim:
            raise ShapeMismatch(f"latent output has width {out.shape[1]}, expected {self.latent_dim}")
        return [LatentVector(row.astype(np.float64), f.index) for row, f in zip(out, frames)]

    def extract_conv_map(self, frames: Sequence[Frame]) -> list[ConvMap]:
        if not frames:
            return []
        if self.conv_output is None:
            raise ModelLoadError("model was loaded without a convolutional output")
        out = self._run(frames, self.conv_output)
        if out.ndim != 4:
            raise ShapeMismatch(f"conv output must be 4-D, got {out.shape}")
        if self.channels_first:
            out = out.transpose(0, 2, 3, 1)
        return [ConvMap(np.ascontiguousarray(m, dtype=np.float64), f.index)
                for m, f in zip(out, frames)]


class MockBackend:
    """Descriptors read from a CSV fixture keyed by frame index.

    The file has a header row and one row per frame: ``frame_index`` followed by
    the descriptor entries. Frame pixels are ignored. ``conv_shape`` reshapes a
    row into an H'xW'xC' grid for SCDA; by default a row becomes a 1x1xD map.
    """

    def __init__(self, path: str | os.PathLike | None,
                 conv_shape: tuple[int, int, int] | None = None,
                 rows: dict[int, np.ndarray] | None = None):
        if rows is None:
            try:
                rows = read_fixture(path)
            except (OSError, ValueError) as exc:
                raise ModelLoadError(f"cannot read feature fixture {path}: {exc}") from exc
        self.rows = rows
        self.dim = len(next(iter(self.rows.values())))
        if conv_shape is not None and int(np.prod(conv_shape)) != self.dim:
            raise ShapeMismatch(f"conv_shape {conv_shape} does not hold {self.dim} entries")
        self.conv_shape = conv_shape or (1, 1, self.dim)
        self.path = str(path)

    @classmethod
    def from_array(cls, matrix: np.ndarray, conv_shape=None) -> "MockBackend":
        matrix = np.asarray(matrix, dtype=np.float64)
        return cls(None, conv_shape, rows={i: row for i, row in enumerate(matrix)})

    def _row(self, frame: Frame) -> np.ndarray:
        try:
            return self.rows[frame.index]
        except KeyError:
            raise ShapeMismatch(f"fixture {self.path} has no row for frame {frame.index}") from None

    def extract_latent(self, frames: Sequence[Frame]) -> list[LatentVector]:
        return [LatentVector(self._row(f).copy(), f.index) for f in frames]

    def extract_conv_map(self, frames: Sequence[Frame]) -> list[ConvMap]:
        return [ConvMap(self._row(f).reshape(self.conv_shape).copy(), f.index) for f in frames]


def read_fixture(path: str | os.PathLike) -> dict[int, np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0] != "frame_index":
            raise ValueError("fixture must start with a 'frame_index,...' header")
        rows = {}
        for line in reader:
            if not line:
                continue
            if len(line) != len(header):
                raise ValueError(f"row for frame {line[0]} has {len(line)} columns, header has {len(header)}")
            rows[int(line[0])] = np.array([float(x) for x in line[1:]], dtype=np.float64)
    if not rows:
        raise ValueError("fixture has no rows")
    return rows


def write_fixture(path: str | os.PathLike, matrix: np.ndarray) -> None:
    matrix = np.asarray(matrix, dtype=np.float64)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["frame_index"] + [f"f{j}" for j in range(matrix.shape[1])])
        for i, row in enumerate(matrix):
            writer.writerow([i] + [repr(float(x)) for x in row])


def extract_latent(frames: Sequence[Frame], model: FeatureBackend) -> list[LatentVector]:
    return model.extract_latent(list(frames))


def extract_conv_map(frames: Sequence[Frame], model: FeatureBackend) -> list[ConvMap]:
    return model.extract_conv_map(list(frames))


def gaussian_summary(v: LatentVector) -> GaussianSummary:
    # population std (ddof=0)
    x = np.asarray(v.values, dtype=np.float64)
    return GaussianSummary(float(x.mean()), float(x.std()), v.frame_index)


def channel_sum(conv: ConvMap | np.ndarray) -> np.ndarray:
    values = conv.values if isinstance(conv, ConvMap) else np.asarray(conv)
    return values.sum(axis=2, dtype=np.float64)


def threshold_mask(grid: np.ndarray) -> np.ndarray:
    """Cells strictly above the grid mean; all-ones when nothing qualifies."""
    grid = np.asarray(grid, dtype=np.float64)
    mask = grid > grid.mean()
    if not mask.any():
        mask = np.ones_like(mask)
    return mask


def largest_connected_component(mask: np.ndarray) -> np.ndarray:
    """Keep the largest 8-connected component of ``mask``.

    Equal sizes go to the component whose first cell in row-major order comes
    first.
    """
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise EmptyMask("mask has no set cells")
    labels, count = ndimage.label(mask, structure=EIGHT_CONNECTED)
    flat = labels.ravel()
    ids = np.arange(1, count + 1)
    sizes = np.bincount(flat, minlength=count + 1)[1:]
    # first occurrence of each label in row-major order
    first = np.full(count + 1, flat.size)
    nz = np.flatnonzero(flat)
    np.minimum.at(first, flat[nz], nz)
    order = np.lexsort((first[1:], -sizes))
    return labels == ids[order[0]]


def scda_descriptor(conv: ConvMap) -> ScdaDescriptor:
    values = np.asarray(conv.values, dtype=np.float64)
    selected = largest_connected_component(threshold_mask(channel_sum(values)))
    vecs = values[selected]  # (|S|, C')
    desc = np.concatenate([vecs.mean(axis=0), vecs.max(axis=0)])
    norm = np.linalg.norm(desc)
    if norm == 0:
        return ScdaDescriptor(np.zeros_like(desc), conv.frame_index, degenerate=True)
    return ScdaDescriptor(desc / norm, conv.frame_index)
