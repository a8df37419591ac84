"""Storyboard images: a grid of key frames above a cluster-coloured timeline."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from PIL import Image

from .errors import EmptyStoryboard, WidthTooSmall
from .ingest import Frame

BLACK = (0, 0, 0)
MIN_TILE = 16
MIN_BAR_PX = 2

# fixed, high-contrast colours; none of them is pure black
PALETTE_HEX = (
    "e6194b", "3cb44b", "ffe119", "4363d8", "f58231", "911eb4", "46f0f0", "f032e6",
    "bcf60c", "fabebe", "008080", "e6beff", "9a6324", "fffac8", "800000", "aaffc3",
    "808000", "ffd8b1", "000075", "808080", "ffffff", "a9a9a9", "ff7f0e", "1f77b4",
    "2ca02c", "d62728", "9467bd", "8c564b", "e377c2", "17becf", "7f7f00", "ff9896",
)
PALETTE = tuple(tuple(int(h[i:i + 2], 16) for i in (0, 2, 4)) for h in PALETTE_HEX)


def palette_color(cluster: int) -> tuple[int, int, int]:
    """Colour of a cluster id; ids past the base palette reuse it lighter or darker."""
    base = np.array(PALETTE[cluster % len(PALETTE)], dtype=np.float64)
    cycle = cluster // len(PALETTE)
    if cycle == 0:
        return tuple(int(c) for c in base)
    strength = min(0.25 * ((cycle + 1) // 2), 0.75)
    target = 255.0 if cycle % 2 else 0.0
    shifted = np.rint(base + (target - base) * strength).astype(int)
    if not shifted.any():
        shifted[:] = 1
    return tuple(int(c) for c in shifted)


def make_palette(n: int) -> list[tuple[int, int, int]]:
    """First ``n`` cluster colours, all distinct and none black.

    A shifted colour that collides with an earlier one (white made lighter, say)
    is nudged along the blue, then green, then red channel until it is free.
    """
    out: list[tuple[int, int, int]] = []
    used = {BLACK}
    for i in range(n):
        c = list(palette_color(i))
        step = 0
        while tuple(c) in used:
            ch = 2 - step % 3
            c[ch] = (c[ch] + 7) % 256
            step += 1
        used.add(tuple(c))
        out.append(tuple(c))
    return out


@dataclass
class CollageLayout:
    rows: int
    cols: int
    tile_w: int
    tile_h: int
    bar_height: int = 24
    palette: list[tuple[int, int, int]] = field(default_factory=lambda: list(PALETTE))

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("layout needs at least one row and column")
        if self.tile_w < MIN_TILE or self.tile_h < MIN_TILE:
            raise ValueError(f"tiles must be at least {MIN_TILE}px")
        if len(set(self.palette)) != len(self.palette):
            raise ValueError("palette colours must be distinct")

    @property
    def width(self) -> int:
        return self.cols * self.tile_w

    @property
    def height(self) -> int:
        return self.rows * self.tile_h + self.bar_height


def plan_layout(n_clusters: int, tile_w: int = 320, tile_h: int = 180,
                bar_height: int = 24) -> CollageLayout:
    if n_clusters < 1:
        raise EmptyStoryboard("nothing to lay out")
    cols = math.ceil(math.sqrt(n_clusters))
    rows = math.ceil(n_clusters / cols)
    return CollageLayout(rows, cols, tile_w, tile_h, bar_height,
                         make_palette(max(n_clusters, len(PALETTE))))


def letterbox(pixels: np.ndarray, tile_w: int, tile_h: int) -> np.ndarray:
    """Fit an image inside ``tile_w x tile_h`` keeping its aspect, padding with black."""
    h, w = pixels.shape[:2]
    scale = min(tile_w / w, tile_h / h)
    new_w = min(tile_w, max(1, round(w * scale)))
    new_h = min(tile_h, max(1, round(h * scale)))
    if (new_w, new_h) != (w, h):
        pixels = np.asarray(Image.fromarray(pixels, mode="RGB").resize(
            (new_w, new_h), Image.Resampling.BILINEAR))
    tile = np.zeros((tile_h, tile_w, 3), dtype=np.uint8)
    top = (tile_h - new_h) // 2
    left = (tile_w - new_w) // 2
    tile[top:top + new_h, left:left + new_w] = pixels
    return tile


def render_collage(key_frames: Sequence[Frame | np.ndarray], layout: CollageLayout,
                   timeline: np.ndarray | None = None) -> np.ndarray:
    """Tile key frames row-major in the order given.

    The image is ``(rows * tile_h + bar_height) x (cols * tile_w)``; the bottom
    strip holds ``timeline`` when given and stays black otherwise, as do unused
    cells.
    """
    if not key_frames:
        raise EmptyStoryboard("no key frames to render")
    if len(key_frames) > layout.rows * layout.cols:
        raise ValueError(f"{len(key_frames)} frames do not fit a {layout.rows}x{layout.cols} grid")
    canvas = np.zeros((layout.height, layout.width, 3), dtype=np.uint8)
    for i, frame in enumerate(key_frames):
        pixels = frame.pixels if isinstance(frame, Frame) else np.asarray(frame, dtype=np.uint8)
        r, c = divmod(i, layout.cols)
        y, x = r * layout.tile_h, c * layout.tile_w
        canvas[y:y + layout.tile_h, x:x + layout.tile_w] = letterbox(
            pixels, layout.tile_w, layout.tile_h)
    if timeline is not None:
        if timeline.shape != (layout.bar_height, layout.width, 3):
            raise ValueError(f"timeline shape {timeline.shape} does not match the layout")
        canvas[layout.rows * layout.tile_h:] = timeline
    return canvas


def slot_edges(n: int, width: int) -> np.ndarray:
    """Pixel boundaries of ``n`` equal slots across ``width`` columns."""
    return (np.arange(n + 1) * width) // n


def render_timeline(labels: Sequence[int], key_frames: Sequence[int], width: int,
                    layout: CollageLayout, allow_merge: bool = False) -> np.ndarray:
    """Colour bar with one slot per frame and a black bar on every key frame.

    Bars are one slot wide but never narrower than 2px. When ``width`` is below
    the frame count, ``allow_merge`` lets several frames share a pixel column,
    which takes the label of the first of them; otherwise that raises
    WidthTooSmall.
    """
    n = len(labels)
    if n == 0:
        raise EmptyStoryboard("no frames on the timeline")
    if width < MIN_BAR_PX:
        raise WidthTooSmall(f"timeline needs at least {MIN_BAR_PX}px")
    labels = np.asarray(labels, dtype=np.intp)
    needed = int(labels.max()) + 1
    if needed > len(layout.palette):
        raise ValueError(f"palette has {len(layout.palette)} colours, labels need {needed}")
    colors = np.asarray(layout.palette, dtype=np.uint8)
    strip = np.zeros((layout.bar_height, width, 3), dtype=np.uint8)

    if width >= n:
        edges = slot_edges(n, width)
        column_frame = np.repeat(np.arange(n), np.diff(edges))
        spans = [(edges[k], edges[k + 1]) for k in key_frames]
    elif allow_merge:
        column_frame = (np.arange(width) * n) // width
        # first frame of each column; the key frame's column is where it would start
        spans = [(k * width // n, k * width // n + 1) for k in key_frames]
    else:
        raise WidthTooSmall(f"{width}px cannot hold {n} frame slots")
    strip[:] = colors[labels[column_frame]][None, :, :]

    for x0, x1 in spans:
        x1 = max(x1, x0 + MIN_BAR_PX)
        if x1 > width:
            x0, x1 = width - MIN_BAR_PX, width
        strip[:, x0:x1] = BLACK
    return strip


def render_storyboard(key_frames: Sequence[Frame | np.ndarray], labels: Sequence[int],
                      key_indices: Sequence[int], layout: CollageLayout) -> np.ndarray:
    timeline = render_timeline(labels, key_indices, layout.width, layout, allow_merge=True)
    return render_collage(key_frames, layout, timeline)


def save_png(image: np.ndarray, path) -> None:
    # no metadata chunks, so identical pixels give identical files
    Image.fromarray(image, mode="RGB").save(path, format="PNG", optimize=False, compress_level=6)


def pixel_digest(image: np.ndarray) -> str:
    image = np.ascontiguousarray(image, dtype=np.uint8)
    h = hashlib.sha256()
    h.update(np.array(image.shape, dtype="<u4").tobytes())
    h.update(image.tobytes())
    return h.hexdigest()
