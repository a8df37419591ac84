"""Desk-scale versions of the FID-vs-size curve and the one-hour runtime table."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .evaluation import evaluate_storyboard
from .features import FeatureBackend, MockBackend, OnnxModel
from .render import plan_layout, render_storyboard
from .report import RunReport
from .summarize import (
    Method,
    SummarizerConfig,
    compute_descriptors,
    descriptors_from_latents,
    storyboard_from_descriptors,
    summarize,
    summarize_time,
)
from .synthetic import black_stream, solid_stream, two_mode_features

log = logging.getLogger(__name__)

ALL_METHODS = tuple(Method)


def eval_rows(stream, methods: Sequence[Method], sizes: Sequence[int], backend: FeatureBackend,
              lam: float = 0.0, seed: int | None = None) -> list[tuple[str, int, float]]:
    """FID of every (method, size) storyboard against all frames, in latent space."""
    frames = list(stream)
    latents = compute_descriptors(frames, Method.INCEPTION, backend)
    scda = None
    rows = []
    for method in methods:
        method = Method(method)
        for size in sizes:
            if method is Method.TIME:
                sb = summarize_time(len(frames), size)
            else:
                if method is Method.SCDA:
                    if scda is None:
                        scda = compute_descriptors(frames, Method.SCDA, backend)
                    descriptors = scda
                else:
                    descriptors = descriptors_from_latents(latents, method)
                sb = storyboard_from_descriptors(descriptors, method, size, lam, seed)
            key = [latents[k] for k in sb.key_frames]
            rows.append((method.value, size, evaluate_storyboard(latents, key)))
    return rows


@dataclass
class BenchSpec:
    n_frames: int = 100
    methods: tuple[Method, ...] = ALL_METHODS
    sizes: tuple[int, ...] = (2, 4, 8, 16)
    backend: str = "mock"
    repetitions: int = 1
    model_path: str | None = None
    features: np.ndarray | None = field(default=None, repr=False)
    dim: int = 2048
    conv_shape: tuple[int, int, int] | None = None
    lam: float = 0.0

    def __post_init__(self):
        self.methods = tuple(Method(m) for m in self.methods)
        if self.backend not in ("mock", "model"):
            raise ValueError(f"backend must be 'mock' or 'model', got {self.backend!r}")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if any(s > self.n_frames for s in self.sizes):
            raise ValueError("storyboard sizes cannot exceed n_frames")
        if self.backend == "model" and not self.model_path:
            raise ValueError("the model backend needs model_path")

    def make_backend(self) -> FeatureBackend:
        if self.backend == "model":
            return OnnxModel(self.model_path)
        features = self.features
        if features is None:
            features = two_mode_features(self.n_frames, self.dim)
        return MockBackend.from_array(features, self.conv_shape)

    def make_stream(self):
        if self.backend == "model":
            return solid_stream(self.n_frames)
        return black_stream(self.n_frames)


def run_fid_curve(spec: BenchSpec) -> list[tuple[str, int, int, float]]:
    """Rows of (method, size, repetition, fid); repetitions must agree exactly."""
    backend = spec.make_backend()
    stream = spec.make_stream()
    rows = []
    first = None
    for rep in range(spec.repetitions):
        cells = eval_rows(stream, spec.methods, spec.sizes, backend, spec.lam)
        if first is None:
            first = cells
        elif cells != first:
            log.warning("repetition %d differs from the first run", rep)
        rows.extend((m, s, rep, f) for m, s, f in cells)
    return rows


def write_fid_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["method", "storyboard_size", "repetition", "fid"])
        for method, size, rep, value in rows:
            writer.writerow([method, size, rep, f"{value:.10g}"])


def run_timing(spec: BenchSpec, n_clusters: int = 16, render: bool = True) -> list[RunReport]:
    """Wall-clock per stage for each method over ``spec.n_frames`` frames."""
    backend = spec.make_backend()
    stream = spec.make_stream()
    reports = []
    for method in spec.methods:
        for _ in range(spec.repetitions):
            cfg = SummarizerConfig(method=method, n_clusters=n_clusters, lam=spec.lam,
                                   mock_features="<in-memory>" if spec.backend == "mock" else None,
                                   model_path=spec.model_path)
            report = RunReport(method.value)
            sb = summarize(stream, cfg, None if method is Method.TIME else backend, report)
            if render:
                with report.stage("render"):
                    keys = set(sb.key_frames)
                    frames = [f for f in stream if f.index in keys]
                    layout = plan_layout(sb.n_clusters, 64, 36)
                    render_storyboard(frames, sb.labels, sb.key_frames, layout)
            reports.append(report)
    return reports
