"""Video frames in, storyboard (key frames + per-frame cluster labels) out."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from typing import Iterable, Sequence

from .clustering import kmedoids
from .errors import InvalidLambda, TooFewFrames
from .features import (
    FeatureBackend,
    LatentVector,
    MockBackend,
    OnnxModel,
    gaussian_summary,
    scda_descriptor,
)
from .ingest import Frame
from .metrics import Metric, blended_matrix, distance_matrix
from .report import RunReport

BATCH = 32


class Method(enum.Enum):
    TIME = "time"
    INCEPTION = "inception"
    UID = "uid"
    SCDA = "scda"


FEATURE_METRIC = {
    Method.INCEPTION: Metric.L2,
    Method.UID: Metric.UNIVARIATE_WASSERSTEIN,
    Method.SCDA: Metric.L2,
}


@dataclass
class SummarizerConfig:
    method: Method = Method.INCEPTION
    n_clusters: int = 16
    lam: float = 0.0
    sample_fps: float = 1.0
    model_path: str | None = None
    mock_features: str | None = None
    model_sha256: str | None = None
    seed: int | None = None

    def __post_init__(self):
        self.method = Method(self.method)
        if self.n_clusters < 1:
            raise ValueError("n_clusters must be >= 1")
        if not 0.0 <= self.lam <= 1.0:
            raise InvalidLambda(f"lambda must lie in [0, 1], got {self.lam}")
        if self.sample_fps <= 0:
            raise ValueError("sample_fps must be > 0")
        if self.method is not Method.TIME and not (self.model_path or self.mock_features):
            raise ValueError(f"method {self.method.value!r} needs a model path or mock features")


@dataclass(frozen=True)
class Storyboard:
    key_frames: tuple[int, ...]
    labels: tuple[int, ...]
    n_frames: int
    method: Method
    lam: float = 0.0

    @property
    def n_clusters(self) -> int:
        return len(self.key_frames)

    def to_dict(self) -> dict:
        return {
            "method": self.method.value,
            "n_frames": self.n_frames,
            "n_clusters": self.n_clusters,
            "lambda": self.lam,
            "key_frames": list(self.key_frames),
            "labels": list(self.labels),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "Storyboard":
        sb = cls(tuple(int(k) for k in d["key_frames"]), tuple(int(z) for z in d["labels"]),
                 int(d["n_frames"]), Method(d["method"]), float(d.get("lambda", 0.0)))
        if d.get("n_clusters", sb.n_clusters) != sb.n_clusters:
            raise ValueError("n_clusters disagrees with key_frames")
        return sb

    @classmethod
    def from_json(cls, text: str) -> "Storyboard":
        return cls.from_dict(json.loads(text))


def summarize_time(n_frames: int, n_clusters: int) -> Storyboard:
    """Split into equal temporal segments; each keeps its lower-median frame."""
    if n_clusters < 1:
        raise ValueError("n_clusters must be >= 1")
    if n_clusters > n_frames:
        raise TooFewFrames(f"{n_frames} frames cannot fill {n_clusters} clusters")
    labels = []
    key_frames = []
    for k in range(n_clusters):
        start = k * n_frames // n_clusters
        stop = (k + 1) * n_frames // n_clusters
        labels.extend([k] * (stop - start))
        key_frames.append(start + (stop - start - 1) // 2)
    return Storyboard(tuple(key_frames), tuple(labels), n_frames, Method.TIME, 0.0)


def make_backend(cfg: SummarizerConfig) -> FeatureBackend:
    if cfg.mock_features:
        return MockBackend(cfg.mock_features)
    return OnnxModel(cfg.model_path, expected_sha256=cfg.model_sha256)


def _batches(frames: Iterable[Frame], size: int = BATCH):
    batch = []
    for frame in frames:
        batch.append(frame)
        if len(batch) == size:
            yield batch
            batch = []
    if batch:
        yield batch


def compute_descriptors(frames: Iterable[Frame], method: Method, backend: FeatureBackend,
                        report: RunReport | None = None) -> list:
    """Descriptors for every frame, in stream order."""
    method = Method(method)
    out = []
    if report is not None:
        frames = report.timed_iter(frames, "decode")
    for batch in _batches(frames):
        if report is not None:
            with report.stage("extract"):
                out.extend(descriptors_for_batch(batch, method, backend))
        else:
            out.extend(descriptors_for_batch(batch, method, backend))
    return out


def descriptors_for_batch(batch: Sequence[Frame], method: Method, backend: FeatureBackend) -> list:
    if method is Method.INCEPTION:
        return backend.extract_latent(batch)
    if method is Method.UID:
        return [gaussian_summary(v) for v in backend.extract_latent(batch)]
    if method is Method.SCDA:
        return [scda_descriptor(m) for m in backend.extract_conv_map(batch)]
    raise ValueError(f"method {method} has no frame descriptors")


def descriptors_from_latents(latents: Sequence[LatentVector], method: Method) -> list:
    if method is Method.INCEPTION:
        return list(latents)
    if method is Method.UID:
        return [gaussian_summary(v) for v in latents]
    raise ValueError(f"{method} descriptors cannot be derived from latent vectors")


def storyboard_from_descriptors(descriptors: Sequence, method: Method, n_clusters: int,
                                lam: float = 0.0, seed: int | None = None,
                                report: RunReport | None = None) -> Storyboard:
    method = Method(method)
    n = len(descriptors)
    if n_clusters > n:
        raise TooFewFrames(f"{n} frames cannot fill {n_clusters} clusters")
    if report is None:
        report = RunReport(method.value)
    with report.stage("distance"):
        D = distance_matrix(descriptors, FEATURE_METRIC[method])
        if lam > 0:
            D = blended_matrix(D, lam)
    with report.stage("cluster"):
        result = kmedoids(D, n_clusters, seed=seed)
    # medoids are sorted, so cluster ids already follow key-frame order
    return Storyboard(result.medoids, tuple(int(z) for z in result.labels), n, method, float(lam))


def summarize_features(frames: Iterable[Frame], cfg: SummarizerConfig,
                       backend: FeatureBackend | None = None,
                       report: RunReport | None = None) -> Storyboard:
    if cfg.method is Method.TIME:
        raise ValueError("the time method uses summarize_time()")
    backend = backend or make_backend(cfg)
    descriptors = compute_descriptors(frames, cfg.method, backend, report)
    return storyboard_from_descriptors(descriptors, cfg.method, cfg.n_clusters, cfg.lam,
                                       cfg.seed, report)


def summarize(frames: Iterable[Frame], cfg: SummarizerConfig,
              backend: FeatureBackend | None = None,
              report: RunReport | None = None) -> Storyboard:
    if report is not None:
        report.method = cfg.method.value
        report.n_clusters = cfg.n_clusters
        report.lam = cfg.lam
    if cfg.method is Method.TIME:
        it = report.timed_iter(frames, "decode") if report is not None else frames
        n = sum(1 for _ in it)
        if report is not None:
            with report.stage("cluster"):
                sb = summarize_time(n, cfg.n_clusters)
        else:
            sb = summarize_time(n, cfg.n_clusters)
    else:
        sb = summarize_features(frames, cfg, backend, report)
    if report is not None:
        report.n_frames = sb.n_frames
    return sb


def check_storyboard(sb: Storyboard) -> None:
    """Raise AssertionError when a storyboard breaks its structural invariants."""
    assert len(sb.labels) == sb.n_frames
    assert list(sb.key_frames) == sorted(set(sb.key_frames))
    assert all(0 <= k < sb.n_frames for k in sb.key_frames)
    for cluster, k in enumerate(sb.key_frames):
        assert sb.labels[k] == cluster, f"key frame {k} not labelled {cluster}"
    if sb.n_frames >= sb.n_clusters:
        assert set(sb.labels) == set(range(sb.n_clusters))

