"""Unsupervised video summarization into key-frame storyboards."""

from .clustering import Clustering, brute_force_kmedoids, kmedoids
from .evaluation import GaussianStats, evaluate_storyboard, fid, fit_gaussian, matrix_sqrt_psd
from .ingest import Frame, FrameStream, SourceKind, SourceSpec, open_source, sample_frames
from .metrics import DistanceMatrix, Metric, blended_matrix, distance_matrix, l2, wasserstein_1d
from .summarize import Method, Storyboard, SummarizerConfig, summarize, summarize_time

__version__ = "0.1.0"
