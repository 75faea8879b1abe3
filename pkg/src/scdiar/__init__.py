"""Spectral-clustering speaker diarization with post-processing, fusion and scoring."""

from .clustering import ClusterLabels, SpectralConfig, cosine_similarity, kmeans, spectral_cluster
from .errors import (
    ComputationError,
    ConfigurationError,
    DiarError,
    MetricUndefined,
    ParseError,
    UsageError,
    ValidationError,
)
from .rttm_io import RttmDocument, TrialScore, parse_embeddings, parse_rttm, parse_trials, write_rttm
from .timeline import SubSegment, Timeline, intersect, labels_to_turns, subsegment, subtract, to_timeline, total_duration
from .types import EmbeddingSet, Interval, Turn

__version__ = "0.1.0"
