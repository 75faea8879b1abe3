"""Core value types: turns, intervals and embedding sets."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError


def quantize(t: float) -> float:
    """Round a time to the millisecond grid used everywhere in the toolkit."""
    return round(float(t), 3)


def to_ms(t: float) -> int:
    return int(round(float(t) * 1000.0))


def _check_token(name: str, value: str) -> None:
    if not value or any(c.isspace() for c in value):
        raise ValidationError(f"{name} must be a non-empty token without whitespace, got {value!r}")


@dataclass(frozen=True)
class Turn:
    """One speaker-attributed utterance of a recording (an RTTM row)."""

    recording_id: str
    channel: str
    speaker: str
    onset: float
    duration: float

    def __post_init__(self):
        _check_token("recording_id", self.recording_id)
        _check_token("speaker", self.speaker)
        _check_token("channel", self.channel)
        if not (math.isfinite(self.onset) and math.isfinite(self.duration)):
            raise ValidationError("onset and duration must be finite")
        if self.onset < 0:
            raise ValidationError(f"onset must be >= 0, got {self.onset}")
        if self.duration <= 0:
            raise ValidationError(f"duration must be > 0, got {self.duration}")

    @classmethod
    def span(cls, recording_id: str, speaker: str, start: float, end: float, channel: str = "1") -> Turn:
        start, end = quantize(start), quantize(end)
        return cls(recording_id, channel, speaker, start, quantize(end - start))

    @property
    def end(self) -> float:
        return quantize(self.onset + self.duration)

    @property
    def sort_key(self):
        return (self.recording_id, self.onset, self.speaker, self.duration, self.channel)


@dataclass(frozen=True, order=True)
class Interval:
    """Half-open time span ``[start, end)`` in seconds."""

    start: float
    end: float

    def __post_init__(self):
        if not (math.isfinite(self.start) and math.isfinite(self.end)):
            raise ValidationError("interval bounds must be finite")
        if self.start < 0:
            raise ValidationError(f"interval start must be >= 0, got {self.start}")
        if self.end <= self.start:
            raise ValidationError(f"interval end must exceed start, got [{self.start}, {self.end}]")

    @property
    def duration(self) -> float:
        return self.end - self.start

    def contains(self, other: Interval) -> bool:
        return self.start <= other.start and other.end <= self.end


@dataclass
class EmbeddingSet:
    """Sub-segment embeddings: one row of ``vectors`` per (recording, interval)."""

    dim: int
    recording_ids: list[str] = field(default_factory=list)
    intervals: list[Interval] = field(default_factory=list)
    vectors: np.ndarray | None = None

    def __post_init__(self):
        if self.dim < 1:
            raise ValidationError(f"embedding dim must be positive, got {self.dim}")
        if self.vectors is None:
            self.vectors = np.zeros((0, self.dim))
        self.vectors = np.asarray(self.vectors, dtype=float).reshape(-1, self.dim)
        n = len(self.recording_ids)
        if len(self.intervals) != n or self.vectors.shape[0] != n:
            raise ValidationError("recording_ids, intervals and vectors must have equal length")
        if not np.all(np.isfinite(self.vectors)):
            raise ValidationError("embedding vectors contain NaN or Inf")

    def __len__(self) -> int:
        return len(self.recording_ids)

    def __eq__(self, other) -> bool:
        if not isinstance(other, EmbeddingSet):
            return NotImplemented
        return (
            self.dim == other.dim
            and self.recording_ids == other.recording_ids
            and self.intervals == other.intervals
            and np.array_equal(self.vectors, other.vectors)
        )

    def sorted(self) -> EmbeddingSet:
        order = sorted(range(len(self)), key=lambda i: (self.recording_ids[i], self.intervals[i].start, self.intervals[i].end))
        return EmbeddingSet(
            self.dim,
            [self.recording_ids[i] for i in order],
            [self.intervals[i] for i in order],
            self.vectors[order],
        )

    def recordings(self) -> list[str]:
        return sorted(set(self.recording_ids))

    def select(self, recording_id: str) -> EmbeddingSet:
        idx = [i for i, r in enumerate(self.recording_ids) if r == recording_id]
        return EmbeddingSet(
            self.dim,
            [self.recording_ids[i] for i in idx],
            [self.intervals[i] for i in idx],
            self.vectors[idx],
        )

    @classmethod
    def concat(cls, dim: int, parts: list[EmbeddingSet]) -> EmbeddingSet:
        if not parts:
            return cls(dim)
        return cls(
            dim,
            [r for p in parts for r in p.recording_ids],
            [iv for p in parts for iv in p.intervals],
            np.concatenate([p.vectors for p in parts], axis=0),
        )
