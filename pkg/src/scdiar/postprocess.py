"""Frame-probability tracks to speaker turns: median smoothing, thresholding,
and removal of short segments.

Track file format (one block per recording)::

    PROB <recording> <frame_shift_s> <n_speakers> [speaker names...]
    <p_spk0> <p_spk1> ...      # one line per frame
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ParseError, UsageError, ValidationError
from .types import Turn, quantize, to_ms

MEDIAN_WINDOW = 5
THRESHOLD = 0.9
MIN_DURATION = 0.1


@dataclass
class ProbabilityTrack:
    recording_id: str
    frame_shift: float
    speakers: list[str]
    probs: np.ndarray  # speakers x frames

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=float)
        if self.probs.ndim == 1 and len(self.speakers) == 1:
            self.probs = self.probs[None, :]
        if self.probs.ndim != 2 or self.probs.shape[0] != len(self.speakers):
            raise ValidationError(f"expected {len(self.speakers)} probability rows, got shape {self.probs.shape}")
        if not self.frame_shift > 0:
            raise ValidationError(f"frame_shift must be positive, got {self.frame_shift}")
        if self.probs.size and not (np.all(self.probs >= 0) and np.all(self.probs <= 1)):
            raise ValidationError("probabilities must lie in [0, 1]")

    @property
    def n_frames(self) -> int:
        return self.probs.shape[1]


def median_filter(track: ProbabilityTrack, window: int = MEDIAN_WINDOW) -> ProbabilityTrack:
    if window < 1 or window % 2 == 0:
        raise UsageError(f"median window must be a positive odd number, got {window}")
    if window == 1 or track.n_frames == 0:
        return ProbabilityTrack(track.recording_id, track.frame_shift, list(track.speakers), track.probs.copy())
    half = window // 2
    padded = np.pad(track.probs, ((0, 0), (half, half)), mode="edge")
    smoothed = np.median(sliding_window_view(padded, window, axis=1), axis=2)
    return ProbabilityTrack(track.recording_id, track.frame_shift, list(track.speakers), smoothed)


def binarize(track: ProbabilityTrack, threshold: float = THRESHOLD) -> np.ndarray:
    if not 0 < threshold < 1:
        raise UsageError(f"threshold must lie in (0, 1), got {threshold}")
    return track.probs >= threshold


def _runs(mask: np.ndarray) -> list[tuple[int, int]]:
    """Maximal runs of True as (first_frame, last_frame + 1)."""
    padded = np.concatenate(([False], np.asarray(mask, dtype=bool), [False]))
    edges = np.flatnonzero(np.diff(padded.astype(np.int8)))
    return list(zip(edges[::2].tolist(), edges[1::2].tolist()))


def masks_to_turns(
    masks: np.ndarray,
    frame_shift: float,
    min_duration: float = MIN_DURATION,
    recording_id: str = "rec",
    speakers: list[str] | None = None,
    channel: str = "1",
) -> list[Turn]:
    """Runs of active frames become turns; runs shorter than ``min_duration`` are dropped."""
    if min_duration < 0:
        raise UsageError(f"min_duration must be >= 0, got {min_duration}")
    masks = np.atleast_2d(np.asarray(masks, dtype=bool))
    if speakers is None:
        speakers = [f"spk{i}" for i in range(masks.shape[0])]
    min_ms = to_ms(min_duration)
    turns = []
    for spk, row in zip(speakers, masks):
        for first, stop in _runs(row):
            onset, end = quantize(first * frame_shift), quantize(stop * frame_shift)
            if to_ms(end) - to_ms(onset) < min_ms or end <= onset:
                continue
            turns.append(Turn.span(recording_id, spk, onset, end, channel))
    return sorted(turns, key=lambda t: t.sort_key)


def postprocess(
    track: ProbabilityTrack,
    window: int = MEDIAN_WINDOW,
    threshold: float = THRESHOLD,
    min_duration: float = MIN_DURATION,
) -> list[Turn]:
    smoothed = median_filter(track, window)
    masks = binarize(smoothed, threshold)
    return masks_to_turns(masks, track.frame_shift, min_duration, track.recording_id, track.speakers)


def rasterize(turns: list[Turn], frame_shift: float, n_frames: int, speakers: list[str]) -> np.ndarray:
    """Boolean speakers x frames activity; frame f covers [f*shift, (f+1)*shift)."""
    out = np.zeros((len(speakers), n_frames), dtype=bool)
    index = {s: i for i, s in enumerate(speakers)}
    for t in turns:
        lo = int(round(t.onset / frame_shift))
        hi = int(round(t.end / frame_shift))
        out[index[t.speaker], max(lo, 0):min(hi, n_frames)] = True
    return out


def parse_probs(data: str | bytes, source: str | None = None) -> list[ProbabilityTrack]:
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    tracks = []
    header = None
    rows: list[list[float]] = []

    def flush():
        if header is not None:
            rec, shift, names, lineno = header
            probs = np.array(rows, dtype=float).reshape(len(rows), len(names)).T
            try:
                tracks.append(ProbabilityTrack(rec, shift, names, probs))
            except ValidationError as exc:
                raise ValidationError(str(exc), lineno, source) from None

    for lineno, line in enumerate(text.splitlines(), start=1):
        fields = line.split()
        if not fields:
            continue
        if fields[0] == "PROB":
            flush()
            rows = []
            if len(fields) < 4:
                raise ParseError("expected 'PROB <recording> <frame_shift> <n_speakers> [names...]'", lineno, source)
            try:
                shift, n = float(fields[2]), int(fields[3])
            except ValueError:
                raise ParseError("non-numeric frame shift or speaker count", lineno, source) from None
            if n < 1 or not math.isfinite(shift):
                raise ParseError("speaker count must be >= 1 and frame shift finite", lineno, source)
            names = fields[4:] or [f"spk{i}" for i in range(n)]
            if len(names) != n:
                raise ParseError(f"header names {len(names)} speakers but declares {n}", lineno, source)
            header = (fields[1], shift, names, lineno)
            continue
        if header is None:
            raise ParseError("frame row before any PROB header", lineno, source)
        if len(fields) != len(header[2]):
            raise ParseError(f"expected {len(header[2])} probabilities, got {len(fields)}", lineno, source)
        try:
            row = [float(f) for f in fields]
        except ValueError:
            raise ParseError("non-numeric probability", lineno, source) from None
        if not all(math.isfinite(v) for v in row):
            raise ParseError("non-finite probability", lineno, source)
        rows.append(row)
    flush()
    return tracks


def write_probs(tracks: list[ProbabilityTrack]) -> str:
    out = []
    for tr in tracks:
        out.append(f"PROB {tr.recording_id} {tr.frame_shift!r} {len(tr.speakers)} {' '.join(tr.speakers)}\n")
        for frame in tr.probs.T:
            out.append(" ".join(f"{v:.4f}" for v in frame) + "\n")
    return "".join(out)
