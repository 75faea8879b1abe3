"""Readers and writers for RTTM, ``EMB`` embedding files and trial score lists.

RTTM rows look like::

    SPEAKER rec1 1 0.500 1.200 <NA> <NA> spkA <NA> <NA>

Only fields 2, 3, 4, 5 and 8 carry information; the rest are written as
``<NA>`` and ignored when read. Times are quantized to milliseconds on
ingestion so that writing and re-reading a document is the identity.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .errors import ParseError, ValidationError
from .types import EmbeddingSet, Interval, Turn, quantize

TARGET = "target"
NONTARGET = "nontarget"


@dataclass
class RttmDocument:
    turns: list[Turn] = field(default_factory=list)

    def __post_init__(self):
        self.turns = sorted(self.turns, key=lambda t: t.sort_key)

    def __len__(self) -> int:
        return len(self.turns)

    def recordings(self) -> list[str]:
        return sorted({t.recording_id for t in self.turns})

    def by_recording(self) -> dict[str, list[Turn]]:
        groups: dict[str, list[Turn]] = defaultdict(list)
        for t in self.turns:
            groups[t.recording_id].append(t)
        return dict(sorted(groups.items()))

    def select(self, recording_id: str) -> list[Turn]:
        return [t for t in self.turns if t.recording_id == recording_id]


@dataclass(frozen=True)
class TrialScore:
    label: str
    score: float

    def __post_init__(self):
        if self.label not in (TARGET, NONTARGET):
            raise ValidationError(f"trial label must be 'target' or 'nontarget', got {self.label!r}")
        if not math.isfinite(self.score):
            raise ValidationError(f"trial score must be finite, got {self.score}")

    @property
    def is_target(self) -> bool:
        return self.label == TARGET


def _text(data: str | bytes) -> str:
    if isinstance(data, bytes):
        return data.decode("utf-8")
    return data


def _float(token: str, what: str, lineno: int, source: str | None) -> float:
    # float() also accepts "nan", "inf" and "1_0"; reject anything non-finite
    try:
        value = float(token)
    except ValueError:
        raise ParseError(f"non-numeric {what} {token!r}", lineno, source) from None
    if not math.isfinite(value) or "_" in token:
        raise ParseError(f"non-numeric {what} {token!r}", lineno, source)
    return value


def parse_rttm(data: str | bytes, source: str | None = None) -> RttmDocument:
    turns = []
    for lineno, line in enumerate(_text(data).splitlines(), start=1):
        fields = line.split()
        if not fields:
            continue
        if len(fields) != 10:
            raise ParseError(f"expected 10 fields, got {len(fields)}", lineno, source)
        if fields[0] != "SPEAKER":
            raise ParseError(f"expected record type SPEAKER, got {fields[0]!r}", lineno, source)
        onset = quantize(_float(fields[3], "onset", lineno, source))
        duration = quantize(_float(fields[4], "duration", lineno, source))
        try:
            turns.append(Turn(fields[1], fields[2], fields[7], onset, duration))
        except ValidationError as exc:
            raise ValidationError(str(exc), lineno, source) from None
    return RttmDocument(turns)


def format_turn(turn: Turn) -> str:
    return (
        f"SPEAKER {turn.recording_id} {turn.channel} {turn.onset:.3f} {turn.duration:.3f} "
        f"<NA> <NA> {turn.speaker} <NA> <NA>\n"
    )


def write_rttm(doc: RttmDocument | Iterable[Turn]) -> str:
    turns = doc.turns if isinstance(doc, RttmDocument) else sorted(doc, key=lambda t: t.sort_key)
    return "".join(format_turn(t) for t in turns)


def parse_embeddings(data: str | bytes, source: str | None = None) -> EmbeddingSet:
    lines = _text(data).splitlines()
    header_no = next((i for i, line in enumerate(lines) if line.strip()), None)
    if header_no is None:
        raise ParseError("missing 'EMB <dim>' header", 1, source)
    header = lines[header_no].split()
    if len(header) != 2 or header[0] != "EMB" or not header[1].isdigit() or int(header[1]) < 1:
        raise ParseError("expected header 'EMB <dim>'", header_no + 1, source)
    dim = int(header[1])

    recs, intervals, rows = [], [], []
    for lineno, line in enumerate(lines[header_no + 1:], start=header_no + 2):
        fields = line.split()
        if not fields:
            continue
        if len(fields) != 3 + dim:
            raise ParseError(f"expected {dim} vector components, got {len(fields) - 3}", lineno, source)
        start = quantize(_float(fields[1], "start", lineno, source))
        end = quantize(_float(fields[2], "end", lineno, source))
        try:
            intervals.append(Interval(start, end))
        except ValidationError as exc:
            raise ValidationError(str(exc), lineno, source) from None
        recs.append(fields[0])
        rows.append([_float(tok, "vector component", lineno, source) for tok in fields[3:]])
    vectors = np.array(rows, dtype=float).reshape(len(rows), dim)
    return EmbeddingSet(dim, recs, intervals, vectors).sorted()


def write_embeddings(emb: EmbeddingSet) -> str:
    out = [f"EMB {emb.dim}\n"]
    for rec, iv, vec in zip(emb.recording_ids, emb.intervals, emb.vectors):
        values = " ".join(repr(float(v)) for v in vec)
        out.append(f"{rec} {iv.start:.3f} {iv.end:.3f} {values}\n")
    return "".join(out)


def parse_trials(data: str | bytes, source: str | None = None) -> list[TrialScore]:
    trials = []
    for lineno, line in enumerate(_text(data).splitlines(), start=1):
        fields = line.split()
        if not fields:
            continue
        if len(fields) != 2:
            raise ParseError(f"expected '<target|nontarget> <score>', got {len(fields)} fields", lineno, source)
        label, score = fields
        if label not in (TARGET, NONTARGET):
            raise ParseError(f"unknown trial label {label!r}", lineno, source)
        trials.append(TrialScore(label, _float(score, "score", lineno, source)))
    return trials


def write_trials(trials: Iterable[TrialScore]) -> str:
    return "".join(f"{t.label} {t.score!r}\n" for t in trials)


def read_file(path: str, parser, **kwargs):
    """Read ``path`` and run ``parser``; I/O failures surface as ParseError."""
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read file: {exc.strerror}", None, path) from None
    try:
        return parser(data, source=path, **kwargs)
    except UnicodeDecodeError:
        raise ParseError("file is not valid UTF-8", None, path) from None
