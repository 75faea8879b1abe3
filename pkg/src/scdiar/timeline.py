"""Interval algebra over speech timelines, plus sub-segmentation.

All intervals are half-open, so ``[0, 1)`` and ``[1, 2)`` touch and merge.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Iterable, Sequence

from .errors import UsageError
from .types import Interval, Turn, quantize

_EPS = 1e-9


class Timeline:
    """Sorted, pairwise-disjoint, non-touching intervals."""

    __slots__ = ("intervals",)

    def __init__(self, intervals: Iterable[Interval | tuple[float, float]] = ()):
        items = sorted(iv if isinstance(iv, Interval) else Interval(*iv) for iv in intervals)
        merged: list[Interval] = []
        for iv in items:
            if merged and iv.start <= merged[-1].end:
                if iv.end > merged[-1].end:
                    merged[-1] = Interval(merged[-1].start, iv.end)
            else:
                merged.append(iv)
        self.intervals: tuple[Interval, ...] = tuple(merged)

    def __iter__(self):
        return iter(self.intervals)

    def __len__(self) -> int:
        return len(self.intervals)

    def __getitem__(self, i: int) -> Interval:
        return self.intervals[i]

    def __eq__(self, other) -> bool:
        if isinstance(other, Timeline):
            return self.intervals == other.intervals
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self.intervals)

    def __repr__(self) -> str:
        body = ", ".join(f"[{iv.start:g}, {iv.end:g}]" for iv in self.intervals)
        return f"Timeline({body})"

    def pairs(self) -> list[tuple[float, float]]:
        return [(iv.start, iv.end) for iv in self.intervals]

    @property
    def extent(self) -> Interval | None:
        if not self.intervals:
            return None
        return Interval(self.intervals[0].start, self.intervals[-1].end)

    def __or__(self, other: Timeline) -> Timeline:
        return union(self, other)

    def __and__(self, other: Timeline) -> Timeline:
        return intersect(self, other)

    def __sub__(self, other: Timeline) -> Timeline:
        return subtract(self, other)


def to_timeline(turns: Sequence[Turn]) -> Timeline:
    recordings = {t.recording_id for t in turns}
    if len(recordings) > 1:
        raise UsageError(f"turns span several recordings: {sorted(recordings)}")
    return Timeline((t.onset, t.end) for t in turns)


def union(a: Timeline, b: Timeline) -> Timeline:
    return Timeline(a.intervals + b.intervals)


def intersect(a: Timeline, b: Timeline) -> Timeline:
    out = []
    i = j = 0
    while i < len(a) and j < len(b):
        lo = max(a[i].start, b[j].start)
        hi = min(a[i].end, b[j].end)
        if lo < hi:
            out.append(Interval(lo, hi))
        if a[i].end < b[j].end:
            i += 1
        else:
            j += 1
    return Timeline(out)


def subtract(a: Timeline, b: Timeline) -> Timeline:
    out = []
    j = 0
    for iv in a:
        cur = iv.start
        while j < len(b) and b[j].end <= cur:
            j += 1
        k = j
        while k < len(b) and b[k].start < iv.end:
            if b[k].start > cur:
                out.append(Interval(cur, b[k].start))
            cur = max(cur, b[k].end)
            k += 1
        if cur < iv.end:
            out.append(Interval(cur, iv.end))
    return Timeline(out)


def total_duration(a: Timeline) -> float:
    return sum(iv.end - iv.start for iv in a)


@dataclass(frozen=True)
class SubSegment:
    recording_id: str
    interval: Interval
    parent_index: int

    @property
    def start(self) -> float:
        return self.interval.start

    @property
    def end(self) -> float:
        return self.interval.end


def subsegment(regions: Timeline, window: float, shift: float, recording_id: str = "rec") -> list[SubSegment]:
    """Cut every region into fixed-length windows.

    Regions no longer than ``window`` are kept whole. Longer regions get
    windows every ``shift`` seconds, plus one window aligned to the region
    end when the stride leaves a tail uncovered. Windows never cross a gap.
    """
    if window <= 0 or shift <= 0:
        raise UsageError(f"window and shift must be positive, got window={window}, shift={shift}")
    if shift > window + _EPS:
        raise UsageError(f"shift {shift} exceeds window {window}")
    out = []
    for idx, region in enumerate(regions):
        s, e = region.start, region.end
        if e - s <= window + _EPS:
            out.append(SubSegment(recording_id, region, idx))
            continue
        k = 0
        last_end = s
        while True:
            start = quantize(s + k * shift)
            end = quantize(start + window)
            if end > e + _EPS:
                break
            out.append(SubSegment(recording_id, Interval(start, end), idx))
            last_end = end
            k += 1
        if last_end < e:
            out.append(SubSegment(recording_id, Interval(quantize(e - window), e), idx))
    return out


def _speaker_name(label: Hashable) -> str:
    return label if isinstance(label, str) else f"spk{label}"


def labels_to_turns(subsegments: Sequence[SubSegment], labels: Sequence[Hashable], channel: str = "1") -> list[Turn]:
    """Turn labelled (possibly overlapping) sub-segments into speaker turns.

    Inside the overlap of two neighbouring windows the split point is the
    midpoint of the overlap. Runs of equal labels are merged.
    """
    if len(subsegments) != len(labels):
        raise UsageError(f"{len(subsegments)} sub-segments but {len(labels)} labels")

    groups: dict[tuple[str, int], list[tuple[SubSegment, Hashable]]] = {}
    for seg, lab in zip(subsegments, labels):
        groups.setdefault((seg.recording_id, seg.parent_index), []).append((seg, lab))

    turns = []
    for (rec, _), items in groups.items():
        items.sort(key=lambda x: (x[0].start, x[0].end))
        # boundary between item i and i+1
        cuts = []
        for (cur, _), (nxt, _) in zip(items, items[1:]):
            if nxt.start < cur.end:
                cuts.append(quantize((nxt.start + cur.end) / 2))
            else:
                cuts.append(nxt.start)
        region_start = items[0][0].start
        region_end = max(seg.end for seg, _ in items)
        bounds = [region_start, *cuts, region_end]

        spans: list[list] = []
        for i, (_, lab) in enumerate(items):
            lo, hi = bounds[i], bounds[i + 1]
            if hi <= lo:
                continue
            if spans and spans[-1][0] == lab:
                spans[-1][2] = hi
            else:
                spans.append([lab, lo, hi])
        turns.extend(Turn.span(rec, _speaker_name(lab), lo, hi, channel) for lab, lo, hi in spans)
    return sorted(turns, key=lambda t: t.sort_key)
