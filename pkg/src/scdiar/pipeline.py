"""End-to-end glue: embeddings -> spectral clustering -> turns -> scores."""

from __future__ import annotations

import bisect
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, TypeVar

from .clustering import SpectralConfig, cluster_embeddings
from .errors import UsageError, ValidationError
from .scoring import COLLAR, RHO, CderReport, DerReport, cder, der
from .simulate import SimConfig, gen_corpus, gen_embeddings
from .timeline import SubSegment, Timeline, labels_to_turns
from .types import EmbeddingSet, Turn

T = TypeVar("T")
R = TypeVar("R")


def ordered_map(fn: Callable[[T], R], items: Iterable[T], workers: int = 1) -> list[R]:
    """``map`` over a thread pool; results keep input order whatever the pool size."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def attach_regions(emb: EmbeddingSet, regions: Timeline | None = None) -> list[SubSegment]:
    """Wrap one recording's embedding intervals as sub-segments of ``regions``.

    Without regions, the union of the embedding intervals is used.
    """
    if regions is None:
        regions = Timeline(emb.intervals)
    starts = [iv.start for iv in regions]
    out = []
    for rec, iv in zip(emb.recording_ids, emb.intervals):
        k = bisect.bisect_right(starts, iv.start) - 1
        if k < 0 or not regions[k].contains(iv):
            raise ValidationError(f"embedding interval [{iv.start}, {iv.end}] of {rec} lies outside the speech regions")
        out.append(SubSegment(rec, iv, k))
    return out


def diarize_recording(emb: EmbeddingSet, config: SpectralConfig, regions: Timeline | None = None) -> list[Turn]:
    if len(emb) == 0:
        return []
    segs = attach_regions(emb, regions)
    labels = cluster_embeddings(emb, config)
    return labels_to_turns(segs, labels.labels.tolist())


def diarize(
    emb: EmbeddingSet,
    config: SpectralConfig,
    regions: dict[str, Timeline] | None = None,
    workers: int = 1,
) -> list[Turn]:
    recs = emb.recordings()

    def one(rec: str) -> list[Turn]:
        return diarize_recording(emb.select(rec), config, None if regions is None else regions.get(rec))

    return [t for turns in ordered_map(one, recs, workers) for t in turns]


@dataclass
class SweepPoint:
    duration: float
    der: DerReport
    cder: CderReport
    per_recording: list[tuple[str, DerReport, CderReport]] = field(default_factory=list)


def run_sweep(
    sim: SimConfig,
    durations: list[float],
    config: SpectralConfig = SpectralConfig(),
    collar: float = COLLAR,
    rho: float = RHO,
    workers: int = 1,
) -> list[SweepPoint]:
    """Cluster and score a simulated corpus at several sub-segment durations.

    Shift is a quarter of the duration, the 16 s / 4 s ratio.
    """
    if len(durations) < 2:
        raise UsageError("a sweep needs at least two durations")
    if any(d <= 0 for d in durations):
        raise UsageError("durations must be positive")
    corpus = gen_corpus(sim)
    points = []
    for dur in durations:
        shift = round(dur / 4, 3)

        def one(rec):
            emb = gen_embeddings(rec.turns, rec.speech, sim, dur, shift, rec.index)
            hyp = diarize_recording(emb, config, rec.speech)
            return rec.name, der(rec.turns, hyp, collar), cder(rec.turns, hyp, rho)

        rows = ordered_map(one, corpus, workers)
        total_der = DerReport(0.0, 0.0, 0.0, 0.0)
        total_cder = CderReport(0, 0, 0, 0)
        for _, d, c in rows:
            total_der = total_der + d
            total_cder = total_cder + c
        points.append(SweepPoint(dur, total_der, total_cder, rows))
    return points


def format_sweep(points: list[SweepPoint]) -> str:
    lines = [f"{'duration':>8} {'DER':>8} {'CDER':>8}"]
    for p in points:
        d = "nan" if p.der.der is None else f"{100 * p.der.der:.2f}"
        c = "nan" if p.cder.cder is None else f"{100 * p.cder.cder:.2f}"
        lines.append(f"{p.duration:>8.2f} {d:>8} {c:>8}")
    return "\n".join(lines) + "\n"
