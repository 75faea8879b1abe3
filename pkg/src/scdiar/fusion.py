"""Rank-weighted fusion of several diarization outputs for one recording.

Hypotheses are first relabeled onto the speaker names of the top-ranked
system, then every atomic region between turn boundaries is decided by a
weighted vote. System ``r`` (1 = most trusted) weighs ``1/r``, normalized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import UsageError
from .scoring import optimal_mapping
from .types import Turn, to_ms


@dataclass
class RankedHypothesis:
    rank: int
    turns: list[Turn]


def _check_ranks(hyps: Sequence[RankedHypothesis]) -> None:
    ranks = sorted(h.rank for h in hyps)
    if ranks != list(range(1, len(hyps) + 1)):
        raise UsageError(f"ranks must be distinct and contiguous from 1, got {ranks}")


def _recording(hyps: Sequence[RankedHypothesis]) -> str | None:
    recs = {t.recording_id for h in hyps for t in h.turns}
    if len(recs) > 1:
        raise UsageError(f"hypotheses cover several recordings: {sorted(recs)}")
    return next(iter(recs), None)


def map_labels(hyps: Sequence[RankedHypothesis]) -> list[RankedHypothesis]:
    """Rename speakers of every lower-ranked system to its best rank-1 match."""
    if len(hyps) < 2:
        raise UsageError("fusion needs at least two hypotheses")
    _check_ranks(hyps)
    _recording(hyps)
    ordered = sorted(hyps, key=lambda h: h.rank)
    anchor = ordered[0]
    used = {t.speaker for t in anchor.turns}
    out = [RankedHypothesis(anchor.rank, list(anchor.turns))]
    for hyp in ordered[1:]:
        mapping = optimal_mapping(anchor.turns, hyp.turns)
        rename = mapping.hyp_to_ref
        for spk in mapping.unmapped_hyp:
            fresh = f"{spk}@{hyp.rank}"
            n = 1
            while fresh in used:
                fresh = f"{spk}@{hyp.rank}.{n}"
                n += 1
            rename[spk] = fresh
            used.add(fresh)
        turns = [Turn(t.recording_id, t.channel, rename[t.speaker], t.onset, t.duration) for t in hyp.turns]
        out.append(RankedHypothesis(hyp.rank, turns))
    return out


def rank_weights(n: int) -> list[Fraction]:
    raw = [Fraction(1, r) for r in range(1, n + 1)]
    total = sum(raw)
    return [w / total for w in raw]


def _round_half_up(x: Fraction) -> int:
    return math.floor(x + Fraction(1, 2))


def vote(hyps: Sequence[RankedHypothesis], channel: str | None = None) -> list[Turn]:
    """Weighted per-region vote over already relabeled hypotheses.

    Output turns take ``channel``, defaulting to that of the top-ranked system.
    """
    _check_ranks(hyps)
    rec = _recording(hyps)
    if rec is None:
        return []
    if channel is None:
        top = min(hyps, key=lambda h: h.rank)
        channel = top.turns[0].channel if top.turns else "1"
    weights = dict(zip(range(1, len(hyps) + 1), rank_weights(len(hyps))))

    # per system: speaker -> list of [start_ms, end_ms)
    spans = []
    points = set()
    for h in hyps:
        per_spk: dict[str, list[tuple[int, int]]] = {}
        for t in h.turns:
            lo, hi = to_ms(t.onset), to_ms(t.end)
            per_spk.setdefault(t.speaker, []).append((lo, hi))
            points.update((lo, hi))
        spans.append((weights[h.rank], per_spk))
    bounds = sorted(points)

    out: dict[str, list[list[int]]] = {}
    for lo, hi in zip(bounds, bounds[1:]):
        accrued: dict[str, Fraction] = {}
        expected = Fraction(0)
        for w, per_spk in spans:
            active = [s for s, segs in per_spk.items() if any(a <= lo and hi <= b for a, b in segs)]
            expected += w * len(active)
            for s in active:
                accrued[s] = accrued.get(s, Fraction(0)) + w
        m = _round_half_up(expected)
        if m == 0:
            continue
        winners = sorted(accrued, key=lambda s: (-accrued[s], s))[:m]
        for s in winners:
            segs = out.setdefault(s, [])
            if segs and segs[-1][1] == lo:
                segs[-1][1] = hi
            else:
                segs.append([lo, hi])

    turns = [
        Turn.span(rec, spk, lo / 1000.0, hi / 1000.0, channel)
        for spk, segs in out.items()
        for lo, hi in segs
    ]
    return sorted(turns, key=lambda t: t.sort_key)


def fuse(hypotheses: Sequence[Sequence[Turn]], channel: str | None = None) -> list[Turn]:
    """Fuse hypotheses given in rank order (first = most trusted)."""
    ranked = [RankedHypothesis(i + 1, list(h)) for i, h in enumerate(hypotheses)]
    return vote(map_labels(ranked), channel)
