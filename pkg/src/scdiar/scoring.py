"""Evaluation metrics: speaker mapping, DER, CDER, VAD rates, EER and minDCF.

Time-based metrics work on integer milliseconds so that every component is
exact on the toolkit's millisecond grid.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import UsageError
from .rttm_io import RttmDocument, TrialScore
from .timeline import Timeline, intersect, subtract, total_duration
from .types import Interval, Turn, to_ms

log = logging.getLogger(__name__)

COLLAR = 0.25
RHO = 0.5
P_TARGET = 0.01
C_FA = 1.0
C_MISS = 1.0


# --------------------------------------------------------------------------
# helpers


def speaker_timelines(turns: Iterable[Turn]) -> dict[str, Timeline]:
    """Per-speaker union of activity, in integer milliseconds."""
    spans: dict[str, list[tuple[int, int]]] = {}
    for t in turns:
        lo, hi = to_ms(t.onset), to_ms(t.end)
        if hi > lo:
            spans.setdefault(t.speaker, []).append((lo, hi))
    return {spk: Timeline(v) for spk, v in sorted(spans.items())}


def _ms_timeline(tl: Timeline) -> Timeline:
    return Timeline((to_ms(iv.start), to_ms(iv.end)) for iv in tl if to_ms(iv.end) > to_ms(iv.start))


def _overlap(a: Timeline, b: Timeline) -> int:
    return int(total_duration(intersect(a, b)))


def _check_single_recording(*groups: Sequence[Turn]) -> None:
    recs = {t.recording_id for g in groups for t in g}
    if len(recs) > 1:
        raise UsageError(f"turns span several recordings: {sorted(recs)}")


# --------------------------------------------------------------------------
# speaker mapping


@dataclass
class SpeakerMapping:
    pairs: list[tuple[str, str]] = field(default_factory=list)
    unmapped_ref: list[str] = field(default_factory=list)
    unmapped_hyp: list[str] = field(default_factory=list)
    total_overlap: float = 0.0  # seconds

    @property
    def ref_to_hyp(self) -> dict[str, str]:
        return dict(self.pairs)

    @property
    def hyp_to_ref(self) -> dict[str, str]:
        return {h: r for r, h in self.pairs}


def assign_max(weights: np.ndarray) -> list[tuple[int, int]]:
    """Maximum-weight one-to-one assignment with a lexicographic tie-break.

    Among all optimal assignments, row 0 takes the lowest column it can
    (or none, last), then row 1, and so on. ``weights`` must hold
    non-negative integers so optimality checks are exact.
    """
    w = np.asarray(weights, dtype=float)
    nr, nc = w.shape if w.ndim == 2 else (0, 0)
    if nr == 0 or nc == 0:
        return []

    def best(rows: list[int], cols: list[int]) -> float:
        if not rows or not cols:
            return 0.0
        sub = w[np.ix_(rows, cols)]
        r, c = linear_sum_assignment(sub, maximize=True)
        return float(sub[r, c].sum())

    target = best(list(range(nr)), list(range(nc)))
    fixed: list[tuple[int, int]] = []
    fixed_total = 0.0
    free_cols = list(range(nc))
    for i in range(nr):
        rest_rows = list(range(i + 1, nr))
        chosen = None
        for j in free_cols:
            cols = [c for c in free_cols if c != j]
            if fixed_total + w[i, j] + best(rest_rows, cols) == target:
                chosen = j
                break
        if chosen is None:
            continue  # row i stays unassigned
        fixed.append((i, chosen))
        fixed_total += w[i, chosen]
        free_cols.remove(chosen)
    return fixed


def overlap_matrix(ref: Sequence[Turn], hyp: Sequence[Turn]) -> tuple[list[str], list[str], np.ndarray]:
    rt, ht = speaker_timelines(ref), speaker_timelines(hyp)
    rs, hs = list(rt), list(ht)
    m = np.zeros((len(rs), len(hs)), dtype=np.int64)
    for i, r in enumerate(rs):
        for j, h in enumerate(hs):
            m[i, j] = _overlap(rt[r], ht[h])
    return rs, hs, m


def optimal_mapping(
    ref: Sequence[Turn],
    hyp: Sequence[Turn],
    secondary: Callable[[list[str], list[str]], np.ndarray] | None = None,
) -> SpeakerMapping:
    """One-to-one reference/hypothesis speaker pairing maximizing overlapped time.

    ``secondary(ref_ids, hyp_ids)`` may return a non-negative integer matrix
    that decides between mappings with equal overlap; the remaining ties go
    to the lexicographically first pairing. Pairs with zero overlap are left
    unmapped.
    """
    _check_single_recording(ref, hyp)
    rs, hs, m = overlap_matrix(ref, hyp)
    weights = m
    if secondary is not None and m.size:
        extra = np.asarray(secondary(rs, hs), dtype=np.int64)
        scale = int(extra.sum()) + 1
        # composite weights must stay exactly representable as floats
        if (int(m.max()) + 1) * scale * min(m.shape) < 2**53:
            weights = m * scale + extra
        else:
            log.warning("secondary mapping criterion skipped: weights too large for exact ties")
    pairs = [(rs[i], hs[j]) for i, j in assign_max(weights) if m[i, j] > 0]
    mapped_r = {r for r, _ in pairs}
    mapped_h = {h for _, h in pairs}
    total = sum(int(m[rs.index(r), hs.index(h)]) for r, h in pairs)
    return SpeakerMapping(
        pairs,
        [r for r in rs if r not in mapped_r],
        [h for h in hs if h not in mapped_h],
        total / 1000.0,
    )


# --------------------------------------------------------------------------
# DER


@dataclass
class DerReport:
    miss: float
    false_alarm: float
    confusion: float
    scored_speech: float

    @property
    def der(self) -> float | None:
        if self.scored_speech <= 0:
            return None
        return (self.miss + self.false_alarm + self.confusion) / self.scored_speech

    @property
    def defined(self) -> bool:
        return self.der is not None

    def __add__(self, other: DerReport) -> DerReport:
        return DerReport(
            round(self.miss + other.miss, 3),
            round(self.false_alarm + other.false_alarm, 3),
            round(self.confusion + other.confusion, 3),
            round(self.scored_speech + other.scored_speech, 3),
        )


def _no_score_zone(ref_tl: dict[str, Timeline], collar_ms: int, score_overlap: bool, cells: tuple) -> Timeline:
    zones = []
    if collar_ms > 0:
        for tl in ref_tl.values():
            for iv in tl:
                for b in (iv.start, iv.end):
                    zones.append((max(0, b - collar_ms), b + collar_ms))
    if not score_overlap:
        bounds, ref_count = cells
        for k in np.flatnonzero(ref_count >= 2):
            zones.append((int(bounds[k]), int(bounds[k + 1])))
    return Timeline(zones)


def _activity(tls: dict[str, Timeline], bounds: np.ndarray) -> np.ndarray:
    act = np.zeros((len(tls), max(len(bounds) - 1, 0)), dtype=bool)
    for i, tl in enumerate(tls.values()):
        for iv in tl:
            lo = np.searchsorted(bounds, iv.start)
            hi = np.searchsorted(bounds, iv.end)
            act[i, lo:hi] = True
    return act


def der(ref: Sequence[Turn], hyp: Sequence[Turn], collar: float = COLLAR, score_overlap: bool = True) -> DerReport:
    """Diarization error rate with a no-score collar around reference boundaries.

    Among speaker mappings with equal total overlap, the one with the most
    correctly attributed scored time is used, so the result does not depend
    on speaker names.
    """
    if collar < 0:
        raise UsageError(f"collar must be >= 0, got {collar}")
    _check_single_recording(ref, hyp)
    ref_tl, hyp_tl = speaker_timelines(ref), speaker_timelines(hyp)
    collar_ms = to_ms(collar)

    points = {0}
    for tl in (*ref_tl.values(), *hyp_tl.values()):
        for iv in tl:
            points.update((iv.start, iv.end))
    bounds = np.array(sorted(points), dtype=np.int64)
    if len(bounds) < 2:
        return DerReport(0.0, 0.0, 0.0, 0.0)
    ref_act = _activity(ref_tl, bounds)
    ref_count = ref_act.sum(axis=0)

    excluded = _no_score_zone(ref_tl, collar_ms, score_overlap, (bounds, ref_count))
    points.update(int(v) for iv in excluded for v in (iv.start, iv.end))
    bounds = np.array(sorted(points), dtype=np.int64)
    dur = np.diff(bounds)
    ref_act = _activity(ref_tl, bounds)
    hyp_act = _activity(hyp_tl, bounds)
    scored = ~_activity({"x": excluded}, bounds)[0] if len(excluded) else np.ones(len(dur), dtype=bool)
    w = dur * scored

    # scored time each (ref, hyp) pair would get right; rows/cols in sorted-id order
    scored_overlap = (ref_act[:, None, :] & hyp_act[None, :, :]).astype(np.int64) @ w
    mapping = optimal_mapping(ref, hyp, secondary=lambda rs, hs: scored_overlap)

    n_ref = ref_act.sum(axis=0)
    n_hyp = hyp_act.sum(axis=0)
    rs, hs = list(ref_tl), list(hyp_tl)
    n_correct = np.zeros(len(dur), dtype=np.int64)
    for r, h in mapping.pairs:
        n_correct += ref_act[rs.index(r)] & hyp_act[hs.index(h)]

    miss = int((w * np.maximum(n_ref - n_hyp, 0)).sum())
    fa = int((w * np.maximum(n_hyp - n_ref, 0)).sum())
    conf = int((w * (np.minimum(n_ref, n_hyp) - n_correct)).sum())
    speech = int((w * n_ref).sum())
    return DerReport(miss / 1000.0, fa / 1000.0, conf / 1000.0, speech / 1000.0)


# --------------------------------------------------------------------------
# CDER


@dataclass
class CderReport:
    miss_utts: int
    fa_utts: int
    conf_utts: int
    ref_utts: int

    @property
    def cder(self) -> float | None:
        if self.ref_utts <= 0:
            return None
        return (self.miss_utts + self.fa_utts + self.conf_utts) / self.ref_utts

    @property
    def defined(self) -> bool:
        return self.cder is not None

    def __add__(self, other: CderReport) -> CderReport:
        return CderReport(
            self.miss_utts + other.miss_utts,
            self.fa_utts + other.fa_utts,
            self.conf_utts + other.conf_utts,
            self.ref_utts + other.ref_utts,
        )


def cder(ref: Sequence[Turn], hyp: Sequence[Turn], rho: float = RHO) -> CderReport:
    """Utterance-level error rate: every reference and hypothesis utterance weighs one.

    A reference utterance is correct when its mapped hypothesis speaker covers
    at least ``rho`` of it, a confusion when another hypothesis speaker does,
    and a miss otherwise. A hypothesis utterance (same-speaker turns merged)
    is a false alarm when its mapped reference speaker covers less than
    ``rho`` of it. Among mappings with equal total overlap, the one with the
    most covered utterances is used.
    """
    if not 0 < rho <= 1:
        raise UsageError(f"rho must lie in (0, 1], got {rho}")
    _check_single_recording(ref, hyp)
    ref_tl, hyp_tl = speaker_timelines(ref), speaker_timelines(hyp)
    rs, hs = list(ref_tl), list(hyp_tl)

    # ref_cov[u][j]: hyp speaker j covers reference utterance u
    ref_utts = []
    for t in ref:
        lo, hi = to_ms(t.onset), to_ms(t.end)
        if hi > lo:
            utt = Timeline([(lo, hi)])
            ref_utts.append((t.speaker, [_overlap(utt, hyp_tl[h]) >= rho * (hi - lo) for h in hs]))
    # hyp_cov[(h, seg)][i]: ref speaker i covers that hypothesis utterance
    hyp_utts = []
    for h, tl in hyp_tl.items():
        for iv in tl:
            seg = Timeline([iv])
            hyp_utts.append((h, [_overlap(seg, ref_tl[r]) >= rho * (iv.end - iv.start) for r in rs]))

    gain = np.zeros((len(rs), len(hs)), dtype=np.int64)
    for spk, cov in ref_utts:
        gain[rs.index(spk)] += np.array(cov, dtype=np.int64)
    for h, cov in hyp_utts:
        gain[:, hs.index(h)] += np.array(cov, dtype=np.int64)
    mapping = optimal_mapping(ref, hyp, secondary=lambda _rs, _hs: gain)
    r2h, h2r = mapping.ref_to_hyp, mapping.hyp_to_ref

    miss = conf = fa = 0
    for spk, cov in ref_utts:
        mapped = r2h.get(spk)
        if mapped is not None and cov[hs.index(mapped)]:
            continue
        if any(cov):
            conf += 1
        else:
            miss += 1
    for h, cov in hyp_utts:
        mapped = h2r.get(h)
        if mapped is None or not cov[rs.index(mapped)]:
            fa += 1
    return CderReport(miss, fa, conf, len(ref_utts))


# --------------------------------------------------------------------------
# VAD


@dataclass
class VadReport:
    """Speech-detection errors, kept as durations (seconds) so reports can be pooled."""

    missed: float
    false_alarm: float
    speech: float
    total: float

    @property
    def nonspeech(self) -> float:
        return self.total - self.speech

    @property
    def miss(self) -> float | None:
        return self.missed / self.speech if self.speech > 0 else None

    @property
    def fa(self) -> float | None:
        return self.false_alarm / self.nonspeech if self.nonspeech > 0 else None

    @property
    def acc(self) -> float | None:
        return (self.total - self.missed - self.false_alarm) / self.total if self.total > 0 else None

    def __add__(self, other: VadReport) -> VadReport:
        return VadReport(
            round(self.missed + other.missed, 3),
            round(self.false_alarm + other.false_alarm, 3),
            round(self.speech + other.speech, 3),
            round(self.total + other.total, 3),
        )


def vad_metrics(ref_speech: Timeline, hyp_speech: Timeline, total: Interval) -> VadReport:
    """Speech/non-speech error rates over ``total``; a rate is None when its denominator is empty."""
    whole = Timeline([(to_ms(total.start), to_ms(total.end))])
    ref = intersect(_ms_timeline(ref_speech), whole)
    hyp = intersect(_ms_timeline(hyp_speech), whole)
    missed = total_duration(subtract(ref, hyp))
    false = total_duration(subtract(hyp, ref))
    return VadReport(missed / 1000.0, false / 1000.0, total_duration(ref) / 1000.0, total_duration(whole) / 1000.0)


def score_vad(ref: RttmDocument, hyp: RttmDocument, total: float | None = None) -> list[tuple[str, VadReport]]:
    """Per-recording VAD rates; the scored span is ``[0, total)`` or ends at the last turn."""
    rows = []
    for rec, r, h in _pair_documents(ref, hyp):
        end = total if total is not None else max(t.end for t in [*r, *h])
        ref_tl = Timeline((t.onset, t.end) for t in r)
        hyp_tl = Timeline((t.onset, t.end) for t in h)
        rows.append((rec, vad_metrics(ref_tl, hyp_tl, Interval(0.0, end))))
    pooled = VadReport(0.0, 0.0, 0.0, 0.0)
    for _, rep in rows:
        pooled = pooled + rep
    return rows + [("ALL", pooled)]


# --------------------------------------------------------------------------
# detection metrics


@dataclass
class DetReport:
    eer: float
    min_dcf: float
    threshold_at_eer: float
    raw_eer: float
    thresholds: np.ndarray = field(repr=False, default=None)
    p_miss: np.ndarray = field(repr=False, default=None)
    p_fa: np.ndarray = field(repr=False, default=None)


def det_curve(trials: Sequence[TrialScore]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Miss and false-alarm rates at every distinct score, plus one point above the maximum.

    At threshold ``t`` a target is missed when its score is below ``t`` and a
    nontarget is accepted when its score is at least ``t``.
    """
    tgt = np.sort([t.score for t in trials if t.is_target])
    non = np.sort([t.score for t in trials if not t.is_target])
    if len(tgt) == 0 or len(non) == 0:
        raise UsageError("need at least one target and one nontarget trial")
    distinct = np.unique(np.concatenate([tgt, non]))
    thresholds = np.append(distinct, np.nextafter(distinct[-1], np.inf))
    p_miss = np.searchsorted(tgt, thresholds, side="left") / len(tgt)
    p_fa = 1.0 - np.searchsorted(non, thresholds, side="left") / len(non)
    return thresholds, p_miss, p_fa


def det_metrics(
    trials: Sequence[TrialScore],
    p_target: float = P_TARGET,
    c_fa: float = C_FA,
    c_miss: float = C_MISS,
) -> DetReport:
    if not 0 < p_target < 1:
        raise UsageError(f"p_target must lie in (0, 1), got {p_target}")
    thresholds, p_miss, p_fa = det_curve(trials)

    # p_miss - p_fa is non-decreasing in the threshold, starts <= 0, ends at 1
    diff = p_miss - p_fa
    i = int(np.argmax(diff >= 0))
    if diff[i] == 0 or i == 0:
        raw, thr = float(p_miss[i]), float(thresholds[i])
    else:
        dm = p_miss[i] - p_miss[i - 1]
        df = p_fa[i] - p_fa[i - 1]
        s = (p_fa[i - 1] - p_miss[i - 1]) / (dm - df)
        raw = float(p_miss[i - 1] + s * dm)
        thr = float(thresholds[i - 1] + s * (thresholds[i] - thresholds[i - 1]))

    dcf = c_miss * p_miss * p_target + c_fa * p_fa * (1 - p_target)
    return DetReport(
        eer=min(raw, 0.5),
        min_dcf=float(dcf.min()),
        threshold_at_eer=thr,
        raw_eer=raw,
        thresholds=thresholds,
        p_miss=p_miss,
        p_fa=p_fa,
    )


def dcf_at(trials: Sequence[TrialScore], threshold: float, p_target: float = P_TARGET, c_fa: float = C_FA, c_miss: float = C_MISS) -> float:
    tgt = [t.score for t in trials if t.is_target]
    non = [t.score for t in trials if not t.is_target]
    pm = sum(s < threshold for s in tgt) / len(tgt)
    pf = sum(s >= threshold for s in non) / len(non)
    return c_miss * pm * p_target + c_fa * pf * (1 - p_target)


# --------------------------------------------------------------------------
# corpus-level scoring and report lines


def _pair_documents(ref: RttmDocument, hyp: RttmDocument) -> list[tuple[str, list[Turn], list[Turn]]]:
    rr, hh = ref.by_recording(), hyp.by_recording()
    for rec in sorted(set(hh) - set(rr)):
        log.warning("recording %s appears in the hypothesis but not in the reference", rec)
    for rec in sorted(set(rr) - set(hh)):
        log.warning("recording %s has no hypothesis turns", rec)
    return [(rec, rr.get(rec, []), hh.get(rec, [])) for rec in sorted(set(rr) | set(hh))]


def score_der(ref: RttmDocument, hyp: RttmDocument, collar: float = COLLAR, score_overlap: bool = True) -> list[tuple[str, DerReport]]:
    rows = [(rec, der(r, h, collar, score_overlap)) for rec, r, h in _pair_documents(ref, hyp)]
    total = DerReport(0.0, 0.0, 0.0, 0.0)
    for _, rep in rows:
        total = total + rep
    return rows + [("ALL", total)]


def score_cder(ref: RttmDocument, hyp: RttmDocument, rho: float = RHO) -> list[tuple[str, CderReport]]:
    rows = [(rec, cder(r, h, rho)) for rec, r, h in _pair_documents(ref, hyp)]
    total = CderReport(0, 0, 0, 0)
    for _, rep in rows:
        total = total + rep
    return rows + [("ALL", total)]


def mean_cder(rows: list[tuple[str, CderReport]]) -> float | None:
    """Average of per-recording CDER values (recordings with undefined CDER skipped)."""
    vals = [rep.cder for rec, rep in rows if rec != "ALL" and rep.cder is not None]
    return sum(vals) / len(vals) if vals else None


def _ratio(x: float | None) -> str:
    return "nan" if x is None or (isinstance(x, float) and math.isnan(x)) else f"{x:.4f}"


def format_der(rec: str, rep: DerReport) -> str:
    return f"{rec} DER {rep.miss:.3f} {rep.false_alarm:.3f} {rep.confusion:.3f} {rep.scored_speech:.3f} {_ratio(rep.der)}"


def format_cder(rec: str, rep: CderReport) -> str:
    return f"{rec} CDER {rep.miss_utts} {rep.fa_utts} {rep.conf_utts} {rep.ref_utts} {_ratio(rep.cder)}"


def format_vad(rec: str, rep: VadReport) -> str:
    return f"{rec} VAD {_ratio(rep.fa)} {_ratio(rep.miss)} {_ratio(rep.acc)}"


def format_det(rep: DetReport) -> str:
    return f"ALL EER {rep.eer:.4f} {rep.raw_eer:.4f} {rep.threshold_at_eer:.6g} minDCF {rep.min_dcf:.4f}"
