"""Deterministic synthetic two-party (or n-party) conversations and embeddings.

Random streams: every draw comes from ``numpy.random.Philox`` keyed by
``SeedSequence([seed, recording_index, stream]).generate_state(2, uint64)``.
Stream ids are fixed: 0 turn-taking, 1 speaker prototypes, 2 embedding
noise, 3 probability-track noise. A recording therefore depends only on
``(config, recording_index)`` and can be generated in any order.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass

import numpy as np

from .errors import ConfigurationError
from .postprocess import ProbabilityTrack, rasterize, write_probs
from .rttm_io import RttmDocument, write_embeddings, write_rttm
from .timeline import Timeline, subsegment, to_timeline
from .types import EmbeddingSet, Turn, quantize, to_ms

STREAM_TURNS = 0
STREAM_PROTOTYPES = 1
STREAM_NOISE = 2
STREAM_PROBS = 3

MIN_UTTERANCE = 0.3
MAX_UTTERANCE = 10.0
MAX_PROTOTYPE_COSINE = 0.3
MAX_PROTOTYPE_ATTEMPTS = 10_000


@dataclass(frozen=True)
class SimConfig:
    seed: int = 42
    n_recordings: int = 20
    n_speakers: int = 2
    embedding_dim: int = 32
    mean_utterance: float = 2.0
    mean_pause: float = 0.5
    overlap_probability: float = 0.0
    recording_length: float = 120.0
    noise_sigma: float = 0.05
    frame_shift: float = 0.01
    prob_noise: float = 0.0

    def __post_init__(self):
        checks = [
            (self.n_recordings >= 1, "n_recordings must be >= 1"),
            (self.n_speakers >= 1, "n_speakers must be >= 1"),
            (self.embedding_dim >= 1, "embedding_dim must be >= 1"),
            (self.mean_utterance > 0, "mean_utterance must be positive"),
            (self.mean_pause > 0, "mean_pause must be positive"),
            (0 <= self.overlap_probability < 1, "overlap_probability must lie in [0, 1)"),
            (self.recording_length > 0, "recording_length must be positive"),
            (self.noise_sigma >= 0, "noise_sigma must be >= 0"),
            (self.frame_shift > 0, "frame_shift must be positive"),
            (self.prob_noise >= 0, "prob_noise must be >= 0"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigurationError(msg)


def stream(seed: int, recording_index: int, stream_id: int) -> np.random.Generator:
    key = np.random.SeedSequence([seed, recording_index, stream_id]).generate_state(2, np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def recording_name(index: int) -> str:
    return f"sim{index:04d}"


def gen_conversation(cfg: SimConfig, recording_index: int) -> tuple[list[Turn], Timeline]:
    """Alternating turns with exponential utterance and pause lengths.

    Each iteration consumes the same four draws whichever branch it takes,
    so changing ``overlap_probability`` does not reshuffle the other draws.
    """
    rng = stream(cfg.seed, recording_index, STREAM_TURNS)
    rec = recording_name(recording_index)
    turns: list[Turn] = []
    speaker = 0
    prev_end = prev_dur = None
    cursor = 0.0
    while True:
        dur = float(np.clip(rng.exponential(cfg.mean_utterance), MIN_UTTERANCE, MAX_UTTERANCE))
        pause = float(rng.exponential(cfg.mean_pause))
        u = float(rng.random())
        frac = float(rng.uniform(0.0, 0.5))
        dur = quantize(dur)
        if prev_end is not None and cfg.n_speakers > 1 and u < cfg.overlap_probability:
            start = quantize(prev_end - frac * min(prev_dur, dur))
        else:
            # a pause that rounds to zero would glue two turns together
            start = quantize(cursor + max(pause, 0.001))
        end = quantize(start + dur)
        if end > cfg.recording_length:
            break
        turns.append(Turn.span(rec, f"S{speaker}", start, end))
        prev_end, prev_dur = end, dur
        cursor = end
        speaker = (speaker + 1) % cfg.n_speakers
    turns.sort(key=lambda t: t.sort_key)
    return turns, to_timeline(turns)


def speaker_prototypes(cfg: SimConfig, recording_index: int) -> np.ndarray:
    rng = stream(cfg.seed, recording_index, STREAM_PROTOTYPES)
    n, dim = cfg.n_speakers, cfg.embedding_dim
    for _ in range(MAX_PROTOTYPE_ATTEMPTS):
        p = rng.standard_normal((n, dim))
        p /= np.linalg.norm(p, axis=1, keepdims=True)
        cos = p @ p.T
        np.fill_diagonal(cos, -np.inf)
        if n == 1 or cos.max() <= MAX_PROTOTYPE_COSINE:
            return p
    raise ConfigurationError(
        f"could not draw {n} prototypes with pairwise cosine <= {MAX_PROTOTYPE_COSINE} in dimension {dim}"
    )


def gen_embeddings(
    turns: list[Turn],
    speech: Timeline,
    cfg: SimConfig,
    window: float,
    shift: float,
    recording_index: int,
) -> EmbeddingSet:
    """One embedding per sub-segment: duration-weighted prototype mix plus Gaussian noise."""
    rec = recording_name(recording_index)
    protos = speaker_prototypes(cfg, recording_index)
    rng = stream(cfg.seed, recording_index, STREAM_NOISE)
    segs = subsegment(speech, window, shift, rec)
    spk_index = {f"S{i}": i for i in range(cfg.n_speakers)}
    spans = [(spk_index[t.speaker], to_ms(t.onset), to_ms(t.end)) for t in turns]

    vectors = np.zeros((len(segs), cfg.embedding_dim))
    for row, seg in enumerate(segs):
        lo, hi = to_ms(seg.start), to_ms(seg.end)
        weight = np.zeros(cfg.n_speakers)
        for spk, a, b in spans:
            if a < hi and lo < b:
                weight[spk] += min(b, hi) - max(a, lo)
        mix = weight @ protos / weight.sum()
        noise = rng.standard_normal(cfg.embedding_dim)
        v = mix + cfg.noise_sigma * noise
        vectors[row] = v / np.linalg.norm(v)
    return EmbeddingSet(cfg.embedding_dim, [rec] * len(segs), [s.interval for s in segs], vectors)


def gen_probs(turns: list[Turn], cfg: SimConfig, recording_index: int) -> ProbabilityTrack:
    """Reference activity rasterized at ``frame_shift`` with optional clipped Gaussian noise."""
    rec = recording_name(recording_index)
    speakers = [f"S{i}" for i in range(cfg.n_speakers)]
    n_frames = int(np.ceil(round(cfg.recording_length / cfg.frame_shift, 6)))
    act = rasterize(turns, cfg.frame_shift, n_frames, speakers).astype(float)
    if cfg.prob_noise > 0:
        rng = stream(cfg.seed, recording_index, STREAM_PROBS)
        act = np.clip(act + cfg.prob_noise * rng.standard_normal(act.shape), 0.0, 1.0)
    return ProbabilityTrack(rec, cfg.frame_shift, speakers, np.round(act, 4))


@dataclass
class Recording:
    index: int
    name: str
    turns: list[Turn]
    speech: Timeline


def gen_corpus(cfg: SimConfig) -> list[Recording]:
    out = []
    for i in range(cfg.n_recordings):
        turns, speech = gen_conversation(cfg, i)
        out.append(Recording(i, recording_name(i), turns, speech))
    return out


def corpus_embeddings(cfg: SimConfig, corpus: list[Recording], window: float, shift: float) -> EmbeddingSet:
    parts = [gen_embeddings(r.turns, r.speech, cfg, window, shift, r.index) for r in corpus]
    return EmbeddingSet.concat(cfg.embedding_dim, parts)


def speech_turns(corpus: list[Recording]) -> list[Turn]:
    """Speech regions as single-speaker RTTM rows (speaker ``speech``)."""
    return [Turn.span(r.name, "speech", iv.start, iv.end) for r in corpus for iv in r.speech]


def write_corpus(cfg: SimConfig, outdir: str, window: float = 16.0, shift: float = 4.0) -> dict[str, str]:
    """Write reference RTTM, VAD RTTM, embeddings, probability tracks and the config."""
    os.makedirs(outdir, exist_ok=True)
    corpus = gen_corpus(cfg)
    files = {
        "ref.rttm": write_rttm(RttmDocument([t for r in corpus for t in r.turns])),
        "vad.rttm": write_rttm(RttmDocument(speech_turns(corpus))),
        "embeddings.emb": write_embeddings(corpus_embeddings(cfg, corpus, window, shift)),
        "probs.prob": write_probs([gen_probs(r.turns, cfg, r.index) for r in corpus]),
        "config.json": json.dumps({**asdict(cfg), "window": window, "shift": shift}, indent=2, sort_keys=True) + "\n",
    }
    paths = {}
    for name, text in files.items():
        path = os.path.join(outdir, name)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        paths[name] = path
    return paths
