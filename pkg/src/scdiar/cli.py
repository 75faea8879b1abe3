"""Command-line interface.

Exit codes: 0 success, 1 metric undefined, 2 parse error, 3 validation
error, 4 usage error.
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import fusion, postprocess, scoring, simulate
from .clustering import SpectralConfig
from .errors import DiarError, MetricUndefined, UsageError
from .pipeline import diarize, format_sweep, ordered_map, run_sweep
from .rttm_io import RttmDocument, parse_embeddings, parse_rttm, parse_trials, read_file, write_rttm
from .timeline import Timeline

log = logging.getLogger("scdiar")

EXIT_OK = 0


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(UsageError.exit_code, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("global options")
    g.add_argument("--seed", type=int, default=42, help="only source of randomness (default 42)")
    g.add_argument("--quiet", action="store_true", help="suppress warnings")
    g.add_argument("--output", "-o", help="write results here instead of stdout")
    g.add_argument("--workers", type=int, default=1, help="thread-pool size for per-recording work")


def _cluster_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha", type=float, default=0.65, help="eigenvalue threshold for the speaker count")
    p.add_argument("--max-speakers", type=int, default=2, help="upper bound on speakers; 0 disables it")
    p.add_argument("--oracle-k", type=int, default=None, help="force this number of speakers")


def _sim_flags(p: argparse.ArgumentParser) -> None:
    d = simulate.SimConfig()
    p.add_argument("--n-recordings", type=int, default=d.n_recordings)
    p.add_argument("--n-speakers", type=int, default=d.n_speakers)
    p.add_argument("--embedding-dim", type=int, default=d.embedding_dim)
    p.add_argument("--mean-utterance", type=float, default=d.mean_utterance)
    p.add_argument("--mean-pause", type=float, default=d.mean_pause)
    p.add_argument("--overlap-probability", type=float, default=d.overlap_probability)
    p.add_argument("--recording-length", type=float, default=d.recording_length)
    p.add_argument("--noise-sigma", type=float, default=d.noise_sigma)
    p.add_argument("--frame-shift", type=float, default=d.frame_shift)
    p.add_argument("--prob-noise", type=float, default=d.prob_noise)


def _sim_config(args) -> simulate.SimConfig:
    return simulate.SimConfig(
        seed=args.seed,
        n_recordings=args.n_recordings,
        n_speakers=args.n_speakers,
        embedding_dim=args.embedding_dim,
        mean_utterance=args.mean_utterance,
        mean_pause=args.mean_pause,
        overlap_probability=args.overlap_probability,
        recording_length=args.recording_length,
        noise_sigma=args.noise_sigma,
        frame_shift=args.frame_shift,
        prob_noise=args.prob_noise,
    )


def _spectral_config(args) -> SpectralConfig:
    if args.max_speakers < 0:
        raise UsageError("--max-speakers must be >= 0")
    return SpectralConfig(
        alpha=args.alpha,
        max_speakers=args.max_speakers or None,
        oracle_k=args.oracle_k,
        seed=args.seed,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="scdiar", description="Spectral-clustering speaker diarization with scoring and fusion tools.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="write a synthetic corpus directory (--output is the directory)")
    _common(p)
    _sim_flags(p)
    p.add_argument("--window", type=float, default=16.0)
    p.add_argument("--shift", type=float, default=4.0)

    p = sub.add_parser("cluster", help="spectral clustering of an embedding file into RTTM")
    _common(p)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--vad", help="RTTM of speech regions (default: union of embedding intervals)")
    p.add_argument("--window", type=float, default=16.0, help="sub-segment length the embeddings were cut with")
    p.add_argument("--shift", type=float, default=4.0)
    _cluster_flags(p)

    p = sub.add_parser("score", help="DER, CDER, VAD or detection metrics")
    _common(p)
    p.add_argument("metric", choices=["der", "cder", "vad", "trials"])
    p.add_argument("inputs", nargs="+", help="ref.rttm hyp.rttm, or one trial file")
    p.add_argument("--collar", type=float, default=scoring.COLLAR)
    p.add_argument("--score-overlap", choices=["yes", "no"], default="yes")
    p.add_argument("--rho", type=float, default=scoring.RHO)
    p.add_argument("--total", type=float, default=None, help="VAD: scored span [0, total) per recording")
    p.add_argument("--p-target", type=float, default=scoring.P_TARGET)
    p.add_argument("--c-fa", type=float, default=scoring.C_FA)
    p.add_argument("--c-miss", type=float, default=scoring.C_MISS)

    p = sub.add_parser("sweep", help="DER/CDER against sub-segment duration on a simulated corpus")
    _common(p)
    _sim_flags(p)
    _cluster_flags(p)
    p.add_argument("--durations", type=float, nargs="+", default=[1.0, 1.5, 2.0, 3.0, 4.0, 8.0, 16.0])
    p.add_argument("--collar", type=float, default=scoring.COLLAR)
    p.add_argument("--rho", type=float, default=scoring.RHO)

    p = sub.add_parser("fuse", help="rank-weighted fusion; the first RTTM is the most trusted")
    _common(p)
    p.add_argument("rttms", nargs="+")

    p = sub.add_parser("postprocess", help="probability tracks to RTTM")
    _common(p)
    p.add_argument("--probs", required=True)
    p.add_argument("--median", type=int, default=postprocess.MEDIAN_WINDOW)
    p.add_argument("--threshold", type=float, default=postprocess.THRESHOLD)
    p.add_argument("--min-dur", type=float, default=postprocess.MIN_DURATION)
    return parser


def _emit(args, text: str) -> None:
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_simulate(args) -> int:
    if not args.output:
        raise UsageError("simulate needs --output DIR")
    simulate.write_corpus(_sim_config(args), args.output, args.window, args.shift)
    return EXIT_OK


def cmd_cluster(args) -> int:
    emb = read_file(args.embeddings, parse_embeddings)
    if args.window <= 0 or args.shift <= 0:
        raise UsageError("--window and --shift must be positive")
    longer = sum(iv.duration > args.window + 1e-6 for iv in emb.intervals)
    if longer:
        log.warning("%d embedding intervals are longer than --window %.3f", longer, args.window)
    regions = None
    if args.vad:
        vad = read_file(args.vad, parse_rttm)
        regions = {rec: Timeline((t.onset, t.end) for t in turns) for rec, turns in vad.by_recording().items()}
        for rec in emb.recordings():
            regions.setdefault(rec, Timeline())
    turns = diarize(emb, _spectral_config(args), regions, args.workers)
    _emit(args, write_rttm(RttmDocument(turns)))
    return EXIT_OK


def cmd_score(args) -> int:
    if args.metric == "trials":
        if len(args.inputs) != 1:
            raise UsageError("score trials takes exactly one trial file")
        trials = read_file(args.inputs[0], parse_trials)
        rep = scoring.det_metrics(trials, args.p_target, args.c_fa, args.c_miss)
        _emit(args, scoring.format_det(rep) + "\n")
        return EXIT_OK

    if len(args.inputs) != 2:
        raise UsageError(f"score {args.metric} takes a reference and a hypothesis RTTM")
    ref = read_file(args.inputs[0], parse_rttm)
    hyp = read_file(args.inputs[1], parse_rttm)
    if args.metric == "der":
        rows = scoring.score_der(ref, hyp, args.collar, args.score_overlap == "yes")
        lines = [scoring.format_der(rec, rep) for rec, rep in rows]
        undefined = rows[-1][1].der is None
    elif args.metric == "cder":
        rows = scoring.score_cder(ref, hyp, args.rho)
        lines = [scoring.format_cder(rec, rep) for rec, rep in rows]
        mean = scoring.mean_cder(rows)
        lines.append(f"MEAN CDER {'nan' if mean is None else f'{mean:.4f}'}")
        undefined = rows[-1][1].cder is None
    else:
        rows = scoring.score_vad(ref, hyp, args.total)
        lines = [scoring.format_vad(rec, rep) for rec, rep in rows]
        undefined = rows[-1][1].miss is None or rows[-1][1].fa is None
    _emit(args, "".join(line + "\n" for line in lines))
    if undefined:
        raise MetricUndefined(f"{args.metric} is undefined over the whole corpus")
    return EXIT_OK


def cmd_sweep(args) -> int:
    points = run_sweep(
        _sim_config(args),
        args.durations,
        _spectral_config(args),
        collar=args.collar,
        rho=args.rho,
        workers=args.workers,
    )
    _emit(args, format_sweep(points))
    return EXIT_OK


def cmd_fuse(args) -> int:
    if len(args.rttms) < 2:
        raise UsageError("fuse needs at least two RTTM files")
    docs = [read_file(path, parse_rttm) for path in args.rttms]
    recs = sorted({rec for d in docs for rec in d.recordings()})

    def one(rec):
        return fusion.fuse([d.select(rec) for d in docs])

    turns = [t for part in ordered_map(one, recs, args.workers) for t in part]
    _emit(args, write_rttm(RttmDocument(turns)))
    return EXIT_OK


def cmd_postprocess(args) -> int:
    tracks = read_file(args.probs, postprocess.parse_probs)

    def one(track):
        return postprocess.postprocess(track, args.median, args.threshold, args.min_dur)

    turns = [t for part in ordered_map(one, tracks, args.workers) for t in part]
    _emit(args, write_rttm(RttmDocument(turns)))
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "cluster": cmd_cluster,
    "score": cmd_score,
    "sweep": cmd_sweep,
    "fuse": cmd_fuse,
    "postprocess": cmd_postprocess,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.ERROR if args.quiet else logging.WARNING,
        format="%(name)s: %(levelname)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return COMMANDS[args.command](args)
    except DiarError as exc:
        print(f"scdiar {args.command}: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
