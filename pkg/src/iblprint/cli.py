"""Command-line entry point.

Exit codes: 0 success, 1 validation error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import IO, Sequence

from . import anonymity
from .capture import (
    MalformedLine,
    PipelineConfig,
    build_tracks,
    read_capture,
    read_tracks,
    write_capture,
    write_tracks,
)
from .experiment import device_summaries, replicate
from .linker import evaluate_links, links_to_json, link_tracks, render_chains
from .sim import (
    ReceiverModel,
    read_ground_truth,
    read_profiles,
    simulate,
    table1_profiles,
    write_ground_truth,
)
from .stats import format_device_table, precision_epsilon, summarize_track

log = logging.getLogger("iblprint")

EXIT_OK, EXIT_VALIDATION, EXIT_IO = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse exits 2 by default; usage errors are validation
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_VALIDATION)


def _truth_path(capture: str) -> str:
    return capture + ".truth"


def _add_pipeline(p: argparse.ArgumentParser) -> None:
    d = PipelineConfig()
    p.add_argument("--window-low", type=float, default=d.window_low_ms, help="lower IBL window bound in ms (default: %(default)s)")
    p.add_argument("--window-high", type=float, default=d.window_high_ms, help="upper IBL window bound in ms (default: %(default)s)")
    p.add_argument("--session-limit", type=float, default=d.session_limit_s, help="per-MAC session cap in s (default: %(default)s)")
    p.add_argument("--min-points", type=int, default=d.min_points, help="minimum retained samples per track (default: %(default)s)")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", choices=("text", "structured"), default="text", help="report format (default: %(default)s)")
    p.add_argument("--threads", type=int, default=1, help="worker threads; 1 keeps runs deterministic (default: %(default)s)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="iblprint", description="IBL fingerprinting lab for GAEN beacons")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="generate a capture and ground truth from device profiles")
    p.add_argument("--profiles", default="table1", help="'table1' or a JSON-lines profile file (default: %(default)s)")
    p.add_argument("--duration", type=float, default=7200.0, help="capture length in s (default: %(default)s)")
    p.add_argument("--seed", type=int, default=42, help="PRNG seed (default: %(default)s)")
    p.add_argument("--loss", type=float, default=0.0, help="per-broadcast drop probability (default: %(default)s)")
    p.add_argument("--quantization", type=float, default=0.0, help="timestamp rounding in ms, 0 = exact (default: %(default)s)")
    p.add_argument("--jitter", type=float, default=None, help="override per-broadcast jitter in ms (default: profile value)")
    p.add_argument("--out", required=True, help="capture output path")
    p.add_argument("--truth", default=None, help="ground-truth output path (default: <out>.truth)")
    _add_common(p)

    p = sub.add_parser("analyze", help="capture -> tracks and per-device IBL summary")
    p.add_argument("--in", dest="input", required=True, help="capture file")
    p.add_argument("--truth", default=None, help="ground truth used to label devices (default: <in>.truth if present)")
    p.add_argument("--tracks-out", default=None, help="write tracks here (default: not written)")
    p.add_argument("--means-out", default=None, help="write one track mean per line here (default: not written)")
    _add_pipeline(p)
    _add_common(p)

    p = sub.add_parser("anonymity", help="track means -> anonymity report and SVG histogram")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--means", help="file with one IBL mean (ms) per line")
    src.add_argument("--tracks", help="track file; per-track means are used")
    p.add_argument("--epsilon", type=float, default=0.25, help="bin width in ms (default: %(default)s)")
    p.add_argument("--svg", default=None, help="write histogram SVG here (default: not written)")
    _add_common(p)

    p = sub.add_parser("link", help="tracks [+ ground truth] -> link hypotheses [+ evaluation]")
    p.add_argument("--tracks", required=True, help="track file")
    p.add_argument("--truth", default=None, help="ground truth for evaluation (default: none)")
    p.add_argument("--epsilon", type=float, default=0.25, help="mean tolerance in ms (default: %(default)s)")
    p.add_argument("--max-gap", type=float, default=30.0, help="max rotation gap in s (default: %(default)s)")
    p.add_argument("--chains", action="store_true", help="also print linked MAC chains (default: off)")
    _add_common(p)

    p = sub.add_parser("reproduce", help="seeded end-to-end replication report")
    p.add_argument("--seed", type=int, default=42, help="PRNG seed (default: %(default)s)")
    p.add_argument("--duration", type=float, default=7200.0, help="capture length in s (default: %(default)s)")
    p.add_argument("--loss", type=float, default=0.05, help="per-broadcast drop probability (default: %(default)s)")
    p.add_argument("--epsilon", type=float, default=None, help="bin width / link tolerance in ms (default: 0.25, the reference fleet precision)")
    p.add_argument("--max-gap", type=float, default=30.0, help="max rotation gap in s (default: %(default)s)")
    p.add_argument("--svg", default=None, help="write histogram SVG here (default: not written)")
    _add_common(p)
    return parser


def _emit(text: str, out: IO[str]) -> None:
    out.write(text)


def _read_lines_floats(path: str) -> list[float]:
    vals = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                vals.append(float(line))
            except ValueError:
                raise MalformedLine(lineno, f"not a number: {line!r}") from None
    return vals


def _cmd_simulate(args, out: IO[str]) -> int:
    if args.profiles == "table1":
        profiles = table1_profiles()
    else:
        with open(args.profiles, encoding="utf-8") as fh:
            profiles = read_profiles(fh)
    if args.jitter is not None:
        profiles = [replace(p, broadcast_jitter_ms=args.jitter) for p in profiles]
    receiver = ReceiverModel(args.loss, args.quantization)
    records, truth = simulate(profiles, args.duration, receiver, args.seed)
    truth_path = args.truth or _truth_path(args.out)
    with open(args.out, "w", encoding="utf-8") as fh:
        n = write_capture(records, fh)
    with open(truth_path, "w", encoding="utf-8") as fh:
        write_ground_truth(truth, fh)
    log.info("wrote %d records to %s, %d identities to %s", n, args.out, len(truth), truth_path)
    return EXIT_OK


def _cmd_analyze(args, out: IO[str]) -> int:
    cfg = PipelineConfig(args.window_low, args.window_high, args.session_limit, args.min_points)
    reader = read_capture(args.input)
    tracks = build_tracks(reader, cfg)
    if args.tracks_out:
        with open(args.tracks_out, "w", encoding="utf-8") as fh:
            write_tracks(tracks, fh)
    summaries = [summarize_track(t) for t in tracks]
    if args.means_out:
        with open(args.means_out, "w", encoding="utf-8") as fh:
            fh.writelines(f"{s.ibl_mean_ms:.6f}\n" for s in summaries)

    truth_path = args.truth
    if truth_path is None and Path(_truth_path(args.input)).exists():
        truth_path = _truth_path(args.input)
    devices = []
    if truth_path:
        with open(truth_path, encoding="utf-8") as fh:
            truth = read_ground_truth(fh)
        labels = list(dict.fromkeys(e.label for e in truth))
        _, devices = device_summaries(tracks, truth, labels)

    if args.format == "structured":
        doc = {
            "tracks": [
                {"mac": str(s.mac), "samples": s.sample_count, "mean_ms": s.ibl_mean_ms, "stdev_ms": s.ibl_stdev_ms}
                for s in summaries
            ],
            "devices": [
                {"label": d.label, "pseudonyms": d.pseudonym_count, "mean_ms": d.mean_of_means_ms, "double_stdev_ms": d.double_stdev_ms}
                for d in devices
            ],
            "epsilon_ms": precision_epsilon(devices) if devices else None,
            "nonmonotonic_timestamps": reader.nonmonotonic,
        }
        _emit(json.dumps(doc, indent=2) + "\n", out)
    elif devices:
        _emit(format_device_table(devices), out)
        _emit(f"\nepsilon {precision_epsilon(devices):.4f} ms over {len(tracks)} tracks\n", out)
    else:
        for s in summaries:
            _emit(f"{s.mac}  {s.sample_count:6d}  {s.ibl_mean_ms:.2f}\n", out)
    return EXIT_OK


def _cmd_anonymity(args, out: IO[str]) -> int:
    if args.means:
        means = _read_lines_floats(args.means)
    else:
        means = [summarize_track(t).ibl_mean_ms for t in read_tracks(args.tracks)]
    rep = anonymity.fingerprinting_anonymity(means, args.epsilon)
    if args.svg:
        Path(args.svg).write_text(anonymity.histogram_svg(rep.histogram), encoding="utf-8")
    _emit(rep.to_json() + "\n" if args.format == "structured" else anonymity.format_report(rep), out)
    return EXIT_OK


def _cmd_link(args, out: IO[str]) -> int:
    tracks = read_tracks(args.tracks)
    links = link_tracks(tracks, args.epsilon, args.max_gap)
    evaluation = None
    if args.truth:
        with open(args.truth, encoding="utf-8") as fh:
            truth = read_ground_truth(fh)
        evaluation = evaluate_links(links, truth, [t.mac for t in tracks])
    if args.format == "structured":
        _emit(links_to_json(links), out)
        if evaluation:
            _emit(json.dumps({
                "true_positive": evaluation.true_positive,
                "false_positive": evaluation.false_positive,
                "false_negative": evaluation.false_negative,
                "precision": evaluation.precision,
                "recall": evaluation.recall,
            }) + "\n", out)
    else:
        for l in links:
            _emit(f"{l.predecessor} -> {l.successor}  dmean {l.mean_gap_ms:.3f} ms  gap {l.time_gap_s:.1f} s  score {l.score:.2f}\n", out)
        if evaluation:
            _emit(
                f"precision {evaluation.precision:.3f}  recall {evaluation.recall:.3f}  "
                f"(tp {evaluation.true_positive}, fp {evaluation.false_positive}, fn {evaluation.false_negative})\n",
                out,
            )
    if args.chains:
        _emit(render_chains(links), out)
    return EXIT_OK


def _cmd_reproduce(args, out: IO[str]) -> int:
    rep = replicate(
        seed=args.seed,
        duration_s=args.duration,
        receiver=ReceiverModel(loss_probability=args.loss),
        epsilon=args.epsilon,
        max_gap_s=args.max_gap,
    )
    if args.svg:
        Path(args.svg).write_text(anonymity.histogram_svg(rep.anonymity.histogram), encoding="utf-8")
    _emit(json.dumps(rep.structured(), indent=2) + "\n" if args.format == "structured" else rep.text(), out)
    return EXIT_OK


_COMMANDS = {
    "simulate": _cmd_simulate,
    "analyze": _cmd_analyze,
    "anonymity": _cmd_anonymity,
    "link": _cmd_link,
    "reproduce": _cmd_reproduce,
}


def run(argv: Sequence[str] | None = None, out: IO[str] | None = None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.threads < 1:
        print("iblprint: error: --threads must be >= 1", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        return _COMMANDS[args.command](args, out)
    except OSError as exc:
        print(f"iblprint: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:  # MalformedLine, InvalidProfile, anonymity errors, bad flags
        print(f"iblprint: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


def main() -> None:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s", stream=sys.stderr)
    sys.exit(run())


if __name__ == "__main__":
    main()
