"""Command line pipeline.

Subcommands: ``gen`` (synthetic scene), ``track`` (detections to
tracklets), ``abduce`` (tracklets to explanation atoms), ``synth``
(atoms to corrected tracks), ``eval`` (CLEAR metrics), ``pipeline``
(everything), ``render`` (SVG overlay).  Explanations are written as
ground atoms, one per line, e.g. ``occludes(trk3,trk7,trk5,102,143).``
"""

from __future__ import annotations

import argparse
import re
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

from .abduce import Hypothesis, HypothesisKind, generate_candidates
from .config import Config
from .geometry import Border
from .ingest import (
    detections_to_csv,
    format_meta,
    load_meta,
    object_tracks_from_csv,
    object_tracks_to_csv,
    parse_mot_csv,
    tracklets_from_csv,
    write_mot_csv,
)
from .metrics import clear_mot, format_report_kv, format_report_table
from .render import render_overlay
from .solve import Explanation, selection_cost, solve
from .synth import INTERPOLATED, OBSERVED, ObjectTrack, detect_complex_events, synthesize_tracks
from .synthetic import make_scene
from .tracker import build_tracklets

__all__ = [
    "main",
    "PipelineRun",
    "format_explanation_atoms",
    "format_all_optima",
    "parse_atoms",
]


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage


@dataclass
class PipelineRun:
    """Artifacts and per-stage wall time of one pipeline invocation."""

    out_dir: Path
    config: Config
    timings_ms: dict[str, float] = field(default_factory=dict)
    tracklet_count: int = 0
    model_count: int = 0
    optimal_cost: float | None = None
    track_count: int = 0


# --- explanation atoms -----------------------------------------------------


def format_explanation_atoms(expl: Explanation) -> str:
    return "".join(h.atom() + "\n" for h in expl.sorted_hypotheses())


def format_all_optima(explanations: list[Explanation]) -> str:
    blocks = []
    for index, expl in enumerate(explanations, start=1):
        header = f"% model {index} of {len(explanations)}, cost = {expl.total_cost:g}\n"
        blocks.append(header + format_explanation_atoms(expl))
    return "\n".join(blocks)


_ATOM_RE = re.compile(r"^([a-z_]+)\(([^()]*)\)\.$")
_KINDS = {kind.value: kind for kind in HypothesisKind}
_BORDERS = {border.token: border for border in Border}


def _parse_args_for(kind: HypothesisKind, args: list[str], line: str) -> Hypothesis:
    def track(token: str) -> int:
        if not token.startswith("trk"):
            raise ValueError(f"expected a tracklet id, got {token!r} in {line!r}")
        return int(token[3:])

    if kind in (HypothesisKind.ENTERS, HypothesisKind.EXITS):
        border, trk, frame = args
        t = int(frame)
        return Hypothesis(kind, (track(trk),), span=(t, t), border=_BORDERS[border])
    if kind is HypothesisKind.OCCLUDES:
        t1, t2, t3, lo, hi = args
        return Hypothesis(kind, (track(t1), track(t2), track(t3)), span=(int(lo), int(hi)))
    if kind is HypothesisKind.MISSING_DET:
        t1, t2, lo, hi = args
        return Hypothesis(kind, (track(t1), track(t2)), span=(int(lo), int(hi)))
    if kind is HypothesisKind.NOISE:
        return Hypothesis(kind, (track(args[0]),), span=None)
    if kind in (HypothesisKind.SAME_OBJECT, HypothesisKind.BELONGS_TO):
        return Hypothesis(kind, (track(args[0]), track(args[1])))
    return Hypothesis(kind, (track(args[0]),))


def parse_atoms(text: str) -> list[Hypothesis]:
    """Parse explanation atoms; in a multi-model file, the first model."""
    hypotheses: list[Hypothesis] = []
    seen_model = False
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("%"):
            if "model" in line:
                if seen_model and hypotheses:
                    break
                seen_model = True
            continue
        match = _ATOM_RE.match(line)
        if match is None:
            raise ValueError(f"unparseable atom: {line!r}")
        name, body = match.groups()
        if name not in _KINDS:
            raise ValueError(f"unknown predicate {name!r}")
        args = [a.strip() for a in body.split(",")] if body.strip() else []
        hypotheses.append(_parse_args_for(_KINDS[name], args, line))
    return hypotheses


def _noise_spans(hypotheses: list[Hypothesis], tracklets) -> list[Hypothesis]:
    """Re-attach tracklet spans to parsed noise atoms (the atom drops them)."""
    by_id = {t.id: t for t in tracklets}
    out = []
    for h in hypotheses:
        if h.kind is HypothesisKind.NOISE and h.span is None:
            track = by_id[h.tracks[0]]
            out.append(Hypothesis(h.kind, h.tracks, span=(track.start, track.end)))
        else:
            out.append(h)
    return out


# --- helpers ----------------------------------------------------------------


def _load_config(path: str | None) -> Config:
    cfg = Config.load(path) if path else Config()
    cfg.validate()
    return cfg


def _apply_overrides(cfg: Config, args: argparse.Namespace) -> Config:
    if getattr(args, "max_gap", None) is not None:
        cfg = cfg.replace(max_gap=args.max_gap)
    return cfg


def _out_dir(args: argparse.Namespace) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _solve_tracklets(tracklets, meta, cfg):
    obligations, candidates, beliefs = generate_candidates(tracklets, meta, cfg)
    explanations = solve(
        obligations,
        candidates,
        tracklets,
        cfg.weights,
        beliefs=beliefs,
        max_optima=cfg.max_optima,
        part_class=cfg.part_class,
        require_part_whole=cfg.require_part_whole,
    )
    return explanations


def _timed(run: PipelineRun, stage: str, func):
    start = time.perf_counter()
    try:
        result = func()
    except Exception as exc:
        raise StageError(stage, exc) from exc
    run.timings_ms[stage] = (time.perf_counter() - start) * 1000.0
    return result


# --- subcommands --------------------------------------------------------------


def cmd_gen(args: argparse.Namespace) -> int:
    out = _out_dir(args)
    scene = make_scene(
        objects=args.objects,
        frames=args.frames,
        occlusions=args.occlusions,
        seed=args.seed,
        drop_prob=args.drop_prob,
        jitter_sigma=args.jitter,
        fp_rate=args.fp_rate,
    )
    (out / "det.csv").write_text(detections_to_csv(scene.detections()))
    (out / "gt.csv").write_text(object_tracks_to_csv(scene.ground_truth()))
    (out / "seq.meta").write_text(format_meta(scene.meta()))
    print(f"wrote det.csv, gt.csv, seq.meta to {out}")
    return 0


def cmd_track(args: argparse.Namespace) -> int:
    cfg = _apply_overrides(_load_config(args.config), args)
    out = _out_dir(args)
    run = PipelineRun(out_dir=out, config=cfg)
    detections = _timed(run, "ingest", lambda: parse_mot_csv(Path(args.det)))
    meta = load_meta(args.meta, border_margin=cfg.border_margin)
    tracklets = _timed(run, "track", lambda: build_tracklets(detections, meta, cfg))
    (out / "tracklets.csv").write_text(write_mot_csv(tracklets))
    print(f"{len(tracklets)} tracklets -> {out / 'tracklets.csv'}")
    return 0


def cmd_abduce(args: argparse.Namespace) -> int:
    cfg = _apply_overrides(_load_config(args.config), args)
    out = _out_dir(args)
    run = PipelineRun(out_dir=out, config=cfg)
    meta = load_meta(args.meta, border_margin=cfg.border_margin)
    tracklets = _timed(run, "ingest", lambda: tracklets_from_csv(Path(args.tracklets)))
    explanations = _timed(run, "abduce", lambda: _solve_tracklets(tracklets, meta, cfg))
    _write_explanations(out, explanations, args.all_optima)
    print(
        f"{len(explanations)} optimal model(s), cost = {explanations[0].total_cost:g}"
        if explanations
        else "no explanation"
    )
    return 0


def _write_explanations(out: Path, explanations: list[Explanation], all_optima: bool) -> None:
    if not explanations:
        raise RuntimeError("no consistent explanation found")
    text = (
        format_all_optima(explanations) if all_optima else format_explanation_atoms(explanations[0])
    )
    (out / "explanation.atoms").write_text(text)


def cmd_synth(args: argparse.Namespace) -> int:
    cfg = _apply_overrides(_load_config(args.config), args)
    out = _out_dir(args)
    run = PipelineRun(out_dir=out, config=cfg)
    tracklets = _timed(run, "ingest", lambda: tracklets_from_csv(Path(args.tracklets)))
    hypotheses = _timed(
        run, "synth", lambda: _noise_spans(parse_atoms(Path(args.atoms).read_text()), tracklets)
    )
    cost = selection_cost(hypotheses, tracklets, cfg.weights)
    expl = Explanation(frozenset(hypotheses), cost)
    tracks = _timed(run, "synth-tracks", lambda: synthesize_tracks(expl, tracklets))
    events = detect_complex_events(
        expl, tracks, mt_min_frames=cfg.mt_min_frames, mt_vel_tol=cfg.mt_vel_tol, eps=cfg.eps
    )
    (out / "tracks.csv").write_text(object_tracks_to_csv(tracks))
    (out / "complex.atoms").write_text("".join(e.atom() + "\n" for e in events))
    print(f"{len(tracks)} tracks, {len(events)} complex events -> {out}")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    hyp = object_tracks_from_csv(Path(args.hyp))
    gt = object_tracks_from_csv(Path(args.gt))
    report = clear_mot(hyp, gt, iou_threshold=args.iou_threshold)
    text = format_report_table(report) + "\n" + format_report_kv(report)
    print(text, end="")
    if args.out:
        out = _out_dir(args)
        (out / "report.txt").write_text(text)
    return 0


def cmd_pipeline(args: argparse.Namespace) -> int:
    cfg = _apply_overrides(_load_config(args.config), args)
    out = _out_dir(args)
    run = PipelineRun(out_dir=out, config=cfg)

    detections = _timed(run, "ingest", lambda: parse_mot_csv(Path(args.det)))
    meta = load_meta(args.meta, border_margin=cfg.border_margin)
    tracklets = _timed(run, "track", lambda: build_tracklets(detections, meta, cfg))
    (out / "tracklets.csv").write_text(write_mot_csv(tracklets))
    run.tracklet_count = len(tracklets)

    explanations = _timed(run, "abduce", lambda: _solve_tracklets(tracklets, meta, cfg))
    _write_explanations(out, explanations, args.all_optima)
    run.model_count = len(explanations)
    run.optimal_cost = explanations[0].total_cost

    best = explanations[0]
    tracks = _timed(run, "synth", lambda: synthesize_tracks(best, tracklets))
    events = detect_complex_events(
        best, tracks, mt_min_frames=cfg.mt_min_frames, mt_vel_tol=cfg.mt_vel_tol, eps=cfg.eps
    )
    (out / "tracks.csv").write_text(object_tracks_to_csv(tracks))
    (out / "complex.atoms").write_text("".join(e.atom() + "\n" for e in events))
    run.track_count = len(tracks)

    if args.gt:
        gt = object_tracks_from_csv(Path(args.gt))
        report = _timed(
            run, "eval", lambda: clear_mot(gt=gt, hyp=tracks, iou_threshold=args.iou_threshold)
        )
        text = format_report_table(report) + "\n" + format_report_kv(report)
        (out / "report.txt").write_text(text)
        print(text, end="")

    print(
        f"{run.tracklet_count} tracklets, {run.model_count} optimal model(s), "
        f"cost = {run.optimal_cost:g}, {run.track_count} tracks"
    )
    for stage, ms in run.timings_ms.items():
        print(f"  {stage}: {ms:.1f} ms")
    return 0


def cmd_render(args: argparse.Namespace) -> int:
    cfg = _load_config(args.config)
    meta = load_meta(args.meta, border_margin=cfg.border_margin)
    tracks = object_tracks_from_csv(Path(args.tracks))
    if args.atoms:
        tracks = _mark_interpolated(tracks, parse_atoms(Path(args.atoms).read_text()))
    if args.frames:
        lo, _, hi = args.frames.partition(":")
        frames: int | tuple[int, int] = (int(lo), int(hi or lo))
    else:
        frames = args.frame
    svg = render_overlay(tracks, meta, frames)
    Path(args.out).write_text(svg)
    print(f"wrote {args.out}")
    return 0


def _mark_interpolated(tracks: list[ObjectTrack], hypotheses: list[Hypothesis]) -> list[ObjectTrack]:
    """Flag gap frames of linked chains as interpolated, using link atoms."""
    successor: dict[int, int] = {}
    spans: dict[int, tuple[int, int]] = {}
    for h in hypotheses:
        if h.is_link:
            successor[h.tracks[0]] = h.tracks[1]
            spans[h.tracks[0]] = h.span
    heads = set(successor) - set(successor.values())
    gap_frames: dict[int, set[int]] = {}
    for head in heads:
        frames: set[int] = set()
        current = head
        while current in successor:
            lo, hi = spans[current]
            frames.update(range(lo + 1, hi))
            current = successor[current]
        gap_frames[head] = frames

    out = []
    for track in tracks:
        frames = gap_frames.get(track.object_id, set())
        if not frames:
            out.append(track)
            continue
        provenance = tuple(
            INTERPOLATED if (track.start + i) in frames else OBSERVED
            for i in range(len(track.boxes))
        )
        out.append(
            ObjectTrack(
                object_id=track.object_id,
                class_label=track.class_label,
                start=track.start,
                boxes=track.boxes,
                provenance=provenance,
            )
        )
    return out


# --- argument parsing ----------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="abtrack",
        description="Correct multi-object tracks by abducing the events that explain them.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a synthetic scene")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--objects", type=int, default=2)
    gen.add_argument("--frames", type=int, default=107)
    gen.add_argument("--occlusions", type=int, default=1)
    gen.add_argument("--drop-prob", type=float, default=0.0)
    gen.add_argument("--jitter", type=float, default=0.0)
    gen.add_argument("--fp-rate", type=float, default=0.0)
    gen.add_argument("--out", required=True)
    gen.set_defaults(func=cmd_gen)

    track = sub.add_parser("track", help="build tracklets from detections")
    track.add_argument("--det", required=True)
    track.add_argument("--meta", required=True)
    track.add_argument("--config")
    track.add_argument("--max-gap", type=int)
    track.add_argument("--out", required=True)
    track.set_defaults(func=cmd_track)

    abduce_cmd = sub.add_parser("abduce", help="abduce an optimal explanation")
    abduce_cmd.add_argument("--tracklets", required=True)
    abduce_cmd.add_argument("--meta", required=True)
    abduce_cmd.add_argument("--config")
    abduce_cmd.add_argument("--max-gap", type=int)
    abduce_cmd.add_argument("--all-optima", action="store_true")
    abduce_cmd.add_argument("--out", required=True)
    abduce_cmd.set_defaults(func=cmd_abduce)

    synth_cmd = sub.add_parser("synth", help="synthesize corrected tracks")
    synth_cmd.add_argument("--tracklets", required=True)
    synth_cmd.add_argument("--atoms", required=True)
    synth_cmd.add_argument("--config")
    synth_cmd.add_argument("--out", required=True)
    synth_cmd.set_defaults(func=cmd_synth)

    eval_cmd = sub.add_parser("eval", help="compare tracks against ground truth")
    eval_cmd.add_argument("--hyp", required=True)
    eval_cmd.add_argument("--gt", required=True)
    eval_cmd.add_argument("--iou-threshold", type=float, default=0.5)
    eval_cmd.add_argument("--out")
    eval_cmd.set_defaults(func=cmd_eval)

    pipe = sub.add_parser("pipeline", help="run every stage")
    pipe.add_argument("--det", required=True)
    pipe.add_argument("--meta", required=True)
    pipe.add_argument("--gt")
    pipe.add_argument("--config")
    pipe.add_argument("--max-gap", type=int)
    pipe.add_argument("--iou-threshold", type=float, default=0.5)
    pipe.add_argument("--all-optima", action="store_true")
    pipe.add_argument("--out", required=True)
    pipe.set_defaults(func=cmd_pipeline)

    render_cmd = sub.add_parser("render", help="render an SVG overlay")
    render_cmd.add_argument("--tracks", required=True)
    render_cmd.add_argument("--meta", required=True)
    render_cmd.add_argument("--atoms")
    render_cmd.add_argument("--config")
    group = render_cmd.add_mutually_exclusive_group(required=True)
    group.add_argument("--frame", type=int)
    group.add_argument("--frames", help="inclusive range a:b")
    render_cmd.add_argument("--out", required=True)
    render_cmd.set_defaults(func=cmd_render)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except StageError as exc:
        print(f"error {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # file and format errors outside timed stages
        print(f"error [{args.command}] {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
