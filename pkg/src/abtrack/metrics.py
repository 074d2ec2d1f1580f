"""CLEAR-style multi-object tracking metrics.

Per frame, surviving correspondences from the previous frame are kept
when still valid at the overlap threshold; the remaining boxes are
matched by max-overlap assignment.  Unmatched truth boxes count as
misses, unmatched hypothesis boxes as false positives, and a truth
identity changing hands counts as a mismatch.  Overlap is intersection
over union and precision is reported as the mean overlap of all matches.
"""

from __future__ import annotations

from dataclasses import dataclass

from .geometry import Box2D, iou
from .synth import ObjectTrack
from .tracker import min_cost_assignment

__all__ = ["MotReport", "clear_mot", "format_report_table", "format_report_kv"]


@dataclass(frozen=True)
class MotReport:
    """Aggregated tracking accuracy and precision counts.

    ``mota`` is ``None`` when there is no ground truth to normalize by;
    ``motp`` is ``None`` when no match ever happened.  A mismatch is
    recoverable when the original hypothesis track matches the same truth
    identity again later.
    """

    mota: float | None
    motp: float | None
    fp: int
    misses: int
    mismatches: int
    mismatches_recoverable: int
    mismatches_non_recoverable: int
    gt_total: int
    track_precision: float | None
    track_recall: float | None


def clear_mot(
    hyp: list[ObjectTrack], gt: list[ObjectTrack], iou_threshold: float = 0.5
) -> MotReport:
    """Compare hypothesis tracks against ground-truth tracks."""
    if not 0 < iou_threshold < 1:
        raise ValueError(f"iou_threshold must be in (0, 1), got {iou_threshold}")

    gt_by_frame = _boxes_by_frame(gt)
    hyp_by_frame = _boxes_by_frame(hyp)
    frames = sorted(set(gt_by_frame) | set(hyp_by_frame))

    Ident = tuple[int, str]  # tracks are identified by (object id, class)
    corr: dict[Ident, Ident] = {}  # correspondences valid in the previous frame
    last_match: dict[Ident, Ident] = {}  # most recent hypothesis per truth id
    match_log: dict[tuple[Ident, Ident], list[int]] = {}
    switches: list[tuple[int, Ident, Ident]] = []  # (frame, gt id, previous hyp id)

    fp = 0
    misses = 0
    gt_total = 0
    hyp_total = 0
    matched_gt_frames = 0
    matched_hyp_frames = 0
    overlap_sum = 0.0
    match_count = 0

    for frame in frames:
        gt_items = gt_by_frame.get(frame, [])
        hyp_items = hyp_by_frame.get(frame, [])
        gt_total += len(gt_items)
        hyp_total += len(hyp_items)
        gt_boxes = dict(gt_items)
        hyp_boxes = dict(hyp_items)

        matches: dict[int, int] = {}
        for gid, hid in corr.items():
            if gid in gt_boxes and hid in hyp_boxes and gid not in matches:
                if iou(gt_boxes[gid], hyp_boxes[hid]) >= iou_threshold:
                    matches[gid] = hid

        free_gt = [gid for gid, _ in gt_items if gid not in matches]
        used_hyp = set(matches.values())
        free_hyp = [hid for hid, _ in hyp_items if hid not in used_hyp]
        if free_gt and free_hyp:
            cost = [
                [1.0 - iou(gt_boxes[gid], hyp_boxes[hid]) for hid in free_hyp]
                for gid in free_gt
            ]
            for gi, hi in min_cost_assignment(cost, gate=1.0 - iou_threshold):
                matches[free_gt[gi]] = free_hyp[hi]

        for gid, hid in sorted(matches.items()):
            previous = last_match.get(gid)
            if previous is not None and previous != hid:
                switches.append((frame, gid, previous))
            last_match[gid] = hid
            match_log.setdefault((gid, hid), []).append(frame)
            overlap_sum += iou(gt_boxes[gid], hyp_boxes[hid])
            match_count += 1

        misses += len(gt_boxes) - len(matches)
        fp += len(hyp_boxes) - len(matches)
        matched_gt_frames += len(matches)
        matched_hyp_frames += len(matches)
        corr = matches

    recoverable = 0
    for frame, gid, previous in switches:
        later = match_log.get((gid, previous), [])
        if any(f > frame for f in later):
            recoverable += 1
    mismatches = len(switches)

    mota = None
    if gt_total > 0:
        mota = 1.0 - (misses + fp + mismatches) / gt_total
    motp = overlap_sum / match_count if match_count else None
    precision = matched_hyp_frames / hyp_total if hyp_total else None
    recall = matched_gt_frames / gt_total if gt_total else None
    return MotReport(
        mota=mota,
        motp=motp,
        fp=fp,
        misses=misses,
        mismatches=mismatches,
        mismatches_recoverable=recoverable,
        mismatches_non_recoverable=mismatches - recoverable,
        gt_total=gt_total,
        track_precision=precision,
        track_recall=recall,
    )


def _boxes_by_frame(
    tracks: list[ObjectTrack],
) -> dict[int, list[tuple[tuple[int, str], Box2D]]]:
    by_frame: dict[int, list[tuple[tuple[int, str], Box2D]]] = {}
    for track in sorted(tracks, key=lambda t: (t.object_id, t.class_label, t.start)):
        key = (track.object_id, track.class_label)
        for offset, box in enumerate(track.boxes):
            by_frame.setdefault(track.start + offset, []).append((key, box))
    return by_frame


def _fmt(value: float | None, digits: int = 3) -> str:
    if value is None:
        return "undefined"
    return f"{value:.{digits}f}"


def format_report_kv(report: MotReport) -> str:
    lines = [
        f"mota = {_fmt(report.mota)}",
        f"motp = {_fmt(report.motp)}",
        f"fp = {report.fp}",
        f"misses = {report.misses}",
        f"mismatches = {report.mismatches}",
        f"mismatches_recoverable = {report.mismatches_recoverable}",
        f"mismatches_non_recoverable = {report.mismatches_non_recoverable}",
        f"gt_total = {report.gt_total}",
        f"track_precision = {_fmt(report.track_precision)}",
        f"track_recall = {_fmt(report.track_recall)}",
    ]
    return "\n".join(lines) + "\n"


def format_report_table(report: MotReport) -> str:
    rows = [
        ("MOTA", _fmt(report.mota)),
        ("MOTP", _fmt(report.motp)),
        ("FP", str(report.fp)),
        ("misses", str(report.misses)),
        ("mismatches", str(report.mismatches)),
        ("  recoverable", str(report.mismatches_recoverable)),
        ("  non-recoverable", str(report.mismatches_non_recoverable)),
        ("GT boxes", str(report.gt_total)),
        ("track precision", _fmt(report.track_precision)),
        ("track recall", _fmt(report.track_recall)),
    ]
    width = max(len(name) for name, _ in rows)
    lines = [f"{name.ljust(width)}  {value}" for name, value in rows]
    return "\n".join(lines) + "\n"
