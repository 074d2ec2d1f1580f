"""Static SVG overlays of object tracks.

One rectangle per box, colored by object id, dashed when the box was
interpolated rather than observed.  Output is deterministic text.
"""

from __future__ import annotations

from typing import Iterable

from .ingest import SequenceMeta
from .synth import INTERPOLATED, ObjectTrack

__all__ = ["render_overlay", "PALETTE"]

PALETTE = (
    "#e6194b",
    "#3cb44b",
    "#4363d8",
    "#f58231",
    "#911eb4",
    "#46f0f0",
    "#f032e6",
    "#bcf60c",
    "#fabebe",
    "#008080",
    "#9a6324",
    "#800000",
)


def color_for(object_id: int) -> str:
    return PALETTE[object_id % len(PALETTE)]


def render_overlay(
    tracks: Iterable[ObjectTrack],
    meta: SequenceMeta,
    frames: int | tuple[int, int],
    *,
    stroke_width: float = 2.0,
) -> str:
    """Render the boxes of one frame, or of an inclusive frame range."""
    if isinstance(frames, int):
        lo = hi = frames
    else:
        lo, hi = frames
    if lo > hi:
        raise ValueError(f"empty frame range {lo}..{hi}")
    if lo < 1 or hi > meta.frame_count:
        raise ValueError(f"frames {lo}..{hi} outside sequence 1..{meta.frame_count}")

    width = meta.bounds.width
    height = meta.bounds.height
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:g}" height="{height:g}" '
        f'viewBox="0 0 {width:g} {height:g}">',
    ]
    ordered = sorted(tracks, key=lambda t: (t.object_id, t.class_label, t.start))
    for track in ordered:
        for frame in range(max(lo, track.start), min(hi, track.end) + 1):
            box = track.box_at(frame)
            dashed = track.provenance_at(frame) == INTERPOLATED
            dash = ' stroke-dasharray="6 4"' if dashed else ""
            lines.append(
                f'<rect x="{box.x:.2f}" y="{box.y:.2f}" width="{box.w:.2f}" '
                f'height="{box.h:.2f}" fill="none" stroke="{color_for(track.object_id)}" '
                f'stroke-width="{stroke_width:g}"{dash}/>'
            )
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
