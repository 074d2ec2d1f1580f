"""Detection, track and metadata file formats.

Detections and tracks share one CSV layout, ten comma separated columns
with no header::

    frame,id,bb_left,bb_top,bb_width,bb_height,conf,x,y,z

An optional eleventh column carries a class token; a missing token means
"person".  Sequence metadata files are ``key = value`` lines.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable

from .geometry import Box2D, FrameBounds

__all__ = [
    "Detection",
    "SequenceMeta",
    "ParseError",
    "DEFAULT_CLASS",
    "parse_mot_csv",
    "detections_to_csv",
    "write_mot_csv",
    "tracklets_from_csv",
    "object_tracks_to_csv",
    "object_tracks_from_csv",
    "parse_meta",
    "format_meta",
    "load_meta",
]

DEFAULT_CLASS = "person"


class ParseError(ValueError):
    pass


@dataclass(frozen=True)
class Detection:
    """One observed box in one frame."""

    frame: int
    id: int | None
    box: Box2D
    confidence: float
    class_label: str | None = None

    def __post_init__(self) -> None:
        if self.frame < 1:
            raise ValueError(f"frame must be >= 1, got {self.frame}")

    @property
    def label(self) -> str:
        return self.class_label if self.class_label is not None else DEFAULT_CLASS


@dataclass(frozen=True)
class SequenceMeta:
    """Sequence name, length, frame geometry and rate."""

    name: str
    frame_count: int
    bounds: FrameBounds
    frame_rate: float = 30.0

    def __post_init__(self) -> None:
        if self.frame_count < 1:
            raise ValueError(f"frame_count must be >= 1, got {self.frame_count}")


def _read_text(source: str | Path | bytes | IO) -> str:
    if isinstance(source, bytes):
        return source.decode("utf-8")
    if isinstance(source, Path):
        return source.read_text()
    if isinstance(source, str):
        # a string is CSV content if it looks like rows, otherwise a path
        if "," in source or "\n" in source or not source:
            return source
        return Path(source).read_text()
    data = source.read()
    return data.decode("utf-8") if isinstance(data, bytes) else data


def parse_mot_csv(source: str | Path | bytes | IO) -> list[Detection]:
    """Parse detection rows; a path, text, bytes, or file object is accepted.

    Rows come back sorted by frame.  Any malformed line raises
    :class:`ParseError` naming the line number; nothing is dropped silently.
    """
    text = _read_text(source)
    detections: list[Detection] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) not in (10, 11):
            raise ParseError(f"line {lineno}: expected 10 or 11 fields, got {len(parts)}")
        try:
            frame = int(float(parts[0]))
            ident = int(float(parts[1]))
            x, y, w, h, conf = (float(p) for p in parts[2:7])
        except ValueError as exc:
            raise ParseError(f"line {lineno}: non-numeric field: {exc}") from exc
        if frame < 1:
            raise ParseError(f"line {lineno}: frame must be >= 1, got {frame}")
        if not all(math.isfinite(v) for v in (x, y, w, h, conf)):
            raise ParseError(f"line {lineno}: non-finite value")
        if w <= 0 or h <= 0:
            raise ParseError(f"line {lineno}: degenerate box w={w}, h={h}")
        label = parts[10] if len(parts) == 11 and parts[10] else None
        detections.append(
            Detection(
                frame=frame,
                id=None if ident == -1 else ident,
                box=Box2D(x, y, w, h),
                confidence=conf,
                class_label=label,
            )
        )
    detections.sort(key=lambda d: d.frame)
    return detections


def _format_row(frame: int, ident: int, box: Box2D, conf: str, label: str | None) -> str:
    row = (
        f"{frame},{ident},{box.x:.2f},{box.y:.2f},{box.w:.2f},{box.h:.2f},{conf},-1,-1,-1"
    )
    if label is not None and label != DEFAULT_CLASS:
        row += f",{label}"
    return row


def detections_to_csv(detections: Iterable[Detection]) -> str:
    rows = [
        _format_row(d.frame, -1 if d.id is None else d.id, d.box, f"{d.confidence:g}", d.class_label)
        for d in sorted(detections, key=lambda d: (d.frame, -1 if d.id is None else d.id))
    ]
    return "".join(row + "\n" for row in rows)


def write_mot_csv(tracklets) -> str:
    """Serialize tracklets, one row per frame, ordered by (frame, id)."""
    rows = []
    for t in tracklets:
        if t.id is None:
            raise ValueError("tracklet without an assigned id")
        for offset, box in enumerate(t.boxes):
            rows.append((t.start + offset, t.id, box, t.class_label))
    rows.sort(key=lambda r: (r[0], r[1]))
    return "".join(_format_row(f, i, b, "1", label) + "\n" for f, i, b, label in rows)


def tracklets_from_csv(source: str | Path | bytes | IO):
    """Rebuild tracklets from rows written by :func:`write_mot_csv`."""
    from .tracker import Tracklet

    groups = _grouped_rows(parse_mot_csv(source))
    tracklets = []
    for (ident, label), rows in groups:
        frames = [f for f, _ in rows]
        _require_contiguous(frames, ident)
        tracklets.append(
            Tracklet(id=ident, class_label=label, start=frames[0], boxes=tuple(b for _, b in rows))
        )
    return tracklets


def object_tracks_to_csv(tracks) -> str:
    rows = []
    for t in tracks:
        for offset, box in enumerate(t.boxes):
            rows.append((t.start + offset, t.object_id, box, t.class_label))
    rows.sort(key=lambda r: (r[0], r[1], r[3]))
    return "".join(_format_row(f, i, b, "1", label) + "\n" for f, i, b, label in rows)


def object_tracks_from_csv(source: str | Path | bytes | IO):
    from .synth import OBSERVED, ObjectTrack

    groups = _grouped_rows(parse_mot_csv(source))
    tracks = []
    for (ident, label), rows in groups:
        frames = [f for f, _ in rows]
        _require_contiguous(frames, ident)
        boxes = tuple(b for _, b in rows)
        tracks.append(
            ObjectTrack(
                object_id=ident,
                class_label=label,
                start=frames[0],
                boxes=boxes,
                provenance=(OBSERVED,) * len(boxes),
            )
        )
    return tracks


def _grouped_rows(detections: list[Detection]):
    groups: dict[tuple[int, str], list[tuple[int, Box2D]]] = {}
    for d in detections:
        if d.id is None:
            raise ParseError("track row without an id")
        groups.setdefault((d.id, d.label), []).append((d.frame, d.box))
    out = []
    for key in sorted(groups):
        rows = sorted(groups[key], key=lambda r: r[0])
        out.append((key, rows))
    return out


def _require_contiguous(frames: list[int], ident: int) -> None:
    for a, b in zip(frames, frames[1:]):
        if b != a + 1:
            raise ParseError(f"track {ident} has a frame gap between {a} and {b}")


# --- sequence metadata --------------------------------------------------


def parse_meta(text: str, border_margin: float = 20.0) -> SequenceMeta:
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()
    try:
        return SequenceMeta(
            name=values.get("name", "sequence"),
            frame_count=int(values["frame_count"]),
            bounds=FrameBounds(
                width=float(values["width"]),
                height=float(values["height"]),
                border_margin=border_margin,
            ),
            frame_rate=float(values.get("frame_rate", "30")),
        )
    except KeyError as exc:
        raise ParseError(f"missing metadata key {exc.args[0]!r}") from exc
    except ValueError as exc:
        raise ParseError(f"bad metadata value: {exc}") from exc


def format_meta(meta: SequenceMeta) -> str:
    return (
        f"name = {meta.name}\n"
        f"frame_count = {meta.frame_count}\n"
        f"width = {meta.bounds.width:g}\n"
        f"height = {meta.bounds.height:g}\n"
        f"frame_rate = {meta.frame_rate:g}\n"
    )


def load_meta(path: str | Path, border_margin: float = 20.0) -> SequenceMeta:
    return parse_meta(Path(path).read_text(), border_margin=border_margin)
