"""Corrected object tracks from a chosen explanation.

Tracklets joined by selected links merge into one object track with the
gap frames filled by linear interpolation; noise tracklets are dropped;
part-of beliefs move part tracks onto the object id of their whole.
Complex events are read off the final tracks afterwards.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable

from .abduce import Hypothesis, HypothesisKind
from .geometry import Box2D, Point2D, Rcc8Relation, interpolate_box, rcc8_relation
from .solve import Explanation
from .tracker import Tracklet

__all__ = [
    "OBSERVED",
    "INTERPOLATED",
    "ObjectTrack",
    "ComplexEventKind",
    "ComplexEvent",
    "synthesize_tracks",
    "detect_complex_events",
]

OBSERVED = "observed"
INTERPOLATED = "interpolated"


@dataclass(frozen=True)
class ObjectTrack:
    """A gap-free corrected track with per-frame provenance."""

    object_id: int
    class_label: str
    start: int
    boxes: tuple[Box2D, ...]
    provenance: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.boxes:
            raise ValueError("object track needs at least one box")
        if len(self.boxes) != len(self.provenance):
            raise ValueError("provenance must tag every frame")

    @property
    def end(self) -> int:
        return self.start + len(self.boxes) - 1

    def alive_at(self, frame: int) -> bool:
        return self.start <= frame <= self.end

    def box_at(self, frame: int) -> Box2D:
        if not self.alive_at(frame):
            raise ValueError(f"frame {frame} outside [{self.start}, {self.end}]")
        return self.boxes[frame - self.start]

    def provenance_at(self, frame: int) -> str:
        if not self.alive_at(frame):
            raise ValueError(f"frame {frame} outside [{self.start}, {self.end}]")
        return self.provenance[frame - self.start]

    @classmethod
    def from_tracklet(cls, t: Tracklet) -> "ObjectTrack":
        return cls(
            object_id=t.id,
            class_label=t.class_label,
            start=t.start,
            boxes=t.boxes,
            provenance=(OBSERVED,) * len(t.boxes),
        )


class ComplexEventKind(Enum):
    PASSING_BEHIND = "passing_behind"
    MOVING_TOGETHER = "moving_together"


@dataclass(frozen=True)
class ComplexEvent:
    kind: ComplexEventKind
    objects: tuple[int, int]
    span: tuple[int, int]

    def __post_init__(self) -> None:
        if self.span[0] >= self.span[1]:
            raise ValueError(f"span must be increasing, got {self.span}")

    def atom(self) -> str:
        args = [f"obj{o}" for o in self.objects] + [str(t) for t in self.span]
        return f"{self.kind.value}({','.join(args)})."


def _chosen(expl: Explanation | Iterable[Hypothesis]) -> frozenset[Hypothesis]:
    if isinstance(expl, Explanation):
        return expl.chosen
    return frozenset(expl)


def _chains(
    chosen: frozenset[Hypothesis], tracks: dict[int, Tracklet]
) -> list[list[Tracklet]]:
    """Group tracklets into link-connected chains, earliest first."""
    successor: dict[int, int] = {}
    has_predecessor: set[int] = set()
    for h in chosen:
        if h.is_link:
            successor[h.tracks[0]] = h.tracks[1]
            has_predecessor.add(h.tracks[1])

    chains = []
    consumed = 0
    for head in sorted(tracks):
        if head in has_predecessor:
            continue
        chain = [tracks[head]]
        seen = {head}
        current = head
        while current in successor:
            current = successor[current]
            if current in seen:
                raise ValueError("cyclic link structure")
            seen.add(current)
            chain.append(tracks[current])
        consumed += len(chain)
        chains.append(chain)
    if consumed != len(tracks):
        raise ValueError("cyclic link structure")
    return chains


def object_id_map(
    expl: Explanation | Iterable[Hypothesis], tracks: Iterable[Tracklet]
) -> dict[int, int]:
    """Tracklet id to final object id, after link merging and part attachment."""
    chosen = _chosen(expl)
    by_id = {t.id: t for t in tracks}
    mapping: dict[int, int] = {}
    for chain in _chains(chosen, by_id):
        head = chain[0].id
        for t in chain:
            mapping[t.id] = head
    for h in chosen:
        if h.kind is HypothesisKind.BELONGS_TO:
            part, whole = h.tracks
            if part in mapping and whole in mapping:
                part_object = mapping[part]
                for tid, obj in list(mapping.items()):
                    if obj == part_object:
                        mapping[tid] = mapping[whole]
    return mapping


def synthesize_tracks(
    expl: Explanation | Iterable[Hypothesis], tracks: Iterable[Tracklet]
) -> list[ObjectTrack]:
    """Instantiate the chosen explanation as corrected object tracks."""
    chosen = _chosen(expl)
    track_list = list(tracks)
    by_id = {t.id: t for t in track_list}
    noisy = {h.tracks[0] for h in chosen if h.kind is HypothesisKind.NOISE}
    ids = object_id_map(chosen, track_list)

    out: list[ObjectTrack] = []
    for chain in _chains(chosen, by_id):
        if chain[0].id in noisy:
            continue
        boxes: list[Box2D] = list(chain[0].boxes)
        provenance: list[str] = [OBSERVED] * len(boxes)
        for prev, nxt in zip(chain, chain[1:]):
            for frame in range(prev.end + 1, nxt.start):
                boxes.append(
                    interpolate_box(prev.boxes[-1], prev.end, nxt.boxes[0], nxt.start, frame)
                )
                provenance.append(INTERPOLATED)
            boxes.extend(nxt.boxes)
            provenance.extend([OBSERVED] * len(nxt.boxes))
        out.append(
            ObjectTrack(
                object_id=ids[chain[0].id],
                class_label=chain[0].class_label,
                start=chain[0].start,
                boxes=tuple(boxes),
                provenance=tuple(provenance),
            )
        )
    out.sort(key=lambda t: (t.object_id, t.class_label, t.start))
    return out


def _velocity(track: ObjectTrack, frame: int) -> Point2D | None:
    if not (track.alive_at(frame) and track.alive_at(frame - 1)):
        return None
    a = track.box_at(frame - 1).center
    b = track.box_at(frame).center
    return Point2D(b.x - a.x, b.y - a.y)


def detect_complex_events(
    expl: Explanation | Iterable[Hypothesis],
    final_tracks: list[ObjectTrack],
    *,
    mt_min_frames: int = 15,
    mt_vel_tol: float = 2.0,
    eps: float = 0.5,
) -> list[ComplexEvent]:
    """Passing-behind and moving-together events over the corrected tracks.

    Passing-behind is emitted for a chosen occlusion whose occluded object
    sits on opposite horizontal sides of the occluder at the two ends of
    the occlusion span.  Moving-together is a maximal run, at least
    ``mt_min_frames`` long, of connected boxes with per-frame velocities
    within ``mt_vel_tol`` of each other.
    """
    chosen = _chosen(expl)
    ordered_tracks = sorted(final_tracks, key=lambda t: (t.object_id, t.class_label, t.start))

    def object_track(obj_id: int) -> ObjectTrack | None:
        matches = [t for t in ordered_tracks if t.object_id == obj_id]
        return matches[0] if matches else None

    events: list[ComplexEvent] = []

    occlusions = sorted(
        (h for h in chosen if h.kind is HypothesisKind.OCCLUDES), key=lambda h: h.sort_key
    )
    if occlusions:
        ids = _occlusion_object_ids(chosen, final_tracks)
        for h in occlusions:
            t1, t2, t3 = h.tracks
            occluded = ids.get(t1)
            occluder = ids.get(t3)
            if occluded is None or occluder is None:
                continue
            moving = object_track(occluded)
            blocker = object_track(occluder)
            if moving is None or blocker is None:
                continue
            lo, hi = h.span
            if not (moving.alive_at(lo) and moving.alive_at(hi)):
                continue
            if not (blocker.alive_at(lo) and blocker.alive_at(hi)):
                continue
            before = moving.box_at(lo).center.x - blocker.box_at(lo).center.x
            after = moving.box_at(hi).center.x - blocker.box_at(hi).center.x
            if before * after < 0:
                events.append(
                    ComplexEvent(ComplexEventKind.PASSING_BEHIND, (occluded, occluder), h.span)
                )

    for i, a in enumerate(ordered_tracks):
        for b in ordered_tracks[i + 1 :]:
            if a.object_id == b.object_id:
                continue
            lo = max(a.start, b.start) + 1
            hi = min(a.end, b.end)
            run_start = None
            for frame in range(lo, hi + 2):
                ok = False
                if frame <= hi:
                    va, vb = _velocity(a, frame), _velocity(b, frame)
                    if va is not None and vb is not None:
                        close = (
                            (va.x - vb.x) ** 2 + (va.y - vb.y) ** 2
                        ) ** 0.5 <= mt_vel_tol
                        connected = (
                            rcc8_relation(a.box_at(frame), b.box_at(frame), eps)
                            is not Rcc8Relation.DC
                        )
                        ok = close and connected
                if ok:
                    if run_start is None:
                        run_start = frame
                elif run_start is not None:
                    if frame - run_start >= mt_min_frames:
                        pair = tuple(sorted((a.object_id, b.object_id)))
                        events.append(
                            ComplexEvent(
                                ComplexEventKind.MOVING_TOGETHER, pair, (run_start, frame - 1)
                            )
                        )
                    run_start = None

    events.sort(key=lambda e: (e.span, e.kind.value, e.objects))
    return events


def _occlusion_object_ids(
    chosen: frozenset[Hypothesis], final_tracks: list[ObjectTrack]
) -> dict[int, int]:
    """Tracklet id to object id for grounding complex events.

    Reconstructed from the link structure: each chain's object id is the
    final id of its head track.  Tracklets dropped as noise map nowhere.
    """
    successor: dict[int, int] = {}
    has_predecessor: set[int] = set()
    all_ids: set[int] = set()
    for h in chosen:
        for tid in h.tracks:
            if h.kind not in (HypothesisKind.BELONGS_TO, HypothesisKind.SAME_OBJECT):
                all_ids.add(tid)
        if h.is_link:
            successor[h.tracks[0]] = h.tracks[1]
            has_predecessor.add(h.tracks[1])
    noisy = {h.tracks[0] for h in chosen if h.kind is HypothesisKind.NOISE}
    final_ids = {t.object_id for t in final_tracks}

    mapping: dict[int, int] = {}
    for head in sorted(all_ids):
        if head in has_predecessor or head in noisy:
            continue
        chain = [head]
        current = head
        while current in successor:
            current = successor[current]
            chain.append(current)
        # the head id survives as the object id unless a part was re-attached
        object_id = head if head in final_ids else None
        if object_id is None:
            continue
        for tid in chain:
            mapping[tid] = object_id
    return mapping
