"""Candidate events and beliefs for every tracklet start and end.

Each tracklet contributes two endpoint obligations.  A candidate
hypothesis is admitted only when its spatial precondition holds: border
contact for enter/exit, interior overlap with a live occluder for
occlusion, a same-class successor within the gap limit for missing
detections.  Declaring a tracklet noise is always available, so every
obligation is coverable.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .config import Config
from .geometry import Border, Box2D, Rcc8Relation, border_contact, rcc8_relation
from .ingest import SequenceMeta
from .tracker import Tracklet

__all__ = [
    "HypothesisKind",
    "Endpoint",
    "Hypothesis",
    "EndpointObligation",
    "obligations_for",
    "endpoint_candidates",
    "belief_candidates",
    "generate_candidates",
]

_DISJOINT = (Rcc8Relation.DC, Rcc8Relation.EC)
_CONTAINED = (Rcc8Relation.NTPP, Rcc8Relation.TPP)


class HypothesisKind(Enum):
    ENTERS = "enters"
    EXITS = "exits"
    OCCLUDES = "occludes"
    MISSING_DET = "missing_det"
    NOISE = "noise"
    SAME_OBJECT = "same_object"
    BELONGS_TO = "belongs_to"
    PRESENT_AT_START = "present_at_start"
    PRESENT_AT_END = "present_at_end"


_KIND_ORDER = {kind: index for index, kind in enumerate(HypothesisKind)}
_ARITY = {
    HypothesisKind.ENTERS: 1,
    HypothesisKind.EXITS: 1,
    HypothesisKind.OCCLUDES: 3,
    HypothesisKind.MISSING_DET: 2,
    HypothesisKind.NOISE: 1,
    HypothesisKind.SAME_OBJECT: 2,
    HypothesisKind.BELONGS_TO: 2,
    HypothesisKind.PRESENT_AT_START: 1,
    HypothesisKind.PRESENT_AT_END: 1,
}
_BORDER_ORDER = {border: index for index, border in enumerate(Border)}


class Endpoint(Enum):
    START = "start"
    END = "end"

    def __lt__(self, other: "Endpoint") -> bool:
        if not isinstance(other, Endpoint):
            return NotImplemented
        return (self is Endpoint.START) and (other is Endpoint.END)


@dataclass(frozen=True)
class Hypothesis:
    """One abducible event or belief, grounded in tracklet ids.

    For occlusion the grounding order is (disappearing, reappearing,
    occluder); for part-of it is (part, whole).
    """

    kind: HypothesisKind
    tracks: tuple[int, ...]
    span: tuple[int, int] | None = None
    border: Border | None = None

    def __post_init__(self) -> None:
        if len(self.tracks) != _ARITY[self.kind]:
            raise ValueError(
                f"{self.kind.value} needs {_ARITY[self.kind]} tracklets, got {len(self.tracks)}"
            )
        if (self.border is not None) != (
            self.kind in (HypothesisKind.ENTERS, HypothesisKind.EXITS)
        ):
            raise ValueError(f"{self.kind.value}: unexpected border grounding")
        if self.span is not None and self.span[0] > self.span[1]:
            raise ValueError(f"span out of order: {self.span}")

    @property
    def sort_key(self) -> tuple:
        return (
            _KIND_ORDER[self.kind],
            self.tracks,
            self.span if self.span is not None else (),
            _BORDER_ORDER[self.border] if self.border is not None else -1,
        )

    def covers(self) -> tuple[tuple[int, Endpoint], ...]:
        """Endpoint obligations this hypothesis explains when chosen."""
        kind = self.kind
        if kind in (HypothesisKind.ENTERS, HypothesisKind.PRESENT_AT_START):
            return ((self.tracks[0], Endpoint.START),)
        if kind in (HypothesisKind.EXITS, HypothesisKind.PRESENT_AT_END):
            return ((self.tracks[0], Endpoint.END),)
        if kind in (HypothesisKind.MISSING_DET, HypothesisKind.OCCLUDES):
            return ((self.tracks[0], Endpoint.END), (self.tracks[1], Endpoint.START))
        if kind is HypothesisKind.NOISE:
            return ((self.tracks[0], Endpoint.START), (self.tracks[0], Endpoint.END))
        return ()

    @property
    def is_link(self) -> bool:
        return self.kind in (HypothesisKind.MISSING_DET, HypothesisKind.OCCLUDES)

    def atom(self) -> str:
        args: list[str] = []
        if self.border is not None:
            args.append(self.border.token)
        args.extend(f"trk{t}" for t in self.tracks)
        if self.kind in (HypothesisKind.ENTERS, HypothesisKind.EXITS):
            args.append(str(self.span[0]))
        elif self.is_link:
            args.extend(str(t) for t in self.span)
        return f"{self.kind.value}({','.join(args)})."


@dataclass(frozen=True)
class EndpointObligation:
    """A tracklet start or end that the explanation must account for."""

    track_id: int
    which: Endpoint
    frame: int
    box: Box2D

    @property
    def key(self) -> tuple[int, Endpoint]:
        return (self.track_id, self.which)


def obligations_for(tracklets: list[Tracklet]) -> list[EndpointObligation]:
    obligations = []
    for t in sorted(tracklets, key=lambda t: t.id):
        obligations.append(EndpointObligation(t.id, Endpoint.START, t.start, t.boxes[0]))
        obligations.append(EndpointObligation(t.id, Endpoint.END, t.end, t.boxes[-1]))
    return obligations


def _link_candidates(
    tracklets: list[Tracklet], meta: SequenceMeta, cfg: Config
) -> set[Hypothesis]:
    """Missing-detection and occlusion candidates over all tracklet pairs."""
    links: set[Hypothesis] = set()
    for t1 in tracklets:
        for t2 in tracklets:
            gap = t2.start - t1.end
            if t1.id == t2.id or t1.class_label != t2.class_label:
                continue
            if not 0 < gap <= cfg.max_gap:
                continue
            span = (t1.end, t2.start)
            links.add(Hypothesis(HypothesisKind.MISSING_DET, (t1.id, t2.id), span=span))
            for t3 in tracklets:
                if t3.id in (t1.id, t2.id):
                    continue
                if not (t3.alive_at(t1.end) and t3.alive_at(t2.start)):
                    continue
                if rcc8_relation(t1.boxes[-1], t3.box_at(t1.end), cfg.eps) in _DISJOINT:
                    continue
                if rcc8_relation(t2.boxes[0], t3.box_at(t2.start), cfg.eps) in _DISJOINT:
                    continue
                links.add(
                    Hypothesis(HypothesisKind.OCCLUDES, (t1.id, t2.id, t3.id), span=span)
                )
    return links


def endpoint_candidates(
    ob: EndpointObligation,
    tracklets: list[Tracklet],
    meta: SequenceMeta,
    cfg: Config | None = None,
) -> set[Hypothesis]:
    """All hypotheses whose precondition holds at one endpoint."""
    cfg = cfg or Config()
    track = next(t for t in tracklets if t.id == ob.track_id)
    out: set[Hypothesis] = {
        Hypothesis(HypothesisKind.NOISE, (track.id,), span=(track.start, track.end))
    }

    border = border_contact(ob.box, meta.bounds)
    if ob.which is Endpoint.START:
        if ob.frame == 1:
            out.add(Hypothesis(HypothesisKind.PRESENT_AT_START, (track.id,)))
        if border is not None:
            out.add(
                Hypothesis(
                    HypothesisKind.ENTERS,
                    (track.id,),
                    span=(ob.frame, ob.frame),
                    border=border,
                )
            )
    else:
        if ob.frame == meta.frame_count:
            out.add(Hypothesis(HypothesisKind.PRESENT_AT_END, (track.id,)))
        if border is not None:
            out.add(
                Hypothesis(
                    HypothesisKind.EXITS,
                    (track.id,),
                    span=(ob.frame, ob.frame),
                    border=border,
                )
            )

    side = 1 if ob.which is Endpoint.START else 0
    for link in _link_candidates(tracklets, meta, cfg):
        if link.tracks[side] == track.id:
            out.add(link)
    return out


def belief_candidates(tracklets: list[Tracklet], cfg: Config | None = None) -> set[Hypothesis]:
    """Part-of candidates for part/whole class pairs, plus identity beliefs.

    A part tracklet may belong to a whole tracklet when, on at least
    ``containment_ratio`` of their shared frames, the part box lies
    (tangentially or not) inside the whole box.  Identity beliefs mirror
    the linkable same-class pairs and carry no cost; they are entailed by
    whichever link the solver picks.
    """
    cfg = cfg or Config()
    out: set[Hypothesis] = set()
    parts = [t for t in tracklets if t.class_label == cfg.part_class]
    wholes = [t for t in tracklets if t.class_label == cfg.whole_class]
    for part in parts:
        for whole in wholes:
            lo = max(part.start, whole.start)
            hi = min(part.end, whole.end)
            if lo > hi:
                continue
            shared = hi - lo + 1
            inside = sum(
                1
                for f in range(lo, hi + 1)
                if rcc8_relation(part.box_at(f), whole.box_at(f), cfg.eps) in _CONTAINED
            )
            if inside / shared >= cfg.containment_ratio:
                out.add(Hypothesis(HypothesisKind.BELONGS_TO, (part.id, whole.id)))

    for t1 in tracklets:
        for t2 in tracklets:
            if t1.id == t2.id or t1.class_label != t2.class_label:
                continue
            if 0 < t2.start - t1.end <= cfg.max_gap:
                out.add(Hypothesis(HypothesisKind.SAME_OBJECT, (t1.id, t2.id)))
    return out


def generate_candidates(
    tracklets: list[Tracklet], meta: SequenceMeta, cfg: Config | None = None
) -> tuple[
    list[EndpointObligation],
    dict[tuple[int, Endpoint], tuple[Hypothesis, ...]],
    tuple[Hypothesis, ...],
]:
    """Obligations, per-endpoint candidate sets, and belief candidates.

    Link candidates are computed once over all pairs, so a link emitted at
    an end is present, with identical grounding, at the paired start.
    """
    cfg = cfg or Config()
    obligations = obligations_for(tracklets)
    links = _link_candidates(tracklets, meta, cfg)
    by_id = {t.id: t for t in tracklets}

    candidates: dict[tuple[int, Endpoint], set[Hypothesis]] = {
        ob.key: set() for ob in obligations
    }
    for ob in obligations:
        track = by_id[ob.track_id]
        base = endpoint_candidates(ob, [track], meta, cfg)  # local, non-link candidates
        candidates[ob.key].update(base)
    for link in links:
        candidates[(link.tracks[0], Endpoint.END)].add(link)
        candidates[(link.tracks[1], Endpoint.START)].add(link)

    frozen = {
        key: tuple(sorted(values, key=lambda h: h.sort_key))
        for key, values in candidates.items()
    }
    beliefs = tuple(sorted(belief_candidates(tracklets, cfg), key=lambda h: h.sort_key))
    return obligations, frozen, beliefs
