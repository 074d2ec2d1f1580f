"""Minimum-cost selection of a consistent hypothesis set.

Consistency means: every tracklet endpoint obligation is covered exactly
once, a link chosen at one end is the same hypothesis covering the paired
start, declaring a tracklet noise covers both of its endpoints at once,
and a part-class tracklet that is not noise carries exactly one part-of
belief.  The cost of a selection is the sum of event costs plus the
motion cost of every chosen link; all selections of minimal cost are
returned.

``solve`` first splits the obligations into independent components (two
obligations interact only if some candidate covers both), then runs an
exact branch-and-bound per component.  The lower bound charges each
uncovered obligation the cheapest cost share among its candidates, a
candidate's cost divided by the number of obligations it covers, which
never overestimates the remaining cost.  ``brute_force_solve`` is the
plain exhaustive reference for the same semantics.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

from .abduce import Endpoint, EndpointObligation, Hypothesis, HypothesisKind
from .config import CostWeights
from .tracker import Tracklet

__all__ = [
    "Explanation",
    "CapExceededError",
    "BRUTE_FORCE_LIMIT",
    "hypothesis_cost",
    "motion_cost",
    "effective_cost",
    "selection_cost",
    "solve",
    "brute_force_solve",
]

BRUTE_FORCE_LIMIT = 14
_BOUND_SLACK = 1e-9

Key = tuple[int, Endpoint]
CandidateMap = Mapping[Key, Sequence[Hypothesis]]


class CapExceededError(RuntimeError):
    """More optimal explanations than the configured enumeration cap."""


@dataclass(frozen=True)
class Explanation:
    """A consistent hypothesis selection with its total cost."""

    chosen: frozenset[Hypothesis]
    total_cost: float

    def sorted_hypotheses(self) -> list[Hypothesis]:
        return sorted(self.chosen, key=lambda h: h.sort_key)

    @property
    def encoding(self) -> tuple:
        return tuple(h.sort_key for h in self.sorted_hypotheses())


def hypothesis_cost(h: Hypothesis, w: CostWeights) -> float:
    """Base cost plus the per-frame duration term of one hypothesis."""
    kind = h.kind
    if kind is HypothesisKind.ENTERS:
        return w.w_enter
    if kind is HypothesisKind.EXITS:
        return w.w_exit
    if kind is HypothesisKind.MISSING_DET:
        return w.w_md + w.w_md_len * (h.span[1] - h.span[0])
    if kind is HypothesisKind.OCCLUDES:
        return w.w_occl + w.w_occl_len * (h.span[1] - h.span[0])
    if kind is HypothesisKind.NOISE:
        return w.w_noise + w.w_noise_len * (h.span[1] - h.span[0] + 1)
    return 0.0


def _segment_velocity(track: Tracklet, tail: bool) -> tuple[float, float]:
    k = min(5, track.length)
    if k < 2:
        return (0.0, 0.0)
    if tail:
        a, b = track.boxes[-k].center, track.boxes[-1].center
    else:
        a, b = track.boxes[0].center, track.boxes[k - 1].center
    return ((b.x - a.x) / (k - 1), (b.y - a.y) / (k - 1))


def motion_cost(
    link: Hypothesis,
    tracks: Iterable[Tracklet] | Mapping[int, Tracklet],
    w: CostWeights,
) -> float:
    """Constant-velocity discrepancy of a link.

    Compares the outgoing velocity of the first tracklet and the incoming
    velocity of the second against the velocity implied by crossing the
    gap between their junction boxes.
    """
    if not link.is_link:
        raise ValueError(f"motion cost is defined for links, not {link.kind.value}")
    by_id = tracks if isinstance(tracks, Mapping) else {t.id: t for t in tracks}
    t1, t2 = by_id[link.tracks[0]], by_id[link.tracks[1]]
    gap = t2.start - t1.end
    if gap <= 0:
        raise ValueError(f"link needs a positive gap, got {gap}")
    c1, c2 = t1.boxes[-1].center, t2.boxes[0].center
    v_gap = ((c2.x - c1.x) / gap, (c2.y - c1.y) / gap)
    v1 = _segment_velocity(t1, tail=True)
    v2 = _segment_velocity(t2, tail=False)
    return w.w_v * (
        math.hypot(v1[0] - v_gap[0], v1[1] - v_gap[1])
        + math.hypot(v2[0] - v_gap[0], v2[1] - v_gap[1])
    )


def effective_cost(
    h: Hypothesis,
    tracks: Iterable[Tracklet] | Mapping[int, Tracklet],
    w: CostWeights,
) -> float:
    cost = hypothesis_cost(h, w)
    if h.is_link:
        cost += motion_cost(h, tracks, w)
    return cost


def selection_cost(
    chosen: Iterable[Hypothesis],
    tracks: Iterable[Tracklet] | Mapping[int, Tracklet],
    w: CostWeights,
) -> float:
    """Canonical total cost: exact sum over the canonically sorted selection."""
    by_id = tracks if isinstance(tracks, Mapping) else {t.id: t for t in tracks}
    ordered = sorted(chosen, key=lambda h: h.sort_key)
    return math.fsum(effective_cost(h, by_id, w) for h in ordered)


# --- shared machinery ------------------------------------------------------


def _validate(obligations: Sequence[EndpointObligation], candidates: CandidateMap) -> set[Key]:
    keys = {ob.key for ob in obligations}
    if len(keys) != len(obligations):
        raise ValueError("duplicate endpoint obligations")
    for ob in obligations:
        if not candidates.get(ob.key):
            raise ValueError(f"obligation {ob.key} has no candidates")
    for key, hyps in candidates.items():
        if key not in keys:
            raise ValueError(f"candidates given for unknown obligation {key}")
        for h in hyps:
            cover = h.covers()
            if key not in cover:
                raise ValueError(f"{h} listed at {key} but does not cover it")
            for other in cover:
                if other != key and other in keys and h not in candidates.get(other, ()):
                    raise ValueError(f"mirroring violated: {h} missing at {other}")
    return keys


def _restricted_cover(h: Hypothesis, keys: set[Key]) -> tuple[Key, ...]:
    return tuple(c for c in h.covers() if c in keys)


def _face_options(
    tracks: Mapping[int, Tracklet],
    beliefs: Sequence[Hypothesis],
    part_class: str,
) -> dict[int, list[Hypothesis]]:
    options: dict[int, list[Hypothesis]] = {
        tid: [] for tid, t in tracks.items() if t.class_label == part_class
    }
    for b in beliefs:
        if b.kind is HypothesisKind.BELONGS_TO and b.tracks[0] in options:
            options[b.tracks[0]].append(b)
    for choice in options.values():
        choice.sort(key=lambda h: h.sort_key)
    return options


def _belief_extensions(
    chosen: Sequence[Hypothesis],
    face_ids: Sequence[int],
    options: Mapping[int, list[Hypothesis]],
    require: bool,
) -> list[tuple[Hypothesis, ...]] | None:
    """Part-of choices consistent with a complete cover, or None if impossible."""
    noisy = {
        h.tracks[0] for h in chosen if h.kind is HypothesisKind.NOISE
    }
    pools: list[list[tuple[Hypothesis, ...]]] = []
    for tid in face_ids:
        if tid in noisy or not require:
            continue
        own = options.get(tid, [])
        if not own:
            return None
        pools.append([(b,) for b in own])
    if not pools:
        return [()]
    return [tuple(itertools.chain.from_iterable(combo)) for combo in itertools.product(*pools)]


def _entailed_identities(chosen: Iterable[Hypothesis]) -> set[Hypothesis]:
    return {
        Hypothesis(HypothesisKind.SAME_OBJECT, (h.tracks[0], h.tracks[1]))
        for h in chosen
        if h.is_link
    }


def _finalize(
    selections: Iterable[tuple[Hypothesis, ...]],
    tracks: Mapping[int, Tracklet],
    w: CostWeights,
) -> list[Explanation]:
    explanations = []
    for chosen in selections:
        full = frozenset(chosen) | _entailed_identities(chosen)
        explanations.append(Explanation(full, selection_cost(full, tracks, w)))
    explanations.sort(key=lambda e: e.encoding)
    return explanations


def _as_track_map(tracks) -> dict[int, Tracklet]:
    return dict(tracks) if isinstance(tracks, Mapping) else {t.id: t for t in tracks}


# --- exhaustive reference ---------------------------------------------------


def brute_force_solve(
    obligations: Sequence[EndpointObligation],
    candidates: CandidateMap,
    tracks,
    w: CostWeights,
    *,
    beliefs: Sequence[Hypothesis] = (),
    max_optima: int | None = None,
    part_class: str = "face",
    require_part_whole: bool = True,
) -> list[Explanation]:
    """Enumerate every consistent selection and keep the cheapest ones."""
    if len(obligations) > BRUTE_FORCE_LIMIT:
        raise ValueError(
            f"brute force is limited to {BRUTE_FORCE_LIMIT} obligations, got {len(obligations)}"
        )
    keys = _validate(obligations, candidates)
    by_id = _as_track_map(tracks)
    eff = {
        h: effective_cost(h, by_id, w)
        for hyps in candidates.values()
        for h in hyps
    }
    order = sorted(keys)
    options = _face_options(by_id, beliefs, part_class)
    face_ids = sorted(options)

    complete: list[tuple[tuple[Hypothesis, ...], float]] = []

    def descend(covered: set[Key], chosen: tuple[Hypothesis, ...]) -> None:
        pending = [key for key in order if key not in covered]
        if not pending:
            extensions = _belief_extensions(chosen, face_ids, options, require_part_whole)
            if extensions is None:
                return
            cost = math.fsum(sorted(eff[h] for h in chosen))
            for ext in extensions:
                complete.append((chosen + ext, cost))
            return
        key = pending[0]
        for h in sorted(candidates[key], key=lambda h: h.sort_key):
            cover = _restricted_cover(h, keys)
            if any(c in covered for c in cover):
                continue
            descend(covered | set(cover), chosen + (h,))

    descend(set(), ())
    if not complete:
        return []
    best = min(cost for _, cost in complete)
    optima = [chosen for chosen, cost in complete if cost == best]
    if max_optima is not None and len(optima) > max_optima:
        raise CapExceededError(f"{len(optima)} optima exceed cap {max_optima}")
    return _finalize(optima, by_id, w)


# --- branch and bound --------------------------------------------------------


def _components(keys: set[Key], candidates: CandidateMap) -> list[list[Key]]:
    parent = {key: key for key in keys}

    def find(key: Key) -> Key:
        while parent[key] != key:
            parent[key] = parent[parent[key]]
            key = parent[key]
        return key

    def union(a: Key, b: Key) -> None:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb

    for hyps in candidates.values():
        for h in hyps:
            cover = _restricted_cover(h, keys)
            for a, b in zip(cover, cover[1:]):
                union(a, b)

    groups: dict[Key, list[Key]] = {}
    for key in keys:
        groups.setdefault(find(key), []).append(key)
    return sorted((sorted(g) for g in groups.values()), key=lambda g: g[0])


def _component_optima(
    comp_keys: list[Key],
    keys: set[Key],
    candidates: CandidateMap,
    eff: Callable[[Hypothesis], float],
    face_ids: Sequence[int],
    options: Mapping[int, list[Hypothesis]],
    require: bool,
    cap: int | None,
) -> list[tuple[tuple[Hypothesis, ...], float]]:
    order = comp_keys
    ranked: dict[Key, list[tuple[float, Hypothesis, tuple[Key, ...]]]] = {}
    share: dict[Key, float] = {}
    for key in order:
        rows = []
        for h in candidates[key]:
            cover = _restricted_cover(h, keys)
            rows.append((eff(h), h, cover))
        rows.sort(key=lambda row: (row[0], row[1].sort_key))
        ranked[key] = rows
        share[key] = min(cost / len(cover) for cost, _, cover in rows)

    local_faces = [tid for tid in face_ids if (tid, Endpoint.START) in set(order)]
    best = math.inf
    solutions: list[tuple[tuple[Hypothesis, ...], float]] = []

    def complete(chosen: tuple[Hypothesis, ...]) -> None:
        nonlocal best, solutions
        extensions = _belief_extensions(chosen, local_faces, options, require)
        if extensions is None:
            return
        cost = math.fsum(sorted(eff(h) for h in chosen))
        if cost > best + _BOUND_SLACK:
            return
        if cost < best:
            best = cost
            solutions = [(sel, c) for sel, c in solutions if c <= best]
        for ext in extensions:
            solutions.append((chosen + ext, cost))
        if cap is not None and len([1 for _, c in solutions if c == best]) > cap:
            raise CapExceededError(f"optimal model count exceeds cap {cap}")

    def descend(
        pos: int,
        covered: set[Key],
        running: float,
        remaining_share: float,
        chosen: tuple[Hypothesis, ...],
    ) -> None:
        while pos < len(order) and order[pos] in covered:
            pos += 1
        if pos == len(order):
            complete(chosen)
            return
        key = order[pos]
        for cost, h, cover in ranked[key]:
            if any(c in covered for c in cover):
                continue
            rest = remaining_share - sum(share[c] for c in cover)
            if running + cost + rest > best + _BOUND_SLACK:
                continue
            descend(pos + 1, covered | set(cover), running + cost, rest, chosen + (h,))

    descend(0, set(), 0.0, sum(share.values()), ())
    return [(sel, c) for sel, c in solutions if c == best]


def solve(
    obligations: Sequence[EndpointObligation],
    candidates: CandidateMap,
    tracks,
    w: CostWeights,
    *,
    beliefs: Sequence[Hypothesis] = (),
    max_optima: int | None = None,
    part_class: str = "face",
    require_part_whole: bool = True,
) -> list[Explanation]:
    """All minimum-cost consistent explanations, in canonical order.

    Raises :class:`CapExceededError` instead of truncating when more than
    ``max_optima`` optimal models exist.
    """
    keys = _validate(obligations, candidates)
    by_id = _as_track_map(tracks)
    cache: dict[Hypothesis, float] = {}

    def eff(h: Hypothesis) -> float:
        if h not in cache:
            cache[h] = effective_cost(h, by_id, w)
        return cache[h]

    options = _face_options(by_id, beliefs, part_class)
    face_ids = sorted(options)

    per_component: list[list[tuple[Hypothesis, ...]]] = []
    for comp in _components(keys, candidates):
        optima = _component_optima(
            comp, keys, candidates, eff, face_ids, options, require_part_whole, max_optima
        )
        if not optima:
            return []
        per_component.append([sel for sel, _ in optima])

    total = 1
    for block in per_component:
        total *= len(block)
    if max_optima is not None and total > max_optima:
        raise CapExceededError(f"{total} optimal models exceed cap {max_optima}")

    if not per_component:
        selections: list[tuple[Hypothesis, ...]] = [()]
    else:
        selections = [
            tuple(itertools.chain.from_iterable(combo))
            for combo in itertools.product(*per_component)
        ]
    return _finalize(selections, by_id, w)
