"""Shared fixture builders for solver and acceptance tests."""

import random

from abtrack.config import Config
from abtrack.geometry import Box2D, FrameBounds
from abtrack.ingest import SequenceMeta
from abtrack.tracker import Tracklet


def meta_for(frame_count=100, width=1920.0, height=1080.0, margin=20.0) -> SequenceMeta:
    return SequenceMeta("t", frame_count, FrameBounds(width, height, margin))


def straight(tid, cls, start, end, x0, y0, vx=0.0, vy=0.0, w=30.0, h=50.0) -> Tracklet:
    boxes = tuple(Box2D(x0 + vx * k, y0 + vy * k, w, h) for k in range(end - start + 1))
    return Tracklet(id=tid, class_label=cls, start=start, boxes=boxes)


def random_instance(seed: int, max_tracklets: int = 6):
    """A small random scene: tracklets, metadata, and a configuration.

    Sized so that the exhaustive reference solver stays tractable
    (at most 2 * max_tracklets endpoint obligations).
    """
    rng = random.Random(seed)
    frame_count = rng.randint(25, 45)
    meta = meta_for(frame_count, width=800.0, height=600.0)
    inject_tie = rng.random() < 0.3
    count = rng.randint(1, 3) if inject_tie else rng.randint(2, max_tracklets - 1)
    snap = rng.random() < 0.5  # integer geometry makes exact cost ties possible

    def coord(lo, hi):
        value = rng.uniform(lo, hi)
        return float(round(value)) if snap else value

    tracklets = []
    for tid in range(1, count + 1):
        start = rng.randint(1, frame_count - 4)
        end = min(frame_count, start + rng.randint(0, 14))
        cls = rng.choice(["person", "person", "person", "face"])
        near_border = rng.random() < 0.3
        x0 = coord(0, 40) if near_border else coord(60, 700)
        tracklets.append(
            straight(
                tid,
                cls,
                start,
                end,
                x0,
                coord(30, 520),
                vx=coord(-9, 9),
                vy=coord(-4, 4),
                w=coord(15, 60) or 15.0,
                h=coord(20, 70) or 20.0,
            )
        )
    if inject_tie:
        # two co-located fragments on each side of a gap: the straight and
        # the crossed pairing cost exactly the same, so optima come in pairs
        cut = rng.randint(8, frame_count - 10)
        resume = cut + rng.randint(1, 5)
        x, y = float(rng.randint(100, 600)), float(rng.randint(50, 450))
        for offset in range(2):
            tracklets.append(
                straight(count + 1 + offset, "person", 1, cut, x, y, w=20.0, h=30.0)
            )
        for offset in range(2):
            tracklets.append(
                straight(count + 3 + offset, "person", resume, frame_count, x, y, w=20.0, h=30.0)
            )
    cfg = Config(max_gap=rng.choice([10, 25, 50]))
    return tracklets, meta, cfg
