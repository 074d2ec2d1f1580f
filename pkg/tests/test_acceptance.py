"""Acceptance criteria, one test per criterion, each printing a verdict line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines.
"""

import itertools
import random
import time

import numpy as np
import pytest
from conftest import random_instance

from abtrack.abduce import generate_candidates
from abtrack.cli import main
from abtrack.config import Config
from abtrack.geometry import Box2D, interpolate_box, iou, rcc8_relation
from abtrack.metrics import clear_mot
from abtrack.solve import brute_force_solve, solve
from abtrack.synth import ObjectTrack, synthesize_tracks
from abtrack.synthetic import crossing_scene, make_scene
from abtrack.tracker import build_tracklets, min_cost_assignment
from test_metrics import static


def report_line(number, name, started):
    print(f"ACCEPTANCE {number} ({name}): PASS in {time.perf_counter() - started:.1f}s")


def run_pipeline(scene, cfg=None):
    cfg = cfg or Config()
    tracklets = build_tracklets(scene.detections(), scene.meta(), cfg)
    obligations, candidates, beliefs = generate_candidates(tracklets, scene.meta(), cfg)
    explanations = solve(
        obligations, candidates, tracklets, cfg.weights,
        beliefs=beliefs, max_optima=cfg.max_optima,
    )
    tracks = synthesize_tracks(explanations[0], tracklets)
    return tracklets, explanations, tracks


def test_c1_solver_matches_exhaustive_oracle_on_100_instances():
    started = time.perf_counter()
    multi = 0
    for seed in range(100):
        tracklets, meta, cfg = random_instance(seed)
        obligations, candidates, beliefs = generate_candidates(tracklets, meta, cfg)
        assert len(obligations) <= 14
        fast = solve(obligations, candidates, tracklets, cfg.weights, beliefs=beliefs)
        slow = brute_force_solve(
            obligations, candidates, tracklets, cfg.weights, beliefs=beliefs
        )
        assert [e.total_cost for e in fast] == [e.total_cost for e in slow], f"seed {seed}"
        assert [e.chosen for e in fast] == [e.chosen for e in slow], f"seed {seed}"
        if len(fast) > 1:
            multi += 1
    elapsed = time.perf_counter() - started
    assert multi >= 10, "tie coverage lost"
    assert elapsed < 60.0
    report_line(1, "solver equals exhaustive oracle on 100 instances", started)


def test_c2_crossing_occlusion_is_fully_repaired():
    started = time.perf_counter()
    scene = crossing_scene(seed=7, frames=107)
    gt = scene.ground_truth()
    tracklets, explanations, tracks = run_pipeline(scene)

    plain = clear_mot([ObjectTrack.from_tracklet(t) for t in tracklets], gt)
    assert plain.mismatches >= 1
    assert plain.mota < 1.0

    repaired = clear_mot(tracks, gt)
    assert repaired.mota == 1.0
    assert repaired.mismatches == 0
    elapsed = time.perf_counter() - started
    assert elapsed < 10.0
    report_line(2, "crossing occlusion repaired to 100% accuracy", started)


def test_c3_stress_scene_improves_accuracy_and_identity():
    started = time.perf_counter()
    scene = make_scene(objects=12, frames=150, occlusions=1, seed=11, drop_prob=0.03)
    gt = scene.ground_truth()
    assert len(gt) >= 10
    tracklets, explanations, tracks = run_pipeline(scene)

    plain = clear_mot([ObjectTrack.from_tracklet(t) for t in tracklets], gt)
    repaired = clear_mot(tracks, gt)
    assert plain.mismatches > 0
    assert repaired.mota >= plain.mota
    reduction = (plain.mismatches - repaired.mismatches) / plain.mismatches
    assert reduction >= 0.30
    elapsed = time.perf_counter() - started
    assert elapsed < 60.0
    report_line(3, f"stress scene: mismatches cut {reduction:.0%}", started)


def test_c4_geometry_suite():
    started = time.perf_counter()
    rng = random.Random(20250809)
    for _ in range(10_000):
        a = Box2D(rng.uniform(0, 50), rng.uniform(0, 50), rng.uniform(1, 30), rng.uniform(1, 30))
        if rng.random() < 0.25:
            b = Box2D(a.x, a.y, a.w, a.h)
        else:
            b = Box2D(rng.uniform(0, 50), rng.uniform(0, 50), rng.uniform(1, 30), rng.uniform(1, 30))
        forward = rcc8_relation(a, b)
        assert rcc8_relation(b, a) is forward.converse()

    for _ in range(500):
        b1 = Box2D(rng.uniform(0, 500), rng.uniform(0, 500), rng.uniform(1, 90), rng.uniform(1, 90))
        b2 = Box2D(rng.uniform(0, 500), rng.uniform(0, 500), rng.uniform(1, 90), rng.uniform(1, 90))
        assert interpolate_box(b1, 3, b2, 9, 3) == b1
        assert interpolate_box(b1, 3, b2, 9, 9) == b2
        v = iou(b1, b2)
        assert 0.0 <= v <= 1.0
        assert v == iou(b2, b1)
        assert iou(b1, b1) == 1.0
    report_line(4, "geometry relations, interpolation, overlap", started)


def test_c5_tracker_suite():
    started = time.perf_counter()
    rng = np.random.RandomState(31)
    for _ in range(200):
        n = rng.randint(1, 7)
        cost = rng.uniform(0, 10, size=(n, n))
        pairs = min_cost_assignment(cost, gate=1e9)
        total = sum(cost[r, c] for r, c in pairs)
        oracle = min(
            sum(cost[i, p[i]] for i in range(n))
            for p in itertools.permutations(range(n))
        )
        assert len(pairs) == n
        assert abs(total - oracle) < 1e-9

    # noiseless linear motion: the tracker's predictions lock on exactly
    cfg = Config(q_pos=0.0, q_vel=0.0, r_meas=0.0)
    from abtrack.ingest import Detection
    from conftest import meta_for

    truth = [Box2D(60 + 9 * k, 400 - 2 * k, 25, 45) for k in range(12)]
    dets = [Detection(frame=k + 1, id=None, box=b, confidence=1.0) for k, b in enumerate(truth)]
    tracklets = build_tracklets(dets, meta_for(12), cfg)
    assert len(tracklets) == 1
    assert tracklets[0].boxes == tuple(truth)

    # conservation on both acceptance scenes
    for scene in (crossing_scene(seed=7), make_scene(12, 150, 1, seed=11, drop_prob=0.03)):
        detections = scene.detections()
        tracklets = build_tracklets(detections, scene.meta(), Config())
        produced = sorted(
            (t.start + i, box.x, box.y, box.w, box.h)
            for t in tracklets
            for i, box in enumerate(t.boxes)
        )
        expected = sorted((d.frame, d.box.x, d.box.y, d.box.w, d.box.h) for d in detections)
        assert produced == expected
        for t in tracklets:
            assert len(t.boxes) == t.end - t.start + 1
    report_line(5, "assignment optimality, exact prediction, conservation", started)


def test_c6_clear_mot_suite():
    started = time.perf_counter()
    gt = [static(1, 1, 5, 0, 0), static(2, 1, 5, 100, 0)]
    hyp = [
        static(1, 1, 3, 0, 0),
        static(2, 1, 3, 100, 0),
        static(3, 4, 5, 0, 0),
        static(4, 2, 2, 500, 500),
    ]
    report = clear_mot(hyp, gt)
    assert report.gt_total == 10
    assert (report.misses, report.fp, report.mismatches) == (2, 1, 1)
    assert report.mota == pytest.approx(0.6)

    perfect = clear_mot(gt, gt)
    assert perfect.mota == 1.0
    assert perfect.motp == 1.0
    assert (perfect.fp, perfect.misses, perfect.mismatches) == (0, 0, 0)
    report_line(6, "hand-computed CLEAR metrics match", started)


def test_c7_eleven_tracklet_scene_enumerates_quickly():
    started = time.perf_counter()
    scene = make_scene(objects=3, frames=110, occlusions=1, seed=3, drop_prob=0.02)
    cfg = Config()
    tracklets = build_tracklets(scene.detections(), scene.meta(), cfg)
    assert len(tracklets) == 11
    obligations, candidates, beliefs = generate_candidates(tracklets, scene.meta(), cfg)
    explanations = solve(
        obligations, candidates, tracklets, cfg.weights,
        beliefs=beliefs, max_optima=cfg.max_optima,
    )
    assert explanations
    elapsed = time.perf_counter() - started
    assert elapsed < 10.0
    report_line(7, f"11-tracklet scene, {len(explanations)} optimal model(s)", started)


def test_c8_pipeline_is_deterministic(tmp_path):
    started = time.perf_counter()
    scene_dir = tmp_path / "scene"
    argv = ["gen", "--seed", "7", "--objects", "2", "--frames", "107",
            "--occlusions", "1", "--out", str(scene_dir)]
    assert main(argv) == 0

    snapshots = []
    for name in ("one", "two"):
        out = tmp_path / name
        code = main([
            "pipeline", "--det", str(scene_dir / "det.csv"),
            "--meta", str(scene_dir / "seq.meta"),
            "--gt", str(scene_dir / "gt.csv"), "--out", str(out),
        ])
        assert code == 0
        snapshots.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
    assert snapshots[0] == snapshots[1]
    assert set(snapshots[0]) == {
        "tracklets.csv", "explanation.atoms", "tracks.csv", "complex.atoms", "report.txt",
    }
    report_line(8, "byte-identical artifacts across runs", started)
