import pytest
from conftest import straight

from abtrack.geometry import Box2D
from abtrack.metrics import clear_mot, format_report_kv, format_report_table
from abtrack.synth import OBSERVED, ObjectTrack


def track(obj_id, start, boxes, cls="person"):
    return ObjectTrack(
        object_id=obj_id,
        class_label=cls,
        start=start,
        boxes=tuple(boxes),
        provenance=(OBSERVED,) * len(boxes),
    )


def static(obj_id, start, end, x, y, w=10.0, h=10.0, cls="person"):
    return track(obj_id, start, [Box2D(x, y, w, h)] * (end - start + 1), cls=cls)


class TestPerfectTracking:
    def test_identity(self):
        gt = [static(1, 1, 5, 0, 0), static(2, 1, 5, 100, 0)]
        hyp = [static(7, 1, 5, 0, 0), static(9, 1, 5, 100, 0)]
        report = clear_mot(hyp, gt)
        assert report.mota == 1.0
        assert report.motp == 1.0
        assert (report.fp, report.misses, report.mismatches) == (0, 0, 0)
        assert report.track_precision == 1.0
        assert report.track_recall == 1.0

    def test_removing_one_box_adds_exactly_one_miss(self):
        gt = [static(1, 1, 5, 0, 0)]
        hyp_full = [static(1, 1, 5, 0, 0)]
        hyp_holed = [static(1, 1, 2, 0, 0), static(1, 4, 5, 0, 0)]
        # same id on both fragments: identity is preserved, one frame missing
        full = clear_mot(hyp_full, gt)
        holed = clear_mot(hyp_holed, gt)
        assert holed.misses == full.misses + 1
        assert holed.mismatches == 0
        assert holed.fp == full.fp


class TestHandComputedScene:
    def build(self):
        # 5 frames, 2 truth objects, 10 truth boxes total:
        #   g1 tracked by h1 (frames 1-3) then h3 (frames 4-5): 1 mismatch
        #   g2 tracked by h2 on frames 1-3 only: 2 misses
        #   h4 is a 1-frame false positive
        gt = [static(1, 1, 5, 0, 0), static(2, 1, 5, 100, 0)]
        hyp = [
            static(1, 1, 3, 0, 0),
            static(2, 1, 3, 100, 0),
            static(3, 4, 5, 0, 0),
            static(4, 2, 2, 500, 500),
        ]
        return hyp, gt

    def test_counts_and_mota(self):
        hyp, gt = self.build()
        report = clear_mot(hyp, gt)
        assert report.gt_total == 10
        assert report.misses == 2
        assert report.fp == 1
        assert report.mismatches == 1
        assert report.mota == pytest.approx(0.6)
        assert report.motp == 1.0

    def test_mismatch_recoverability_split(self):
        hyp, gt = self.build()
        report = clear_mot(hyp, gt)
        # h1 never re-acquires g1 after the switch
        assert report.mismatches_non_recoverable == 1
        assert report.mismatches_recoverable == 0

    def test_recoverable_switch(self):
        gt = [static(1, 1, 6, 0, 0)]
        hyp = [
            track(1, 1, [Box2D(0, 0, 10, 10)] * 2 + [Box2D(300, 300, 10, 10)] * 2
                  + [Box2D(0, 0, 10, 10)] * 2),
            static(2, 3, 4, 0, 0),
        ]
        report = clear_mot(hyp, gt)
        # g1: h1 (1-2), h2 (3-4), h1 again (5-6) -> two switches, first recoverable
        assert report.mismatches == 2
        assert report.mismatches_recoverable == 1
        assert report.mismatches_non_recoverable == 1


class TestEdgeCases:
    def test_empty_hypothesis_all_missed(self):
        gt = [static(1, 1, 5, 0, 0), static(2, 1, 5, 100, 0)]
        report = clear_mot([], gt)
        assert report.mota == 0.0
        assert report.misses == 10
        assert report.track_recall == 0.0
        assert report.track_precision is None

    def test_empty_gt_flags_undefined_mota(self):
        hyp = [static(1, 1, 3, 0, 0)]
        report = clear_mot(hyp, [])
        assert report.gt_total == 0
        assert report.mota is None
        assert report.fp == 3
        assert "mota = undefined" in format_report_kv(report)

    def test_threshold_validation(self):
        with pytest.raises(ValueError):
            clear_mot([], [], iou_threshold=0.0)
        with pytest.raises(ValueError):
            clear_mot([], [], iou_threshold=1.0)


class TestInvariances:
    def build_noisy(self):
        gt = [static(1, 1, 8, 0, 0), static(2, 1, 8, 60, 0)]
        hyp = [
            static(11, 1, 4, 0, 0),
            static(12, 5, 8, 0.5, 0.5),
            static(13, 1, 8, 60, 0),
        ]
        return hyp, gt

    def test_motp_and_mismatches_invariant_under_relabeling(self):
        hyp, gt = self.build_noisy()
        base = clear_mot(hyp, gt)
        relabeled = [
            ObjectTrack(
                object_id=t.object_id + 100,
                class_label=t.class_label,
                start=t.start,
                boxes=t.boxes,
                provenance=t.provenance,
            )
            for t in hyp
        ]
        again = clear_mot(relabeled, gt)
        assert again.motp == base.motp
        assert again.mismatches == base.mismatches
        assert again.mota == base.mota

    def test_single_id_switch_costs_exactly_one_mismatch(self):
        gt = [static(1, 1, 10, 0, 0)]
        perfect = [static(1, 1, 10, 0, 0)]
        switched = [static(1, 1, 5, 0, 0), static(2, 6, 10, 0, 0)]
        assert clear_mot(perfect, gt).mismatches == 0
        report = clear_mot(switched, gt)
        assert report.mismatches == 1
        assert report.misses == 0 and report.fp == 0
        assert report.mota == pytest.approx(0.9)


class TestFormatting:
    def test_kv_lines(self):
        gt = [static(1, 1, 5, 0, 0)]
        report = clear_mot(gt, gt)
        text = format_report_kv(report)
        assert "mota = 1.000" in text
        assert "mismatches = 0" in text

    def test_table_alignment(self):
        gt = [static(1, 1, 5, 0, 0)]
        table = format_report_table(clear_mot(gt, gt))
        assert "MOTA" in table and "1.000" in table
