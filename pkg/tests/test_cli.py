from pathlib import Path

import pytest
from conftest import straight

from abtrack.abduce import Hypothesis, HypothesisKind
from abtrack.cli import (
    format_all_optima,
    format_explanation_atoms,
    main,
    parse_atoms,
)
from abtrack.geometry import Border
from abtrack.solve import Explanation

K = HypothesisKind


def run(*argv) -> int:
    return main([str(a) for a in argv])


@pytest.fixture()
def scene_dir(tmp_path):
    out = tmp_path / "scene"
    assert run("gen", "--seed", 7, "--objects", 2, "--frames", 107,
               "--occlusions", 1, "--out", out) == 0
    return out


class TestAtoms:
    def test_formats_match_predicate_shapes(self):
        expl = Explanation(
            frozenset(
                {
                    Hypothesis(K.OCCLUDES, (3, 7, 5), span=(102, 143)),
                    Hypothesis(K.ENTERS, (1,), span=(17, 17), border=Border.LEFT),
                    Hypothesis(K.NOISE, (9,), span=(4, 6)),
                    Hypothesis(K.SAME_OBJECT, (3, 7)),
                    Hypothesis(K.PRESENT_AT_END, (2,)),
                }
            ),
            0.0,
        )
        text = format_explanation_atoms(expl)
        assert "occludes(trk3,trk7,trk5,102,143).\n" in text
        assert "enters(left,trk1,17).\n" in text
        assert "noise(trk9).\n" in text
        assert "same_object(trk3,trk7).\n" in text
        assert "present_at_end(trk2).\n" in text

    def test_round_trip(self):
        hyps = [
            Hypothesis(K.MISSING_DET, (1, 2), span=(10, 14)),
            Hypothesis(K.EXITS, (4,), span=(99, 99), border=Border.RIGHT),
            Hypothesis(K.BELONGS_TO, (5, 6)),
            Hypothesis(K.PRESENT_AT_START, (1,)),
        ]
        text = "".join(h.atom() + "\n" for h in hyps)
        assert sorted(parse_atoms(text), key=lambda h: h.sort_key) == sorted(
            hyps, key=lambda h: h.sort_key
        )

    def test_noise_atom_drops_span_and_parse_restores_none(self):
        noise = Hypothesis(K.NOISE, (9,), span=(4, 6))
        parsed = parse_atoms(noise.atom())
        assert parsed == [Hypothesis(K.NOISE, (9,), span=None)]

    def test_multi_model_file_parses_first_model(self):
        a = Explanation(frozenset({Hypothesis(K.PRESENT_AT_START, (1,))}), 0.0)
        b = Explanation(frozenset({Hypothesis(K.PRESENT_AT_END, (1,))}), 0.0)
        text = format_all_optima([a, b])
        assert parse_atoms(text) == [Hypothesis(K.PRESENT_AT_START, (1,))]

    def test_bad_atom_rejected(self):
        with pytest.raises(ValueError, match="unparseable"):
            parse_atoms("nonsense without parens\n")
        with pytest.raises(ValueError, match="unknown predicate"):
            parse_atoms("teleports(trk1).\n")


class TestGen:
    def test_writes_expected_files(self, scene_dir):
        assert (scene_dir / "det.csv").exists()
        assert (scene_dir / "gt.csv").exists()
        assert (scene_dir / "seq.meta").exists()

    def test_byte_identical_across_runs(self, tmp_path):
        a = tmp_path / "a"
        b = tmp_path / "b"
        for out in (a, b):
            assert run("gen", "--seed", 7, "--objects", 2, "--frames", 107,
                       "--occlusions", 1, "--out", out) == 0
        for name in ("det.csv", "gt.csv", "seq.meta"):
            assert (a / name).read_bytes() == (b / name).read_bytes()


class TestPipeline:
    def test_artifacts_and_stage_round_trip(self, scene_dir, tmp_path):
        pipe = tmp_path / "pipe"
        assert run(
            "pipeline", "--det", scene_dir / "det.csv", "--meta", scene_dir / "seq.meta",
            "--gt", scene_dir / "gt.csv", "--out", pipe,
        ) == 0
        for name in ("tracklets.csv", "explanation.atoms", "tracks.csv",
                     "complex.atoms", "report.txt"):
            assert (pipe / name).exists(), name
        assert "mota = 1.000" in (pipe / "report.txt").read_text()
        assert "passing_behind(obj1,obj2," in (pipe / "complex.atoms").read_text()

        # the same artifacts fall out of running the stages one by one
        stages = tmp_path / "stages"
        assert run("track", "--det", scene_dir / "det.csv",
                   "--meta", scene_dir / "seq.meta", "--out", stages) == 0
        assert (stages / "tracklets.csv").read_bytes() == (pipe / "tracklets.csv").read_bytes()
        assert run("abduce", "--tracklets", stages / "tracklets.csv",
                   "--meta", scene_dir / "seq.meta", "--out", stages) == 0
        assert (stages / "explanation.atoms").read_bytes() == (
            pipe / "explanation.atoms"
        ).read_bytes()
        assert run("synth", "--tracklets", stages / "tracklets.csv",
                   "--atoms", stages / "explanation.atoms", "--out", stages) == 0
        assert (stages / "tracks.csv").read_bytes() == (pipe / "tracks.csv").read_bytes()

    def test_eval_prints_perfect_mota_for_identical_files(self, scene_dir, capsys):
        assert run("eval", "--hyp", scene_dir / "gt.csv", "--gt", scene_dir / "gt.csv") == 0
        out = capsys.readouterr().out
        assert "mota = 1.000" in out

    def test_missing_file_fails_with_stage_diagnostic(self, tmp_path, capsys):
        code = run("pipeline", "--det", tmp_path / "nope.csv",
                   "--meta", tmp_path / "nope.meta", "--out", tmp_path / "o")
        assert code == 1
        assert "error [ingest]" in capsys.readouterr().err

    def test_max_gap_override_disables_distant_links(self, scene_dir, tmp_path):
        # the crossing gap is 4 frames; forbidding links beyond 2 forces the
        # fragments to be explained away as noise instead of reconnected
        cfg = tmp_path / "tight.cfg"
        cfg.write_text("w_noise = 10\n")
        out = tmp_path / "tight"
        assert run("pipeline", "--det", scene_dir / "det.csv",
                   "--meta", scene_dir / "seq.meta", "--config", cfg,
                   "--max-gap", 2, "--out", out) == 0
        atoms = (out / "explanation.atoms").read_text()
        assert "occludes" not in atoms and "missing_det" not in atoms
        assert "noise" in atoms

    def test_all_optima_flag_writes_model_headers(self, tmp_path):
        # two co-located fragment pairs make the pairing ambiguous
        from abtrack.ingest import write_mot_csv, format_meta
        from conftest import meta_for

        tracklets = [
            straight(1, "person", 1, 10, 500, 300),
            straight(2, "person", 1, 10, 500, 300),
            straight(3, "person", 14, 30, 500, 300),
            straight(4, "person", 14, 30, 500, 300),
        ]
        (tmp_path / "tracklets.csv").write_text(write_mot_csv(tracklets))
        (tmp_path / "seq.meta").write_text(format_meta(meta_for(30)))
        assert run("abduce", "--tracklets", tmp_path / "tracklets.csv",
                   "--meta", tmp_path / "seq.meta", "--all-optima",
                   "--out", tmp_path) == 0
        text = (tmp_path / "explanation.atoms").read_text()
        assert "% model 1 of 2" in text
        assert "% model 2 of 2" in text


class TestRenderOverlay:
    def build_track(self):
        from abtrack.geometry import Box2D
        from abtrack.synth import INTERPOLATED, OBSERVED, ObjectTrack

        return ObjectTrack(
            object_id=1,
            class_label="person",
            start=1,
            boxes=(Box2D(10, 10, 20, 30), Box2D(14, 10, 20, 30), Box2D(18, 10, 20, 30)),
            provenance=(OBSERVED, INTERPOLATED, OBSERVED),
        )

    def test_one_track_one_frame_is_one_rectangle(self):
        from abtrack.render import render_overlay
        from conftest import meta_for

        svg = render_overlay([self.build_track()], meta_for(10, 640, 480), 1)
        assert svg.count("<rect") == 1

    def test_interpolated_frame_is_dashed(self):
        from abtrack.render import render_overlay
        from conftest import meta_for

        meta = meta_for(10, 640, 480)
        assert "stroke-dasharray" in render_overlay([self.build_track()], meta, 2)
        assert "stroke-dasharray" not in render_overlay([self.build_track()], meta, 1)

    def test_same_input_same_bytes(self):
        from abtrack.render import render_overlay
        from conftest import meta_for

        meta = meta_for(10, 640, 480)
        a = render_overlay([self.build_track()], meta, (1, 3))
        b = render_overlay([self.build_track()], meta, (1, 3))
        assert a == b
        assert a.count("<rect") == 3


class TestRender:
    def test_single_frame_counts_rectangles(self, scene_dir, tmp_path):
        pipe = tmp_path / "pipe"
        assert run("pipeline", "--det", scene_dir / "det.csv",
                   "--meta", scene_dir / "seq.meta", "--out", pipe) == 0
        svg = tmp_path / "frame1.svg"
        assert run("render", "--tracks", pipe / "tracks.csv",
                   "--meta", scene_dir / "seq.meta", "--frame", 1, "--out", svg) == 0
        body = svg.read_text()
        # one rectangle per live track on that frame
        assert body.count("<rect") == 2
        assert "stroke-dasharray" not in body

    def test_interpolated_frames_render_dashed(self, scene_dir, tmp_path):
        pipe = tmp_path / "pipe"
        assert run("pipeline", "--det", scene_dir / "det.csv",
                   "--meta", scene_dir / "seq.meta", "--out", pipe) == 0
        atoms = (pipe / "explanation.atoms").read_text()
        occl = next(line for line in atoms.splitlines() if line.startswith("occludes"))
        lo, hi = (int(v) for v in occl.rstrip(".").rstrip(")").split(",")[-2:])
        svg = tmp_path / "gap.svg"
        assert run("render", "--tracks", pipe / "tracks.csv",
                   "--meta", scene_dir / "seq.meta", "--atoms", pipe / "explanation.atoms",
                   "--frame", (lo + hi) // 2, "--out", svg) == 0
        assert "stroke-dasharray" in svg.read_text()

    def test_byte_identical_rendering(self, scene_dir, tmp_path):
        pipe = tmp_path / "pipe"
        assert run("pipeline", "--det", scene_dir / "det.csv",
                   "--meta", scene_dir / "seq.meta", "--out", pipe) == 0
        outs = []
        for name in ("r1.svg", "r2.svg"):
            svg = tmp_path / name
            assert run("render", "--tracks", pipe / "tracks.csv",
                       "--meta", scene_dir / "seq.meta", "--frames", "1:40",
                       "--out", svg) == 0
            outs.append(svg.read_bytes())
        assert outs[0] == outs[1]

    def test_out_of_range_frame_rejected(self, scene_dir, tmp_path):
        pipe = tmp_path / "pipe"
        assert run("pipeline", "--det", scene_dir / "det.csv",
                   "--meta", scene_dir / "seq.meta", "--out", pipe) == 0
        code = run("render", "--tracks", pipe / "tracks.csv",
                   "--meta", scene_dir / "seq.meta", "--frame", 9999,
                   "--out", tmp_path / "x.svg")
        assert code == 1


class TestDeterminism:
    def test_pipeline_is_byte_identical_across_runs(self, scene_dir, tmp_path):
        outputs = []
        for name in ("one", "two"):
            out = tmp_path / name
            assert run("pipeline", "--det", scene_dir / "det.csv",
                       "--meta", scene_dir / "seq.meta", "--gt", scene_dir / "gt.csv",
                       "--out", out) == 0
            outputs.append({
                p.name: p.read_bytes() for p in sorted(out.iterdir())
            })
        assert outputs[0] == outputs[1]
