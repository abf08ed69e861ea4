import csv
import math
from importlib import resources

import numpy as np
import pytest

from girbench.errors import (
    DimensionMismatch,
    InvalidParam,
    MissingOutput,
    ParseError,
    TaskSetMismatch,
)
from girbench.evaluation import (
    MetricReport,
    ScoreTable,
    acceptance_ratio,
    average_score,
    build_report,
    calinski_harabasz,
    evaluate_outputs,
    excellence_ratio,
    load_score_table,
    psnr,
    write_report,
)
from conftest import random_image

FIXTURES = resources.files("girbench") / "fixtures"


class TestPsnr:
    def test_identity_is_infinite(self, np_rng):
        img = random_image(np_rng)
        assert psnr(img, img) == math.inf

    def test_constant_offset_closed_form(self):
        a = np.full((10, 10, 3), 0.4, np.float32)
        b = np.full((10, 10, 3), 0.5, np.float32)
        assert psnr(a, b) == pytest.approx(20.0, abs=1e-6)

    def test_brute_force_oracle(self, np_rng):
        for _ in range(100):
            a = random_image(np_rng, 6, 5)
            b = random_image(np_rng, 6, 5)
            acc = 0.0
            for y in range(6):
                for x in range(5):
                    for c in range(3):
                        acc += (float(a[y, x, c]) - float(b[y, x, c])) ** 2
            ref = 10.0 * math.log10(1.0 / (acc / (6 * 5 * 3)))
            assert psnr(a, b) == pytest.approx(ref, abs=1e-9)

    def test_symmetry(self, np_rng):
        a, b = random_image(np_rng), random_image(np_rng)
        assert psnr(a, b) == psnr(b, a)

    def test_shape_mismatch(self, np_rng):
        with pytest.raises(DimensionMismatch):
            psnr(random_image(np_rng, 4, 4), random_image(np_rng, 4, 5))


class TestRatios:
    def test_equal_tables_inclusive(self):
        t = ScoreTable({"1": 20.0, "2": 25.0})
        assert acceptance_ratio(t, t) == 1.0

    def test_fixture_example_rows(self):
        model = ScoreTable({"9": 24.93, "1": 24.98})
        acceptance = ScoreTable({"9": 20.85, "1": 25.33})
        assert acceptance_ratio(model, acceptance) == 0.5

    def test_strictly_below_er_zero(self):
        model = ScoreTable({"a": 20.0, "b": 21.0})
        exc = ScoreTable({"a": 30.0, "b": 31.0})
        assert excellence_ratio(model, exc) == 0.0

    def test_task_set_mismatch(self):
        with pytest.raises(TaskSetMismatch):
            acceptance_ratio(ScoreTable({"1": 1.0}), ScoreTable({"2": 1.0}))

    def test_monotone_in_model_scores(self, np_rng):
        base = {str(i): float(np_rng.uniform(20, 30)) for i in range(20)}
        model = {k: float(np_rng.uniform(20, 30)) for k in base}
        ar0 = acceptance_ratio(ScoreTable(model), ScoreTable(base))
        bumped = dict(model)
        bumped["3"] += 5.0
        assert acceptance_ratio(ScoreTable(bumped), ScoreTable(base)) >= ar0

    def test_shift_invariance(self, np_rng):
        base = {str(i): float(np_rng.uniform(20, 30)) for i in range(20)}
        model = {k: float(np_rng.uniform(20, 30)) for k in base}
        ar = acceptance_ratio(ScoreTable(model), ScoreTable(base))
        shifted_m = {k: v + 3.0 for k, v in model.items()}
        shifted_b = {k: v + 3.0 for k, v in base.items()}
        assert acceptance_ratio(ScoreTable(shifted_m), ScoreTable(shifted_b)) == ar


class TestCalinskiHarabasz:
    def test_hand_example(self):
        chi = calinski_harabasz([0.0, 1.0, 10.0, 11.0], [0, 0, 1, 1])
        assert chi == pytest.approx(200.0, abs=1e-9)

    def test_duplicated_points_infinite(self):
        chi = calinski_harabasz([1.0, 1.0, 5.0, 5.0], [0, 0, 1, 1])
        assert chi == math.inf

    def test_transcription_oracle(self, np_rng):
        x = np_rng.random((50, 4))
        labels = np_rng.integers(0, 3, size=50)
        while len(np.unique(labels)) < 3:
            labels = np_rng.integers(0, 3, size=50)
        got = calinski_harabasz(x, labels)

        mu = x.mean(axis=0)
        between = sum(
            (labels == c).sum() * np.sum((x[labels == c].mean(axis=0) - mu) ** 2)
            for c in range(3)
        )
        within = sum(
            np.sum((x[labels == c] - x[labels == c].mean(axis=0)) ** 2) for c in range(3)
        )
        ref = (between / 2) / (within / 47)
        assert got == pytest.approx(ref, rel=1e-9)

    def test_translation_invariance(self, np_rng):
        x = np_rng.random((30, 3))
        labels = np.arange(30) % 3
        a = calinski_harabasz(x, labels)
        b = calinski_harabasz(x + 100.0, labels)
        assert b == pytest.approx(a, rel=1e-9)

    def test_validation(self):
        with pytest.raises(InvalidParam):
            calinski_harabasz([1.0, 2.0], [0, 0])
        with pytest.raises(InvalidParam):
            calinski_harabasz([1.0, 2.0], [0, 1])  # n <= k


class TestScoreTables:
    def test_two_row_csv(self, tmp_path):
        p = tmp_path / "t.csv"
        p.write_text("task_id,score\n1,25.33\n2,30.74\n")
        t = load_score_table(p)
        assert t.rows == {"1": 25.33, "2": 30.74}

    def test_duplicate_id_rejected(self, tmp_path):
        p = tmp_path / "t.csv"
        p.write_text("task_id,score\n1,25.33\n1,30.74\n")
        with pytest.raises(ParseError, match="1"):
            load_score_table(p)

    def test_non_numeric_rejected(self, tmp_path):
        p = tmp_path / "t.csv"
        p.write_text("task_id,score\n1,abc\n")
        with pytest.raises(ParseError):
            load_score_table(p)

    def test_bad_header_rejected(self, tmp_path):
        p = tmp_path / "t.csv"
        p.write_text("id,psnr\n1,2\n")
        with pytest.raises(ParseError):
            load_score_table(p)

    @pytest.mark.parametrize(
        "name",
        ["acceptance_line", "excellence_line", "model_gir_rrdb", "model_gir_rrdb_bs32"],
    )
    def test_bundled_fixtures_have_100_tasks(self, name):
        t = load_score_table(FIXTURES / f"{name}.csv", name)
        assert len(t.rows) == 100
        assert set(t.rows) == {str(i) for i in range(1, 101)}

    def test_excellence_dominates_acceptance_on_fixture(self):
        acc = load_score_table(FIXTURES / "acceptance_line.csv")
        exc = load_score_table(FIXTURES / "excellence_line.csv")
        assert all(exc.rows[tid] >= acc.rows[tid] for tid in acc.rows)


class TestReports:
    def _tables(self):
        model = ScoreTable({"1": 26.0, "2": 20.0})
        acc = ScoreTable({"1": 25.0, "2": 21.0})
        exc = ScoreTable({"1": 27.0, "2": 22.0})
        return model, acc, exc

    def test_build_report(self):
        r = build_report(*self._tables())
        assert r.ar == 0.5 and r.er == 0.0
        assert r.task_count == 2
        assert r.avg_psnr == pytest.approx(23.0)

    def test_write_report_files(self, tmp_path):
        r = build_report(*self._tables())
        out = tmp_path / "report.csv"
        write_report(r, out)
        assert out.exists()
        with open(out) as f:
            rows = list(csv.reader(f))
        assert rows[0][0] == "task_id" and len(rows) == 3
        summary = (tmp_path / "report.csv.txt").read_text()
        assert "AR 0.5000" in summary and "ER 0.0000" in summary

    def test_average_excludes_infinite(self):
        t = ScoreTable({"1": math.inf, "2": 20.0})
        assert average_score(t) == 20.0


class TestEvaluateOutputs:
    def _build(self, tmp_path, np_rng):
        from girbench import datasetgen
        from girbench.imaging import save_image

        gt_dir = tmp_path / "gt"
        gt_dir.mkdir()
        for name in ("x", "y"):
            save_image(random_image(np_rng, 24, 24), gt_dir / f"{name}.png")
        bank = datasetgen.default_task_bank(1)[:3]
        manifest = datasetgen.build_testset(gt_dir, bank, tmp_path / "lq", 1)
        return gt_dir, manifest

    def test_outputs_equal_gt_perfect_scores(self, tmp_path, np_rng):
        import shutil

        gt_dir, manifest = self._build(tmp_path, np_rng)
        outputs = tmp_path / "restored"
        for task in manifest.tasks:
            (outputs / task.task_id).mkdir(parents=True)
            for g in manifest.gt_images:
                shutil.copy(gt_dir / g["path"], outputs / task.task_id / f"{g['id']}.png")
        acc = ScoreTable({t.task_id: 25.0 for t in manifest.tasks})
        exc = ScoreTable({t.task_id: 30.0 for t in manifest.tasks})
        r = evaluate_outputs(outputs, gt_dir, manifest, acc, exc)
        assert r.ar == 1.0 and r.er == 1.0
        assert all(v["model"] == math.inf for v in r.per_task.values())

    def test_identity_restoration_matches_recipe_recompute(self, tmp_path, np_rng):
        import shutil

        from girbench.imaging import load_image

        gt_dir, manifest = self._build(tmp_path, np_rng)
        outputs = tmp_path / "restored"
        shutil.copytree(tmp_path / "lq", outputs)
        acc = ScoreTable({t.task_id: 25.0 for t in manifest.tasks})
        exc = ScoreTable({t.task_id: 30.0 for t in manifest.tasks})
        r = evaluate_outputs(outputs, gt_dir, manifest, acc, exc)
        for task in manifest.tasks:
            scores = [
                psnr(
                    load_image(tmp_path / "lq" / task.task_id / f"{g['id']}.png"),
                    load_image(gt_dir / g["path"]),
                )
                for g in manifest.gt_images
            ]
            assert r.per_task[task.task_id]["model"] == pytest.approx(
                float(np.mean(scores)), abs=1e-12
            )

    def test_missing_output_lists_file(self, tmp_path, np_rng):
        gt_dir, manifest = self._build(tmp_path, np_rng)
        outputs = tmp_path / "restored"
        outputs.mkdir()
        acc = ScoreTable({t.task_id: 25.0 for t in manifest.tasks})
        with pytest.raises(MissingOutput) as ei:
            evaluate_outputs(outputs, gt_dir, manifest, acc, acc)
        assert len(ei.value.missing) == 6
