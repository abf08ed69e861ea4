import json
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from girbench import pipeline
from girbench.cli import main
from girbench.degradations import DegradationKind, degrade_blur, representative_params
from girbench.imaging import load_image, save_image
from girbench.jpeg import decode_jpeg
from conftest import random_image, smooth_image


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def workspace(tmp_path, np_rng):
    gt = tmp_path / "gt"
    gt.mkdir()
    for name in ("alpha", "beta"):
        save_image(random_image(np_rng, 32, 32), gt / f"{name}.png")
    src = tmp_path / "input.png"
    save_image(smooth_image(np_rng), src)
    return tmp_path


class TestDegrade:
    def test_prints_recipe_and_writes_output(self, runner, workspace):
        out = workspace / "out.png"
        result = runner.invoke(
            main,
            ["degrade", "--in", str(workspace / "input.png"), "--out", str(out),
             "--kind", "noise", "--seed", "7"],
        )
        assert result.exit_code == 0
        assert out.exists()
        recipe = pipeline.parse_recipe(result.output)
        assert recipe.master_seed == 7
        assert recipe.kinds() == [DegradationKind.NOISE]

    def test_same_seed_same_bytes(self, runner, workspace):
        outs = []
        for name in ("a.png", "b.png"):
            out = workspace / name
            result = runner.invoke(
                main,
                ["degrade", "--in", str(workspace / "input.png"), "--out", str(out),
                 "--kind", "damage", "--seed", "3"],
            )
            assert result.exit_code == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]

    def test_params_override_matches_library(self, runner, workspace, np_rng):
        out = workspace / "out.png"
        result = runner.invoke(
            main,
            ["degrade", "--in", str(workspace / "input.png"), "--out", str(out),
             "--kind", "blur", "--params", json.dumps({"ksize": 15, "sigma": 2.0})],
        )
        assert result.exit_code == 0
        expected = degrade_blur(
            load_image(workspace / "input.png"),
            representative_params(DegradationKind.BLUR),
        )
        np.testing.assert_array_equal(load_image(out), np.round(expected * 255) / 255)

    def test_haze_without_depth_notes_fallback(self, runner, workspace):
        out = workspace / "out.png"
        result = runner.invoke(
            main,
            ["degrade", "--in", str(workspace / "input.png"), "--out", str(out),
             "--kind", "haze"],
        )
        assert result.exit_code == 0
        assert "depth" in result.stderr

    def test_bad_params_json_is_usage_error(self, runner, workspace):
        result = runner.invoke(
            main,
            ["degrade", "--in", str(workspace / "input.png"),
             "--out", str(workspace / "out.png"), "--kind", "blur",
             "--params", "{not json"],
        )
        assert result.exit_code == 2

    def test_invalid_param_value_is_runtime_error(self, runner, workspace):
        result = runner.invoke(
            main,
            ["degrade", "--in", str(workspace / "input.png"),
             "--out", str(workspace / "out.png"), "--kind", "blur",
             "--params", json.dumps({"ksize": 4, "sigma": 2.0})],
        )
        assert result.exit_code == 1
        assert "error:" in result.stderr


class TestPipeline:
    def test_order_samples_and_writes_sidecar(self, runner, workspace):
        out = workspace / "mix.png"
        result = runner.invoke(
            main,
            ["pipeline", "--in", str(workspace / "input.png"), "--out", str(out),
             "--order", "3", "--seed", "11"],
        )
        assert result.exit_code == 0
        sidecar = workspace / "mix.png.recipe.json"
        assert sidecar.exists()
        recipe = pipeline.parse_recipe(sidecar.read_text())
        assert recipe.order == 3
        assert "order 3" in result.output

    def test_recipe_file_reproduces_sampled_run(self, runner, workspace):
        first = workspace / "first.png"
        runner.invoke(
            main,
            ["pipeline", "--in", str(workspace / "input.png"), "--out", str(first),
             "--order", "2", "--seed", "5"],
        )
        second = workspace / "second.png"
        result = runner.invoke(
            main,
            ["pipeline", "--in", str(workspace / "input.png"), "--out", str(second),
             "--recipe", str(workspace / "first.png.recipe.json")],
        )
        assert result.exit_code == 0
        assert first.read_bytes() == second.read_bytes()

    def test_recipe_and_order_together_rejected(self, runner, workspace):
        result = runner.invoke(
            main,
            ["pipeline", "--in", str(workspace / "input.png"),
             "--out", str(workspace / "out.png")],
        )
        assert result.exit_code == 2


class TestBuildAndEvaluate:
    def test_full_flow(self, runner, workspace, tmp_path):
        bank = pipeline.serialize_task_bank(
            [pipeline.TaskSpec(str(i + 1),
                               pipeline.recipe_from_kinds([k], master_seed=i))
             for i, k in enumerate([DegradationKind.NOISE, DegradationKind.BLUR])]
        )
        bank_path = tmp_path / "bank.json"
        bank_path.write_text(bank)

        out_dir = tmp_path / "set"
        result = runner.invoke(
            main,
            ["build-testset", "--gt", str(workspace / "gt"), "--bank", str(bank_path),
             "--out", str(out_dir), "--seed", "0", "--threads", "2"],
        )
        assert result.exit_code == 0
        assert "entries 4" in result.output

        # Perfect restoration: hand the GT images back as model outputs.
        outputs = tmp_path / "restored"
        for task_id in ("1", "2"):
            (outputs / task_id).mkdir(parents=True)
            for name in ("alpha", "beta"):
                target = outputs / task_id / f"{name}.png"
                target.write_bytes((workspace / "gt" / f"{name}.png").read_bytes())

        lines = "task_id,score\n1,20.0\n2,20.0\n"
        (tmp_path / "acc.csv").write_text(lines)
        (tmp_path / "exc.csv").write_text(lines)
        report_path = tmp_path / "report.csv"
        result = runner.invoke(
            main,
            ["evaluate", "--outputs", str(outputs), "--gt", str(workspace / "gt"),
             "--manifest", str(out_dir / "manifest.json"),
             "--acceptance", str(tmp_path / "acc.csv"),
             "--excellence", str(tmp_path / "exc.csv"),
             "--report", str(report_path)],
        )
        assert result.exit_code == 0
        assert "AR 1.0000" in result.output
        assert "ER 1.0000" in result.output
        assert report_path.exists()
        assert Path(str(report_path) + ".txt").exists()

    def test_missing_output_dir_content_fails(self, runner, workspace, tmp_path):
        bank_path = tmp_path / "bank.json"
        bank_path.write_text(pipeline.serialize_task_bank(
            [pipeline.TaskSpec("1", pipeline.recipe_from_kinds(
                [DegradationKind.NOISE], master_seed=0))]
        ))
        out_dir = tmp_path / "set"
        runner.invoke(
            main,
            ["build-testset", "--gt", str(workspace / "gt"), "--bank", str(bank_path),
             "--out", str(out_dir)],
        )
        outputs = tmp_path / "restored"
        outputs.mkdir()
        lines = "task_id,score\n1,20.0\n"
        (tmp_path / "acc.csv").write_text(lines)
        (tmp_path / "exc.csv").write_text(lines)
        result = runner.invoke(
            main,
            ["evaluate", "--outputs", str(outputs), "--gt", str(workspace / "gt"),
             "--manifest", str(out_dir / "manifest.json"),
             "--acceptance", str(tmp_path / "acc.csv"),
             "--excellence", str(tmp_path / "exc.csv"),
             "--report", str(tmp_path / "report.csv")],
        )
        assert result.exit_code == 1


class TestSelectTasks:
    def test_small_selection(self, runner, workspace, tmp_path):
        out_path = tmp_path / "bank.json"
        result = runner.invoke(
            main,
            ["select-tasks", "--gt", str(workspace / "gt"), "--candidates", "6",
             "--per-order", "2", "--orders", "1..1", "--crop", "16",
             "--out", str(out_path)],
        )
        assert result.exit_code == 0, result.output + result.stderr
        bank = pipeline.parse_task_bank(out_path.read_text())
        assert len(bank) == 2
        assert all(t.recipe.order == 1 for t in bank)
        assert Path(str(out_path) + ".provenance.json").exists()

    def test_bad_orders_spec_is_usage_error(self, runner, workspace, tmp_path):
        result = runner.invoke(
            main,
            ["select-tasks", "--gt", str(workspace / "gt"), "--orders", "9..2",
             "--out", str(tmp_path / "bank.json")],
        )
        assert result.exit_code == 2


class TestCodec:
    def test_encode_decode_roundtrip(self, runner, workspace, tmp_path):
        jpg = tmp_path / "img.jpg"
        result = runner.invoke(
            main,
            ["encode", "--in", str(workspace / "input.png"), "--out", str(jpg),
             "--quality", "90"],
        )
        assert result.exit_code == 0
        assert jpg.read_bytes()[:2] == b"\xff\xd8"

        png = tmp_path / "roundtrip.png"
        result = runner.invoke(main, ["decode", "--in", str(jpg), "--out", str(png)])
        assert result.exit_code == 0
        assert "size 64x48" in result.output
        ref = decode_jpeg(jpg.read_bytes())
        np.testing.assert_array_equal(load_image(png), np.round(ref * 255) / 255)

    def test_decode_garbage_fails(self, runner, tmp_path):
        bad = tmp_path / "bad.jpg"
        bad.write_bytes(b"\x00" * 32)
        result = runner.invoke(
            main, ["decode", "--in", str(bad), "--out", str(tmp_path / "x.png")]
        )
        assert result.exit_code == 1
