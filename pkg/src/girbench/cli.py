"""Command-line front end.

Machine-parsable results go to standard output as `key value` lines; human
prose goes to standard error. Exit codes: 0 success, 1 runtime error, 2 usage
error.
"""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click

from . import datasetgen, evaluation, jpeg, pipeline, taskselect
from .degradations import (
    DegradationKind,
    params_from_dict,
    representative_params,
    sample_params,
)
from .errors import GirBenchError
from .imaging import load_image, save_image
from .pipeline import DegradationStep, Recipe, TaskSpec, apply_recipe
from .rng import derive_rng, lane_of


def _default_threads() -> int:
    env = os.environ.get("GIR_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def _fail(message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(1)


@click.group()
def main():
    """Deterministic image degradation synthesis and restoration benchmark."""


@main.command()
@click.option("--in", "in_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--kind", required=True, type=click.Choice([k.value for k in DegradationKind]))
@click.option("--params", "params_json", default=None, help="JSON parameter overrides.")
@click.option("--seed", default=0, type=click.IntRange(0, 2**64 - 1))
@click.option("--depth", "depth_path", default=None, type=click.Path(exists=True, dir_okay=False))
@click.option("--random-params", is_flag=True, help="Sample parameters instead of the fixed set.")
def degrade(in_path, out_path, kind, params_json, seed, depth_path, random_params):
    """Apply a single degradation; prints the bound recipe on stdout."""
    try:
        kind = DegradationKind(kind)
        if params_json is not None:
            try:
                doc = json.loads(params_json)
            except json.JSONDecodeError as e:
                raise click.UsageError(f"--params is not valid JSON: {e.msg}")
            params = params_from_dict(kind, doc)
        elif random_params:
            params = sample_params(kind, derive_rng(seed, lane_of("params"), 0))
        else:
            params = representative_params(kind)
        recipe = Recipe((DegradationStep(kind, params, 0),), master_seed=seed)
        img = load_image(in_path)
        depth = None
        if depth_path is not None:
            depth = load_image(depth_path)[:, :, 0].astype(float)
        elif kind in (DegradationKind.HAZE, DegradationKind.SNOW):
            click.echo("no --depth given; using the procedural depth map", err=True)
        out = apply_recipe(img, recipe, depth=depth)
        save_image(out, out_path)
        click.echo(pipeline.serialize_recipe(recipe), nl=False)
    except GirBenchError as e:
        _fail(str(e))


@main.command(name="pipeline")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--recipe", "recipe_path", default=None, type=click.Path(exists=True, dir_okay=False))
@click.option("--order", default=None, type=click.IntRange(1, pipeline.MAX_ORDER))
@click.option("--seed", default=0, type=click.IntRange(0, 2**64 - 1))
@click.option("--depth", "depth_path", default=None, type=click.Path(exists=True, dir_okay=False))
def pipeline_cmd(in_path, out_path, recipe_path, order, seed, depth_path):
    """Apply a recipe (or sample one); the bound recipe is written next to --out."""
    if (recipe_path is None) == (order is None):
        raise click.UsageError("give exactly one of --recipe or --order")
    try:
        if recipe_path is not None:
            recipe = pipeline.parse_recipe(Path(recipe_path).read_text(encoding="utf-8"))
        else:
            recipe = pipeline.sample_recipe(order, derive_rng(seed, lane_of("sample"), 0))
        img = load_image(in_path)
        depth = None
        if depth_path is not None:
            depth = load_image(depth_path)[:, :, 0].astype(float)
        out = apply_recipe(img, recipe, depth=depth)
        save_image(out, out_path)
        recipe_out = Path(out_path).with_suffix(Path(out_path).suffix + ".recipe.json")
        recipe_out.write_text(pipeline.serialize_recipe(recipe), encoding="utf-8")
        click.echo(f"recipe {recipe_out}")
        click.echo(f"order {recipe.order}")
    except GirBenchError as e:
        _fail(str(e))


@main.command(name="select-tasks")
@click.option("--gt", "gt_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--candidates", default=200, type=click.IntRange(2))
@click.option("--per-order", default=10, type=click.IntRange(1))
@click.option("--orders", default="2..5", help="Inclusive order range, e.g. 2..5.")
@click.option("--seed", default=0, type=click.IntRange(0, 2**64 - 1))
@click.option("--bins", default=taskselect.DEFAULT_BINS, type=click.IntRange(2))
@click.option("--crop", default=taskselect.DEFAULT_CROP, type=click.IntRange(8))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
def select_tasks(gt_dir, candidates, per_order, orders, seed, bins, crop, out_path):
    """Cluster random mixture candidates and write representative tasks."""
    try:
        lo, _, hi = orders.partition("..")
        order_lo, order_hi = int(lo), int(hi or lo)
    except ValueError:
        raise click.UsageError(f"bad --orders value {orders!r}; expected e.g. 2..5")
    if not 1 <= order_lo <= order_hi <= pipeline.MAX_ORDER:
        raise click.UsageError(f"--orders out of range: {orders!r}")
    if per_order > candidates:
        raise click.UsageError("--per-order cannot exceed --candidates")
    try:
        gt_images = [
            load_image(Path(gt_dir) / g["path"]) for g in datasetgen.list_gt_images(gt_dir)
        ]
        selected = []
        for order in range(order_lo, order_hi + 1):
            pool = []
            for i in range(candidates):
                rng = derive_rng(seed, lane_of(f"candidates-order-{order}"), i)
                pool.append(TaskSpec(f"cand-{order}-{i}", pipeline.sample_recipe(order, rng)))
            click.echo(f"order {order}: rendering {len(pool)} candidates...", err=True)
            sim = taskselect.build_similarity_matrix(pool, gt_images, bins=bins, seed=seed, crop=crop)
            reps = taskselect.select_representatives(pool, sim, per_order, seed=seed)
            selected.extend(reps)
        bank = [
            TaskSpec(str(i + 1), t.recipe, description=t.description or t.task_id)
            for i, t in enumerate(selected)
        ]
        Path(out_path).write_text(pipeline.serialize_task_bank(bank), encoding="utf-8")
        sidecar = Path(out_path).with_suffix(Path(out_path).suffix + ".provenance.json")
        sidecar.write_text(
            json.dumps(
                {"seed": seed, "candidates_per_order": candidates, "bins": bins,
                 "crop": crop, "orders": [order_lo, order_hi], "per_order": per_order},
                indent=2, sort_keys=True,
            ) + "\n",
            encoding="utf-8",
        )
        click.echo(f"bank {out_path}")
        click.echo(f"tasks {len(bank)}")
    except GirBenchError as e:
        _fail(str(e))


@main.command(name="build-testset")
@click.option("--gt", "gt_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--bank", "bank_path", default=None, type=click.Path(exists=True, dir_okay=False))
@click.option("--default-bank", is_flag=True, help="Use the built-in 100-task bank.")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--seed", default=0, type=click.IntRange(0, 2**64 - 1))
@click.option("--threads", default=None, type=click.IntRange(1))
def build_testset(gt_dir, bank_path, default_bank, out_dir, seed, threads):
    """Render the full test set and write manifest.json."""
    if (bank_path is None) == (not default_bank):
        raise click.UsageError("give exactly one of --bank or --default-bank")
    try:
        bank = None
        if bank_path is not None:
            bank = pipeline.parse_task_bank(Path(bank_path).read_text(encoding="utf-8"))
        manifest = datasetgen.build_testset(
            gt_dir, bank, out_dir, seed, threads=threads or _default_threads()
        )
        click.echo(f"manifest {Path(out_dir) / 'manifest.json'}")
        click.echo(f"tasks {len(manifest.tasks)}")
        click.echo(f"images {len(manifest.gt_images)}")
        click.echo(f"entries {len(manifest.entries)}")
    except GirBenchError as e:
        _fail(str(e))


@main.command()
@click.option("--outputs", "outputs_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--gt", "gt_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--acceptance", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--excellence", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--report", "report_path", required=True, type=click.Path(dir_okay=False))
def evaluate(outputs_dir, gt_dir, manifest_path, acceptance, excellence, report_path):
    """Score restored outputs and write the AR/ER report."""
    try:
        manifest = datasetgen.load_manifest(manifest_path)
        report = evaluation.evaluate_outputs(
            outputs_dir,
            gt_dir,
            manifest,
            evaluation.load_score_table(acceptance, "acceptance"),
            evaluation.load_score_table(excellence, "excellence"),
        )
        evaluation.write_report(report, report_path)
        click.echo(f"AR {report.ar:.4f}")
        click.echo(f"ER {report.er:.4f}")
        click.echo(f"avg_psnr {report.avg_psnr:.4f}")
    except GirBenchError as e:
        _fail(str(e))


@main.command()
@click.option("--in", "in_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--quality", default=50, type=click.IntRange(1, 100))
def encode(in_path, out_path, quality):
    """Encode an image to baseline JPEG (codec debugging aid)."""
    try:
        data = jpeg.encode_jpeg(load_image(in_path), quality)
        Path(out_path).write_bytes(data)
        click.echo(f"bytes {len(data)}")
    except GirBenchError as e:
        _fail(str(e))


@main.command()
@click.option("--in", "in_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
def decode(in_path, out_path):
    """Decode a baseline JPEG to PNG/PPM (codec debugging aid)."""
    try:
        img = jpeg.decode_jpeg(Path(in_path).read_bytes())
        save_image(img, out_path)
        click.echo(f"size {img.shape[1]}x{img.shape[0]}")
    except GirBenchError as e:
        _fail(str(e))


if __name__ == "__main__":
    main()
