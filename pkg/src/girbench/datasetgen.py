"""Synthetic benchmark test-set builder.

Assembles the default 100-task bank (10 single tasks, 40 fixed mixture chains,
50 seeded random chains), renders every task over a ground-truth directory,
and writes a manifest binding each degraded image to its recipe.
"""

from __future__ import annotations

import concurrent.futures
import hashlib
import json
import os
import shutil
from dataclasses import dataclass
from pathlib import Path

from . import pipeline
from .degradations import DegradationKind as K
from .errors import InvalidParam, ParseError
from .imaging import load_image, save_image
from .pipeline import Recipe, TaskSpec, apply_recipe, recipe_from_kinds, sample_recipe
from .rng import derive_rng, lane_of, mix64

MANIFEST_VERSION = 1

SCENE_LABELS = (
    "animal", "vegetation", "mountain view", "scenery", "texture",
    "portrait", "food", "daily scenes", "art", "architecture",
)

_SINGLE_KINDS = (
    K.RESIZE, K.BLUR, K.NOISE, K.COMPRESSION, K.DAMAGE,
    K.RINGING, K.ALG_ARTIFACT, K.RAIN, K.HAZE, K.SNOW,
)

# Fixed mixture chains for tasks 11-50, ten per order 2..5.
_MIXTURE_CHAINS = (
    (K.RAIN, K.RINGING),
    (K.RINGING, K.RINGING),
    (K.NOISE, K.RESIZE),
    (K.COMPRESSION, K.ALG_ARTIFACT),
    (K.HAZE, K.NOISE),
    (K.COMPRESSION, K.DAMAGE),
    (K.DAMAGE, K.ALG_ARTIFACT),
    (K.SNOW, K.COMPRESSION),
    (K.NOISE, K.BLUR),
    (K.NOISE, K.RINGING),
    (K.COMPRESSION, K.DAMAGE, K.RESIZE),
    (K.ALG_ARTIFACT, K.ALG_ARTIFACT, K.DAMAGE),
    (K.ALG_ARTIFACT, K.NOISE, K.ALG_ARTIFACT),
    (K.SNOW, K.COMPRESSION, K.RINGING),
    (K.HAZE, K.RESIZE, K.RESIZE),
    (K.RAIN, K.RESIZE, K.RESIZE),
    (K.NOISE, K.DAMAGE, K.DAMAGE),
    (K.ALG_ARTIFACT, K.RINGING, K.BLUR),
    (K.SNOW, K.BLUR, K.NOISE),
    (K.NOISE, K.COMPRESSION, K.RESIZE),
    (K.RESIZE, K.RINGING, K.DAMAGE, K.RESIZE),
    (K.HAZE, K.RESIZE, K.RESIZE, K.RESIZE),
    (K.NOISE, K.DAMAGE, K.RESIZE, K.RINGING),
    (K.RAIN, K.RESIZE, K.RESIZE, K.RESIZE),
    (K.SNOW, K.RINGING, K.ALG_ARTIFACT, K.RINGING),
    (K.BLUR, K.RINGING, K.NOISE, K.DAMAGE),
    (K.HAZE, K.RESIZE, K.BLUR, K.NOISE),
    (K.SNOW, K.NOISE, K.NOISE, K.NOISE),
    (K.BLUR, K.BLUR, K.BLUR, K.BLUR),
    (K.BLUR, K.RINGING, K.RINGING, K.ALG_ARTIFACT),
    (K.ALG_ARTIFACT, K.RESIZE, K.BLUR, K.COMPRESSION, K.DAMAGE),
    (K.NOISE, K.RESIZE, K.DAMAGE, K.ALG_ARTIFACT, K.RESIZE),
    (K.SNOW, K.RINGING, K.DAMAGE, K.RESIZE, K.RESIZE),
    (K.HAZE, K.BLUR, K.ALG_ARTIFACT, K.NOISE, K.RINGING),
    (K.RESIZE, K.RESIZE, K.RESIZE, K.RESIZE, K.RESIZE),
    (K.RAIN, K.RINGING, K.RINGING, K.NOISE, K.COMPRESSION),
    (K.SNOW, K.RINGING, K.BLUR, K.NOISE, K.RINGING),
    (K.COMPRESSION, K.NOISE, K.NOISE, K.RINGING, K.NOISE),
    (K.BLUR, K.RESIZE, K.COMPRESSION, K.RINGING, K.BLUR),
    (K.HAZE, K.COMPRESSION, K.DAMAGE, K.COMPRESSION, K.NOISE),
)


def _task_seed(master_seed: int, task_index: int) -> int:
    return mix64(mix64(master_seed) ^ mix64(task_index))


def default_task_bank(master_seed: int):
    """The 100-task bank: 10 single + 40 fixed chains + 50 seeded random."""
    tasks = []
    for i, kind in enumerate(_SINGLE_KINDS, start=1):
        recipe = recipe_from_kinds([kind], master_seed=_task_seed(master_seed, i))
        tasks.append(TaskSpec(str(i), recipe, description=f"single: {kind.value}"))
    for i, chain in enumerate(_MIXTURE_CHAINS, start=11):
        recipe = recipe_from_kinds(chain, master_seed=_task_seed(master_seed, i))
        desc = "mixture: " + " + ".join(k.value for k in chain)
        tasks.append(TaskSpec(str(i), recipe, description=desc))
    i = 51
    for order in range(1, 6):
        for _ in range(10):
            rng = derive_rng(master_seed, lane_of("random-task"), i)
            recipe = sample_recipe(order, rng)
            desc = "random: " + " + ".join(k.value for k in recipe.kinds())
            tasks.append(TaskSpec(str(i), recipe, description=desc))
            i += 1
    return tasks


def recipe_hash(recipe: Recipe) -> str:
    return hashlib.sha256(pipeline.serialize_recipe(recipe).encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class Manifest:
    version: int
    master_seed: int
    gt_images: list  # [{id, path, scene_label?}]
    tasks: list  # [TaskSpec]
    entries: list  # [{task_id, gt_id, lq_path, recipe_hash}]

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "master_seed": self.master_seed,
            "gt_images": self.gt_images,
            "tasks": [pipeline.task_to_dict(t) for t in self.tasks],
            "entries": self.entries,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "Manifest":
        for key in ("version", "master_seed", "gt_images", "tasks", "entries"):
            if key not in doc:
                raise ParseError(f"manifest missing field {key!r}")
        if doc["version"] != MANIFEST_VERSION:
            raise ParseError(f"unsupported manifest version {doc['version']!r}")
        return cls(
            version=doc["version"],
            master_seed=doc["master_seed"],
            gt_images=doc["gt_images"],
            tasks=[pipeline.task_from_dict(t) for t in doc["tasks"]],
            entries=doc["entries"],
        )


def load_manifest(path) -> Manifest:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}: invalid JSON: {e.msg}") from e
    return Manifest.from_dict(doc)


_GT_SUFFIXES = (".png", ".ppm", ".pnm")


def list_gt_images(gt_dir):
    gt_dir = Path(gt_dir)
    files = sorted(p for p in gt_dir.iterdir() if p.suffix.lower() in _GT_SUFFIXES)
    if not files:
        raise InvalidParam(f"no GT images (png/ppm) found in {gt_dir}")
    return [{"id": p.stem, "path": p.name} for p in files]


def build_testset(gt_dir, task_bank, out_dir, master_seed: int, threads: int = 1) -> Manifest:
    """Render every (task, GT image) pair and write the manifest.

    Fully deterministic: randomness derives from each recipe's master seed and
    a lane hashed from the GT image id, independent of thread scheduling.
    """
    gt_dir, out_dir = Path(gt_dir), Path(out_dir)
    if task_bank is None:
        task_bank = default_task_bank(master_seed)
    gt_images = list_gt_images(gt_dir)
    loaded = {g["id"]: load_image(gt_dir / g["path"]) for g in gt_images}

    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    def render(pair):
        task, gt = pair
        img = apply_recipe(loaded[gt["id"]], task.recipe, image_lane=lane_of(gt["id"]))
        task_dir = out_dir / task.task_id
        task_dir.mkdir(exist_ok=True)
        lq_path = task_dir / f"{gt['id']}.png"
        save_image(img, lq_path)
        return {
            "task_id": task.task_id,
            "gt_id": gt["id"],
            "lq_path": str(lq_path.relative_to(out_dir)),
            "recipe_hash": recipe_hash(task.recipe),
        }

    pairs = [(task, gt) for task in task_bank for gt in gt_images]
    try:
        if threads > 1:
            with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
                entries = list(pool.map(render, pairs))
        else:
            entries = [render(p) for p in pairs]
        for e in entries:
            written.append(e["lq_path"])
    except Exception:
        for task in task_bank:
            shutil.rmtree(out_dir / task.task_id, ignore_errors=True)
        raise

    manifest = Manifest(
        version=MANIFEST_VERSION,
        master_seed=master_seed,
        gt_images=gt_images,
        tasks=list(task_bank),
        entries=entries,
    )
    tmp = out_dir / "manifest.json.tmp"
    tmp.write_text(
        json.dumps(manifest.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    os.replace(tmp, out_dir / "manifest.json")
    return manifest


def validate_manifest(manifest: Manifest, out_dir, gt_dir=None):
    """Return a list of violation strings; empty list means the tree is intact."""
    out_dir = Path(out_dir)
    violations = []
    if len(manifest.entries) != len(manifest.tasks) * len(manifest.gt_images):
        violations.append(
            f"EntryCount: {len(manifest.entries)} entries for "
            f"{len(manifest.tasks)} tasks x {len(manifest.gt_images)} images"
        )
    hashes = {t.task_id: recipe_hash(t.recipe) for t in manifest.tasks}
    gt_dims = {}
    if gt_dir is not None:
        for g in manifest.gt_images:
            p = Path(gt_dir) / g["path"]
            if p.exists():
                gt_dims[g["id"]] = load_image(p).shape
            else:
                violations.append(f"MissingGT: {p}")
    for e in manifest.entries:
        p = out_dir / e["lq_path"]
        if not p.exists():
            violations.append(f"MissingFile: {e['lq_path']}")
            continue
        if hashes.get(e["task_id"]) != e["recipe_hash"]:
            violations.append(f"HashMismatch: task {e['task_id']}")
        if e["gt_id"] in gt_dims and load_image(p).shape != gt_dims[e["gt_id"]]:
            violations.append(f"DimensionMismatch: {e['lq_path']}")
    return violations
