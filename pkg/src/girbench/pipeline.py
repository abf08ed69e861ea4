"""Degradation recipes: sampling, deterministic application, serialization.

A recipe is an ordered chain of 1-5 degradation steps plus a 64-bit master
seed. Weather degradations (rain/haze/snow) arise during acquisition, so a
chain may contain at most one of them and only in the first position.

Each stochastic step draws from an RNG stream derived from
(master_seed, image_lane, step_index), so applying the same recipe to the same
image is bit-reproducible regardless of threading, and editing one step leaves
every other step's draws untouched.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import degradations as deg
from .degradations import DegradationKind
from .errors import InvalidParam, ParseError, SchemaVersionMismatch
from .imaging import DepthMap, ImageF32, as_image
from .rng import RngStream, derive_rng

SCHEMA_VERSION = 1
MAX_ORDER = 5

# lane_b value reserved for the procedural depth map (never a step index)
_DEPTH_LANE = 0xFFFFFFFF


@dataclass(frozen=True)
class DegradationStep:
    kind: DegradationKind
    params: object
    step_index: int

    def __post_init__(self):
        expected = deg.PARAM_TYPES[self.kind]
        if type(self.params) is not expected:
            raise InvalidParam(
                f"step {self.step_index}: params {type(self.params).__name__} "
                f"do not match kind {self.kind.value}"
            )
        if self.step_index < 0:
            raise InvalidParam(f"step_index must be >= 0, got {self.step_index}")


@dataclass(frozen=True)
class Recipe:
    steps: tuple
    master_seed: int
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        steps = tuple(self.steps)
        object.__setattr__(self, "steps", steps)
        if not 1 <= len(steps) <= MAX_ORDER:
            raise InvalidParam(f"recipe must have 1..{MAX_ORDER} steps, got {len(steps)}")
        for i, step in enumerate(steps):
            if step.step_index != i:
                raise InvalidParam(f"step_index {step.step_index} at position {i}")
            if step.kind.weather_only_first and i != 0:
                raise InvalidParam(f"weather kind {step.kind.value} at step {i} (> 0)")
        if not 0 <= self.master_seed < (1 << 64):
            raise InvalidParam(f"master_seed must fit in 64 bits, got {self.master_seed!r}")

    @property
    def order(self) -> int:
        return len(self.steps)

    def kinds(self) -> list:
        return [s.kind for s in self.steps]


@dataclass(frozen=True)
class TaskSpec:
    task_id: str
    recipe: Recipe
    mode: str = "fixed_recipe"
    description: str = ""

    def __post_init__(self):
        if self.mode != "fixed_recipe":
            raise InvalidParam(f"unsupported task mode {self.mode!r}")


def sample_recipe(k: int, rng: RngStream, allow_weather: bool = True) -> Recipe:
    """Draw a k-step recipe with uniformly random kinds and parameters.

    Kinds are re-drawn whenever a weather kind lands in an ineligible
    position, so weather appears only at step 0 and at most once.
    """
    if not 1 <= k <= MAX_ORDER:
        raise InvalidParam(f"order k must be in [1, {MAX_ORDER}], got {k!r}")
    all_kinds = list(DegradationKind)
    steps = []
    for i in range(k):
        while True:
            kind = all_kinds[int(rng.integers(0, len(all_kinds) - 1))]
            if kind.weather_only_first and (i > 0 or not allow_weather):
                continue
            break
        steps.append(DegradationStep(kind, deg.sample_params(kind, rng), i))
    return Recipe(tuple(steps), master_seed=rng.bits64())


def recipe_from_kinds(kinds, master_seed: int, param_fn=deg.representative_params) -> Recipe:
    """Bind a kind sequence into a Recipe using param_fn (default: fixed params)."""
    steps = tuple(
        DegradationStep(kind, param_fn(kind), i) for i, kind in enumerate(kinds)
    )
    return Recipe(steps, master_seed=master_seed)


def synth_depth(width: int, height: int, rng: RngStream) -> DepthMap:
    """Procedural depth: vertical gradient (bottom 0, top 1) + value noise."""
    if width < 1 or height < 1:
        raise InvalidParam("depth dimensions must be >= 1")
    if height > 1:
        grad = (height - 1 - np.arange(height, dtype=np.float64)) / (height - 1)
    else:
        grad = np.zeros(1)
    grad = np.repeat(grad[:, None], width, axis=1)

    # low-frequency value noise: coarse uniform grid, bilinear-interpolated up
    gh = max(2, height // 32 + 1)
    gw = max(2, width // 32 + 1)
    grid = rng.uniform(size=(gh, gw))
    ys = np.linspace(0.0, gh - 1.0, height)
    xs = np.linspace(0.0, gw - 1.0, width)
    y0 = np.minimum(ys.astype(np.int64), gh - 2)
    x0 = np.minimum(xs.astype(np.int64), gw - 2)
    fy = (ys - y0)[:, None]
    fx = (xs - x0)[None, :]
    noise = (
        grid[np.ix_(y0, x0)] * (1 - fy) * (1 - fx)
        + grid[np.ix_(y0 + 1, x0)] * fy * (1 - fx)
        + grid[np.ix_(y0, x0 + 1)] * (1 - fy) * fx
        + grid[np.ix_(y0 + 1, x0 + 1)] * fy * fx
    )

    d = grad + 0.15 * (2.0 * noise - 1.0)
    lo, hi = d.min(), d.max()
    if hi > lo:
        d = (d - lo) / (hi - lo)
    else:
        d = np.zeros_like(d)
    return d


def apply_recipe(
    img: ImageF32,
    recipe: Recipe,
    depth: DepthMap | None = None,
    image_lane: int = 0,
) -> ImageF32:
    """Apply all steps in order; randomness is derived per (image, step) lane."""
    img = as_image(img)
    needs_depth = any(s.kind in (DegradationKind.HAZE, DegradationKind.SNOW) for s in recipe.steps)
    if needs_depth and depth is None:
        depth_rng = derive_rng(recipe.master_seed, image_lane, _DEPTH_LANE)
        depth = synth_depth(img.shape[1], img.shape[0], depth_rng)
    out = img
    for step in recipe.steps:
        rng = derive_rng(recipe.master_seed, image_lane, step.step_index)
        out = apply_step(out, step, rng, depth)
    return out


def apply_step(img: ImageF32, step: DegradationStep, rng: RngStream, depth=None) -> ImageF32:
    kind, p = step.kind, step.params
    if kind is DegradationKind.RESIZE:
        return deg.degrade_resize(img, p)
    if kind is DegradationKind.BLUR:
        return deg.degrade_blur(img, p)
    if kind is DegradationKind.NOISE:
        return deg.degrade_noise(img, p, rng)
    if kind is DegradationKind.COMPRESSION:
        return deg.degrade_jpeg(img, p)
    if kind is DegradationKind.RINGING:
        return deg.degrade_ringing(img, p)
    if kind is DegradationKind.ALG_ARTIFACT:
        return deg.degrade_alg_artifact(img, p)
    if kind is DegradationKind.DAMAGE:
        return deg.degrade_damage(img, p, rng)
    if kind is DegradationKind.RAIN:
        return deg.degrade_rain(img, p, rng)
    if kind is DegradationKind.HAZE:
        return deg.degrade_haze(img, depth, p)
    if kind is DegradationKind.SNOW:
        return deg.degrade_snow(img, depth, p, rng)
    raise InvalidParam(f"unknown degradation kind {kind!r}")


# ----------------------------------------------------------------------------
# Serialization

_KIND_BY_NAME = {k.value: k for k in DegradationKind}


def recipe_to_dict(recipe: Recipe) -> dict:
    return {
        "schema_version": recipe.schema_version,
        "master_seed": recipe.master_seed,
        "steps": [
            {"kind": s.kind.value, "params": deg.params_to_dict(s.params)}
            for s in recipe.steps
        ],
    }


def recipe_from_dict(doc: dict) -> Recipe:
    if not isinstance(doc, dict):
        raise ParseError(f"recipe document must be an object, got {type(doc).__name__}")
    for key in ("schema_version", "master_seed", "steps"):
        if key not in doc:
            raise ParseError(f"recipe document missing field {key!r}")
    if doc["schema_version"] != SCHEMA_VERSION:
        raise SchemaVersionMismatch(
            f"schema_version {doc['schema_version']!r} (supported: {SCHEMA_VERSION})"
        )
    seed = doc["master_seed"]
    if not isinstance(seed, int) or not 0 <= seed < (1 << 64):
        raise ParseError(f"master_seed must be a u64 integer, got {seed!r}")
    if not isinstance(doc["steps"], list) or not doc["steps"]:
        raise ParseError("steps must be a non-empty array")
    steps = []
    for i, sdoc in enumerate(doc["steps"]):
        if not isinstance(sdoc, dict) or "kind" not in sdoc or "params" not in sdoc:
            raise ParseError(f"steps[{i}] must be an object with 'kind' and 'params'")
        kind = _KIND_BY_NAME.get(sdoc["kind"])
        if kind is None:
            raise ParseError(f"steps[{i}].kind: unknown kind {sdoc['kind']!r}")
        if not isinstance(sdoc["params"], dict):
            raise ParseError(f"steps[{i}].params must be an object")
        try:
            params = deg.params_from_dict(kind, sdoc["params"])
        except InvalidParam as e:
            raise ParseError(f"steps[{i}].params: {e}") from e
        steps.append(DegradationStep(kind, params, i))
    try:
        return Recipe(tuple(steps), master_seed=seed)
    except InvalidParam as e:
        raise ParseError(str(e)) from e


def serialize_recipe(recipe: Recipe) -> str:
    return json.dumps(recipe_to_dict(recipe), indent=2, sort_keys=True) + "\n"


def parse_recipe(text: str) -> Recipe:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON at line {e.lineno}, column {e.colno}: {e.msg}") from e
    return recipe_from_dict(doc)


def task_to_dict(task: TaskSpec) -> dict:
    return {
        "task_id": task.task_id,
        "mode": task.mode,
        "description": task.description,
        "recipe": recipe_to_dict(task.recipe),
    }


def task_from_dict(doc: dict) -> TaskSpec:
    for key in ("task_id", "recipe"):
        if key not in doc:
            raise ParseError(f"task document missing field {key!r}")
    return TaskSpec(
        task_id=str(doc["task_id"]),
        recipe=recipe_from_dict(doc["recipe"]),
        mode=doc.get("mode", "fixed_recipe"),
        description=doc.get("description", ""),
    )


def serialize_task_bank(tasks) -> str:
    ids = [t.task_id for t in tasks]
    if len(set(ids)) != len(ids):
        raise InvalidParam("task_ids must be unique within a bank")
    return json.dumps([task_to_dict(t) for t in tasks], indent=2, sort_keys=True) + "\n"


def parse_task_bank(text: str):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON at line {e.lineno}, column {e.colno}: {e.msg}") from e
    if not isinstance(doc, list):
        raise ParseError("task bank must be a JSON array")
    tasks = [task_from_dict(t) for t in doc]
    ids = [t.task_id for t in tasks]
    dupes = {i for i in ids if ids.count(i) > 1}
    if dupes:
        raise ParseError(f"duplicate task_id(s): {sorted(dupes)}")
    return tasks
