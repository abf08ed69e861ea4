"""PSNR, acceptance/excellence ratios, Calinski-Harabasz index, reports.

A model is scored per task (mean PSNR over the task's ground-truth images)
and compared against two per-task baseline tables: the acceptance line (what a
small specialist model reaches) and the excellence line (what a strong
specialist reaches). AR/ER are the fractions of tasks where the model's score
meets each line, inclusively, with higher scores better.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    DimensionMismatch,
    InvalidParam,
    MissingOutput,
    ParseError,
    TaskSetMismatch,
)
from .imaging import ImageF32, as_image, load_image


def psnr(a: ImageF32, b: ImageF32) -> float:
    """10*log10(1/MSE) over all H*W*3 samples; +inf when identical."""
    a, b = as_image(a), as_image(b)
    if a.shape != b.shape:
        raise DimensionMismatch(f"shape mismatch: {a.shape} vs {b.shape}")
    mse = float(np.mean((a.astype(np.float64) - b.astype(np.float64)) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


@dataclass(frozen=True)
class ScoreTable:
    rows: dict
    label: str = ""

    def __post_init__(self):
        for task_id, score in self.rows.items():
            if not isinstance(score, float) or math.isnan(score):
                raise InvalidParam(f"score for task {task_id!r} must be a real or +inf")


def _paired(model: ScoreTable, baseline: ScoreTable):
    if set(model.rows) != set(baseline.rows):
        missing = sorted(set(baseline.rows) - set(model.rows))
        extra = sorted(set(model.rows) - set(baseline.rows))
        raise TaskSetMismatch(f"task sets differ (missing {missing}, extra {extra})")
    return [(tid, model.rows[tid], baseline.rows[tid]) for tid in model.rows]


def acceptance_ratio(model: ScoreTable, acceptance: ScoreTable) -> float:
    pairs = _paired(model, acceptance)
    return sum(1 for _, m, b in pairs if m >= b) / len(pairs)


def excellence_ratio(model: ScoreTable, excellence: ScoreTable) -> float:
    return acceptance_ratio(model, excellence)


def average_score(table: ScoreTable) -> float:
    """Mean over finite per-task scores (+inf entries are excluded)."""
    finite = [v for v in table.rows.values() if math.isfinite(v)]
    if not finite:
        return math.inf
    return float(np.mean(finite))


def calinski_harabasz(features, labels) -> float:
    x = np.asarray(features, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    labels = np.asarray(labels)
    if x.shape[0] != labels.shape[0]:
        raise InvalidParam("features and labels must have equal length")
    uniq = np.unique(labels)
    n, k = x.shape[0], uniq.size
    if k < 2:
        raise InvalidParam(f"need at least 2 clusters, got {k}")
    if n <= k:
        raise InvalidParam(f"need more points ({n}) than clusters ({k})")
    mu = x.mean(axis=0)
    between = 0.0
    within = 0.0
    for c in uniq:
        xc = x[labels == c]
        mc = xc.mean(axis=0)
        between += xc.shape[0] * float(np.sum((mc - mu) ** 2))
        within += float(np.sum((xc - mc) ** 2))
    if within == 0.0:
        return math.inf
    return (between / (k - 1)) / (within / (n - k))


# ----------------------------------------------------------------------------
# Tables and reports


def load_score_table(path, label: str = "") -> ScoreTable:
    path = Path(path)
    rows = {}
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["task_id", "score"]:
            raise ParseError(f"{path}: expected header 'task_id,score', got {header!r}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise ParseError(f"{path}:{lineno}: expected 2 fields, got {len(row)}")
            task_id = row[0].strip()
            if task_id in rows:
                raise ParseError(f"{path}:{lineno}: duplicate task_id {task_id!r}")
            raw = row[1].strip()
            if raw in ("inf", "+inf", "Infinity"):
                rows[task_id] = math.inf
                continue
            try:
                rows[task_id] = float(raw)
            except ValueError as e:
                raise ParseError(f"{path}:{lineno}: non-numeric score {raw!r}") from e
            if math.isnan(rows[task_id]):
                raise ParseError(f"{path}:{lineno}: NaN score for {task_id!r}")
    return ScoreTable(rows, label=label or path.stem)


@dataclass(frozen=True)
class MetricReport:
    per_task: dict  # task_id -> dict(model, acceptance, excellence, meets_*)
    ar: float
    er: float
    avg_psnr: float
    task_count: int


def build_report(model: ScoreTable, acceptance: ScoreTable, excellence: ScoreTable) -> MetricReport:
    _paired(model, acceptance)
    _paired(model, excellence)
    per_task = {}
    for tid in sorted(model.rows):
        m = model.rows[tid]
        per_task[tid] = {
            "model": m,
            "acceptance": acceptance.rows[tid],
            "excellence": excellence.rows[tid],
            "meets_acceptance": m >= acceptance.rows[tid],
            "meets_excellence": m >= excellence.rows[tid],
        }
    n = len(per_task)
    return MetricReport(
        per_task=per_task,
        ar=sum(1 for r in per_task.values() if r["meets_acceptance"]) / n,
        er=sum(1 for r in per_task.values() if r["meets_excellence"]) / n,
        avg_psnr=average_score(model),
        task_count=n,
    )


def write_report(report: MetricReport, path) -> None:
    """CSV report plus a text summary at <path>.txt; both written atomically."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(
            ["task_id", "model", "acceptance", "excellence", "meets_acceptance", "meets_excellence"]
        )
        for tid, r in report.per_task.items():
            w.writerow(
                [tid, repr(r["model"]), repr(r["acceptance"]), repr(r["excellence"]),
                 int(r["meets_acceptance"]), int(r["meets_excellence"])]
            )
    os.replace(tmp, path)

    summary = path.with_name(path.name + ".txt")
    tmp = summary.with_name(summary.name + ".tmp")
    lines = [
        "Restoration generality report",
        "metric: PSNR over RGB samples, MAX=1, full image",
        f"tasks: {report.task_count}",
        f"AR {report.ar:.4f}",
        f"ER {report.er:.4f}",
        f"avg_psnr {report.avg_psnr:.4f}",
        "",
    ]
    for tid, r in report.per_task.items():
        marks = ("A" if r["meets_acceptance"] else "-") + ("E" if r["meets_excellence"] else "-")
        lines.append(f"  task {tid}: {r['model']:.2f} dB [{marks}]")
    tmp.write_text("\n".join(lines) + "\n", encoding="utf-8")
    os.replace(tmp, summary)


def evaluate_outputs(outputs_dir, gt_dir, manifest, acceptance: ScoreTable, excellence: ScoreTable) -> MetricReport:
    """Score restored images in outputs_dir/<task_id>/<gt_id>.png against GT."""
    outputs_dir, gt_dir = Path(outputs_dir), Path(gt_dir)
    missing = []
    for task in manifest.tasks:
        for gt in manifest.gt_images:
            p = outputs_dir / task.task_id / f"{gt['id']}.png"
            if not p.exists():
                missing.append(str(p))
    if missing:
        raise MissingOutput(missing)

    gts = {gt["id"]: load_image(gt_dir / gt["path"]) for gt in manifest.gt_images}
    rows = {}
    for task in manifest.tasks:
        scores = []
        for gt in manifest.gt_images:
            restored = load_image(outputs_dir / task.task_id / f"{gt['id']}.png")
            scores.append(psnr(restored, gts[gt["id"]]))
        finite = [v for v in scores if math.isfinite(v)]
        rows[task.task_id] = float(np.mean(finite)) if finite else math.inf
    model = ScoreTable(rows, label="model")
    return build_report(model, acceptance, excellence)
