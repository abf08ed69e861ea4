"""Deterministic image degradation synthesis and restoration benchmark toolkit."""

from .degradations import (
    DegradationKind,
    representative_params,
    sample_params,
)
from .evaluation import (
    MetricReport,
    ScoreTable,
    acceptance_ratio,
    calinski_harabasz,
    excellence_ratio,
    psnr,
)
from .imaging import load_image, resample, save_image
from .pipeline import (
    Recipe,
    TaskSpec,
    apply_recipe,
    parse_recipe,
    sample_recipe,
    serialize_recipe,
    synth_depth,
)
from .rng import RngStream, derive_rng, lane_of

__version__ = "0.1.0"

__all__ = [
    "DegradationKind",
    "MetricReport",
    "Recipe",
    "RngStream",
    "ScoreTable",
    "TaskSpec",
    "acceptance_ratio",
    "apply_recipe",
    "calinski_harabasz",
    "derive_rng",
    "excellence_ratio",
    "lane_of",
    "load_image",
    "parse_recipe",
    "psnr",
    "representative_params",
    "resample",
    "sample_params",
    "sample_recipe",
    "save_image",
    "serialize_recipe",
    "synth_depth",
]
