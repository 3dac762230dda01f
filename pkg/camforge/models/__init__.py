"""
Pydantic models for camforge tensors, losses, refinement and metrics
"""
from camforge.models.tensors import (
    PosteriorKind,
    ScoreMap,
    PosteriorMap,
    ImageLevelScores,
    RgbImage,
)
from camforge.models.sampling import LabelVector, SamplingDistribution, SampleSet, LossResult, LossBreakdown
from camforge.models.fsl import GatingInput, FslParams, PairComponents, GradientBoundReport
from camforge.models.refine import GaussianCamSpec, RefineConfig, RefineResult, SweepPoint, SweepReport
from camforge.models.metrics import LabelMask, ClassScoreReport, MetricReport
from camforge.models.run_config import RunConfig

__all__ = [
    "PosteriorKind",
    "ScoreMap",
    "PosteriorMap",
    "ImageLevelScores",
    "RgbImage",
    "LabelVector",
    "SamplingDistribution",
    "SampleSet",
    "LossResult",
    "LossBreakdown",
    "GatingInput",
    "FslParams",
    "PairComponents",
    "GradientBoundReport",
    "GaussianCamSpec",
    "RefineConfig",
    "RefineResult",
    "SweepPoint",
    "SweepReport",
    "LabelMask",
    "ClassScoreReport",
    "MetricReport",
    "RunConfig",
]
