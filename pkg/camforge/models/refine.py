"""
CAM refinement models
"""
from typing import List, Optional, Tuple
from pydantic import BaseModel, ConfigDict, Field, field_validator
from camforge.core.config import settings
from camforge.models.fsl import FslParams, GatingInput
from camforge.models.tensors import ScoreMap

VARIANCE_FLOOR = 0.25


class GaussianCamSpec(BaseModel):
    """Axis-aligned Gaussian fitted to a foreground mask, in pixel units (row, col)"""
    model_config = ConfigDict(frozen=True)

    mean: Tuple[float, float]
    variances: Tuple[float, float]

    @field_validator("variances")
    @classmethod
    def check_variances(cls, v):
        if min(v) <= 0:
            raise ValueError("variances must be strictly positive")
        return v


def default_refine_params() -> FslParams:
    return FslParams(gating_input=GatingInput.BINOMIAL)


class RefineConfig(BaseModel):
    """Plain gradient descent settings for FSL-only refinement"""
    model_config = ConfigDict(frozen=True)

    step_size: float = Field(default=settings.STEP_SIZE, gt=0)
    iterations: int = Field(default=settings.ITERATIONS, ge=0)
    params: FslParams = Field(default_factory=default_refine_params)


class RefineResult(BaseModel):
    """Refined scores and the loss at every iteration (initial loss included)"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    scores: ScoreMap
    loss_trace: List[float]
    iterations_run: int


class SweepPoint(BaseModel):
    """Corpus-averaged metrics for one (mu, sigma) pair"""
    mu: float
    sigma: float
    mean_j: float
    mean_f: float
    jf: float
    initial_j: Optional[float] = None
    initial_f: Optional[float] = None


class SweepReport(BaseModel):
    """Grid of sweep points in (mu, sigma) row-major order"""
    points: List[SweepPoint]
    mu_grid: List[float]
    sigma_grid: List[float]

    @property
    def best(self) -> SweepPoint:
        best = self.points[0]
        for point in self.points[1:]:
            if point.jf > best.jf:  # first maximum in grid order wins
                best = point
        return best
