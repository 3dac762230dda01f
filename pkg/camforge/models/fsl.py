"""
Feature similarity loss models
"""
from enum import Enum
from typing import Optional, Tuple
from pydantic import BaseModel, ConfigDict, Field
from camforge.core.config import settings


class GatingInput(str, Enum):
    """Which map feeds the gating function g"""
    RAW = "raw"                  # scores s
    BINOMIAL = "binomial"        # sigmoid b
    MAXNORM = "maxnorm"          # relu / max r
    MULTINOMIAL = "multinomial"  # softmax a, original formulation


class FslParams(BaseModel):
    """Fixed (never trained) parameters of the feature similarity loss"""
    model_config = ConfigDict(frozen=True)

    mu: float = settings.MU
    sigma: float = Field(default=settings.SIGMA, gt=0)
    window_radius: Optional[int] = Field(default=None, ge=1)
    gating_input: GatingInput = GatingInput.MAXNORM
    class_mask: Optional[Tuple[bool, ...]] = None  # None means every class
    exact_pairs: bool = False
    loss_weight: float = Field(default=settings.FSL_WEIGHT, ge=0)

    def mask_for(self, num_classes: int) -> Tuple[bool, ...]:
        """Resolve the class mask for a map with num_classes channels"""
        if self.class_mask is None:
            return (True,) * num_classes
        if len(self.class_mask) != num_classes:
            raise ValueError(f"class mask has {len(self.class_mask)} entries, map has {num_classes} classes")
        return self.class_mask


class PairComponents(BaseModel):
    """Diagnostic breakdown of one pixel pair's contribution"""
    w: float = Field(ge=0)
    g: float = Field(ge=0)
    f: float = Field(ge=-1, le=1)


class GradientBoundReport(BaseModel):
    """Outcome of checking the gating-gradient bounds over random pixel pairs"""
    trials: int
    binomial_max_ratio: float        # max |dg/ds| / (e^s / (1 + e^s)^2)
    binomial_exp_max_ratio: float    # max |dg/ds| / e^-s over s >= 0
    binomial_violations: int
    maxnorm_max_ratio: float         # max |dg/ds| / (1 / max_m s_m) over s >= 0
    maxnorm_violations: int
    maxnorm_negative_nonzero: int    # pairs with s < 0 and a non-zero gradient
    raw_max_residual: float          # max |dg/ds - (s_i - s_j)|
    raw_max_gradient: float
    pair_term_violations: int        # |d(w g f)/ds| > w * bound

    @property
    def ok(self) -> bool:
        return (
            self.binomial_violations == 0
            and self.maxnorm_violations == 0
            and self.maxnorm_negative_nonzero == 0
            and self.raw_max_residual == 0.0
            and self.pair_term_violations == 0
        )
