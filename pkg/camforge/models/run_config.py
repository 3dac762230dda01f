"""
Run configuration for CLI commands
"""
from typing import Optional
from pydantic import BaseModel, ConfigDict, Field
from camforge.core.config import settings
from camforge.models.fsl import FslParams, GatingInput
from camforge.models.refine import RefineConfig


class RunConfig(BaseModel):
    """Per-run knobs: defaults, then an optional JSON config file, then flags"""
    model_config = ConfigDict(extra="forbid", populate_by_name=True, frozen=True)

    # Classification loss
    profile: str = Field(default="binomial", pattern="^(binomial|multinomial)$")
    lam: Optional[float] = Field(
        default=None,
        alias="lambda",
        ge=0.0,
        le=1.0,
        description="Weight of the sampled loss; the profile's value when unset",
    )
    samples: int = Field(default=settings.SAMPLES, ge=1, description="Draws per class")
    seed: int = Field(default=0, ge=0)

    # Feature similarity loss
    mu: float = settings.MU
    sigma: float = Field(default=settings.SIGMA, gt=0)
    window: Optional[int] = Field(default=None, ge=1, description="Pair window radius in pixels")
    gating: Optional[GatingInput] = Field(default=None, description="Command default when unset")
    exact_pairs: bool = False
    fsl_weight: float = Field(default=settings.FSL_WEIGHT, ge=0.0)

    # Refinement
    step: float = Field(default=settings.STEP_SIZE, gt=0.0)
    iterations: int = Field(default=settings.ITERATIONS, ge=0)

    # Pseudo-labels
    bg_threshold: float = Field(default=settings.BG_THRESHOLD, gt=0.0, lt=1.0)

    def fsl_params(self, default_gating: GatingInput = GatingInput.MAXNORM) -> FslParams:
        return FslParams(
            mu=self.mu,
            sigma=self.sigma,
            window_radius=self.window,
            gating_input=self.gating or default_gating,
            exact_pairs=self.exact_pairs,
            loss_weight=self.fsl_weight,
        )

    def refine_config(self) -> RefineConfig:
        """Refinement settings; gating defaults to binomial"""
        return RefineConfig(
            step_size=self.step,
            iterations=self.iterations,
            params=self.fsl_params(GatingInput.BINOMIAL),
        )
