"""
Core tensor models: score maps, posterior maps, pooled scores and images
"""
from enum import Enum
from typing import Tuple
import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator


def frozen_array(value, dtype=np.float64) -> np.ndarray:
    """Copy value into a read-only array of the given dtype"""
    array = np.array(value, dtype=dtype)
    array.flags.writeable = False
    return array


class PosteriorKind(str, Enum):
    """Which normalization produced a posterior map"""
    MULTINOMIAL = "multinomial"  # softmax over classes
    BINOMIAL = "binomial"        # per-class sigmoid
    MAXNORM = "maxnorm"          # relu / spatial max


class ScoreMap(BaseModel):
    """C x H x W class scores (logits), the raw CAM"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    data: np.ndarray

    @field_validator("data", mode="before")
    @classmethod
    def check_data(cls, v):
        array = frozen_array(v)
        if array.ndim != 3 or min(array.shape) < 1:
            raise ValueError(f"score map must be C x H x W with positive sizes, got shape {array.shape}")
        if not np.all(np.isfinite(array)):
            raise ValueError("score map contains non-finite values")
        return array

    @property
    def num_classes(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]

    @property
    def shape(self) -> Tuple[int, int, int]:
        return self.data.shape


class PosteriorMap(BaseModel):
    """C x H x W values in [0, 1] tagged with the normalization that produced them"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    data: np.ndarray
    kind: PosteriorKind

    @field_validator("data", mode="before")
    @classmethod
    def check_data(cls, v):
        array = frozen_array(v)
        if array.ndim != 3 or min(array.shape) < 1:
            raise ValueError(f"posterior map must be C x H x W, got shape {array.shape}")
        if not np.all(np.isfinite(array)):
            raise ValueError("posterior map contains non-finite values")
        if array.min() < 0.0 or array.max() > 1.0:
            raise ValueError("posterior map entries must lie in [0, 1]")
        return array

    @model_validator(mode="after")
    def check_kind_invariants(self):
        if self.kind == PosteriorKind.MULTINOMIAL:
            sums = self.data.sum(axis=0)
            if np.max(np.abs(sums - 1.0)) > 1e-6:
                raise ValueError("multinomial posterior must sum to 1 over classes at every pixel")
        elif self.kind == PosteriorKind.MAXNORM:
            for c in range(self.data.shape[0]):
                peak = self.data[c].max()
                if peak > 0.0 and abs(peak - 1.0) > 1e-6:
                    raise ValueError(f"max-normalized channel {c} has maximum {peak}, expected 1")
        return self

    @property
    def num_classes(self) -> int:
        return self.data.shape[0]

    @property
    def shape(self) -> Tuple[int, int, int]:
        return self.data.shape


class ImageLevelScores(BaseModel):
    """Pooled class scores S_c and their logistic posteriors B_c"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    values: np.ndarray
    posterior: np.ndarray

    @field_validator("values", "posterior", mode="before")
    @classmethod
    def check_vector(cls, v):
        array = frozen_array(v)
        if array.ndim != 1:
            raise ValueError("image-level scores must be a vector")
        return array

    @model_validator(mode="after")
    def check_posterior(self):
        from scipy.special import expit

        if self.values.shape != self.posterior.shape:
            raise ValueError("values and posterior must have the same length")
        if np.max(np.abs(expit(self.values) - self.posterior), initial=0.0) > 1e-9:
            raise ValueError("posterior must equal logistic(values)")
        return self


class RgbImage(BaseModel):
    """H x W x 3 colour image with channel values in [0, 1]"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    data: np.ndarray

    @field_validator("data", mode="before")
    @classmethod
    def check_data(cls, v):
        array = frozen_array(v)
        if array.ndim != 3 or array.shape[2] != 3 or min(array.shape) < 1:
            raise ValueError(f"image must be H x W x 3, got shape {array.shape}")
        if not np.all(np.isfinite(array)) or array.min() < 0.0 or array.max() > 1.0:
            raise ValueError("image values must lie in [0, 1]")
        return array

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]
