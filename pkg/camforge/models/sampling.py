"""
Importance sampling models: labels, pixel distributions, samples and loss results
"""
from typing import Iterable, Optional, Tuple
import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator
from camforge.models.tensors import PosteriorKind, frozen_array


class LabelVector(BaseModel):
    """Image-level labels y_c, 1 if class c is present anywhere in the image"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    y: np.ndarray

    @field_validator("y", mode="before")
    @classmethod
    def check_y(cls, v):
        array = frozen_array(v)
        if array.ndim != 1 or array.size < 1:
            raise ValueError("label vector must be a non-empty vector")
        if not np.all((array == 0.0) | (array == 1.0)):
            raise ValueError("labels must be 0 or 1")
        return array

    @classmethod
    def from_indices(cls, indices: Iterable[int], num_classes: int) -> "LabelVector":
        """Build a label vector with ones at the given channel indices"""
        y = np.zeros(num_classes)
        for index in indices:
            if not 0 <= index < num_classes:
                raise ValueError(f"class index {index} out of range for {num_classes} classes")
            y[index] = 1.0
        return cls(y=y)

    @property
    def num_classes(self) -> int:
        return self.y.shape[0]

    @property
    def present(self) -> np.ndarray:
        return self.y > 0.5


class SamplingDistribution(BaseModel):
    """Per-class probability mass function over pixel coordinates"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    pmf: np.ndarray
    valid_channel: np.ndarray

    @field_validator("pmf", mode="before")
    @classmethod
    def check_pmf(cls, v):
        array = frozen_array(v)
        if array.ndim != 3:
            raise ValueError("pmf must be C x H x W")
        if array.min() < 0.0:
            raise ValueError("pmf entries must be non-negative")
        return array

    @field_validator("valid_channel", mode="before")
    @classmethod
    def check_valid(cls, v):
        return frozen_array(v, dtype=bool)

    @model_validator(mode="after")
    def check_mass(self):
        if self.valid_channel.shape != (self.pmf.shape[0],):
            raise ValueError("valid_channel must have one flag per class")
        sums = self.pmf.reshape(self.pmf.shape[0], -1).sum(axis=1)
        for c, valid in enumerate(self.valid_channel):
            if valid and abs(sums[c] - 1.0) > 1e-9:
                raise ValueError(f"pmf channel {c} sums to {sums[c]}, expected 1")
            if not valid and sums[c] != 0.0:
                raise ValueError(f"invalid pmf channel {c} must be all zeros")
        return self


class SampleSet(BaseModel):
    """N x C drawn pixel coordinates and the posterior values found there"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    indices: np.ndarray       # N x C x 2 (row, col)
    values: np.ndarray        # N x C
    valid_channel: np.ndarray  # C, False where the channel had no mass
    kind: PosteriorKind
    source_shape: Tuple[int, int, int]

    @field_validator("indices", mode="before")
    @classmethod
    def check_indices(cls, v):
        array = frozen_array(v, dtype=np.int64)
        if array.ndim != 3 or array.shape[2] != 2:
            raise ValueError("indices must be N x C x 2")
        return array

    @field_validator("values", mode="before")
    @classmethod
    def check_values(cls, v):
        array = frozen_array(v)
        if array.ndim != 2 or array.min() < 0.0 or array.max() > 1.0:
            raise ValueError("sample values must be an N x C array in [0, 1]")
        return array

    @field_validator("valid_channel", mode="before")
    @classmethod
    def check_valid(cls, v):
        return frozen_array(v, dtype=bool)

    @model_validator(mode="after")
    def check_shapes(self):
        if self.indices.shape[:2] != self.values.shape:
            raise ValueError("indices and values disagree on N x C")
        if self.values.shape[1] != self.source_shape[0] or self.valid_channel.shape != (self.source_shape[0],):
            raise ValueError("sample set class count disagrees with its source map")
        return self

    @property
    def num_samples(self) -> int:
        return self.values.shape[0]


class LossResult(BaseModel):
    """Scalar loss and its gradient with respect to the input scores"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    value: float
    grad: np.ndarray

    @field_validator("grad", mode="before")
    @classmethod
    def check_grad(cls, v):
        array = frozen_array(v)
        if array.ndim != 3:
            raise ValueError("gradient must be C x H x W")
        if not np.all(np.isfinite(array)):
            raise ValueError("gradient contains non-finite values")
        return array

    def scaled(self, weight: float) -> "LossResult":
        """Multiply value and gradient by a constant"""
        return LossResult(value=weight * self.value, grad=weight * self.grad)

    def __add__(self, other: "LossResult") -> "LossResult":
        if self.grad.shape != other.grad.shape:
            raise ValueError("cannot add losses over different shapes")
        return LossResult(value=self.value + other.value, grad=self.grad + other.grad)


class LossBreakdown(BaseModel):
    """Training objective and the terms it was assembled from"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    total: LossResult
    cls_loss: float
    ce_loss: float
    isl_loss: Optional[float] = None  # None when lambda = 0 (no sampling)
    fsl_loss: float
    fsl_weight: float
