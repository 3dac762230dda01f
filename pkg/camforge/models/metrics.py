"""
Label mask and evaluation report models
"""
from typing import List, Optional
import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator
from camforge.models.tensors import frozen_array


class LabelMask(BaseModel):
    """H x W class indices, 0 = background, 1..C = foreground classes"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    data: np.ndarray
    num_classes: Optional[int] = None

    @field_validator("data", mode="before")
    @classmethod
    def check_data(cls, v):
        array = np.asarray(v)
        if array.ndim != 2 or min(array.shape) < 1:
            raise ValueError(f"label mask must be H x W, got shape {array.shape}")
        if array.dtype.kind == "f" and not np.all(array == np.round(array)):
            raise ValueError("label mask must hold integers")
        array = frozen_array(array, dtype=np.int64)
        if array.min() < 0:
            raise ValueError("label mask values must be non-negative")
        return array

    @model_validator(mode="after")
    def check_range(self):
        if self.num_classes is not None and self.data.max() > self.num_classes:
            raise ValueError(f"label mask holds class {self.data.max()} > {self.num_classes}")
        return self

    @property
    def shape(self):
        return self.data.shape

    def binary(self, class_index: int) -> np.ndarray:
        return self.data == class_index


class ClassScoreReport(BaseModel):
    """Per-class scores indexed by class label 0..C (None when not scored) plus their mean"""
    per_class: List[Optional[float]]
    mean: float


class MetricReport(BaseModel):
    """Region similarity J, contour quality F and their average J&F"""
    per_class_j: List[Optional[float]]
    per_class_f: List[Optional[float]]
    mean_j: float
    mean_f: float
    jf: float

    @model_validator(mode="after")
    def check_jf(self):
        if abs(self.jf - (self.mean_j + self.mean_f) / 2.0) > 1e-12:
            raise ValueError("jf must equal (mean_j + mean_f) / 2")
        return self
