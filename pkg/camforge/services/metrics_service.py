"""
Metrics Service
Region similarity J (Jaccard / mIoU), contour quality F (boundary F-score
with a distance tolerance) and their average J&F.
"""
import math
from typing import Iterable, List, Optional, Tuple
import numpy as np
from scipy import ndimage
from camforge.core.exceptions import DimensionError, EmptyInputError
from camforge.models.metrics import ClassScoreReport, LabelMask, MetricReport
from camforge.utils.logger import get_logger

logger = get_logger(__name__)

# 4-neighbourhood
CROSS = ndimage.generate_binary_structure(2, 1)


def _check_pair(pred: LabelMask, gt: LabelMask, num_classes: int) -> None:
    if pred.shape != gt.shape:
        raise DimensionError(f"prediction is {pred.shape} but ground truth is {gt.shape}")
    top = max(int(pred.data.max()), int(gt.data.max()))
    if top > num_classes:
        raise DimensionError(f"mask holds class {top} but only {num_classes} classes were declared")


def _mean(values: Iterable[Optional[float]], empty: float) -> float:
    scored = [v for v in values if v is not None]
    return float(np.mean(scored)) if scored else empty


def region_similarity(pred: LabelMask, gt: LabelMask, num_classes: int) -> ClassScoreReport:
    """
    Jaccard index per class, background (0) included

    Classes with an empty union are not scored and left out of the mean.
    """
    _check_pair(pred, gt, num_classes)

    per_class: List[Optional[float]] = []
    for c in range(num_classes + 1):
        p = pred.binary(c)
        g = gt.binary(c)
        union = int(np.sum(p | g))
        per_class.append(None if union == 0 else int(np.sum(p & g)) / union)

    return ClassScoreReport(per_class=per_class, mean=_mean(per_class, empty=1.0))


def default_tolerance(height: int, width: int) -> int:
    """Boundary matching tolerance, ceil(0.8% of the image diagonal)"""
    return int(math.ceil(0.008 * math.hypot(height, width)))


def disc(radius: int) -> np.ndarray:
    """Euclidean disc rasterized by rounding: offsets with round(distance) <= radius"""
    span = np.arange(-radius, radius + 1)
    squared = span[:, None] ** 2 + span[None, :] ** 2
    return squared <= radius * radius + radius


def boundary_map(mask: np.ndarray) -> np.ndarray:
    """Foreground pixels with a 4-neighbour of another value or on the image border"""
    mask = np.asarray(mask, dtype=bool)
    interior = ndimage.binary_erosion(mask, structure=CROSS, border_value=0)
    return mask & ~interior


def boundary_f(pred: np.ndarray, gt: np.ndarray, tolerance_px: int) -> float:
    """
    Boundary F-score of two binary masks

    Precision is the share of predicted boundary pixels inside the ground
    truth boundary dilated by a disc of radius tolerance_px; recall swaps
    the roles.
    """
    pred_boundary = boundary_map(pred)
    gt_boundary = boundary_map(gt)
    n_pred = int(pred_boundary.sum())
    n_gt = int(gt_boundary.sum())

    if n_pred == 0 and n_gt == 0:
        return 1.0
    if n_pred == 0 or n_gt == 0:
        return 0.0

    structure = disc(tolerance_px)
    gt_zone = ndimage.binary_dilation(gt_boundary, structure=structure)
    pred_zone = ndimage.binary_dilation(pred_boundary, structure=structure)

    precision = float(np.sum(pred_boundary & gt_zone)) / n_pred
    recall = float(np.sum(gt_boundary & pred_zone)) / n_gt
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def contour_quality(
    pred: LabelMask,
    gt: LabelMask,
    num_classes: int,
    tolerance_px: Optional[int] = None,
) -> ClassScoreReport:
    """
    Boundary F-score per foreground class present in pred or gt

    Index 0 (background) is never scored. With no foreground class in
    either mask the mean is 1.
    """
    _check_pair(pred, gt, num_classes)
    if tolerance_px is None:
        tolerance_px = default_tolerance(*pred.shape)

    per_class: List[Optional[float]] = [None]
    for c in range(1, num_classes + 1):
        p = pred.binary(c)
        g = gt.binary(c)
        if not p.any() and not g.any():
            per_class.append(None)
            continue
        per_class.append(boundary_f(p, g, tolerance_px))

    return ClassScoreReport(per_class=per_class, mean=_mean(per_class, empty=1.0))


def jf_score(j_report: ClassScoreReport, f_report: ClassScoreReport) -> MetricReport:
    """Combine J and F reports of the same mask pair"""
    return MetricReport(
        per_class_j=j_report.per_class,
        per_class_f=f_report.per_class,
        mean_j=j_report.mean,
        mean_f=f_report.mean,
        jf=(j_report.mean + f_report.mean) / 2.0,
    )


def evaluate(
    pred: LabelMask,
    gt: LabelMask,
    num_classes: int,
    tolerance_px: Optional[int] = None,
) -> MetricReport:
    """J, F and J&F for one mask pair"""
    return jf_score(
        region_similarity(pred, gt, num_classes),
        contour_quality(pred, gt, num_classes, tolerance_px),
    )


def evaluate_dataset(
    pairs: List[Tuple[LabelMask, LabelMask]],
    num_classes: int,
    tolerance_px: Optional[int] = None,
) -> MetricReport:
    """
    Dataset-level J, F and J&F

    Per-image per-class scores are averaged per image over the classes
    present, then the per-image means are averaged over images. Per-class
    entries average each class over the images where it was scored.
    """
    if not pairs:
        raise EmptyInputError("no mask pairs to evaluate")

    reports = [evaluate(pred, gt, num_classes, tolerance_px) for pred, gt in pairs]

    def per_class_mean(column: str) -> List[Optional[float]]:
        table = [getattr(report, column) for report in reports]
        means: List[Optional[float]] = []
        for c in range(num_classes + 1):
            scored = [row[c] for row in table if row[c] is not None]
            means.append(float(np.mean(scored)) if scored else None)
        return means

    mean_j = float(np.mean([r.mean_j for r in reports]))
    mean_f = float(np.mean([r.mean_f for r in reports]))
    logger.info(f"Evaluated {len(pairs)} image(s): J={mean_j:.4f} F={mean_f:.4f}")

    return MetricReport(
        per_class_j=per_class_mean("per_class_j"),
        per_class_f=per_class_mean("per_class_f"),
        mean_j=mean_j,
        mean_f=mean_f,
        jf=(mean_j + mean_f) / 2.0,
    )
