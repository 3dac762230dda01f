"""
Refine Service
Network-free CAM refinement: a Gaussian CAM fitted to a mask is improved by
plain gradient descent on the feature similarity loss alone, then
thresholded at zero and scored. Also runs the (mu, sigma) sweep.
"""
import math
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Sequence, Tuple
import numpy as np
from pydantic import ValidationError
from camforge.core.config import settings
from camforge.core.exceptions import ConfigError, DimensionError, DivergenceError, EmptyInputError
from camforge.models.fsl import FslParams
from camforge.models.metrics import LabelMask, MetricReport
from camforge.models.refine import (
    VARIANCE_FLOOR,
    GaussianCamSpec,
    RefineConfig,
    RefineResult,
    SweepPoint,
    SweepReport,
)
from camforge.models.tensors import RgbImage, ScoreMap
from camforge.services.feature_similarity_service import FeatureSimilarityOperator
from camforge.services.labeling_service import threshold_scores
from camforge.services.metrics_service import evaluate
from camforge.utils.logger import get_logger

logger = get_logger(__name__)

Sample = Tuple[RgbImage, LabelMask]


# ========================================
# Gaussian initialization
# ========================================

def gaussian_spec_from_mask(mask: LabelMask, foreground_class: Optional[int] = None) -> GaussianCamSpec:
    """
    Centroid and per-axis variance of the foreground pixels

    Args:
        mask: Label mask
        foreground_class: Class to fit; None means any non-zero label

    Returns:
        GaussianCamSpec: mean (row, col) and variances floored at 0.25
    """
    foreground = mask.data > 0 if foreground_class is None else mask.binary(foreground_class)
    rows, cols = np.nonzero(foreground)
    if rows.size == 0:
        raise EmptyInputError("mask has no foreground pixels to fit a Gaussian to")

    variances = (max(float(rows.var()), VARIANCE_FLOOR), max(float(cols.var()), VARIANCE_FLOOR))
    return GaussianCamSpec(mean=(float(rows.mean()), float(cols.mean())), variances=variances)


def render_gaussian_cam(
    spec: GaussianCamSpec,
    shape: Tuple[int, int],
    offset: Tuple[float, float] = (0.0, 0.0),
) -> ScoreMap:
    """
    Single-channel scores 2 G - 1 from a separable Gaussian with peak 1

    Args:
        spec: Mean and variances in pixels
        shape: Target (H, W)
        offset: Shift of the mean in pixels (row, col)
    """
    height, width = shape
    mean_row = spec.mean[0] + offset[0]
    mean_col = spec.mean[1] + offset[1]
    along_rows = np.exp(-((np.arange(height) - mean_row) ** 2) / (2.0 * spec.variances[0]))
    along_cols = np.exp(-((np.arange(width) - mean_col) ** 2) / (2.0 * spec.variances[1]))
    gaussian = np.outer(along_rows, along_cols)
    return ScoreMap(data=(2.0 * gaussian - 1.0)[None, :, :])


def fit_gaussian_cam(
    mask: LabelMask,
    target_shape: Optional[Tuple[int, int]] = None,
    offset: Tuple[float, float] = (0.0, 0.0),
    foreground_class: Optional[int] = None,
) -> ScoreMap:
    """Gaussian CAM fitted to the mask's foreground, rendered at target_shape (default: mask size)"""
    spec = gaussian_spec_from_mask(mask, foreground_class)
    shape = mask.shape if target_shape is None else target_shape
    if tuple(shape) != tuple(mask.shape):
        # mask coordinates are rescaled to the target grid
        scale_row = shape[0] / mask.shape[0]
        scale_col = shape[1] / mask.shape[1]
        spec = GaussianCamSpec(
            mean=((spec.mean[0] + 0.5) * scale_row - 0.5, (spec.mean[1] + 0.5) * scale_col - 0.5),
            variances=(
                max(spec.variances[0] * scale_row ** 2, VARIANCE_FLOOR),
                max(spec.variances[1] * scale_col ** 2, VARIANCE_FLOOR),
            ),
        )
    logger.debug(f"Gaussian CAM: mean={spec.mean} variances={spec.variances} offset={offset}")
    return render_gaussian_cam(spec, shape, offset)


# ========================================
# Gradient descent
# ========================================

def refine_cam(initial: ScoreMap, image: RgbImage, config: Optional[RefineConfig] = None) -> RefineResult:
    """
    Plain gradient descent s <- s - step * dL_fs/ds

    Args:
        initial: Scores to refine
        image: RGB image at CAM resolution
        config: Step size, iteration count and FSL parameters

    Returns:
        RefineResult: final scores and iterations + 1 loss values
    """
    config = config or RefineConfig()
    if (image.height, image.width) != (initial.height, initial.width):
        raise DimensionError(
            f"image is {image.height}x{image.width} but CAM is {initial.height}x{initial.width}"
        )

    operator = FeatureSimilarityOperator(image, config.params)
    scores = initial
    trace: List[float] = []

    for iteration in range(config.iterations + 1):
        try:
            result = operator.loss(scores)
        except ValidationError as exc:
            logger.error(f"Non-finite gradient at iteration {iteration}")
            raise DivergenceError(iteration) from exc
        if not math.isfinite(result.value):
            logger.error(f"Non-finite loss at iteration {iteration}")
            raise DivergenceError(iteration, result.value)
        trace.append(result.value)

        if iteration == config.iterations:
            break

        updated = scores.data - config.step_size * result.grad
        if not np.all(np.isfinite(updated)):
            logger.error(f"Scores overflowed after iteration {iteration}")
            raise DivergenceError(iteration + 1, float("nan"))
        scores = ScoreMap(data=updated)

    logger.info(
        f"Refined {initial.num_classes}x{initial.height}x{initial.width} CAM: "
        f"{config.iterations} iterations, loss {trace[0]:.6g} -> {trace[-1]:.6g}"
    )
    return RefineResult(scores=scores, loss_trace=trace, iterations_run=config.iterations)


# ========================================
# Evaluation protocol
# ========================================

def _single_object(mask: LabelMask) -> LabelMask:
    classes = np.unique(mask.data[mask.data > 0])
    if classes.size > 1:
        raise ConfigError(f"refinement protocol needs single-object masks, found classes {classes.tolist()}")
    return LabelMask(data=(mask.data > 0).astype(np.int64), num_classes=1)


def evaluate_refinement(
    image: RgbImage,
    mask: LabelMask,
    config: Optional[RefineConfig] = None,
    offset: Tuple[float, float] = (0.0, 0.0),
    tolerance_px: Optional[int] = None,
) -> Tuple[MetricReport, MetricReport]:
    """
    Fit a Gaussian CAM to the mask, refine it and score both zero-thresholded masks

    Returns:
        (initial report, refined report) against the object mask
    """
    truth = _single_object(mask)
    if (image.height, image.width) != truth.shape:
        raise DimensionError(f"image is {image.height}x{image.width} but mask is {truth.shape}")

    initial = fit_gaussian_cam(truth, offset=offset)
    refined = refine_cam(initial, image, config)

    before = evaluate(threshold_scores(initial), truth, 1, tolerance_px)
    after = evaluate(threshold_scores(refined.scores), truth, 1, tolerance_px)
    return before, after


def _sweep_point(
    samples: Sequence[Sample],
    mu: float,
    sigma: float,
    config: RefineConfig,
    offset: Tuple[float, float],
) -> SweepPoint:
    params = FslParams(**{**config.params.model_dump(), "mu": mu, "sigma": sigma})
    point_config = RefineConfig(step_size=config.step_size, iterations=config.iterations, params=params)

    reports = [evaluate_refinement(image, mask, point_config, offset) for image, mask in samples]
    mean_j = float(np.mean([after.mean_j for _, after in reports]))
    mean_f = float(np.mean([after.mean_f for _, after in reports]))
    point = SweepPoint(
        mu=mu,
        sigma=sigma,
        mean_j=mean_j,
        mean_f=mean_f,
        jf=(mean_j + mean_f) / 2.0,
        initial_j=float(np.mean([before.mean_j for before, _ in reports])),
        initial_f=float(np.mean([before.mean_f for before, _ in reports])),
    )
    logger.info(f"Sweep point mu={mu} sigma={sigma}: J={point.mean_j:.4f} F={point.mean_f:.4f}")
    return point


def sweep_mu_sigma(
    samples: Sequence[Sample],
    mu_grid: Sequence[float],
    sigma_grid: Sequence[float],
    config: Optional[RefineConfig] = None,
    threads: int = settings.THREADS,
    offset: Tuple[float, float] = (0.0, 0.0),
) -> SweepReport:
    """
    Corpus-averaged J, F and J&F of refined CAMs for every (mu, sigma)

    Args:
        samples: (image, single-object mask) pairs
        mu_grid: Dissimilarity offsets
        sigma_grid: Spatial bandwidths
        config: Refinement settings shared by all points
        threads: Worker threads; points are returned in grid order regardless

    Returns:
        SweepReport: points in (mu, sigma) row-major order
    """
    if not samples:
        raise EmptyInputError("sweep needs at least one sample")
    if not mu_grid or not sigma_grid:
        raise ConfigError("mu and sigma grids must be non-empty")

    config = config or RefineConfig()
    grid = [(float(mu), float(sigma)) for mu in mu_grid for sigma in sigma_grid]
    workers = max(1, min(threads, len(grid)))
    logger.info(f"Sweeping {len(grid)} point(s) over {len(samples)} sample(s) with {workers} thread(s)")

    if workers == 1:
        points = [_sweep_point(samples, mu, sigma, config, offset) for mu, sigma in grid]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            points = list(pool.map(lambda ms: _sweep_point(samples, ms[0], ms[1], config, offset), grid))

    return SweepReport(
        points=points,
        mu_grid=[float(mu) for mu in mu_grid],
        sigma_grid=[float(sigma) for sigma in sigma_grid],
    )
