"""
Feature Similarity Service
Self-supervised pairwise loss aligning CAM contours with colour edges.

The pair sum  -1/(HW) sum_ij w_ij g(u_i, u_j) f_ij  is evaluated through the
symmetric affinity matrix K_ij = w_ij f_ij: for each class channel u,
sum_ij K_ij (u_i - u_j)^2 / 2 = u^T (D - K) u with D = diag(K 1).
"""
import math
from typing import Callable, Optional, Tuple
import numpy as np
from scipy import sparse
from scipy.special import expit, softmax
from camforge.core.config import settings
from camforge.core.exceptions import ConfigError, DimensionError
from camforge.models.fsl import FslParams, GatingInput, GradientBoundReport, PairComponents
from camforge.models.sampling import LossResult
from camforge.models.tensors import RgbImage, ScoreMap
from camforge.services.cam_service import channel_relu_max
from camforge.utils.logger import get_logger

logger = get_logger(__name__)

DELTA_CLAMP = 1e-6
BOUND_TOLERANCE = 1e-12


# ========================================
# Pair components
# ========================================

def spatial_weight(pi: Tuple[float, float], pj: Tuple[float, float], sigma: float) -> float:
    """Gaussian spatial weight w_ij = exp(-|pi - pj|^2 / (2 sigma^2)) / (2 pi sigma^2)"""
    if sigma <= 0:
        raise ConfigError(f"sigma must be positive, got {sigma}")
    squared = (pi[0] - pj[0]) ** 2 + (pi[1] - pj[1]) ** 2
    return math.exp(-squared / (2.0 * sigma ** 2)) / (2.0 * math.pi * sigma ** 2)


def gating(ui: np.ndarray, uj: np.ndarray, mask=None) -> float:
    """Half squared distance between two pixels' class vectors over the masked classes"""
    ui = np.asarray(ui, dtype=np.float64)
    uj = np.asarray(uj, dtype=np.float64)
    if ui.shape != uj.shape:
        raise DimensionError(f"gating inputs differ in length: {ui.shape} vs {uj.shape}")
    keep = np.ones(ui.shape, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    diff = np.where(keep, ui - uj, 0.0)
    return 0.5 * float(np.sum(diff * diff))


def dissimilarity_from_delta(delta: np.ndarray, mu: float) -> np.ndarray:
    """f(delta) = tanh(mu + logit(delta)), delta clamped away from 0 and 1"""
    clamped = np.clip(delta, DELTA_CLAMP, 1.0 - DELTA_CLAMP)
    return np.tanh(mu + np.log(clamped) - np.log1p(-clamped))


def dissimilarity(xi, xj, mu: float) -> float:
    """Pixel dissimilarity in [-1, 1] from the normalized L1 colour distance"""
    delta = np.sum(np.abs(np.asarray(xi, dtype=np.float64) - np.asarray(xj, dtype=np.float64))) / 3.0
    return float(dissimilarity_from_delta(delta, mu))


def similarity_threshold(mu: float) -> float:
    """Colour distance at which f changes sign, 1 / (1 + e^mu)"""
    return 1.0 / (1.0 + math.exp(mu))


def spatial_mass_fraction(radius: float, sigma: float, height: int, width: int, anchor=None) -> float:
    """
    Share of one pixel's total spatial weight that comes from partners within radius

    Args:
        radius: Distance bound in pixels (inclusive)
        sigma: Spatial scale
        height: Grid height
        width: Grid width
        anchor: (row, col) of the pixel, grid center by default

    Returns:
        float: Fraction in [0, 1]
    """
    if anchor is None:
        anchor = (height // 2, width // 2)
    rows, cols = np.mgrid[0:height, 0:width]
    squared = (rows - anchor[0]) ** 2 + (cols - anchor[1]) ** 2
    weights = np.exp(-squared / (2.0 * sigma ** 2))
    weights[anchor] = 0.0
    return float(weights[squared <= radius ** 2].sum() / weights.sum())


# ========================================
# Gating maps
# ========================================

def gating_transform(scores: ScoreMap, gating_input: GatingInput) -> Tuple[np.ndarray, Callable[[np.ndarray], np.ndarray]]:
    """
    Map scores to the gating input u and return a backprop for it

    Returns:
        (u, backprop) where backprop(dL/du) -> dL/ds
    """
    s = scores.data

    if gating_input == GatingInput.RAW:
        return s, lambda grad_u: grad_u

    if gating_input == GatingInput.BINOMIAL:
        b = expit(s)
        slope = b * (1.0 - b)
        return b, lambda grad_u: grad_u * slope

    if gating_input == GatingInput.MAXNORM:
        # the channel maximum is held constant
        peaks = channel_relu_max(scores)
        safe = np.where(peaks > 0.0, peaks, 1.0)[:, None, None]
        r = np.maximum(s, 0.0) / safe
        slope = np.where((s > 0.0) & (peaks[:, None, None] > 0.0), 1.0 / safe, 0.0)
        return r, lambda grad_u: grad_u * slope

    if gating_input == GatingInput.MULTINOMIAL:
        a = softmax(s, axis=0)
        return a, lambda grad_u: a * (grad_u - np.sum(a * grad_u, axis=0, keepdims=True))

    raise ConfigError(f"unknown gating input {gating_input}")


def elementwise_gating_slope(scores: ScoreMap, gating_input: GatingInput) -> Tuple[np.ndarray, np.ndarray]:
    """u and du/ds for the elementwise gating inputs (raw, binomial, maxnorm)"""
    if gating_input == GatingInput.MULTINOMIAL:
        raise ConfigError("the multinomial gating input couples classes and has no elementwise slope")
    u, backprop = gating_transform(scores, gating_input)
    return u, backprop(np.ones(scores.shape))


# ========================================
# Pair affinity
# ========================================

def resolve_window(params: FslParams, height: int, width: int) -> Optional[int]:
    """Window radius to use, None meaning every pixel pair"""
    if params.exact_pairs:
        return None
    if params.window_radius is not None:
        return params.window_radius
    if height * width <= settings.EXACT_PAIRS_MAX_PIXELS:
        return None
    return int(math.ceil(3.0 * params.sigma))


def _half_offsets(height: int, width: int, radius: Optional[int]):
    """Offsets (dy, dx) covering each unordered pair once, diagonal excluded"""
    max_dy = height - 1 if radius is None else min(radius, height - 1)
    max_dx = width - 1 if radius is None else min(radius, width - 1)
    for dy in range(0, max_dy + 1):
        for dx in range(-max_dx, max_dx + 1):
            if dy == 0 and dx <= 0:
                continue
            if radius is not None and dy * dy + dx * dx > radius * radius:
                continue
            yield dy, dx


def pair_affinity(image: RgbImage, params: FslParams) -> sparse.csr_matrix:
    """
    Symmetric matrix K_ij = w_ij f_ij over all ordered pixel pairs in the window

    Pixels are indexed row-major; the diagonal (g = 0 there) is omitted.

    Args:
        image: RGB image at CAM resolution
        params: FSL parameters (mu, sigma, window)

    Returns:
        scipy.sparse.csr_matrix: HW x HW affinity
    """
    height, width = image.height, image.width
    radius = resolve_window(params, height, width)
    x = image.data
    index = np.arange(height * width).reshape(height, width)
    norm = 1.0 / (2.0 * math.pi * params.sigma ** 2)

    rows, cols, vals = [], [], []
    for dy, dx in _half_offsets(height, width, radius):
        y0, y1 = 0, height - dy
        x0, x1 = max(0, -dx), min(width, width - dx)
        if x1 <= x0:
            continue
        first = x[y0:y1, x0:x1]
        second = x[y0 + dy:y1 + dy, x0 + dx:x1 + dx]
        delta = np.abs(first - second).sum(axis=2) / 3.0
        weight = norm * math.exp(-(dy * dy + dx * dx) / (2.0 * params.sigma ** 2))
        rows.append(index[y0:y1, x0:x1].ravel())
        cols.append(index[y0 + dy:y1 + dy, x0 + dx:x1 + dx].ravel())
        vals.append((weight * dissimilarity_from_delta(delta, params.mu)).ravel())

    size = height * width
    if not vals:
        return sparse.csr_matrix((size, size))

    upper = sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(size, size),
    ).tocsr()
    logger.debug(f"Pair affinity {height}x{width}: radius={radius}, {2 * upper.nnz} ordered pairs")
    return (upper + upper.T).tocsr()


# ========================================
# Loss
# ========================================

class FeatureSimilarityOperator:
    """FSL for a fixed image and parameter set; w and f are precomputed once"""

    def __init__(self, image: RgbImage, params: FslParams):
        self.image = image
        self.params = params
        self.height = image.height
        self.width = image.width
        affinity = pair_affinity(image, params)
        degree = np.asarray(affinity.sum(axis=1)).ravel()
        self.laplacian = (sparse.diags(degree) - affinity).tocsr()

    def loss(self, scores: ScoreMap) -> LossResult:
        """
        Loss value and gradient for one score map

        Args:
            scores: C x H x W scores matching the image size

        Returns:
            LossResult: value and d value / d scores (through g only)
        """
        if (scores.height, scores.width) != (self.height, self.width):
            raise DimensionError(
                f"image is {self.height}x{self.width} but CAM is {scores.height}x{scores.width}; "
                "downsample the image to CAM resolution first"
            )

        mask = self.params.mask_for(scores.num_classes)
        if self.params.gating_input == GatingInput.MULTINOMIAL and not all(mask):
            raise ConfigError("multinomial gating couples all classes and cannot be class-masked")

        u, backprop = gating_transform(scores, self.params.gating_input)
        pixels = self.height * self.width
        value = 0.0
        grad_u = np.zeros(scores.shape)

        for c in range(scores.num_classes):
            if not mask[c]:
                continue
            channel = u[c].ravel()
            smoothed = self.laplacian @ channel
            value -= float(channel @ smoothed) / pixels
            grad_u[c] = (-2.0 / pixels) * smoothed.reshape(self.height, self.width)

        grad = backprop(grad_u)
        for c in range(scores.num_classes):
            if not mask[c]:
                grad[c] = 0.0

        return LossResult(value=value, grad=grad)


def fsl_loss(scores: ScoreMap, image: RgbImage, params: FslParams) -> LossResult:
    """
    Feature similarity loss -1/(HW) sum_ij w_ij g_ij f_ij and its gradient

    Args:
        scores: C x H x W scores
        image: RGB image already at CAM resolution
        params: FSL parameters, gating input and class mask

    Returns:
        LossResult: value and gradient w.r.t. scores
    """
    if (image.height, image.width) != (scores.height, scores.width):
        raise DimensionError(
            f"image is {image.height}x{image.width} but CAM is {scores.height}x{scores.width}"
        )
    result = FeatureSimilarityOperator(image, params).loss(scores)
    logger.debug(f"fsl loss={result.value:.6g} gating={params.gating_input.value}")
    return result


def pair_components(
    scores: ScoreMap,
    image: RgbImage,
    params: FslParams,
    pi: Tuple[int, int],
    pj: Tuple[int, int],
) -> PairComponents:
    """w, g and f for a single pixel pair"""
    if (image.height, image.width) != (scores.height, scores.width):
        raise DimensionError("image and CAM sizes differ")
    u, _ = gating_transform(scores, params.gating_input)
    mask = params.mask_for(scores.num_classes)
    return PairComponents(
        w=spatial_weight(pi, pj, params.sigma),
        g=gating(u[:, pi[0], pi[1]], u[:, pj[0], pj[1]], mask),
        f=dissimilarity(image.data[pi], image.data[pj], params.mu),
    )


# ========================================
# Gradient bounds
# ========================================

def _logistic_slope(s: np.ndarray) -> np.ndarray:
    """e^s / (1 + e^s)^2 evaluated without overflow"""
    e = np.exp(-np.abs(s))
    return e / (1.0 + e) ** 2


def verify_gradient_bounds(
    scores: ScoreMap,
    image: RgbImage,
    params: FslParams,
    trials: int,
    rng_seed: int = 0,
) -> GradientBoundReport:
    """
    Check the gating-gradient bounds on random pixel pairs

    For each pair (i, j) and class c the per-pair gradient dg/ds_{i,c} is
    taken from the library's gating backprop and compared with
    e^s / (1 + e^s)^2 <= e^-s (binomial, s >= 0 for the second),
    1 / max_m s_{m,c} (maxnorm, s >= 0; exactly 0 for s < 0) and
    s_i - s_j (raw, exact). The pair term w g f is checked against w * bound.

    Returns:
        GradientBoundReport: observed maxima and violation counts
    """
    if trials < 1:
        raise ConfigError(f"trials must be >= 1, got {trials}")
    if (image.height, image.width) != (scores.height, scores.width):
        raise DimensionError("image and CAM sizes differ")

    rng = np.random.default_rng(rng_seed)
    mask = np.asarray(params.mask_for(scores.num_classes))
    classes = np.flatnonzero(mask)
    if classes.size == 0:
        raise ConfigError("class mask excludes every class")

    height, width = scores.height, scores.width
    c = classes[rng.integers(0, classes.size, trials)]
    ri, ci = rng.integers(0, height, trials), rng.integers(0, width, trials)
    rj, cj = rng.integers(0, height, trials), rng.integers(0, width, trials)

    s_i = scores.data[c, ri, ci]
    s_j = scores.data[c, rj, cj]
    w = np.exp(-((ri - rj) ** 2 + (ci - cj) ** 2) / (2.0 * params.sigma ** 2)) / (2.0 * math.pi * params.sigma ** 2)
    delta = np.abs(image.data[ri, ci] - image.data[rj, cj]).sum(axis=1) / 3.0
    f = dissimilarity_from_delta(delta, params.mu)

    # binomial
    b, b_slope = elementwise_gating_slope(scores, GatingInput.BINOMIAL)
    grad_b = (b[c, ri, ci] - b[c, rj, cj]) * b_slope[c, ri, ci]
    bound_b = _logistic_slope(s_i)
    binomial_violations = int(np.sum(np.abs(grad_b) > bound_b * (1.0 + BOUND_TOLERANCE)))
    nonneg = s_i >= 0.0
    exp_bound = np.exp(-s_i[nonneg])
    binomial_violations += int(np.sum(bound_b[nonneg] > exp_bound * (1.0 + BOUND_TOLERANCE)))
    binomial_violations += int(np.sum(np.abs(grad_b[nonneg]) > exp_bound * (1.0 + BOUND_TOLERANCE)))
    binomial_ratio = float(np.max(np.abs(grad_b) / bound_b))
    binomial_exp_ratio = float(np.max(np.abs(grad_b[nonneg]) / exp_bound)) if np.any(nonneg) else 0.0

    # max-normalized
    r, r_slope = elementwise_gating_slope(scores, GatingInput.MAXNORM)
    peaks = channel_relu_max(scores)[c]
    grad_r = (r[c, ri, ci] - r[c, rj, cj]) * r_slope[c, ri, ci]
    scored = nonneg & (peaks > 0.0)
    maxnorm_ratio = float(np.max(np.abs(grad_r[scored]) * peaks[scored])) if np.any(scored) else 0.0
    maxnorm_violations = int(np.sum(np.abs(grad_r[scored]) * peaks[scored] > 1.0 + BOUND_TOLERANCE))
    negative_nonzero = int(np.sum(grad_r[s_i < 0.0] != 0.0))

    # raw scores
    u_raw, raw_slope = elementwise_gating_slope(scores, GatingInput.RAW)
    grad_raw = (u_raw[c, ri, ci] - u_raw[c, rj, cj]) * raw_slope[c, ri, ci]
    raw_residual = float(np.max(np.abs(grad_raw - (s_i - s_j))))

    # full pair term, gradient only through g
    pair_violations = int(np.sum(np.abs(w * f * grad_b) > w * bound_b * (1.0 + BOUND_TOLERANCE)))
    pair_violations += int(np.sum(np.abs(w[scored] * f[scored] * grad_r[scored]) * peaks[scored] > w[scored] * (1.0 + BOUND_TOLERANCE)))

    report = GradientBoundReport(
        trials=trials,
        binomial_max_ratio=binomial_ratio,
        binomial_exp_max_ratio=binomial_exp_ratio,
        binomial_violations=binomial_violations,
        maxnorm_max_ratio=maxnorm_ratio,
        maxnorm_violations=maxnorm_violations,
        maxnorm_negative_nonzero=negative_nonzero,
        raw_max_residual=raw_residual,
        raw_max_gradient=float(np.max(np.abs(grad_raw))),
        pair_term_violations=pair_violations,
    )
    logger.info(
        f"Gradient bounds over {trials} pairs: binomial ratio {binomial_ratio:.4f}, "
        f"maxnorm ratio {maxnorm_ratio:.4f}, raw max |grad| {report.raw_max_gradient:.4f}"
    )
    return report
