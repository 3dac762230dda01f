"""
CAM Service
Builds class activation maps from features, the three posterior
normalizations (softmax, sigmoid, max-normalized) and global pooling.
"""
import numpy as np
from PIL import Image
from scipy.special import expit, log_expit, softmax
from camforge.core.exceptions import DimensionError
from camforge.models.tensors import (
    ImageLevelScores,
    PosteriorKind,
    PosteriorMap,
    RgbImage,
    ScoreMap,
)
from camforge.utils.logger import get_logger

logger = get_logger(__name__)


def logistic(x: np.ndarray) -> np.ndarray:
    """Numerically stable logistic function, exp(x) / (1 + exp(x))"""
    return expit(x)


def log_sigmoid(x: np.ndarray) -> np.ndarray:
    """log(logistic(x)) without overflow for large |x|"""
    return log_expit(x)


def cam_from_features(features: np.ndarray, weights: np.ndarray) -> ScoreMap:
    """
    Weighted sum over feature maps, M_c(i, j) = sum_k w_k^c f_k(i, j)

    Args:
        features: K x H x W feature maps
        weights: C x K classifier weights

    Returns:
        ScoreMap: C x H x W class scores
    """
    features = np.asarray(features, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)

    if features.ndim != 3 or weights.ndim != 2:
        raise DimensionError(f"expected K x H x W features and C x K weights, got {features.shape} and {weights.shape}")
    if features.shape[0] < 1 or weights.shape[1] != features.shape[0]:
        raise DimensionError(f"weights have {weights.shape[1]} feature columns, features have {features.shape[0]} maps")

    return ScoreMap(data=np.tensordot(weights, features, axes=(1, 0)))


def gap(scores: ScoreMap) -> ImageLevelScores:
    """
    Image-level class scores S_c as the spatial sum of the CAM

    The pooling sums rather than averages; the combined classification
    loss is defined against this sum.
    """
    values = scores.data.sum(axis=(1, 2))
    return ImageLevelScores(values=values, posterior=logistic(values))


def softmax_posterior(scores: ScoreMap) -> PosteriorMap:
    """Multinomial posterior a_c(i, j), softmax over classes at every pixel"""
    if scores.num_classes < 2:
        logger.warning("Softmax over a single channel is constant 1; background must be an explicit channel")
    # scipy subtracts the per-pixel max before exponentiating
    return PosteriorMap(data=softmax(scores.data, axis=0), kind=PosteriorKind.MULTINOMIAL)


def sigmoid_posterior(scores: ScoreMap) -> PosteriorMap:
    """Binomial posterior b_c(i, j), independent sigmoid per class"""
    return PosteriorMap(data=logistic(scores.data), kind=PosteriorKind.BINOMIAL)


def channel_relu_max(scores: ScoreMap) -> np.ndarray:
    """Per-channel spatial maximum of relu(s), shape C"""
    return np.maximum(scores.data, 0.0).reshape(scores.num_classes, -1).max(axis=1)


def max_normalize(scores: ScoreMap) -> PosteriorMap:
    """
    Max-normalized CAM r_c(i, j) = relu(s) / max relu(s)

    A channel whose maximum relu is zero is returned as all zeros.
    """
    relu = np.maximum(scores.data, 0.0)
    peaks = channel_relu_max(scores)
    safe = np.where(peaks > 0.0, peaks, 1.0)
    normalized = relu / safe[:, None, None]

    degenerate = int(np.sum(peaks == 0.0))
    if degenerate:
        logger.debug(f"max_normalize: {degenerate} channel(s) without positive scores set to zero")

    # the argmax pixel is exactly 1 after division; clip guards rounding above 1
    return PosteriorMap(data=np.clip(normalized, 0.0, 1.0), kind=PosteriorKind.MAXNORM)


def downsample_image(image: RgbImage, height: int, width: int) -> RgbImage:
    """
    Area-average an image to height x width

    Args:
        image: Source image
        height: Target height (CAM resolution)
        width: Target width (CAM resolution)

    Returns:
        RgbImage: Resampled image (the input itself when sizes already match)
    """
    if (image.height, image.width) == (height, width):
        return image
    if height < 1 or width < 1:
        raise DimensionError(f"cannot resample to {height} x {width}")

    channels = []
    for k in range(3):
        plane = Image.fromarray(image.data[:, :, k].astype(np.float32))  # mode "F"
        resized = plane.resize((width, height), resample=Image.Resampling.BOX)
        channels.append(np.asarray(resized, dtype=np.float64))

    logger.debug(f"Downsampled image {image.height}x{image.width} -> {height}x{width}")
    return RgbImage(data=np.clip(np.stack(channels, axis=2), 0.0, 1.0))
