"""
Labeling Service
Pseudo-labels from max-normalized CAMs and zero-thresholded score masks.
"""
import numpy as np
from camforge.core.config import settings
from camforge.core.exceptions import ConfigError, DimensionError, UnsupportedKindError
from camforge.models.metrics import LabelMask
from camforge.models.sampling import LabelVector
from camforge.models.tensors import PosteriorKind, PosteriorMap, ScoreMap
from camforge.utils.logger import get_logger

logger = get_logger(__name__)


def pseudo_label(
    post: PosteriorMap,
    present: LabelVector,
    bg_threshold: float = settings.BG_THRESHOLD,
) -> LabelMask:
    """
    Per-pixel argmax over a constant background score and the present classes

    Channel c maps to label c + 1. Ties go to background, then to the
    lowest class index.

    Args:
        post: Max-normalized CAM
        present: Image-level labels; absent classes never win
        bg_threshold: Background score in (0, 1)

    Returns:
        LabelMask: H x W labels in [0, C]
    """
    if post.kind != PosteriorKind.MAXNORM:
        raise UnsupportedKindError(f"pseudo-labels need a max-normalized CAM, got {post.kind.value}")
    if not 0.0 < bg_threshold < 1.0:
        raise ConfigError(f"bg_threshold must lie in (0, 1), got {bg_threshold}")
    if present.num_classes != post.num_classes:
        raise DimensionError(f"{present.num_classes} labels for {post.num_classes} CAM channels")

    _, height, width = post.shape
    candidates = np.where(present.present[:, None, None], post.data, -np.inf)
    background = np.full((1, height, width), bg_threshold)
    # argmax returns the first maximum: background, then lower class indices
    labels = np.argmax(np.concatenate([background, candidates], axis=0), axis=0)

    return LabelMask(data=labels, num_classes=post.num_classes)


def threshold_scores(scores: ScoreMap, threshold: float = 0.0, channel: int = 0) -> LabelMask:
    """Foreground (label 1) where the channel's score is strictly above threshold"""
    if not 0 <= channel < scores.num_classes:
        raise DimensionError(f"channel {channel} out of range for {scores.num_classes} classes")
    return LabelMask(data=(scores.data[channel] > threshold).astype(np.int64), num_classes=1)
