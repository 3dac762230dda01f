"""
Objective Service
Full training objective: classification loss plus weighted feature similarity loss.
"""
from typing import Optional
import numpy as np
from camforge.core.config import settings
from camforge.models.fsl import FslParams, GatingInput
from camforge.models.sampling import LabelVector, LossBreakdown
from camforge.models.tensors import PosteriorKind, RgbImage, ScoreMap
from camforge.services.feature_similarity_service import fsl_loss
from camforge.services.importance_sampling_service import cls_loss_terms, posterior_for_profile
from camforge.utils.logger import get_logger

logger = get_logger(__name__)


def total_loss(
    labels: LabelVector,
    scores: ScoreMap,
    image: RgbImage,
    kind: PosteriorKind = PosteriorKind.BINOMIAL,
    lam: float = settings.LAMBDA,
    n_samples: int = settings.SAMPLES,
    rng_seed: int = 0,
    fsl_params: Optional[FslParams] = None,
    fsl_weight: Optional[float] = None,
) -> LossBreakdown:
    """
    L = L_cls + fsl_weight * L_fs

    FSL only runs over the classes present in the image, except under
    multinomial gating which always couples every class.

    Args:
        labels: Image-level labels
        scores: CAM scores
        image: RGB image at CAM resolution
        kind: Posterior used for sampling (binomial or multinomial)
        lam: Weight of the sampled loss in the classification term
        n_samples: Draws per class
        rng_seed: Sampling seed
        fsl_params: FSL parameters (defaults from settings)
        fsl_weight: Overrides fsl_params.loss_weight when given

    Returns:
        LossBreakdown: total loss with gradient plus every term's value
    """
    fsl_params = fsl_params or FslParams()
    weight = fsl_params.loss_weight if fsl_weight is None else fsl_weight

    post = posterior_for_profile(scores, kind)
    cls, ce, sampled = cls_loss_terms(labels, scores, post, n_samples=n_samples, lam=lam, rng_seed=rng_seed)

    if fsl_params.gating_input != GatingInput.MULTINOMIAL:
        present = tuple(bool(p) for p in labels.present)
        if fsl_params.class_mask is not None and fsl_params.class_mask != present:
            logger.warning(f"FSL class_mask {fsl_params.class_mask} replaced by the present classes {present}")
        fsl_params = fsl_params.model_copy(update={"class_mask": present})
    similarity = fsl_loss(scores, image, fsl_params)

    total = cls + similarity.scaled(weight)
    logger.info(
        f"total={total.value:.6g} cls={cls.value:.6g} fsl={similarity.value:.6g} "
        f"weight={weight} present={int(np.sum(labels.present))}/{labels.num_classes}"
    )
    return LossBreakdown(
        total=total,
        cls_loss=cls.value,
        ce_loss=ce.value,
        isl_loss=None if sampled is None else sampled.value,
        fsl_loss=similarity.value,
        fsl_weight=weight,
    )
