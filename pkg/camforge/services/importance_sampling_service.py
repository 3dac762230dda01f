"""
Importance Sampling Service
Pixel sampling distributions derived from CAM posteriors, the single- and
multi-sample importance sampling loss (ISL), the GAP-based cross-entropy and
their convex combination, each with an analytic gradient w.r.t. the scores.
"""
from typing import Optional, Tuple
import numpy as np
from camforge.core.config import settings
from camforge.core.exceptions import (
    ConfigError,
    ContractError,
    DimensionError,
    UnsupportedKindError,
)
from camforge.models.sampling import LabelVector, LossResult, SampleSet, SamplingDistribution
from camforge.models.tensors import PosteriorKind, PosteriorMap, ScoreMap
from camforge.services.cam_service import gap, log_sigmoid, sigmoid_posterior, softmax_posterior
from camforge.utils.logger import get_logger

logger = get_logger(__name__)

MASS_EPSILON = 1e-12
LOG_CLAMP = 1e-7

SAMPLED_KINDS = (PosteriorKind.MULTINOMIAL, PosteriorKind.BINOMIAL)

# Loss profiles: posterior kind and lambda reported optimal with GAP
PROFILES = {
    "binomial": (PosteriorKind.BINOMIAL, settings.LAMBDA),
    "multinomial": (PosteriorKind.MULTINOMIAL, settings.MULTINOMIAL_LAMBDA),
}

_UINT64_MASK = (1 << 64) - 1


def posterior_for_profile(scores: ScoreMap, kind: PosteriorKind) -> PosteriorMap:
    """Posterior used for sampling: sigmoid for binomial, softmax for multinomial"""
    if kind == PosteriorKind.BINOMIAL:
        return sigmoid_posterior(scores)
    if kind == PosteriorKind.MULTINOMIAL:
        return softmax_posterior(scores)
    raise UnsupportedKindError(f"cannot sample from a {kind.value} posterior")


def sampling_distribution(post: PosteriorMap) -> SamplingDistribution:
    """
    Normalize each posterior channel into a pmf over pixel coordinates

    Args:
        post: Multinomial or binomial posterior map

    Returns:
        SamplingDistribution: p_c(i, j) = post_c(i, j) / Z(post_c)
    """
    if post.kind not in SAMPLED_KINDS:
        raise UnsupportedKindError(f"sampling requires a multinomial or binomial posterior, got {post.kind.value}")

    mass = post.data.sum(axis=(1, 2))
    valid = mass > MASS_EPSILON
    safe = np.where(valid, mass, 1.0)
    pmf = np.where(valid[:, None, None], post.data / safe[:, None, None], 0.0)

    if not np.all(valid):
        logger.warning(f"Sampling distribution has {int(np.sum(~valid))} channel(s) without mass")

    return SamplingDistribution(pmf=pmf, valid_channel=valid)


def class_generator(rng_seed: int, class_index: int) -> np.random.Generator:
    """
    Counter-based stream for one class

    Philox keyed by (seed, class); the n-th uniform it yields is a pure
    function of (seed, class, n).
    """
    key = np.array([rng_seed & _UINT64_MASK, class_index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def draw_samples(
    dist: SamplingDistribution,
    post: PosteriorMap,
    n_samples: int,
    rng_seed: int,
) -> SampleSet:
    """
    Draw n_samples pixels per class by inverse CDF over the flattened pmf

    Args:
        dist: Distribution derived from post
        post: Posterior the sampled values are read from
        n_samples: Draws per class (with replacement)
        rng_seed: 64-bit seed

    Returns:
        SampleSet: N x C coordinates and posterior values
    """
    if dist.pmf.shape != post.shape:
        raise DimensionError(f"pmf shape {dist.pmf.shape} does not match posterior shape {post.shape}")
    if n_samples < 1:
        raise ConfigError(f"n_samples must be >= 1, got {n_samples}")

    num_classes, height, width = post.shape
    indices = np.zeros((n_samples, num_classes, 2), dtype=np.int64)
    values = np.zeros((n_samples, num_classes))

    for c in range(num_classes):
        if not dist.valid_channel[c]:
            continue
        cdf = np.cumsum(dist.pmf[c].ravel())
        uniforms = class_generator(rng_seed, c).random(n_samples)
        flat = np.searchsorted(cdf, uniforms * cdf[-1], side="right")
        flat = np.minimum(flat, cdf.size - 1)
        rows, cols = np.divmod(flat, width)
        indices[:, c, 0] = rows
        indices[:, c, 1] = cols
        values[:, c] = post.data[c, rows, cols]

    logger.debug(f"Drew {n_samples} sample(s) for {num_classes} class(es) with seed {rng_seed}")
    return SampleSet(
        indices=indices,
        values=values,
        valid_channel=dist.valid_channel,
        kind=post.kind,
        source_shape=post.shape,
    )


def _check_provenance(labels: LabelVector, samples: SampleSet, scores: ScoreMap, post: PosteriorMap) -> None:
    if post.kind not in SAMPLED_KINDS:
        raise UnsupportedKindError(f"ISL requires a binomial or multinomial posterior, got {post.kind.value}")
    if post.shape != scores.shape:
        raise DimensionError(f"posterior shape {post.shape} does not match score shape {scores.shape}")
    if labels.num_classes != scores.num_classes:
        raise DimensionError(f"{labels.num_classes} labels for {scores.num_classes} classes")
    if samples.kind != post.kind or tuple(samples.source_shape) != post.shape:
        raise ContractError("sample set was not drawn from this posterior")

    expected = posterior_for_profile(scores, post.kind)
    if not np.allclose(expected.data, post.data, rtol=0.0, atol=1e-12):
        raise ContractError("posterior was not computed from these scores")

    cols = np.arange(scores.num_classes)[None, :]
    found = post.data[cols, samples.indices[:, :, 0], samples.indices[:, :, 1]]
    valid = samples.valid_channel[None, :]
    if not np.array_equal(np.where(valid, found, 0.0), np.where(valid, samples.values, 0.0)):
        raise ContractError("sampled values do not match the posterior at the sampled pixels")


def isl_loss(
    labels: LabelVector,
    samples: SampleSet,
    scores: ScoreMap,
    post: PosteriorMap,
) -> LossResult:
    """
    Multi-sample importance sampling loss and its gradient

    Binary cross-entropy of each sampled value against the image label,
    averaged over classes and samples. The gradient treats the sampled pixel
    indices as constants and flows through the posterior value only.

    Args:
        labels: Image-level labels
        samples: Draws from post
        scores: Scores post was computed from
        post: Binomial (primary) or multinomial (legacy) posterior

    Returns:
        LossResult: value and d value / d scores
    """
    _check_provenance(labels, samples, scores, post)

    n_samples = samples.num_samples
    num_classes = scores.num_classes
    y = labels.y[None, :]
    valid = samples.valid_channel[None, :]

    raw = samples.values
    clamped = np.clip(raw, LOG_CLAMP, 1.0 - LOG_CLAMP)
    bce = -(y * np.log(clamped) + (1.0 - y) * np.log1p(-clamped))
    # a channel without mass has no pixel to read: clamped loss if present, nothing otherwise
    bce = np.where(valid, bce, y * -np.log(LOG_CLAMP))

    value = float(bce.sum(axis=1).mean() / num_classes)

    scale = 1.0 / (n_samples * num_classes)
    inside = valid & (raw >= LOG_CLAMP) & (raw <= 1.0 - LOG_CLAMP)
    grad = np.zeros(scores.shape)

    if post.kind == PosteriorKind.BINOMIAL:
        # d bce / d s = b - y at the sampled pixel
        contrib = np.where(inside, (raw - y) * scale, 0.0)
        for c in range(num_classes):
            np.add.at(grad[c], (samples.indices[:, c, 0], samples.indices[:, c, 1]), contrib[:, c])
    else:
        d_value = np.where(inside, (-(y / clamped) + (1.0 - y) / (1.0 - clamped)) * scale, 0.0)
        class_axis = np.arange(num_classes)[:, None]
        for c in range(num_classes):
            rows = samples.indices[:, c, 0]
            cols = samples.indices[:, c, 1]
            a_pixels = post.data[:, rows, cols]  # C x N
            a_c = a_pixels[c]
            jacobian = a_c[None, :] * ((class_axis == c) - a_pixels)
            np.add.at(grad, (class_axis, rows[None, :], cols[None, :]), d_value[None, :, c] * jacobian)

    return LossResult(value=value, grad=grad)


def gap_bce_loss(labels: LabelVector, scores: ScoreMap) -> LossResult:
    """
    Cross-entropy of the GAP posterior B_c = logistic(S_c)

    Returns:
        LossResult: value and a per-channel constant gradient (B_c - y_c) / C
    """
    if labels.num_classes != scores.num_classes:
        raise DimensionError(f"{labels.num_classes} labels for {scores.num_classes} classes")

    pooled = gap(scores)
    num_classes = scores.num_classes
    # -y log B - (1 - y) log(1 - B) written in logits
    per_class = -(labels.y * log_sigmoid(pooled.values) + (1.0 - labels.y) * log_sigmoid(-pooled.values))
    value = float(per_class.sum() / num_classes)

    per_channel = (pooled.posterior - labels.y) / num_classes
    grad = np.broadcast_to(per_channel[:, None, None], scores.shape)
    return LossResult(value=value, grad=grad)


def cls_loss_terms(
    labels: LabelVector,
    scores: ScoreMap,
    post: PosteriorMap,
    n_samples: int = settings.SAMPLES,
    lam: float = settings.LAMBDA,
    rng_seed: int = 0,
) -> Tuple[LossResult, LossResult, Optional[LossResult]]:
    """
    Classification loss together with the terms it mixes

    Returns:
        Tuple: (combined, pooled cross-entropy, sampled loss or None when lambda = 0)
    """
    if not 0.0 <= lam <= 1.0:
        raise ConfigError(f"lambda must lie in [0, 1], got {lam}")

    pooled = gap_bce_loss(labels, scores)
    if lam == 0.0:
        return pooled, pooled, None

    dist = sampling_distribution(post)
    samples = draw_samples(dist, post, n_samples, rng_seed)
    sampled = isl_loss(labels, samples, scores, post)

    if lam == 1.0:
        return sampled, pooled, sampled

    logger.debug(f"cls loss: ce={pooled.value:.6f} isl={sampled.value:.6f} lambda={lam}")
    return pooled.scaled(1.0 - lam) + sampled.scaled(lam), pooled, sampled


def combined_cls_loss(
    labels: LabelVector,
    scores: ScoreMap,
    post: PosteriorMap,
    n_samples: int = settings.SAMPLES,
    lam: float = settings.LAMBDA,
    rng_seed: int = 0,
) -> LossResult:
    """
    Convex combination (1 - lambda) L_ce + lambda L_is^N

    lambda = 0 skips sampling entirely.
    """
    combined, _, _ = cls_loss_terms(labels, scores, post, n_samples=n_samples, lam=lam, rng_seed=rng_seed)
    return combined
