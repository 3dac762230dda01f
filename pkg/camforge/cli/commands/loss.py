"""
loss command: classification, feature similarity and total loss for one CAM
"""
from typing import Optional
import click
from camforge.core.exceptions import ConfigError
from camforge.models.sampling import LabelVector
from camforge.cli.error_handler import add_exception_handlers
from camforge.cli.options import common_options, emit_json, load_run_config, parse_index_list, similarity_options
from camforge.services.cam_service import downsample_image, max_normalize
from camforge.services.importance_sampling_service import PROFILES
from camforge.services.labeling_service import pseudo_label
from camforge.services.objective_service import total_loss
from camforge.utils.file_parser import read_ppm, read_scores, write_mask, write_tensor
from camforge.utils.logger import get_logger

logger = get_logger(__name__)


def parse_labels(text: str, num_classes: int) -> LabelVector:
    """Comma-separated 0-based channel indices -> label vector"""
    indices = parse_index_list(text, "--labels")
    for index in indices:
        if not 0 <= index < num_classes:
            raise ConfigError(f"label {index} out of range for {num_classes} classes")
    return LabelVector.from_indices(indices, num_classes)


@click.command("loss")
@click.argument("scores_file", type=click.Path(exists=True, dir_okay=False))
@click.argument("image_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--labels", required=True, help="Comma-separated indices of the classes present")
@click.option("--profile", type=click.Choice(sorted(PROFILES)), default=None, help="Posterior and default lambda")
@click.option("--lambda", "lam", type=float, default=None, help="Weight of the sampled loss in [0, 1]")
@click.option("--samples", type=int, default=None, help="Pixels drawn per class")
@click.option("--fsl-weight", type=float, default=None, help="Multiplier of the feature similarity loss")
@click.option("--bg-threshold", type=float, default=None, help="Background score for --pseudo-label-out")
@click.option("--grad-out", type=click.Path(dir_okay=False), default=None, help="Write d total / d scores as CAMT")
@click.option("--pseudo-label-out", type=click.Path(dir_okay=False), default=None, help="Write a PGM pseudo-label")
@click.option("--downsample", is_flag=True, help="Area-average the image to CAM resolution")
@similarity_options
@common_options
@add_exception_handlers
def loss_command(
    scores_file: str,
    image_file: str,
    labels: str,
    profile: Optional[str],
    lam: Optional[float],
    samples: Optional[int],
    fsl_weight: Optional[float],
    bg_threshold: Optional[float],
    grad_out: Optional[str],
    pseudo_label_out: Optional[str],
    downsample: bool,
    mu: Optional[float],
    sigma: Optional[float],
    window: Optional[int],
    gating: Optional[str],
    exact_pairs: Optional[bool],
    config_path: Optional[str],
    seed: Optional[int],
    out_path: Optional[str],
):
    """Evaluate the training objective for SCORES_FILE (CAMT) and IMAGE_FILE (PPM)"""
    config = load_run_config(
        config_path,
        profile=profile,
        lam=lam,
        samples=samples,
        fsl_weight=fsl_weight,
        bg_threshold=bg_threshold,
        mu=mu,
        sigma=sigma,
        window=window,
        gating=gating,
        exact_pairs=exact_pairs,
        seed=seed,
    )

    scores = read_scores(scores_file)
    image = read_ppm(image_file)
    if downsample:
        image = downsample_image(image, scores.height, scores.width)
    label_vector = parse_labels(labels, scores.num_classes)

    kind, profile_lambda = PROFILES[config.profile]
    weight = profile_lambda if config.lam is None else config.lam

    breakdown = total_loss(
        label_vector,
        scores,
        image,
        kind=kind,
        lam=weight,
        n_samples=config.samples,
        rng_seed=config.seed,
        fsl_params=config.fsl_params(),
    )

    payload = {
        "cls_loss": breakdown.cls_loss,
        "ce_loss": breakdown.ce_loss,
        "isl_loss": breakdown.isl_loss,
        "fsl_loss": breakdown.fsl_loss,
        "total_loss": breakdown.total.value,
        "lambda": weight,
        "profile": config.profile,
        "samples": config.samples,
        "seed": config.seed,
    }
    if grad_out:
        write_tensor(grad_out, breakdown.total.grad)
        payload["grad_file"] = grad_out
    if pseudo_label_out:
        write_mask(pseudo_label_out, pseudo_label(max_normalize(scores), label_vector, config.bg_threshold))
        payload["pseudo_label_file"] = pseudo_label_out

    emit_json(payload, out_path)
