"""
refine command: FSL-only gradient descent on a CAM
"""
from pathlib import Path
from typing import Optional
import click
import numpy as np
from camforge.core.exceptions import ConfigError, DimensionError
from camforge.models.metrics import LabelMask
from camforge.cli.error_handler import add_exception_handlers
from camforge.cli.options import (
    common_options,
    emit_json,
    load_run_config,
    parse_pair,
    refine_options,
    similarity_options,
)
from camforge.services.labeling_service import threshold_scores
from camforge.services.metrics_service import evaluate
from camforge.services.refine_service import fit_gaussian_cam, refine_cam
from camforge.utils.file_parser import read_pgm, read_ppm, read_scores, write_heatmaps, write_tensor
from camforge.utils.serialization import write_csv
from camforge.utils.logger import get_logger

logger = get_logger(__name__)


@click.command("refine")
@click.argument("image_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--scores", "scores_file", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Initial CAM (CAMT)")
@click.option("--gaussian-from", "mask_file", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Initialize with a Gaussian CAM fitted to this PGM mask")
@click.option("--offset", default="0,0", show_default=True, help="Shift of the fitted Gaussian, 'dy,dx' pixels")
@click.option("--output", "output_file", type=click.Path(dir_okay=False), required=True,
              help="Refined CAM (CAMT)")
@click.option("--trace", "trace_file", type=click.Path(dir_okay=False), default=None,
              help="Loss trace CSV (default: next to --output)")
@click.option("--heatmap-dir", type=click.Path(file_okay=False), default=None,
              help="Write min-max scaled PGM renderings here")
@refine_options
@similarity_options
@common_options
@add_exception_handlers
def refine_command(
    image_file: str,
    scores_file: Optional[str],
    mask_file: Optional[str],
    offset: str,
    output_file: str,
    trace_file: Optional[str],
    heatmap_dir: Optional[str],
    iterations: Optional[int],
    step: Optional[float],
    mu: Optional[float],
    sigma: Optional[float],
    window: Optional[int],
    gating: Optional[str],
    exact_pairs: Optional[bool],
    config_path: Optional[str],
    seed: Optional[int],
    out_path: Optional[str],
):
    """Refine a CAM for IMAGE_FILE (PPM) by descending the feature similarity loss"""
    if (scores_file is None) == (mask_file is None):
        raise ConfigError("give exactly one of --scores or --gaussian-from")

    config = load_run_config(
        config_path,
        iterations=iterations,
        step=step,
        mu=mu,
        sigma=sigma,
        window=window,
        gating=gating,
        exact_pairs=exact_pairs,
        seed=seed,
    )
    image = read_ppm(image_file)

    mask = None
    if mask_file:
        mask = read_pgm(mask_file)
        if mask.shape != (image.height, image.width):
            raise DimensionError(f"mask is {mask.shape} but image is {image.height}x{image.width}")
        initial = fit_gaussian_cam(mask, offset=parse_pair(offset, "--offset"))
    else:
        initial = read_scores(scores_file)

    result = refine_cam(initial, image, config.refine_config())

    write_tensor(output_file, result.scores.data)
    trace_path = Path(trace_file) if trace_file else Path(output_file).with_suffix(".trace.csv")
    write_csv(trace_path, ["iteration", "loss"], [(i, v) for i, v in enumerate(result.loss_trace)])

    payload = {
        "iterations": result.iterations_run,
        "step": config.step,
        "initial_loss": result.loss_trace[0],
        "final_loss": result.loss_trace[-1],
        "output": output_file,
        "trace": str(trace_path),
    }
    if heatmap_dir:
        payload["heatmaps"] = [str(p) for p in write_heatmaps(heatmap_dir, result.scores)]
    if mask is not None:
        truth = LabelMask(data=(mask.data > 0).astype(np.int64), num_classes=1)
        payload["initial_report"] = evaluate(threshold_scores(initial), truth, 1)
        payload["refined_report"] = evaluate(threshold_scores(result.scores), truth, 1)

    emit_json(payload, out_path)
