"""
eval command: J, F and J&F of a predicted mask against ground truth
"""
from typing import Optional
import click
from camforge.cli.error_handler import add_exception_handlers
from camforge.cli.options import common_options, emit_json, load_run_config
from camforge.services.metrics_service import evaluate
from camforge.utils.file_parser import read_pgm
from camforge.utils.logger import get_logger

logger = get_logger(__name__)


@click.command("eval")
@click.argument("pred_file", type=click.Path(exists=True, dir_okay=False))
@click.argument("gt_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--num-classes", type=int, default=None, help="Foreground classes (default: largest label found)")
@click.option("--tolerance", type=int, default=None, help="Boundary tolerance in pixels (default: 0.8% of diagonal)")
@common_options
@add_exception_handlers
def eval_command(
    pred_file: str,
    gt_file: str,
    num_classes: Optional[int],
    tolerance: Optional[int],
    config_path: Optional[str],
    seed: Optional[int],
    out_path: Optional[str],
):
    """Score PRED_FILE against GT_FILE (both PGM label masks)"""
    load_run_config(config_path, seed=seed)
    pred = read_pgm(pred_file)
    gt = read_pgm(gt_file)
    if num_classes is None:
        num_classes = max(int(pred.data.max()), int(gt.data.max()), 1)

    report = evaluate(pred, gt, num_classes, tolerance)
    logger.info(f"J={report.mean_j:.4f} F={report.mean_f:.4f} J&F={report.jf:.4f}")
    emit_json(report, out_path)
