"""
sweep command: refinement quality over a (mu, sigma) grid
"""
from typing import Optional
import click
from camforge.core.config import settings
from camforge.cli.error_handler import add_exception_handlers
from camforge.cli.options import (
    common_options,
    emit_json,
    load_run_config,
    pair_options,
    parse_float_list,
    parse_pair,
    refine_options,
)
from camforge.services.corpus_service import load_corpus
from camforge.services.refine_service import sweep_mu_sigma
from camforge.utils.serialization import write_csv
from camforge.utils.logger import get_logger

logger = get_logger(__name__)

CSV_COLUMNS = ["mu", "sigma", "mean_j", "mean_f", "jf", "initial_j", "initial_f"]


@click.command("sweep")
@click.argument("corpus_dir", type=click.Path(file_okay=False))
@click.option("--mu-grid", default="0.5,1.5,2.5,3.5,4.5", show_default=True)
@click.option("--sigma-grid", default="1,3,5,7,9", show_default=True)
@click.option("--offset", default="0,0", show_default=True, help="Shift of the fitted Gaussians, 'dy,dx' pixels")
@click.option("--threads", type=int, default=None, help="Worker threads, capped at CAMFORGE_THREADS (default: CAMFORGE_THREADS)")
@click.option("--csv", "csv_file", type=click.Path(dir_okay=False), default=None, help="Also write the grid as CSV")
@refine_options
@pair_options
@common_options
@add_exception_handlers
def sweep_command(
    corpus_dir: str,
    mu_grid: str,
    sigma_grid: str,
    offset: str,
    threads: Optional[int],
    csv_file: Optional[str],
    iterations: Optional[int],
    step: Optional[float],
    window: Optional[int],
    gating: Optional[str],
    exact_pairs: Optional[bool],
    config_path: Optional[str],
    seed: Optional[int],
    out_path: Optional[str],
):
    """Refine Gaussian CAMs for every sample in CORPUS_DIR at every grid point"""
    config = load_run_config(
        config_path,
        defaults={"step": settings.SWEEP_STEP_SIZE},
        iterations=iterations,
        step=step,
        window=window,
        gating=gating,
        exact_pairs=exact_pairs,
        seed=seed,
    )
    samples = load_corpus(corpus_dir)

    workers = min(threads or settings.THREADS, settings.THREADS)
    if threads and threads > workers:
        logger.warning(f"--threads {threads} exceeds CAMFORGE_THREADS, using {workers}")

    report = sweep_mu_sigma(
        samples,
        parse_float_list(mu_grid, "--mu-grid"),
        parse_float_list(sigma_grid, "--sigma-grid"),
        config.refine_config(),
        threads=workers,
        offset=parse_pair(offset, "--offset"),
    )

    if csv_file:
        write_csv(csv_file, CSV_COLUMNS, [[getattr(p, c) for c in CSV_COLUMNS] for p in report.points])

    payload = report.model_dump()
    payload["best"] = report.best
    emit_json(payload, out_path)
