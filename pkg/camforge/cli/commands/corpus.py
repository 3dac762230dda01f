"""
gen-corpus command: seeded synthetic images and masks
"""
from typing import Optional
import click
from camforge.core.config import settings
from camforge.cli.error_handler import add_exception_handlers
from camforge.cli.options import common_options, emit_json, load_run_config
from camforge.services.corpus_service import generate_corpus


@click.command("gen-corpus")
@click.argument("out_dir", type=click.Path(file_okay=False))
@click.option("--count", type=int, default=settings.CORPUS_COUNT, show_default=True)
@click.option("--size", type=int, default=settings.CORPUS_SIZE, show_default=True)
@common_options
@add_exception_handlers
def gen_corpus_command(
    out_dir: str,
    count: int,
    size: int,
    config_path: Optional[str],
    seed: Optional[int],
    out_path: Optional[str],
):
    """Write COUNT image_XXX.ppm / mask_XXX.pgm pairs to OUT_DIR"""
    config = load_run_config(config_path, seed=seed)
    files = generate_corpus(out_dir, seed=config.seed, count=count, size=size)
    emit_json(
        {
            "count": count,
            "seed": config.seed,
            "size": size,
            "files": [[str(image), str(mask)] for image, mask in files],
        },
        out_path,
    )
