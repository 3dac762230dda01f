"""
camforge command-line entry point
"""
import click
from camforge.core.config import settings
from camforge.cli.commands.corpus import gen_corpus_command
from camforge.cli.commands.evaluate import eval_command
from camforge.cli.commands.loss import loss_command
from camforge.cli.commands.refine import refine_command
from camforge.cli.commands.sweep import sweep_command
from camforge.utils.logger import set_level

VERSION = "1.0.0"


@click.group()
@click.version_option(VERSION, prog_name=settings.PROJECT_NAME)
@click.option(
    "--log-level",
    type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False),
    default=None,
    help="Override CAMFORGE_LOG_LEVEL",
)
def cli(log_level):
    """CAM losses, network-free refinement and segmentation metrics"""
    if log_level:
        set_level(log_level)


cli.add_command(loss_command)
cli.add_command(refine_command)
cli.add_command(eval_command)
cli.add_command(sweep_command)
cli.add_command(gen_corpus_command)


def main():
    cli(prog_name=settings.PROJECT_NAME)


if __name__ == "__main__":
    main()
