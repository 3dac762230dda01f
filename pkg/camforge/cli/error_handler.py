"""
Global error handling for CLI commands

Library errors carry their own exit code; everything else is mapped here.
"""
import functools
from typing import Callable
import click
from pydantic import ValidationError
from camforge.core.exceptions import CamforgeError
from camforge.utils.logger import get_logger

logger = get_logger(__name__)

CONFIG_EXIT_CODE = 2
IO_EXIT_CODE = 2
INTERNAL_EXIT_CODE = 1


def camforge_error_handler(exc: CamforgeError) -> int:
    """Handle typed library errors"""
    logger.warning(f"{type(exc).__name__}: {exc}")
    click.echo(f"error: {exc}", err=True)
    return exc.exit_code


def validation_error_handler(exc: ValidationError) -> int:
    """Handle invalid configuration values"""
    logger.warning(f"Validation error: {exc.errors()}")
    details = "; ".join(
        f"{'.'.join(str(p) for p in error['loc']) or 'value'}: {error['msg']}" for error in exc.errors()
    )
    click.echo(f"error: invalid configuration: {details}", err=True)
    return CONFIG_EXIT_CODE


def os_error_handler(exc: OSError) -> int:
    """Handle unreadable or unwritable files"""
    logger.warning(f"I/O error: {exc}")
    click.echo(f"error: {exc}", err=True)
    return IO_EXIT_CODE


def general_exception_handler(exc: Exception) -> int:
    """Handle all other exceptions"""
    logger.error(f"Unhandled exception: {str(exc)}", exc_info=True)
    click.echo(f"error: internal error: {exc}", err=True)
    return INTERNAL_EXIT_CODE


EXCEPTION_HANDLERS = [
    (CamforgeError, camforge_error_handler),
    (ValidationError, validation_error_handler),
    (OSError, os_error_handler),
    (Exception, general_exception_handler),
]


def handle_exception(exc: Exception) -> int:
    """Dispatch to the first matching handler and return the exit code"""
    for exc_type, handler in EXCEPTION_HANDLERS:
        if isinstance(exc, exc_type):
            return handler(exc)
    return INTERNAL_EXIT_CODE


def add_exception_handlers(command: Callable) -> Callable:
    """
    Wrap a command callback so errors become exit codes

    Args:
        command: click command callback

    Returns:
        Callable: wrapped callback
    """
    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except (click.exceptions.ClickException, click.exceptions.Exit, click.exceptions.Abort):
            raise
        except Exception as exc:
            raise SystemExit(handle_exception(exc))

    return wrapper
