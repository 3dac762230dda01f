"""
Shared click options and run configuration loading
"""
from pathlib import Path
from typing import Any, Callable, List, Optional, Tuple
import click
import orjson
from camforge.core.exceptions import ConfigError, ParseError
from camforge.models.fsl import GatingInput
from camforge.models.run_config import RunConfig
from camforge.utils.serialization import dumps
from camforge.utils.logger import get_logger

logger = get_logger(__name__)


# ========================================
# Value parsers
# ========================================

def parse_float_list(text: str, name: str) -> List[float]:
    """'0.5,1.5' -> [0.5, 1.5]"""
    try:
        values = [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise ConfigError(f"{name} must be comma-separated numbers, got {text!r}")
    if not values:
        raise ConfigError(f"{name} is empty")
    return values


def parse_index_list(text: str, name: str) -> List[int]:
    """'0,2' -> [0, 2]"""
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise ConfigError(f"{name} must be comma-separated class indices, got {text!r}")


def parse_pair(text: str, name: str) -> Tuple[float, float]:
    """'dy,dx' -> (dy, dx)"""
    values = parse_float_list(text, name)
    if len(values) != 2:
        raise ConfigError(f"{name} needs exactly two values, got {text!r}")
    return values[0], values[1]


# ========================================
# Option groups
# ========================================

def _apply(decorators: List[Callable]) -> Callable:
    def decorate(func: Callable) -> Callable:
        for decorator in reversed(decorators):
            func = decorator(func)
        return func
    return decorate


common_options = _apply([
    click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
                 help="JSON file with run settings; flags override it"),
    click.option("--seed", type=int, default=None, help="Seed for every random choice"),
    click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None,
                 help="Write the JSON result here instead of stdout"),
])

pair_options = _apply([
    click.option("--window", type=int, default=None, help="Pair window radius in pixels"),
    click.option("--gating", type=click.Choice([g.value for g in GatingInput]), default=None,
                 help="Map fed to the gating function"),
    click.option("--exact-pairs/--windowed-pairs", "exact_pairs", default=None,
                 help="Force all pixel pairs regardless of image size"),
])

similarity_options = _apply([
    click.option("--mu", type=float, default=None, help="Dissimilarity offset"),
    click.option("--sigma", type=float, default=None, help="Spatial bandwidth in pixels"),
    pair_options,
])

refine_options = _apply([
    click.option("--iterations", type=int, default=None, help="Gradient descent iterations"),
    click.option("--step", type=float, default=None, help="Gradient descent step size"),
])


# ========================================
# Configuration and output
# ========================================

def load_run_config(config_path: Optional[str] = None, defaults: Optional[dict] = None, **flags: Any) -> RunConfig:
    """
    Defaults, then the JSON config file, then explicitly given flags

    Args:
        config_path: Optional JSON object with RunConfig keys
        defaults: Command-specific defaults replacing the model defaults
        **flags: Flag values; None means not given

    Returns:
        RunConfig: Validated configuration
    """
    data = dict(defaults or {})
    if config_path:
        raw = Path(config_path).read_bytes()
        try:
            loaded = orjson.loads(raw)
        except orjson.JSONDecodeError as e:
            raise ParseError(config_path, e.pos, e.msg)
        if not isinstance(loaded, dict):
            raise ParseError(config_path, 0, "config must be a JSON object")
        if "lambda" in loaded:
            loaded["lam"] = loaded.pop("lambda")
        logger.debug(f"Loaded run config {config_path}: {sorted(loaded)}")
        data.update(loaded)

    data.update({key: value for key, value in flags.items() if value is not None})
    return RunConfig.model_validate(data)


def emit_json(payload: Any, out_path: Optional[str] = None) -> None:
    """Write the JSON result to out_path, or stdout"""
    encoded = dumps(payload)
    if out_path:
        Path(out_path).write_bytes(encoded)
        logger.info(f"Wrote {out_path}")
    else:
        click.echo(encoded.decode("utf-8"), nl=False)
