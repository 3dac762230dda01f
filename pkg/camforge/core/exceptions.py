"""
Error hierarchy for camforge

Each error carries the exit code the CLI maps it to.
"""
from typing import Optional


class CamforgeError(Exception):
    """Base class for all library errors"""

    exit_code: int = 1


class ParseError(CamforgeError):
    """A file could not be parsed"""

    exit_code = 2

    def __init__(self, path: str, offset: int, reason: str):
        self.path = path
        self.offset = offset
        self.reason = reason
        super().__init__(f"{path}: parse error at byte {offset}: {reason}")


class ConfigError(CamforgeError):
    """Invalid run configuration"""

    exit_code = 2


class UnsupportedKindError(CamforgeError):
    """A posterior of the wrong kind was passed"""

    exit_code = 2


class ContractError(CamforgeError):
    """Inputs violate a provenance contract (e.g. samples from another map)"""

    exit_code = 2


class DimensionError(CamforgeError, ValueError):
    """Shapes of the inputs do not agree"""

    exit_code = 3


class EmptyInputError(CamforgeError):
    """Input set is empty (no corpus files, no foreground pixels)"""

    exit_code = 4


class DivergenceError(CamforgeError):
    """Optimization produced a non-finite loss"""

    exit_code = 5

    def __init__(self, iteration: int, value: Optional[float] = None):
        self.iteration = iteration
        self.value = value
        super().__init__(f"refinement diverged at iteration {iteration} (loss={value})")
