"""
Finite-difference gradient checks
"""
from typing import Callable
import numpy as np
from camforge.utils.logger import get_logger

logger = get_logger(__name__)

DEFAULT_STEP = 1e-5


def finite_difference(func: Callable[[np.ndarray], float], x0: np.ndarray, h: float = DEFAULT_STEP) -> np.ndarray:
    """
    Central-difference gradient of a scalar function

    Args:
        func: Maps an array shaped like x0 to a float
        x0: Evaluation point
        h: Step size

    Returns:
        np.ndarray: Gradient with the shape of x0
    """
    x0 = np.asarray(x0, dtype=np.float64)
    logger.debug(f"Finite differences over {x0.size} coordinates, h={h}")
    grad = np.zeros(x0.size)
    x = x0.ravel().copy()
    for j in range(x.size):
        x[j] = x0.flat[j] + h
        f_plus = func(x.reshape(x0.shape))
        x[j] = x0.flat[j] - h
        f_minus = func(x.reshape(x0.shape))
        x[j] = x0.flat[j]
        grad[j] = (f_plus - f_minus) / (2.0 * h)
    return grad.reshape(x0.shape)


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-8) -> float:
    """||a - n|| / max(||a||, ||n||, floor) in the Euclidean norm"""
    analytic = np.asarray(analytic, dtype=np.float64).ravel()
    numeric = np.asarray(numeric, dtype=np.float64).ravel()
    scale = max(np.linalg.norm(analytic), np.linalg.norm(numeric), floor)
    return float(np.linalg.norm(analytic - numeric) / scale)
