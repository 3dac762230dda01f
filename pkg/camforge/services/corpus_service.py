"""
Corpus Service
Seeded synthetic corpus of single-object images with exact masks.
"""
from pathlib import Path
from typing import List, Tuple, Union
import numpy as np
from camforge.core.config import settings
from camforge.core.exceptions import ConfigError, EmptyInputError
from camforge.models.metrics import LabelMask
from camforge.models.tensors import RgbImage
from camforge.utils.file_parser import read_pgm, read_ppm, write_mask, write_ppm
from camforge.utils.logger import get_logger

logger = get_logger(__name__)

SHAPES = ("disc", "ellipse", "rectangle")
COLOUR_DISTANCE = (0.25, 0.6)  # mean absolute channel difference, object vs background
NOISE_STD = 0.015
MARGIN = 2
MAX_COLOUR_TRIES = 100


def _object_colour(rng: np.random.Generator, background: np.ndarray) -> np.ndarray:
    """Colour whose mean channel distance to the background lies in COLOUR_DISTANCE"""
    # move each channel toward the side of [0, 1] with more room
    direction = np.where(background < 0.5, 1.0, -1.0)
    room = np.where(background < 0.5, 1.0 - background, background)
    for _ in range(MAX_COLOUR_TRIES):
        distance = rng.uniform(*COLOUR_DISTANCE)
        steps = 3.0 * distance * rng.dirichlet(np.ones(3))
        if np.all(steps <= room):
            return background + direction * steps
    # even split capped by the room left in each channel
    return background + direction * np.minimum(np.full(3, rng.uniform(*COLOUR_DISTANCE)), room)


def _object_mask(rng: np.random.Generator, size: int) -> np.ndarray:
    shape = SHAPES[int(rng.integers(len(SHAPES)))]
    rows, cols = np.mgrid[0:size, 0:size].astype(np.float64)

    half_row = rng.uniform(0.15, 0.3) * size
    half_col = half_row if shape == "disc" else rng.uniform(0.15, 0.3) * size
    center_row = rng.uniform(half_row + MARGIN, size - 1 - half_row - MARGIN)
    center_col = rng.uniform(half_col + MARGIN, size - 1 - half_col - MARGIN)

    if shape == "rectangle":
        mask = (np.abs(rows - center_row) <= half_row) & (np.abs(cols - center_col) <= half_col)
    else:
        mask = ((rows - center_row) / half_row) ** 2 + ((cols - center_col) / half_col) ** 2 <= 1.0

    logger.debug(f"{shape} at ({center_row:.1f}, {center_col:.1f}), half sizes {half_row:.1f} x {half_col:.1f}")
    return mask


def generate_sample(rng: np.random.Generator, size: int = settings.CORPUS_SIZE) -> Tuple[RgbImage, LabelMask]:
    """
    One coloured object on a contrasting background

    Args:
        rng: Seeded generator; consumed in a fixed order
        size: Side length in pixels

    Returns:
        Tuple[RgbImage, LabelMask]: 8-bit quantized image and its 0/1 mask
    """
    if size < 16:
        raise ConfigError(f"corpus images need at least 16 pixels per side, got {size}")

    mask = _object_mask(rng, size)
    background = rng.uniform(0.15, 0.85, size=3)
    colour = _object_colour(rng, background)

    pixels = np.where(mask[:, :, None], colour, background)
    pixels = pixels + rng.normal(0.0, NOISE_STD, size=pixels.shape)
    pixels = np.round(np.clip(pixels, 0.0, 1.0) * 255.0) / 255.0

    return RgbImage(data=pixels), LabelMask(data=mask.astype(np.int64), num_classes=1)


def generate_corpus(
    out_dir: Union[str, Path],
    seed: int = 0,
    count: int = settings.CORPUS_COUNT,
    size: int = settings.CORPUS_SIZE,
) -> List[Tuple[Path, Path]]:
    """
    Write image_XXX.ppm / mask_XXX.pgm pairs; identical bytes for identical seeds

    Returns:
        List[Tuple[Path, Path]]: (image, mask) paths in index order
    """
    if count < 1:
        raise ConfigError(f"count must be at least 1, got {count}")

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)

    written = []
    for index in range(count):
        image, mask = generate_sample(rng, size)
        image_path = out_dir / f"image_{index:03d}.ppm"
        mask_path = out_dir / f"mask_{index:03d}.pgm"
        write_ppm(image_path, image)
        write_mask(mask_path, mask)
        written.append((image_path, mask_path))

    logger.info(f"Generated {count} sample(s) of {size}x{size} in {out_dir} (seed={seed})")
    return written


def load_corpus(corpus_dir: Union[str, Path]) -> List[Tuple[RgbImage, LabelMask]]:
    """
    Load every image_XXX.ppm with its mask_XXX.pgm

    Raises:
        EmptyInputError: when the directory holds no images
        ConfigError: when an image has no matching mask
    """
    corpus_dir = Path(corpus_dir)
    images = sorted(corpus_dir.glob("image_*.ppm")) if corpus_dir.is_dir() else []
    if not images:
        raise EmptyInputError(f"no image_*.ppm files in {corpus_dir}")

    samples = []
    for image_path in images:
        mask_path = corpus_dir / f"mask_{image_path.stem[len('image_'):]}.pgm"
        if not mask_path.exists():
            raise ConfigError(f"{image_path.name} has no matching {mask_path.name}")
        samples.append((read_ppm(image_path), read_pgm(mask_path)))

    logger.info(f"Loaded {len(samples)} sample(s) from {corpus_dir}")
    return samples
