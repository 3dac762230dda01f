"""
File parsing utilities for tensor, image and mask formats

CAMT tensors: magic "CAMT", u16 version (1), u16 rank, rank x u32 dims,
then little-endian float32 payload in row-major order. Images are binary
PPM (P6, maxval 255); masks are binary PGM (P5) holding class indices.
"""
import io
import math
import struct
from pathlib import Path
from typing import List, Tuple, Union
import numpy as np
from PIL import Image, UnidentifiedImageError
from camforge.core.exceptions import ConfigError, ParseError
from camforge.models.metrics import LabelMask
from camforge.models.tensors import RgbImage, ScoreMap
from camforge.utils.logger import get_logger

logger = get_logger(__name__)

PathLike = Union[str, Path]

TENSOR_MAGIC = b"CAMT"
TENSOR_VERSION = 1
_HEADER = struct.Struct("<4sHH")
_DIM = struct.Struct("<I")
_PAYLOAD_DTYPE = np.dtype("<f4")


# ========================================
# CAMT tensors
# ========================================

def encode_tensor(array: np.ndarray) -> bytes:
    """Serialize an array to CAMT bytes (values are stored as float32)"""
    array = np.asarray(array)
    if array.ndim < 1 or array.ndim > 0xFFFF:
        raise ConfigError(f"cannot store a rank {array.ndim} tensor")
    header = _HEADER.pack(TENSOR_MAGIC, TENSOR_VERSION, array.ndim)
    dims = b"".join(_DIM.pack(d) for d in array.shape)
    return header + dims + np.ascontiguousarray(array, dtype=_PAYLOAD_DTYPE).tobytes()


def decode_tensor(data: bytes, path: str = "<bytes>") -> np.ndarray:
    """
    Parse CAMT bytes

    Args:
        data: File contents
        path: Name used in error messages

    Returns:
        np.ndarray: float32 array with the stored shape

    Raises:
        ParseError: naming the byte offset of the first problem
    """
    if len(data) < _HEADER.size:
        raise ParseError(path, len(data), f"truncated header, need {_HEADER.size} bytes")

    magic, version, rank = _HEADER.unpack_from(data, 0)
    if magic != TENSOR_MAGIC:
        raise ParseError(path, 0, f"bad magic {magic!r}, expected {TENSOR_MAGIC!r}")
    if version != TENSOR_VERSION:
        raise ParseError(path, 4, f"unsupported version {version}")
    if rank == 0:
        raise ParseError(path, 6, "rank must be at least 1")

    offset = _HEADER.size
    dims: List[int] = []
    for _ in range(rank):
        if len(data) < offset + _DIM.size:
            raise ParseError(path, len(data), f"truncated dimensions, expected {rank}")
        dims.append(_DIM.unpack_from(data, offset)[0])
        offset += _DIM.size

    count = math.prod(dims)
    expected = count * _PAYLOAD_DTYPE.itemsize
    payload = len(data) - offset
    if payload < expected:
        raise ParseError(path, len(data), f"payload has {payload} bytes, shape {tuple(dims)} needs {expected}")
    if payload > expected:
        raise ParseError(path, offset + expected, f"{payload - expected} trailing bytes after payload")

    array = np.frombuffer(data, dtype=_PAYLOAD_DTYPE, count=count, offset=offset).reshape(dims)
    bad = np.flatnonzero(~np.isfinite(array))
    if bad.size:
        raise ParseError(path, offset + int(bad[0]) * _PAYLOAD_DTYPE.itemsize, "non-finite value")
    return array.astype(np.float32)


def read_tensor(path: PathLike) -> np.ndarray:
    """Read a CAMT file"""
    path = Path(path)
    array = decode_tensor(path.read_bytes(), str(path))
    logger.debug(f"Read tensor {path} with shape {array.shape}")
    return array


def write_tensor(path: PathLike, array: np.ndarray) -> None:
    """Write a CAMT file"""
    path = Path(path)
    path.write_bytes(encode_tensor(array))
    logger.debug(f"Wrote tensor {path} with shape {np.shape(array)}")


def read_scores(path: PathLike) -> ScoreMap:
    """Read a C x H x W score map"""
    array = read_tensor(path)
    if array.ndim != 3:
        raise ParseError(str(path), 6, f"score map must have rank 3, found rank {array.ndim}")
    return ScoreMap(data=array.astype(np.float64))


# ========================================
# PPM / PGM
# ========================================

def _pnm_header(data: bytes, path: str) -> Tuple[bytes, int, int, int, int]:
    """Magic, width, height, maxval and payload offset of a binary PNM file"""
    if len(data) < 2:
        raise ParseError(path, 0, "file too short for a PNM magic number")
    magic = data[:2]
    if magic not in (b"P5", b"P6"):
        raise ParseError(path, 0, f"unsupported magic {magic!r}, expected P5 or P6")

    values = []
    pos = 2
    while len(values) < 3:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and data[pos:pos + 1].isdigit():
            pos += 1
        if start == pos:
            raise ParseError(path, start, "expected a header integer")
        values.append(int(data[start:pos]))

    if pos >= len(data) or not data[pos:pos + 1].isspace():
        raise ParseError(path, pos, "missing whitespace after header")
    width, height, maxval = values
    if width < 1 or height < 1:
        raise ParseError(path, 2, f"invalid size {width}x{height}")
    return magic, width, height, maxval, pos + 1


def _decode_pnm(data: bytes, path: str, magic: bytes) -> np.ndarray:
    found, width, height, maxval, offset = _pnm_header(data, path)
    if found != magic:
        raise ParseError(path, 0, f"expected {magic.decode()} but found {found.decode()}")
    if maxval != 255:
        raise ParseError(path, offset - 1, f"maxval must be 255, found {maxval}")

    channels = 3 if magic == b"P6" else 1
    expected = width * height * channels
    if len(data) - offset < expected:
        raise ParseError(path, len(data), f"payload has {len(data) - offset} bytes, {width}x{height} needs {expected}")

    try:
        with Image.open(io.BytesIO(data)) as img:
            return np.asarray(img, dtype=np.uint8)
    except (UnidentifiedImageError, OSError) as e:
        logger.error(f"Error decoding {path}: {e}")
        raise ParseError(path, offset, str(e))


def read_ppm(path: PathLike) -> RgbImage:
    """Read a P6 image, channel values mapped to [0, 1] by / 255"""
    path = Path(path)
    pixels = _decode_pnm(path.read_bytes(), str(path), b"P6")
    return RgbImage(data=pixels.astype(np.float64) / 255.0)


def read_pgm(path: PathLike) -> LabelMask:
    """Read a P5 mask, pixel value = class index"""
    path = Path(path)
    pixels = _decode_pnm(path.read_bytes(), str(path), b"P5")
    return LabelMask(data=pixels.astype(np.int64))


def write_ppm(path: PathLike, image: RgbImage) -> None:
    """Write an image as P6, values rounded to 8 bits"""
    pixels = np.round(image.data * 255.0).astype(np.uint8)
    Image.fromarray(pixels).save(Path(path), format="PPM")


def write_pgm(path: PathLike, values: np.ndarray) -> None:
    """Write an H x W array of 0..255 integers as P5"""
    values = np.asarray(values)
    if values.ndim != 2:
        raise ConfigError(f"PGM data must be H x W, got shape {values.shape}")
    if values.min() < 0 or values.max() > 255:
        raise ConfigError("PGM values must lie in 0..255")
    Image.fromarray(values.astype(np.uint8)).save(Path(path), format="PPM")


def write_mask(path: PathLike, mask: LabelMask) -> None:
    """Write a label mask as P5"""
    write_pgm(path, mask.data)


def write_heatmaps(out_dir: PathLike, scores: ScoreMap, stem: str = "heatmap") -> List[Path]:
    """
    One min-max scaled PGM per channel

    Args:
        out_dir: Target directory (created if missing)
        scores: Score map to render
        stem: File name prefix

    Returns:
        List[Path]: Written files, channel order
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for c in range(scores.num_classes):
        channel = scores.data[c]
        low, high = float(channel.min()), float(channel.max())
        if high > low:
            scaled = np.round((channel - low) / (high - low) * 255.0)
        else:
            scaled = np.zeros_like(channel)
        target = out_dir / f"{stem}_{c:02d}.pgm"
        write_pgm(target, scaled)
        written.append(target)
    logger.info(f"Wrote {len(written)} heatmap(s) to {out_dir}")
    return written
