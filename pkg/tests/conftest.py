"""
Pytest configuration and fixtures
"""
import pytest
import sys
import os
import numpy as np

# Add parent directory to path so tests can import camforge modules
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from camforge.models.metrics import LabelMask  # noqa: E402
from camforge.models.tensors import RgbImage, ScoreMap  # noqa: E402
from camforge.services.corpus_service import generate_corpus  # noqa: E402


def pytest_configure(config):
    """Register custom markers"""
    config.addinivalue_line("markers", "unit: fast, pure tests")
    config.addinivalue_line("markers", "integration: corpus-level runs")
    config.addinivalue_line("markers", "slow: full parameter sweeps")
    config.addinivalue_line("markers", "benchmark: runtime bounds")


@pytest.fixture
def rng():
    """Seeded generator for test data"""
    return np.random.default_rng(1234)


@pytest.fixture
def small_scores(rng):
    """3 x 8 x 8 random score map"""
    return ScoreMap(data=rng.normal(0.0, 1.5, size=(3, 8, 8)))


@pytest.fixture
def small_image(rng):
    """8 x 8 image with two colour regions and mild noise"""
    pixels = np.empty((8, 8, 3))
    pixels[:, :4] = [0.2, 0.3, 0.7]
    pixels[:, 4:] = [0.8, 0.6, 0.2]
    pixels += rng.normal(0.0, 0.02, size=pixels.shape)
    return RgbImage(data=np.clip(pixels, 0.0, 1.0))


@pytest.fixture
def circle_sample():
    """32 x 32 red disc of radius 9 on a blue-grey background"""
    rows, cols = np.mgrid[0:32, 0:32]
    inside = (rows - 15.5) ** 2 + (cols - 15.5) ** 2 <= 81.0
    pixels = np.where(inside[:, :, None], [0.85, 0.25, 0.2], [0.3, 0.4, 0.6])
    return RgbImage(data=pixels), LabelMask(data=inside.astype(np.int64), num_classes=1)


@pytest.fixture(scope="session")
def corpus_dir(tmp_path_factory):
    """Default synthetic corpus (20 images, seed 0)"""
    path = tmp_path_factory.mktemp("corpus")
    generate_corpus(path, seed=0)
    return path
