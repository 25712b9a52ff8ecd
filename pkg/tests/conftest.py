import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from coalmap.raster import ReflectanceScene  # noqa: E402

BAND_ORDER = ("blue", "green", "red", "nir", "swir1", "swir2")


def scene_from_pixels(pixels, shape=None):
    """Build a scene from an (n, 6) array of reflectance (one row per pixel)."""
    pixels = np.asarray(pixels, dtype=np.float32)
    if pixels.ndim == 1:
        pixels = pixels[np.newaxis]
    shape = shape or (1, pixels.shape[0])
    stack = pixels.T.reshape((6,) + tuple(shape))
    return ReflectanceScene.from_reflectance(stack)


@pytest.fixture
def make_scene():
    return scene_from_pixels


@pytest.fixture
def fuzz_pixels():
    rng = np.random.default_rng(20240501)
    return rng.uniform(0.0, 0.5, size=(100_000, 6)).astype(np.float32)


@pytest.fixture
def dark_pixels():
    # dense in the unsuppressed branch of the index
    rng = np.random.default_rng(99)
    return rng.uniform(0.0, 0.1, size=(50_000, 6)).astype(np.float32)


_acceptance = {}


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance.py" in report.nodeid:
        _acceptance[report.nodeid] = (report.outcome, getattr(report, "duration", 0.0))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for nodeid, (outcome, duration) in sorted(_acceptance.items()):
        name = nodeid.split("::")[-1]
        verdict = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{verdict}  {name}  ({duration:.2f}s)")
