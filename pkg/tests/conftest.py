import numpy as np
import pytest

from thermomorph import ReconstructionMethod, ScalarGrid, StructuringElement, reconstruct_by_dilation


@pytest.fixture(scope="session", autouse=True)
def warm_queue_kernel():
    """Compile the jitted reconstruction kernel once, outside timed tests."""
    g = ScalarGrid(np.arange(12.0).reshape(3, 4))
    m = ScalarGrid(np.arange(12.0).reshape(3, 4) - 1.0)
    reconstruct_by_dilation(m, g, StructuringElement.eight(), ReconstructionMethod.QUEUE)
    reconstruct_by_dilation(m, g, StructuringElement.four(), ReconstructionMethod.QUEUE)


def random_grid(rng, height, width, lo=0.0, hi=10.0, roi_fraction=None):
    """Seeded random grid; optional random ROI keeping >= 1 pixel."""
    vals = rng.uniform(lo, hi, (height, width))
    roi = None
    if roi_fraction is not None:
        roi = rng.random((height, width)) < roi_fraction
        if not roi.any():
            roi[rng.integers(height), rng.integers(width)] = True
    return ScalarGrid(vals, roi)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
