import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from plab import orlicz


@pytest.fixture(scope="session")
def ctxs():
    return {p: orlicz.ExponentCtx(p) for p in (1.5, 2.0, 3.0, 4.5)}


@pytest.fixture()
def rng():
    return np.random.Generator(np.random.Philox(987))


def sample_vectors(rng, n, scale=3.0):
    """Mixed-magnitude sample: bulk normals plus small and large outliers."""
    v = rng.normal(size=(n, 2)) * scale
    k = n // 10
    v[:k] *= 1e-3
    v[k:2 * k] *= 30.0
    return v
