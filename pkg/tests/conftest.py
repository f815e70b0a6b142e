import sys
from pathlib import Path

import numpy as np
import pytest

from padicfield import kernels

sys.path.insert(0, str(Path(__file__).parent))

BACKENDS = sorted(kernels.backends())


@pytest.fixture(params=BACKENDS)
def backend(request, monkeypatch):
    """Run the test once per available kernel implementation."""
    monkeypatch.setattr(kernels, "_impl", kernels.backends()[request.param])
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
