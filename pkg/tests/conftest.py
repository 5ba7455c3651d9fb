import pathlib
import sys

import numpy as np
import pytest

# The modules live flat at the repository root, as the commands import them.
ROOT = pathlib.Path(__file__).resolve().parent.parent
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from layers import init_model_params  # noqa: E402
from models.AudioBuffer import AudioBuffer  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_params():
    """N=8, T=6, L=1: the toy dimensions of the gradient check."""
    return init_model_params(n_bins=8, T=6, L=1, seed=0)


@pytest.fixture
def random_buffer(rng):
    return AudioBuffer(rng.standard_normal(8000), 8000)


@pytest.fixture
def run_dir(tmp_path):
    path = tmp_path / 'outputs' / 'test'
    path.mkdir(parents=True)
    return path
