"""
Fixtures partagées : petites architectures, jeux synthétiques, pools entraînés
"""
import sys
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).parent.parent
sys.path.insert(0, str(ROOT / "src"))
sys.path.insert(0, str(ROOT))

from dataio.synthetic import make_synthetic  # noqa: E402
from defense.switching import build_pool  # noqa: E402
from numeric.architecture import build_architecture  # noqa: E402
from numeric.model import init_params  # noqa: E402
from training.trainer import TrainConfig  # noqa: E402

SIDE = 8
CLASSES = 3


@pytest.fixture(scope="session")
def tiny_arch():
    """conv 8×(3,3) → pool → dense 32 → sortie 3, entrée (1, 8, 8)"""
    return build_architecture("synthetic", (1, SIDE, SIDE), CLASSES)


@pytest.fixture(scope="session")
def train_set():
    return make_synthetic(CLASSES, 30, SIDE, seed=1)


@pytest.fixture(scope="session")
def test_set():
    return make_synthetic(CLASSES, 15, SIDE, seed=2)


@pytest.fixture(scope="session")
def quick_config():
    return TrainConfig(epochs=6, batch_size=16, learning_rate=0.02, momentum=0.9)


@pytest.fixture(scope="session")
def trained_pool(tiny_arch, train_set, quick_config):
    """Pool M = 3 entraîné (standard) sur le jeu synthétique"""
    return build_pool(tiny_arch, train_set, 3, quick_config, master_seed=7)


@pytest.fixture(scope="session")
def random_model(tiny_arch):
    return init_params(tiny_arch, 11)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
