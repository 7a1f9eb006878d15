"""
Tendances à l'échelle du bureau sur un sous-ensemble MNIST (marqueur slow)

Lancer avec : pytest -m slow (fichiers MNIST requis sous data/ ou ADVMS_DATA_DIR)
"""
import pytest

from attacks.config import AttackConfig
from dataio.loaders import load_dataset
from dataio.sampling import subset
from defense.switching import SwitchingPool, build_pool
from evaluation.metrics import EvalProtocol, eval_asr
from numeric.architecture import build_architecture
from training.trainer import TrainConfig

pytestmark = pytest.mark.slow

SEEDS = (0, 1, 2)
WHITE_BOX = AttackConfig("pgd", epsilon=0.3, steps=40)
EOT = AttackConfig("pgd", epsilon=0.3, steps=40, eot_samples=10)
PROTOCOL = EvalProtocol(test_count=500)


@pytest.fixture(scope="module")
def mnist():
    try:
        train = load_dataset("mnist", "train")
        test = load_dataset("mnist", "test")
    except OSError:
        pytest.skip("Fichiers MNIST absents")
    return subset(train, 2000, 0), subset(test, 500, 0)


@pytest.fixture(scope="module")
def results(mnist):
    """ASR par graine maître pour chaque configuration comparée"""
    train_set, test_set = mnist
    arch = build_architecture("mnist")
    standard = TrainConfig(epochs=3)
    robust = TrainConfig(epochs=3, epsilon_train=0.3)
    table = {}
    for seed in SEEDS:
        plain_pool = build_pool(arch, train_set, 4, standard, seed)
        advms_pool = build_pool(arch, train_set, 4, robust, seed)
        single = SwitchingPool(plain_pool.models[:1], 0.0, seed)
        single_robust = SwitchingPool(advms_pool.models[:1], 0.3, seed)
        table[seed] = {
            "single": eval_asr(single, WHITE_BOX, test_set, PROTOCOL).asr,
            "single_robust": eval_asr(single_robust, WHITE_BOX, test_set, PROTOCOL).asr,
            "pool_snapshot": eval_asr(plain_pool, WHITE_BOX, test_set, PROTOCOL).asr,
            "pool_eot": eval_asr(plain_pool, EOT, test_set, PROTOCOL).asr,
            "advms_eot": eval_asr(advms_pool, EOT, test_set, PROTOCOL).asr,
        }
    return table


def _majority(predicate, table):
    return sum(bool(predicate(row)) for row in table.values()) >= 2


def test_undefended_model_is_broken(results):
    assert _majority(lambda r: r["single"] >= 0.80, results)


def test_adversarial_training_lowers_asr(results):
    assert _majority(lambda r: r["single_robust"] <= r["single"] - 0.30, results)


def test_switching_hides_gradients_from_snapshot_attack(results):
    assert _majority(lambda r: r["pool_snapshot"] <= r["single"] - 0.10, results)
    assert _majority(lambda r: r["pool_eot"] > r["pool_snapshot"], results)


def test_advms_beats_both_sources_alone(results):
    assert _majority(lambda r: r["advms_eot"] < min(r["single_robust"],
                                                   max(r["pool_eot"], r["pool_snapshot"])),
                     results)
