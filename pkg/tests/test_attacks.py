"""
Tests des attaques : FGSM, PGD, CW-PGD, EOT, pilote par lot et audit
"""
import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from attacks.adaptive.eot_attack import eot_gradient
from attacks.batch import (IterationAuditor, attack_batch, audit_perturbation,
                           dump_adversarial_batch, load_adversarial_batch)
from attacks.config import AttackConfig
from attacks.gradient.fgsm_attack import fgsm
from attacks.gradient.pgd_attack import pgd
from attacks.oracle import EOTOracle, SnapshotOracle, WhiteBoxOracle, make_oracle
from core.errors import ArgumentError, ConfigError, FormatError, ShapeError
from dataio.synthetic import make_synthetic
from defense.switching import SwitchingPool, member_seed
from numeric.architecture import Architecture, output
from numeric.model import Model, init_params, input_gradient, make_rng, predict_labels


def _linear_model(weight):
    arch = Architecture("custom", (1, 2, 2), (output(weight.shape[0]),))
    return Model(arch, [(weight.astype(np.float32), np.zeros(weight.shape[0], np.float32))], 0)


def _clone(model, seed):
    return Model(model.architecture, [(w.copy(), b.copy()) for w, b in model.params], seed,
                 model.train_epsilon)


# ═══════════════════════════════════════════════════════════════
#  CONFIGURATION
# ═══════════════════════════════════════════════════════════════

def test_fgsm_defaults_are_forced():
    config = AttackConfig("fgsm", epsilon=0.2)
    assert (config.steps, config.step_size, config.random_start) == (1, 0.2, False)


def test_pgd_defaults():
    config = AttackConfig("pgd", epsilon=0.3)
    assert config.steps == 40
    assert config.step_size == pytest.approx(2.5 * 0.3 / 40)
    assert config.random_start is True


@pytest.mark.parametrize("kwargs", [
    {"kind": "fgsm", "steps": 3},
    {"kind": "fgsm", "random_start": True},
    {"kind": "pgd", "epsilon": 0.1, "step_size": 0.2},
    {"kind": "pgd", "epsilon": 1.5},
    {"kind": "deepfool"},
    {"kind": "cw_pgd", "kappa": -1.0},
    {"kind": "pgd", "eot_samples": 0},
    {"kind": "pgd", "eot_mode": "mean"},
])
def test_invalid_attack_config(kwargs):
    with pytest.raises(ConfigError):
        AttackConfig(**kwargs)


def test_labels_and_loss_kind():
    assert AttackConfig("pgd").label == "pgd"
    assert AttackConfig("cw_pgd", eot_samples=10).label == "cw_pgd+eot10"
    assert AttackConfig("fgsm", eot_mode="exact").label == "fgsm+eot_exact"
    assert AttackConfig("cw_pgd").loss_kind == "cw"
    assert AttackConfig("fgsm").loss_kind == "ce"


def test_config_dict_round_trip():
    config = AttackConfig("cw_pgd", epsilon=8 / 255, steps=20, kappa=0.5, eot_samples=10, seed=3)
    assert AttackConfig.from_dict(config.to_dict()) == config


def test_config_dict_rejects_unknown_keys():
    with pytest.raises(ConfigError):
        AttackConfig.from_dict({"kind": "pgd", "epsilon_attack": "0.1"})


# ═══════════════════════════════════════════════════════════════
#  FGSM / PGD
# ═══════════════════════════════════════════════════════════════

def test_fgsm_zero_epsilon_is_identity(random_model, train_set):
    x, y = train_set.images[0], int(train_set.labels[0])
    assert_array_equal(fgsm(WhiteBoxOracle(random_model), x, y, 0.0), x)


def test_fgsm_zero_gradient_is_identity():
    model = _linear_model(np.zeros((3, 4)))
    x = np.full((1, 2, 2), 0.5, dtype=np.float32)
    assert_array_equal(fgsm(WhiteBoxOracle(model), x, 1, 0.1), x)


def test_fgsm_interior_pixels_move_by_epsilon():
    weight = np.array([[1.0, -2.0, 0.5, 3.0], [-1.0, 1.0, 2.0, -0.5]])
    model = _linear_model(weight)
    x = np.full((1, 2, 2), 0.5, dtype=np.float32)
    x_adv = fgsm(WhiteBoxOracle(model), x, 0, 0.1)
    gradient = input_gradient(model, x, 0)
    assert_allclose(np.abs(x_adv - x), 0.1, atol=1e-6)
    assert_array_equal(np.sign(x_adv - x), np.sign(gradient))


def test_fgsm_equals_single_step_pgd(trained_pool, test_set):
    oracle = WhiteBoxOracle(trained_pool.models[0])
    single_step = AttackConfig("pgd", epsilon=0.1, step_size=0.1, steps=1, random_start=False)
    for i in range(10):
        x, y = test_set.images[i], int(test_set.labels[i])
        assert_allclose(pgd(oracle, x, y, single_step), fgsm(oracle, x, y, 0.1), atol=1e-6)


@pytest.mark.parametrize("kind", ["pgd", "cw_pgd"])
def test_pgd_zero_epsilon_is_identity(trained_pool, test_set, kind):
    config = AttackConfig(kind, epsilon=0.0, steps=5)
    oracle = make_oracle(trained_pool.models[0], config)
    x, y = test_set.images[2], int(test_set.labels[2])
    assert_array_equal(pgd(oracle, x, y, config, make_rng(0, 2)), x)


def test_pgd_shape_mismatch(random_model):
    with pytest.raises(ShapeError):
        pgd(WhiteBoxOracle(random_model), np.zeros((1, 5, 5)), 0, AttackConfig())


def _random_target(arch, rng, members):
    """Modèle ou pool fraîchement initialisé, graines tirées de rng"""
    master = int(rng.integers(2**63))
    models = [init_params(arch, member_seed(master, i)) for i in range(members)]
    return models[0] if members == 1 else SwitchingPool(models, 0.0, master)


def _random_images(rng, count, shape):
    images = rng.uniform(0.0, 1.0, size=(count,) + shape)
    saturated = rng.uniform(size=images.shape) < 0.2
    images[saturated] = rng.integers(0, 2, size=int(saturated.sum()))
    return images.astype(np.float32)


def test_constraints_hold_on_every_iterate(tiny_arch):
    kinds = ("fgsm", "pgd", "cw_pgd")
    for run in range(1000):
        rng = make_rng(2024, run)
        kind = kinds[run % 3]
        epsilon = float(rng.choice([0.0, 2 / 255, 8 / 255, float(rng.uniform(0.0, 0.3)), 0.3]))
        steps = None if kind == "fgsm" else int(rng.integers(1, 6))
        config = AttackConfig(kind, epsilon=epsilon, steps=steps,
                              kappa=float(rng.uniform(0.0, 2.0)),
                              eot_samples=int(rng.integers(1, 4)),
                              seed=int(rng.integers(2**63)))
        target = _random_target(tiny_arch, rng, int(rng.integers(1, 4)))
        images = _random_images(rng, 2, tiny_arch.input_shape)
        labels = rng.integers(0, tiny_arch.num_classes, size=2)
        auditor = IterationAuditor(epsilon)
        x_adv = attack_batch(make_oracle(target, config), images, labels, config,
                             on_iterate=auditor)
        assert auditor.ok and auditor.iterates == config.steps, (run, config)
        assert auditor.max_linf <= epsilon + 1e-6
        assert np.abs(x_adv - images).max() <= epsilon + 1e-6
        assert x_adv.min() >= 0.0 and x_adv.max() <= 1.0


def test_fgsm_white_box_ignores_rng(random_model, test_set):
    oracle = WhiteBoxOracle(random_model)
    x, y = test_set.images[0], int(test_set.labels[0])
    assert_array_equal(fgsm(oracle, x, y, 0.1, make_rng(1, 0)), fgsm(oracle, x, y, 0.1, make_rng(2, 0)))


def test_fgsm_snapshot_follows_rng(tiny_arch, test_set):
    pool = SwitchingPool([init_params(tiny_arch, member_seed(5, i)) for i in range(4)], 0.0, 5)
    oracle = SnapshotOracle(pool)
    x, y = test_set.images[0], int(test_set.labels[0])
    outputs = [fgsm(oracle, x, y, 0.1, make_rng(3, k)) for k in range(20)]
    assert_array_equal(outputs[0], fgsm(oracle, x, y, 0.1, make_rng(3, 0)))
    assert len({out.tobytes() for out in outputs}) > 1


def test_pgd_is_at_least_as_strong_as_fgsm(trained_pool):
    model = trained_pool.models[0]
    data = make_synthetic(3, 67, 8, seed=31).take(np.arange(200))
    oracle = WhiteBoxOracle(model)
    for epsilon in (0.05, 0.1):
        fgsm_adv = attack_batch(oracle, data.images, data.labels, AttackConfig("fgsm", epsilon))
        pgd_adv = attack_batch(oracle, data.images, data.labels,
                               AttackConfig("pgd", epsilon, steps=20))
        fgsm_rate = np.mean(predict_labels(model, fgsm_adv) != data.labels)
        pgd_rate = np.mean(predict_labels(model, pgd_adv) != data.labels)
        assert pgd_rate >= fgsm_rate


# ═══════════════════════════════════════════════════════════════
#  ORACLES ET EOT
# ═══════════════════════════════════════════════════════════════

def test_make_oracle_routing(trained_pool, random_model):
    assert isinstance(make_oracle(random_model, AttackConfig()), WhiteBoxOracle)
    assert isinstance(make_oracle(trained_pool, AttackConfig()), SnapshotOracle)
    assert isinstance(make_oracle(trained_pool, AttackConfig(eot_samples=10)), EOTOracle)
    assert isinstance(make_oracle(trained_pool, AttackConfig(eot_mode="exact")), EOTOracle)
    single = SwitchingPool(trained_pool.models[:1], 0.0, 7)
    assert isinstance(make_oracle(single, AttackConfig()), WhiteBoxOracle)
    with pytest.raises(ArgumentError):
        make_oracle(random_model, AttackConfig(eot_samples=5))


def test_snapshot_draws_are_keyed_by_rng(trained_pool, test_set):
    oracle = SnapshotOracle(trained_pool)
    first = oracle.session([make_rng(3, i) for i in range(20)]).members
    second = oracle.session([make_rng(3, i) for i in range(20)]).members
    assert_array_equal(first, second)
    assert set(first.tolist()) <= {0, 1, 2}


def test_eot_single_member_equals_input_gradient(trained_pool, test_set):
    model = trained_pool.models[0]
    pool = SwitchingPool([model], 0.0, 7)
    x, y = test_set.images[0], int(test_set.labels[0])
    for n in (1, 5, 10):
        assert_array_equal(eot_gradient(pool, x, y, n, rng=make_rng(1)), input_gradient(model, x, y))


def test_eot_identical_members_equals_input_gradient(trained_pool, test_set):
    model = trained_pool.models[1]
    pool = SwitchingPool([_clone(model, 101), _clone(model, 102), _clone(model, 103)], 0.0, 0)
    x, y = test_set.images[4], int(test_set.labels[4])
    assert_allclose(eot_gradient(pool, x, y, 10, "cw", make_rng(2)),
                    input_gradient(model, x, y, "cw"), rtol=1e-5, atol=1e-7)


def test_eot_exact_mode_averages_members(trained_pool, test_set):
    pool = SwitchingPool(trained_pool.models[:2], 0.0, 7)
    x, y = test_set.images[5], int(test_set.labels[5])
    g1, g2 = (input_gradient(m, x, y) for m in pool.models)
    assert_allclose(eot_gradient(pool, x, y, exact=True), (g1 + g2) / 2, rtol=1e-5, atol=1e-7)


def test_eot_empty_pool():
    class EmptyPool:
        models = []
    with pytest.raises(ArgumentError):
        eot_gradient(EmptyPool(), np.zeros((1, 8, 8)), 0)


def test_eot_sampling_is_unbiased(trained_pool, test_set):
    x, y = test_set.images[6], int(test_set.labels[6])
    exact = eot_gradient(trained_pool, x, y, exact=True).astype(np.float64)
    members = np.stack([input_gradient(m, x, y) for m in trained_pool.models]).astype(np.float64)
    draws = 1000
    rng = make_rng(12)
    samples = np.stack([eot_gradient(trained_pool, x, y, 1, rng=rng) for _ in range(draws)])
    std_error = members.std(axis=0) / np.sqrt(draws)
    tolerance = 4 * std_error + 1e-6 * (1 + np.abs(exact))
    assert (np.abs(samples.mean(axis=0) - exact) <= tolerance).all()


# ═══════════════════════════════════════════════════════════════
#  PILOTE PAR LOT
# ═══════════════════════════════════════════════════════════════

def test_batch_of_one_equals_single_attack(trained_pool, test_set):
    config = AttackConfig("pgd", epsilon=0.1, steps=5, seed=9)
    oracle = WhiteBoxOracle(trained_pool.models[2])
    x, y = test_set.images[7], int(test_set.labels[7])
    batch = attack_batch(oracle, x[None], np.array([y]), config, example_ids=[7])
    assert_array_equal(batch[0], pgd(oracle, x, y, config, make_rng(9, 7)))


def test_permuted_batch_gives_permuted_outputs(trained_pool, test_set):
    config = AttackConfig("pgd", epsilon=0.1, steps=5, seed=4)
    oracle = make_oracle(trained_pool, config)
    ids = np.arange(len(test_set))
    perm = np.random.default_rng(0).permutation(len(test_set))
    straight = attack_batch(oracle, test_set.images, test_set.labels, config, ids)
    permuted = attack_batch(oracle, test_set.images[perm], test_set.labels[perm], config, ids[perm])
    assert_allclose(permuted, straight[perm], atol=1e-6)


def test_empty_batch(random_model):
    with pytest.raises(ArgumentError):
        attack_batch(WhiteBoxOracle(random_model), np.zeros((0, 1, 8, 8)), np.zeros(0),
                     AttackConfig())


def test_adversarial_batch_file(tmp_path, trained_pool, test_set):
    x_adv = attack_batch(WhiteBoxOracle(trained_pool.models[0]), test_set.images[:6],
                         test_set.labels[:6], AttackConfig("fgsm", 0.1))
    path = tmp_path / "batch.advb"
    dump_adversarial_batch(x_adv, path)
    raw = path.read_bytes()
    assert raw[:4] == b"ADVB" and raw[4] == 4
    assert len(raw) == 5 + 4 * 4 + 4 * x_adv.size
    assert_array_equal(load_adversarial_batch(path), x_adv)


def test_adversarial_batch_bad_magic(tmp_path):
    path = tmp_path / "bad.advb"
    path.write_bytes(b"NOPE" + bytes(20))
    with pytest.raises(FormatError):
        load_adversarial_batch(path)


def test_audit_flags_violations():
    x = np.full((2, 1, 2, 2), 0.5, dtype=np.float32)
    x_adv = x.copy()
    x_adv[0, 0, 0, 0] = 0.7
    x_adv[1, 0, 1, 1] = 1.2
    audit = audit_perturbation(x, x_adv, 0.1)
    assert audit.ball_violations == 2
    assert audit.box_violations == 1
    assert not audit.ok
