"""
Tests de la commutation de modèles : graines, activation, prédiction, mémoire, manifeste
"""
import configparser

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from core.errors import ArgumentError, ConfigError, FormatError
from core.utils import format_bytes, format_number
from dataio.synthetic import make_synthetic
from defense import switching
from defense.pool_manifest import load_pool, save_pool
from defense.switching import (SwitchingPool, activate, activation_uniformity, build_pool,
                               member_seed, pool_memory_bytes, predict)
from evaluation.sweep import CheckpointCache
from numeric.architecture import build_architecture, parameter_count
from numeric.model import Model, init_params, make_rng
from training.trainer import TrainConfig


def _clones(model, count, epsilon=0.0):
    """count copies identiques d'un modèle, graines distinctes"""
    return [Model(model.architecture, [(w.copy(), b.copy()) for w, b in model.params],
                  seed, epsilon) for seed in range(count)]


# ═══════════════════════════════════════════════════════════════
#  GRAINES
# ═══════════════════════════════════════════════════════════════

def test_member_seeds_are_distinct():
    for master in (0, 1, 2**64 - 1):
        seeds = [member_seed(master, i) for i in range(64)]
        assert len(set(seeds)) == 64


def test_member_seed_is_deterministic():
    assert member_seed(42, 3) == member_seed(42, 3)
    assert member_seed(42, 3) != member_seed(43, 3)


def test_member_seed_negative_index():
    with pytest.raises(ArgumentError):
        member_seed(0, -1)


# ═══════════════════════════════════════════════════════════════
#  ACTIVATION
# ═══════════════════════════════════════════════════════════════

def test_single_member_always_activated(random_model):
    pool = SwitchingPool(_clones(random_model, 1), 0.0, 0)
    rng = np.random.default_rng(0)
    assert {activate(pool, rng) for _ in range(200)} == {0}


def test_activation_is_keyed_by_rng(random_model):
    pool = SwitchingPool(_clones(random_model, 5), 0.0, 0)
    first = [activate(pool, make_rng(9, i)) for i in range(50)]
    second = [pool.activate(make_rng(9, i)) for i in range(50)]
    assert first == second


@pytest.mark.parametrize("m", [2, 4, 8])
def test_activation_is_uniform(random_model, m):
    pool = SwitchingPool(_clones(random_model, m), 0.0, 0)
    frequencies, p_value = activation_uniformity(pool, np.random.default_rng(m), draws=20_000)
    assert frequencies.shape == (m,)
    assert p_value > 1e-3


def test_activation_frequencies_m4(random_model):
    pool = SwitchingPool(_clones(random_model, 4), 0.0, 0)
    frequencies, _ = activation_uniformity(pool, np.random.default_rng(5), draws=10_000)
    assert np.all(np.abs(frequencies - 0.25) <= 0.02)


def test_activation_uniformity_single_member(random_model):
    pool = SwitchingPool(_clones(random_model, 1), 0.0, 0)
    frequencies, p_value = activation_uniformity(pool, np.random.default_rng(0), draws=100)
    assert_array_equal(frequencies, [1.0])
    assert p_value == 1.0


def test_activation_uniformity_needs_draws(random_model):
    with pytest.raises(ArgumentError):
        activation_uniformity(SwitchingPool(_clones(random_model, 2), 0.0, 0),
                              np.random.default_rng(0), draws=0)


# ═══════════════════════════════════════════════════════════════
#  PRÉDICTION ET MÉMOIRE
# ═══════════════════════════════════════════════════════════════

def test_single_member_prediction_is_deterministic(trained_pool, test_set):
    pool = SwitchingPool(trained_pool.models[:1], 0.0, 7)
    for i in range(10):
        x = test_set.images[i]
        labels = {predict(pool, x, np.random.default_rng(seed)) for seed in range(100)}
        assert len(labels) == 1


def test_identical_members_predict_alike(random_model, test_set):
    pool = SwitchingPool(_clones(random_model, 4), 0.0, 0)
    single = SwitchingPool(_clones(random_model, 1), 0.0, 0)
    rng = np.random.default_rng(3)
    for x in test_set.images[:10]:
        assert predict(pool, x, rng) == predict(single, x, rng)


def test_memory_is_linear_in_m(random_model):
    count = parameter_count(random_model.architecture)
    for m in (1, 2, 4, 8):
        pool = SwitchingPool(_clones(random_model, m), 0.0, 0)
        assert pool_memory_bytes(pool) == m * count * 4


def test_memory_mnist_single_member():
    arch = build_architecture("mnist")
    pool = SwitchingPool([init_params(arch, 1)], 0.0, 0)
    assert pool_memory_bytes(pool) == 312_202 * 4
    assert format_number(parameter_count(arch)) == "312 202"
    assert format_bytes(pool_memory_bytes(pool)) == "1.19 Mo"


# ═══════════════════════════════════════════════════════════════
#  CONSTRUCTION
# ═══════════════════════════════════════════════════════════════

def test_build_pool_rejects_empty(tiny_arch, train_set, quick_config):
    with pytest.raises(ArgumentError):
        build_pool(tiny_arch, train_set, 0, quick_config, master_seed=0)


def test_pool_members_are_distinct(trained_pool):
    assert trained_pool.M == len(trained_pool) == 3
    flats = [model.flat_params() for model in trained_pool.models]
    for i in range(3):
        for j in range(i + 1, 3):
            assert not np.array_equal(flats[i], flats[j])
    assert [m.init_seed for m in trained_pool.models] == [member_seed(7, i) for i in range(3)]


def test_build_pool_reports_members_in_order(tiny_arch, train_set):
    config = TrainConfig(epochs=1, batch_size=32)
    seen = []
    build_pool(tiny_arch, train_set, 2, config, master_seed=1,
               on_member=lambda index, model, cached: seen.append((index, cached)))
    assert seen == [(0, False), (1, False)]


def test_pool_rejects_mixed_epsilon(random_model):
    models = _clones(random_model, 2)
    models[1].train_epsilon = 0.1
    with pytest.raises(ConfigError):
        SwitchingPool(models, 0.0, 0)


def test_pool_rejects_mixed_architecture(random_model):
    other = init_params(build_architecture("synthetic", (1, 10, 10), 3), 99)
    with pytest.raises(ConfigError):
        SwitchingPool([random_model, other], 0.0, 0)


def test_pool_rejects_duplicate_seeds(random_model):
    with pytest.raises(ConfigError):
        SwitchingPool([random_model, random_model.copy()], 0.0, 0)


def test_pool_rejects_no_members():
    with pytest.raises(ArgumentError):
        SwitchingPool([], 0.0, 0)


def test_cache_reuses_members(tmp_path, tiny_arch, train_set):
    config = TrainConfig(epochs=1, batch_size=32)
    cache = CheckpointCache(tmp_path / "cache")
    first = build_pool(tiny_arch, train_set, 2, config, master_seed=3, cache=cache)
    assert (cache.hits, cache.misses) == (0, 2)

    larger = build_pool(tiny_arch, train_set, 3, config, master_seed=3, cache=cache)
    assert cache.hits == 2
    for a, b in zip(first.models, larger.models):
        assert_array_equal(a.flat_params(), b.flat_params())


# ═══════════════════════════════════════════════════════════════
#  MANIFESTE
# ═══════════════════════════════════════════════════════════════

def test_pool_manifest_round_trip(tmp_path, trained_pool):
    manifest = save_pool(trained_pool, tmp_path, "pool")
    loaded = load_pool(manifest)
    assert loaded.M == trained_pool.M
    assert loaded.master_seed == trained_pool.master_seed
    assert loaded.epsilon_train == trained_pool.epsilon_train
    assert loaded.architecture.key() == trained_pool.architecture.key()
    for a, b in zip(trained_pool.models, loaded.models):
        assert_array_equal(a.flat_params(), b.flat_params())
        assert a.init_seed == b.init_seed


def test_pool_manifest_detects_tampering(tmp_path, trained_pool):
    manifest = save_pool(trained_pool, tmp_path, "pool")
    member = tmp_path / "pool_member_1.ckpt"
    payload = bytearray(member.read_bytes())
    payload[-1] ^= 0xFF
    member.write_bytes(bytes(payload))
    with pytest.raises(FormatError):
        load_pool(manifest)


def test_pool_manifest_missing_member(tmp_path, trained_pool):
    manifest = save_pool(trained_pool, tmp_path, "pool")
    parser = configparser.ConfigParser(interpolation=None)
    parser.read(manifest, encoding="utf-8")
    parser.remove_option("members", "member.2.path")
    with open(manifest, "w", encoding="utf-8") as f:
        parser.write(f)
    with pytest.raises(FormatError):
        load_pool(manifest)


def test_pool_manifest_missing_file(tmp_path):
    with pytest.raises(OSError):
        load_pool(tmp_path / "absent.manifest")


def test_cache_hit_skips_training(tmp_path, tiny_arch, train_set, monkeypatch):
    config = TrainConfig(epochs=1, batch_size=32)
    cache = CheckpointCache(tmp_path / "cache")
    first = build_pool(tiny_arch, train_set, 2, config, master_seed=4, cache=cache)

    def refuse(*args):
        raise AssertionError("sous-modèle réentraîné malgré le cache")

    monkeypatch.setattr(switching, "_train_member", refuse)
    seen = []
    again = build_pool(tiny_arch, train_set, 2, config, master_seed=4, cache=cache,
                       on_member=lambda index, model, cached: seen.append((index, cached)))
    assert seen == [(0, True), (1, True)]
    assert (cache.hits, cache.misses) == (2, 2)
    for a, b in zip(first.models, again.models):
        assert_array_equal(a.flat_params(), b.flat_params())


def test_cache_lookup_miss_then_hit(tmp_path, random_model, train_set):
    cache = CheckpointCache(tmp_path / "cache")
    config = TrainConfig(epochs=1).with_seed(random_model.init_seed)
    assert cache.lookup(random_model.architecture, train_set, config) is None
    cache.store(random_model.architecture, train_set, config, random_model)
    found = cache.lookup(random_model.architecture, train_set, config)
    assert_array_equal(found.flat_params(), random_model.flat_params())
    assert (cache.hits, cache.misses) == (1, 1)


def test_cache_path_follows_dataset_content(tmp_path, tiny_arch):
    cache = CheckpointCache(tmp_path / "cache")
    config = TrainConfig(epochs=1)
    paths = set()
    for seed in range(5):
        dataset = make_synthetic(3, 10, 8, seed=seed)
        paths.add(cache.path_for(tiny_arch, dataset, config))
    assert len(paths) == 5
    twin = make_synthetic(3, 10, 8, seed=0)
    assert cache.path_for(tiny_arch, twin, config) == cache.path_for(
        tiny_arch, make_synthetic(3, 10, 8, seed=0), config)
    assert twin.fingerprint() is twin.fingerprint()
