"""
Tests des chargeurs, du jeu synthétique et de l'échantillonnage
"""
import gzip

import numpy as np
import pytest
from numpy.testing import assert_array_equal

import config
from config import data_dir
from core.errors import ArgumentError, ConfigError, FormatError
from dataio.dataset import Dataset
from dataio.loaders import (load_cifar10, load_dataset, load_mnist, write_cifar10,
                            write_mnist)
from dataio.sampling import batches, subset, train_test_split
from dataio.synthetic import class_templates, make_synthetic


def _quantized(n, shape, classes, seed):
    rng = np.random.default_rng(seed)
    images = rng.integers(0, 256, size=(n,) + shape).astype(np.float32) / np.float32(255.0)
    labels = rng.integers(0, classes, size=n).astype(np.int64)
    return images, labels


# ═══════════════════════════════════════════════════════════════
#  MNIST / CIFAR-10
# ═══════════════════════════════════════════════════════════════

def test_mnist_round_trip(tmp_path):
    images, labels = _quantized(7, (1, 28, 28), 10, 0)
    dataset = Dataset(images, labels, 10, "mnist")
    write_mnist(dataset, tmp_path / "img", tmp_path / "lbl")
    loaded = load_mnist(tmp_path / "img", tmp_path / "lbl")
    assert_array_equal(loaded.images, images)
    assert_array_equal(loaded.labels, labels)
    assert loaded.images.min() >= 0.0 and loaded.images.max() <= 1.0


def test_mnist_gzip_is_transparent(tmp_path):
    images, labels = _quantized(3, (1, 28, 28), 10, 1)
    write_mnist(Dataset(images, labels, 10, "mnist"), tmp_path / "img", tmp_path / "lbl")
    for name in ("img", "lbl"):
        (tmp_path / f"{name}.gz").write_bytes(gzip.compress((tmp_path / name).read_bytes()))
    loaded = load_mnist(tmp_path / "img.gz", tmp_path / "lbl.gz")
    assert_array_equal(loaded.labels, labels)


def test_mnist_wrong_magic(tmp_path):
    images, labels = _quantized(2, (1, 28, 28), 10, 2)
    write_mnist(Dataset(images, labels, 10, "mnist"), tmp_path / "img", tmp_path / "lbl")
    raw = bytearray((tmp_path / "img").read_bytes())
    raw[3] = 0x99
    (tmp_path / "img").write_bytes(bytes(raw))
    with pytest.raises(FormatError):
        load_mnist(tmp_path / "img", tmp_path / "lbl")


def test_mnist_truncated(tmp_path):
    images, labels = _quantized(2, (1, 28, 28), 10, 3)
    write_mnist(Dataset(images, labels, 10, "mnist"), tmp_path / "img", tmp_path / "lbl")
    raw = (tmp_path / "img").read_bytes()
    (tmp_path / "img").write_bytes(raw[:-10])
    with pytest.raises(FormatError):
        load_mnist(tmp_path / "img", tmp_path / "lbl")


def test_mnist_count_mismatch(tmp_path):
    images, labels = _quantized(3, (1, 28, 28), 10, 4)
    write_mnist(Dataset(images, labels, 10, "mnist"), tmp_path / "img", tmp_path / "lbl")
    write_mnist(Dataset(images[:2], labels[:2], 10, "mnist"), tmp_path / "img2", tmp_path / "lbl2")
    with pytest.raises(FormatError):
        load_mnist(tmp_path / "img", tmp_path / "lbl2")


def test_cifar_round_trip(tmp_path):
    images, labels = _quantized(4, (3, 32, 32), 10, 5)
    write_cifar10(Dataset(images, labels, 10, "cifar10"), tmp_path / "batch.bin")
    loaded = load_cifar10([tmp_path / "batch.bin"])
    assert loaded.input_shape == (3, 32, 32)
    assert_array_equal(loaded.images, images)
    assert_array_equal(loaded.labels, labels)


def test_cifar_bad_size(tmp_path):
    (tmp_path / "batch.bin").write_bytes(b"\x00" * 3000)
    with pytest.raises(FormatError):
        load_cifar10([tmp_path / "batch.bin"])


def test_cifar_bad_label(tmp_path):
    record = bytearray(3073)
    record[0] = 12
    (tmp_path / "batch.bin").write_bytes(bytes(record))
    with pytest.raises(FormatError):
        load_cifar10([tmp_path / "batch.bin"])


def test_load_dataset_uses_data_dir(tmp_path, monkeypatch):
    images, labels = _quantized(5, (1, 28, 28), 10, 6)
    write_mnist(Dataset(images, labels, 10, "mnist"),
                tmp_path / "t10k-images-idx3-ubyte", tmp_path / "t10k-labels-idx1-ubyte")
    monkeypatch.setenv("ADVMS_DATA_DIR", str(tmp_path))
    loaded = load_dataset("mnist", "test")
    assert len(loaded) == 5


def test_data_dir_defaults_to_project_data(tmp_path, monkeypatch):
    monkeypatch.delenv("ADVMS_DATA_DIR", raising=False)
    assert data_dir() == config.PROJECT_ROOT / "data"
    monkeypatch.setenv("ADVMS_DATA_DIR", str(tmp_path))
    assert data_dir() == tmp_path


def test_load_dataset_missing_file(tmp_path):
    with pytest.raises(OSError):
        load_dataset("mnist", "train", directory=tmp_path)


def test_load_dataset_unknown_id():
    with pytest.raises(ConfigError):
        load_dataset("imagenet")


def test_dataset_rejects_out_of_range_pixels():
    with pytest.raises(FormatError):
        Dataset(np.full((1, 1, 4, 4), 1.5, dtype=np.float32), np.zeros(1, dtype=np.int64),
                2, "synthetic")


def test_dataset_is_read_only(train_set):
    with pytest.raises(ValueError):
        train_set.images[0, 0, 0, 0] = 0.5


# ═══════════════════════════════════════════════════════════════
#  SYNTHÉTIQUE
# ═══════════════════════════════════════════════════════════════

def test_synthetic_shape_and_balance():
    dataset = make_synthetic(4, 10, 12, seed=0)
    assert dataset.images.shape == (40, 1, 12, 12)
    assert_array_equal(np.bincount(dataset.labels), [10] * 4)
    assert dataset.images.min() >= 0.0 and dataset.images.max() <= 1.0


def test_synthetic_is_deterministic():
    a, b = make_synthetic(3, 5, 8, seed=9), make_synthetic(3, 5, 8, seed=9)
    assert_array_equal(a.images, b.images)
    assert_array_equal(a.labels, b.labels)
    assert a.fingerprint() == b.fingerprint()


def test_synthetic_templates_are_distinct():
    templates = class_templates(4, 12)
    flat = templates.reshape(4, -1)
    for i in range(4):
        for j in range(i + 1, 4):
            assert not np.array_equal(flat[i], flat[j])


def test_synthetic_invalid_sizes():
    with pytest.raises(ArgumentError):
        make_synthetic(1, 5, 8, seed=0)
    with pytest.raises(ArgumentError):
        make_synthetic(3, 0, 8, seed=0)
    with pytest.raises(ArgumentError):
        make_synthetic(3, 5, 3, seed=0)


def test_synthetic_test_split_differs():
    train = load_dataset("synthetic", "train", num_classes=3, per_class=5, side=8, seed=0)
    test = load_dataset("synthetic", "test", num_classes=3, per_class=5, side=8, seed=0)
    assert train.fingerprint() != test.fingerprint()


# ═══════════════════════════════════════════════════════════════
#  ÉCHANTILLONNAGE
# ═══════════════════════════════════════════════════════════════

def test_subset_size_and_determinism(train_set):
    a, b = subset(train_set, 10, seed=4), subset(train_set, 10, seed=4)
    assert len(a) == 10
    assert_array_equal(a.labels, b.labels)


def test_subset_too_large(train_set):
    with pytest.raises(ArgumentError):
        subset(train_set, len(train_set) + 1, seed=0)


def test_subset_zero_is_empty(train_set):
    assert len(subset(train_set, 0, seed=0)) == 0


def test_train_test_split_is_disjoint():
    dataset = make_synthetic(3, 10, 8, seed=5)
    train, test = train_test_split(dataset, 20, 10, seed=1)
    rows = {img.tobytes() for img in train.images}
    assert not rows & {img.tobytes() for img in test.images}


def test_batches_partition_the_dataset(train_set):
    seen = []
    for xs, ys in batches(train_set, 16, seed=3):
        assert xs.shape[0] == ys.shape[0] <= 16
        seen.extend(ys.tolist())
    assert sorted(seen) == sorted(train_set.labels.tolist())


def test_batches_invalid_size(train_set):
    with pytest.raises(ArgumentError):
        next(batches(train_set, 0))
