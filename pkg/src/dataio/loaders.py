"""
Loaders - Formats IDX (MNIST) et binaire CIFAR-10
"""
import gzip
import logging
from pathlib import Path
from typing import Iterable, Union

import numpy as np

from config import data_dir
from core.errors import ConfigError, FormatError
from core.utils import mix64
from dataio.dataset import Dataset
from dataio.synthetic import make_synthetic

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

MNIST_IMAGES_MAGIC = 2051
MNIST_LABELS_MAGIC = 2049
CIFAR_RECORD = 1 + 3 * 32 * 32
CIFAR_CLASSES = 10

# Noms de fichiers standard, relatifs au dossier de données
MNIST_FILES = {
    "train": ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
    "test": ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
}
CIFAR_FILES = {
    "train": [f"cifar-10-batches-bin/data_batch_{i}.bin" for i in range(1, 6)],
    "test": ["cifar-10-batches-bin/test_batch.bin"],
}


def _read_bytes(path: PathLike) -> bytes:
    """Lit un fichier, décompressé à la volée s'il porte l'extension .gz"""
    path = Path(path)
    if path.suffix == ".gz":
        with gzip.open(path, "rb") as f:
            return f.read()
    return path.read_bytes()


def _idx_header(payload: bytes, expected_magic: int, dims: int, what: str):
    header_size = 4 * (1 + dims)
    if len(payload) < header_size:
        raise FormatError(f"{what} : fichier tronqué (en-tête IDX incomplet)")
    header = np.frombuffer(payload[:header_size], dtype=">u4")
    if int(header[0]) != expected_magic:
        raise FormatError(f"{what} : nombre magique {int(header[0])}, {expected_magic} attendu")
    return [int(v) for v in header[1:]], header_size


def load_mnist(images_path: PathLike, labels_path: PathLike) -> Dataset:
    """
    Charge une paire de fichiers IDX MNIST

    Args:
        images_path: Fichier d'images (magic 2051)
        labels_path: Fichier d'étiquettes (magic 2049)

    Returns:
        Dataset de forme (N, 1, 28, 28), pixels / 255

    Raises:
        FormatError: nombre magique erroné, tailles incohérentes, troncature
    """
    images_raw = _read_bytes(images_path)
    labels_raw = _read_bytes(labels_path)

    (count, rows, cols), offset = _idx_header(images_raw, MNIST_IMAGES_MAGIC, 3, "Images MNIST")
    (label_count,), label_offset = _idx_header(labels_raw, MNIST_LABELS_MAGIC, 1, "Étiquettes MNIST")
    if count != label_count:
        raise FormatError(f"MNIST : {count} images pour {label_count} étiquettes")
    if len(images_raw) - offset != count * rows * cols:
        raise FormatError("Images MNIST : taille des données incohérente avec l'en-tête")
    if len(labels_raw) - label_offset != count:
        raise FormatError("Étiquettes MNIST : taille des données incohérente avec l'en-tête")

    pixels = np.frombuffer(images_raw, dtype=np.uint8, offset=offset)
    labels = np.frombuffer(labels_raw, dtype=np.uint8, offset=label_offset).astype(np.int64)
    if labels.size and labels.max() > 9:
        raise FormatError(f"Étiquette MNIST invalide : {labels.max()}")
    images = (pixels.reshape(count, 1, rows, cols).astype(np.float32) / np.float32(255.0))
    logger.info("MNIST chargé : %d images %dx%d", count, rows, cols)
    return Dataset(images, labels, 10, "mnist")


def load_cifar10(batch_paths: Iterable[PathLike]) -> Dataset:
    """
    Charge un ou plusieurs fichiers binaires CIFAR-10 (1 octet d'étiquette + 3072 pixels)

    Returns:
        Dataset de forme (N, 3, 32, 32), canaux R, G, B, pixels / 255
    """
    images, labels = [], []
    for path in batch_paths:
        raw = _read_bytes(path)
        if len(raw) % CIFAR_RECORD != 0:
            raise FormatError(f"{path} : taille {len(raw)} non divisible par {CIFAR_RECORD}")
        records = np.frombuffer(raw, dtype=np.uint8).reshape(-1, CIFAR_RECORD)
        batch_labels = records[:, 0].astype(np.int64)
        if batch_labels.size and batch_labels.max() >= CIFAR_CLASSES:
            raise FormatError(f"{path} : étiquette invalide {batch_labels.max()}")
        images.append(records[:, 1:].reshape(-1, 3, 32, 32))
        labels.append(batch_labels)
    if not images:
        raise FormatError("CIFAR-10 : aucun fichier fourni")
    pixels = np.concatenate(images).astype(np.float32) / np.float32(255.0)
    dataset = Dataset(pixels, np.concatenate(labels), CIFAR_CLASSES, "cifar10")
    logger.info("CIFAR-10 chargé : %d images", len(dataset))
    return dataset


def _quantize(images: np.ndarray) -> np.ndarray:
    return np.clip(np.rint(np.asarray(images, dtype=np.float64) * 255.0), 0, 255).astype(np.uint8)


def write_cifar10(dataset: Dataset, path: PathLike) -> None:
    """Écrit un Dataset (N, 3, 32, 32) au format binaire CIFAR-10"""
    if dataset.input_shape != (3, 32, 32):
        raise FormatError(f"CIFAR-10 exige des images (3, 32, 32), reçu {dataset.input_shape}")
    if dataset.labels.size and dataset.labels.max() >= CIFAR_CLASSES:
        raise FormatError("CIFAR-10 : étiquette supérieure à 9")
    records = np.empty((len(dataset), CIFAR_RECORD), dtype=np.uint8)
    records[:, 0] = dataset.labels.astype(np.uint8)
    records[:, 1:] = _quantize(dataset.images).reshape(len(dataset), -1)
    Path(path).write_bytes(records.tobytes())


def write_mnist(dataset: Dataset, images_path: PathLike, labels_path: PathLike) -> None:
    """Écrit un Dataset (N, 1, H, W) au format IDX"""
    n, c, rows, cols = dataset.images.shape
    if c != 1:
        raise FormatError("IDX MNIST : un seul canal attendu")
    header = np.array([MNIST_IMAGES_MAGIC, n, rows, cols], dtype=">u4").tobytes()
    Path(images_path).write_bytes(header + _quantize(dataset.images).tobytes())
    label_header = np.array([MNIST_LABELS_MAGIC, n], dtype=">u4").tobytes()
    Path(labels_path).write_bytes(label_header + dataset.labels.astype(np.uint8).tobytes())


def resolve_data_path(name: PathLike, directory: Path) -> Path:
    """Chemin absolu tel quel ; sinon relatif au dossier de données (variante .gz acceptée)"""
    path = Path(name)
    if not path.is_absolute():
        path = directory / path
    if not path.exists():
        gz = path.with_name(path.name + ".gz")
        if gz.exists():
            return gz
    return path


def load_dataset(dataset_id: str, split: str = "train", directory: PathLike = None,
                 images_path: PathLike = None, labels_path: PathLike = None,
                 batch_paths: Iterable[PathLike] = None, num_classes: int = 4,
                 per_class: int = 50, side: int = 12, seed: int = 0) -> Dataset:
    """
    Charge le jeu demandé pour une partition train/test

    Les chemins non fournis prennent les noms standard sous le dossier de données.
    Pour synthetic, la partition test utilise une graine dérivée de seed.
    """
    if split not in ("train", "test"):
        raise ConfigError(f"Partition inconnue : {split!r} (train, test)")
    if dataset_id == "synthetic":
        split_seed = seed if split == "train" else mix64(seed)
        return make_synthetic(num_classes, per_class, side, split_seed)

    directory = Path(directory) if directory else data_dir()
    if dataset_id == "mnist":
        default_images, default_labels = MNIST_FILES[split]
        return load_mnist(resolve_data_path(images_path or default_images, directory),
                          resolve_data_path(labels_path or default_labels, directory))
    if dataset_id == "cifar10":
        paths = list(batch_paths) if batch_paths else CIFAR_FILES[split]
        return load_cifar10([resolve_data_path(p, directory) for p in paths])
    raise ConfigError(f"Jeu de données non supporté : {dataset_id!r} (mnist, cifar10, synthetic)")
