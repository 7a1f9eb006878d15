"""
Échantillonnage - Sous-ensembles et mini-lots déterministes
"""
from typing import Iterator, Tuple

import numpy as np

from core.errors import ArgumentError
from dataio.dataset import Dataset
from numeric.model import make_rng

Batch = Tuple[np.ndarray, np.ndarray]


def subset(dataset: Dataset, n: int, seed: int) -> Dataset:
    """Tire n exemples sans remise (ordre tiré, reproductible)"""
    if n < 0 or n > len(dataset):
        raise ArgumentError(f"Sous-ensemble de {n} exemples demandé sur {len(dataset)}")
    indices = make_rng(seed).permutation(len(dataset))[:n]
    return dataset.take(indices)


def train_test_split(dataset: Dataset, n_train: int, n_test: int,
                     seed: int) -> Tuple[Dataset, Dataset]:
    """Deux sous-ensembles disjoints tirés d'une même permutation"""
    if n_train < 0 or n_test < 0 or n_train + n_test > len(dataset):
        raise ArgumentError(f"Découpage {n_train}+{n_test} impossible sur {len(dataset)} exemples")
    order = make_rng(seed).permutation(len(dataset))
    return dataset.take(order[:n_train]), dataset.take(order[n_train:n_train + n_test])


def batch_order(size: int, rng: np.random.Generator, shuffle: bool) -> np.ndarray:
    return rng.permutation(size) if shuffle else np.arange(size)


def batches(dataset: Dataset, batch_size: int, seed: int = 0,
            shuffle: bool = True) -> Iterator[Batch]:
    """
    Partition du jeu (mélangé si demandé) en mini-lots ; le dernier peut être plus court

    Yields:
        (images (B, C, H, W), étiquettes (B,))
    """
    if batch_size < 1:
        raise ArgumentError(f"Taille de lot invalide : {batch_size}")
    order = batch_order(len(dataset), make_rng(seed), shuffle)
    yield from iter_batches(dataset, order, batch_size)


def iter_batches(dataset: Dataset, order: np.ndarray, batch_size: int) -> Iterator[Batch]:
    for start in range(0, order.size, batch_size):
        idx = order[start:start + batch_size]
        yield dataset.images[idx], dataset.labels[idx]
