"""
Données synthétiques - Motifs de blocs par classe, bruités

Chaque classe allume un bloc distinct d'une grille g×g (g = ⌈√C⌉) ;
le reste de l'image sert de fond. Un bruit uniforme d'amplitude 0.1 est ajouté.
"""
import math

import numpy as np

from core.errors import ArgumentError
from dataio.dataset import Dataset
from numeric.model import make_rng

FOREGROUND = 0.9
BACKGROUND = 0.1
NOISE_AMPLITUDE = 0.1


def class_templates(num_classes: int, side: int, channels: int = 1) -> np.ndarray:
    """Gabarits (C, channels, side, side) sans bruit"""
    grid = math.ceil(math.sqrt(num_classes))
    if side < grid:
        raise ArgumentError(f"Côté {side} trop petit pour {num_classes} classes (grille {grid}x{grid})")
    block = side // grid
    templates = np.full((num_classes, channels, side, side), BACKGROUND, dtype=np.float32)
    for c in range(num_classes):
        row, col = divmod(c, grid)
        templates[c, :, row * block:(row + 1) * block, col * block:(col + 1) * block] = FOREGROUND
    return templates


def make_synthetic(num_classes: int, per_class: int, side: int, seed: int,
                   channels: int = 1) -> Dataset:
    """
    Génère un jeu synthétique séparable

    Args:
        num_classes: Nombre de classes (≥ 2)
        per_class: Exemples par classe (≥ 1)
        side: Côté des images (≥ 4)
        seed: Graine
        channels: Nombre de canaux

    Returns:
        Dataset mélangé, N = num_classes × per_class

    Raises:
        ArgumentError: tailles invalides
    """
    if num_classes < 2:
        raise ArgumentError(f"Au moins 2 classes requises (reçu {num_classes})")
    if per_class < 1:
        raise ArgumentError(f"Au moins 1 exemple par classe requis (reçu {per_class})")
    if side < 4:
        raise ArgumentError(f"Côté minimal 4 (reçu {side})")
    if channels < 1:
        raise ArgumentError(f"Nombre de canaux invalide : {channels}")

    templates = class_templates(num_classes, side, channels)
    rng = make_rng(seed)
    labels = np.repeat(np.arange(num_classes, dtype=np.int64), per_class)
    noise = rng.uniform(-NOISE_AMPLITUDE, NOISE_AMPLITUDE,
                        size=(labels.size, channels, side, side))
    images = np.clip(templates[labels] + noise, 0.0, 1.0).astype(np.float32)

    order = rng.permutation(labels.size)
    return Dataset(images[order], labels[order], num_classes, "synthetic")
