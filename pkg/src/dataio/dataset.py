"""
Dataset - Images (N, C, H, W) dans [0, 1] et étiquettes
"""
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from core.errors import ArgumentError, ConfigError, FormatError
from core.utils import sha256_bytes

SOURCE_IDS = ("mnist", "cifar10", "synthetic")


@dataclass(frozen=True)
class Dataset:
    """Jeu de données immuable après chargement"""
    images: np.ndarray
    labels: np.ndarray
    num_classes: int
    source_id: str

    def __post_init__(self):
        if self.source_id not in SOURCE_IDS:
            raise ConfigError(f"Source inconnue : {self.source_id}")
        if self.num_classes < 1:
            raise ArgumentError(f"Nombre de classes invalide : {self.num_classes}")
        if self.images.ndim != 4:
            raise FormatError(f"Images (N, C, H, W) attendues, reçu {self.images.shape}")
        if self.images.shape[0] != self.labels.shape[0]:
            raise FormatError(f"{self.images.shape[0]} images pour {self.labels.shape[0]} étiquettes")
        if self.images.size and (self.images.min() < 0.0 or self.images.max() > 1.0):
            raise FormatError("Valeurs de pixels hors de [0, 1]")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.num_classes):
            raise FormatError(f"Étiquette hors de [0, {self.num_classes})")
        self.images.setflags(write=False)
        self.labels.setflags(write=False)

    def __len__(self) -> int:
        return int(self.images.shape[0])

    @property
    def input_shape(self):
        return tuple(self.images.shape[1:])

    def take(self, indices: Sequence[int]) -> "Dataset":
        """Sous-ensemble dans l'ordre des indices fournis"""
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(self.images[idx].copy(), self.labels[idx].copy(),
                       self.num_classes, self.source_id)

    def fingerprint(self) -> str:
        """Empreinte sha256 du contenu (clé de cache des checkpoints)"""
        return self._digest

    @cached_property
    def _digest(self) -> str:
        # calculée une fois : images et étiquettes sont en lecture seule
        header = f"{self.source_id}:{self.num_classes}:{self.images.shape}".encode()
        return sha256_bytes(header
                            + np.ascontiguousarray(self.images, dtype=np.float32).tobytes()
                            + np.ascontiguousarray(self.labels, dtype=np.int64).tobytes())
