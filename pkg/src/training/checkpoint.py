"""
Checkpoints - Sauvegarde binaire exacte d'un sous-modèle

Format : b"ADVMS\\x01", identifiant d'architecture (u8), ε_train (f64 LE),
graine d'initialisation (u64 LE), puis pour chaque couche paramétrée les poids
puis les biais, chacun en (rang u8, dimensions u32 LE, données f32 LE).
"""
import logging
import struct
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np

from core.errors import ArgumentError, FormatError
from numeric.architecture import ARCH_NAMES, Architecture, build_architecture
from numeric.model import Model

logger = logging.getLogger(__name__)

MAGIC = b"ADVMS\x01"


def _encode_tensor(array: np.ndarray) -> bytes:
    data = np.ascontiguousarray(array, dtype="<f4")
    return (bytes([data.ndim]) + np.array(data.shape, dtype="<u4").tobytes() + data.tobytes())


def model_to_bytes(model: Model) -> bytes:
    header = MAGIC + struct.pack("<Bd", model.architecture.arch_id, float(model.train_epsilon))
    header += struct.pack("<Q", int(model.init_seed))
    body = b"".join(_encode_tensor(w) + _encode_tensor(b) for w, b in model.params)
    return header + body


def save_model(model: Model, path: Union[str, Path]) -> None:
    """Écrit le checkpoint ; l'aller-retour est exact au bit près"""
    Path(path).write_bytes(model_to_bytes(model))
    logger.debug("Checkpoint écrit : %s", path)


class _Reader:
    def __init__(self, payload: bytes, source: str):
        self.payload = payload
        self.offset = 0
        self.source = source

    def take(self, size: int) -> bytes:
        if self.offset + size > len(self.payload):
            raise FormatError(f"{self.source} : checkpoint tronqué")
        chunk = self.payload[self.offset:self.offset + size]
        self.offset += size
        return chunk

    def tensor(self) -> np.ndarray:
        rank = self.take(1)[0]
        shape = tuple(int(d) for d in np.frombuffer(self.take(4 * rank), dtype="<u4"))
        count = int(np.prod(shape, dtype=np.int64))
        return np.frombuffer(self.take(4 * count), dtype="<f4").reshape(shape).astype(np.float32)

    @property
    def exhausted(self) -> bool:
        return self.offset == len(self.payload)


def model_from_bytes(payload: bytes, architecture: Optional[Architecture] = None,
                     source: str = "<mémoire>") -> Model:
    reader = _Reader(payload, source)
    if reader.take(len(MAGIC)) != MAGIC:
        raise FormatError(f"{source} : nombre magique ou version invalide")
    arch_id, train_epsilon = struct.unpack("<Bd", reader.take(9))
    (init_seed,) = struct.unpack("<Q", reader.take(8))
    if arch_id not in ARCH_NAMES:
        raise FormatError(f"{source} : identifiant d'architecture inconnu ({arch_id})")

    tensors = []
    while not reader.exhausted:
        tensors.append(reader.tensor())
    if len(tensors) % 2:
        raise FormatError(f"{source} : nombre de tenseurs impair")

    if architecture is None:
        name = ARCH_NAMES[arch_id]
        if name not in ("mnist", "cifar10"):
            # la taille d'entrée n'est pas dans l'en-tête
            raise ArgumentError(f"{source} : architecture {name}, à fournir au chargement")
        architecture = build_architecture(name)
    elif architecture.arch_id != arch_id:
        raise FormatError(f"{source} : architecture {ARCH_NAMES[arch_id]} "
                          f"au lieu de {architecture.name}")

    expected = architecture.param_shapes()
    if len(tensors) != 2 * len(expected):
        raise FormatError(f"{source} : {len(tensors) // 2} couches, {len(expected)} attendues")
    params: List[Tuple[np.ndarray, np.ndarray]] = []
    for i, (w_shape, b_shape) in enumerate(expected):
        weight, bias = tensors[2 * i], tensors[2 * i + 1]
        if weight.shape != w_shape or bias.shape != b_shape:
            raise FormatError(f"{source} : couche {i} de forme {weight.shape}/{bias.shape}, "
                              f"attendu {w_shape}/{b_shape}")
        params.append((weight, bias))
    return Model(architecture, params, int(init_seed), float(train_epsilon))


def load_model(path: Union[str, Path], architecture: Optional[Architecture] = None) -> Model:
    """
    Relit un checkpoint

    Args:
        path: Fichier
        architecture: Architecture attendue (obligatoire hors mnist et cifar10)

    Raises:
        ArgumentError: architecture synthétique ou personnalisée non fournie
        FormatError: nombre magique, version, troncature ou formes incohérentes
    """
    return model_from_bytes(Path(path).read_bytes(), architecture, str(path))
