"""
Attaques par lot - Pilote vectorisé, audit des contraintes et export binaire
"""
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Sequence, Union

import numpy as np

from attacks.config import AttackConfig
from attacks.gradient.pgd_attack import sign_gradient_attack
from attacks.oracle import GradientOracle
from core.errors import ArgumentError, FormatError
from numeric.model import make_rng

logger = logging.getLogger(__name__)

BATCH_MAGIC = b"ADVB"
BALL_TOLERANCE = 1e-6
CHUNK_SIZE = 128

# (itération, images propres du sous-lot, itérés du sous-lot)
AuditHook = Callable[[int, np.ndarray, np.ndarray], None]


def example_rngs(seed: int, example_ids: Sequence[int]):
    """Un générateur par exemple, indexé par son identifiant (pas par sa position)"""
    return [make_rng(seed, int(i)) for i in example_ids]


def attack_batch(oracle: GradientOracle, images: np.ndarray, labels: np.ndarray,
                 config: AttackConfig, example_ids: Optional[Sequence[int]] = None,
                 on_iterate: Optional[AuditHook] = None) -> np.ndarray:
    """
    Applique l'attaque configurée à chaque exemple d'un lot

    Args:
        oracle: Oracle de gradient (voir make_oracle)
        images: (N, C, H, W)
        labels: (N,)
        config: Configuration d'attaque
        example_ids: Identifiants logiques des exemples (défaut : 0..N-1)
        on_iterate: Appelé après chaque itération avec (t, images propres, itérés) du sous-lot

    Returns:
        Exemples adversariaux dans l'ordre d'entrée
    """
    images = np.asarray(images, dtype=np.float32)
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    if images.shape[0] == 0:
        raise ArgumentError("Lot vide")
    if example_ids is None:
        example_ids = np.arange(images.shape[0])
    example_ids = np.asarray(example_ids, dtype=np.int64)
    if example_ids.shape[0] != images.shape[0]:
        raise ArgumentError("Un identifiant par exemple est requis")

    outputs = np.empty_like(images)
    for start in range(0, images.shape[0], CHUNK_SIZE):
        stop = start + CHUNK_SIZE
        rngs = example_rngs(config.seed, example_ids[start:stop])
        clean = images[start:stop]
        hook = None
        if on_iterate is not None:
            def hook(t, z, clean=clean):
                on_iterate(t, clean, z)
        outputs[start:stop] = sign_gradient_attack(
            oracle, clean, labels[start:stop], config.epsilon,
            config.step_size, config.steps, config.random_start, rngs, hook)
        logger.debug("%s : %d/%d exemples attaqués", config.label,
                     min(stop, images.shape[0]), images.shape[0])
    return outputs


# ═══════════════════════════════════════════════════════════════
#  AUDIT DES CONTRAINTES
# ═══════════════════════════════════════════════════════════════

@dataclass
class AuditSummary:
    """Bilan des contraintes boule L∞ et boîte [0, 1]"""
    max_linf: float
    ball_violations: int
    box_violations: int
    count: int

    @property
    def ok(self) -> bool:
        return self.ball_violations == 0 and self.box_violations == 0


def audit_perturbation(x: np.ndarray, x_adv: np.ndarray, epsilon: float,
                       tolerance: float = BALL_TOLERANCE) -> AuditSummary:
    """Vérifie ‖x_adv − x‖∞ ≤ ε + tolérance et x_adv ∈ [0, 1] exemple par exemple"""
    x = np.asarray(x, dtype=np.float64)
    x_adv = np.asarray(x_adv, dtype=np.float64)
    if x.shape != x_adv.shape:
        raise ArgumentError(f"Formes différentes : {x.shape} et {x_adv.shape}")
    if x.ndim == 3:
        x, x_adv = x[None], x_adv[None]
    count = x.shape[0]
    if count == 0:
        return AuditSummary(0.0, 0, 0, 0)
    linf = np.abs(x_adv - x).reshape(count, -1).max(axis=1)
    flat = x_adv.reshape(count, -1)
    out_of_box = (flat.min(axis=1) < 0.0) | (flat.max(axis=1) > 1.0)
    return AuditSummary(float(linf.max()), int(np.sum(linf > epsilon + tolerance)),
                        int(np.sum(out_of_box)), count)


# ═══════════════════════════════════════════════════════════════
#  EXPORT BINAIRE
# ═══════════════════════════════════════════════════════════════

def dump_adversarial_batch(images: np.ndarray, path: Union[str, Path]) -> None:
    """Écrit "ADVB", le rang (u8), les dimensions (u32 LE) puis les données float32 LE"""
    images = np.ascontiguousarray(images, dtype="<f4")
    header = BATCH_MAGIC + bytes([images.ndim]) + np.array(images.shape, dtype="<u4").tobytes()
    Path(path).write_bytes(header + images.tobytes())


def load_adversarial_batch(path: Union[str, Path]) -> np.ndarray:
    raw = Path(path).read_bytes()
    if raw[:4] != BATCH_MAGIC:
        raise FormatError(f"{path} : nombre magique invalide")
    if len(raw) < 5:
        raise FormatError(f"{path} : fichier tronqué")
    rank = raw[4]
    dims_end = 5 + 4 * rank
    if len(raw) < dims_end:
        raise FormatError(f"{path} : fichier tronqué")
    shape = tuple(int(d) for d in np.frombuffer(raw[5:dims_end], dtype="<u4"))
    expected = dims_end + 4 * int(np.prod(shape, dtype=np.int64))
    if len(raw) != expected:
        raise FormatError(f"{path} : {len(raw)} octets, {expected} attendus")
    return np.frombuffer(raw[dims_end:], dtype="<f4").reshape(shape).astype(np.float32)


class IterationAuditor:
    """Hook on_iterate qui contrôle chaque itéré (pas seulement la sortie finale)"""

    def __init__(self, epsilon: float, tolerance: float = BALL_TOLERANCE):
        self.epsilon = epsilon
        self.tolerance = tolerance
        self.iterates = 0
        self.max_linf = 0.0
        self.ball_violations = 0
        self.box_violations = 0

    def __call__(self, t: int, clean: np.ndarray, iterate: np.ndarray) -> None:
        audit = audit_perturbation(clean, iterate, self.epsilon, self.tolerance)
        self.iterates += 1
        self.max_linf = max(self.max_linf, audit.max_linf)
        self.ball_violations += audit.ball_violations
        self.box_violations += audit.box_violations

    @property
    def ok(self) -> bool:
        return self.ball_violations == 0 and self.box_violations == 0
