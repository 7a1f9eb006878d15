"""
Commutation de modèles - Pool de M sous-modèles, un seul activé par inférence

Les sous-modèles partagent l'architecture et ε_train ; seule la graine
d'initialisation change (dérivée de la graine maître par mélange 64 bits).
"""
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy.stats import chisquare

from core.errors import ArgumentError, ConfigError
from core.utils import MASK64, mix64
from dataio.dataset import Dataset
from numeric.architecture import Architecture, parameter_count
from numeric.model import Model, forward
from training.trainer import TrainConfig, train_adversarial

logger = logging.getLogger(__name__)

BYTES_PER_PARAM = 4

MemberHook = Callable[[int, Model, bool], None]


def member_seed(master_seed: int, index: int) -> int:
    """Graine du sous-modèle d'indice (0-based) index : mix64(mix64(maître) ⊕ (index + 1))"""
    if index < 0:
        raise ArgumentError(f"Indice de sous-modèle négatif : {index}")
    return mix64(mix64(int(master_seed) & MASK64) ^ (index + 1))


@dataclass
class SwitchingPool:
    """Pool AdvMS : sous-modèles homogènes et graine maître"""
    models: List[Model]
    epsilon_train: float
    master_seed: int

    def __post_init__(self):
        if not self.models:
            raise ArgumentError("Un pool contient au moins un sous-modèle")
        key = self.models[0].architecture.key()
        for index, model in enumerate(self.models):
            if model.architecture.key() != key:
                raise ConfigError(f"Sous-modèle {index} : architecture différente")
            if model.train_epsilon != self.epsilon_train:
                raise ConfigError(f"Sous-modèle {index} : ε_train = {model.train_epsilon}, "
                                  f"{self.epsilon_train} attendu")
        seeds = [model.init_seed for model in self.models]
        if len(set(seeds)) != len(seeds):
            raise ConfigError("Graines d'initialisation non distinctes dans le pool")

    @property
    def M(self) -> int:
        return len(self.models)

    @property
    def architecture(self) -> Architecture:
        return self.models[0].architecture

    def activate(self, rng: np.random.Generator) -> int:
        return activate(self, rng)

    def __len__(self) -> int:
        return self.M


# ═══════════════════════════════════════════════════════════════
#  CONSTRUCTION
# ═══════════════════════════════════════════════════════════════

def _train_member(arch: Architecture, dataset: Dataset, config: TrainConfig) -> Model:
    return train_adversarial(arch, dataset, config)


def build_pool(arch: Architecture, dataset: Dataset, M: int, train_config: TrainConfig,
               master_seed: int, workers: int = 1, cache=None,
               on_member: Optional[MemberHook] = None) -> SwitchingPool:
    """
    Entraîne M sous-modèles indépendants avec les mêmes réglages

    Args:
        arch: Architecture commune
        dataset: Jeu d'entraînement
        M: Taille du pool (≥ 1)
        train_config: Réglages communs (la graine est remplacée par member_seed)
        master_seed: Graine maître
        workers: Processus d'entraînement en parallèle (1 = séquentiel)
        cache: Cache de checkpoints (lookup/store), optionnel
        on_member: Appelé avec (indice, modèle, trouvé en cache) dans l'ordre des indices

    Raises:
        ArgumentError: M < 1
    """
    if M < 1:
        raise ArgumentError(f"Le pool exige M ≥ 1 (reçu {M})")
    configs = [train_config.with_seed(member_seed(master_seed, i)) for i in range(M)]

    models: List[Optional[Model]] = [None] * M
    cached = [False] * M
    if cache is not None:
        for i, config in enumerate(configs):
            models[i] = cache.lookup(arch, dataset, config)
            cached[i] = models[i] is not None

    missing = [i for i in range(M) if models[i] is None]
    if missing:
        logger.info("Entraînement de %d sous-modèle(s) (ε_train = %.4f, %d processus)",
                    len(missing), train_config.epsilon_train, min(workers, len(missing)))
    if workers > 1 and len(missing) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(missing))) as executor:
            futures = {i: executor.submit(_train_member, arch, dataset, configs[i])
                       for i in missing}
            for i in missing:
                models[i] = futures[i].result()
    else:
        for i in missing:
            models[i] = _train_member(arch, dataset, configs[i])

    for i in range(M):
        if cache is not None and not cached[i]:
            cache.store(arch, dataset, configs[i], models[i])
        if on_member is not None:
            on_member(i, models[i], cached[i])
    return SwitchingPool(models, float(train_config.epsilon_train), int(master_seed))


# ═══════════════════════════════════════════════════════════════
#  INFÉRENCE
# ═══════════════════════════════════════════════════════════════

def activate(pool: SwitchingPool, rng: np.random.Generator) -> int:
    """Indice (0-based) du sous-modèle activé, uniforme ; un tirage du générateur"""
    return int(rng.integers(pool.M))


def predict(pool: SwitchingPool, x: np.ndarray, rng: np.random.Generator) -> int:
    """Classe prédite par un sous-modèle activé au hasard (plus petit indice en cas d'égalité)"""
    model = pool.models[activate(pool, rng)]
    return int(np.argmax(forward(model, x)))


def pool_memory_bytes(pool: SwitchingPool) -> int:
    """M × nombre de paramètres d'un sous-modèle × 4 octets"""
    return pool.M * parameter_count(pool.architecture) * BYTES_PER_PARAM


def activation_uniformity(pool: SwitchingPool, rng: np.random.Generator,
                          draws: int = 10_000) -> Tuple[np.ndarray, float]:
    """
    Fréquences d'activation empiriques et p-valeur du test du χ² d'uniformité

    Returns:
        Tuple (fréquences (M,), p-valeur) ; p-valeur 1.0 si M = 1
    """
    if draws < 1:
        raise ArgumentError(f"Nombre de tirages invalide : {draws}")
    counts = np.bincount([activate(pool, rng) for _ in range(draws)], minlength=pool.M)
    frequencies = counts / draws
    if pool.M == 1:
        return frequencies, 1.0
    return frequencies, float(chisquare(counts).pvalue)
