"""
Entraînement - Standard et adversarial (maximisation interne par PGD)

Les deux entraîneurs partagent la même boucle : SGD avec momentum sur
l'entropie croisée, ordre des lots tiré du flux STREAM_SHUFFLE. L'entraînement
adversarial remplace chaque lot par sa version PGD (flux STREAM_ADVERSARIAL),
jamais consulté quand ε_train = 0.
"""
import logging
from dataclasses import asdict, dataclass
from typing import Callable, Optional

import numpy as np

from attacks.batch import audit_perturbation
from attacks.gradient.pgd_attack import sign_gradient_attack
from attacks.oracle import WhiteBoxOracle
from core.errors import ArgumentError, ConfigError
from core.utils import MASK64, sha256_bytes
from dataio.dataset import Dataset
from dataio.sampling import batch_order, iter_batches
from numeric.architecture import Architecture
from numeric.losses import ce_losses
from numeric.model import (STREAM_ADVERSARIAL, STREAM_SHUFFLE, Model, forward,
                           init_params, loss_and_param_gradients, make_rng)

logger = logging.getLogger(__name__)

EpochHook = Callable[[int, float], None]

INNER_STEP_FACTOR = 2.5
EVAL_CHUNK = 256


@dataclass
class TrainConfig:
    """Hyper-paramètres d'entraînement d'un sous-modèle"""
    epochs: int = 3
    batch_size: int = 64
    learning_rate: float = 0.01
    momentum: float = 0.9
    epsilon_train: float = 0.0
    inner_steps: int = 7
    inner_step_size: Optional[float] = None
    seed: int = 0

    def __post_init__(self):
        if self.inner_step_size is None:
            self.inner_step_size = min(self.epsilon_train,
                                       INNER_STEP_FACTOR * self.epsilon_train / self.inner_steps) \
                if self.inner_steps > 0 else 0.0
        if self.epochs < 0:
            raise ConfigError(f"Nombre d'époques invalide : {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"Taille de lot invalide : {self.batch_size}")
        if self.learning_rate <= 0:
            raise ConfigError(f"Taux d'apprentissage invalide : {self.learning_rate}")
        if not 0.0 <= self.momentum < 1.0:
            raise ConfigError(f"Momentum hors de [0, 1) : {self.momentum}")
        if not 0.0 <= self.epsilon_train <= 1.0:
            raise ConfigError(f"ε_train hors de [0, 1] : {self.epsilon_train}")
        if self.inner_steps < 1:
            raise ConfigError(f"Nombre d'itérations internes invalide : {self.inner_steps}")
        if self.epsilon_train > 0:
            if self.inner_step_size <= 0:
                raise ConfigError(f"Pas interne invalide : {self.inner_step_size}")
            if self.inner_step_size > self.epsilon_train + 1e-12:
                raise ConfigError(f"Pas interne {self.inner_step_size} supérieur à "
                                  f"ε_train = {self.epsilon_train}")
        if not 0 <= int(self.seed) <= MASK64:
            raise ConfigError(f"Graine hors de l'intervalle 64 bits : {self.seed}")

    def with_seed(self, seed: int) -> "TrainConfig":
        values = asdict(self)
        values["seed"] = int(seed)
        return TrainConfig(**values)

    def fingerprint(self) -> str:
        """Empreinte des hyper-paramètres hors graine (clé de cache)"""
        values = asdict(self)
        values.pop("seed")
        text = ";".join(f"{k}={values[k]!r}" for k in sorted(values))
        return sha256_bytes(text.encode())[:16]


# ═══════════════════════════════════════════════════════════════
#  MESURES
# ═══════════════════════════════════════════════════════════════

def evaluate_loss(model: Model, xs: np.ndarray, ys) -> float:
    """Entropie croisée moyenne d'un lot"""
    logits = forward(model, np.asarray(xs))
    losses, _ = ce_losses(np.atleast_2d(logits), np.asarray(ys, dtype=np.int64).reshape(-1))
    return float(np.mean(losses))


def predictions(model: Model, images: np.ndarray) -> np.ndarray:
    """Classes prédites par morceaux de EVAL_CHUNK exemples"""
    parts = [forward(model, images[i:i + EVAL_CHUNK]).argmax(axis=1)
             for i in range(0, images.shape[0], EVAL_CHUNK)]
    return np.concatenate(parts) if parts else np.zeros(0, dtype=np.int64)


def accuracy(model: Model, dataset: Dataset) -> float:
    """Fraction d'exemples correctement classés"""
    if len(dataset) == 0:
        raise ArgumentError("Jeu de données vide")
    return float(np.mean(predictions(model, dataset.images) == dataset.labels))


# ═══════════════════════════════════════════════════════════════
#  ENTRAÎNEMENT
# ═══════════════════════════════════════════════════════════════

def inner_maximize(model: Model, xs: np.ndarray, ys: np.ndarray, config: TrainConfig,
                   rng: np.random.Generator) -> np.ndarray:
    """Lot PGD (CE, départ aléatoire) contre les paramètres courants, budget ε_train"""
    oracle = WhiteBoxOracle(model, "ce")
    rngs = [rng] * xs.shape[0]
    return sign_gradient_attack(oracle, xs, ys, config.epsilon_train, config.inner_step_size,
                                config.inner_steps, True, rngs)


def _train(arch: Architecture, dataset: Dataset, config: TrainConfig,
           adversarial: bool, on_epoch: Optional[EpochHook]) -> Model:
    if len(dataset) == 0:
        raise ArgumentError("Jeu d'entraînement vide")
    if tuple(dataset.input_shape) != tuple(arch.input_shape):
        raise ArgumentError(f"Images {dataset.input_shape} incompatibles avec "
                            f"l'architecture {arch.input_shape}")

    model = init_params(arch, config.seed)
    model.train_epsilon = float(config.epsilon_train) if adversarial else 0.0
    shuffle_rng = make_rng(config.seed, STREAM_SHUFFLE)
    adversarial_rng = make_rng(config.seed, STREAM_ADVERSARIAL)
    velocities = [(np.zeros_like(w), np.zeros_like(b)) for w, b in model.params]
    lr = np.float32(config.learning_rate)
    mu = np.float32(config.momentum)
    inner = adversarial and config.epsilon_train > 0

    for epoch in range(1, config.epochs + 1):
        order = batch_order(len(dataset), shuffle_rng, True)
        losses, sizes = [], []
        for xs, ys in iter_batches(dataset, order, config.batch_size):
            if inner:
                x_adv = inner_maximize(model, xs, ys, config, adversarial_rng)
                audit = audit_perturbation(xs, x_adv, config.epsilon_train)
                if not audit.ok:
                    raise RuntimeError(f"Exemples d'entraînement hors contraintes "
                                       f"(‖δ‖∞ = {audit.max_linf:.6f})")
                xs = x_adv
            loss, grads = loss_and_param_gradients(model, xs, ys, "ce")
            for (w, b), (vw, vb), (gw, gb) in zip(model.params, velocities, grads):
                vw *= mu
                vw += gw.astype(vw.dtype, copy=False)
                vb *= mu
                vb += gb.astype(vb.dtype, copy=False)
                w -= lr * vw
                b -= lr * vb
            losses.append(loss)
            sizes.append(len(ys))
        mean_loss = float(np.average(losses, weights=sizes))
        logger.info("Époque %d/%d : perte moyenne %.4f", epoch, config.epochs, mean_loss)
        if on_epoch is not None:
            on_epoch(epoch, mean_loss)
    return model


def train_standard(arch: Architecture, dataset: Dataset, config: TrainConfig,
                   on_epoch: Optional[EpochHook] = None) -> Model:
    """
    Entraînement standard (SGD avec momentum sur l'entropie croisée)

    Raises:
        ConfigError: si config.epsilon_train ≠ 0
        ArgumentError: jeu vide
    """
    if config.epsilon_train != 0:
        raise ConfigError("L'entraînement standard exige ε_train = 0")
    return _train(arch, dataset, config, adversarial=False, on_epoch=on_epoch)


def train_adversarial(arch: Architecture, dataset: Dataset, config: TrainConfig,
                      on_epoch: Optional[EpochHook] = None) -> Model:
    """
    Entraînement adversarial : chaque lot est remplacé par sa version PGD
    (inner_steps itérations, budget ε_train, départ aléatoire) avant le pas de gradient

    Avec ε_train = 0, la maximisation interne est sautée : résultat identique
    bit à bit à train_standard.
    """
    return _train(arch, dataset, config, adversarial=True, on_epoch=on_epoch)
