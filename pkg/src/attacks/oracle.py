"""
Oracles de gradient - Ce que l'attaquant voit du système attaqué

- WhiteBoxOracle : un modèle unique, gradient exact
- SnapshotOracle : un sous-modèle du pool tiré par exemple avant l'attaque,
                   puis attaqué comme un modèle fixe
- EOTOracle      : moyenne des gradients sur n tirages de sous-modèles par pas
                   (ou sur tous les sous-modèles en mode exact)

Chaque oracle ouvre une session liée aux générateurs par exemple ; l'ordre de
consommation d'un générateur est : tirage du sous-modèle (snapshot), départ
aléatoire, puis tirages EOT à chaque pas.
"""
from typing import Callable, List, Sequence

import numpy as np

from attacks.config import AttackConfig
from core.errors import ArgumentError
from numeric.model import Model, input_gradients

GradientFn = Callable[[np.ndarray, np.ndarray], np.ndarray]


class GradientOracle:
    """Interface commune : session(rngs) renvoie une fonction (xs, ys) -> gradients"""

    def __init__(self, loss_kind: str = "ce", kappa: float = 0.0):
        self.loss_kind = loss_kind
        self.kappa = kappa

    @property
    def input_shape(self):
        raise NotImplementedError

    def session(self, rngs: Sequence[np.random.Generator]) -> GradientFn:
        raise NotImplementedError


class WhiteBoxOracle(GradientOracle):
    """Gradient exact d'un modèle unique"""

    def __init__(self, model: Model, loss_kind: str = "ce", kappa: float = 0.0):
        super().__init__(loss_kind, kappa)
        self.model = model

    @property
    def input_shape(self):
        return tuple(self.model.architecture.input_shape)

    def session(self, rngs: Sequence[np.random.Generator]) -> GradientFn:
        def gradients(xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
            return input_gradients(self.model, xs, ys, self.loss_kind, self.kappa)
        return gradients


def _pool_members(pool) -> List[Model]:
    models = list(pool.models)
    if not models:
        raise ArgumentError("Pool vide")
    return models


def _member_gradients(models: List[Model], xs: np.ndarray, ys: np.ndarray,
                      weights: np.ndarray, loss_kind: str, kappa: float) -> np.ndarray:
    """Σ_m poids[i, m] · ∇ₓ L_m(x_i) ; seuls les couples de poids non nuls sont calculés"""
    total = np.zeros(xs.shape, dtype=np.float64)
    for member, model in enumerate(models):
        rows = np.flatnonzero(weights[:, member])
        if rows.size == 0:
            continue
        grads = input_gradients(model, xs[rows], ys[rows], loss_kind, kappa)
        total[rows] += weights[rows, member].reshape(-1, 1, 1, 1) * grads
    return total.astype(xs.dtype, copy=False)


class SnapshotOracle(GradientOracle):
    """Attaque en boîte blanche d'un instantané : un sous-modèle tiré par exemple"""

    def __init__(self, pool, loss_kind: str = "ce", kappa: float = 0.0):
        super().__init__(loss_kind, kappa)
        self.pool = pool
        self.models = _pool_members(pool)

    @property
    def input_shape(self):
        return tuple(self.models[0].architecture.input_shape)

    def session(self, rngs: Sequence[np.random.Generator]) -> GradientFn:
        chosen = np.array([self.pool.activate(rng) for rng in rngs], dtype=np.int64)
        weights = np.zeros((len(rngs), len(self.models)))
        weights[np.arange(len(rngs)), chosen] = 1.0

        def gradients(xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
            return _member_gradients(self.models, xs, ys, weights, self.loss_kind, self.kappa)
        gradients.members = chosen
        return gradients


class EOTOracle(GradientOracle):
    """
    Espérance des gradients sur les tirages de sous-modèles

    Args:
        pool: Pool de sous-modèles
        samples: n tirages uniformes avec remise par exemple et par pas
        exact: Moyenne sur les M sous-modèles (aucun tirage)
    """

    def __init__(self, pool, samples: int = 10, exact: bool = False,
                 loss_kind: str = "ce", kappa: float = 0.0):
        super().__init__(loss_kind, kappa)
        if samples < 1:
            raise ArgumentError(f"Nombre de tirages EOT invalide : {samples}")
        self.pool = pool
        self.models = _pool_members(pool)
        self.samples = samples
        self.exact = exact

    @property
    def input_shape(self):
        return tuple(self.models[0].architecture.input_shape)

    def draw_weights(self, rngs: Sequence[np.random.Generator]) -> np.ndarray:
        """Poids (N, M) : part de chaque sous-modèle dans les n tirages de chaque exemple"""
        m = len(self.models)
        if self.exact:
            return np.full((len(rngs), m), 1.0 / m)
        counts = np.stack([np.bincount(rng.integers(m, size=self.samples), minlength=m)
                           for rng in rngs])
        return counts / self.samples

    def session(self, rngs: Sequence[np.random.Generator]) -> GradientFn:
        def gradients(xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
            weights = self.draw_weights(rngs)
            return _member_gradients(self.models, xs, ys, weights, self.loss_kind, self.kappa)
        return gradients


def make_oracle(target, config: AttackConfig) -> GradientOracle:
    """
    Choisit l'oracle adapté à la cible et à la configuration

    Model ou pool de taille 1 sans EOT → boîte blanche ; pool sans EOT → instantané ;
    pool avec EOT → EOTOracle
    """
    if isinstance(target, Model):
        if config.uses_eot:
            raise ArgumentError("EOT exige un pool de sous-modèles")
        return WhiteBoxOracle(target, config.loss_kind, config.kappa)
    if config.uses_eot:
        return EOTOracle(target, config.eot_samples, config.eot_mode == "exact",
                         config.loss_kind, config.kappa)
    if len(target.models) == 1:
        return WhiteBoxOracle(target.models[0], config.loss_kind, config.kappa)
    return SnapshotOracle(target, config.loss_kind, config.kappa)
