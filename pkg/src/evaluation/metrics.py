"""
Métriques - Précision propre et taux de succès d'attaque (ASR) d'un pool

Exemples éligibles : ceux que tous les sous-modèles classent correctement.
Score d'un exemple : fraction des sous-modèles qui se trompent sur x_adv
(espérance exacte sur l'activation uniforme). ASR : moyenne des scores.
"""
import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from attacks.batch import AuditSummary, attack_batch, audit_perturbation
from attacks.config import AttackConfig
from attacks.oracle import make_oracle
from core.errors import ArgumentError, ConfigError
from dataio.dataset import Dataset
from dataio.sampling import subset
from defense.switching import SwitchingPool
from training.trainer import predictions

logger = logging.getLogger(__name__)

ELIGIBILITY_RULES = ("all_members_correct",)
SUCCESS_METRICS = ("expected_over_members",)


@dataclass
class EvalProtocol:
    """Protocole d'évaluation : éligibilité, métrique, nombre d'exemples de test"""
    eligibility: str = "all_members_correct"
    success_metric: str = "expected_over_members"
    test_count: int = 500
    seed: int = 0

    def __post_init__(self):
        if self.eligibility not in ELIGIBILITY_RULES:
            raise ConfigError(f"Règle d'éligibilité inconnue : {self.eligibility!r}")
        if self.success_metric not in SUCCESS_METRICS:
            raise ConfigError(f"Métrique de succès inconnue : {self.success_metric!r}")
        if self.test_count < 1:
            raise ConfigError(f"Nombre d'exemples de test invalide : {self.test_count}")


@dataclass
class AsrResult:
    """ASR et relevé par exemple ; asr vaut None quand aucun exemple n'est éligible"""
    asr: Optional[float]
    eligible: np.ndarray          # indices des exemples éligibles
    scores: np.ndarray            # score de succès par exemple éligible
    adversarial: np.ndarray       # x_adv des exemples éligibles
    audit: AuditSummary

    @property
    def defined(self) -> bool:
        return self.asr is not None


def protocol_slice(dataset: Dataset, protocol: EvalProtocol) -> Dataset:
    """Sous-ensemble de test_count exemples tiré avec la graine du protocole"""
    if len(dataset) == 0:
        raise ArgumentError("Jeu de test vide")
    if len(dataset) > protocol.test_count:
        return subset(dataset, protocol.test_count, protocol.seed)
    return dataset


def member_predictions(pool: SwitchingPool, images: np.ndarray) -> np.ndarray:
    """Prédictions (M, N) de chaque sous-modèle"""
    return np.stack([predictions(model, images) for model in pool.models])


def member_accuracies(pool: SwitchingPool, dataset: Dataset) -> List[float]:
    """Précision de chaque sous-modèle"""
    if len(dataset) == 0:
        raise ArgumentError("Jeu de données vide")
    correct = member_predictions(pool, dataset.images) == dataset.labels[None, :]
    return [float(v) for v in correct.mean(axis=1)]


def eval_clean(pool: SwitchingPool, dataset: Dataset) -> float:
    """Précision attendue sous activation uniforme : moyenne exacte des précisions"""
    accuracies = member_accuracies(pool, dataset)
    return float(sum(accuracies) / len(accuracies))


def eligible_indices(pool: SwitchingPool, dataset: Dataset) -> np.ndarray:
    correct = member_predictions(pool, dataset.images) == dataset.labels[None, :]
    return np.flatnonzero(correct.all(axis=0))


def success_scores(pool: SwitchingPool, x_adv: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Fraction des sous-modèles qui se trompent sur chaque x_adv"""
    wrong = member_predictions(pool, x_adv) != np.asarray(labels)[None, :]
    return wrong.mean(axis=0)


def eval_asr(pool: SwitchingPool, attack_config: AttackConfig, dataset: Dataset,
             protocol: Optional[EvalProtocol] = None, on_iterate=None) -> AsrResult:
    """
    Taux de succès de l'attaque configurée contre le pool

    Args:
        pool: Pool attaqué (instantané ou EOT selon attack_config)
        attack_config: Attaque
        dataset: Jeu de test (réduit à test_count exemples, voir protocol_slice)
        protocol: Protocole d'évaluation

    Returns:
        AsrResult (asr None si aucun exemple éligible)
    """
    dataset = protocol_slice(dataset, protocol or EvalProtocol())

    eligible = eligible_indices(pool, dataset)
    if eligible.size == 0:
        logger.warning("Aucun exemple éligible : ASR indéfini pour %s", attack_config.label)
        empty = np.zeros((0,) + dataset.input_shape, dtype=np.float32)
        return AsrResult(None, eligible, np.zeros(0), empty, AuditSummary(0.0, 0, 0, 0))

    images = dataset.images[eligible]
    labels = dataset.labels[eligible]
    oracle = make_oracle(pool, attack_config)
    x_adv = attack_batch(oracle, images, labels, attack_config, example_ids=eligible,
                         on_iterate=on_iterate)
    audit = audit_perturbation(images, x_adv, attack_config.epsilon)
    scores = success_scores(pool, x_adv, labels)
    asr = float(np.mean(scores))
    logger.info("%s ε=%.4f : ASR %.4f sur %d exemples éligibles", attack_config.label,
                attack_config.epsilon, asr, eligible.size)
    return AsrResult(asr, eligible, scores, x_adv, audit)


def monte_carlo_asr(pool: SwitchingPool, x_adv: np.ndarray, labels: np.ndarray,
                    draws: int, rng: np.random.Generator) -> Tuple[float, float]:
    """
    Fréquence de succès avec une activation tirée par inférence

    Returns:
        Tuple (fréquence, erreur standard)
    """
    if draws < 1:
        raise ArgumentError(f"Nombre de tirages invalide : {draws}")
    labels = np.asarray(labels)
    wrong = (member_predictions(pool, x_adv) != labels[None, :]).astype(np.float64)
    members = rng.integers(pool.M, size=(draws, labels.size))
    outcomes = wrong[members, np.arange(labels.size)[None, :]]
    frequency = float(outcomes.mean())
    std_error = float(outcomes.std(ddof=1) / np.sqrt(outcomes.size)) if outcomes.size > 1 else 0.0
    return frequency, std_error
