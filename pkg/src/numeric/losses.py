"""
Fonctions de perte - Entropie croisée et marge de Carlini-Wagner
"""
from typing import Tuple

import numpy as np
from scipy.special import log_softmax, softmax

from core.errors import ArgumentError, ConfigError, ShapeError

LOSS_KINDS = ("ce", "cw")


def _check_labels(logits: np.ndarray, labels: np.ndarray) -> None:
    num_classes = logits.shape[1]
    if labels.shape != (logits.shape[0],):
        raise ShapeError(f"Étiquettes {labels.shape} incompatibles avec les logits {logits.shape}")
    if labels.size and (labels.min() < 0 or labels.max() >= num_classes):
        raise IndexError(f"Classe hors de [0, {num_classes})")


def ce_losses(logits: np.ndarray, labels: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Entropie croisée par exemple et gradient par rapport aux logits

    Args:
        logits: (N, K)
        labels: (N,) indices de classe

    Returns:
        Tuple (pertes (N,), dL/dlogits (N, K) = softmax - onehot)
    """
    _check_labels(logits, labels)
    rows = np.arange(logits.shape[0])
    log_probs = log_softmax(logits, axis=1)
    losses = -log_probs[rows, labels]
    grad = softmax(logits, axis=1)
    grad[rows, labels] -= 1
    return losses, grad


def cw_losses(logits: np.ndarray, labels: np.ndarray, kappa: float = 0.0):
    """
    Marge CW par exemple : max(z_y - max_{i≠y} z_i, -κ), et son gradient

    Returns:
        Tuple (pertes (N,), dL/dlogits (N, K), indice du meilleur concurrent (N,))
    """
    if logits.shape[1] < 2:
        raise ArgumentError("La marge CW exige au moins deux classes")
    if kappa < 0:
        raise ConfigError(f"κ doit être positif ou nul (reçu {kappa})")
    _check_labels(logits, labels)
    rows = np.arange(logits.shape[0])
    others = logits.copy()
    others[rows, labels] = -np.inf
    rival = others.argmax(axis=1)
    margin = logits[rows, labels] - logits[rows, rival]
    losses = np.maximum(margin, -kappa)
    active = (margin > -kappa).astype(logits.dtype)
    grad = np.zeros_like(logits)
    grad[rows, labels] += active
    grad[rows, rival] -= active
    return losses, grad, rival


def batch_losses(logits: np.ndarray, labels: np.ndarray, loss_kind: str, kappa: float = 0.0):
    """Pertes par exemple et gradient par rapport aux logits pour le type demandé"""
    if loss_kind == "ce":
        return ce_losses(logits, labels)
    if loss_kind == "cw":
        losses, grad, _ = cw_losses(logits, labels, kappa)
        return losses, grad
    raise ConfigError(f"Type de perte inconnu : {loss_kind!r} (ce, cw)")


def _as_single(logits, y: int) -> Tuple[np.ndarray, np.ndarray]:
    z = np.asarray(logits)
    if z.ndim != 1:
        raise ShapeError(f"Logits d'un seul exemple attendus, reçu {z.shape}")
    if not 0 <= int(y) < z.shape[0]:
        raise IndexError(f"Classe {y} hors de [0, {z.shape[0]})")
    return z[None, :], np.array([int(y)])


def loss_ce(logits, y: int) -> float:
    """−log softmax(logits)[y] pour un exemple"""
    z, labels = _as_single(logits, y)
    losses, _ = ce_losses(z.astype(np.float64), labels)
    return float(losses[0])


def loss_cw(logits, y: int, kappa: float = 0.0) -> float:
    """max(logits[y] − max_{i≠y} logits[i], −κ) pour un exemple ; l'attaquant la minimise"""
    z, labels = _as_single(logits, y)
    losses, _, _ = cw_losses(z.astype(np.float64), labels, kappa)
    return float(losses[0])
