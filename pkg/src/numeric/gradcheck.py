"""
Vérification des gradients par différences finies centrées
"""
import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from numeric.losses import batch_losses, cw_losses
from numeric.model import Model, forward_trace, input_gradient, loss_and_param_gradients

logger = logging.getLogger(__name__)

# Plancher du dénominateur de l'erreur relative
REL_ERROR_FLOOR = 1e-4


@dataclass
class GradCheckReport:
    """Résultat d'une vérification : pire erreur relative et nombre de coordonnées testées"""
    max_error: float
    max_input_error: float
    max_param_error: float
    compared: int
    skipped: int


def relative_error(analytic: float, numeric: float) -> float:
    """|a - n| / max(|a|, |n|, plancher) ; 0 quand les deux s'annulent"""
    if analytic == 0.0 and numeric == 0.0:
        return 0.0
    scale = max(abs(analytic), abs(numeric), REL_ERROR_FLOOR)
    return abs(analytic - numeric) / scale


def _loss_and_pattern(model: Model, x: np.ndarray, y: int, loss_kind: str,
                      kappa: float) -> Tuple[float, bytes]:
    logits, traces = forward_trace(model, x[None])
    labels = np.array([y])
    losses, _ = batch_losses(logits, labels, loss_kind, kappa)
    parts = [trace.pattern() for trace in traces]
    if loss_kind == "cw":
        _, _, rival = cw_losses(logits, labels, kappa)
        parts.append(np.array([rival[0], losses[0] > -kappa], dtype=np.int64).tobytes())
    return float(losses[0]), b"|".join(parts)


def grad_check_report(model: Model, x: np.ndarray, y: int, loss_kind: str = "ce",
                      kappa: float = 0.0, step: float = 1e-5, samples_per_tensor: int = 8,
                      input_samples: int = 16, seed: int = 0) -> GradCheckReport:
    """
    Compare les gradients d'entrée et de paramètres aux différences finies centrées

    Les coordonnées dont la perturbation ±h change de région linéaire (signe d'une
    ReLU, argmax d'un pooling, concurrent CW ou saturation de la marge) sont ignorées :
    la différence finie n'y approche pas la dérivée.

    Args:
        model: Modèle (converti en double précision)
        x: Exemple (C, H, W)
        y: Classe
        loss_kind: ce ou cw
        step: Pas h des différences finies
        samples_per_tensor: Coordonnées tirées par tenseur de paramètres
        input_samples: Coordonnées d'entrée tirées
        seed: Graine du tirage des coordonnées

    Returns:
        GradCheckReport
    """
    m = model.astype(np.float64)
    x64 = np.array(x, dtype=np.float64)
    y = int(y)
    rng = np.random.default_rng(seed)

    analytic_input = input_gradient(m, x64, y, loss_kind, kappa)
    _, analytic_params = loss_and_param_gradients(m, x64[None], [y], loss_kind, kappa)
    _, base_pattern = _loss_and_pattern(m, x64, y, loss_kind, kappa)

    compared = skipped = 0

    def compare_coordinates(array: np.ndarray, analytic: np.ndarray) -> float:
        nonlocal compared, skipped
        count = min(samples_per_tensor if array is not x64 else input_samples, array.size)
        worst = 0.0
        for flat_index in rng.choice(array.size, size=count, replace=False):
            old = array.flat[flat_index]
            array.flat[flat_index] = old + step
            f_plus, pattern_plus = _loss_and_pattern(m, x64, y, loss_kind, kappa)
            array.flat[flat_index] = old - step
            f_minus, pattern_minus = _loss_and_pattern(m, x64, y, loss_kind, kappa)
            array.flat[flat_index] = old
            if pattern_plus != base_pattern or pattern_minus != base_pattern:
                skipped += 1
                continue
            numeric = (f_plus - f_minus) / (2 * step)
            worst = max(worst, relative_error(float(analytic.flat[flat_index]), numeric))
            compared += 1
        return worst

    input_error = compare_coordinates(x64, analytic_input)
    param_error = 0.0
    for (weight, bias), (d_weight, d_bias) in zip(m.params, analytic_params):
        param_error = max(param_error, compare_coordinates(weight, d_weight),
                          compare_coordinates(bias, d_bias))

    if skipped:
        logger.warning("Vérification de gradient : %d coordonnée(s) ignorée(s) (changement "
                       "de région linéaire)", skipped)
    logger.debug("Vérification de gradient : %d coordonnées comparées", compared)
    return GradCheckReport(max(input_error, param_error), input_error, param_error,
                           compared, skipped)


def grad_check(model: Model, x: np.ndarray, y: int, loss_kind: str = "ce",
               kappa: float = 0.0, step: float = 1e-5, **kwargs) -> float:
    """Pire erreur relative entre gradients analytiques et différences finies"""
    return grad_check_report(model, x, y, loss_kind, kappa, step, **kwargs).max_error
