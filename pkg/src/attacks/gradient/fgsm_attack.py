"""
FGSM Attack Module - Méthode du signe du gradient, en un pas

x_adv = clip_[0,1](x + ε·sign(∇ₓL)) ; c'est PGD avec T = 1, α = ε et sans départ aléatoire.
"""
from typing import Optional

import numpy as np

from attacks.gradient.pgd_attack import as_single_batch, sign_gradient_attack
from attacks.oracle import GradientOracle


def fgsm(oracle: GradientOracle, x: np.ndarray, y: int, epsilon: float,
         rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """
    Attaque FGSM d'un exemple

    Args:
        oracle: Oracle de gradient (boîte blanche, snapshot ou EOT)
        x: Image (C, H, W) dans [0, 1]
        y: Classe vraie
        epsilon: Budget L∞
        rng: Tirages d'un oracle stochastique (snapshot, EOT) ; sans effet en boîte blanche

    Returns:
        x_adv avec ‖x_adv − x‖∞ ≤ ε
    """
    if rng is None:
        rng = np.random.default_rng(0)
    return fgsm_batch(oracle, as_single_batch(oracle, x), np.array([int(y)]), epsilon, [rng])[0]


def fgsm_batch(oracle: GradientOracle, xs: np.ndarray, ys: np.ndarray, epsilon: float,
               rngs) -> np.ndarray:
    return sign_gradient_attack(oracle, xs, ys, epsilon, epsilon, 1, False, rngs)
