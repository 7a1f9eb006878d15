"""
PGD Attack Module - Descente de gradient projetée sous contrainte L∞

Pas de signe répétés, projection sur la boule {z : ‖z − x‖∞ ≤ ε} puis
écrêtage dans [0, 1]. L'entropie croisée est maximisée ; la marge CW est
minimisée (pas le long de −∇).
"""
from typing import Callable, Optional, Sequence

import numpy as np

from attacks.config import AttackConfig
from attacks.oracle import GradientOracle
from core.errors import ArgumentError, ShapeError

IterateHook = Callable[[int, np.ndarray], None]


def project(z: np.ndarray, x: np.ndarray, epsilon: float) -> np.ndarray:
    """Projection sur la boule L∞ de rayon ε autour de x, puis sur la boîte [0, 1]"""
    eps = np.asarray(epsilon, dtype=x.dtype)
    return np.clip(np.clip(z, x - eps, x + eps), 0, 1).astype(x.dtype, copy=False)


def random_start(x: np.ndarray, epsilon: float,
                 rngs: Sequence[np.random.Generator]) -> np.ndarray:
    """x + U(−ε, ε) tiré exemple par exemple avec son propre générateur, écrêté dans [0, 1]"""
    noise = np.stack([rng.uniform(-epsilon, epsilon, size=x.shape[1:]) for rng in rngs])
    return np.clip(x + noise.astype(x.dtype), 0, 1).astype(x.dtype, copy=False)


def sign_gradient_attack(oracle: GradientOracle, xs: np.ndarray, ys: np.ndarray,
                         epsilon: float, step_size: float, steps: int, start_random: bool,
                         rngs: Sequence[np.random.Generator],
                         on_iterate: Optional[IterateHook] = None) -> np.ndarray:
    """
    Boucle commune à FGSM et PGD sur un lot

    Args:
        oracle: Oracle de gradient (sa perte fixe le sens du pas)
        xs: Images propres (N, C, H, W) dans [0, 1]
        ys: Classes vraies (N,)
        epsilon: Budget L∞
        step_size: Pas α
        steps: Nombre d'itérations T
        start_random: Départ uniforme dans la boule
        rngs: Un générateur par exemple
        on_iterate: Appelé après chaque itération avec (t, itéré)

    Returns:
        Exemples adversariaux (N, C, H, W)
    """
    xs = np.asarray(xs, dtype=np.float32)
    ys = np.asarray(ys, dtype=np.int64).reshape(-1)
    if xs.ndim != 4 or xs.shape[1:] != oracle.input_shape:
        raise ShapeError(f"Lot {xs.shape} incompatible avec l'entrée {oracle.input_shape}")
    if ys.shape[0] != xs.shape[0] or len(rngs) != xs.shape[0]:
        raise ArgumentError("Nombre d'images, d'étiquettes et de générateurs différents")

    gradients = oracle.session(rngs)
    direction = np.float32(-1.0 if oracle.loss_kind == "cw" else 1.0)
    alpha = np.float32(step_size)

    z = random_start(xs, epsilon, rngs) if start_random else xs.copy()
    for t in range(steps):
        g = gradients(z, ys)
        z = project(z + direction * alpha * np.sign(g).astype(np.float32), xs, epsilon)
        if on_iterate is not None:
            on_iterate(t, z)
    return z


def as_single_batch(oracle: GradientOracle, x: np.ndarray):
    x = np.asarray(x, dtype=np.float32)
    if x.shape != oracle.input_shape:
        raise ShapeError(f"Entrée {x.shape} incompatible avec {oracle.input_shape}")
    return x[None]


def pgd(oracle: GradientOracle, x: np.ndarray, y: int, config: AttackConfig,
        rng: Optional[np.random.Generator] = None,
        on_iterate: Optional[IterateHook] = None) -> np.ndarray:
    """
    PGD (CE) ou CW-PGD (marge CW) sur un exemple

    Args:
        oracle: Oracle de gradient
        x: Image (C, H, W)
        y: Classe vraie
        config: Configuration (pgd ou cw_pgd ; fgsm accepté, c'est T = 1)
        rng: Générateur de l'exemple (défaut : dérivé de config.seed)

    Returns:
        x_adv de même forme que x
    """
    if rng is None:
        rng = np.random.default_rng(config.seed)
    xs = as_single_batch(oracle, x)
    return sign_gradient_attack(oracle, xs, np.array([int(y)]), config.epsilon,
                                config.step_size, config.steps, config.random_start,
                                [rng], on_iterate)[0]
