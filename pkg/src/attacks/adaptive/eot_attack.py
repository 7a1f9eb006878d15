"""
EOT Attack Module - Espérance des gradients sur l'aléa du pool

Contre une défense aléatoire, l'attaquant remplace le gradient d'un modèle par
la moyenne des gradients de n sous-modèles tirés uniformément avec remise.
Le mode exact moyenne une fois sur tous les sous-modèles.
"""
import numpy as np

from attacks.oracle import EOTOracle
from core.errors import ArgumentError, ShapeError


def eot_gradient(pool, x: np.ndarray, y: int, n: int = 10, loss_kind: str = "ce",
                 rng: np.random.Generator = None, exact: bool = False,
                 kappa: float = 0.0) -> np.ndarray:
    """
    Gradient EOT d'un exemple

    Args:
        pool: Pool de sous-modèles (M ≥ 1)
        x: Image (C, H, W)
        y: Classe vraie
        n: Nombre de tirages (≥ 1)
        loss_kind: ce ou cw
        rng: Générateur consommé par les n tirages
        exact: Moyenne sur les M sous-modèles au lieu de tirer

    Returns:
        Gradient de même forme que x

    Raises:
        ArgumentError: pool vide ou n < 1
    """
    if len(pool.models) == 0:
        raise ArgumentError("Pool vide")
    oracle = EOTOracle(pool, n, exact, loss_kind, kappa)
    x = np.asarray(x)
    if x.shape != oracle.input_shape:
        raise ShapeError(f"Entrée {x.shape} incompatible avec {oracle.input_shape}")
    if rng is None:
        rng = np.random.default_rng(0)
    gradients = oracle.session([rng])
    return gradients(x[None], np.array([int(y)]))[0]
