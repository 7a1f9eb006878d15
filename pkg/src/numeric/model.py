"""
Modèle - Paramètres, initialisation, passe avant et gradients en mode inverse
"""
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from core.errors import ArgumentError, ConfigError, ShapeError
from core.utils import MASK64
from numeric.architecture import Architecture
from numeric.layers import (LayerTrace, conv_backward, conv_forward, dense_backward,
                            dense_forward, pool_backward, pool_forward, relu_backward,
                            relu_forward)
from numeric.losses import batch_losses

ParamPair = Tuple[np.ndarray, np.ndarray]

# Flux aléatoires dérivés d'une même graine
STREAM_INIT = 0
STREAM_SHUFFLE = 1
STREAM_ADVERSARIAL = 2


def make_rng(seed: int, *keys: int) -> np.random.Generator:
    """Générateur déterministe pour (graine, clés...) ; flux indépendants par clé"""
    return np.random.default_rng([int(seed) & MASK64, *[int(k) for k in keys]])


@dataclass
class Model:
    """Un sous-modèle : architecture + poids/biais par couche paramétrée"""
    architecture: Architecture
    params: List[ParamPair]
    init_seed: int
    train_epsilon: float = 0.0

    def __post_init__(self):
        expected = self.architecture.param_shapes()
        if len(expected) != len(self.params):
            raise ShapeError(f"{len(self.params)} couches de paramètres, {len(expected)} attendues")
        for (w_shape, b_shape), (w, b) in zip(expected, self.params):
            if tuple(w.shape) != w_shape or tuple(b.shape) != b_shape:
                raise ShapeError(f"Paramètres {w.shape}/{b.shape}, attendu {w_shape}/{b_shape}")
        if not 0 <= int(self.init_seed) <= MASK64:
            raise ConfigError(f"Graine hors de l'intervalle 64 bits : {self.init_seed}")
        if not 0.0 <= float(self.train_epsilon) <= 1.0:
            raise ConfigError(f"ε_train hors de [0, 1] : {self.train_epsilon}")

    @property
    def dtype(self) -> np.dtype:
        return self.params[0][0].dtype

    @property
    def num_classes(self) -> int:
        return self.architecture.num_classes

    def astype(self, dtype) -> "Model":
        """Copie dans la précision demandée (float64 pour les vérifications de gradient)"""
        params = [(w.astype(dtype), b.astype(dtype)) for w, b in self.params]
        return Model(self.architecture, params, self.init_seed, self.train_epsilon)

    def copy(self) -> "Model":
        return self.astype(self.dtype)

    def flat_params(self) -> np.ndarray:
        return np.concatenate([np.concatenate([w.ravel(), b.ravel()]) for w, b in self.params])


def init_params(arch: Architecture, seed: int) -> Model:
    """
    Initialisation déterministe : poids ~ U(±sqrt(6/fan_in)), biais nuls

    Args:
        arch: Architecture
        seed: Graine 64 bits

    Returns:
        Model en simple précision
    """
    rng = make_rng(seed, STREAM_INIT)
    params = []
    for w_shape, b_shape in arch.param_shapes():
        fan_in = int(np.prod(w_shape[1:]))
        limit = np.sqrt(6.0 / fan_in)
        weight = rng.uniform(-limit, limit, size=w_shape).astype(np.float32)
        params.append((weight, np.zeros(b_shape, dtype=np.float32)))
    return Model(arch, params, int(seed), 0.0)


# ═══════════════════════════════════════════════════════════════
#  PASSE AVANT
# ═══════════════════════════════════════════════════════════════

def _as_batch(model: Model, x) -> Tuple[np.ndarray, bool]:
    """Met x sous forme de lot (N, C, H, W) ; indique s'il s'agissait d'un seul exemple"""
    x = np.asarray(x)
    input_shape = tuple(model.architecture.input_shape)
    if x.shape == input_shape:
        return x[None].astype(model.dtype, copy=False), True
    if x.ndim == 4 and x.shape[1:] == input_shape:
        return x.astype(model.dtype, copy=False), False
    raise ShapeError(f"Entrée {x.shape} incompatible avec l'architecture {input_shape}")


def forward_trace(model: Model, x: np.ndarray) -> Tuple[np.ndarray, List[LayerTrace]]:
    """Passe avant sur un lot, en conservant les traces pour la rétropropagation"""
    traces = []
    params = iter(model.params)
    h = x
    for layer in model.architecture.layers:
        if layer.kind == "pool":
            h, trace = pool_forward(h, layer.kernel)
        else:
            weight, bias = next(params)
            if layer.kind == "conv":
                h, trace = conv_forward(h, weight, bias)
            else:
                h, trace = dense_forward(h, weight, bias)
            if layer.relu:
                h, trace.relu_mask = relu_forward(h)
        traces.append(trace)
    logits = h.reshape(h.shape[0], -1)
    return logits, traces


def forward(model: Model, x) -> np.ndarray:
    """
    Logits (avant softmax) d'un exemple (C, H, W) ou d'un lot (N, C, H, W)

    Raises:
        ShapeError: si la forme ne correspond pas à l'architecture
    """
    batch, single = _as_batch(model, x)
    logits, _ = forward_trace(model, batch)
    return logits[0] if single else logits


def predict_labels(model: Model, x) -> np.ndarray:
    """Classes prédites (argmax, plus petit indice en cas d'égalité)"""
    batch, _ = _as_batch(model, x)
    logits, _ = forward_trace(model, batch)
    return logits.argmax(axis=1)


# ═══════════════════════════════════════════════════════════════
#  PASSE ARRIÈRE
# ═══════════════════════════════════════════════════════════════

def backward(model: Model, traces: List[LayerTrace], dlogits: np.ndarray,
             need_input_grad: bool = True, need_param_grads: bool = True):
    """
    Rétropropagation de dL/dlogits à travers la chaîne de couches

    Returns:
        Tuple (gradient d'entrée ou None, liste de (dW, db) ou None)
    """
    layers = model.architecture.layers
    param_index = len(model.params)
    grads: List[Optional[ParamPair]] = [None] * len(model.params)
    last_output_shape = (dlogits.shape[0],) + tuple(model.architecture.output_shapes()[-1])
    dh = dlogits.reshape(last_output_shape)

    for position in range(len(layers) - 1, -1, -1):
        layer, trace = layers[position], traces[position]
        first = position == 0
        need_dx = need_input_grad or not first
        if layer.kind == "pool":
            dh = pool_backward(dh, trace) if need_dx else None
            continue

        param_index -= 1
        weight = model.params[param_index][0]
        if layer.relu:
            dh = relu_backward(dh, trace.relu_mask)
        if not need_param_grads and not need_dx:
            dh = None
            continue
        if layer.kind == "conv":
            dx, d_weight, d_bias = conv_backward(dh, trace, weight, need_dx, need_param_grads)
        else:
            dx, d_weight, d_bias = dense_backward(dh, trace, weight, need_dx, need_param_grads)
        if need_param_grads:
            grads[param_index] = (d_weight, d_bias)
        dh = dx

    return dh, (grads if need_param_grads else None)


def loss_and_input_gradients(model: Model, xs: np.ndarray, ys, loss_kind: str = "ce",
                             kappa: float = 0.0) -> Tuple[np.ndarray, np.ndarray]:
    """Pertes par exemple et gradient de chaque perte par rapport à son entrée"""
    batch, _ = _as_batch(model, xs)
    labels = np.asarray(ys, dtype=np.int64).reshape(-1)
    logits, traces = forward_trace(model, batch)
    losses, dlogits = batch_losses(logits, labels, loss_kind, kappa)
    dx, _ = backward(model, traces, dlogits.astype(model.dtype, copy=False),
                     need_input_grad=True, need_param_grads=False)
    return losses, dx


def input_gradients(model: Model, xs: np.ndarray, ys, loss_kind: str = "ce",
                    kappa: float = 0.0) -> np.ndarray:
    """Gradient d'entrée par exemple d'un lot (chaque ligne : gradient de sa propre perte)"""
    return loss_and_input_gradients(model, xs, ys, loss_kind, kappa)[1]


def input_gradient(model: Model, x: np.ndarray, y: int, loss_kind: str = "ce",
                   kappa: float = 0.0) -> np.ndarray:
    """Gradient exact de la perte choisie par rapport à l'entrée x (même forme que x)"""
    x = np.asarray(x)
    if x.shape != tuple(model.architecture.input_shape):
        raise ShapeError(f"Entrée {x.shape} incompatible avec l'architecture "
                         f"{model.architecture.input_shape}")
    if not 0 <= int(y) < model.num_classes:
        raise IndexError(f"Classe {y} hors de [0, {model.num_classes})")
    return input_gradients(model, x[None], [int(y)], loss_kind, kappa)[0]


def loss_and_param_gradients(model: Model, xs: np.ndarray, ys, loss_kind: str = "ce",
                             kappa: float = 0.0) -> Tuple[float, List[ParamPair]]:
    """Perte moyenne du lot et gradients de cette moyenne par rapport à chaque paramètre"""
    batch, _ = _as_batch(model, xs)
    labels = np.asarray(ys, dtype=np.int64).reshape(-1)
    if batch.shape[0] == 0 or labels.size == 0:
        raise ArgumentError("Lot vide")
    logits, traces = forward_trace(model, batch)
    losses, dlogits = batch_losses(logits, labels, loss_kind, kappa)
    dlogits = (dlogits / batch.shape[0]).astype(model.dtype, copy=False)
    _, grads = backward(model, traces, dlogits, need_input_grad=False, need_param_grads=True)
    return float(np.mean(losses)), grads


def param_gradients(model: Model, batch: Tuple[np.ndarray, Sequence[int]],
                    loss_kind: str = "ce", kappa: float = 0.0) -> List[ParamPair]:
    """
    Gradients de la perte moyenne du lot par rapport à tous les paramètres

    Args:
        model: Modèle
        batch: (images (N, C, H, W), étiquettes (N,))
        loss_kind: ce ou cw

    Raises:
        ArgumentError: lot vide
    """
    xs, ys = batch
    if len(ys) == 0 or np.asarray(xs).shape[0] == 0:
        raise ArgumentError("Lot vide")
    return loss_and_param_gradients(model, xs, ys, loss_kind, kappa)[1]
