"""
Couches - Passes avant et arrière
Convolution (sans padding), max-pooling, couche dense et ReLU, sur des lots (N, ...)
"""
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


@dataclass
class LayerTrace:
    """Valeurs mémorisées par la passe avant pour la passe arrière"""
    kind: str
    input_shape: Tuple[int, ...]
    windows: Optional[np.ndarray] = None      # conv : vue glissante de l'entrée
    flat_input: Optional[np.ndarray] = None   # dense : entrée aplatie
    pool_index: Optional[np.ndarray] = None   # pool : position du max dans chaque fenêtre
    relu_mask: Optional[np.ndarray] = None    # pré-activation > 0
    extra: dict = field(default_factory=dict)

    def pattern(self) -> bytes:
        """Motif linéaire par morceaux (signes ReLU, argmax du pooling)"""
        parts = []
        if self.relu_mask is not None:
            parts.append(np.packbits(self.relu_mask).tobytes())
        if self.pool_index is not None:
            parts.append(self.pool_index.astype(np.int16).tobytes())
        return b"".join(parts)


# ═══════════════════════════════════════════════════════════════
#  CONVOLUTION
# ═══════════════════════════════════════════════════════════════

def conv_forward(x: np.ndarray, weight: np.ndarray, bias: np.ndarray) -> Tuple[np.ndarray, LayerTrace]:
    """
    Convolution 2D « valid » (corrélation croisée, pas de 1)

    Args:
        x: Entrée (N, C, H, W)
        weight: Noyaux (F, C, kh, kw)
        bias: Biais (F,)

    Returns:
        Tuple (sortie (N, F, H-kh+1, W-kw+1), trace)
    """
    kh, kw = weight.shape[2:]
    windows = sliding_window_view(x, (kh, kw), axis=(2, 3))     # (N, C, Ho, Wo, kh, kw)
    out = np.tensordot(windows, weight, axes=([1, 4, 5], [1, 2, 3]))   # (N, Ho, Wo, F)
    out = out.transpose(0, 3, 1, 2) + bias[None, :, None, None]
    trace = LayerTrace("conv", x.shape, windows=windows)
    return np.ascontiguousarray(out), trace


def conv_backward(dout: np.ndarray, trace: LayerTrace, weight: np.ndarray,
                  need_input_grad: bool = True, need_param_grads: bool = True):
    """Gradients de la convolution : (dx, dW, db), None pour ce qui n'est pas demandé"""
    d_weight = d_bias = None
    if need_param_grads:
        d_weight = np.tensordot(dout, trace.windows, axes=([0, 2, 3], [0, 2, 3]))   # (F, C, kh, kw)
        d_bias = dout.sum(axis=(0, 2, 3))
    if not need_input_grad:
        return None, d_weight, d_bias

    kh, kw = weight.shape[2:]
    ho, wo = dout.shape[2:]
    dx = np.zeros(trace.input_shape, dtype=dout.dtype)
    for i in range(kh):
        for j in range(kw):
            # (N, F, Ho, Wo) x (F, C) -> (N, Ho, Wo, C)
            contrib = np.tensordot(dout, weight[:, :, i, j], axes=([1], [0]))
            dx[:, :, i:i + ho, j:j + wo] += contrib.transpose(0, 3, 1, 2)
    return dx, d_weight, d_bias


# ═══════════════════════════════════════════════════════════════
#  MAX-POOLING
# ═══════════════════════════════════════════════════════════════

def pool_forward(x: np.ndarray, kernel: Tuple[int, int]) -> Tuple[np.ndarray, LayerTrace]:
    """Max-pooling sans recouvrement ; les bords qui ne remplissent pas une fenêtre sont ignorés"""
    n, c, h, w = x.shape
    ph, pw = kernel
    ho, wo = h // ph, w // pw
    blocks = (x[:, :, :ho * ph, :wo * pw]
              .reshape(n, c, ho, ph, wo, pw)
              .transpose(0, 1, 2, 4, 3, 5)
              .reshape(n, c, ho, wo, ph * pw))
    # argmax : premier maximum en cas d'égalité
    index = blocks.argmax(axis=-1)
    out = np.take_along_axis(blocks, index[..., None], axis=-1)[..., 0]
    trace = LayerTrace("pool", x.shape, pool_index=index, extra={"kernel": kernel})
    return out, trace


def pool_backward(dout: np.ndarray, trace: LayerTrace) -> np.ndarray:
    """Le gradient est routé vers la position du maximum de chaque fenêtre"""
    n, c, h, w = trace.input_shape
    ph, pw = trace.extra["kernel"]
    ho, wo = h // ph, w // pw
    routed = np.zeros((n, c, ho, wo, ph * pw), dtype=dout.dtype)
    np.put_along_axis(routed, trace.pool_index[..., None], dout[..., None], axis=-1)
    routed = (routed.reshape(n, c, ho, wo, ph, pw)
              .transpose(0, 1, 2, 4, 3, 5)
              .reshape(n, c, ho * ph, wo * pw))
    dx = np.zeros(trace.input_shape, dtype=dout.dtype)
    dx[:, :, :ho * ph, :wo * pw] = routed
    return dx


# ═══════════════════════════════════════════════════════════════
#  COUCHE DENSE ET ACTIVATION
# ═══════════════════════════════════════════════════════════════

def dense_forward(x: np.ndarray, weight: np.ndarray, bias: np.ndarray) -> Tuple[np.ndarray, LayerTrace]:
    """Couche entièrement connectée ; l'entrée est aplatie par exemple"""
    flat = x.reshape(x.shape[0], -1)
    out = flat @ weight.T + bias
    return out, LayerTrace("dense", x.shape, flat_input=flat)


def dense_backward(dout: np.ndarray, trace: LayerTrace, weight: np.ndarray,
                   need_input_grad: bool = True, need_param_grads: bool = True):
    """Gradients de la couche dense : (dx, dW, db), None pour ce qui n'est pas demandé"""
    d_weight = d_bias = None
    if need_param_grads:
        d_weight = dout.T @ trace.flat_input
        d_bias = dout.sum(axis=0)
    if not need_input_grad:
        return None, d_weight, d_bias
    dx = (dout @ weight).reshape(trace.input_shape)
    return dx, d_weight, d_bias


def relu_forward(z: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """ReLU ; renvoie aussi le masque z > 0 (dérivée nulle en 0)"""
    mask = z > 0
    return np.where(mask, z, 0).astype(z.dtype, copy=False), mask


def relu_backward(dout: np.ndarray, mask: np.ndarray) -> np.ndarray:
    return np.where(mask, dout, 0).astype(dout.dtype, copy=False)
