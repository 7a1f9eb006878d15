"""
Architectures - Description des chaînes de couches
Architectures de base MNIST / CIFAR-10 et petit réseau synthétique
"""
from dataclasses import dataclass
from typing import List, Optional, Tuple

from core.errors import ConfigError, ShapeError

# Identifiants stockés dans l'en-tête des checkpoints
ARCH_IDS = {"custom": 0, "mnist": 1, "cifar10": 2, "synthetic": 3}
ARCH_NAMES = {v: k for k, v in ARCH_IDS.items()}

LAYER_KINDS = ("conv", "pool", "dense", "output")

Shape = Tuple[int, ...]


@dataclass(frozen=True)
class LayerSpec:
    """Descripteur d'une couche : conv, pool, dense ou output"""
    kind: str
    units: int = 0                      # filtres (conv) ou unités (dense/output)
    kernel: Tuple[int, int] = (1, 1)    # taille du noyau (conv) ou de la fenêtre (pool)
    relu: bool = False

    def __post_init__(self):
        if self.kind not in LAYER_KINDS:
            raise ConfigError(f"Type de couche inconnu : {self.kind}")
        if self.kind != "pool" and self.units < 1:
            raise ConfigError(f"Couche {self.kind} : nombre d'unités invalide ({self.units})")
        if min(self.kernel) < 1:
            raise ConfigError(f"Couche {self.kind} : noyau invalide {self.kernel}")

    @property
    def has_params(self) -> bool:
        return self.kind in ("conv", "dense", "output")

    def __str__(self) -> str:
        kh, kw = self.kernel
        if self.kind == "conv":
            return f"Conv{self.units}({kh},{kw})"
        if self.kind == "pool":
            return f"Pool({kh},{kw})"
        if self.kind == "dense":
            return f"Dense{self.units}"
        return f"Output{self.units}"


def conv(filters: int, kh: int = 3, kw: int = 3, relu: bool = True) -> LayerSpec:
    return LayerSpec("conv", filters, (kh, kw), relu)


def pool(ph: int = 2, pw: int = 2) -> LayerSpec:
    return LayerSpec("pool", 0, (ph, pw))


def dense(units: int, relu: bool = True) -> LayerSpec:
    return LayerSpec("dense", units, (1, 1), relu)


def output(units: int) -> LayerSpec:
    return LayerSpec("output", units, (1, 1), False)


def _layer_output_shape(layer: LayerSpec, shape: Shape) -> Shape:
    """Forme de sortie d'une couche (convolution sans padding, pooling tronqué)"""
    if layer.kind in ("conv", "pool"):
        if len(shape) != 3:
            raise ShapeError(f"{layer} attend une entrée (C, H, W), reçu {shape}")
        c, h, w = shape
        kh, kw = layer.kernel
        if layer.kind == "conv":
            if kh > h or kw > w:
                raise ShapeError(f"{layer} : noyau plus grand que l'entrée {shape}")
            return (layer.units, h - kh + 1, w - kw + 1)
        if kh > h or kw > w:
            raise ShapeError(f"{layer} : fenêtre plus grande que l'entrée {shape}")
        return (c, h // kh, w // kw)
    # dense / output : aplatissement implicite
    return (layer.units,)


@dataclass(frozen=True)
class Architecture:
    """Chaîne ordonnée de couches avec la forme d'entrée (canaux, hauteur, largeur)"""
    name: str
    input_shape: Tuple[int, int, int]
    layers: Tuple[LayerSpec, ...]

    def __post_init__(self):
        if len(self.input_shape) != 3 or min(self.input_shape) < 1:
            raise ShapeError(f"Forme d'entrée invalide : {self.input_shape}")
        if not self.layers:
            raise ConfigError("Architecture vide")
        if self.name not in ARCH_IDS:
            raise ConfigError(f"Nom d'architecture inconnu : {self.name}")
        # Vérifie la chaîne de formes (lève ShapeError si incohérente)
        self.output_shapes()

    @property
    def arch_id(self) -> int:
        return ARCH_IDS[self.name]

    def output_shapes(self) -> List[Shape]:
        """Formes de sortie de chaque couche, dans l'ordre"""
        shapes = []
        shape: Shape = tuple(self.input_shape)
        for layer in self.layers:
            shape = _layer_output_shape(layer, shape)
            shapes.append(shape)
        return shapes

    def input_shapes(self) -> List[Shape]:
        """Formes d'entrée de chaque couche"""
        return [tuple(self.input_shape)] + self.output_shapes()[:-1]

    @property
    def num_classes(self) -> int:
        last = self.output_shapes()[-1]
        size = 1
        for d in last:
            size *= d
        return size

    def param_shapes(self) -> List[Tuple[Shape, Shape]]:
        """(forme des poids, forme des biais) pour chaque couche paramétrée"""
        result = []
        for layer, in_shape in zip(self.layers, self.input_shapes()):
            if layer.kind == "conv":
                kh, kw = layer.kernel
                result.append(((layer.units, in_shape[0], kh, kw), (layer.units,)))
            elif layer.has_params:
                fan_in = 1
                for d in in_shape:
                    fan_in *= d
                result.append(((layer.units, fan_in), (layer.units,)))
        return result

    def key(self) -> str:
        """Clé textuelle stable (cache de checkpoints, homogénéité des pools)"""
        chain = "-".join(str(layer) + ("r" if layer.relu else "") for layer in self.layers)
        c, h, w = self.input_shape
        return f"{self.name}:{c}x{h}x{w}:{chain}"

    def describe(self) -> str:
        return " → ".join(str(layer) for layer in self.layers)


def parameter_count(arch: Architecture) -> int:
    """Nombre total de paramètres : conv F·C·kh·kw + F, dense U·in + U"""
    total = 0
    for w_shape, b_shape in arch.param_shapes():
        w_size = 1
        for d in w_shape:
            w_size *= d
        total += w_size + b_shape[0]
    return total


def build_architecture(dataset_id: str,
                       input_shape: Optional[Tuple[int, int, int]] = None,
                       num_classes: int = 10) -> Architecture:
    """
    Construit l'architecture de base associée à un jeu de données

    Args:
        dataset_id: mnist, cifar10 ou synthetic
        input_shape: Forme d'entrée (synthetic uniquement, défaut (1, 12, 12))
        num_classes: Nombre de classes (synthetic uniquement)

    Returns:
        Architecture
    """
    if dataset_id == "mnist":
        layers = (conv(32), conv(32), pool(),
                  conv(64), conv(64), pool(),
                  dense(200), dense(200), output(10))
        return Architecture("mnist", (1, 28, 28), layers)

    if dataset_id == "cifar10":
        layers = (conv(64), conv(64), pool(),
                  conv(128), conv(128), pool(),
                  dense(256), dense(256), output(10))
        return Architecture("cifar10", (3, 32, 32), layers)

    if dataset_id == "synthetic":
        shape = tuple(input_shape) if input_shape is not None else (1, 12, 12)
        layers = (conv(8), pool(), dense(32), output(num_classes))
        return Architecture("synthetic", shape, layers)

    raise ConfigError(f"Jeu de données non supporté : {dataset_id!r} (mnist, cifar10, synthetic)")
