"""
Configuration des attaques - Type, budget L∞, pas, itérations, EOT
"""
from dataclasses import dataclass, fields
from typing import Dict, Optional

from core.errors import ConfigError
from core.utils import MASK64

ATTACK_KINDS = ("fgsm", "pgd", "cw_pgd")
EOT_MODES = ("sample", "exact")

DEFAULT_PGD_STEPS = 40
PGD_STEP_FACTOR = 2.5

# Tolérance sur α ≤ ε (α est souvent calculé comme ε/T · 2.5)
STEP_TOLERANCE = 1e-12


@dataclass
class AttackConfig:
    """
    Paramètres d'une attaque

    Les champs laissés à None reçoivent les valeurs par défaut du type d'attaque :
    FGSM impose T = 1, α = ε, pas de départ aléatoire ; PGD/CW-PGD prennent
    T = 40, α = 2.5·ε/T et un départ aléatoire.
    """
    kind: str = "pgd"
    epsilon: float = 0.3
    step_size: Optional[float] = None
    steps: Optional[int] = None
    random_start: Optional[bool] = None
    kappa: float = 0.0
    eot_samples: int = 1
    eot_mode: str = "sample"
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ATTACK_KINDS:
            raise ConfigError(f"Attaque inconnue : {self.kind!r} ({', '.join(ATTACK_KINDS)})")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ConfigError(f"ε_attack hors de [0, 1] : {self.epsilon}")

        if self.kind == "fgsm":
            if self.steps not in (None, 1):
                raise ConfigError("FGSM : une seule itération")
            if self.random_start:
                raise ConfigError("FGSM : pas de départ aléatoire")
            if self.step_size is not None and self.step_size != self.epsilon:
                raise ConfigError("FGSM : le pas doit être égal à ε")
            self.steps, self.step_size, self.random_start = 1, self.epsilon, False
        else:
            if self.steps is None:
                self.steps = DEFAULT_PGD_STEPS
            if self.step_size is None:
                self.step_size = min(self.epsilon, PGD_STEP_FACTOR * self.epsilon / self.steps)
            if self.random_start is None:
                self.random_start = True

        if self.steps < 1:
            raise ConfigError(f"Nombre d'itérations invalide : {self.steps}")
        if self.step_size < 0 or (self.step_size == 0 and self.epsilon > 0):
            raise ConfigError(f"Pas α invalide : {self.step_size}")
        if self.step_size > self.epsilon + STEP_TOLERANCE:
            raise ConfigError(f"Pas α = {self.step_size} supérieur à ε = {self.epsilon}")
        if self.kappa < 0:
            raise ConfigError(f"κ doit être positif ou nul (reçu {self.kappa})")
        if self.eot_samples < 1:
            raise ConfigError(f"Nombre de tirages EOT invalide : {self.eot_samples}")
        if self.eot_mode not in EOT_MODES:
            raise ConfigError(f"Mode EOT inconnu : {self.eot_mode!r} (sample, exact)")
        if not 0 <= int(self.seed) <= MASK64:
            raise ConfigError(f"Graine hors de l'intervalle 64 bits : {self.seed}")

    @property
    def loss_kind(self) -> str:
        return "cw" if self.kind == "cw_pgd" else "ce"

    @property
    def uses_eot(self) -> bool:
        return self.eot_mode == "exact" or self.eot_samples > 1

    @property
    def label(self) -> str:
        """Libellé court : pgd, cw_pgd+eot10, fgsm+eot_exact..."""
        if self.eot_mode == "exact":
            return f"{self.kind}+eot_exact"
        if self.eot_samples > 1:
            return f"{self.kind}+eot{self.eot_samples}"
        return self.kind

    def to_dict(self) -> Dict[str, str]:
        return {f.name: str(getattr(self, f.name)).lower() if isinstance(getattr(self, f.name), bool)
                else str(getattr(self, f.name)) for f in fields(self)}

    @classmethod
    def from_dict(cls, values: Dict[str, str]) -> "AttackConfig":
        """Reconstruit une configuration depuis des chaînes (fichier de configuration)"""
        known = {f.name for f in fields(cls)}
        unknown = set(values) - known
        if unknown:
            raise ConfigError(f"Clés d'attaque inconnues : {', '.join(sorted(unknown))}")
        converters = {"kind": str, "epsilon": float, "step_size": float, "steps": int,
                      "random_start": _parse_bool, "kappa": float, "eot_samples": int,
                      "eot_mode": str, "seed": int}
        kwargs = {}
        for key, raw in values.items():
            if raw is None or str(raw).strip().lower() in ("", "none"):
                continue
            try:
                kwargs[key] = converters[key](str(raw).strip())
            except ValueError as exc:
                raise ConfigError(f"Valeur invalide pour {key} : {raw!r}") from exc
        return cls(**kwargs)


def _parse_bool(raw: str) -> bool:
    lowered = raw.lower()
    if lowered in ("1", "true", "yes", "on", "oui"):
        return True
    if lowered in ("0", "false", "no", "off", "non"):
        return False
    raise ValueError(raw)
