"""
Configuration d'exécution - Fichier INI à sections, valeurs par défaut partout

Sections : dataset, pool, train, attack, eval, sweep, output, run.
Les clés inconnues sont refusées. La section [manifest] d'un manifeste est
ignorée, ce qui permet de relancer une commande depuis son manifeste.
"""
import configparser
import itertools
import logging
import os
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Optional, Tuple, Union

from attacks.config import AttackConfig
from core.errors import ConfigError
from evaluation.metrics import EvalProtocol
from evaluation.sweep import SweepGrid
from training.trainer import TrainConfig

logger = logging.getLogger(__name__)

AUTO = ("", "auto", "none")
IGNORED_SECTIONS = ("manifest",)


def _optional(parse: Callable[[str], Any]) -> Callable[[str], Any]:
    def parser(raw: str):
        return None if raw.strip().lower() in AUTO else parse(raw)
    return parser


def _bool(raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("1", "true", "yes", "on", "oui"):
        return True
    if lowered in ("0", "false", "no", "off", "non"):
        return False
    raise ValueError(f"booléen attendu, reçu {raw!r}")


def _list(parse: Callable[[str], Any]) -> Callable[[str], list]:
    def parser(raw: str):
        items = [item.strip() for item in raw.split(",") if item.strip()]
        return [parse(item) for item in items]
    return parser


def _str(raw: str) -> str:
    return raw.strip()


def _float(raw: str) -> float:
    """Accepte aussi une fraction (8/255)"""
    text = raw.strip()
    if "/" in text:
        numerator, denominator = text.split("/", 1)
        return float(numerator) / float(denominator)
    return float(text)


# section -> clé -> (analyseur, valeur par défaut en texte)
SCHEMA: Dict[str, Dict[str, Tuple[Callable[[str], Any], str]]] = {
    "dataset": {
        "id": (_str, "synthetic"),
        "directory": (_optional(_str), ""),
        "train_images": (_optional(_str), ""),
        "train_labels": (_optional(_str), ""),
        "test_images": (_optional(_str), ""),
        "test_labels": (_optional(_str), ""),
        "train_batches": (_optional(_list(_str)), ""),
        "test_batches": (_optional(_list(_str)), ""),
        "train_size": (int, "0"),
        "test_size": (int, "0"),
        "num_classes": (int, "4"),
        "per_class": (int, "50"),
        "test_per_class": (int, "25"),
        "side": (int, "12"),
        "seed": (int, "0"),
    },
    "pool": {
        "m": (int, "2"),
        "epsilon_train": (_float, "0.0"),
        "master_seed": (int, "0"),
        "manifest": (_optional(_str), ""),
    },
    "train": {
        "epochs": (int, "3"),
        "batch_size": (int, "64"),
        "learning_rate": (_float, "0.01"),
        "momentum": (_float, "0.9"),
        "inner_steps": (int, "7"),
        "inner_step_size": (_optional(_float), "auto"),
    },
    "attack": {
        "kinds": (_list(_str), "pgd"),
        "epsilons": (_list(_float), "0.1"),
        "steps": (_optional(int), "auto"),
        "step_size": (_optional(_float), "auto"),
        "random_start": (_optional(_bool), "auto"),
        "kappa": (_float, "0.0"),
        "eot_samples": (_list(int), "1"),
        "eot_mode": (_str, "sample"),
        "seed": (int, "0"),
    },
    "eval": {
        "eligibility": (_str, "all_members_correct"),
        "success_metric": (_str, "expected_over_members"),
        "test_count": (int, "100"),
        "seed": (int, "0"),
    },
    "sweep": {
        "m_values": (_list(int), "1,2"),
        "epsilon_train_values": (_list(_float), "0.0,0.1"),
        "master_seeds": (_list(int), "0"),
        "resume": (_bool, "true"),
    },
    "output": {
        "directory": (_str, "reports"),
        "cache_dir": (_optional(_str), ""),
        "plots": (_bool, "true"),
    },
    "run": {
        "workers": (int, "0"),
    },
}


class RunConfig:
    """Configuration effective : texte brut (pour le manifeste) et valeurs typées"""

    def __init__(self, raw: Optional[Dict[str, Dict[str, str]]] = None):
        self.raw: Dict[str, Dict[str, str]] = {
            section: {key: default for key, (_, default) in keys.items()}
            for section, keys in SCHEMA.items()
        }
        for section, values in (raw or {}).items():
            for key, value in values.items():
                self.set(section, key, value)
        self.values = self._parse()

    # ───────────────────────── chargement ─────────────────────────

    @classmethod
    def load(cls, path: Optional[Union[str, Path]] = None,
             overrides: Iterable[str] = ()) -> "RunConfig":
        """
        Lit le fichier (optionnel) puis applique les surcharges section.clé=valeur

        Raises:
            ConfigError: section ou clé inconnue, valeur invalide
            OSError: fichier illisible
        """
        raw: Dict[str, Dict[str, str]] = {}
        if path is not None:
            parser = configparser.ConfigParser(interpolation=None, strict=True)
            try:
                with open(path, encoding="utf-8") as f:
                    parser.read_file(f)
            except configparser.Error as exc:
                raise ConfigError(f"{path} : fichier de configuration invalide ({exc})") from exc
            for section in parser.sections():
                if section in IGNORED_SECTIONS:
                    continue
                raw[section] = dict(parser[section])
        for override in overrides:
            section, key, value = _split_override(override)
            raw.setdefault(section, {})[key] = value
        return cls(raw)

    def set(self, section: str, key: str, value: str) -> None:
        if section not in SCHEMA:
            raise ConfigError(f"Section inconnue : [{section}]")
        if key not in SCHEMA[section]:
            raise ConfigError(f"Clé inconnue : {section}.{key}")
        self.raw[section][key] = str(value).strip()

    def _parse(self) -> Dict[str, Dict[str, Any]]:
        values: Dict[str, Dict[str, Any]] = {}
        for section, keys in SCHEMA.items():
            values[section] = {}
            for key, (parse, _) in keys.items():
                text = self.raw[section][key]
                try:
                    values[section][key] = parse(text)
                except ValueError as exc:
                    raise ConfigError(f"{section}.{key} : valeur invalide {text!r}") from exc
        return values

    def __getitem__(self, section: str) -> Dict[str, Any]:
        return self.values[section]

    def to_parser(self) -> configparser.ConfigParser:
        """Toutes les sections, valeurs par défaut comprises"""
        parser = configparser.ConfigParser(interpolation=None)
        for section, values in self.raw.items():
            parser[section] = dict(values)
        return parser

    # ───────────────────────── objets métier ─────────────────────────

    def train_config(self, epsilon_train: Optional[float] = None) -> TrainConfig:
        train = self.values["train"]
        eps = self.values["pool"]["epsilon_train"] if epsilon_train is None else epsilon_train
        return TrainConfig(epochs=train["epochs"], batch_size=train["batch_size"],
                           learning_rate=train["learning_rate"], momentum=train["momentum"],
                           epsilon_train=eps, inner_steps=train["inner_steps"],
                           inner_step_size=train["inner_step_size"])

    def attack_configs(self) -> List[AttackConfig]:
        """
        Produit cartésien types × ε × tirages EOT

        En mode EOT exact, le nombre de tirages n'intervient pas : seule la première
        valeur de eot_samples est gardée.
        """
        attack = self.values["attack"]
        if not attack["kinds"] or not attack["epsilons"] or not attack["eot_samples"]:
            raise ConfigError("Section [attack] : listes kinds, epsilons et eot_samples non vides")
        eot_values = attack["eot_samples"]
        if attack["eot_mode"] == "exact" and len(eot_values) > 1:
            logger.warning("eot_mode = exact : eot_samples %s réduit à %d", eot_values, eot_values[0])
            eot_values = eot_values[:1]
        configs = []
        for kind, eps, eot in itertools.product(attack["kinds"], attack["epsilons"], eot_values):
            fgsm = kind == "fgsm"
            configs.append(AttackConfig(
                kind=kind, epsilon=eps,
                step_size=None if fgsm else attack["step_size"],
                steps=None if fgsm else attack["steps"],
                random_start=None if fgsm else attack["random_start"],
                kappa=attack["kappa"], eot_samples=eot, eot_mode=attack["eot_mode"],
                seed=attack["seed"]))
        return configs

    def protocol(self) -> EvalProtocol:
        ev = self.values["eval"]
        return EvalProtocol(ev["eligibility"], ev["success_metric"], ev["test_count"], ev["seed"])

    def grid(self) -> SweepGrid:
        sw = self.values["sweep"]
        return SweepGrid(sw["m_values"], sw["epsilon_train_values"], self.attack_configs(),
                         sw["master_seeds"])

    @property
    def workers(self) -> int:
        workers = self.values["run"]["workers"]
        if workers < 0:
            raise ConfigError(f"run.workers invalide : {workers}")
        return workers or (os.cpu_count() or 1)

    @property
    def output_dir(self) -> Path:
        return Path(self.values["output"]["directory"])

    @property
    def cache_dir(self) -> Path:
        return Path(self.values["output"]["cache_dir"] or self.output_dir / "cache")


def _split_override(override: str) -> Tuple[str, str, str]:
    if "=" not in override or "." not in override.split("=", 1)[0]:
        raise ConfigError(f"Surcharge invalide : {override!r} (section.clé=valeur attendu)")
    dotted, value = override.split("=", 1)
    section, key = dotted.strip().split(".", 1)
    return section.strip(), key.strip(), value
