"""
Rapport d'évaluation - Lignes (M, ε_train, attaque, ε_attack, ...) et format CSV
"""
import csv
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Iterable, List, Optional, Tuple, Union

from core.errors import ArgumentError, FormatError

UNDEFINED = "undefined"
FRACTION_FIELDS = ("epsilon_train", "epsilon_attack", "clean_accuracy", "asr", "wall_time")


@dataclass
class EvalRow:
    """Une combinaison (pool, attaque) évaluée"""
    m: int
    epsilon_train: float
    attack: str
    epsilon_attack: float
    eot_samples: int
    clean_accuracy: float
    asr: Optional[float]
    memory_bytes: int
    master_seed: int
    attack_seed: int
    wall_time: float

    def __post_init__(self):
        if not 0.0 <= self.clean_accuracy <= 1.0:
            raise ArgumentError(f"Précision hors de [0, 1] : {self.clean_accuracy}")
        if self.asr is not None and not 0.0 <= self.asr <= 1.0:
            raise ArgumentError(f"ASR hors de [0, 1] : {self.asr}")

    @property
    def key(self) -> Tuple:
        return (self.m, round(self.epsilon_train, 6), self.attack, round(self.epsilon_attack, 6),
                self.eot_samples, self.master_seed, self.attack_seed)


FIELDNAMES = [f.name for f in fields(EvalRow)]


@dataclass
class EvalReport:
    rows: List[EvalRow]

    def sorted(self) -> "EvalReport":
        return EvalReport(sorted(self.rows, key=lambda row: row.key))

    def __len__(self) -> int:
        return len(self.rows)

    def keys(self) -> set:
        return {row.key for row in self.rows}


def _format(name: str, value) -> str:
    if value is None:
        return UNDEFINED
    if name in FRACTION_FIELDS:
        return f"{value:.6f}"
    return str(value)


def row_to_record(row: EvalRow) -> dict:
    return {name: _format(name, value) for name, value in asdict(row).items()}


def emit_csv(report: Union[EvalReport, Iterable[EvalRow]], path: Union[str, Path]) -> Path:
    """
    Écrit l'en-tête puis une ligne par résultat, triées par clé

    Raises:
        ArgumentError: rapport vide
        OSError: chemin non inscriptible
    """
    rows = report.rows if isinstance(report, EvalReport) else list(report)
    if not rows:
        raise ArgumentError("Rapport vide : aucun résultat à écrire")
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=FIELDNAMES)
        writer.writeheader()
        for row in EvalReport(rows).sorted().rows:
            writer.writerow(row_to_record(row))
    return path


def _parse(record: dict, line: int) -> EvalRow:
    try:
        asr = None if record["asr"] == UNDEFINED else float(record["asr"])
        return EvalRow(
            m=int(record["m"]),
            epsilon_train=float(record["epsilon_train"]),
            attack=record["attack"],
            epsilon_attack=float(record["epsilon_attack"]),
            eot_samples=int(record["eot_samples"]),
            clean_accuracy=float(record["clean_accuracy"]),
            asr=asr,
            memory_bytes=int(record["memory_bytes"]),
            master_seed=int(record["master_seed"]),
            attack_seed=int(record["attack_seed"]),
            wall_time=float(record["wall_time"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"Ligne {line} du rapport invalide : {exc}") from exc


def read_csv(path: Union[str, Path]) -> EvalReport:
    """Relit un rapport CSV émis par emit_csv"""
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames != FIELDNAMES:
            raise FormatError(f"{path} : en-tête inattendu {reader.fieldnames}")
        rows = [_parse(record, line) for line, record in enumerate(reader, start=2)]
    return EvalReport(rows)
