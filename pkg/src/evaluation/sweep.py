"""
Balayage - Grille (graine maître, ε_train, M) × attaques, avec cache de checkpoints

Chaque cellule (M, ε_train) réutilise les sous-modèles déjà entraînés : le cache
est indexé par (architecture, empreinte du jeu, ε_train, graine du sous-modèle,
empreinte des hyper-paramètres). Un pool M = 4 partage donc ses deux premiers
sous-modèles avec le pool M = 2 de même graine maître.
"""
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, List, Optional, Tuple, Union

from attacks.config import AttackConfig
from core.errors import ArgumentError, FormatError
from core.utils import Timer, sha256_bytes
from dataio.dataset import Dataset
from defense.switching import SwitchingPool, build_pool, pool_memory_bytes
from evaluation.metrics import EvalProtocol, eval_asr, eval_clean, protocol_slice
from evaluation.report import EvalReport, EvalRow, emit_csv, read_csv
from numeric.architecture import Architecture
from numeric.model import Model
from training.checkpoint import load_model, save_model
from training.trainer import TrainConfig

logger = logging.getLogger(__name__)

RowHook = Callable[[EvalRow], None]


class CheckpointCache:
    """Checkpoints rangés sous root/<architecture>/<jeu>/<réglages>/"""

    def __init__(self, root: Union[str, Path]):
        self.root = Path(root)
        self.hits = 0
        self.misses = 0

    def path_for(self, arch: Architecture, dataset: Dataset, config: TrainConfig) -> Path:
        arch_hash = sha256_bytes(arch.key().encode())[:12]
        return (self.root / f"{arch.name}-{arch_hash}" / dataset.fingerprint()[:16]
                / config.fingerprint()
                / f"eps{config.epsilon_train:.6f}_seed{int(config.seed)}.ckpt")

    def lookup(self, arch: Architecture, dataset: Dataset, config: TrainConfig) -> Optional[Model]:
        path = self.path_for(arch, dataset, config)
        if not path.exists():
            self.misses += 1
            return None
        try:
            model = load_model(path, arch)
        except FormatError:
            logger.warning("Checkpoint illisible ignoré : %s", path)
            self.misses += 1
            return None
        self.hits += 1
        logger.info("Cache : sous-modèle retrouvé (%s)", path.name)
        return model

    def store(self, arch: Architecture, dataset: Dataset, config: TrainConfig,
              model: Model) -> Path:
        path = self.path_for(arch, dataset, config)
        path.parent.mkdir(parents=True, exist_ok=True)
        save_model(model, path)
        return path


@dataclass
class SweepGrid:
    m_values: List[int]
    epsilon_train_values: List[float]
    attacks: List[AttackConfig]
    master_seeds: List[int] = field(default_factory=lambda: [0])

    def __post_init__(self):
        if not (self.m_values and self.epsilon_train_values and self.attacks
                and self.master_seeds):
            raise ArgumentError("Grille de balayage vide")
        if min(self.m_values) < 1:
            raise ArgumentError(f"Le pool exige M ≥ 1 (reçu {min(self.m_values)})")

    def __len__(self) -> int:
        return (len(self.m_values) * len(self.epsilon_train_values) * len(self.attacks)
                * len(self.master_seeds))


def evaluate_row(pool: SwitchingPool, attack: AttackConfig, test_set: Dataset,
                 protocol: EvalProtocol) -> EvalRow:
    """Une ligne du rapport : précision propre, ASR et mémoire du pool"""
    with Timer() as timer:
        clean = eval_clean(pool, protocol_slice(test_set, protocol))
        result = eval_asr(pool, attack, test_set, protocol)
    return EvalRow(
        m=pool.M,
        epsilon_train=pool.epsilon_train,
        attack=attack.label,
        epsilon_attack=attack.epsilon,
        eot_samples=attack.eot_samples,
        clean_accuracy=clean,
        asr=result.asr,
        memory_bytes=pool_memory_bytes(pool),
        master_seed=pool.master_seed,
        attack_seed=attack.seed,
        wall_time=timer.elapsed(),
    )


def sweep(grid: SweepGrid, arch: Architecture, train_set: Dataset, test_set: Dataset,
          train_config: TrainConfig, protocol: Optional[EvalProtocol] = None,
          cache: Optional[CheckpointCache] = None, workers: int = 1,
          csv_path: Optional[Union[str, Path]] = None, resume: bool = False,
          on_row: Optional[RowHook] = None) -> EvalReport:
    """
    Entraîne ou recharge un pool par cellule (M, ε_train) et l'évalue contre chaque attaque

    Args:
        csv_path: Rapport réécrit après chaque ligne terminée
        resume: Les lignes déjà présentes dans csv_path ne sont pas recalculées

    Returns:
        EvalReport trié
    """
    protocol = protocol or EvalProtocol()
    rows: List[EvalRow] = []
    if resume and csv_path is not None and Path(csv_path).exists():
        rows = read_csv(csv_path).rows
        logger.info("Reprise : %d ligne(s) déjà calculée(s)", len(rows))
    done = {row.key for row in rows}

    for master_seed in grid.master_seeds:
        for eps_train in grid.epsilon_train_values:
            config = replace(train_config, epsilon_train=float(eps_train), inner_step_size=None)
            for m in grid.m_values:
                pending = [a for a in grid.attacks
                           if _row_key(m, eps_train, a, master_seed) not in done]
                if not pending:
                    continue
                pool = build_pool(arch, train_set, m, config, master_seed, workers, cache)
                for attack in pending:
                    row = evaluate_row(pool, attack, test_set, protocol)
                    rows.append(row)
                    done.add(row.key)
                    if csv_path is not None:
                        emit_csv(rows, csv_path)
                    if on_row is not None:
                        on_row(row)
    return EvalReport(rows).sorted()


def _row_key(m: int, eps_train: float, attack: AttackConfig, master_seed: int) -> Tuple:
    return (m, round(float(eps_train), 6), attack.label, round(attack.epsilon, 6),
            attack.eot_samples, master_seed, attack.seed)
