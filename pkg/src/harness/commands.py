"""
Commandes - train, attack, eval, sweep, report

Chaque commande reçoit une RunConfig effective, écrit ses artefacts dans le
dossier de sortie et termine par un manifeste d'exécution.
"""
import logging
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np

from attacks.batch import IterationAuditor, attack_batch, audit_perturbation, dump_adversarial_batch
from attacks.oracle import make_oracle
from core import ui
from core.errors import ArgumentError, ConfigError
from core.utils import Timer, format_bytes, format_number, format_time
from dataio.dataset import Dataset
from dataio.loaders import load_dataset
from dataio.sampling import subset
from defense.pool_manifest import load_pool, save_pool
from defense.switching import SwitchingPool, build_pool, pool_memory_bytes
from evaluation.metrics import eligible_indices, protocol_slice, success_scores
from evaluation.plots import plot_asr_vs_epsilon, plot_tradeoff
from evaluation.report import EvalReport, emit_csv, read_csv
from evaluation.sweep import CheckpointCache, evaluate_row, sweep
from harness.manifest import write_run_manifest
from harness.run_config import RunConfig
from numeric.architecture import Architecture, build_architecture, parameter_count
from training.trainer import accuracy

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def load_datasets(config: RunConfig) -> Tuple[Architecture, Dataset, Dataset]:
    """Architecture, jeu d'entraînement et jeu de test décrits par la section [dataset]"""
    ds = config["dataset"]
    common = dict(directory=ds["directory"], num_classes=ds["num_classes"], side=ds["side"],
                  seed=ds["seed"])
    train_set = load_dataset(ds["id"], "train", images_path=ds["train_images"],
                             labels_path=ds["train_labels"], batch_paths=ds["train_batches"],
                             per_class=ds["per_class"], **common)
    test_set = load_dataset(ds["id"], "test", images_path=ds["test_images"],
                            labels_path=ds["test_labels"], batch_paths=ds["test_batches"],
                            per_class=ds["test_per_class"], **common)
    if ds["train_size"] < 0 or ds["test_size"] < 0:
        raise ConfigError("dataset.train_size et dataset.test_size doivent être ≥ 0")
    if 0 < ds["train_size"] < len(train_set):
        train_set = subset(train_set, ds["train_size"], ds["seed"])
    if 0 < ds["test_size"] < len(test_set):
        test_set = subset(test_set, ds["test_size"], ds["seed"])

    arch = build_architecture(ds["id"], train_set.input_shape, train_set.num_classes)
    logger.info("Jeux chargés : %d exemples d'entraînement, %d de test (%s)",
                len(train_set), len(test_set), ds["id"])
    return arch, train_set, test_set


def _manifest_path(config: RunConfig, manifest: Optional[PathLike]) -> Path:
    path = manifest or config["pool"]["manifest"] or config.output_dir / "pool.manifest"
    return Path(path)


def _load_pool(config: RunConfig, manifest: Optional[PathLike]) -> Tuple[SwitchingPool, Path]:
    path = _manifest_path(config, manifest)
    if not path.exists():
        raise FileNotFoundError(f"Manifeste de pool introuvable : {path}")
    pool = load_pool(path)
    ui.display_info(f"Pool chargé : M = {pool.M}, ε_train = {pool.epsilon_train:.4f} ({path})")
    return pool, path


# ═══════════════════════════════════════════════════════════════
#  TRAIN
# ═══════════════════════════════════════════════════════════════

def cmd_train(config: RunConfig) -> Path:
    """Entraîne (ou retrouve en cache) les M sous-modèles et écrit le manifeste du pool"""
    pool_section = config["pool"]
    m = pool_section["m"]
    if m < 1:
        raise ArgumentError(f"Le pool exige M ≥ 1 (reçu {m})")
    arch, train_set, test_set = load_datasets(config)
    train_config = config.train_config()
    cache = CheckpointCache(config.cache_dir)
    rows = []

    def on_member(index, model, cached):
        rows.append([index, f"{model.init_seed:#018x}", f"{model.train_epsilon:.4f}",
                     f"{accuracy(model, train_set):.2%}", f"{accuracy(model, test_set):.2%}",
                     "cache" if cached else "entraîné"])

    ui.display_info(f"Architecture : {arch.describe()}")
    with Timer() as timer:
        pool = build_pool(arch, train_set, m, train_config, pool_section["master_seed"],
                          workers=config.workers, cache=cache, on_member=on_member)
        manifest = save_pool(pool, config.output_dir, "pool")

    ui.members_table(rows)
    ui.display_result_panel(
        "✅ Pool AdvMS",
        f"M = {pool.M}\nε_train = {pool.epsilon_train:.4f}\n"
        f"Paramètres : {format_number(parameter_count(arch))} par sous-modèle\n"
        f"Mémoire : {format_bytes(pool_memory_bytes(pool))}\n"
        f"Cache : {cache.hits} trouvé(s), {cache.misses} entraîné(s)\n"
        f"Durée : {format_time(timer.elapsed())}\nManifeste : {manifest}")

    artifacts = {"pool": manifest}
    artifacts.update({f"member.{i}": manifest.parent / f"pool_member_{i}.ckpt"
                      for i in range(pool.M)})
    seeds = {"master": pool.master_seed, "dataset": config["dataset"]["seed"]}
    seeds.update({f"member.{i}": model.init_seed for i, model in enumerate(pool.models)})
    write_run_manifest(config, "train", config.output_dir, artifacts, seeds, timer.elapsed())
    return manifest


# ═══════════════════════════════════════════════════════════════
#  ATTACK
# ═══════════════════════════════════════════════════════════════

def cmd_attack(config: RunConfig, manifest: Optional[PathLike] = None) -> Path:
    """
    Attaque la tranche de test et exporte le lot adversarial de la première attaque configurée

    Chaque itéré est audité (boule L∞ et boîte [0, 1]), pas seulement la sortie finale.
    """
    pool, pool_path = _load_pool(config, manifest)
    _, _, test_set = load_datasets(config)
    protocol = config.protocol()
    attack = config.attack_configs()[0]
    if len(config.attack_configs()) > 1:
        logger.warning("Plusieurs attaques configurées : seule %s ε=%.4f est exportée",
                       attack.label, attack.epsilon)
    test_slice = protocol_slice(test_set, protocol)

    auditor = IterationAuditor(attack.epsilon)
    with Timer() as timer:
        oracle = make_oracle(pool, attack)
        x_adv = attack_batch(oracle, test_slice.images, test_slice.labels, attack,
                             on_iterate=auditor)
    audit = audit_perturbation(test_slice.images, x_adv, attack.epsilon)

    eligible = eligible_indices(pool, test_slice)
    asr = None
    if eligible.size:
        asr = float(np.mean(success_scores(pool, x_adv[eligible], test_slice.labels[eligible])))

    output = config.output_dir / f"adversarial_{attack.kind}.advb"
    output.parent.mkdir(parents=True, exist_ok=True)
    dump_adversarial_batch(x_adv, output)

    ui.display_table("🔒 Audit des contraintes", ["Contrôle", "Valeur"], [
        ["Attaque", attack.label],
        ["ε_attack", f"{attack.epsilon:.6f}"],
        ["Exemples", audit.count],
        ["Itérés audités", auditor.iterates],
        ["max ‖x_adv − x‖∞", f"{max(audit.max_linf, auditor.max_linf):.6f}"],
        ["Violations boule L∞", audit.ball_violations + auditor.ball_violations],
        ["Violations boîte [0, 1]", audit.box_violations + auditor.box_violations],
        ["Exemples éligibles", eligible.size],
        ["ASR", "indéfini" if asr is None else f"{asr:.2%}"],
    ])
    if audit.ok and auditor.ok:
        ui.display_success(f"Contraintes respectées, lot écrit : {output}")
    else:
        ui.display_warning("Contraintes violées : voir l'audit ci-dessus")

    seeds = {"attack": attack.seed, "master": pool.master_seed, "eval": protocol.seed}
    write_run_manifest(config, "attack", config.output_dir,
                       {"pool": pool_path, "adversarial": output}, seeds, timer.elapsed())
    return output


# ═══════════════════════════════════════════════════════════════
#  EVAL
# ═══════════════════════════════════════════════════════════════

def cmd_eval(config: RunConfig, manifest: Optional[PathLike] = None) -> EvalReport:
    """Une ligne de rapport par attaque configurée contre le pool du manifeste"""
    pool, pool_path = _load_pool(config, manifest)
    _, _, test_set = load_datasets(config)
    protocol = config.protocol()
    attacks = config.attack_configs()

    rows = []
    with Timer() as timer, ui.make_progress() as progress:
        task = progress.add_task("Évaluation", total=len(attacks))
        for attack in attacks:
            rows.append(evaluate_row(pool, attack, test_set, protocol))
            progress.advance(task)
    report = EvalReport(rows).sorted()

    csv_path = config.output_dir / "eval.csv"
    emit_csv(report, csv_path)
    ui.report_table(report)
    ui.display_success(f"Rapport écrit : {csv_path}")

    seeds = {"master": pool.master_seed, "eval": protocol.seed}
    seeds.update({f"attack.{i}": a.seed for i, a in enumerate(attacks)})
    write_run_manifest(config, "eval", config.output_dir,
                       {"pool": pool_path, "report": csv_path}, seeds, timer.elapsed())
    return report


# ═══════════════════════════════════════════════════════════════
#  SWEEP
# ═══════════════════════════════════════════════════════════════

def _emit_plots(report: EvalReport, directory: Path) -> dict:
    if not any(row.asr is not None for row in report.rows):
        ui.display_warning("Aucun ASR défini : graphiques non générés")
        return {}
    return {"plot.asr_vs_epsilon": plot_asr_vs_epsilon(report, directory),
            "plot.tradeoff": plot_tradeoff(report, directory)}


def cmd_sweep(config: RunConfig) -> EvalReport:
    """Grille complète (graine maître × ε_train × M × attaques) avec reprise"""
    grid = config.grid()
    arch, train_set, test_set = load_datasets(config)
    cache = CheckpointCache(config.cache_dir)
    csv_path = config.output_dir / "sweep.csv"
    ui.display_info(f"Balayage : {len(grid)} ligne(s) au total")

    with Timer() as timer, ui.make_progress() as progress:
        task = progress.add_task("Balayage", total=len(grid))
        report = sweep(grid, arch, train_set, test_set, config.train_config(),
                       protocol=config.protocol(), cache=cache, workers=config.workers,
                       csv_path=csv_path, resume=config["sweep"]["resume"],
                       on_row=lambda row: progress.advance(task))
    emit_csv(report, csv_path)
    ui.report_table(report)

    artifacts = {"report": csv_path}
    if config["output"]["plots"]:
        artifacts.update(_emit_plots(report, config.output_dir))
    ui.display_success(f"{len(report)} ligne(s) écrites dans {csv_path} "
                       f"(cache : {cache.hits} trouvé(s), {cache.misses} entraîné(s))")

    seeds = {f"master.{i}": s for i, s in enumerate(grid.master_seeds)}
    seeds.update({"dataset": config["dataset"]["seed"], "eval": config["eval"]["seed"],
                  "attack": config["attack"]["seed"]})
    write_run_manifest(config, "sweep", config.output_dir, artifacts, seeds, timer.elapsed())
    return report


# ═══════════════════════════════════════════════════════════════
#  REPORT
# ═══════════════════════════════════════════════════════════════

def cmd_report(config: RunConfig, csv_path: Optional[PathLike] = None) -> EvalReport:
    """Relit un rapport CSV, l'affiche et régénère les graphiques"""
    path = Path(csv_path) if csv_path else config.output_dir / "sweep.csv"
    if not path.exists():
        raise FileNotFoundError(f"Rapport introuvable : {path}")
    with Timer() as timer:
        report = read_csv(path).sorted()
        ui.report_table(report)
        artifacts = {"report": path}
        if config["output"]["plots"]:
            artifacts.update(_emit_plots(report, config.output_dir))
    write_run_manifest(config, "report", config.output_dir, artifacts, {}, timer.elapsed())
    return report
