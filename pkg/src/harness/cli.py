"""
Interface en ligne de commande - train, attack, eval, sweep, report
"""
import logging
from pathlib import Path
from typing import Callable, List, Optional

import typer

from config import configure_logging
from core import ui
from core.errors import EXIT_INTERRUPTED, exit_code_for
from harness import commands
from harness.run_config import RunConfig

logger = logging.getLogger(__name__)

app = typer.Typer(
    name="advms",
    help="AdvMS : pool de sous-modèles entraînés adversarialement, activés aléatoirement",
    add_completion=False,
    no_args_is_help=True,
)

# Rempli par le callback global, lu par les sous-commandes
_state = {"config": None, "overrides": []}

ManifestOption = typer.Option(None, "--manifest", "-m",
                              help="Manifeste du pool (défaut : pool.manifest ou <sortie>/pool.manifest)")


@app.callback()
def main(
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Journalisation détaillée (debug)"),
    config: Optional[Path] = typer.Option(None, "--config", "-c", help="Fichier de configuration INI"),
    overrides: List[str] = typer.Option([], "--set", "-s",
                                        help="Surcharge section.clé=valeur (répétable)"),
):
    """Options globales communes à toutes les sous-commandes"""
    configure_logging(logging.DEBUG if verbose else logging.INFO)
    _state["config"] = config
    _state["overrides"] = list(overrides)


def _run(action: Callable[[RunConfig], object]) -> None:
    """Charge la configuration, exécute la commande et traduit les erreurs en codes de sortie"""
    try:
        run_config = RunConfig.load(_state["config"], _state["overrides"])
        action(run_config)
    except KeyboardInterrupt:
        ui.display_warning("Interrompu")
        raise typer.Exit(EXIT_INTERRUPTED)
    except Exception as exc:
        code = exit_code_for(exc)
        logger.debug("Détail de l'erreur", exc_info=True)
        ui.display_error(f"{type(exc).__name__} : {exc}")
        raise typer.Exit(code)


@app.command()
def train():
    """Entraîne les M sous-modèles et écrit le manifeste du pool"""
    _run(commands.cmd_train)


@app.command()
def attack(manifest: Optional[Path] = ManifestOption):
    """Attaque la tranche de test, audite les contraintes et exporte le lot adversarial"""
    _run(lambda config: commands.cmd_attack(config, manifest))


@app.command("eval")
def evaluate(manifest: Optional[Path] = ManifestOption):
    """Précision propre, ASR et mémoire du pool pour chaque attaque configurée"""
    _run(lambda config: commands.cmd_eval(config, manifest))


@app.command()
def sweep():
    """Balayage complet M × ε_train × attaques, CSV et graphiques"""
    _run(commands.cmd_sweep)


@app.command()
def report(csv_path: Optional[Path] = typer.Argument(None, help="Rapport CSV (défaut : <sortie>/sweep.csv)")):
    """Affiche un rapport CSV existant et régénère les graphiques"""
    _run(lambda config: commands.cmd_report(config, csv_path))
