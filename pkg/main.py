"""
AdvMS - Point d'entrée principal
Défense par commutation de modèles entraînés adversarialement
"""
import sys
from pathlib import Path

# Ajout du chemin src/ au PYTHONPATH
sys.path.insert(0, str(Path(__file__).parent / "src"))

# Configuration automatique de l'environnement
from config import check_permissions, configure_matplotlib, ensure_directories

configure_matplotlib()
ensure_directories()
if not check_permissions():
    print("❌ Erreur: Permissions d'écriture insuffisantes")
    print("Vérifiez les permissions des dossiers data/ et reports/")
    sys.exit(4)

from core import ui
from harness.cli import app


def main():
    """Lance l'application typer (train, attack, eval, sweep, report)"""
    ui.display_banner()
    app(prog_name="advms")


if __name__ == "__main__":
    main()
