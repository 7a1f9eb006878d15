"""
Configuration pour AdvMS
"""

import logging
import os
import platform
from pathlib import Path

from rich.logging import RichHandler

# Configuration globale
PROJECT_ROOT = Path(__file__).parent


def data_dir() -> Path:
    """Dossier de données : $ADVMS_DATA_DIR, sinon data/ à la racine du projet"""
    return Path(os.environ.get("ADVMS_DATA_DIR") or PROJECT_ROOT / "data")


DATA_DIR = data_dir()
REPORTS_DIR = PROJECT_ROOT / "reports"

# Configuration matplotlib selon l'OS
def configure_matplotlib():
    """Configure matplotlib selon l'environnement (les graphiques sont toujours écrits sur disque)"""
    import matplotlib

    if os.environ.get('CI') or os.environ.get('GITHUB_ACTIONS'):
        matplotlib.use('Agg')
        return 'Agg'
    if platform.system() in ('Darwin', 'Windows') or os.environ.get('DISPLAY'):
        try:
            matplotlib.use('TkAgg')
            return 'TkAgg'
        except ImportError:
            matplotlib.use('Agg')
            return 'Agg'
    matplotlib.use('Agg')
    return 'Agg'

# Configuration des chemins
def ensure_directories():
    """S'assure que tous les dossiers existent"""
    DATA_DIR.mkdir(parents=True, exist_ok=True)
    REPORTS_DIR.mkdir(exist_ok=True)

# Configuration des permissions
def check_permissions():
    """Vérifie les permissions d'écriture"""
    test_files = [
        REPORTS_DIR / ".test_write",
        DATA_DIR / ".test_write"
    ]

    permissions_ok = True
    for test_file in test_files:
        try:
            test_file.touch()
            test_file.unlink()
        except PermissionError:
            permissions_ok = False
            break

    return permissions_ok

# Configuration du logging
def configure_logging(level: int = logging.INFO):
    """Un seul RichHandler sur le logger racine (appel répété sans doublon)"""
    from core.ui import console

    root = logging.getLogger()
    for handler in list(root.handlers):
        if isinstance(handler, RichHandler):
            root.removeHandler(handler)
    root.addHandler(RichHandler(console=console, show_path=False, rich_tracebacks=True))
    root.setLevel(level)
