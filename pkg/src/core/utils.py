"""
Utilitaires communs
"""
import hashlib
import time
from pathlib import Path
from typing import Optional, Union

import matplotlib.pyplot as plt

MASK64 = (1 << 64) - 1


def ensure_reports_dir(directory: Optional[Union[str, Path]] = None) -> Path:
    """
    Crée le dossier de sortie s'il n'existe pas

    Args:
        directory: Dossier cible (None = reports/ à la racine du projet)

    Returns:
        Path vers le dossier
    """
    if directory is None:
        directory = Path(__file__).parent.parent.parent / "reports"
    reports_dir = Path(directory)
    reports_dir.mkdir(parents=True, exist_ok=True)
    return reports_dir


def save_plot(fig, filename: str, directory: Optional[Union[str, Path]] = None) -> str:
    """
    Sauvegarde un graphique matplotlib

    Args:
        fig: Figure matplotlib
        filename: Nom du fichier (sans extension)
        directory: Dossier de sortie (None = reports/)

    Returns:
        Chemin complet du fichier sauvegardé
    """
    reports_dir = ensure_reports_dir(directory)
    filepath = reports_dir / f"{filename}.png"

    fig.savefig(filepath, dpi=150, bbox_inches='tight')
    plt.close(fig)

    return str(filepath)


def format_time(seconds: float) -> str:
    """
    Formate un temps en secondes de manière lisible

    Args:
        seconds: Temps en secondes

    Returns:
        Chaîne formatée (ex: "2.35s", "1m 23s", "1h 5m")
    """
    if seconds < 1:
        return f"{seconds*1000:.2f}ms"
    elif seconds < 60:
        return f"{seconds:.2f}s"
    elif seconds < 3600:
        minutes = int(seconds // 60)
        secs = int(seconds % 60)
        return f"{minutes}m {secs}s"
    else:
        hours = int(seconds // 3600)
        minutes = int((seconds % 3600) // 60)
        return f"{hours}h {minutes}m"


def format_number(num: int) -> str:
    """
    Formate un grand nombre avec des séparateurs

    Args:
        num: Nombre à formater

    Returns:
        Chaîne formatée avec espaces (ex: "1 000 000")
    """
    return f"{num:,}".replace(",", " ")


def format_bytes(num_bytes: int) -> str:
    """Formate une taille mémoire (ex: "1.19 Mo")"""
    value = float(num_bytes)
    for unit in ("o", "Ko", "Mo", "Go"):
        if value < 1024 or unit == "Go":
            return f"{value:.2f} {unit}" if unit != "o" else f"{int(value)} o"
        value /= 1024
    return f"{value:.2f} Go"


def sha256_bytes(payload: bytes) -> str:
    """Empreinte sha256 (hex) d'un bloc d'octets"""
    return hashlib.sha256(payload).hexdigest()


def sha256_file(path: Union[str, Path]) -> str:
    """Empreinte sha256 (hex) d'un fichier, lu par blocs"""
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def mix64(value: int) -> int:
    """Finaliseur splitmix64 : mélange bijectif d'un entier 64 bits"""
    z = (value + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


class Timer:
    """Classe utilitaire pour mesurer le temps d'exécution"""

    def __init__(self):
        self.start_time = None
        self.end_time = None

    def start(self):
        """Démarre le chronomètre"""
        self.start_time = time.perf_counter()
        self.end_time = None

    def stop(self):
        """Arrête le chronomètre"""
        self.end_time = time.perf_counter()

    def elapsed(self) -> float:
        """Retourne le temps écoulé en secondes"""
        if self.start_time is None:
            return 0.0
        if self.end_time is None:
            return time.perf_counter() - self.start_time
        return self.end_time - self.start_time

    def elapsed_str(self) -> str:
        """Retourne le temps écoulé formaté"""
        return format_time(self.elapsed())

    def __enter__(self):
        self.start()
        return self

    def __exit__(self, *exc):
        self.stop()
        return False
