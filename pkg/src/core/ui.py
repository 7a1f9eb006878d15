"""
Interface utilisateur CLI - Affichage rich des résultats
"""
from typing import Iterable, List, Sequence

from rich import box
from rich.console import Console
from rich.panel import Panel
from rich.progress import BarColumn, Progress, SpinnerColumn, TextColumn, TimeElapsedColumn
from rich.table import Table

console = Console()


def display_banner():
    """Affiche le banner de l'application"""
    banner = """
    ╔═══════════════════════════════════════════════════╗
    ║                                                   ║
    ║        🛡️  ADVMS - MODEL SWITCHING DEFENSE 🛡️       ║
    ║                                                   ║
    ║       Sous-modèles entraînés adversarialement     ║
    ║          activés aléatoirement à l'inférence      ║
    ║                                                   ║
    ╚═══════════════════════════════════════════════════╝
    """
    console.print(Panel(banner, style="bold cyan", border_style="bright_blue"))


def display_success(message: str):
    """Affiche un message de succès"""
    console.print(f"\n[bold green]✓ {message}[/bold green]\n")


def display_error(message: str):
    """Affiche un message d'erreur"""
    console.print(f"\n[bold red]✗ {message}[/bold red]\n")


def display_info(message: str):
    """Affiche un message d'information"""
    console.print(f"[bold blue]ℹ {message}[/bold blue]")


def display_warning(message: str):
    """Affiche un avertissement"""
    console.print(f"\n[bold yellow]⚠ {message}[/bold yellow]\n")


def display_result_panel(title: str, content: str, style: str = "green"):
    """Affiche les résultats dans un panel"""
    console.print()
    console.print(Panel(content, title=title, style=style, border_style="bright_" + style))
    console.print()


def display_table(title: str, columns: Sequence[str], rows: Iterable[Sequence],
                  header_style: str = "bold magenta"):
    """Tableau générique : une ligne par séquence de valeurs (converties en texte)"""
    table = Table(title=title, box=box.ROUNDED, show_header=True, header_style=header_style)
    for index, column in enumerate(columns):
        table.add_column(column, style="cyan" if index == 0 else "white",
                         justify="left" if index == 0 else "right")
    for row in rows:
        table.add_row(*[str(value) for value in row])
    console.print()
    console.print(table)
    console.print()


def members_table(rows: List[Sequence]):
    """Résumé des sous-modèles : indice, graine, ε_train, précisions, provenance"""
    display_table("🧠 Sous-modèles du pool",
                  ["#", "Graine", "ε_train", "Précision train", "Précision test", "Source"], rows,
                  header_style="bold green")


def report_table(report):
    """Tableau d'un EvalReport (une ligne par combinaison)"""
    rows = []
    for row in report.rows:
        asr = "indéfini" if row.asr is None else f"{row.asr:.2%}"
        rows.append([row.m, f"{row.epsilon_train:.4f}", row.attack, f"{row.epsilon_attack:.4f}",
                     f"{row.clean_accuracy:.2%}", asr, row.memory_bytes, row.master_seed,
                     f"{row.wall_time:.2f}s"])
    display_table("📊 Rapport d'évaluation",
                  ["M", "ε_train", "Attaque", "ε_attack", "Précision", "ASR", "Mémoire (o)",
                   "Graine", "Durée"], rows)


def make_progress() -> Progress:
    """Barre de progression partagée par les commandes longues"""
    return Progress(SpinnerColumn(), TextColumn("[progress.description]{task.description}"),
                    BarColumn(), TextColumn("{task.completed}/{task.total}"),
                    TimeElapsedColumn(), console=console)
