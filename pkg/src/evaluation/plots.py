"""
Graphiques - ASR en fonction de ε_attack, compromis robustesse / précision
"""
from collections import defaultdict
from pathlib import Path
from typing import Optional, Union

import matplotlib.pyplot as plt
import seaborn as sns

from core.errors import ArgumentError
from core.utils import save_plot
from evaluation.report import EvalReport

MARKERS = ("o", "s", "^", "D", "v", "P", "X", "*")


def _defined_rows(report: EvalReport):
    rows = [row for row in report.rows if row.asr is not None]
    if not rows:
        raise ArgumentError("Aucune ligne avec un ASR défini à tracer")
    return rows


def plot_asr_vs_epsilon(report: EvalReport, directory: Optional[Union[str, Path]] = None,
                        filename: str = "asr_vs_epsilon") -> str:
    """Une courbe par (M, ε_train, attaque) ; ASR moyen sur les graines"""
    rows = _defined_rows(report)
    curves = defaultdict(lambda: defaultdict(list))
    for row in rows:
        curves[(row.m, row.epsilon_train, row.attack)][row.epsilon_attack].append(row.asr)

    sns.set_theme(style="whitegrid")
    palette = sns.color_palette("husl", len(curves))
    fig, ax = plt.subplots(figsize=(10, 6))
    for color, ((m, eps_train, attack), points) in zip(palette, sorted(curves.items())):
        xs = sorted(points)
        ys = [sum(points[x]) / len(points[x]) for x in xs]
        ax.plot(xs, ys, "o-", color=color, linewidth=2, markersize=6,
                label=f"M={m}, ε_train={eps_train:.3f}, {attack}")
    ax.set_xlabel("ε_attack", fontsize=12)
    ax.set_ylabel("Taux de succès (ASR)", fontsize=12)
    ax.set_title("ASR selon la force de l'attaque", fontsize=14, fontweight="bold")
    ax.set_ylim(-0.02, 1.02)
    ax.legend(fontsize=8)
    plt.tight_layout()
    return save_plot(fig, filename, directory)


def plot_tradeoff(report: EvalReport, directory: Optional[Union[str, Path]] = None,
                  filename: str = "tradeoff") -> str:
    """
    ASR en fonction de la précision propre, une courbe par M

    Les points d'une même courbe diffèrent par ε_train ; un panneau pour les
    attaques en boîte blanche, un pour les attaques EOT.
    """
    rows = _defined_rows(report)
    panels = {"Boîte blanche": [r for r in rows if "+eot" not in r.attack],
              "EOT": [r for r in rows if "+eot" in r.attack]}
    panels = {title: panel for title, panel in panels.items() if panel}

    sns.set_theme(style="whitegrid")
    fig, axes = plt.subplots(1, len(panels), figsize=(7 * len(panels), 6), squeeze=False)
    for ax, (title, panel) in zip(axes[0], panels.items()):
        by_m = defaultdict(lambda: defaultdict(list))
        for row in panel:
            by_m[row.m][row.epsilon_train].append((row.clean_accuracy, row.asr))
        palette = sns.color_palette("deep", len(by_m))
        eps_values = sorted({row.epsilon_train for row in panel})
        for color, (m, cells) in zip(palette, sorted(by_m.items())):
            points = []
            for eps in sorted(cells):
                accs, asrs = zip(*cells[eps])
                points.append((sum(accs) / len(accs), sum(asrs) / len(asrs), eps))
            ax.plot([p[0] for p in points], [p[1] for p in points], "-", color=color,
                    linewidth=2, label=f"M={m}")
            for acc, asr, eps in points:
                marker = MARKERS[eps_values.index(eps) % len(MARKERS)]
                ax.plot(acc, asr, marker, color=color, markersize=8)
        ax.set_xlabel("Précision propre", fontsize=12)
        ax.set_ylabel("ASR", fontsize=12)
        ax.set_title(f"Compromis robustesse / précision ({title})", fontsize=13,
                     fontweight="bold")
        ax.legend(fontsize=9)
    plt.tight_layout()
    return save_plot(fig, filename, directory)
