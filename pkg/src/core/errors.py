"""
Hiérarchie d'exceptions du projet
"""


class AdvMSError(Exception):
    """Erreur de base du simulateur AdvMS"""


class ConfigError(AdvMSError, ValueError):
    """Configuration invalide (clé inconnue, valeur hors bornes, identifiant non supporté)"""


class FormatError(AdvMSError, ValueError):
    """Fichier mal formé (nombre magique, taille, troncature)"""


class ShapeError(AdvMSError, ValueError):
    """Dimensions de tenseur incompatibles avec l'architecture"""


class ArgumentError(AdvMSError, ValueError):
    """Argument invalide passé à une opération (lot vide, M < 1, n > N...)"""


# Codes de sortie de la CLI
EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_CONFIG = 2
EXIT_FORMAT = 3
EXIT_IO = 4
EXIT_ARGUMENT = 5
EXIT_SHAPE = 6
EXIT_INTERRUPTED = 130


def exit_code_for(error: BaseException) -> int:
    """Associe une exception à son code de sortie"""
    if isinstance(error, ConfigError):
        return EXIT_CONFIG
    if isinstance(error, FormatError):
        return EXIT_FORMAT
    if isinstance(error, ArgumentError):
        return EXIT_ARGUMENT
    if isinstance(error, ShapeError):
        return EXIT_SHAPE
    if isinstance(error, OSError):
        return EXIT_IO
    if isinstance(error, KeyboardInterrupt):
        return EXIT_INTERRUPTED
    return EXIT_UNEXPECTED
