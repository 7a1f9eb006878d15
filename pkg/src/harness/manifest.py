"""
Manifestes d'exécution - Configuration effective, graines et empreintes des artefacts
"""
import configparser
from pathlib import Path
from typing import Dict, Optional, Union

from core.utils import sha256_file
from harness.run_config import RunConfig

PathLike = Union[str, Path]


def write_run_manifest(config: RunConfig, command: str, directory: PathLike,
                       artifacts: Optional[Dict[str, PathLike]] = None,
                       seeds: Optional[Dict[str, int]] = None,
                       wall_time: float = 0.0) -> Path:
    """
    Écrit <directory>/<command>.manifest

    Le fichier reprend toutes les sections de la configuration (valeurs par défaut
    comprises) et ajoute une section [manifest] : il peut être relu comme configuration.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    parser = config.to_parser()
    section = {"command": command, "wall_time": f"{wall_time:.6f}"}
    for name, seed in sorted((seeds or {}).items()):
        section[f"seed.{name}"] = str(int(seed))
    for name, path in sorted((artifacts or {}).items()):
        section[f"artifact.{name}"] = str(path)
        section[f"artifact.{name}.sha256"] = sha256_file(path)
    parser["manifest"] = section

    path = directory / f"{command}.manifest"
    with open(path, "w", encoding="utf-8") as f:
        parser.write(f)
    return path


def read_manifest_section(path: PathLike) -> Dict[str, str]:
    """Section [manifest] d'un manifeste d'exécution"""
    parser = configparser.ConfigParser(interpolation=None)
    with open(path, encoding="utf-8") as f:
        parser.read_file(f)
    return dict(parser["manifest"]) if parser.has_section("manifest") else {}
