"""
Manifeste de pool - Fichier texte listant les checkpoints des sous-modèles
"""
import configparser
import logging
from pathlib import Path
from typing import Union

from core.errors import ConfigError, FormatError
from core.utils import sha256_file
from defense.switching import SwitchingPool
from numeric.architecture import ARCH_IDS, ARCH_NAMES, build_architecture
from training.checkpoint import load_model, save_model

logger = logging.getLogger(__name__)

SECTION = "pool"
MEMBER_PREFIX = "member."


def save_pool(pool: SwitchingPool, directory: Union[str, Path],
              name: str = "pool") -> Path:
    """
    Écrit un checkpoint par sous-modèle et le manifeste du pool

    Returns:
        Chemin du manifeste (<directory>/<name>.manifest)
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    arch = pool.architecture
    parser = configparser.ConfigParser(interpolation=None)
    parser[SECTION] = {
        "architecture": arch.name,
        "architecture_id": str(arch.arch_id),
        "input_shape": ",".join(str(d) for d in arch.input_shape),
        "classes": str(arch.num_classes),
        "m": str(pool.M),
        "epsilon_train": repr(float(pool.epsilon_train)),
        "master_seed": str(pool.master_seed),
    }
    members = {}
    for index, model in enumerate(pool.models):
        filename = f"{name}_member_{index}.ckpt"
        save_model(model, directory / filename)
        members[f"{MEMBER_PREFIX}{index}.path"] = filename
        members[f"{MEMBER_PREFIX}{index}.sha256"] = sha256_file(directory / filename)
    parser["members"] = members

    manifest = directory / f"{name}.manifest"
    with open(manifest, "w", encoding="utf-8") as f:
        parser.write(f)
    logger.info("Pool de %d sous-modèle(s) écrit : %s", pool.M, manifest)
    return manifest


def load_pool(manifest: Union[str, Path]) -> SwitchingPool:
    """
    Relit un pool et vérifie empreintes et homogénéité

    Raises:
        OSError: manifeste ou checkpoint introuvable
        FormatError: manifeste incomplet ou empreinte différente
        ConfigError: sous-modèles hétérogènes
    """
    manifest = Path(manifest)
    parser = configparser.ConfigParser(interpolation=None)
    with open(manifest, encoding="utf-8") as f:
        parser.read_file(f)
    try:
        section = parser[SECTION]
        members = parser["members"]
        name = section["architecture"]
        arch_id = int(section["architecture_id"])
        input_shape = tuple(int(d) for d in section["input_shape"].split(","))
        classes = int(section["classes"])
        m = int(section["m"])
        epsilon_train = float(section["epsilon_train"])
        master_seed = int(section["master_seed"])
    except (KeyError, ValueError) as exc:
        raise FormatError(f"{manifest} : manifeste incomplet ou invalide ({exc})") from exc
    if ARCH_IDS.get(name) != arch_id or arch_id not in ARCH_NAMES:
        raise FormatError(f"{manifest} : architecture {name!r} / identifiant {arch_id} incohérents")

    try:
        arch = build_architecture(name, input_shape, classes)
    except ConfigError as exc:
        raise FormatError(f"{manifest} : architecture non reconstructible ({exc})") from exc

    models = []
    for index in range(m):
        try:
            filename = members[f"{MEMBER_PREFIX}{index}.path"]
            expected_hash = members[f"{MEMBER_PREFIX}{index}.sha256"]
        except KeyError as exc:
            raise FormatError(f"{manifest} : sous-modèle {index} absent du manifeste") from exc
        path = Path(filename)
        if not path.is_absolute():
            path = manifest.parent / path
        if sha256_file(path) != expected_hash:
            raise FormatError(f"{path} : empreinte sha256 différente du manifeste")
        models.append(load_model(path, arch))
    return SwitchingPool(models, epsilon_train, master_seed)
