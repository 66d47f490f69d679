from __future__ import annotations

import hashlib
import importlib.util
import logging
from pathlib import Path
from types import ModuleType
from typing import Dict, Iterable, List

from .errors import ConfigError
from .registry import Attack


logger = logging.getLogger(__name__)


def load_plugins(paths: Iterable[str | Path]) -> List[Attack]:
    """Attacks from plugin files, in file order.

    A plugin exposes ``get_attacks()`` or ``ATTACKS``. Two plugins may not claim the same tag.
    """
    loaded: List[Attack] = []
    owner: Dict[str, Path] = {}
    for raw in paths:
        path = Path(raw)
        if not path.exists():
            raise FileNotFoundError(f"Plugin not found: {path}")
        if not path.is_file():
            raise ValueError(f"Plugin path is not a file: {path}")

        attacks = _attacks_of(_import_file(path), path)
        for a in attacks:
            if a.tag in owner:
                raise ConfigError(f"attack tag {a.tag!r} defined by both {owner[a.tag]} and {path}")
            owner[a.tag] = path
        logger.info("plugin %s: %s", path, ", ".join(a.tag for a in attacks) or "(no attacks)")
        loaded.extend(attacks)
    return loaded


def _import_file(path: Path) -> ModuleType:
    digest = hashlib.sha1(str(path.resolve()).encode("utf-8")).hexdigest()[:8]
    spec = importlib.util.spec_from_file_location(f"robustlens_plugin_{path.stem}_{digest}", str(path))
    if spec is None or spec.loader is None:
        raise ImportError(f"Unable to load plugin module: {path}")
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return module


def _attacks_of(module: ModuleType, path: Path) -> List[Attack]:
    factory = getattr(module, "get_attacks", None)
    if callable(factory):
        items = factory()
    elif hasattr(module, "ATTACKS"):
        items = getattr(module, "ATTACKS")
    else:
        raise AttributeError(f"Plugin must define get_attacks() or ATTACKS: {path}")

    if not isinstance(items, (list, tuple)):
        raise TypeError(f"{path}: expected a list of Attack, got {type(items).__name__}")
    for i, item in enumerate(items):
        if not isinstance(item, Attack):
            raise TypeError(f"{path}: item {i} is {type(item).__name__}, not Attack")
    return list(items)
