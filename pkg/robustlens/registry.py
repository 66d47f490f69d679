from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, Iterable, List, Optional

import numpy as np

from .attacks import BudgetSpec, NodePredictor, PerturbationPlan
from .errors import ConfigError
from .graph import Graph


@dataclass(frozen=True)
class AttackContext:
    seed: int = 0
    model_predict: Optional[NodePredictor] = None
    target_class: Optional[int] = None
    projection: Optional[np.ndarray] = None
    candidates: Optional[np.ndarray] = None


@dataclass(frozen=True)
class Attack:
    tag: str
    title: str
    adaptive: bool
    plan: Callable[[Graph, int, BudgetSpec, AttackContext], PerturbationPlan]


def resolve_attacks(tags: Iterable[str], available: Iterable[Attack]) -> List[Attack]:
    table: Dict[str, Attack] = {}
    for a in available:
        table[a.tag] = a
    out = []
    for tag in tags:
        if tag not in table:
            raise ConfigError(f"unknown attack tag {tag!r}; known: {sorted(table)}")
        out.append(table[tag])
    return out
