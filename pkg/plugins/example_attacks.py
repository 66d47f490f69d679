from __future__ import annotations

from typing import List

import numpy as np

from robustlens.attacks import BudgetSpec, EdgeOp, PerturbationPlan, resolve_budget
from robustlens.graph import Graph
from robustlens.registry import Attack, AttackContext


def get_attacks() -> List[Attack]:
    return [
        Attack(
            tag="high-degree",
            title="Connect to the highest-degree different-class nodes",
            adaptive=False,
            plan=_high_degree,
        )
    ]


def _high_degree(g: Graph, v: int, budget: BudgetSpec, ctx: AttackContext) -> PerturbationPlan:
    y = g.labels[v]
    nbrs = set(g.neighbors(v).tolist())
    cand = np.array([u for u in range(g.n) if g.labels[u] != y and u not in nbrs], dtype=np.int64)
    order = cand[np.lexsort((cand, -g.degrees[cand]))] if cand.size else cand
    ops = tuple(EdgeOp.insert(v, int(u)) for u in order[: resolve_budget(g, v, budget)])
    return PerturbationPlan(target=v, ops=ops, attack_tag="high-degree")
