from __future__ import annotations

from typing import List

from .attacks import (
    BudgetSpec,
    PerturbationPlan,
    greedy_margin_attack,
    plan_dice,
    plan_l2_strong,
    plan_l2_weak,
    plan_optimal_bayes,
    plan_per_class_l2,
)
from .errors import ParameterError
from .graph import Graph
from .registry import Attack, AttackContext


def get_builtin_attacks() -> List[Attack]:
    return [
        Attack(
            tag="l2-weak",
            title="Connect to the closest different-class nodes",
            adaptive=False,
            plan=_l2_weak,
        ),
        Attack(
            tag="l2-strong",
            title="Connect to the most distant different-class nodes",
            adaptive=False,
            plan=_l2_strong,
        ),
        Attack(
            tag="dice",
            title="Random different-class insertions",
            adaptive=False,
            plan=_dice,
        ),
        Attack(
            tag="optimal-bayes",
            title="Toggles that flip the Bayes decision fastest",
            adaptive=False,
            plan=_optimal_bayes,
        ),
        Attack(
            tag="per-class-l2",
            title="Closest nodes of one selected class",
            adaptive=False,
            plan=_per_class_l2,
        ),
        Attack(
            tag="greedy-margin",
            title="Greedy single-toggle margin descent on the attacked model",
            adaptive=True,
            plan=_greedy_margin,
        ),
    ]


def _l2_weak(g: Graph, v: int, budget: BudgetSpec, ctx: AttackContext) -> PerturbationPlan:
    return plan_l2_weak(g, v, budget)


def _l2_strong(g: Graph, v: int, budget: BudgetSpec, ctx: AttackContext) -> PerturbationPlan:
    return plan_l2_strong(g, v, budget)


def _dice(g: Graph, v: int, budget: BudgetSpec, ctx: AttackContext) -> PerturbationPlan:
    return plan_dice(g, v, budget, ctx.seed)


def _optimal_bayes(g: Graph, v: int, budget: BudgetSpec, ctx: AttackContext) -> PerturbationPlan:
    return plan_optimal_bayes(g, v, budget)


def _per_class_l2(g: Graph, v: int, budget: BudgetSpec, ctx: AttackContext) -> PerturbationPlan:
    if ctx.target_class is None:
        # binary graphs have a single other class
        if g.num_classes != 2:
            raise ParameterError("per-class-l2 needs a target class on multi-class graphs")
        target_class = 1 - int(g.labels[v])
    else:
        target_class = ctx.target_class
    return plan_per_class_l2(g, v, target_class, budget, ctx.projection)


def _greedy_margin(g: Graph, v: int, budget: BudgetSpec, ctx: AttackContext) -> PerturbationPlan:
    if ctx.model_predict is None:
        raise ParameterError("greedy-margin needs the attacked model's predictor")
    return greedy_margin_attack(g, v, ctx.model_predict, budget, ctx.candidates)
