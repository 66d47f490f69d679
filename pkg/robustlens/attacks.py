from __future__ import annotations

from dataclasses import dataclass
import json
import logging
import re
from typing import Any, Callable, Dict, List, Optional, Sequence, Set, Tuple, Union

import numpy as np

from .bayes import DELETE, INSERT, optimal_toggles
from .errors import EmptyCandidateError, ParameterError, PlanConflictError, RewireConflictError, UnsupportedError
from .graph import Graph
from .utils import derive_seed


logger = logging.getLogger(__name__)

NodePredictor = Callable[[Graph, int], np.ndarray]

DEFAULT_UNBOUNDED_CAP = 128


@dataclass(frozen=True)
class EdgeOp:
    kind: str
    endpoints: Tuple[int, int]

    def __post_init__(self) -> None:
        if self.kind not in (INSERT, DELETE):
            raise ParameterError(f"edge op kind must be {INSERT!r} or {DELETE!r}, got {self.kind!r}")
        a, b = self.endpoints
        if a == b:
            raise ParameterError(f"edge op endpoints must differ, got ({a},{b})")

    @classmethod
    def insert(cls, v: int, u: int) -> "EdgeOp":
        return cls(INSERT, (int(v), int(u)))

    @classmethod
    def delete(cls, v: int, u: int) -> "EdgeOp":
        return cls(DELETE, (int(v), int(u)))

    @property
    def pair(self) -> Tuple[int, int]:
        a, b = self.endpoints
        return (a, b) if a < b else (b, a)

    def other(self, target: int) -> int:
        a, b = self.endpoints
        return b if a == target else a


@dataclass(frozen=True)
class PerturbationPlan:
    target: int
    ops: Tuple[EdgeOp, ...]
    attack_tag: str

    def __len__(self) -> int:
        return len(self.ops)

    def prefix(self, k: int) -> "PerturbationPlan":
        return PerturbationPlan(target=self.target, ops=self.ops[:k], attack_tag=self.attack_tag)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "target": self.target,
            "attack_tag": self.attack_tag,
            "ops": [{"kind": op.kind, "u": op.other(self.target)} for op in self.ops],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "PerturbationPlan":
        target = int(data["target"])
        ops = tuple(EdgeOp(str(o["kind"]), (target, int(o["u"]))) for o in data["ops"])
        return cls(target=target, ops=ops, attack_tag=str(data.get("attack_tag", "")))


def apply_op(g: Graph, op: EdgeOp) -> Graph:
    i, j = op.pair
    if not (0 <= i < g.n and 0 <= j < g.n):
        raise PlanConflictError(f"edge ({i},{j}) out of range")
    present = g.has_edge(i, j)
    if op.kind == INSERT:
        if present:
            raise PlanConflictError(f"cannot insert ({i},{j}): edge already present")
        return g.with_edges(add=[(i, j)])
    if not present:
        raise PlanConflictError(f"cannot delete ({i},{j}): edge absent")
    return g.with_edges(remove=[(i, j)])


def apply_plan(g: Graph, plan: PerturbationPlan, steps: Optional[int] = None) -> Graph:
    """Replay the first ``steps`` ops (all by default) onto ``g``."""
    for op in plan.ops[: len(plan.ops) if steps is None else steps]:
        g = apply_op(g, op)
    return g


def replay(g: Graph, plan: PerturbationPlan, steps: Optional[int] = None):
    """Yield the graph after each replayed op."""
    for op in plan.ops[: len(plan.ops) if steps is None else steps]:
        g = apply_op(g, op)
        yield g


_BUDGET_RE = re.compile(r"^(?:b?(?P<fixed>\d+)|deg(?:\+(?P<plus>\d+))?|unbounded(?::(?P<cap>\d+))?)$")


@dataclass(frozen=True)
class BudgetSpec:
    """Local budget: ``fixed`` (value), ``degree``, ``degree_plus`` (value) or ``unbounded`` (cap)."""

    kind: str
    value: int = 0
    cap: int = DEFAULT_UNBOUNDED_CAP

    def __post_init__(self) -> None:
        if self.kind not in ("fixed", "degree", "degree_plus", "unbounded"):
            raise ParameterError(f"unknown budget kind {self.kind!r}")
        if self.kind == "fixed" and self.value < 0:
            raise ParameterError("fixed budget must be nonnegative")
        if self.kind == "degree_plus" and self.value < 1:
            raise ParameterError("degree_plus offset must be positive")
        if self.cap < 1:
            raise ParameterError("budget cap must be positive")

    @classmethod
    def fixed(cls, delta: int) -> "BudgetSpec":
        return cls("fixed", delta)

    @classmethod
    def degree(cls) -> "BudgetSpec":
        return cls("degree")

    @classmethod
    def degree_plus(cls, k: int) -> "BudgetSpec":
        return cls("degree_plus", k)

    @classmethod
    def unbounded(cls, cap: int = DEFAULT_UNBOUNDED_CAP) -> "BudgetSpec":
        return cls("unbounded", cap=cap)

    @classmethod
    def parse(cls, text: str | int) -> "BudgetSpec":
        if isinstance(text, int):
            return cls.fixed(text)
        m = _BUDGET_RE.match(str(text).strip().lower())
        if not m:
            raise ParameterError(f"cannot parse budget {text!r}; use N, deg, deg+k or unbounded[:cap]")
        if m.group("fixed") is not None:
            return cls.fixed(int(m.group("fixed")))
        if m.group("plus") is not None:
            return cls.degree_plus(int(m.group("plus")))
        if str(text).strip().lower().startswith("deg"):
            return cls.degree()
        return cls.unbounded(int(m.group("cap")) if m.group("cap") else DEFAULT_UNBOUNDED_CAP)

    @property
    def label(self) -> str:
        if self.kind == "fixed":
            return f"B{self.value}"
        if self.kind == "degree":
            return "Bdeg"
        if self.kind == "degree_plus":
            return f"Bdeg+{self.value}"
        return f"Bunbounded{self.cap}"

    def resolve(self, degree: int) -> int:
        if self.kind == "fixed":
            return self.value
        if self.kind == "degree":
            return int(degree)
        if self.kind == "degree_plus":
            return int(degree) + self.value
        return self.cap


Budget = Union[int, BudgetSpec]


def resolve_budget(g: Graph, v: int, budget: Budget) -> int:
    if isinstance(budget, BudgetSpec):
        return budget.resolve(g.degree(v))
    if budget < 0:
        raise ParameterError(f"budget must be nonnegative, got {budget}")
    return int(budget)


def _check_target(g: Graph, v: int) -> None:
    if not 0 <= v < g.n:
        raise ParameterError(f"target {v} out of range for {g.n} nodes")


def _insert_candidates(g: Graph, v: int, classes: np.ndarray) -> np.ndarray:
    """Nodes of the given classes not adjacent to ``v``; empty-class pools raise."""
    pool = np.flatnonzero(np.isin(g.labels, classes))
    pool = pool[pool != v]
    if pool.size == 0:
        raise EmptyCandidateError(f"no node of class {classes.tolist()} to connect node {v} to")
    adj = np.zeros(g.n, dtype=bool)
    adj[g.neighbors(v)] = True
    return pool[~adj[pool]]


def _other_classes(g: Graph, v: int) -> np.ndarray:
    y = int(g.labels[v])
    return np.array([c for c in range(g.num_classes) if c != y])


def _insert_plan(v: int, ordered: np.ndarray, budget: int, tag: str) -> PerturbationPlan:
    ops = tuple(EdgeOp.insert(v, int(u)) for u in ordered[:budget])
    return PerturbationPlan(target=v, ops=ops, attack_tag=tag)


def _by_distance(g: Graph, v: int, cand: np.ndarray, *, descending: bool, projection: Optional[np.ndarray] = None) -> np.ndarray:
    X = g.features if projection is None else g.features @ np.asarray(projection, dtype=float).T
    dist = np.linalg.norm(X[cand] - X[v], axis=1)
    order = np.lexsort((cand, -dist if descending else dist))
    return cand[order]


def plan_l2_weak(g: Graph, v: int, budget: Budget) -> PerturbationPlan:
    """Insert edges to the closest different-class nodes in feature space."""
    _check_target(g, v)
    cand = _insert_candidates(g, v, _other_classes(g, v))
    return _insert_plan(v, _by_distance(g, v, cand, descending=False), resolve_budget(g, v, budget), "l2-weak")


def plan_l2_strong(g: Graph, v: int, budget: Budget) -> PerturbationPlan:
    """Insert edges to the most distant different-class nodes in feature space."""
    _check_target(g, v)
    cand = _insert_candidates(g, v, _other_classes(g, v))
    return _insert_plan(v, _by_distance(g, v, cand, descending=True), resolve_budget(g, v, budget), "l2-strong")


def plan_dice(g: Graph, v: int, budget: Budget, seed: int) -> PerturbationPlan:
    """Random different-class insertions (DICE with the deletion share set to zero)."""
    _check_target(g, v)
    cand = _insert_candidates(g, v, _other_classes(g, v))
    rng = np.random.default_rng(derive_seed(seed, "dice", v))
    return _insert_plan(v, rng.permutation(cand), resolve_budget(g, v, budget), "dice")


def plan_optimal_bayes(g: Graph, v: int, budget: Budget) -> PerturbationPlan:
    """Toggles that lower the Bayes margin of ``v`` fastest."""
    if g.gen is None:
        raise UnsupportedError("the optimal Bayes attack needs the generative model")
    _check_target(g, v)
    toggles = optimal_toggles(g, v)[: resolve_budget(g, v, budget)]
    ops = tuple(EdgeOp(t.kind, (v, t.u)) for t in toggles)
    return PerturbationPlan(target=v, ops=ops, attack_tag="optimal-bayes")


def plan_per_class_l2(
    g: Graph,
    v: int,
    target_class: int,
    budget: Budget,
    projection: Optional[np.ndarray] = None,
) -> PerturbationPlan:
    """l2-weak restricted to one class, with distances measured after an optional linear map."""
    _check_target(g, v)
    if target_class == int(g.labels[v]):
        raise ParameterError(f"target class {target_class} equals the label of node {v}")
    if not 0 <= target_class < g.num_classes:
        raise ParameterError(f"target class {target_class} out of range")
    if projection is not None:
        P = np.asarray(projection, dtype=float)
        if P.ndim != 2 or P.shape[1] != g.d or not np.all(np.isfinite(P)):
            raise ParameterError(f"projection must be a finite d' x {g.d} matrix")
    cand = _insert_candidates(g, v, np.array([target_class]))
    ordered = _by_distance(g, v, cand, descending=False, projection=projection)
    return _insert_plan(v, ordered, resolve_budget(g, v, budget), f"per-class-l2:{target_class}")


def greedy_margin_attack(
    g: Graph,
    v: int,
    model_predict: NodePredictor,
    budget: Budget,
    candidates: Optional[Sequence[int]] = None,
) -> PerturbationPlan:
    """Adaptive attack: each step keeps the single toggle that most lowers the clean class probability.

    Ties go to insertions before deletions, then to the smaller node index. Each node
    pair is toggled at most once per plan.
    """
    _check_target(g, v)
    steps = resolve_budget(g, v, budget)
    clean = int(np.argmax(model_predict(g, v)))
    pool = np.arange(g.n) if candidates is None else np.unique(np.asarray(candidates, dtype=np.int64))
    pool = pool[pool != v]

    used: Set[int] = set()
    ops: List[EdgeOp] = []
    current = g
    for _ in range(steps):
        best: Optional[Tuple[float, int, int, Graph]] = None
        for u in pool.tolist():
            if u in used:
                continue
            op = EdgeOp(DELETE if current.has_edge(v, u) else INSERT, (v, u))
            trial = apply_op(current, op)
            score = (float(model_predict(trial, v)[clean]), 0 if op.kind == INSERT else 1, u)
            if best is None or score < best[:3]:
                best = (*score, trial)
        if best is None:
            break
        _, kind_rank, u, current = best
        used.add(u)
        ops.append(EdgeOp(INSERT if kind_rank == 0 else DELETE, (v, u)))
        if int(np.argmax(model_predict(current, v))) != clean:
            break
    return PerturbationPlan(target=v, ops=tuple(ops), attack_tag="greedy-margin")


def degree_preserving_rewire(g: Graph, e1: Tuple[int, int], e2: Tuple[int, int]) -> Graph:
    """Replace edges (i, j) and (u, w) with (i, w) and (u, j); every degree is kept."""
    (i, j), (u, w) = (int(e1[0]), int(e1[1])), (int(e2[0]), int(e2[1]))
    if not g.has_edge(i, j) or not g.has_edge(u, w):
        raise RewireConflictError(f"both edges must be present: ({i},{j}), ({u},{w})")
    if len({i, j, u, w}) != 4:
        raise RewireConflictError(f"edges ({i},{j}) and ({u},{w}) share a vertex")
    if g.has_edge(i, w) or g.has_edge(u, j):
        raise RewireConflictError(f"replacement edge ({i},{w}) or ({u},{j}) already present")
    return g.with_edges(remove=[(i, j), (u, w)], add=[(i, w), (u, j)])


def rewire_homophilic(g: Graph, rounds: int, seed: int, *, match_degrees: bool = False) -> Graph:
    """Repeatedly cross-wire a class-0 same-class edge with a class-1 same-class edge.

    With ``match_degrees`` the two edges must join nodes of equal degrees
    (``deg(i) == deg(u)`` and ``deg(j) == deg(w)``), which leaves the degree mixing
    matrix and hence the degree assortativity unchanged.
    """
    rng = np.random.default_rng(derive_seed(seed, "rewire"))
    done = 0
    attempts = 0
    while done < rounds and attempts < 50 * max(rounds, 1):
        attempts += 1
        y = g.labels
        edges = g.edge_array
        same0 = edges[(y[edges[:, 0]] == 0) & (y[edges[:, 1]] == 0)]
        same1 = edges[(y[edges[:, 0]] == 1) & (y[edges[:, 1]] == 1)]
        if len(same0) == 0 or len(same1) == 0:
            break
        i, j = (int(x) for x in same0[rng.integers(len(same0))])
        if match_degrees:
            deg = g.degrees
            fwd = same1[(deg[same1[:, 0]] == deg[i]) & (deg[same1[:, 1]] == deg[j])]
            rev = same1[(deg[same1[:, 1]] == deg[i]) & (deg[same1[:, 0]] == deg[j])][:, ::-1]
            pool = np.vstack([fwd, rev])
            if len(pool) == 0:
                continue
        else:
            pool = same1
        u, w = (int(x) for x in pool[rng.integers(len(pool))])
        try:
            g = degree_preserving_rewire(g, (i, j), (u, w))
        except RewireConflictError:
            continue
        done += 1
    logger.debug("rewired %d edge pairs in %d attempts", done, attempts)
    return g


def plan_is_local(plan: PerturbationPlan) -> bool:
    return all(plan.target in op.endpoints for op in plan.ops)
