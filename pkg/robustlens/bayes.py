"""Bayes optimal reference classifier for graphs drawn from a known CSBM or CBA.

All scores are class-conditional log-likelihoods of the target's feature row and
adjacency row given every other label; the uniform label prior is dropped.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
import logging
from typing import List, Optional, Tuple

import numpy as np
from scipy import stats
from scipy.special import softmax

from .errors import ParameterError, PreconditionError, UnsupportedError
from .graph import CBA, CSBM, GenModel, Graph
from .graphgen import cba_attachment_probabilities


logger = logging.getLogger(__name__)

INSERT = "insert"
DELETE = "delete"


class BayesMode(str, Enum):
    FULL = "full"
    FEATURES_ONLY = "features"
    STRUCTURE_ONLY = "structure"


@dataclass(frozen=True)
class ClassScore:
    feature_term: np.ndarray
    structure_term: np.ndarray
    mode: BayesMode = BayesMode.FULL

    @property
    def total(self) -> np.ndarray:
        if self.mode is BayesMode.FEATURES_ONLY:
            return self.feature_term
        if self.mode is BayesMode.STRUCTURE_ONLY:
            return self.structure_term
        return self.feature_term + self.structure_term

    def posterior(self) -> np.ndarray:
        return softmax(self.total)


def _require_model(g: Graph) -> GenModel:
    if g.gen is None:
        raise UnsupportedError("Bayes classification needs the generative model; it is unavailable for real graphs")
    return g.gen


def _check_target(g: Graph, v: int) -> GenModel:
    model = _require_model(g)
    if not 0 <= v < g.n:
        raise ParameterError(f"node {v} out of range for {g.n} nodes")
    unknown = np.flatnonzero(~g.known_mask)
    unknown = unknown[unknown != v]
    if unknown.size:
        nbrs = set(g.neighbors(v).tolist())
        hit = [u for u in unknown.tolist() if u in nbrs]
        what = f"neighbours {hit[:5]}" if hit else f"nodes {unknown[:5].tolist()}"
        raise PreconditionError(f"labels of {what} are not known; Bayes scoring of node {v} needs all other labels")
    if model.variant == CBA and v != g.n - 1:
        raise UnsupportedError("CBA Bayes scores are only defined for the most recently added node")
    return model


def _edge_terms(g: Graph, v: int, model: GenModel) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-candidate log-probabilities of edge presence and absence for every class.

    Returns ``(others, present, absent)`` where ``present[c, k]`` is
    ``log P[A_{v,others[k]} = 1 | y_v = c]``.
    """
    C = model.num_classes
    if model.variant == CSBM:
        others = np.delete(np.arange(g.n), v)
        y = g.labels[others]
        present = np.empty((C, others.size))
        absent = np.empty((C, others.size))
        with np.errstate(divide="ignore"):
            for c in range(C):
                pe = model.edge_probability(c, y)
                present[c] = np.log(pe)
                absent[c] = np.log1p(-pe)
        return others, present, absent

    others = np.arange(v)
    present = np.empty((C, others.size))
    absent = np.empty((C, others.size))
    for c in range(C):
        pu = cba_attachment_probabilities(g, c, exclude=v)
        # Bin(0 | m, p) and its complement
        absent[c] = stats.binom.logpmf(0, model.m, pu)
        present[c] = stats.binom.logsf(0, model.m, pu)
    return others, present, absent


def class_scores(g: Graph, v: int, mode: BayesMode = BayesMode.FULL) -> ClassScore:
    model = _check_target(g, v)
    means = model.means()
    x = g.features[v]
    feature_term = np.array(
        [stats.norm.logpdf(x, loc=means[c], scale=model.sigma).sum() for c in range(model.num_classes)]
    )

    others, present, absent = _edge_terms(g, v, model)
    adj = np.zeros(g.n, dtype=bool)
    adj[g.neighbors(v)] = True
    row = adj[others]
    with np.errstate(invalid="ignore"):
        structure_term = np.where(row, present, absent).sum(axis=1)

    return ClassScore(feature_term=feature_term, structure_term=structure_term, mode=BayesMode(mode))


def classify_bayes(g: Graph, v: int, mode: BayesMode = BayesMode.FULL) -> int:
    """Most likely class of ``v``; ties go to the smallest class index."""
    return int(np.argmax(class_scores(g, v, mode).total))


def bayes_predictor(mode: BayesMode = BayesMode.FULL):
    """Node predictor ``(graph, v) -> posterior`` backed by the Bayes classifier."""

    def _predict(g: Graph, v: int) -> np.ndarray:
        return class_scores(g, v, mode).posterior()

    return _predict


def _binary_model(g: Graph, v: int) -> GenModel:
    model = _check_target(g, v)
    if model.num_classes != 2:
        raise ParameterError("change potentials are defined for binary models")
    return model


def _potentials(g: Graph, v: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Candidates, whether each edge to v is present, and the toggle's margin change.

    The margin is ``score[y_v] - score[1 - y_v]`` with ``y_v`` the target's label.
    """
    model = _binary_model(g, v)
    others, present, absent = _edge_terms(g, v, model)
    r = int(g.labels[v])
    with np.errstate(invalid="ignore"):
        insert_gain = (present[r] - absent[r]) - (present[1 - r] - absent[1 - r])
    adj = np.zeros(g.n, dtype=bool)
    adj[g.neighbors(v)] = True
    is_edge = adj[others]
    potential = np.where(is_edge, -insert_gain, insert_gain)
    return others, is_edge, potential


def change_potential(g: Graph, v: int, u: int) -> float:
    """Exact change of the binary log-likelihood margin at ``v`` when edge (v, u) is toggled.

    Negative values move ``v`` away from its own class.
    """
    if u == v:
        raise ParameterError("change potential needs two distinct nodes")
    others, _, potential = _potentials(g, v)
    hit = np.flatnonzero(others == u)
    if not hit.size:
        raise ParameterError(f"node {u} is not a candidate neighbour of {v}")
    return float(potential[hit[0]])


def affinity_potential(model: GenModel) -> float:
    """Closed-form magnitude of one optimal toggle (CSBM exact; CBA small-probability limit)."""
    if model.variant == CSBM:
        if model.p == model.q:
            return 0.0
        # q = 0 or p = 1 makes one toggle decisive
        pq = np.array([model.p, model.q])
        with np.errstate(divide="ignore"):
            logit = np.log(pq) - np.log1p(-pq)
        return float(logit[0] - logit[1])
    om = np.asarray(model.omega, dtype=float)
    with np.errstate(divide="ignore"):
        return float(np.log(om[0, 0]) - np.log(om[0, 1]))


@dataclass(frozen=True)
class Toggle:
    kind: str
    u: int
    potential: float


_KIND_ORDER = {INSERT: 0, DELETE: 1}


def optimal_toggles(g: Graph, v: int) -> List[Toggle]:
    """Margin-reducing toggles, strongest first; equal potentials put inserts first, then node index."""
    others, is_edge, potential = _potentials(g, v)
    picks = np.flatnonzero(potential < 0)
    toggles = [
        Toggle(kind=DELETE if is_edge[k] else INSERT, u=int(others[k]), potential=float(potential[k])) for k in picks
    ]
    # rounding keeps float noise from splitting toggles the closed form says are equal
    toggles.sort(key=lambda t: (-round(abs(t.potential), 9), _KIND_ORDER[t.kind], t.u))
    return toggles


def semantic_flip_count(g: Graph, v: int, budget: Optional[int] = None) -> Optional[int]:
    """Fewest optimal toggles after which the Bayes decision at ``v`` leaves ``v``'s label.

    Returns 0 when the clean decision already differs from the label and ``None``
    when the budget (or the pool of margin-reducing toggles) runs out first.
    """
    model = _binary_model(g, v)
    r = int(g.labels[v])
    scores = class_scores(g, v, BayesMode.FULL).total
    if int(np.argmax(scores)) != r:
        return 0

    margin = float(scores[r] - scores[1 - r])
    toggles = optimal_toggles(g, v)
    limit = len(toggles) if budget is None else min(budget, len(toggles))
    for k in range(limit):
        margin += toggles[k].potential
        if _flipped(margin, r):
            logger.debug("node %d flips after %d toggles (%s)", v, k + 1, model.variant)
            return k + 1
    return None


def _flipped(margin: float, r: int) -> bool:
    # argmax tie-break: class 0 wins a tie, so class 1 is lost at margin 0
    return margin < 0 if r == 0 else margin <= 0
