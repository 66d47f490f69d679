"""Per-node robustness traces and the semantics-aware aggregate metrics.

A trace replays a perturbation plan one op at a time and records the first step
at which the attacked model ``f`` and the reference ``g`` leave their clean
predictions. Robustness counts the ops survived before that, so a node that
never flips is censored at the number of ops replayed.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from itertools import combinations
import logging
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np

from .attacks import Budget, PerturbationPlan, replay, resolve_budget
from .bayes import bayes_predictor
from .errors import EmptySampleError, ParameterError, SizeError, UnsupportedError
from .graph import Graph
from .graphgen import extend_graph
from .utils import derive_seed


logger = logging.getLogger(__name__)

NodePredictor = Callable[[Graph, int], np.ndarray]

MAX_ENUMERATION_TOGGLES = 3
MAX_ENUMERATION_NODES = 20

RECORD_COLUMNS = (
    "node",
    "degree",
    "t_f",
    "t_g",
    "budget_used",
    "clean_f_correct",
    "clean_agree",
    "robustness",
    "conventional",
    "reference",
    "censored_f",
    "censored_g",
)


@dataclass(frozen=True)
class RobustnessRecord:
    node: int
    degree: int
    t_f: Optional[int]
    t_g: Optional[int]
    budget_used: int
    clean_f_correct: bool
    clean_agree: bool

    def __post_init__(self) -> None:
        if self.degree < 0 or self.budget_used < 0:
            raise ParameterError("degree and budget_used must be nonnegative")
        for t in (self.t_f, self.t_g):
            if t is not None and not 1 <= t <= self.budget_used:
                raise ParameterError(f"flip step {t} outside [1, {self.budget_used}]")

    def _survived(self, t: Optional[int]) -> int:
        return self.budget_used if t is None else t - 1

    @property
    def robustness(self) -> int:
        return min(self._survived(self.t_f), self._survived(self.t_g))

    @property
    def conventional(self) -> int:
        return self._survived(self.t_f)

    @property
    def reference(self) -> int:
        return self._survived(self.t_g)

    @property
    def censored_f(self) -> bool:
        return self.t_f is None

    @property
    def censored_g(self) -> bool:
        return self.t_g is None

    def to_row(self) -> Dict[str, Any]:
        row = asdict(self)
        row.update(
            robustness=self.robustness,
            conventional=self.conventional,
            reference=self.reference,
            censored_f=self.censored_f,
            censored_g=self.censored_g,
        )
        return {k: row[k] for k in RECORD_COLUMNS}

    @classmethod
    def from_row(cls, row: Dict[str, Any]) -> "RobustnessRecord":
        def _opt(x: Any) -> Optional[int]:
            if x is None or x == "" or (isinstance(x, float) and np.isnan(x)):
                return None
            return int(x)

        def _bool(x: Any) -> bool:
            return x if isinstance(x, bool) else str(x).strip().lower() in ("true", "1")

        return cls(
            node=int(row["node"]),
            degree=int(row["degree"]),
            t_f=_opt(row["t_f"]),
            t_g=_opt(row["t_g"]),
            budget_used=int(row["budget_used"]),
            clean_f_correct=_bool(row["clean_f_correct"]),
            clean_agree=_bool(row["clean_agree"]),
        )


def robustness_trace(
    g_clean: Graph,
    v: int,
    plan: PerturbationPlan,
    f_predict: NodePredictor,
    g_reference_predict: NodePredictor,
    budget: Budget,
) -> RobustnessRecord:
    if plan.target != v:
        raise ParameterError(f"plan targets node {plan.target}, trace asked for node {v}")
    steps = min(resolve_budget(g_clean, v, budget), len(plan))

    f0 = int(np.argmax(f_predict(g_clean, v)))
    g0 = int(np.argmax(g_reference_predict(g_clean, v)))
    t_f: Optional[int] = None
    t_g: Optional[int] = None

    for k, g in enumerate(replay(g_clean, plan, steps), start=1):
        if t_f is None and int(np.argmax(f_predict(g, v))) != f0:
            t_f = k
        if t_g is None and int(np.argmax(g_reference_predict(g, v))) != g0:
            t_g = k
        if t_f is not None and t_g is not None:
            break

    return RobustnessRecord(
        node=v,
        degree=g_clean.degree(v),
        t_f=t_f,
        t_g=t_g,
        budget_used=steps,
        clean_f_correct=f0 == int(g_clean.labels[v]),
        clean_agree=f0 == g0,
    )


@dataclass(frozen=True)
class MetricsSummary:
    R_fg: float
    R_f: float
    R_g: float
    R_over: Optional[float]
    R_adv: Optional[float]
    F_beta: Optional[float]
    node_count: int
    beta: float = 1.0
    excluded: Dict[str, int] = field(default_factory=dict)
    censored_f: int = 0
    censored_g: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def f_beta(r_over: Optional[float], r_adv: Optional[float], beta: float = 1.0) -> Optional[float]:
    """Weighted harmonic mean of ``1 - r_over`` and ``r_adv``; ``r_adv`` weighs ``beta`` times more."""
    if r_over is None or r_adv is None:
        return None
    keep = 1.0 - r_over
    b2 = beta * beta
    denom = b2 * keep + r_adv
    if denom <= 0:
        return 0.0
    return (1.0 + b2) * keep * r_adv / denom


def filter_records(records: Sequence[RobustnessRecord]) -> tuple[List[RobustnessRecord], Dict[str, int]]:
    """Keep nodes with an edge that ``f`` classifies correctly and in agreement with ``g``."""
    kept: List[RobustnessRecord] = []
    excluded = {"zero_degree": 0, "f_incorrect": 0, "disagree": 0}
    for r in records:
        if r.degree < 1:
            excluded["zero_degree"] += 1
        elif not r.clean_f_correct:
            excluded["f_incorrect"] += 1
        elif not r.clean_agree:
            excluded["disagree"] += 1
        else:
            kept.append(r)
    return kept, excluded


def aggregate(records: Sequence[RobustnessRecord], beta: float = 1.0) -> MetricsSummary:
    if beta <= 0:
        raise ParameterError(f"beta must be positive, got {beta}")
    kept, excluded = filter_records(sorted(records, key=lambda r: r.node))
    if not kept:
        raise EmptySampleError(f"no record left after filtering {len(records)} ({excluded})")

    deg = np.array([r.degree for r in kept], dtype=float)
    R_fg = float(np.mean(np.array([r.robustness for r in kept]) / deg))
    R_f = float(np.mean(np.array([r.conventional for r in kept]) / deg))
    R_g = float(np.mean(np.array([r.reference for r in kept]) / deg))
    R_over = 1.0 - R_fg / R_f if R_f > 0 else None
    R_adv = R_fg / R_g if R_g > 0 else None

    return MetricsSummary(
        R_fg=R_fg,
        R_f=R_f,
        R_g=R_g,
        R_over=R_over,
        R_adv=R_adv,
        F_beta=f_beta(R_over, R_adv, beta),
        node_count=len(kept),
        beta=beta,
        excluded=excluded,
        censored_f=sum(r.censored_f for r in kept),
        censored_g=sum(r.censored_g for r in kept),
    )


@dataclass(frozen=True)
class ExpectedLosses:
    std_loss: float
    adv_loss: float
    over_loss: float
    robust_loss: float
    samples: int

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)


def _toggle(g: Graph, v: int, us: Sequence[int]) -> Graph:
    add = [(v, u) for u in us if not g.has_edge(v, u)]
    remove = [(v, u) for u in us if g.has_edge(v, u)]
    return g.with_edges(add=add, remove=remove)


def expected_losses_bruteforce(
    g_train: Graph,
    f_predict: NodePredictor,
    samples: int,
    toggle_budget: int,
    lambda1: float = 1.0,
    lambda2: float = 1.0,
    seed: int = 0,
) -> ExpectedLosses:
    """Monte-Carlo estimate of the standard, adversarial and over-robust 0/1 losses.

    For each inductively sampled node the inner maxima are found by enumerating
    every set of at most ``toggle_budget`` edge toggles incident to it, with the
    Bayes classifier as reference. A perturbation counts as adversarial only if it
    keeps the Bayes label; it counts as over-robust only if it keeps ``f``'s label.
    """
    if g_train.gen is None:
        raise UnsupportedError("expected losses need the generative model")
    if toggle_budget < 0 or toggle_budget > MAX_ENUMERATION_TOGGLES or g_train.n > MAX_ENUMERATION_NODES:
        raise SizeError(
            f"exhaustive enumeration needs toggle_budget <= {MAX_ENUMERATION_TOGGLES} "
            f"and n <= {MAX_ENUMERATION_NODES}, got {toggle_budget} and {g_train.n}"
        )
    if samples < 1:
        raise ParameterError("samples must be positive")
    if lambda1 < 0 or lambda2 < 0:
        raise ParameterError("loss weights must be nonnegative")

    reference = bayes_predictor()
    std = adv = over = 0
    for s in range(samples):
        g = extend_graph(g_train, 1, derive_seed(seed, "loss-sample", s))
        v = g.n - 1
        a = int(np.argmax(reference(g, v)))
        b = int(np.argmax(f_predict(g, v)))
        std += int(b != int(g.labels[v]))
        if a != b:
            # both inner maxima are attained by the clean graph itself
            continue

        found_adv = found_over = False
        others = [u for u in range(g.n) if u != v]
        for size in range(1, toggle_budget + 1):
            for us in combinations(others, size):
                h = _toggle(g, v, us)
                ga = int(np.argmax(reference(h, v)))
                fb = int(np.argmax(f_predict(h, v)))
                if ga == a and fb != a:
                    found_adv = True
                if fb == b and ga != b:
                    found_over = True
                if found_adv and found_over:
                    break
            if found_adv and found_over:
                break
        adv += int(found_adv)
        over += int(found_over)

    out = ExpectedLosses(
        std_loss=std / samples,
        adv_loss=adv / samples,
        over_loss=over / samples,
        robust_loss=(lambda1 * adv + lambda2 * over) / samples,
        samples=samples,
    )
    logger.debug("expected losses over %d samples: %s", samples, out)
    return out

