"""Reference values for the default CSBM setup and the ``--check`` self-check."""

from __future__ import annotations

from dataclasses import dataclass
import math
from typing import List, Optional

import pandas as pd

from .config import ExperimentConfig, ModelSpec
from .report import ResultBundle


@dataclass(frozen=True)
class Check:
    name: str
    expected: str
    observed: Optional[float]
    passed: bool


# (K, mode, expected accuracy, tolerance)
BAYES_ACCURACY = (
    (0.1, "full", 0.897, 0.020),
    (5.0, "full", 0.998, 0.005),
    (5.0, "features", 0.993, 0.007),
)

# (budget, K, expected fraction, tolerance) for l2-weak
SEMANTIC_VIOLATION = (
    ("B2", 1.0, 0.257, 0.025),
    ("B1", 2.0, 0.044, 0.015),
)
SEMANTIC_VIOLATION_AT_LEAST = (("Bdeg+2", 0.1, 0.99),)

# (classifier, expected R_over, tolerance) at K=0.5, Bdeg, l2-weak
OVER_ROBUSTNESS = (
    ("GCN", 0.303, 0.06),
    ("GCN+LP", 0.209, 0.06),
)

MEAN_DEGREE = {"csbm": (3.93, 0.10), "cba": (3.94, 0.15)}


def default_setup(cfg: ExperimentConfig) -> bool:
    """Whether the run uses the reference graph size and edge model the reference values belong to."""
    ref = ModelSpec(variant=cfg.model.variant)
    m = cfg.model
    if m.variant == "csbm":
        return (m.n, m.p, m.q, m.sigma, m.d) == (ref.n, ref.p, ref.q, ref.sigma, ref.d)
    if m.variant == "cba":
        return (m.n, m.m, m.omega, m.sigma, m.d) == (ref.n, ref.m, ref.omega, ref.sigma, ref.d)
    return False


def _value(df: pd.DataFrame, col: str, **where) -> Optional[float]:
    if df is None or df.empty:
        return None
    mask = pd.Series(True, index=df.index)
    for k, v in where.items():
        if k not in df:
            return None
        mask &= df[k].apply(lambda x, v=v: math.isclose(x, v) if isinstance(v, float) and x is not None else x == v)
    hit = df.loc[mask, col]
    if hit.empty or pd.isna(hit.iloc[0]):
        return None
    return float(hit.iloc[0])


def _within(name: str, observed: Optional[float], expected: float, tol: float) -> Optional[Check]:
    if observed is None:
        return None
    return Check(name, f"{expected:.3f} +/- {tol:.3f}", observed, abs(observed - expected) <= tol)


def check_bundle(bundle: ResultBundle, cfg: ExperimentConfig) -> List[Check]:
    """Compare every present reference cell of a bundle; absent cells are skipped."""
    if not default_setup(cfg) or cfg.model.variant != "csbm":
        return []
    checks: List[Check] = []

    acc = bundle.tables.get("bayes_accuracy")
    for K, mode, expected, tol in BAYES_ACCURACY:
        c = _within(f"bayes accuracy K={K:g} {mode}", _value(acc, "mean", K=K, mode=mode), expected, tol)
        if c:
            checks.append(c)

    viol = bundle.tables.get("semantic_violation")
    for budget, K, expected, tol in SEMANTIC_VIOLATION:
        observed = _value(viol, "mean", attack="l2-weak", budget=budget, K=K)
        c = _within(f"l2-weak violations {budget} K={K:g}", observed, expected, tol)
        if c:
            checks.append(c)
    for budget, K, floor in SEMANTIC_VIOLATION_AT_LEAST:
        observed = _value(viol, "mean", attack="l2-weak", budget=budget, K=K)
        if observed is not None:
            checks.append(Check(f"l2-weak violations {budget} K={K:g}", f">= {floor:.3f}", observed, observed >= floor))

    if bundle.cells:
        summary = bundle.summary_frame()
        agg = bundle.seed_aggregate_frame()
        for clf, expected, tol in OVER_ROBUSTNESS:
            observed = _value(agg, "R_over_mean", K=0.5, classifier=clf, attack="l2-weak", budget="Bdeg")
            c = _within(f"R_over {clf} K=0.5 Bdeg l2-weak", observed, expected, tol)
            if c:
                checks.append(c)
        cell = summary[(summary["attack"] == "l2-weak") & (summary["budget"] == "Bdeg") & (summary["K"] == 0.5)]
        gcn = cell[cell["classifier"] == "GCN"].set_index("seed")["R_over"]
        lp = cell[cell["classifier"] == "GCN+LP"].set_index("seed")["R_over"]
        seeds = sorted(set(gcn.dropna().index) & set(lp.dropna().index))
        if seeds:
            ok = all(lp[s] < gcn[s] for s in seeds)
            worst = max(float(lp[s] - gcn[s]) for s in seeds)
            checks.append(Check("R_over GCN+LP < GCN in every seed", "< 0", worst, ok))

    return checks


def check_mean_degree(cfg: ExperimentConfig, observed: float) -> List[Check]:
    if not default_setup(cfg) or cfg.model.variant not in MEAN_DEGREE:
        return []
    expected, tol = MEAN_DEGREE[cfg.model.variant]
    return [Check(f"{cfg.model.variant} mean degree", f"{expected:.2f} +/- {tol:.2f}", observed, abs(observed - expected) <= tol)]
