"""Experiment runner: sampling, training, attacking and aggregation for whole configs.

Every random choice is derived from ``(seed, purpose, K)``, never from loop
position, so permuting the K list or the classifier list leaves each cell's
numbers unchanged.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
import logging
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from . import __version__
from .attacks import BudgetSpec, apply_plan, plan_per_class_l2, rewire_homophilic
from .bayes import BayesMode, bayes_predictor, classify_bayes
from .builtin_attacks import get_builtin_attacks
from .classifiers import ModelParams, NodePredictor, label_oracle, lp_predictor, model_predictor, train
from .config import AttackSpec, ClassifierSpec, ExperimentConfig
from .errors import ConfigError, RobustLensError
from .graph import CSBM, Graph
from .graphgen import extend_graph, graph_statistics, ingest_real_graph, sample_graph
from .graphstats import dac, degree_assortativity, homophilic_edge_fraction, node_centric_homophily
from .metrics import RobustnessRecord, aggregate, filter_records, robustness_trace
from .plugin_loader import load_plugins
from .registry import Attack, AttackContext, resolve_attacks
from .report import CellResult, ResultBundle
from .utils import derive_seed, mean_std_stderr


logger = logging.getLogger(__name__)

PROFILE_CAP = 128


@dataclass(frozen=True)
class Instance:
    """One training graph and its test targets for a (K, seed) pair.

    Synthetic test targets are materialized one at a time from the shared clean
    graph; real-graph targets are node indices of that graph.
    """

    K: Optional[float]
    seed: int
    graph: Graph
    test_count: int
    test_nodes: Optional[Tuple[int, ...]] = None

    @property
    def tests(self) -> "TargetSequence":
        return TargetSequence(self)

    def target(self, i: int) -> Tuple[Graph, int]:
        if self.test_nodes is not None:
            return self.graph, self.test_nodes[i]
        g = extend_graph(self.graph, 1, derive_seed(self.seed, "test", _k_key(self.K), i))
        return g, self.graph.n


class TargetSequence(Sequence[Tuple[Graph, int]]):
    """Read-only view of an instance's test targets; each access rebuilds its graph."""

    def __init__(self, inst: Instance) -> None:
        self._inst = inst

    def __len__(self) -> int:
        return self._inst.test_count

    def __getitem__(self, i):  # type: ignore[override]
        if isinstance(i, slice):
            return [self[j] for j in range(*i.indices(len(self)))]
        if i < 0:
            i += len(self)
        if not 0 <= i < len(self):
            raise IndexError(f"test index {i} out of range")
        return self._inst.target(i)


def _k_key(K: Optional[float]) -> str:
    return "real" if K is None else f"K={K:g}"


def build_instance(cfg: ExperimentConfig, K: Optional[float], seed: int) -> Instance:
    if cfg.model.synthetic:
        if K is None:
            raise ConfigError("synthetic runs need a K value")
        model = cfg.model.gen_model(K)
        g = sample_graph(model, derive_seed(seed, "graph", _k_key(K)))
        return Instance(K=K, seed=seed, graph=g, test_count=cfg.test_nodes)

    files = cfg.model.files
    g = ingest_real_graph(files["edges"], files["features"], files["labels"], files.get("mask"))
    if "mask" in files:
        test_nodes = np.flatnonzero(~g.known_mask)[: cfg.test_nodes]
    else:
        rng = np.random.default_rng(derive_seed(seed, "split"))
        test_nodes = np.sort(rng.choice(g.n, size=min(cfg.test_nodes, g.n // 2), replace=False))
        mask = np.ones(g.n, dtype=bool)
        mask[test_nodes] = False
        g = g.with_known_mask(mask)
    if test_nodes.size == 0:
        raise ConfigError("real graph has no unlabelled test nodes")
    nodes = tuple(int(v) for v in test_nodes)
    return Instance(K=None, seed=seed, graph=g, test_count=len(nodes), test_nodes=nodes)


def build_classifier(spec: ClassifierSpec, g_train: Graph, seed: int) -> Tuple[NodePredictor, Optional[ModelParams]]:
    if spec.is_bayes:
        return bayes_predictor(), None
    if spec.architecture is None:
        return lp_predictor(spec.lp), None
    tcfg = replace(spec.train, seed=derive_seed(seed, "train", spec.tag, spec.train.seed))
    params = train(spec.architecture, g_train, tcfg, spec.val_split, hidden_dim=spec.hidden_dim, hops=spec.hops)
    return model_predictor(params, spec.lp if spec.uses_lp else None), params


def reference_predictor(g: Graph) -> NodePredictor:
    """Bayes classifier on synthetic graphs; the clean labels (never flipping) on real graphs."""
    if g.gen is not None:
        return bayes_predictor()
    return label_oracle(g.labels, g.num_classes)


def available_attacks(cfg: ExperimentConfig, extra: Iterable[Attack] = ()) -> List[Attack]:
    out = get_builtin_attacks()
    if cfg.plugins:
        out.extend(load_plugins(cfg.plugins))
    out.extend(extra)
    return out


def provenance(cfg: ExperimentConfig, command: str) -> Dict[str, object]:
    return {
        "command": command,
        "config_hash": cfg.config_hash(),
        "config": cfg.to_dict(),
        "seeds": list(cfg.seed_list()),
        "build": f"robustlens {__version__}",
    }


def _grid(cfg: ExperimentConfig) -> List[Tuple[Optional[float], int]]:
    ks: Sequence[Optional[float]] = sorted(set(cfg.ks)) if cfg.model.synthetic else [None]
    return [(K, s) for K in ks for s in cfg.seed_list()]


def _map(cfg: ExperimentConfig, fn: Callable, items: Sequence) -> List:
    """Apply ``fn`` to each item, concurrently when configured; results keep input order."""
    if cfg.workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        return list(pool.map(fn, items))


def _require_synthetic(cfg: ExperimentConfig, what: str) -> None:
    if not cfg.model.synthetic:
        raise ConfigError(f"{what} needs a synthetic (csbm or cba) model")


def _stats_rows(values: Dict[Tuple, List[float]], keys: Sequence[str]) -> List[Dict[str, object]]:
    rows = []
    for key in sorted(values):
        st = mean_std_stderr(values[key])
        rows.append({**dict(zip(keys, key)), "mean": st["mean"], "std": st["std"], "stderr": st["stderr"], "seeds": st["count"]})
    return rows


def bayes_accuracy_table(cfg: ExperimentConfig) -> ResultBundle:
    """Accuracy of the Bayes classifier per K and mode, mean/std/stderr across seeds."""
    _require_synthetic(cfg, "bayes-table")
    modes = (BayesMode.FEATURES_ONLY, BayesMode.STRUCTURE_ONLY, BayesMode.FULL)

    def _one(cell: Tuple[float, int]) -> Tuple[float, Dict[str, float]]:
        K, seed = cell
        inst = build_instance(cfg, K, seed)
        acc = {}
        for mode in modes:
            hits = [classify_bayes(g, v, mode) == int(g.labels[v]) for g, v in inst.tests]
            acc[mode.value] = float(np.mean(hits))
        logger.info("bayes accuracy K=%g seed=%d: %s", K, seed, acc)
        return K, acc

    values: Dict[Tuple, List[float]] = {}
    for K, acc in _map(cfg, _one, _grid(cfg)):
        for mode, a in acc.items():
            values.setdefault((K, mode), []).append(a)

    table = pd.DataFrame(_stats_rows(values, ["K", "mode"]), columns=["K", "mode", "mean", "std", "stderr", "seeds"])
    return ResultBundle(experiment=cfg.name, tables={"bayes_accuracy": table}, provenance=provenance(cfg, "bayes-table"))


def _candidate_pool(size: Optional[int], g: Graph, v: int, seed: int) -> Optional[np.ndarray]:
    if size is None or size >= g.n - 1:
        return None
    rng = np.random.default_rng(derive_seed(seed, "pool"))
    others = np.delete(np.arange(g.n), v)
    return np.sort(rng.choice(others, size=size, replace=False))


def semantic_violation_table(cfg: ExperimentConfig, extra_attacks: Iterable[Attack] = ()) -> ResultBundle:
    """Fraction of test nodes whose Bayes decision changes within each budget."""
    _require_synthetic(cfg, "violation-table")
    attacks = resolve_attacks([a.tag for a in cfg.attacks], available_attacks(cfg, extra_attacks))
    bayes = bayes_predictor()
    failures: List[Dict[str, object]] = []

    def _one(cell: Tuple[float, int]) -> Tuple[List[Tuple[Tuple, float]], List[Dict]]:
        K, seed = cell
        inst = build_instance(cfg, K, seed)
        out = []
        fails = []
        for attack, spec in zip(attacks, cfg.attacks):
            for budget in spec.budgets:
                try:
                    records = _trace_tests(inst, attack, spec, budget, bayes, bayes)
                    flips = [r.t_g is not None for r in records]
                    out.append(((attack.tag, budget.label, K), float(np.mean(flips))))
                except RobustLensError as e:
                    fails.append(_failure(K, seed, "bayes", attack.tag, budget.label, e))
        return out, fails

    values: Dict[Tuple, List[float]] = {}
    for chunk, fails in _map(cfg, _one, _grid(cfg)):
        failures.extend(fails)
        for key, frac in chunk:
            values.setdefault(key, []).append(frac)

    table = pd.DataFrame(
        _stats_rows(values, ["attack", "budget", "K"]), columns=["attack", "budget", "K", "mean", "std", "stderr", "seeds"]
    )
    return ResultBundle(
        experiment=cfg.name,
        tables={"semantic_violation": table},
        failures=failures,
        provenance=provenance(cfg, "violation-table"),
    )


def _trace_tests(
    inst: Instance,
    attack: Attack,
    spec: AttackSpec,
    budget: BudgetSpec,
    f_predict: NodePredictor,
    reference: NodePredictor,
    projection: Optional[np.ndarray] = None,
) -> List[RobustnessRecord]:
    """Plan and trace every test target of an instance, in test order."""
    records = []
    for i, (g, v) in enumerate(inst.tests):
        seed = derive_seed(inst.seed, "attack", _k_key(inst.K), i)
        ctx = AttackContext(
            seed=seed,
            model_predict=f_predict,
            target_class=spec.target_class,
            projection=projection,
            candidates=_candidate_pool(spec.candidate_pool, g, v, seed),
        )
        plan = attack.plan(g, v, budget, ctx)
        records.append(robustness_trace(g, v, plan, f_predict, reference, budget))
    return records


def _failure(K: Optional[float], seed: int, clf: str, attack: str, budget: str, e: BaseException) -> Dict[str, object]:
    logger.warning("cell K=%s seed=%d %s/%s/%s failed: %s", K, seed, clf, attack, budget, e)
    return {
        "K": K,
        "seed": seed,
        "classifier": clf,
        "attack": attack,
        "budget": budget,
        "error": type(e).__name__,
        "message": str(e),
    }


def _run_cells(cfg: ExperimentConfig, attacks: List[Attack], cell: Tuple[Optional[float], int]) -> Tuple[List[CellResult], List[Dict]]:
    K, seed = cell
    inst = build_instance(cfg, K, seed)
    reference = reference_predictor(inst.graph)
    results: List[CellResult] = []
    failures: List[Dict] = []

    for clf in cfg.classifiers:
        try:
            f_predict, params = build_classifier(clf, inst.graph, seed)
        except Exception as e:
            failures.append(_failure(K, seed, clf.tag, "*", "*", e))
            continue
        projection = _projection(params)
        for attack, spec in zip(attacks, cfg.attacks):
            for budget in spec.budgets:
                cell_result = CellResult(K=K, seed=seed, classifier=clf.tag, attack=attack.tag, budget=budget.label)
                try:
                    cell_result.records = _trace_tests(inst, attack, spec, budget, f_predict, reference, projection)
                    cell_result.summary = aggregate(cell_result.records, cfg.metrics.beta)
                except Exception as e:
                    cell_result.error = f"{type(e).__name__}: {e}"
                    failures.append(_failure(K, seed, clf.tag, attack.tag, budget.label, e))
                results.append(cell_result)
        logger.info("finished K=%s seed=%d classifier=%s", K, seed, clf.tag)
    return results, failures


def over_robustness_sweep(cfg: ExperimentConfig, extra_attacks: Iterable[Attack] = ()) -> ResultBundle:
    """Sample, train, attack, trace and aggregate every (K, seed, classifier, attack, budget) cell.

    A failing cell is recorded with its error and the sweep moves on.
    """
    attacks = resolve_attacks([a.tag for a in cfg.attacks], available_attacks(cfg, extra_attacks))
    bundle = ResultBundle(experiment=cfg.name, provenance=provenance(cfg, "sweep"))
    for cells, failures in _map(cfg, lambda c: _run_cells(cfg, attacks, c), _grid(cfg)):
        bundle.cells.extend(cells)
        bundle.failures.extend(failures)
    bundle.tables["sweep"] = bundle.seed_aggregate_frame()
    bundle.tables["ranking"] = robustness_ranking(bundle)
    return bundle


def _profile_budget(cfg: ExperimentConfig) -> BudgetSpec:
    for spec in cfg.attacks:
        if spec.tag == "per-class-l2" and spec.budgets:
            return spec.budgets[0]
    return BudgetSpec.unbounded(PROFILE_CAP)


def _projection(params: Optional[ModelParams]) -> Optional[np.ndarray]:
    # linear part of the first layer only
    if params is None or params.architecture not in ("GCN", "SGC"):
        return None
    return np.asarray(params.weights[0]).T


def _profile_nodes(cfg: ExperimentConfig, cell: Tuple[Optional[float], int]) -> Tuple[List[Dict], List[Dict]]:
    K, seed = cell
    inst = build_instance(cfg, K, seed)
    reference = reference_predictor(inst.graph)
    budget = _profile_budget(cfg)
    rows: List[Dict] = []
    failures: List[Dict] = []

    for clf in cfg.classifiers:
        try:
            f_predict, params = build_classifier(clf, inst.graph, seed)
        except Exception as e:
            failures.append(_failure(K, seed, clf.tag, "per-class-l2", budget.label, e))
            continue
        projection = _projection(params)
        for g, v in inst.tests:
            try:
                y = int(g.labels[v])
                records = []
                for c in range(g.num_classes):
                    if c == y or not np.any(g.labels == c):
                        continue
                    plan = plan_per_class_l2(g, v, c, budget, projection)
                    records.append(robustness_trace(g, v, plan, f_predict, reference, budget))
                if not records:
                    continue
                # clean predictions do not depend on the target class
                kept, _ = filter_records(records[:1])
                robust = [r.robustness for r in records]
                censored = [r.t_f is None and r.t_g is None for r in records]
                rows.append(
                    {
                        "K": K,
                        "seed": seed,
                        "classifier": clf.tag,
                        "node": v,
                        "degree": g.degree(v),
                        "eligible": bool(kept),
                        "min_robustness": min(robust),
                        "max_robustness": max(robust),
                        "censored": all(censored),
                    }
                )
            except RobustLensError as e:
                failures.append(_failure(K, seed, clf.tag, "per-class-l2", budget.label, e))
    return rows, failures


NODE_PROFILE_COLUMNS = ["K", "seed", "classifier", "node", "degree", "eligible", "min_robustness", "max_robustness", "censored"]
PROFILE_COLUMNS = [
    "classifier",
    "degree",
    "nodes",
    "censored",
    "min_q1",
    "min_median",
    "min_q3",
    "min_mean",
    "max_q1",
    "max_median",
    "max_q3",
    "max_mean",
]


def degree_robustness_profile(cfg: ExperimentConfig) -> ResultBundle:
    """Per-degree distribution of the per-class robustness of correctly classified test nodes.

    Nodes that never flip within the cap are counted as censored and left out of the
    quantiles. A least-squares slope of mean robustness against degree is reported
    per classifier.
    """
    nodes: List[Dict] = []
    failures: List[Dict] = []
    for rows, fails in _map(cfg, lambda c: _profile_nodes(cfg, c), _grid(cfg)):
        nodes.extend(rows)
        failures.extend(fails)

    node_df = pd.DataFrame(nodes, columns=NODE_PROFILE_COLUMNS)
    node_df = node_df.sort_values(["classifier", "K", "seed", "node"], na_position="first", kind="mergesort")
    eligible = node_df[node_df["eligible"].astype(bool) & (node_df["degree"] >= 1)]

    rows = []
    fits = []
    for (clf, deg), part in eligible.groupby(["classifier", "degree"], sort=True):
        usable = part[~part["censored"].astype(bool)]
        row = {"classifier": clf, "degree": int(deg), "nodes": len(part), "censored": int(part["censored"].sum())}
        for side in ("min", "max"):
            vals = usable[f"{side}_robustness"].to_numpy(dtype=float)
            if vals.size:
                q1, med, q3 = np.percentile(vals, [25, 50, 75])
                row.update({f"{side}_q1": q1, f"{side}_median": med, f"{side}_q3": q3, f"{side}_mean": float(vals.mean())})
            else:
                row.update({f"{side}_q1": None, f"{side}_median": None, f"{side}_q3": None, f"{side}_mean": None})
        rows.append(row)

    profile = pd.DataFrame(rows, columns=PROFILE_COLUMNS)
    for clf, part in profile.dropna(subset=["min_mean"]).groupby("classifier", sort=True):
        if len(part) >= 2:
            slope, intercept = np.polyfit(part["degree"].to_numpy(float), part["min_mean"].to_numpy(float), 1)
            fits.append({"classifier": clf, "slope": float(slope), "intercept": float(intercept), "degrees": len(part)})
        else:
            fits.append({"classifier": clf, "slope": None, "intercept": None, "degrees": len(part)})

    return ResultBundle(
        experiment=cfg.name,
        tables={
            "degree_profile": profile,
            "degree_profile_nodes": node_df.reset_index(drop=True),
            "degree_profile_fit": pd.DataFrame(fits, columns=["classifier", "slope", "intercept", "degrees"]),
        },
        failures=failures,
        provenance=provenance(cfg, "degree-profile"),
    )


REWIRE_ROUNDS = (0, 50, 100, 200, 400)
REWIRE_SCHEMES = (("degree-matched", True), ("free", False))
PROPERTY_COLUMNS = ["K", "scheme", "rounds", "property", "mean", "std", "stderr", "seeds"]
ATTACK_HOMOPHILY_COLUMNS = ["attack", "budget", "K", "property", "mean", "std", "stderr", "seeds"]


def _mean_homophily(g: Graph) -> Optional[float]:
    values = [h for h in (node_centric_homophily(g, u) for u in range(g.n)) if h is not None]
    return float(np.mean(values)) if values else None


def _bayes_decisions(g: Graph) -> Optional[np.ndarray]:
    # every node is scorable only under the CSBM likelihood
    if g.gen is None or g.gen.variant != CSBM:
        return None
    return np.array([classify_bayes(g, v) for v in range(g.n)])


def _rewired_properties(g: Graph, rewired: Graph, clean_decisions: Optional[np.ndarray]) -> Dict[str, Optional[float]]:
    props: Dict[str, Optional[float]] = {
        "homophilic_edges": homophilic_edge_fraction(rewired),
        "assortativity": degree_assortativity(rewired),
        "dac": dac(g, rewired),
        "node_homophily": _mean_homophily(rewired),
        "bayes_changed": None,
    }
    if clean_decisions is not None:
        props["bayes_changed"] = float(np.mean(_bayes_decisions(rewired) != clean_decisions))
    return props


def _target_homophily(inst: Instance, attack: Attack, spec: AttackSpec, budget: BudgetSpec) -> Dict[str, List[float]]:
    bayes = bayes_predictor()
    shift: List[float] = []
    flipped: List[float] = []
    for i, (g, v) in enumerate(inst.tests):
        before = node_centric_homophily(g, v)
        seed = derive_seed(inst.seed, "attack", _k_key(inst.K), i)
        ctx = AttackContext(seed=seed, model_predict=bayes, target_class=spec.target_class)
        attacked = apply_plan(g, attack.plan(g, v, budget, ctx))
        after = node_centric_homophily(attacked, v)
        if before is not None and after is not None:
            shift.append(abs(after - before))
        flipped.append(float(classify_bayes(attacked, v) != classify_bayes(g, v)))
    return {"homophily_shift": shift, "bayes_changed": flipped}


def graph_property_table(
    cfg: ExperimentConfig, rounds: Sequence[int] = REWIRE_ROUNDS, extra_attacks: Iterable[Attack] = ()
) -> ResultBundle:
    """Global graph properties against semantic change.

    The ``rewiring`` table cross-wires same-class edges of the two classes for each
    round count, once restricted to degree-matched pairs (degree assortativity is kept)
    and once unrestricted. The ``attack_homophily`` table reports how far each
    configured attack moves its target's node-centric homophily and how often it
    changes the Bayes decision.
    """
    _require_synthetic(cfg, "graph-properties")
    if any(r < 0 for r in rounds):
        raise ConfigError(f"rewiring rounds must be nonnegative, got {list(rounds)}")
    attacks = resolve_attacks([a.tag for a in cfg.attacks], available_attacks(cfg, extra_attacks))

    def _one(cell: Tuple[float, int]) -> Tuple[Dict[Tuple, List[float]], Dict[Tuple, List[float]], List[Dict]]:
        K, seed = cell
        inst = build_instance(cfg, K, seed)
        g = inst.graph
        clean_decisions = _bayes_decisions(g)
        rewiring: Dict[Tuple, List[float]] = {}
        for scheme, matched in REWIRE_SCHEMES:
            for r in sorted(set(rounds)):
                rewired = rewire_homophilic(g, r, derive_seed(seed, "rewire", _k_key(K)), match_degrees=matched)
                for prop, value in _rewired_properties(g, rewired, clean_decisions).items():
                    if value is not None:
                        rewiring.setdefault((K, scheme, r, prop), []).append(value)
        shifts: Dict[Tuple, List[float]] = {}
        fails: List[Dict] = []
        for attack, spec in zip(attacks, cfg.attacks):
            for budget in spec.budgets:
                try:
                    per_target = _target_homophily(inst, attack, spec, budget)
                except RobustLensError as e:
                    fails.append(_failure(K, seed, "bayes", attack.tag, budget.label, e))
                    continue
                for prop, values in per_target.items():
                    if values:
                        shifts[(attack.tag, budget.label, K, prop)] = [float(np.mean(values))]
        logger.info("graph properties K=%g seed=%d done", K, seed)
        return rewiring, shifts, fails

    rewiring: Dict[Tuple, List[float]] = {}
    shifts: Dict[Tuple, List[float]] = {}
    failures: List[Dict] = []
    for part_rewiring, part_shifts, fails in _map(cfg, _one, _grid(cfg)):
        failures.extend(fails)
        for key, values in part_rewiring.items():
            rewiring.setdefault(key, []).extend(values)
        for key, values in part_shifts.items():
            shifts.setdefault(key, []).extend(values)

    return ResultBundle(
        experiment=cfg.name,
        tables={
            "rewiring": pd.DataFrame(_stats_rows(rewiring, PROPERTY_COLUMNS[:4]), columns=PROPERTY_COLUMNS),
            "attack_homophily": pd.DataFrame(
                _stats_rows(shifts, ATTACK_HOMOPHILY_COLUMNS[:4]), columns=ATTACK_HOMOPHILY_COLUMNS
            ),
        },
        failures=failures,
        provenance=provenance(cfg, "graph-properties"),
    )


RANKING_COLUMNS = [
    "K",
    "attack",
    "budget",
    "classifier",
    "R_f",
    "R_adv",
    "F_beta",
    "rank_R_f",
    "rank_R_adv",
    "rank_F_beta",
    "rank_changed",
]


def robustness_ranking(bundle: ResultBundle) -> pd.DataFrame:
    """Rank classifiers within each (K, attack, budget) by conventional and semantics-aware metrics.

    ``rank_changed`` marks classifiers whose rank by R_f differs from their rank by F_beta.
    """
    agg = bundle.seed_aggregate_frame()
    if agg.empty:
        return pd.DataFrame(columns=RANKING_COLUMNS)
    df = agg.rename(columns={"R_f_mean": "R_f", "R_adv_mean": "R_adv", "F_beta_mean": "F_beta"})
    df = df[["K", "attack", "budget", "classifier", "R_f", "R_adv", "F_beta"]].copy()
    df["_K"] = df["K"].fillna(-1.0)
    groups = df.groupby(["_K", "attack", "budget"], sort=True)
    for col in ("R_f", "R_adv", "F_beta"):
        df[f"rank_{col}"] = groups[col].rank(ascending=False, method="min")
    df["rank_changed"] = df["rank_R_f"] != df["rank_F_beta"]
    df = df.sort_values(["_K", "attack", "budget", "rank_F_beta", "classifier"], kind="mergesort")
    return df.drop(columns="_K").reset_index(drop=True)[RANKING_COLUMNS]


def generate(cfg: ExperimentConfig, K: Optional[float] = None, seed: Optional[int] = None) -> Tuple[Graph, Dict[str, float]]:
    """Sample (or ingest) one training graph and its statistics."""
    if cfg.model.synthetic:
        K = cfg.ks[0] if K is None else K
    inst_seed = cfg.base_seed if seed is None else seed
    if cfg.model.synthetic:
        g = sample_graph(cfg.model.gen_model(K), derive_seed(inst_seed, "graph", _k_key(K)))
    else:
        f = cfg.model.files
        g = ingest_real_graph(f["edges"], f["features"], f["labels"], f.get("mask"))
    return g, graph_statistics(g)


def mean_degree_statistics(cfg: ExperimentConfig, K: float) -> Dict[str, float]:
    _require_synthetic(cfg, "graph statistics")
    degs = [generate(cfg, K, s)[1]["mean_degree"] for s in cfg.seed_list()]
    return mean_std_stderr(degs)

