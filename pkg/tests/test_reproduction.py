"""Reproduction of the reference numbers.

The scaled-down checks always run; the desk-scale ones are slow and need ROBUSTLENS_SLOW=1.
"""

import os
import tempfile
import unittest
from dataclasses import replace
from itertools import combinations
from pathlib import Path

from scipy import stats

from robustlens.acceptance import check_bundle, check_mean_degree
from robustlens.attacks import BudgetSpec, apply_plan, plan_dice, plan_l2_strong, plan_l2_weak, plan_optimal_bayes
from robustlens.bayes import affinity_potential, bayes_predictor, classify_bayes, optimal_toggles, semantic_flip_count
from robustlens.classifiers import TrainConfig
from robustlens.config import AttackSpec, ClassifierSpec, ExperimentConfig, ModelSpec, load_config
from robustlens.graph import GenModel
from robustlens.graphgen import extend_graph, sample_graph
from robustlens.harness import (
    bayes_accuracy_table,
    build_instance,
    mean_degree_statistics,
    over_robustness_sweep,
    semantic_violation_table,
)
from robustlens.metrics import expected_losses_bruteforce, robustness_trace
from robustlens.report import emit_results


SLOW = os.environ.get("ROBUSTLENS_SLOW") == "1"


def _assert_checks(case, checks, at_least):
    case.assertGreaterEqual(len(checks), at_least)
    failed = [c for c in checks if not c.passed]
    case.assertEqual(failed, [])


class TestScaledDown(unittest.TestCase):
    """The reference checks at one seed and a few hundred test nodes, with tolerances to match."""

    def small(self, **overrides):
        cfg = replace(ExperimentConfig(name="scaled-down"), seeds=1, test_nodes=300)
        return replace(cfg, **overrides)

    def test_bayes_accuracy(self):
        acc = bayes_accuracy_table(self.small(ks=(0.1, 5.0))).tables["bayes_accuracy"]
        mean = {(row.K, row.mode): row.mean for row in acc.itertuples()}
        self.assertAlmostEqual(mean[(0.1, "full")], 0.897, delta=0.06)
        self.assertGreaterEqual(mean[(5.0, "full")], 0.98)
        self.assertGreaterEqual(mean[(5.0, "features")], 0.97)
        self.assertGreater(mean[(0.1, "full")], mean[(0.1, "features")])

    def test_semantic_violations(self):
        budgets = tuple(BudgetSpec.parse(b) for b in ("2", "deg+2"))
        cfg = self.small(ks=(0.1, 1.0), attacks=(AttackSpec("l2-weak", budgets=budgets),))
        table = semantic_violation_table(cfg).tables["semantic_violation"]
        mean = {(row.budget, row.K): row.mean for row in table.itertuples()}
        self.assertAlmostEqual(mean[("B2", 1.0)], 0.257, delta=0.08)
        self.assertGreaterEqual(mean[("Bdeg+2", 0.1)], 0.97)

    def test_mean_degree(self):
        for variant, expected in (("csbm", 3.93), ("cba", 3.94)):
            with self.subTest(variant=variant):
                cfg = self.small(model=ModelSpec(variant=variant), seeds=2)
                self.assertAlmostEqual(mean_degree_statistics(cfg, 1.0)["mean"], expected, delta=0.3)

    def test_lp_lowers_over_robustness(self):
        cfg = self.small(
            ks=(0.5,),
            classifiers=(ClassifierSpec("GCN"), ClassifierSpec("GCN+LP")),
            attacks=(AttackSpec("l2-weak"),),
        )
        bundle = over_robustness_sweep(cfg)
        self.assertEqual(bundle.failures, [])
        r_over = {c.classifier: c.summary.R_over for c in bundle.cells}
        self.assertLess(r_over["GCN+LP"], r_over["GCN"])
        self.assertAlmostEqual(r_over["GCN"], 0.303, delta=0.12)

    def test_flip_count_never_beaten(self):
        checked = 0
        for seed in range(15):
            model = GenModel.csbm(n=14, p=0.3, q=0.05, K=0.5, d=2)
            g = extend_graph(sample_graph(model, seed), 1, 2000 + seed)
            v = g.n - 1
            t = semantic_flip_count(g, v)
            if not t:
                continue
            y = int(g.labels[v])
            for size in range(1, min(t, 3)):
                for us in combinations(range(v), size):
                    add = [(v, u) for u in us if not g.has_edge(v, u)]
                    remove = [(v, u) for u in us if g.has_edge(v, u)]
                    self.assertEqual(classify_bayes(g.with_edges(add=add, remove=remove), v), y)
            checked += 1
        self.assertGreater(checked, 3)

    def test_small_sweep_is_byte_identical(self):
        cfg = self.small(
            ks=(1.0,),
            test_nodes=30,
            classifiers=(
                ClassifierSpec("MLP", train=TrainConfig(max_epochs=50, patience=10)),
                ClassifierSpec("GCN", train=TrainConfig(max_epochs=50, patience=10), hidden_dim=16),
            ),
            attacks=(
                AttackSpec("l2-weak", budgets=(BudgetSpec.fixed(2), BudgetSpec.degree())),
                AttackSpec("dice", budgets=(BudgetSpec.degree(),)),
            ),
        )
        formats = ["csv", "json", "svg"]
        with tempfile.TemporaryDirectory() as tmp:
            root = Path(tmp)
            a = emit_results(over_robustness_sweep(cfg), root / "a", formats)
            b = emit_results(over_robustness_sweep(cfg), root / "b", formats)
            self.assertEqual([p.relative_to(root / "a") for p in a], [p.relative_to(root / "b") for p in b])
            for pa, pb in zip(a, b):
                self.assertEqual(pa.read_bytes(), pb.read_bytes(), msg=str(pa))


@unittest.skipUnless(SLOW, "set ROBUSTLENS_SLOW=1 to run reproduction checks")
class TestReferenceTables(unittest.TestCase):
    def test_bayes_accuracy(self):
        cfg = replace(ExperimentConfig(name="bayes"), ks=(0.1, 5.0), workers=4)
        bundle = bayes_accuracy_table(cfg)
        _assert_checks(self, check_bundle(bundle, cfg), 3)
        acc = bundle.tables["bayes_accuracy"]
        low = acc[(acc["K"] == 0.1) & (acc["mode"] == "features")]["mean"].iloc[0]
        self.assertAlmostEqual(low, 0.5, delta=0.02)

    def test_semantic_violations(self):
        cfg = replace(
            ExperimentConfig(name="violations"),
            ks=(0.1, 1.0, 2.0),
            attacks=(AttackSpec("l2-weak", budgets=tuple(BudgetSpec.parse(b) for b in ("1", "2", "deg+2"))),),
            workers=4,
        )
        _assert_checks(self, check_bundle(semantic_violation_table(cfg), cfg), 3)

    def test_mean_degree(self):
        for variant in ("csbm", "cba"):
            with self.subTest(variant=variant):
                cfg = replace(ExperimentConfig(name=variant), model=ModelSpec(variant=variant))
                observed = mean_degree_statistics(cfg, 1.0)["mean"]
                _assert_checks(self, check_mean_degree(cfg, observed), 1)

    def test_over_robustness_ordering(self):
        cfg = replace(
            ExperimentConfig(name="over-robustness"),
            ks=(0.5,),
            seeds=3,
            test_nodes=300,
            classifiers=(ClassifierSpec("GCN"), ClassifierSpec("GCN+LP")),
            attacks=(AttackSpec("l2-weak"),),
            workers=3,
        )
        bundle = over_robustness_sweep(cfg)
        self.assertEqual(bundle.failures, [])
        _assert_checks(self, check_bundle(bundle, cfg), 3)


@unittest.skipUnless(SLOW, "set ROBUSTLENS_SLOW=1 to run reproduction checks")
class TestOracles(unittest.TestCase):
    def test_flip_count_never_beaten(self):
        checked = 0
        for seed in range(50):
            model = GenModel.csbm(n=20, p=0.25, q=0.05, K=0.5, d=2)
            g = extend_graph(sample_graph(model, seed), 1, 1000 + seed)
            v = g.n - 1
            for toggle in optimal_toggles(g, v):
                self.assertAlmostEqual(abs(toggle.potential), abs(affinity_potential(model)), delta=1e-10)
            t = semantic_flip_count(g, v)
            if not t:
                continue
            y = int(g.labels[v])
            for size in range(1, min(t, 4)):
                for us in combinations(range(v), size):
                    add = [(v, u) for u in us if not g.has_edge(v, u)]
                    remove = [(v, u) for u in us if g.has_edge(v, u)]
                    self.assertEqual(classify_bayes(g.with_edges(add=add, remove=remove), v), y)
            checked += 1
        self.assertGreater(checked, 10)

    def test_expected_losses(self):
        g = sample_graph(GenModel.csbm(n=15, p=0.3, q=0.05, K=1.0, d=2), 0)
        bayes = bayes_predictor()

        def flipped(h, v):
            return bayes(h, v)[::-1]

        ref = expected_losses_bruteforce(g, bayes, samples=500, toggle_budget=2, seed=4)
        out = expected_losses_bruteforce(g, flipped, samples=500, toggle_budget=2, seed=4)
        self.assertEqual((ref.adv_loss, ref.over_loss), (0.0, 0.0))
        self.assertEqual(out.robust_loss, 0.0)
        errors = round(out.std_loss * out.samples)
        self.assertLess(stats.binomtest(errors, out.samples, 0.5, alternative="greater").pvalue, 0.01)
        self.assertGreater(out.std_loss, ref.std_loss)

    def test_attacks_agree_on_bayes(self):
        cfg = replace(ExperimentConfig(name="equivalence"), test_nodes=100)
        bayes = bayes_predictor()
        budget = BudgetSpec.degree_plus(2)
        t_g = {"l2-weak": [], "l2-strong": [], "dice": []}
        for seed in range(3):
            inst = build_instance(cfg, 1.0, seed)
            for i, (g, v) in enumerate(inst.tests):
                plans = {
                    "l2-weak": plan_l2_weak(g, v, budget),
                    "l2-strong": plan_l2_strong(g, v, budget),
                    "dice": plan_dice(g, v, budget, seed * 1000 + i),
                }
                for tag, plan in plans.items():
                    r = robustness_trace(g, v, plan, bayes, bayes, budget)
                    t_g[tag].append(r.budget_used + 1 if r.t_g is None else r.t_g)
        for tag in ("l2-strong", "dice"):
            self.assertGreater(stats.ks_2samp(t_g["l2-weak"], t_g[tag]).pvalue, 0.01)

    def test_optimal_attack_is_fastest(self):
        cfg = replace(ExperimentConfig(name="optimal"), test_nodes=100)
        budget = BudgetSpec.degree_plus(2)
        inst = build_instance(cfg, 1.0, 0)
        for g, v in inst.tests:
            y = int(g.labels[v])
            t = semantic_flip_count(g, v, budget.resolve(g.degree(v)))
            if not t:
                continue
            self.assertNotEqual(classify_bayes(apply_plan(g, plan_optimal_bayes(g, v, budget), t), v), y)
            weak = apply_plan(g, plan_l2_weak(g, v, budget), t - 1)
            self.assertEqual(classify_bayes(weak, v), y)


@unittest.skipUnless(SLOW, "set ROBUSTLENS_SLOW=1 to run reproduction checks")
class TestDeterminism(unittest.TestCase):
    def test_quick_sweep_is_byte_identical(self):
        cfg = load_config("configs/quick.json")
        cfg = replace(
            cfg,
            attacks=tuple(a for a in cfg.attacks if a.tag in ("l2-weak", "dice")),
            classifiers=tuple(replace(c, train=TrainConfig(max_epochs=100, patience=20)) for c in cfg.classifiers),
        )
        with tempfile.TemporaryDirectory() as tmp:
            root = Path(tmp)
            a = emit_results(over_robustness_sweep(cfg), root / "a", ["csv", "json"])
            b = emit_results(over_robustness_sweep(cfg), root / "b", ["csv", "json"])
            self.assertEqual([p.relative_to(root / "a") for p in a], [p.relative_to(root / "b") for p in b])
            for pa, pb in zip(a, b):
                self.assertEqual(pa.read_bytes(), pb.read_bytes(), msg=str(pa))


if __name__ == "__main__":
    unittest.main()
