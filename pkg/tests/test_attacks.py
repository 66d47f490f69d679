import math
import unittest

import numpy as np

from robustlens.attacks import (
    BudgetSpec,
    EdgeOp,
    PerturbationPlan,
    apply_plan,
    degree_preserving_rewire,
    greedy_margin_attack,
    plan_dice,
    plan_is_local,
    plan_l2_strong,
    plan_l2_weak,
    plan_optimal_bayes,
    plan_per_class_l2,
    replay,
    rewire_homophilic,
)
from robustlens.bayes import change_potential
from robustlens.classifiers import constant_predictor
from robustlens.errors import (
    EmptyCandidateError,
    ParameterError,
    PlanConflictError,
    RewireConflictError,
    UnsupportedError,
)
from robustlens.graph import GenModel, Graph
from robustlens.graphgen import extend_graph, sample_graph
from robustlens.graphstats import dac, homophilic_edge_fraction


def _circle_graph():
    # node 0 (class 0) at the origin, nodes 1-4 (class 1) on the unit circle, node 5 (class 0) far away
    X = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0], [9.0, 9.0]])
    return Graph.build(features=X, edges=[(0, 5)], labels=[0, 1, 1, 1, 1, 0])


def _targets(plan):
    return [op.other(plan.target) for op in plan.ops]


class TestBudgetSpec(unittest.TestCase):
    def test_parse_and_label(self):
        cases = {
            "1": "B1",
            "b2": "B2",
            "0": "B0",
            "deg": "Bdeg",
            "deg+2": "Bdeg+2",
            "unbounded": "Bunbounded128",
            "unbounded:64": "Bunbounded64",
        }
        for text, label in cases.items():
            self.assertEqual(BudgetSpec.parse(text).label, label)
        self.assertEqual(BudgetSpec.parse(3), BudgetSpec.fixed(3))

    def test_resolve(self):
        self.assertEqual(BudgetSpec.fixed(2).resolve(7), 2)
        self.assertEqual(BudgetSpec.degree().resolve(7), 7)
        self.assertEqual(BudgetSpec.degree_plus(2).resolve(7), 9)
        self.assertEqual(BudgetSpec.unbounded(50).resolve(7), 50)

    def test_invalid(self):
        for text in ("deg-1", "b", "many", "unbounded:0"):
            with self.assertRaises(ParameterError):
                BudgetSpec.parse(text)


class TestPlans(unittest.TestCase):
    def test_edge_op_validation(self):
        with self.assertRaises(ParameterError):
            EdgeOp.insert(2, 2)
        with self.assertRaises(ParameterError):
            EdgeOp("flip", (0, 1))

    def test_l2_weak_ties_by_index(self):
        plan = plan_l2_weak(_circle_graph(), 0, 3)
        self.assertEqual(_targets(plan), [1, 2, 3])
        self.assertTrue(all(op.kind == "insert" for op in plan.ops))
        self.assertEqual(plan.attack_tag, "l2-weak")

    def test_l2_weak_skips_neighbours_and_same_class(self):
        g = _circle_graph().with_edges(add=[(0, 2)])
        self.assertEqual(_targets(plan_l2_weak(g, 0, 10)), [1, 3, 4])

    def test_budget_larger_than_pool(self):
        X = np.array([[0.0], [1.0], [2.0]])
        g = Graph.build(features=X, edges=[], labels=[0, 1, 0])
        self.assertEqual(len(plan_l2_weak(g, 0, BudgetSpec.fixed(2))), 1)

    def test_l2_strong_picks_farthest(self):
        X = np.array([[0.0], [1.0], [3.0]])
        g = Graph.build(features=X, edges=[], labels=[0, 1, 1])
        self.assertEqual(_targets(plan_l2_strong(g, 0, 2)), [2, 1])
        single = Graph.build(features=X, edges=[], labels=[0, 1, 0])
        self.assertEqual(_targets(plan_l2_strong(single, 0, 2)), _targets(plan_l2_weak(single, 0, 2)))

    def test_no_different_class_node(self):
        g = Graph.build(features=np.zeros((3, 1)), edges=[], labels=[0, 0, 0], num_classes=2)
        with self.assertRaises(EmptyCandidateError):
            plan_l2_weak(g, 0, 1)

    def test_degree_budget(self):
        plan = plan_l2_weak(_circle_graph(), 0, BudgetSpec.degree())
        self.assertEqual(len(plan), 1)
        self.assertEqual(len(plan_l2_weak(_circle_graph(), 0, BudgetSpec.degree_plus(2))), 3)

    def test_zero_budget(self):
        self.assertEqual(len(plan_l2_weak(_circle_graph(), 0, 0)), 0)

    def test_dice_seeded(self):
        g = _circle_graph()
        a = plan_dice(g, 0, 3, seed=5)
        self.assertEqual(a, plan_dice(g, 0, 3, seed=5))
        self.assertEqual(len(plan_dice(g, 0, 10, seed=5)), 4)
        self.assertTrue(set(_targets(a)) <= {1, 2, 3, 4})

    def test_per_class_identity_and_zero_projection(self):
        g = _circle_graph()
        plain = plan_per_class_l2(g, 0, 1, 4)
        self.assertEqual(_targets(plain), _targets(plan_per_class_l2(g, 0, 1, 4, np.eye(2))))
        self.assertEqual(_targets(plan_per_class_l2(g, 0, 1, 4, np.zeros((3, 2)))), [1, 2, 3, 4])
        self.assertEqual(_targets(plain), _targets(plan_l2_weak(g, 0, 4)))
        self.assertEqual(plain.attack_tag, "per-class-l2:1")

    def test_per_class_multi_class(self):
        X = np.array([[0.0], [5.0], [1.0], [2.0]])
        g = Graph.build(features=X, edges=[], labels=[0, 2, 1, 2])
        self.assertEqual(_targets(plan_per_class_l2(g, 0, 2, 2)), [3, 1])
        with self.assertRaises(ParameterError):
            plan_per_class_l2(g, 0, 0, 2)
        with self.assertRaises(ParameterError):
            plan_per_class_l2(g, 0, 5, 2)
        with self.assertRaises(ParameterError):
            plan_per_class_l2(g, 0, 2, 2, np.ones((2, 3)))

    def test_plan_serialization(self):
        plan = plan_l2_weak(_circle_graph(), 0, 2)
        self.assertEqual(PerturbationPlan.from_dict(plan.to_dict()), plan)
        self.assertTrue(plan_is_local(plan))


class TestReplay(unittest.TestCase):
    def test_apply_and_replay(self):
        g = _circle_graph()
        plan = PerturbationPlan(0, (EdgeOp.insert(0, 1), EdgeOp.delete(0, 5)), "manual")
        out = apply_plan(g, plan)
        self.assertEqual(out.edges, frozenset({(0, 1)}))
        steps = list(replay(g, plan))
        self.assertEqual(len(steps), 2)
        self.assertEqual(steps[0].edges, frozenset({(0, 1), (0, 5)}))
        self.assertEqual(apply_plan(g, plan, 1), steps[0])

    def test_conflicts(self):
        g = _circle_graph()
        with self.assertRaises(PlanConflictError):
            apply_plan(g, PerturbationPlan(0, (EdgeOp.insert(0, 5),), "manual"))
        with self.assertRaises(PlanConflictError):
            apply_plan(g, PerturbationPlan(0, (EdgeOp.delete(0, 1),), "manual"))


class TestOptimalBayes(unittest.TestCase):
    def test_one_potential_magnitude(self):
        g = extend_graph(sample_graph(GenModel.csbm(n=150, p=0.05, q=0.01, K=1.0), 1), 1, 2)
        v = g.n - 1
        plan = plan_optimal_bayes(g, v, BudgetSpec.unbounded(20))
        self.assertGreater(len(plan), 0)
        mags = [abs(change_potential(g, v, op.other(v))) for op in plan.ops]
        self.assertTrue(all(math.isclose(m, mags[0], rel_tol=1e-9) for m in mags))
        kinds = [op.kind for op in plan.ops]
        self.assertEqual(kinds, sorted(kinds, key=lambda k: k != "insert"))

    def test_no_same_class_neighbour_means_inserts(self):
        model = GenModel.csbm(n=4, p=0.3, q=0.05, K=1.0, d=1)
        g = Graph.build(features=np.zeros((4, 1)), edges=[(0, 1)], labels=[0, 1, 1, 0], gen=model)
        plan = plan_optimal_bayes(g, 0, 5)
        self.assertTrue(all(op.kind == "insert" for op in plan.ops))
        self.assertEqual(_targets(plan), [2])

    def test_needs_model(self):
        with self.assertRaises(UnsupportedError):
            plan_optimal_bayes(_circle_graph(), 0, 2)


def _linear_predict(g, v):
    # class-1 score is the feature sum over v and its neighbours
    s = g.features[v, 0] + g.features[g.neighbors(v), 0].sum()
    p1 = 1.0 / (1.0 + math.exp(-s))
    return np.array([1.0 - p1, p1])


class TestGreedyMargin(unittest.TestCase):
    def test_constant_model_never_flips(self):
        g = _circle_graph()
        plan = greedy_margin_attack(g, 0, constant_predictor(0, 2), 3)
        self.assertEqual(len(plan), 3)
        self.assertEqual(len({op.other(0) for op in plan.ops}), 3)

    def test_single_flipping_insertion(self):
        X = np.array([[-1.5], [3.0], [0.5], [-1.0], [-1.0]])
        g = Graph.build(features=X, edges=[(0, 3)], labels=[0, 1, 1, 0, 0])
        plan = greedy_margin_attack(g, 0, _linear_predict, 3)
        self.assertEqual(plan.ops, (EdgeOp.insert(0, 1),))
        self.assertEqual(int(np.argmax(_linear_predict(apply_plan(g, plan), 0))), 1)

    def test_candidate_pool(self):
        X = np.array([[-1.5], [3.0], [0.5], [-1.0], [-1.0]])
        g = Graph.build(features=X, edges=[(0, 3)], labels=[0, 1, 1, 0, 0])
        plan = greedy_margin_attack(g, 0, _linear_predict, 1, candidates=[2, 3])
        self.assertEqual(plan.ops, (EdgeOp.delete(0, 3),))


class TestRewiring(unittest.TestCase):
    def _square(self):
        X = np.zeros((4, 1))
        return Graph.build(features=X, edges=[(0, 1), (2, 3)], labels=[0, 0, 1, 1])

    def test_rewire_keeps_degrees(self):
        g = self._square()
        h = degree_preserving_rewire(g, (0, 1), (2, 3))
        np.testing.assert_array_equal(h.degrees, g.degrees)
        self.assertEqual(h.edges, frozenset({(0, 3), (1, 2)}))
        self.assertTrue(all(h.labels[i] != h.labels[j] for i, j in h.edges))

    def test_rewire_conflicts(self):
        g = self._square()
        with self.assertRaises(RewireConflictError):
            degree_preserving_rewire(g, (0, 1), (0, 2))
        with self.assertRaises(RewireConflictError):
            degree_preserving_rewire(g.with_edges(add=[(1, 2)]), (0, 1), (1, 2))
        with self.assertRaises(RewireConflictError):
            degree_preserving_rewire(g.with_edges(add=[(0, 3)]), (0, 1), (2, 3))

    def test_homophilic_rewiring_lowers_homophily(self):
        g = sample_graph(GenModel.csbm(n=300, p=0.04, q=0.005, K=1.0), 3)
        h = rewire_homophilic(g, rounds=40, seed=1)
        np.testing.assert_array_equal(h.degrees, g.degrees)
        self.assertLess(homophilic_edge_fraction(h), homophilic_edge_fraction(g))

    def test_degree_matched_rewiring_keeps_assortativity(self):
        g = sample_graph(GenModel.csbm(n=300, p=0.04, q=0.005, K=1.0), 4)
        h = rewire_homophilic(g, rounds=20, seed=2, match_degrees=True)
        self.assertNotEqual(h.edges, g.edges)
        self.assertEqual(dac(g, h), 0.0)


if __name__ == "__main__":
    unittest.main()
