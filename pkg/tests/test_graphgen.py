import math
import tempfile
import unittest
from pathlib import Path

import numpy as np

from robustlens.errors import FormatError, ParameterError, UnsupportedError
from robustlens.graph import CBA_DEFAULT_OMEGA, GenModel, Graph, feature_dim
from robustlens.graphgen import extend_graph, graph_statistics, ingest_real_graph, sample_graph


class TestGenModel(unittest.TestCase):
    def test_feature_dim_for_reference_size(self):
        self.assertEqual(feature_dim(1000), 21)

    def test_class_means_are_k_sigma_apart(self):
        for K in (0.1, 1.0, 5.0):
            m = GenModel.csbm(n=100, p=0.1, q=0.01, K=K, sigma=2.0)
            means = m.means()
            self.assertAlmostEqual(float(np.linalg.norm(means[1] - means[0])), K * 2.0, places=9)

    def test_invalid_parameters(self):
        with self.assertRaises(ParameterError):
            GenModel.csbm(n=100, p=0.01, q=0.1, K=1.0)
        with self.assertRaises(ParameterError):
            GenModel.csbm(n=0, p=0.1, q=0.01, K=1.0)
        with self.assertRaises(ParameterError):
            GenModel.cba(n=100, m=2, K=1.0, omega=[[1.0, 2.0], [2.0, 1.0]])
        with self.assertRaises(ParameterError):
            GenModel.cba(n=100, m=2, K=1.0, omega=[[3.0, 0.5], [0.7, 3.0]])
        with self.assertRaises(ParameterError):
            GenModel.cba(n=100, m=0, K=1.0)

    def test_cba_default_affinity(self):
        m = GenModel.cba(n=100, m=2, K=1.0)
        self.assertEqual(m.omega, CBA_DEFAULT_OMEGA)


class TestSampleGraph(unittest.TestCase):
    def test_same_seed_same_graph(self):
        model = GenModel.csbm(n=200, p=0.05, q=0.01, K=1.0)
        self.assertEqual(sample_graph(model, 7), sample_graph(model, 7))
        self.assertNotEqual(sample_graph(model, 7), sample_graph(model, 8))

    def test_zero_probabilities_give_no_edges(self):
        g = sample_graph(GenModel.csbm(n=50, p=0.0, q=0.0, K=1.0), 1)
        self.assertEqual(len(g.edges), 0)
        self.assertEqual(g.n, 50)
        self.assertTrue(g.known_mask.all())

    def test_json_round_trip(self):
        for model in (GenModel.csbm(n=80, p=0.1, q=0.02, K=1.5), GenModel.cba(n=80, m=2, K=1.5)):
            g = sample_graph(model, 3)
            self.assertEqual(Graph.from_json(g.to_json()), g)

    def test_cba_attaches_between_one_and_m_predecessors(self):
        m = 3
        g = sample_graph(GenModel.cba(n=200, m=m, K=1.0), 11)
        back = np.zeros(g.n, dtype=int)
        for i, j in g.edges:
            back[max(i, j)] += 1
        self.assertEqual(back[0], 0)
        self.assertTrue(np.all((back[1:] >= 1) & (back[1:] <= m)))
        self.assertLessEqual(len(g.edges), m * (g.n - 1))

    def test_features_follow_class_means(self):
        model = GenModel.csbm(n=2000, p=0.0, q=0.0, K=4.0, d=3)
        g = sample_graph(model, 5)
        for c in (0, 1):
            emp = g.features[g.labels == c].mean(axis=0)
            np.testing.assert_allclose(emp, model.means()[c], atol=0.15)

    def test_same_class_edge_frequency_tracks_p(self):
        p, q = 0.05, 0.01
        g = sample_graph(GenModel.csbm(n=400, p=p, q=q, K=1.0), 2)
        y = g.labels
        n0 = int((y == 0).sum())
        n1 = g.n - n0
        same_pairs = n0 * (n0 - 1) / 2 + n1 * (n1 - 1) / 2
        same_edges = sum(1 for i, j in g.edges if y[i] == y[j])
        freq = same_edges / same_pairs
        sd = math.sqrt(p * (1 - p) / same_pairs)
        self.assertLess(abs(freq - p), 5 * sd)


class TestExtendGraph(unittest.TestCase):
    def test_existing_graph_unchanged(self):
        g = sample_graph(GenModel.csbm(n=100, p=0.05, q=0.01, K=1.0), 4)
        h = extend_graph(g, 3, 9)
        self.assertEqual(h.n, 103)
        np.testing.assert_array_equal(h.features[:100], g.features)
        np.testing.assert_array_equal(h.labels[:100], g.labels)
        self.assertTrue(g.edges <= h.edges)
        self.assertTrue(all(max(e) >= 100 for e in h.edges - g.edges))
        self.assertFalse(h.known_mask[100:].any())
        self.assertTrue(h.known_mask[:100].all())
        self.assertEqual(h.gen.n, 103)

    def test_deterministic(self):
        g = sample_graph(GenModel.cba(n=60, m=2, K=1.0), 4)
        self.assertEqual(extend_graph(g, 2, 5), extend_graph(g, 2, 5))

    def test_new_node_degree_matches_expectation(self):
        model = GenModel.csbm(n=300, p=0.02, q=0.005, K=1.0)
        g = sample_graph(model, 6)
        counts = np.bincount(g.labels, minlength=2)
        # a new node is of either class with probability 1/2
        expected = 0.5 * (counts[0] * model.p + counts[1] * model.q) + 0.5 * (counts[1] * model.p + counts[0] * model.q)
        degs = [extend_graph(g, 1, s).degree(g.n) for s in range(400)]
        self.assertLess(abs(float(np.mean(degs)) - expected), 0.4)

    def test_real_graph_cannot_be_extended(self):
        g = Graph.build(features=np.zeros((2, 1)), edges=[(0, 1)], labels=[0, 1])
        with self.assertRaises(UnsupportedError):
            extend_graph(g, 1, 0)

    def test_count_must_be_positive(self):
        g = sample_graph(GenModel.csbm(n=10, p=0.1, q=0.01, K=1.0), 0)
        with self.assertRaises(ParameterError):
            extend_graph(g, 0, 0)


class TestIngest(unittest.TestCase):
    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self._tmp.name)

    def tearDown(self):
        self._tmp.cleanup()

    def _files(self, edges: str, features: str = "0.1,1\n0.2,2\n0.3,3\n", labels: str = "0\n1\n0\n"):
        paths = []
        for name, text in (("edges.csv", edges), ("features.csv", features), ("labels.csv", labels)):
            p = self.dir / name
            p.write_text(text, encoding="utf-8")
            paths.append(p)
        return paths

    def test_path_graph(self):
        g = ingest_real_graph(*self._files("0,1\n1,2\n"))
        self.assertEqual(g.edges, frozenset({(0, 1), (1, 2)}))
        self.assertIsNone(g.gen)
        self.assertEqual(g.num_classes, 2)
        self.assertEqual(g.features.shape, (3, 2))

    def test_reversed_and_duplicate_lines_collapse(self):
        g = ingest_real_graph(*self._files("0,1\n1,0\n0,1\n"))
        self.assertEqual(g.edges, frozenset({(0, 1)}))

    def test_self_loop_rejected_with_line(self):
        with self.assertRaises(FormatError) as ctx:
            ingest_real_graph(*self._files("0,1\n2,2\n"))
        self.assertEqual(ctx.exception.line, 2)

    def test_out_of_range_index(self):
        with self.assertRaises(FormatError) as ctx:
            ingest_real_graph(*self._files("0,3\n"))
        self.assertEqual(ctx.exception.line, 1)

    def test_non_numeric_cell(self):
        with self.assertRaises(FormatError) as ctx:
            ingest_real_graph(*self._files("0,1\n1,x\n"))
        self.assertEqual(ctx.exception.line, 2)

    def test_row_count_mismatch(self):
        with self.assertRaises(FormatError):
            ingest_real_graph(*self._files("0,1\n", labels="0\n1\n"))

    def test_mask_file(self):
        edges, features, labels = self._files("0,1\n")
        mask = self.dir / "mask.csv"
        mask.write_text("1\n1\n0\n", encoding="utf-8")
        g = ingest_real_graph(edges, features, labels, mask)
        self.assertEqual(g.known_mask.tolist(), [True, True, False])
        mask.write_text("1\n2\n1\n", encoding="utf-8")
        with self.assertRaises(FormatError):
            ingest_real_graph(edges, features, labels, mask)

    def test_every_class_needs_a_labelled_node(self):
        edges, features, labels = self._files("0,1\n")
        mask = self.dir / "mask.csv"
        # class 1 only appears on the unlabelled node
        mask.write_text("1\n0\n1\n", encoding="utf-8")
        with self.assertRaises(FormatError) as ctx:
            ingest_real_graph(edges, features, labels, mask)
        self.assertIn("class 1", str(ctx.exception))
        # a gap in the label values leaves class 1 empty
        labels.write_text("0\n2\n0\n", encoding="utf-8")
        with self.assertRaises(FormatError):
            ingest_real_graph(edges, features, labels)

    def test_missing_file(self):
        edges, features, _ = self._files("0,1\n")
        with self.assertRaises(FileNotFoundError):
            ingest_real_graph(edges, features, self.dir / "nope.csv")


class TestGraphStatistics(unittest.TestCase):
    def test_counts(self):
        g = Graph.build(features=np.zeros((4, 1)), edges=[(0, 1), (1, 2), (2, 3)], labels=[0, 0, 1, 1])
        stats = graph_statistics(g)
        self.assertEqual(stats["nodes"], 4)
        self.assertEqual(stats["edges"], 3)
        self.assertAlmostEqual(stats["mean_degree"], 1.5)
        self.assertAlmostEqual(stats["mean_same_class_degree"], 1.0)
        self.assertAlmostEqual(stats["mean_diff_class_degree"], 0.5)


if __name__ == "__main__":
    unittest.main()
