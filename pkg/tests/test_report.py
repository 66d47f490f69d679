import json
import tempfile
import unittest
from pathlib import Path

import pandas as pd

from robustlens.errors import FormatError
from robustlens.metrics import RobustnessRecord, aggregate
from robustlens.report import SUMMARY_COLUMNS, CellResult, ResultBundle, emit_results


def _records():
    return [
        RobustnessRecord(node=3, degree=2, t_f=2, t_g=None, budget_used=4, clean_f_correct=True, clean_agree=True),
        RobustnessRecord(node=7, degree=1, t_f=None, t_g=1, budget_used=1, clean_f_correct=True, clean_agree=True),
        RobustnessRecord(node=9, degree=0, t_f=None, t_g=None, budget_used=0, clean_f_correct=False, clean_agree=True),
    ]


def _bundle():
    recs = _records()
    cells = [
        CellResult(K=1.0, seed=1, classifier="GCN", attack="l2-weak", budget="Bdeg", records=recs, summary=aggregate(recs)),
        CellResult(K=1.0, seed=0, classifier="GCN", attack="l2-weak", budget="Bdeg", records=recs, summary=aggregate(recs)),
        CellResult(K=0.5, seed=0, classifier="MLP", attack="dice", budget="B2", error="PlanConflictError: boom"),
    ]
    table = pd.DataFrame({"K": [0.5, 1.0], "mode": ["full", "full"], "mean": [0.9, 0.95], "n": [3, 4]})
    return ResultBundle(
        experiment="unit test",
        cells=cells,
        tables={"bayes_accuracy": table},
        failures=[{"seed": 0, "attack": "dice", "error": "boom"}],
        provenance={"config_hash": "abc123", "package_version": "test"},
    )


class TestReport(unittest.TestCase):
    def setUp(self):
        tmp = tempfile.TemporaryDirectory()
        self.addCleanup(tmp.cleanup)
        self.out = Path(tmp.name)

    def test_summary_frame_is_sorted(self):
        df = _bundle().summary_frame()
        self.assertEqual(list(df.columns), list(SUMMARY_COLUMNS))
        self.assertEqual(list(zip(df["K"], df["seed"])), [(0.5, 0), (1.0, 0), (1.0, 1)])
        self.assertTrue(pd.isna(df.loc[0, "R_f"]))
        self.assertEqual(df.loc[1, "excluded_zero_degree"], 1)

    def test_seed_aggregate(self):
        agg = _bundle().seed_aggregate_frame()
        gcn = agg[agg["classifier"] == "GCN"].iloc[0]
        self.assertEqual(gcn["seeds"], 2)
        self.assertAlmostEqual(gcn["R_f_std"], 0.0)
        mlp = agg[agg["classifier"] == "MLP"].iloc[0]
        self.assertTrue(pd.isna(mlp["R_f_mean"]))

    def test_empty_bundle_writes_header_only(self):
        written = emit_results(ResultBundle(experiment="empty"), self.out, ["csv"])
        summary = self.out / "empty" / "summary.csv"
        self.assertIn(summary, written)
        self.assertEqual(summary.read_text(encoding="utf-8"), ",".join(SUMMARY_COLUMNS) + "\n")

    def test_node_records_file(self):
        emit_results(_bundle(), self.out, ["csv", "json"])
        path = self.out / "unit_test" / "K1" / "GCN" / "l2-weak.csv"
        lines = path.read_text(encoding="utf-8").splitlines()
        self.assertEqual(len(lines), 1 + 2 * len(_records()))
        self.assertTrue(lines[0].startswith("seed,budget,test_index,node,degree"))
        doc = json.loads((self.out / "unit_test" / "K1" / "GCN" / "l2-weak.json").read_text(encoding="utf-8"))
        self.assertEqual(doc["config_hash"], "abc123")
        self.assertEqual([c["seed"] for c in doc["cells"]], [0, 1])
        self.assertTrue((self.out / "unit_test" / "tables" / "bayes_accuracy.csv").exists())

    def test_rerun_is_byte_identical(self):
        a = emit_results(_bundle(), self.out / "a", ["csv", "json", "svg"])
        b = emit_results(_bundle(), self.out / "b", ["csv", "json", "svg"])
        self.assertEqual(len(a), len(b))
        self.assertTrue(any(p.suffix == ".svg" for p in a))
        for pa, pb in zip(a, b):
            self.assertEqual(pa.relative_to(self.out / "a"), pb.relative_to(self.out / "b"))
            self.assertEqual(pa.read_bytes(), pb.read_bytes(), msg=str(pa))

    def test_bundle_round_trip(self):
        bundle = _bundle()
        emit_results(bundle, self.out, ["json"])
        loaded = ResultBundle.load(self.out / "unit_test" / "bundle.json")
        self.assertEqual(loaded.to_json(), bundle.to_json())
        self.assertEqual(loaded.cells[1].records, bundle.sorted_cells()[1].records)

    def test_load_errors(self):
        with self.assertRaises(FileNotFoundError):
            ResultBundle.load(self.out / "missing.json")
        bad = self.out / "bad.json"
        bad.write_text("{", encoding="utf-8")
        with self.assertRaises(FormatError):
            ResultBundle.load(bad)
        bad.write_text(json.dumps({"cells": []}), encoding="utf-8")
        with self.assertRaises(FormatError):
            ResultBundle.load(bad)

    def test_unknown_format(self):
        with self.assertRaises(ValueError):
            emit_results(_bundle(), self.out, ["xml"])


if __name__ == "__main__":
    unittest.main()
