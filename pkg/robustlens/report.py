from __future__ import annotations

from dataclasses import dataclass, field
import io
import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Tuple

import numpy as np
import pandas as pd

from .errors import FormatError
from .metrics import RECORD_COLUMNS, MetricsSummary, RobustnessRecord
from .utils import atomic_write_text, canonical_json, safe_filename


logger = logging.getLogger(__name__)

FORMATS = ("csv", "json", "svg")

NODE_COLUMNS = ("seed", "budget", "test_index") + RECORD_COLUMNS

SUMMARY_COLUMNS = (
    "K",
    "seed",
    "classifier",
    "attack",
    "budget",
    "R_fg",
    "R_f",
    "R_g",
    "R_over",
    "R_adv",
    "F_beta",
    "node_count",
    "censored_f",
    "censored_g",
    "excluded_zero_degree",
    "excluded_f_incorrect",
    "excluded_disagree",
    "error",
)

_FLOAT_FORMAT = "%.12g"


@dataclass
class CellResult:
    K: Optional[float]
    seed: int
    classifier: str
    attack: str
    budget: str
    records: List[RobustnessRecord] = field(default_factory=list)
    summary: Optional[MetricsSummary] = None
    error: Optional[str] = None

    @property
    def key(self) -> Tuple[float, int, str, str, str]:
        return (-1.0 if self.K is None else self.K, self.seed, self.classifier, self.attack, self.budget)

    def summary_row(self) -> Dict[str, Any]:
        row: Dict[str, Any] = {
            "K": self.K,
            "seed": self.seed,
            "classifier": self.classifier,
            "attack": self.attack,
            "budget": self.budget,
            "error": self.error,
        }
        s = self.summary
        for col in ("R_fg", "R_f", "R_g", "R_over", "R_adv", "F_beta", "node_count", "censored_f", "censored_g"):
            row[col] = getattr(s, col) if s is not None else None
        for reason in ("zero_degree", "f_incorrect", "disagree"):
            row[f"excluded_{reason}"] = s.excluded.get(reason, 0) if s is not None else None
        return {c: row[c] for c in SUMMARY_COLUMNS}

    def to_dict(self) -> Dict[str, Any]:
        return {
            "K": self.K,
            "seed": self.seed,
            "classifier": self.classifier,
            "attack": self.attack,
            "budget": self.budget,
            "error": self.error,
            "summary": self.summary.to_dict() if self.summary is not None else None,
            "records": [r.to_row() for r in self.records],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "CellResult":
        s = data.get("summary")
        return cls(
            K=None if data["K"] is None else float(data["K"]),
            seed=int(data["seed"]),
            classifier=str(data["classifier"]),
            attack=str(data["attack"]),
            budget=str(data["budget"]),
            records=[RobustnessRecord.from_row(r) for r in data.get("records", [])],
            summary=MetricsSummary(**s) if s is not None else None,
            error=data.get("error"),
        )


@dataclass
class ResultBundle:
    experiment: str
    cells: List[CellResult] = field(default_factory=list)
    tables: Dict[str, pd.DataFrame] = field(default_factory=dict)
    failures: List[Dict[str, Any]] = field(default_factory=list)
    provenance: Dict[str, Any] = field(default_factory=dict)

    def sorted_cells(self) -> List[CellResult]:
        return sorted(self.cells, key=lambda c: c.key)

    def summary_frame(self) -> pd.DataFrame:
        rows = [c.summary_row() for c in self.sorted_cells()]
        return pd.DataFrame(rows, columns=list(SUMMARY_COLUMNS))

    def seed_aggregate_frame(self) -> pd.DataFrame:
        """Mean, standard deviation and standard error of each metric across seeds."""
        df = self.summary_frame()
        metrics = ["R_fg", "R_f", "R_g", "R_over", "R_adv", "F_beta"]
        keys = ["K", "classifier", "attack", "budget"]
        cols = keys + [f"{m}_{s}" for m in metrics for s in ("mean", "std", "stderr")] + ["seeds"]
        if df.empty:
            return pd.DataFrame(columns=cols)
        df = df.assign(K=df["K"].fillna(-1.0))
        df[metrics] = df[metrics].apply(pd.to_numeric, errors="coerce")
        grouped = df.groupby(keys, sort=True, dropna=False)
        out = grouped[metrics].agg(["mean", "std", "count"])
        rows = []
        for key, r in out.iterrows():
            row = dict(zip(keys, key))
            for m in metrics:
                count = r[(m, "count")]
                std = r[(m, "std")] if count > 1 else (0.0 if count == 1 else np.nan)
                row[f"{m}_mean"] = r[(m, "mean")]
                row[f"{m}_std"] = std
                row[f"{m}_stderr"] = std / np.sqrt(count) if count > 0 else np.nan
            row["seeds"] = int(grouped.size().loc[key])
            rows.append(row)
        agg = pd.DataFrame(rows, columns=cols)
        agg["K"] = agg["K"].where(agg["K"] >= 0, np.nan)
        return agg

    def to_dict(self) -> Dict[str, Any]:
        return {
            "experiment": self.experiment,
            "provenance": self.provenance,
            "failures": sorted(self.failures, key=canonical_json),
            "tables": {name: _frame_to_dict(df) for name, df in sorted(self.tables.items())},
            "cells": [c.to_dict() for c in self.sorted_cells()],
        }

    def to_json(self) -> str:
        return json.dumps(_jsonable(self.to_dict()), indent=2, sort_keys=True, ensure_ascii=False)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ResultBundle":
        try:
            return cls(
                experiment=str(data["experiment"]),
                cells=[CellResult.from_dict(c) for c in data.get("cells", [])],
                tables={name: _frame_from_dict(t) for name, t in data.get("tables", {}).items()},
                failures=list(data.get("failures", [])),
                provenance=dict(data.get("provenance", {})),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise FormatError(f"not a result bundle: {e}") from e

    @classmethod
    def load(cls, path: str | Path) -> "ResultBundle":
        p = Path(path)
        if not p.exists():
            raise FileNotFoundError(f"Result bundle not found: {p}")
        try:
            data = json.loads(p.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise FormatError(f"invalid JSON: {e}", path=p) from e
        return cls.from_dict(data)


def _frame_to_dict(df: pd.DataFrame) -> Dict[str, Any]:
    return {"columns": [str(c) for c in df.columns], "rows": df.astype(object).where(df.notna(), None).values.tolist()}


def _frame_from_dict(data: Dict[str, Any]) -> pd.DataFrame:
    return pd.DataFrame(data["rows"], columns=data["columns"])


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        obj = obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    return obj


def _csv_text(df: pd.DataFrame) -> str:
    buf = io.StringIO()
    df.to_csv(buf, index=False, float_format=_FLOAT_FORMAT, lineterminator="\n")
    return buf.getvalue()


def _k_dir(K: Optional[float]) -> str:
    return "real" if K is None else f"K{K:g}"


def emit_results(bundle: ResultBundle, out_dir: str | Path, formats: Iterable[str] = ("csv", "json")) -> List[Path]:
    """Write a bundle under ``out_dir/<experiment>/`` and return the written paths.

    Per-node records go to ``<K>/<classifier>/<attack>.{csv,json}``; summaries, tables
    and provenance sit at the experiment root; figures under ``figures/``.
    """
    fmts = [f.lower() for f in formats]
    bad = [f for f in fmts if f not in FORMATS]
    if bad:
        raise ValueError(f"unknown output format(s) {bad}; choose from {list(FORMATS)}")

    root = Path(out_dir) / safe_filename(bundle.experiment)
    written: List[Path] = []

    groups: Dict[Tuple[Optional[float], str, str], List[CellResult]] = {}
    for cell in bundle.sorted_cells():
        groups.setdefault((cell.K, cell.classifier, cell.attack), []).append(cell)

    for (K, clf, attack), cells in groups.items():
        base = root / _k_dir(K) / safe_filename(clf)
        if "csv" in fmts:
            rows = [
                {"seed": c.seed, "budget": c.budget, "test_index": i, **r.to_row()}
                for c in cells
                for i, r in enumerate(c.records)
            ]
            df = pd.DataFrame(rows, columns=list(NODE_COLUMNS))
            written.append(atomic_write_text(base / f"{safe_filename(attack)}.csv", _csv_text(df)))
        if "json" in fmts:
            doc = {
                "K": K,
                "classifier": clf,
                "attack": attack,
                "config_hash": bundle.provenance.get("config_hash"),
                "cells": [c.to_dict() for c in cells],
            }
            text = json.dumps(_jsonable(doc), indent=2, sort_keys=True)
            written.append(atomic_write_text(base / f"{safe_filename(attack)}.json", text))

    if "csv" in fmts:
        written.append(atomic_write_text(root / "summary.csv", _csv_text(bundle.summary_frame())))
        if bundle.cells:
            written.append(atomic_write_text(root / "summary_by_seed.csv", _csv_text(bundle.seed_aggregate_frame())))
        for name, df in sorted(bundle.tables.items()):
            written.append(atomic_write_text(root / "tables" / f"{safe_filename(name)}.csv", _csv_text(df)))

    if "json" in fmts:
        written.append(atomic_write_text(root / "bundle.json", bundle.to_json()))
        prov = json.dumps(_jsonable(bundle.provenance), indent=2, sort_keys=True)
        written.append(atomic_write_text(root / "provenance.json", prov))

    if "svg" in fmts:
        from .plots import render_figures

        written.extend(render_figures(bundle, root / "figures"))

    logger.info("wrote %d files under %s", len(written), root)
    return written
