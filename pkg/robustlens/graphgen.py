from __future__ import annotations

import logging
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
import scipy.sparse as sp

from .errors import FormatError, ParameterError, UnsupportedError
from .graph import CBA, CSBM, GenModel, Graph
from .utils import node_stream


logger = logging.getLogger(__name__)


def sample_graph(model: GenModel, seed: int) -> Graph:
    """Sample a CSBM or CBA graph node by node.

    Every training node is labelled (``known_mask`` all true); inductive test
    nodes come from :func:`extend_graph`.
    """
    model.validate()
    if model.num_classes != 2:
        raise ParameterError("synthetic generators are binary")

    labels = np.empty(model.n, dtype=np.int64)
    features = np.empty((model.n, model.d), dtype=float)
    edges: List[Tuple[int, int]] = []
    degrees = np.zeros(model.n, dtype=np.int64)

    for i in range(model.n):
        labels[i], features[i] = _sample_node(model, seed, i)
        nbrs = _sample_edges(model, seed, i, labels[: i + 1], degrees[:i])
        for j in nbrs:
            edges.append((int(j), i))
        degrees[nbrs] += 1
        degrees[i] = len(nbrs)

    g = Graph.build(
        features=features,
        edges=edges,
        labels=labels,
        known_mask=np.ones(model.n, dtype=bool),
        num_classes=model.num_classes,
        gen=model,
    )
    logger.debug("sampled %s graph n=%d edges=%d seed=%d", model.variant, g.n, len(g.edges), seed)
    return g


def extend_graph(g: Graph, count: int, seed: int) -> Graph:
    """Append ``count`` nodes sampled conditionally on ``g`` by the model's iterative rule."""
    if g.gen is None:
        raise UnsupportedError("extend_graph needs a generative model; real graphs cannot be extended")
    if count < 1:
        raise ParameterError(f"count must be positive, got {count}")

    model = g.gen
    n0, total = g.n, g.n + count
    labels = np.concatenate([g.labels, np.empty(count, dtype=np.int64)])
    features = np.vstack([g.features, np.empty((count, g.d), dtype=float)])
    degrees = np.concatenate([g.degrees, np.zeros(count, dtype=np.int64)])
    new_edges: List[Tuple[int, int]] = []

    for i in range(n0, total):
        labels[i], features[i] = _sample_node(model, seed, i)
        nbrs = _sample_edges(model, seed, i, labels[: i + 1], degrees[:i])
        for j in nbrs:
            new_edges.append((int(j), i))
        degrees[nbrs] += 1
        degrees[i] = len(nbrs)

    return Graph.build(
        features=features,
        edges=list(g.edges) + new_edges,
        labels=labels,
        known_mask=np.concatenate([g.known_mask, np.zeros(count, dtype=bool)]),
        num_classes=g.num_classes,
        gen=model.with_n(total),
    )


def _sample_node(model: GenModel, seed: int, i: int) -> Tuple[int, np.ndarray]:
    y = int(node_stream(seed, "label", i).integers(0, 2))
    x = node_stream(seed, "feature", i).normal(loc=model.means()[y], scale=model.sigma)
    return y, x


def _sample_edges(model: GenModel, seed: int, i: int, labels: np.ndarray, degrees: np.ndarray) -> np.ndarray:
    """Neighbours of node ``i`` among its predecessors ``0..i-1``."""
    if i == 0:
        return np.zeros(0, dtype=np.int64)
    rng = node_stream(seed, "edges", i)
    y_i, prev = labels[i], labels[:i]

    if model.variant == CSBM:
        probs = model.edge_probability(int(y_i), prev)
        return np.flatnonzero(rng.random(i) < probs)

    # CBA: every node carries an implicit self-loop that only enters the weights.
    omega = np.asarray(model.omega, dtype=float)
    weights = (1.0 + degrees) * omega[y_i, prev]
    total = weights.sum()
    if total <= 0:
        return np.zeros(0, dtype=np.int64)
    draws = rng.multinomial(model.m, weights / total)
    return np.flatnonzero(draws)


def cba_attachment_probabilities(g: Graph, c: int, exclude: Optional[int] = None) -> np.ndarray:
    """p_j for a new node of class ``c`` attaching to each existing node of ``g``.

    ``exclude`` drops one node from the candidate set and removes its edges from the
    recorded degrees (used when scoring the final node of ``g``).
    """
    if g.gen is None or g.gen.variant != CBA:
        raise UnsupportedError("attachment probabilities are defined for CBA graphs only")
    omega = np.asarray(g.gen.omega, dtype=float)
    n = g.n if exclude is None else exclude
    deg = g.degrees[:n].astype(float)
    if exclude is not None:
        nbrs = g.neighbors(exclude)
        nbrs = nbrs[nbrs < n]
        deg[nbrs] -= 1.0
    weights = (1.0 + deg) * omega[c, g.labels[:n]]
    return weights / weights.sum()


def ingest_real_graph(
    edge_file: str | Path,
    feature_file: str | Path,
    label_file: str | Path,
    mask_file: Optional[str | Path] = None,
) -> Graph:
    """Load a real graph from CSV files (features may also be a scipy ``.npz`` sparse matrix)."""
    labels = _read_int_column(Path(label_file), what="label")
    n = labels.shape[0]
    if n == 0:
        raise FormatError("label file is empty", path=Path(label_file))
    if labels.min() < 0:
        line = int(np.flatnonzero(labels < 0)[0]) + 1
        raise FormatError("labels must be nonnegative", path=Path(label_file), line=line)

    features = _read_features(Path(feature_file))
    if features.shape[0] != n:
        raise FormatError(f"feature file has {features.shape[0]} rows, label file has {n}", path=Path(feature_file))

    edges = _read_edges(Path(edge_file), n)

    if mask_file is not None:
        mask_raw = _read_int_column(Path(mask_file), what="mask")
        if mask_raw.shape[0] != n:
            raise FormatError(f"mask file has {mask_raw.shape[0]} rows, label file has {n}", path=Path(mask_file))
        bad = np.flatnonzero((mask_raw != 0) & (mask_raw != 1))
        if bad.size:
            raise FormatError("mask values must be 0 or 1", path=Path(mask_file), line=int(bad[0]) + 1)
        mask = mask_raw.astype(bool)
    else:
        mask = np.ones(n, dtype=bool)

    num_classes = int(labels.max()) + 1
    unseen = np.setdiff1d(np.arange(num_classes), labels[mask])
    if unseen.size:
        source = Path(label_file if mask_file is None else mask_file)
        raise FormatError(f"class {int(unseen[0])} has no labelled node", path=source)

    g = Graph.build(features=features, edges=edges, labels=labels, known_mask=mask, num_classes=num_classes)
    logger.info("ingested real graph n=%d edges=%d d=%d classes=%d", g.n, len(g.edges), g.d, g.num_classes)
    return g


def _read_csv(path: Path) -> pd.DataFrame:
    if not path.exists():
        raise FileNotFoundError(f"Graph file not found: {path}")
    try:
        return pd.read_csv(path, header=None, dtype=str, skip_blank_lines=False, keep_default_na=False)
    except pd.errors.EmptyDataError:
        return pd.DataFrame()
    except pd.errors.ParserError as e:
        raise FormatError(f"unreadable CSV: {e}", path=path) from e


def _numeric(df: pd.DataFrame, path: Path, *, integer: bool) -> np.ndarray:
    values = df.apply(lambda col: pd.to_numeric(col.str.strip(), errors="coerce"))
    bad = values.isna().any(axis=1).to_numpy()
    if bad.any():
        line = int(np.flatnonzero(bad)[0]) + 1
        raise FormatError("non-numeric cell", path=path, line=line)
    arr = values.to_numpy(dtype=float)
    if integer:
        frac = np.any(arr != np.round(arr), axis=1)
        if frac.any():
            raise FormatError("expected integers", path=path, line=int(np.flatnonzero(frac)[0]) + 1)
        return arr.astype(np.int64)
    return arr


def _read_int_column(path: Path, *, what: str) -> np.ndarray:
    df = _read_csv(path)
    if df.empty:
        return np.zeros(0, dtype=np.int64)
    if df.shape[1] != 1:
        raise FormatError(f"{what} file must have exactly one column", path=path)
    return _numeric(df, path, integer=True)[:, 0]


def _read_features(path: Path) -> np.ndarray:
    if path.suffix == ".npz":
        if not path.exists():
            raise FileNotFoundError(f"Graph file not found: {path}")
        return sp.load_npz(path).toarray().astype(float)
    df = _read_csv(path)
    if df.empty:
        raise FormatError("feature file is empty", path=path)
    return _numeric(df, path, integer=False)


def _read_edges(path: Path, n: int) -> List[Tuple[int, int]]:
    df = _read_csv(path)
    if df.empty:
        return []
    if df.shape[1] != 2:
        raise FormatError(f"edge file must have two columns src,dst, found {df.shape[1]}", path=path)
    arr = _numeric(df, path, integer=True)
    out = []
    for line, (i, j) in enumerate(arr, start=1):
        if not (0 <= i < n and 0 <= j < n):
            raise FormatError(f"node index out of range 0..{n - 1}: ({i},{j})", path=path, line=line)
        if i == j:
            raise FormatError(f"self-loop ({i},{j})", path=path, line=line)
        out.append((int(i), int(j)))
    return out


def graph_statistics(g: Graph) -> Dict[str, float]:
    """Node/edge counts and mean total, same-class and different-class degree."""
    e = g.edge_array
    same = g.labels[e[:, 0]] == g.labels[e[:, 1]] if e.size else np.zeros(0, dtype=bool)
    n = max(g.n, 1)
    return {
        "nodes": g.n,
        "edges": len(g.edges),
        "features": g.d,
        "classes": g.num_classes,
        "mean_degree": 2.0 * len(g.edges) / n,
        "mean_same_class_degree": 2.0 * float(same.sum()) / n,
        "mean_diff_class_degree": 2.0 * float((~same).sum()) / n,
    }
