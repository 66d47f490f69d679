from __future__ import annotations

from typing import Optional

import numpy as np

from .graph import Graph


def degree_mixing_matrix(g: Graph) -> tuple[np.ndarray, np.ndarray]:
    """Normalized joint distribution of the degrees at both ends of an edge.

    Returns ``(values, M)`` with ``M[a, b]`` the fraction of edge ends whose endpoints
    have degrees ``values[a]`` and ``values[b]``; ``M`` is symmetric.
    """
    e = g.edge_array
    if e.size == 0:
        return np.zeros(0, dtype=np.int64), np.zeros((0, 0))
    deg = g.degrees
    src = np.concatenate([deg[e[:, 0]], deg[e[:, 1]]])
    dst = np.concatenate([deg[e[:, 1]], deg[e[:, 0]]])
    values, inv = np.unique(np.concatenate([src, dst]), return_inverse=True)
    a, b = inv[: src.size], inv[src.size :]
    M = np.zeros((values.size, values.size))
    np.add.at(M, (a, b), 1.0)
    return values, M / M.sum()


def degree_assortativity(g: Graph) -> Optional[float]:
    """Pearson correlation of endpoint degrees; ``None`` without edges or degree variance."""
    values, M = degree_mixing_matrix(g)
    if values.size == 0:
        return None
    k = values.astype(float)
    marg = M.sum(axis=1)
    mean = float(k @ marg)
    var = float((k * k) @ marg) - mean * mean
    if var <= 1e-15:
        return None
    return float((k @ M @ k - mean * mean) / var)


def dac(g: Graph, g_perturbed: Graph) -> Optional[float]:
    """Relative absolute change of degree assortativity between two graphs."""
    r0 = degree_assortativity(g)
    r1 = degree_assortativity(g_perturbed)
    if r0 is None or r1 is None or r0 == 0.0:
        return None
    return abs(r1 - r0) / abs(r0)


def node_centric_homophily(g: Graph, u: int) -> Optional[float]:
    """Cosine between ``u``'s features and its degree-normalized neighbour aggregate."""
    d_u = g.degree(u)
    if d_u == 0:
        return None
    nbrs = g.neighbors(u)
    w = 1.0 / np.sqrt(g.degrees[nbrs].astype(float) * d_u)
    r = w @ g.features[nbrs]
    x = g.features[u]
    nr, nx = float(np.linalg.norm(r)), float(np.linalg.norm(x))
    if nr == 0.0 or nx == 0.0:
        return None
    return float(np.clip(r @ x / (nr * nx), -1.0, 1.0))


def homophilic_edge_fraction(g: Graph) -> Optional[float]:
    e = g.edge_array
    if e.size == 0:
        return None
    return float(np.mean(g.labels[e[:, 0]] == g.labels[e[:, 1]]))
