from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from .errors import ParameterError
from .graph import Graph


@dataclass(frozen=True)
class LPConfig:
    alpha: float = 0.7
    iterations: int = 50

    def __post_init__(self) -> None:
        if not 0.0 <= self.alpha <= 1.0:
            raise ParameterError(f"LP alpha must lie in [0, 1], got {self.alpha}")
        if self.iterations < 1:
            raise ParameterError(f"LP iterations must be positive, got {self.iterations}")


def sym_normalized(A: sp.spmatrix, *, self_loops: bool) -> sp.csr_matrix:
    """D^-1/2 A D^-1/2, optionally after adding the identity; isolated rows stay zero."""
    A = sp.csr_matrix(A, dtype=float)
    if self_loops:
        A = A + sp.identity(A.shape[0], format="csr")
    deg = np.asarray(A.sum(axis=1)).reshape(-1)
    inv_sqrt = np.zeros_like(deg)
    nz = deg > 0
    inv_sqrt[nz] = deg[nz] ** -0.5
    D = sp.diags(inv_sqrt)
    out = (D @ A @ D).tocsr()
    out.sort_indices()
    return out


def seed_matrix(g: Graph, soft_seed: Optional[np.ndarray] = None) -> np.ndarray:
    """Y: one-hot rows for known labels, ``soft_seed`` rows (or zeros) elsewhere."""
    C = g.num_classes
    Y = np.zeros((g.n, C), dtype=float)
    if soft_seed is not None:
        S = np.asarray(soft_seed, dtype=float)
        if S.shape != (g.n, C):
            raise ParameterError(f"soft_seed must have shape ({g.n}, {C}), got {S.shape}")
        unknown = ~g.known_mask
        Y[unknown] = S[unknown]
    known = np.flatnonzero(g.known_mask)
    Y[known, g.labels[known]] = 1.0
    return Y


def label_propagation(g: Graph, soft_seed: Optional[np.ndarray] = None, cfg: LPConfig = LPConfig()) -> np.ndarray:
    """Label spreading F^t = alpha * S F^(t-1) + (1 - alpha) * Y, started from F^0 = Y."""
    Y = seed_matrix(g, soft_seed)
    S = sym_normalized(g.adjacency, self_loops=False)
    F = Y.copy()
    for _ in range(cfg.iterations):
        F = cfg.alpha * (S @ F) + (1.0 - cfg.alpha) * Y
    return F


def lp_fixed_point(g: Graph, soft_seed: Optional[np.ndarray] = None, cfg: LPConfig = LPConfig()) -> np.ndarray:
    """Limit (1 - alpha)(I - alpha S)^-1 Y of the iteration, solved directly."""
    Y = seed_matrix(g, soft_seed)
    S = sym_normalized(g.adjacency, self_loops=False)
    M = sp.identity(g.n, format="csc") - cfg.alpha * S.tocsc()
    return (1.0 - cfg.alpha) * spsolve(M, Y).reshape(g.n, -1)


def normalize_rows(F: np.ndarray) -> np.ndarray:
    """Turn nonnegative score rows into probabilities; all-zero rows become uniform."""
    F = np.clip(np.asarray(F, dtype=float), 0.0, None)
    sums = F.sum(axis=1, keepdims=True)
    out = np.full_like(F, 1.0 / F.shape[1])
    np.divide(F, sums, out=out, where=sums > 0)
    return out
