from __future__ import annotations

from dataclasses import dataclass, replace
from functools import cached_property
import json
import math
from typing import Any, Dict, FrozenSet, Iterable, Optional, Tuple

import numpy as np
import scipy.sparse as sp

from .errors import FormatError, ParameterError


CSBM = "CSBM"
CBA = "CBA"

# Average same- and different-class node degree of the Cora citation graph.
CBA_DEFAULT_OMEGA = ((3.16, 0.74), (0.74, 3.16))


def feature_dim(n: int) -> int:
    """Feature dimension round(n / ln^2 n) used by the synthetic setups (21 for n=1000)."""
    if n < 3:
        return 1
    return max(1, round(n / math.log(n) ** 2))


def mean_vector(K: float, d: int, sigma: float = 1.0) -> Tuple[float, ...]:
    """Class mean whose mirror image lies at distance K * sigma."""
    return tuple([K * sigma / (2.0 * math.sqrt(d))] * d)


@dataclass(frozen=True)
class GenModel:
    variant: str
    n: int
    mu: Tuple[float, ...]
    sigma: float = 1.0
    p: float = 0.0
    q: float = 0.0
    m: int = 0
    omega: Tuple[Tuple[float, ...], ...] = ()
    num_classes: int = 2
    class_means: Tuple[Tuple[float, ...], ...] = ()

    @classmethod
    def csbm(cls, *, n: int, p: float, q: float, K: float, d: Optional[int] = None, sigma: float = 1.0) -> "GenModel":
        d = d or feature_dim(n)
        model = cls(variant=CSBM, n=n, p=p, q=q, mu=mean_vector(K, d, sigma), sigma=sigma)
        model.validate()
        return model

    @classmethod
    def cba(
        cls,
        *,
        n: int,
        m: int,
        K: float,
        omega: Iterable[Iterable[float]] = CBA_DEFAULT_OMEGA,
        d: Optional[int] = None,
        sigma: float = 1.0,
    ) -> "GenModel":
        d = d or feature_dim(n)
        om = tuple(tuple(float(x) for x in row) for row in omega)
        model = cls(variant=CBA, n=n, m=m, omega=om, mu=mean_vector(K, d, sigma), sigma=sigma)
        model.validate()
        return model

    @property
    def d(self) -> int:
        return len(self.mu)

    def means(self) -> np.ndarray:
        """C x d matrix of class means; binary models use -mu and +mu."""
        if self.class_means:
            return np.asarray(self.class_means, dtype=float)
        mu = np.asarray(self.mu, dtype=float)
        return np.stack([-mu, mu])

    def edge_probability(self, c: int, labels: np.ndarray) -> np.ndarray:
        return np.where(labels == c, self.p, self.q)

    def validate(self) -> None:
        if self.variant not in (CSBM, CBA):
            raise ParameterError(f"unknown model variant: {self.variant!r}")
        if self.n < 1:
            raise ParameterError(f"n must be >= 1, got {self.n}")
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise ParameterError(f"sigma must be a positive real, got {self.sigma}")
        if len(self.mu) < 1 or not all(math.isfinite(x) for x in self.mu):
            raise ParameterError("mu must be a nonempty finite vector")
        if self.num_classes < 2:
            raise ParameterError("num_classes must be >= 2")
        if self.class_means:
            cm = np.asarray(self.class_means, dtype=float)
            if cm.shape != (self.num_classes, self.d):
                raise ParameterError(f"class_means must have shape ({self.num_classes}, {self.d}), got {cm.shape}")
        elif self.num_classes != 2:
            raise ParameterError("multi-class models need explicit class_means")

        if self.variant == CSBM:
            if not (0.0 <= self.q <= self.p <= 1.0):
                raise ParameterError(f"CSBM needs 0 <= q <= p <= 1, got p={self.p}, q={self.q}")
            return

        if self.m < 1:
            raise ParameterError(f"CBA needs m >= 1, got {self.m}")
        om = np.asarray(self.omega, dtype=float)
        if om.shape != (self.num_classes, self.num_classes):
            raise ParameterError(f"omega must be {self.num_classes}x{self.num_classes}, got shape {om.shape}")
        if not np.all(np.isfinite(om)) or np.any(om < 0):
            raise ParameterError("omega entries must be finite and nonnegative")
        if not np.allclose(om, om.T):
            raise ParameterError("omega must be symmetric")
        diag = np.diag(om)
        if np.any(diag <= 0):
            raise ParameterError("same-class affinities must be strictly positive")
        off = om[~np.eye(self.num_classes, dtype=bool)]
        if off.size and np.any(off >= diag.min()):
            raise ParameterError("same-class affinity must exceed different-class affinity")

    def with_n(self, n: int) -> "GenModel":
        return replace(self, n=n)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "variant": self.variant,
            "n": self.n,
            "mu": list(self.mu),
            "sigma": self.sigma,
            "p": self.p,
            "q": self.q,
            "m": self.m,
            "omega": [list(r) for r in self.omega],
            "num_classes": self.num_classes,
            "class_means": [list(r) for r in self.class_means],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "GenModel":
        model = cls(
            variant=str(data["variant"]),
            n=int(data["n"]),
            mu=tuple(float(x) for x in data["mu"]),
            sigma=float(data.get("sigma", 1.0)),
            p=float(data.get("p", 0.0)),
            q=float(data.get("q", 0.0)),
            m=int(data.get("m", 0)),
            omega=tuple(tuple(float(x) for x in r) for r in data.get("omega", ())),
            num_classes=int(data.get("num_classes", 2)),
            class_means=tuple(tuple(float(x) for x in r) for r in data.get("class_means", ())),
        )
        model.validate()
        return model


def _pair(i: int, j: int) -> Tuple[int, int]:
    return (i, j) if i < j else (j, i)


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Graph:
    """Attributed undirected graph; immutable, so it can be shared between workers.

    ``edges`` holds unordered pairs as ``(i, j)`` with ``i < j``.
    """

    features: np.ndarray
    edges: FrozenSet[Tuple[int, int]]
    labels: np.ndarray
    known_mask: np.ndarray
    num_classes: int
    gen: Optional[GenModel] = None

    @classmethod
    def build(
        cls,
        *,
        features: Any,
        edges: Iterable[Tuple[int, int]],
        labels: Any,
        known_mask: Any = None,
        num_classes: Optional[int] = None,
        gen: Optional[GenModel] = None,
    ) -> "Graph":
        X = np.array(features, dtype=float, copy=True)
        if X.ndim != 2:
            raise ParameterError(f"features must be a 2-d matrix, got shape {X.shape}")
        n = X.shape[0]
        y = np.array(labels, dtype=np.int64, copy=True).reshape(-1)
        if y.shape[0] != n:
            raise ParameterError(f"labels has {y.shape[0]} entries for {n} nodes")
        C = int(num_classes) if num_classes is not None else (int(y.max()) + 1 if n else 2)
        if n and (y.min() < 0 or y.max() >= C):
            raise ParameterError(f"labels must lie in 0..{C - 1}")
        mask = np.ones(n, dtype=bool) if known_mask is None else np.array(known_mask, dtype=bool, copy=True).reshape(-1)
        if mask.shape[0] != n:
            raise ParameterError(f"known_mask has {mask.shape[0]} entries for {n} nodes")

        pairs = set()
        for i, j in edges:
            i, j = int(i), int(j)
            if i == j:
                raise ParameterError(f"self-loop ({i},{j}) is not allowed")
            if not (0 <= i < n and 0 <= j < n):
                raise ParameterError(f"edge ({i},{j}) out of range for {n} nodes")
            pairs.add(_pair(i, j))

        return cls(
            features=_frozen(X),
            edges=frozenset(pairs),
            labels=_frozen(y),
            known_mask=_frozen(mask),
            num_classes=C,
            gen=gen,
        )

    @property
    def n(self) -> int:
        return int(self.features.shape[0])

    @property
    def d(self) -> int:
        return int(self.features.shape[1])

    @cached_property
    def edge_array(self) -> np.ndarray:
        if not self.edges:
            return _frozen(np.zeros((0, 2), dtype=np.int64))
        return _frozen(np.array(sorted(self.edges), dtype=np.int64))

    @cached_property
    def adjacency(self) -> sp.csr_matrix:
        """Symmetric 0/1 adjacency matrix without self-loops."""
        e = self.edge_array
        rows = np.concatenate([e[:, 0], e[:, 1]])
        cols = np.concatenate([e[:, 1], e[:, 0]])
        data = np.ones(rows.shape[0], dtype=float)
        A = sp.csr_matrix((data, (rows, cols)), shape=(self.n, self.n))
        A.sort_indices()
        return A

    @cached_property
    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=np.int64)
        e = self.edge_array
        np.add.at(deg, e[:, 0], 1)
        np.add.at(deg, e[:, 1], 1)
        return _frozen(deg)

    def degree(self, v: int) -> int:
        return int(self.degrees[v])

    def has_edge(self, i: int, j: int) -> bool:
        return _pair(int(i), int(j)) in self.edges

    def neighbors(self, v: int) -> np.ndarray:
        A = self.adjacency
        return A.indices[A.indptr[v] : A.indptr[v + 1]].copy()

    def with_edges(
        self,
        *,
        add: Iterable[Tuple[int, int]] = (),
        remove: Iterable[Tuple[int, int]] = (),
    ) -> "Graph":
        """Copy-on-write edge update; node arrays are shared with ``self``."""
        edges = set(self.edges)
        for i, j in remove:
            edges.discard(_pair(int(i), int(j)))
        for i, j in add:
            i, j = int(i), int(j)
            if i == j:
                raise ParameterError(f"self-loop ({i},{j}) is not allowed")
            edges.add(_pair(i, j))
        return Graph(
            features=self.features,
            edges=frozenset(edges),
            labels=self.labels,
            known_mask=self.known_mask,
            num_classes=self.num_classes,
            gen=self.gen,
        )

    def with_known_mask(self, mask: Any) -> "Graph":
        m = np.array(mask, dtype=bool, copy=True).reshape(-1)
        if m.shape[0] != self.n:
            raise ParameterError(f"known_mask has {m.shape[0]} entries for {self.n} nodes")
        return Graph(
            features=self.features,
            edges=self.edges,
            labels=self.labels,
            known_mask=_frozen(m),
            num_classes=self.num_classes,
            gen=self.gen,
        )

    def subgraph(self, nodes: Iterable[int]) -> Tuple["Graph", np.ndarray]:
        """Induced subgraph on ``nodes`` (relabelled 0..k-1) and the kept original indices."""
        keep = np.array(sorted({int(v) for v in nodes}), dtype=np.int64)
        index = {int(v): k for k, v in enumerate(keep)}
        edges = [(index[i], index[j]) for i, j in self.edges if i in index and j in index]
        sub = Graph(
            features=_frozen(self.features[keep].copy()),
            edges=frozenset(_pair(i, j) for i, j in edges),
            labels=_frozen(self.labels[keep].copy()),
            known_mask=_frozen(self.known_mask[keep].copy()),
            num_classes=self.num_classes,
            gen=None,
        )
        return sub, keep

    def same_as(self, other: "Graph") -> bool:
        return (
            self.num_classes == other.num_classes
            and self.edges == other.edges
            and self.gen == other.gen
            and np.array_equal(self.features, other.features)
            and np.array_equal(self.labels, other.labels)
            and np.array_equal(self.known_mask, other.known_mask)
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self.same_as(other)

    __hash__ = None  # type: ignore[assignment]

    def to_networkx(self):
        import networkx as nx

        G = nx.Graph()
        for v in range(self.n):
            G.add_node(v, label=int(self.labels[v]), known=bool(self.known_mask[v]))
        G.add_edges_from(sorted(self.edges))
        return G

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "d": self.d,
            "num_classes": self.num_classes,
            "features": self.features.reshape(-1).tolist(),
            "edges": [list(e) for e in sorted(self.edges)],
            "labels": self.labels.tolist(),
            "known_mask": self.known_mask.tolist(),
            "gen": self.gen.to_dict() if self.gen is not None else None,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Graph":
        try:
            n, d = int(data["n"]), int(data["d"])
            flat = np.asarray(data["features"], dtype=float)
            if flat.size != n * d:
                raise FormatError(f"features holds {flat.size} values, expected n*d = {n * d}")
            edges = []
            for e in data["edges"]:
                i, j = int(e[0]), int(e[1])
                if not i < j:
                    raise FormatError(f"edge [{i}, {j}] must be stored with i < j")
                edges.append((i, j))
            gen = GenModel.from_dict(data["gen"]) if data.get("gen") else None
            return cls.build(
                features=flat.reshape(n, d),
                edges=edges,
                labels=data["labels"],
                known_mask=data["known_mask"],
                num_classes=int(data["num_classes"]),
                gen=gen,
            )
        except (KeyError, TypeError) as e:
            raise FormatError(f"malformed graph document: {e}") from e
        except ParameterError as e:
            raise FormatError(str(e)) from e

    @classmethod
    def from_json(cls, text: str) -> "Graph":
        return cls.from_dict(json.loads(text))

