"""Small node classifiers (MLP, SGC, GCN) with explicit backward passes.

Weights use the row-vector convention ``H @ W + b``. SGC and GCN propagate with
the symmetrically normalized adjacency after adding self-loops.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
import json
import logging
import math
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import log_softmax, softmax

from .errors import NumericError, ParameterError
from .graph import Graph
from .propagation import LPConfig, label_propagation, normalize_rows, sym_normalized
from .utils import derive_seed


logger = logging.getLogger(__name__)

MLP = "MLP"
SGC = "SGC"
GCN = "GCN"
ARCHITECTURES = (MLP, SGC, GCN)

NodePredictor = Callable[[Graph, int], np.ndarray]


@dataclass(frozen=True)
class ModelParams:
    architecture: str
    weights: Tuple[np.ndarray, ...]
    biases: Tuple[np.ndarray, ...]
    hops: int = 2
    hidden_dim: int = 64
    activation: str = "relu"

    @property
    def in_dim(self) -> int:
        return int(self.weights[0].shape[0])

    @property
    def num_classes(self) -> int:
        return int(self.weights[-1].shape[1])

    def validate(self, d: Optional[int] = None) -> None:
        if self.architecture not in ARCHITECTURES:
            raise ParameterError(f"unknown architecture {self.architecture!r}")
        if len(self.weights) != len(self.biases) or not self.weights:
            raise ParameterError("each layer needs one weight matrix and one bias vector")
        for k, (W, b) in enumerate(zip(self.weights, self.biases)):
            if W.ndim != 2 or b.shape != (W.shape[1],):
                raise ParameterError(f"layer {k}: weight {W.shape} and bias {b.shape} do not fit")
            if k and W.shape[0] != self.weights[k - 1].shape[1]:
                raise ParameterError(f"layer {k} expects {W.shape[0]} inputs, previous layer gives {self.weights[k - 1].shape[1]}")
            if not (np.all(np.isfinite(W)) and np.all(np.isfinite(b))):
                raise NumericError(f"layer {k} holds non-finite parameters")
        if d is not None and self.in_dim != d:
            raise ParameterError(f"model expects {self.in_dim} features, graph has {d}")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "architecture": self.architecture,
            "hops": self.hops,
            "hidden_dim": self.hidden_dim,
            "activation": self.activation,
            "layers": [
                {"shape": list(W.shape), "weight": W.reshape(-1).tolist(), "bias": b.tolist()}
                for W, b in zip(self.weights, self.biases)
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ModelParams":
        weights, biases = [], []
        for layer in data["layers"]:
            rows, cols = (int(s) for s in layer["shape"])
            weights.append(np.asarray(layer["weight"], dtype=float).reshape(rows, cols))
            biases.append(np.asarray(layer["bias"], dtype=float))
        params = cls(
            architecture=str(data["architecture"]),
            weights=tuple(weights),
            biases=tuple(biases),
            hops=int(data.get("hops", 2)),
            hidden_dim=int(data.get("hidden_dim", 64)),
            activation=str(data.get("activation", "relu")),
        )
        params.validate()
        return params


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.01
    weight_decay: float = 1e-3
    max_epochs: int = 500
    patience: int = 50
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0

    def __post_init__(self) -> None:
        if self.learning_rate <= 0 or self.weight_decay < 0:
            raise ParameterError("learning_rate must be positive and weight_decay nonnegative")
        if self.max_epochs < 0 or self.patience < 1:
            raise ParameterError("max_epochs must be >= 0 and patience >= 1")
        if self.max_epochs and self.patience > self.max_epochs:
            raise ParameterError(f"patience {self.patience} exceeds max_epochs {self.max_epochs}")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ParameterError("moment coefficients must lie in [0, 1)")


@dataclass
class TrainResult:
    params: ModelParams
    train_losses: List[float] = field(default_factory=list)
    val_losses: List[float] = field(default_factory=list)
    best_epoch: int = -1
    best_val_loss: float = math.inf


def init_params(
    architecture: str,
    d: int,
    num_classes: int,
    *,
    hidden_dim: int = 64,
    hops: int = 2,
    seed: int = 0,
) -> ModelParams:
    """Glorot-uniform weights and zero biases."""
    if architecture not in ARCHITECTURES:
        raise ParameterError(f"unknown architecture {architecture!r}")
    if architecture == SGC or (architecture == MLP and hidden_dim == 0):
        dims = [d, num_classes]
    else:
        if hidden_dim < 1:
            raise ParameterError(f"{architecture} needs hidden_dim >= 1")
        dims = [d, hidden_dim, num_classes]
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        limit = math.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return ModelParams(
        architecture=architecture,
        weights=tuple(weights),
        biases=tuple(biases),
        hops=hops if architecture == SGC else 0,
        hidden_dim=hidden_dim if len(dims) == 3 else 0,
    )


class _Operator:
    """Propagation matrix and propagated features of one graph, computed once."""

    def __init__(self, g: Graph, params: ModelParams) -> None:
        self.S = sym_normalized(g.adjacency, self_loops=True) if params.architecture != MLP else None
        X = g.features
        if params.architecture == SGC:
            for _ in range(params.hops):
                X = self.S @ X
        elif params.architecture == GCN:
            X = self.S @ X
        self.X = np.asarray(X)


def _forward(params: ModelParams, op: _Operator) -> Tuple[np.ndarray, List[np.ndarray]]:
    """Logits plus the pre-activations needed by the backward pass."""
    pre: List[np.ndarray] = []
    H = op.X
    last = len(params.weights) - 1
    for k, (W, b) in enumerate(zip(params.weights, params.biases)):
        if params.architecture == GCN and k > 0:
            Z = op.S @ (H @ W) + b
        else:
            Z = H @ W + b
        pre.append(Z)
        if k < last:
            H = np.maximum(Z, 0.0)
    return pre[-1], pre


def predict(params: ModelParams, g: Graph) -> np.ndarray:
    """n x C class probabilities."""
    params.validate(d=g.d)
    logits, _ = _forward(params, _Operator(g, params))
    probs = softmax(logits, axis=1)
    if not np.all(np.isfinite(probs)):
        raise NumericError("non-finite probabilities")
    return probs


def combine_with_lp(params: ModelParams, g: Graph, cfg: LPConfig = LPConfig()) -> np.ndarray:
    """Label spreading seeded with the model's soft predictions on unknown-label rows."""
    return label_propagation(g, predict(params, g), cfg)


def _cross_entropy(logits: np.ndarray, labels: np.ndarray, idx: np.ndarray) -> float:
    logp = log_softmax(logits[idx], axis=1)
    return float(-logp[np.arange(idx.size), labels[idx]].mean())


def _loss_and_grads(
    params: ModelParams, op: _Operator, labels: np.ndarray, idx: np.ndarray
) -> Tuple[float, List[np.ndarray], List[np.ndarray]]:
    logits, pre = _forward(params, op)
    loss = _cross_entropy(logits, labels, idx)

    dZ = np.zeros_like(logits)
    P = softmax(logits[idx], axis=1)
    P[np.arange(idx.size), labels[idx]] -= 1.0
    dZ[idx] = P / idx.size

    L = len(params.weights)
    gW: List[np.ndarray] = [np.empty(0)] * L
    gb: List[np.ndarray] = [np.empty(0)] * L
    for k in range(L - 1, -1, -1):
        W = params.weights[k]
        H_in = op.X if k == 0 else np.maximum(pre[k - 1], 0.0)
        gb[k] = dZ.sum(axis=0)
        if params.architecture == GCN and k > 0:
            dM = op.S.T @ dZ
            gW[k] = H_in.T @ dM
            dH = dM @ W.T
        else:
            gW[k] = H_in.T @ dZ
            dH = dZ @ W.T
        if k > 0:
            dZ = dH * (pre[k - 1] > 0)
    return loss, gW, gb


def loss_and_grads(
    params: ModelParams, g: Graph, idx: Sequence[int]
) -> Tuple[float, List[np.ndarray], List[np.ndarray]]:
    """Mean cross-entropy over ``idx`` and its exact gradients (weight decay excluded)."""
    params.validate(d=g.d)
    index = np.asarray(idx, dtype=np.int64)
    if index.size == 0:
        raise ParameterError("loss needs at least one node")
    return _loss_and_grads(params, _Operator(g, params), g.labels, index)


class _Adam:
    """Adam with decoupled weight decay."""

    def __init__(self, params: ModelParams, cfg: TrainConfig) -> None:
        self.cfg = cfg
        self.t = 0
        self.m = [np.zeros_like(a) for a in (*params.weights, *params.biases)]
        self.v = [np.zeros_like(a) for a in (*params.weights, *params.biases)]

    def step(self, params: ModelParams, gW: List[np.ndarray], gb: List[np.ndarray]) -> ModelParams:
        cfg = self.cfg
        self.t += 1
        arrays = [*params.weights, *params.biases]
        grads = [*gW, *gb]
        out = []
        for k, (theta, g) in enumerate(zip(arrays, grads)):
            self.m[k] = cfg.beta1 * self.m[k] + (1 - cfg.beta1) * g
            self.v[k] = cfg.beta2 * self.v[k] + (1 - cfg.beta2) * g * g
            m_hat = self.m[k] / (1 - cfg.beta1**self.t)
            v_hat = self.v[k] / (1 - cfg.beta2**self.t)
            out.append(theta - cfg.learning_rate * (m_hat / (np.sqrt(v_hat) + cfg.eps) + cfg.weight_decay * theta))
        L = len(params.weights)
        return replace(params, weights=tuple(out[:L]), biases=tuple(out[L:]))


def split_known(g: Graph, val_split: float, seed: int) -> Tuple[np.ndarray, np.ndarray]:
    """Random (train, validation) split of the labelled nodes."""
    if not 0.0 <= val_split < 1.0:
        raise ParameterError(f"val_split must lie in [0, 1), got {val_split}")
    known = np.flatnonzero(g.known_mask)
    perm = np.random.default_rng(derive_seed(seed, "split")).permutation(known)
    n_val = int(round(val_split * known.size))
    val_idx, train_idx = np.sort(perm[:n_val]), np.sort(perm[n_val:])
    if train_idx.size == 0:
        raise ParameterError("training split is empty")
    if val_split > 0 and val_idx.size == 0:
        raise ParameterError("validation split is empty")
    return train_idx, val_idx


def fit(
    architecture: str,
    g: Graph,
    cfg: TrainConfig = TrainConfig(),
    val_split: float = 0.2,
    *,
    hidden_dim: int = 64,
    hops: int = 2,
) -> TrainResult:
    """Full-batch training with early stopping on the validation loss.

    Validation nodes and their edges are removed from the graph the model trains
    on; validation loss is measured on the full graph.
    """
    train_idx, val_idx = split_known(g, val_split, cfg.seed)
    train_graph, _ = g.subgraph(train_idx)
    params = init_params(
        architecture, g.d, g.num_classes, hidden_dim=hidden_dim, hops=hops, seed=derive_seed(cfg.seed, "init")
    )
    result = TrainResult(params=params)
    if cfg.max_epochs == 0:
        return result

    train_op = _Operator(train_graph, params)
    full_op = _Operator(g, params) if val_idx.size else None
    local = np.arange(train_graph.n)
    opt = _Adam(params, cfg)
    since_best = 0

    for epoch in range(cfg.max_epochs):
        loss, gW, gb = _loss_and_grads(params, train_op, train_graph.labels, local)
        params = opt.step(params, gW, gb)
        if full_op is not None:
            logits, _ = _forward(params, full_op)
            monitored = _cross_entropy(logits, g.labels, val_idx)
        else:
            logits, _ = _forward(params, train_op)
            monitored = _cross_entropy(logits, train_graph.labels, local)
        if not math.isfinite(monitored):
            raise NumericError(f"loss diverged at epoch {epoch}")
        result.train_losses.append(loss)
        result.val_losses.append(monitored)

        if monitored < result.best_val_loss:
            result.best_val_loss = monitored
            result.best_epoch = epoch
            result.params = params
            since_best = 0
        else:
            since_best += 1
            if since_best >= cfg.patience:
                break

    logger.debug(
        "%s trained %d epochs, best epoch %d, best val loss %.4f",
        architecture,
        len(result.val_losses),
        result.best_epoch,
        result.best_val_loss,
    )
    return result


def train(
    architecture: str,
    g: Graph,
    cfg: TrainConfig = TrainConfig(),
    val_split: float = 0.2,
    *,
    hidden_dim: int = 64,
    hops: int = 2,
) -> ModelParams:
    return fit(architecture, g, cfg, val_split, hidden_dim=hidden_dim, hops=hops).params


def model_predictor(params: ModelParams, lp: Optional[LPConfig] = None) -> NodePredictor:
    """Node predictor for a trained model, optionally followed by label spreading."""

    def _predict(g: Graph, v: int) -> np.ndarray:
        if lp is None:
            return predict(params, g)[v]
        return normalize_rows(combine_with_lp(params, g, lp))[v]

    return _predict


def lp_predictor(cfg: LPConfig = LPConfig()) -> NodePredictor:
    def _predict(g: Graph, v: int) -> np.ndarray:
        return normalize_rows(label_propagation(g, None, cfg))[v]

    return _predict


def label_oracle(labels: np.ndarray, num_classes: int) -> NodePredictor:
    """Predictor returning the clean true label; edge toggles never change it."""
    fixed = np.asarray(labels).copy()

    def _predict(g: Graph, v: int) -> np.ndarray:
        out = np.zeros(num_classes)
        out[int(fixed[v])] = 1.0
        return out

    return _predict


def constant_predictor(c: int, num_classes: int) -> NodePredictor:
    def _predict(g: Graph, v: int) -> np.ndarray:
        out = np.zeros(num_classes)
        out[c] = 1.0
        return out

    return _predict


def accuracy(predictor: NodePredictor, graphs: Sequence[Tuple[Graph, int]]) -> float:
    hits = [int(np.argmax(predictor(g, v))) == int(g.labels[v]) for g, v in graphs]
    return float(np.mean(hits)) if hits else float("nan")
