"""Multinomial logistic regression trained with mini-batch SGD.

This is the shared optimizer behind every classification head in the
library. Optimization runs in float64; finished models hold float32 arrays
so that a saved and reloaded model scores bit-identically to the in-memory
one (inference always goes through the same float32 code path).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatchError, DivergenceError


def softmax(z: np.ndarray) -> np.ndarray:
    """Row-wise stable softmax."""
    z = np.asarray(z, dtype=np.float64)
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def cross_entropy(logits: np.ndarray, y: np.ndarray, eps: float = 1e-12) -> float:
    probs = softmax(logits)
    gold = probs[np.arange(len(y)), y]
    return float(-np.mean(np.log(np.maximum(gold, eps))))


def _macro_f1_int(y_true: np.ndarray, y_pred: np.ndarray, n_classes: int) -> float:
    """Macro F1 over all n_classes indices with the 0/0 -> 0 convention."""
    f1s = []
    for c in range(n_classes):
        tp = int(np.sum((y_true == c) & (y_pred == c)))
        n_pred = int(np.sum(y_pred == c))
        n_gold = int(np.sum(y_true == c))
        p = tp / n_pred if n_pred else 0.0
        r = tp / n_gold if n_gold else 0.0
        f1s.append(2 * p * r / (p + r) if p + r else 0.0)
    return float(np.mean(f1s))


@dataclass
class TrainConfig:
    learning_rate: float = 1e-2
    batch_size: int = 8
    weight_decay: float = 0.0
    momentum: float = 0.9
    max_epochs: int = 30
    patience: int = 5
    seed: int = 0


@dataclass
class TrainingTrace:
    """Per-epoch snapshots over the training set.

    logits has shape [epochs, n, k]; gold_probs[e, i] equals
    softmax(logits[e, i])[y[i]].
    """

    logits: np.ndarray
    gold_probs: np.ndarray

    @property
    def n_epochs(self) -> int:
        return self.logits.shape[0]


@dataclass
class TrainResult:
    epochs_run: int
    best_epoch: int
    losses: list[float] = field(default_factory=list)
    val_scores: list[float] = field(default_factory=list)


def train_softmax(
    X: np.ndarray,
    y: np.ndarray,
    n_classes: int,
    config: TrainConfig | None = None,
    X_val: np.ndarray | None = None,
    y_val: np.ndarray | None = None,
    trace: bool = False,
) -> tuple[np.ndarray, np.ndarray, TrainResult, TrainingTrace | None]:
    """Fit softmax regression weights. Returns (W [d,k], b [k], result, trace).

    With a validation set, macro F1 is evaluated after every epoch and the
    best checkpoint is retained; training stops once the score has been
    strictly below the best for `patience` consecutive epochs. Ties refresh
    the checkpoint: macro F1 on a small split is quantized, so a plateau
    usually means the loss is still falling rather than that learning has
    stopped. Without a validation set, the final-epoch weights are returned.
    Raises DivergenceError when the loss goes non-finite.
    """
    config = config or TrainConfig()
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or len(X) != len(y):
        raise DimensionMismatchError("X must be [n, d] aligned with y")
    n, d = X.shape
    if n == 0:
        raise DimensionMismatchError("cannot train on an empty design matrix")

    rng = np.random.default_rng(config.seed)
    W = np.zeros((d, n_classes), dtype=np.float64)
    b = np.zeros(n_classes, dtype=np.float64)
    vW = np.zeros_like(W)
    vb = np.zeros_like(b)

    best_W, best_b = W.copy(), b.copy()
    best_score = -np.inf
    best_epoch = 0
    stale = 0
    has_val = X_val is not None and y_val is not None and len(X_val) > 0

    losses: list[float] = []
    val_scores: list[float] = []
    trace_logits: list[np.ndarray] = []

    epochs_run = 0
    for epoch in range(config.max_epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            Xb, yb = X[idx], y[idx]
            logits = Xb @ W + b
            probs = softmax(logits)
            grad = probs
            grad[np.arange(len(idx)), yb] -= 1.0
            grad /= len(idx)
            vW = config.momentum * vW + Xb.T @ grad + config.weight_decay * W
            vb = config.momentum * vb + grad.sum(axis=0)
            W -= config.learning_rate * vW
            b -= config.learning_rate * vb

        epochs_run = epoch + 1
        full_logits = X @ W + b
        loss = cross_entropy(full_logits, y)
        if not np.isfinite(loss) or not np.all(np.isfinite(W)):
            raise DivergenceError(f"non-finite loss at epoch {epoch + 1}")
        losses.append(loss)
        if trace:
            trace_logits.append(full_logits.copy())

        if has_val:
            val_pred = np.argmax(np.asarray(X_val, dtype=np.float64) @ W + b, axis=1)
            score = _macro_f1_int(np.asarray(y_val, dtype=np.int64), val_pred, n_classes)
            val_scores.append(score)
            if score >= best_score:
                best_score = score
                best_W, best_b = W.copy(), b.copy()
                best_epoch = epoch + 1
                stale = 0
            else:
                stale += 1
                if stale >= config.patience:
                    break
        else:
            best_W, best_b = W.copy(), b.copy()
            best_epoch = epoch + 1

    result = TrainResult(
        epochs_run=epochs_run,
        best_epoch=best_epoch,
        losses=losses,
        val_scores=val_scores,
    )

    trace_obj = None
    if trace and trace_logits:
        stacked = np.stack(trace_logits)
        gold = np.stack(
            [softmax(stacked[e])[np.arange(n), y] for e in range(len(trace_logits))]
        )
        trace_obj = TrainingTrace(logits=stacked, gold_probs=gold)

    return best_W, best_b, result, trace_obj


class LinearClassifier:
    """Linear scoring head: logits = (X @ projection) @ W + b.

    The projection is optional and defaults to identity (omitted). All
    parameters are stored as float32; inference stays in float32 so the
    model scores identically before and after serialization.
    """

    def __init__(
        self,
        classes: list[str],
        weights: np.ndarray,
        bias: np.ndarray,
        projection: np.ndarray | None = None,
    ):
        if weights.ndim != 2 or weights.shape[1] != len(classes):
            raise DimensionMismatchError("weights must be [dim, n_classes]")
        if bias.shape != (len(classes),):
            raise DimensionMismatchError("bias must be [n_classes]")
        if projection is not None and projection.shape[1] != weights.shape[0]:
            raise DimensionMismatchError("projection output must feed weights")
        self.classes = list(classes)
        self.weights = np.ascontiguousarray(weights, dtype=np.float32)
        self.bias = np.ascontiguousarray(bias, dtype=np.float32)
        self.projection = (
            None
            if projection is None
            else np.ascontiguousarray(projection, dtype=np.float32)
        )

    @property
    def input_dim(self) -> int:
        if self.projection is not None:
            return self.projection.shape[0]
        return self.weights.shape[0]

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float32)
        if X.shape[1] != self.input_dim:
            raise DimensionMismatchError(
                f"expected feature dim {self.input_dim}, got {X.shape[1]}"
            )
        if self.projection is not None:
            X = X @ self.projection
        return X

    def logits(self, X: np.ndarray) -> np.ndarray:
        return self.transform(X) @ self.weights + self.bias

    def proba(self, X: np.ndarray) -> np.ndarray:
        return softmax(self.logits(X))

    def predict(self, X: np.ndarray) -> list[str]:
        idx = np.argmax(self.logits(X), axis=1)
        return [self.classes[i] for i in idx]
