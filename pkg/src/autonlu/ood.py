"""Out-of-distribution scoring and threshold calibration.

Three scorers share one contract: higher score means more likely
out-of-distribution, and an input is flagged when its score exceeds
threshold * threshold_factor.

* marginal Mahalanobis distance under a shrunk covariance of the training
  features (class-agnostic);
* maximum-softmax-probability (1 - max class probability);
* the probability of an explicit scope-rejection class.
"""

from __future__ import annotations

import numpy as np

from .errors import (
    DegenerateScoresError,
    DimensionMismatchError,
    SingularCovarianceError,
)
from .linear import LinearClassifier
from .regime import Regime

SHRINKAGE = 0.1
OOS_LABEL = "outOfScope"

OOD_METHODS = ("mahalanobis", "msp", "out_of_scope_class", "none")


def default_ood_method(regime: Regime) -> str:
    """Softmax confidence is only meaningful for fully trained heads; the
    few-shot regimes fall back to the feature-space distance."""
    return "msp" if regime is Regime.FULL_TRAIN else "mahalanobis"


class MahalanobisDetector:
    """Distance to the marginal training distribution.

    Covariance is shrunk toward a scaled identity,
    sigma = (1 - shrinkage) * S + shrinkage * (tr S / dim) * I,
    and the precision matrix is stored. Parameters are float32 so a
    round-trip through a bundle is exact.
    """

    method = "mahalanobis"

    def __init__(
        self,
        mean: np.ndarray,
        precision: np.ndarray,
        threshold: float = float("inf"),
        threshold_factor: float = 1.0,
    ):
        self.mean = np.ascontiguousarray(mean, dtype=np.float32)
        self.precision = np.ascontiguousarray(precision, dtype=np.float32)
        if self.precision.shape != (self.mean.shape[0], self.mean.shape[0]):
            raise DimensionMismatchError("precision must be [dim, dim]")
        self.threshold = float(threshold)
        self.threshold_factor = float(threshold_factor)

    @classmethod
    def fit(cls, X: np.ndarray, shrinkage: float = SHRINKAGE) -> "MahalanobisDetector":
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or len(X) < 2:
            raise SingularCovarianceError("need at least two rows to fit a covariance")
        n, d = X.shape
        mean = X.mean(axis=0)
        centered = X - mean
        S = (centered.T @ centered) / n
        trace = float(np.trace(S))
        if trace <= 0.0:
            raise SingularCovarianceError("features have zero variance")
        sigma = (1.0 - shrinkage) * S + shrinkage * (trace / d) * np.eye(d)
        try:
            precision = np.linalg.inv(sigma)
        except np.linalg.LinAlgError as exc:
            raise SingularCovarianceError(str(exc)) from exc
        if not np.all(np.isfinite(precision)):
            raise SingularCovarianceError("precision matrix is not finite")
        return cls(mean=mean, precision=precision)

    @property
    def effective_threshold(self) -> float:
        return self.threshold * self.threshold_factor

    def scores(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.mean.shape[0]:
            raise DimensionMismatchError(
                f"expected [n, {self.mean.shape[0]}] features"
            )
        diff = X - self.mean.astype(np.float64)
        m = np.einsum("ij,ij->i", diff @ self.precision.astype(np.float64), diff)
        return np.sqrt(np.maximum(m, 0.0))

    def flags(self, X: np.ndarray) -> np.ndarray:
        return self.scores(X) > self.effective_threshold


class MSPDetector:
    """1 - max softmax probability of an existing classifier."""

    method = "msp"

    def __init__(
        self,
        model: LinearClassifier,
        threshold: float = float("inf"),
        threshold_factor: float = 1.0,
    ):
        self.model = model
        self.threshold = float(threshold)
        self.threshold_factor = float(threshold_factor)

    @property
    def effective_threshold(self) -> float:
        return self.threshold * self.threshold_factor

    def scores(self, X: np.ndarray) -> np.ndarray:
        return 1.0 - self.model.proba(X).max(axis=1)

    def flags(self, X: np.ndarray) -> np.ndarray:
        return self.scores(X) > self.effective_threshold


class OOSClassDetector:
    """Probability mass assigned to an explicit scope-rejection class."""

    method = "out_of_scope_class"

    def __init__(
        self,
        model: LinearClassifier,
        oos_label: str = OOS_LABEL,
        threshold: float = float("inf"),
        threshold_factor: float = 1.0,
    ):
        if oos_label not in model.classes:
            raise ValueError(f"model has no class {oos_label!r}")
        self.model = model
        self.oos_label = oos_label
        self._oos_index = model.classes.index(oos_label)
        self.threshold = float(threshold)
        self.threshold_factor = float(threshold_factor)

    @property
    def effective_threshold(self) -> float:
        return self.threshold * self.threshold_factor

    def scores(self, X: np.ndarray) -> np.ndarray:
        return self.model.proba(X)[:, self._oos_index]

    def flags(self, X: np.ndarray) -> np.ndarray:
        return self.scores(X) > self.effective_threshold


def calibrate_threshold(
    id_scores: np.ndarray, ood_scores: np.ndarray
) -> tuple[float, float]:
    """Pick the threshold that maximizes binary F1 (out-of-distribution is
    the positive class, flagged when score > threshold).

    Candidates are the midpoints between adjacent distinct values of the
    pooled scores; the smallest maximizer wins ties. Returns (threshold, f1).
    """
    id_scores = np.asarray(id_scores, dtype=np.float64)
    ood_scores = np.asarray(ood_scores, dtype=np.float64)
    if len(id_scores) == 0 or len(ood_scores) == 0:
        raise DegenerateScoresError("both score sets must be non-empty")
    pooled = np.unique(np.concatenate([id_scores, ood_scores]))
    if len(pooled) < 2:
        raise DegenerateScoresError("all calibration scores are identical")
    candidates = (pooled[:-1] + pooled[1:]) / 2.0

    best_t, best_f1 = float(candidates[0]), -1.0
    for t in candidates:
        tp = int(np.sum(ood_scores > t))
        fp = int(np.sum(id_scores > t))
        fn = len(ood_scores) - tp
        denom = 2 * tp + fp + fn
        f1 = 2 * tp / denom if denom else 0.0
        if f1 > best_f1:
            best_f1, best_t = f1, float(t)
    return best_t, best_f1
