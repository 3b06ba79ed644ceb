import numpy as np
import pytest

from autonlu.errors import (
    DegenerateScoresError,
    DimensionMismatchError,
    SingularCovarianceError,
)
from autonlu.linear import LinearClassifier
from autonlu.metrics import auroc
from autonlu.ood import (
    OOD_METHODS,
    OOS_LABEL,
    MahalanobisDetector,
    MSPDetector,
    OOSClassDetector,
    calibrate_threshold,
    default_ood_method,
)
from autonlu.regime import Regime


class TestMahalanobis:
    def test_identity_covariance_hand_value(self):
        # standard normal cloud: shrinkage keeps sigma ~ I, so the point
        # (3, 4) sits at distance ~ 5 from the origin
        rng = np.random.default_rng(0)
        X = rng.normal(size=(20000, 2))
        det = MahalanobisDetector.fit(X)
        score = det.scores(np.array([[3.0, 4.0]]))[0]
        assert score == pytest.approx(5.0, rel=0.05)

    def test_exact_precision_identity(self):
        # bypass fit: unit precision means score is the euclidean norm
        det = MahalanobisDetector(mean=np.zeros(2), precision=np.eye(2))
        assert det.scores(np.array([[3.0, 4.0]]))[0] == pytest.approx(5.0)

    def test_mean_centering(self):
        det = MahalanobisDetector(mean=np.array([1.0, 1.0]), precision=np.eye(2))
        assert det.scores(np.array([[1.0, 1.0]]))[0] == pytest.approx(0.0)

    def test_shrinkage_regularizes_singular_covariance(self):
        # two identical columns make S singular; shrinkage must rescue it
        rng = np.random.default_rng(1)
        base = rng.normal(size=(200, 1))
        X = np.hstack([base, base])
        det = MahalanobisDetector.fit(X)
        assert np.all(np.isfinite(det.precision))

    def test_zero_variance_rejected(self):
        X = np.ones((50, 4))
        with pytest.raises(SingularCovarianceError):
            MahalanobisDetector.fit(X)

    def test_single_row_rejected(self):
        with pytest.raises(SingularCovarianceError):
            MahalanobisDetector.fit(np.ones((1, 4)))

    def test_dim_mismatch(self):
        det = MahalanobisDetector(mean=np.zeros(3), precision=np.eye(3))
        with pytest.raises(DimensionMismatchError):
            det.scores(np.zeros((2, 4)))
        with pytest.raises(DimensionMismatchError):
            MahalanobisDetector(mean=np.zeros(3), precision=np.eye(4))

    def test_separates_shifted_gaussians(self):
        # the synthetic benchmark the detector must win comfortably
        rng = np.random.default_rng(0)
        d = 16
        X_id = rng.normal(0.0, 1.0, size=(500, d))
        X_ood = rng.normal(0.0, 1.0, size=(500, d)) + 4.0
        det = MahalanobisDetector.fit(X_id)
        scores = np.concatenate([det.scores(X_id), det.scores(X_ood)])
        labels = [0] * 500 + [1] * 500
        assert auroc(labels, scores) >= 0.95

    def test_flags_use_effective_threshold(self):
        det = MahalanobisDetector(
            mean=np.zeros(2), precision=np.eye(2), threshold=1.0, threshold_factor=2.0
        )
        assert det.effective_threshold == 2.0
        X = np.array([[1.5, 0.0], [3.0, 0.0]])
        assert det.flags(X).tolist() == [False, True]

    def test_params_stored_float32(self):
        det = MahalanobisDetector.fit(np.random.default_rng(2).normal(size=(50, 3)))
        assert det.mean.dtype == np.float32
        assert det.precision.dtype == np.float32


def uniform_head(k: int, dim: int = 4) -> LinearClassifier:
    return LinearClassifier(
        [f"c{i}" for i in range(k)], np.zeros((dim, k)), np.zeros(k)
    )


class TestMSP:
    def test_uniform_probability_score(self):
        # all-zero weights give uniform softmax: score = 1 - 1/4
        det = MSPDetector(uniform_head(4))
        scores = det.scores(np.ones((2, 4), dtype=np.float32))
        assert np.allclose(scores, 0.75)

    def test_confident_logits_hand_value(self):
        # logits (10, 0, 0): max prob = e^10/(e^10+2), score ~ 9.08e-5
        clf = LinearClassifier(
            ["a", "b", "c"],
            np.array([[10.0, 0.0, 0.0]]),
            np.zeros(3),
        )
        det = MSPDetector(clf)
        score = det.scores(np.array([[1.0]], dtype=np.float32))[0]
        expect = 1.0 - np.exp(10.0) / (np.exp(10.0) + 2.0)
        assert score == pytest.approx(expect, abs=1e-12)
        assert score == pytest.approx(9.08e-5, rel=1e-2)

    def test_flags_monotone_in_threshold(self):
        clf = uniform_head(2, dim=2)
        det = MSPDetector(clf, threshold=0.4, threshold_factor=1.0)
        X = np.zeros((3, 2), dtype=np.float32)
        assert det.flags(X).all()  # uniform 2-class score is 0.5 > 0.4
        det.threshold_factor = 2.0
        assert not det.flags(X).any()  # 0.5 < 0.8


class TestOOSClass:
    def make_model(self):
        # last class is the rejection class; weights route feature 0 to it
        W = np.array([[2.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 2.0]])
        return LinearClassifier(["a", "b", OOS_LABEL], W, np.zeros(3))

    def test_score_is_oos_probability(self):
        det = OOSClassDetector(self.make_model())
        X = np.array([[0.0, 0.0, 3.0]], dtype=np.float32)
        probs = self.make_model().proba(X)
        assert det.scores(X)[0] == pytest.approx(probs[0, 2])

    def test_missing_class_rejected(self):
        model = LinearClassifier(["a", "b"], np.zeros((2, 2)), np.zeros(2))
        with pytest.raises(ValueError):
            OOSClassDetector(model)

    def test_custom_label(self):
        model = LinearClassifier(["a", "reject"], np.zeros((2, 2)), np.zeros(2))
        det = OOSClassDetector(model, oos_label="reject")
        assert det.scores(np.zeros((1, 2), dtype=np.float32))[0] == pytest.approx(0.5)


class TestCalibrateThreshold:
    def test_perfectly_separated(self):
        t, f1 = calibrate_threshold([0.1, 0.2, 0.3], [0.7, 0.8, 0.9])
        assert 0.3 < t < 0.7
        assert t == pytest.approx(0.5)  # midpoint of the adjacent gap
        assert f1 == 1.0

    def test_smallest_maximizer_wins_ties(self):
        # any cut between 0.2 and 0.8 gives f1 = 1; the first midpoint wins
        t, f1 = calibrate_threshold([0.1, 0.2], [0.8, 0.9])
        assert t == pytest.approx(0.5)  # (0.2 + 0.8) / 2 is the first gap
        assert f1 == 1.0

    def test_overlapping_scores(self):
        id_scores = [0.1, 0.4, 0.5]
        ood_scores = [0.45, 0.6, 0.7]
        t, f1 = calibrate_threshold(id_scores, ood_scores)
        # exhaustive check over all candidate midpoints
        pooled = np.unique(np.concatenate([id_scores, ood_scores]))
        best = -1.0
        for cand in (pooled[:-1] + pooled[1:]) / 2:
            tp = sum(s > cand for s in ood_scores)
            fp = sum(s > cand for s in id_scores)
            fn = len(ood_scores) - tp
            f1_cand = 2 * tp / (2 * tp + fp + fn)
            best = max(best, f1_cand)
        assert f1 == pytest.approx(best)

    def test_empty_rejected(self):
        with pytest.raises(DegenerateScoresError):
            calibrate_threshold([], [0.5])
        with pytest.raises(DegenerateScoresError):
            calibrate_threshold([0.5], [])

    def test_identical_scores_rejected(self):
        with pytest.raises(DegenerateScoresError):
            calibrate_threshold([0.5, 0.5], [0.5, 0.5])

    def test_threshold_factor_monotone_flag_counts(self):
        # fixed scores, growing factor -> non-increasing flagged set size
        rng = np.random.default_rng(0)
        X_id = rng.normal(size=(200, 8))
        X_all = np.vstack([X_id, rng.normal(size=(100, 8)) + 2.0])
        det = MahalanobisDetector.fit(X_id)
        t, _ = calibrate_threshold(
            det.scores(X_id), det.scores(X_all[200:])
        )
        det.threshold = t
        sizes = []
        for factor in (0.5, 1.0, 2.0):
            det.threshold_factor = factor
            sizes.append(int(det.flags(X_all).sum()))
        assert sizes[0] >= sizes[1] >= sizes[2]


class TestDefaults:
    def test_method_name_constants(self):
        assert OOD_METHODS == ("mahalanobis", "msp", "out_of_scope_class", "none")
        assert OOS_LABEL == "outOfScope"

    def test_regime_pairing(self):
        assert default_ood_method(Regime.FULL_TRAIN) == "msp"
        assert default_ood_method(Regime.CONTRASTIVE_FEW_SHOT) == "mahalanobis"
        assert default_ood_method(Regime.ANCHORED_FEW_SHOT) == "mahalanobis"
