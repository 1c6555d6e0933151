"""Classical baselines: k-nearest-neighbor and Gaussian naive Bayes.

Both consume the same frozen source-domain feature normalizer as the neural
models so accuracy comparisons are like for like. Both are deterministic
given their training set.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import FeatureNormalizer, N_CLASSES, features_matrix, labels_vector


@dataclass(eq=False)
class KnnModel:
    """k-nearest-neighbor with Euclidean distance over normalized features.

    Scores are neighbor vote fractions; argmax ties go to the smallest
    class index, and ties in distance at the k boundary go to the earliest
    training sample (stable sort).
    """

    features: np.ndarray
    labels: np.ndarray
    k: int
    normalizer: FeatureNormalizer

    kind = "knn"

    def __post_init__(self) -> None:
        if not 1 <= self.k <= len(self.labels):
            raise ValueError(f"k={self.k} outside 1..{len(self.labels)} (training size)")

    @classmethod
    def fit(cls, samples, normalizer: FeatureNormalizer, k: int = 5) -> "KnnModel":
        return cls(
            features=normalizer.transform(features_matrix(samples)),
            labels=labels_vector(samples),
            k=k,
            normalizer=normalizer,
        )

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        z = self.normalizer.transform(x)
        d2 = ((z[:, None, :] - self.features[None, :, :]) ** 2).sum(axis=2)
        nearest = np.argsort(d2, axis=1, kind="stable")[:, : self.k]
        votes = self.labels[nearest]
        scores = np.zeros((x.shape[0], N_CLASSES))
        for c in range(N_CLASSES):
            scores[:, c] = (votes == c).sum(axis=1)
        return scores / self.k

    def predict(self, x: np.ndarray) -> np.ndarray:
        return np.argmax(self.predict_proba(x), axis=1)


@dataclass(eq=False)
class GnbModel:
    """Gaussian naive Bayes over normalized features.

    Per-class feature variances are floored at 1e-9 times the largest
    overall feature variance, so single-sample classes stay usable.
    """

    priors: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    normalizer: FeatureNormalizer

    kind = "gnb"

    def __post_init__(self) -> None:
        if not np.isclose(self.priors.sum(), 1.0):
            raise ValueError("class priors must sum to 1")
        if (self.variances <= 0).any():
            raise ValueError("variances must be positive")

    @classmethod
    def fit(cls, samples, normalizer: FeatureNormalizer) -> "GnbModel":
        x = normalizer.transform(features_matrix(samples))
        y = labels_vector(samples)
        counts = np.bincount(y, minlength=N_CLASSES)
        if (counts == 0).any():
            missing = np.flatnonzero(counts == 0).tolist()
            raise ValueError(f"every class needs at least one training sample; missing {missing}")
        n_features = x.shape[1]
        means = np.zeros((N_CLASSES, n_features))
        variances = np.zeros((N_CLASSES, n_features))
        for c in range(N_CLASSES):
            xc = x[y == c]
            means[c] = xc.mean(axis=0)
            variances[c] = xc.var(axis=0)
        floor = 1e-9 * float(x.var(axis=0).max())
        if floor <= 0.0:
            floor = 1e-12  # degenerate all-identical training set
        return cls(
            priors=counts / counts.sum(),
            means=means,
            variances=np.maximum(variances, floor),
            normalizer=normalizer,
        )

    def log_posteriors(self, x: np.ndarray) -> np.ndarray:
        """Unnormalized: log prior + sum_f log N(x_f; mu_cf, var_cf)."""
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        z = self.normalizer.transform(x)
        diff = z[:, None, :] - self.means[None, :, :]
        log_density = -0.5 * (
            np.log(2.0 * np.pi * self.variances)[None, :, :] + diff**2 / self.variances[None, :, :]
        ).sum(axis=2)
        return np.log(self.priors)[None, :] + log_density

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        lp = self.log_posteriors(x)
        lp -= lp.max(axis=1, keepdims=True)
        p = np.exp(lp)
        return p / p.sum(axis=1, keepdims=True)

    def predict(self, x: np.ndarray) -> np.ndarray:
        return np.argmax(self.predict_proba(x), axis=1)
