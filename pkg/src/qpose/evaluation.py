"""Accuracy, confusion matrices, one-vs-rest ROC curves, and AUC.

AUC uses the threshold-sweep trapezoid rule with midpoint credit for tied
scores. The numerator is accumulated in exact integer arithmetic and
divided once, so the result equals the brute-force pairwise comparison
    AUC = P(score_pos > score_neg) + 0.5 * P(score_pos == score_neg)
bit for bit, not merely within tolerance.

Micro AUC pools all 8N one-vs-rest (score, is-this-class) pairs into a
single binary problem; macro AUC is the unweighted mean of the 8 per-class
AUCs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import N_CLASSES, features_matrix, labels_vector, stratified_subset


@dataclass(frozen=True)
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    auc: float


@dataclass(frozen=True)
class EvalReport:
    accuracy: float
    confusion: np.ndarray
    per_class: tuple[RocCurve, ...]
    macro_auc: float
    micro_auc: float
    n_samples: int

    @property
    def per_class_auc(self) -> np.ndarray:
        return np.array([rc.auc for rc in self.per_class])

    def to_dict(self) -> dict:
        return {
            "n_samples": self.n_samples,
            "accuracy": self.accuracy,
            "confusion": self.confusion.tolist(),
            "per_class_auc": self.per_class_auc.tolist(),
            "macro_auc": self.macro_auc,
            "micro_auc": self.micro_auc,
        }


def binary_roc(scores: np.ndarray, positive: np.ndarray) -> RocCurve:
    """ROC curve and exact AUC for one binary problem.

    scores: higher means more positive. positive: boolean mask. Needs at
    least one positive and one negative; a class absent from the evaluation
    set gets the uninformative convention AUC=0.5 upstream in `evaluate`.
    """
    scores = np.asarray(scores, dtype=np.float64)
    positive = np.asarray(positive, dtype=bool)
    n_pos = int(positive.sum())
    n_neg = positive.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("ROC needs at least one positive and one negative")
    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    p = positive[order]
    # group boundaries of tied scores
    boundary = np.flatnonzero(np.diff(s)) + 1
    group_pos = [int(g.sum()) for g in np.split(p, boundary)]
    group_tot = [len(g) for g in np.split(p, boundary)]

    tp = fp = 0
    numerator = 0  # 2 * P * N * area, exact integer
    fprs = [0.0]
    tprs = [0.0]
    for g_pos, g_tot in zip(group_pos, group_tot):
        g_neg = g_tot - g_pos
        numerator += g_neg * (2 * tp + g_pos)
        tp += g_pos
        fp += g_neg
        fprs.append(fp / n_neg)
        tprs.append(tp / n_pos)
    auc = numerator / (2 * n_pos * n_neg)
    return RocCurve(fpr=np.array(fprs), tpr=np.array(tprs), auc=auc)


def evaluate_scores(scores: np.ndarray, labels: np.ndarray) -> EvalReport:
    """Report from per-class scores (N, 8) and integer labels (N,)."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.ndim != 2 or scores.shape[1] != N_CLASSES:
        raise ValueError(f"scores must be (n, {N_CLASSES})")
    n = scores.shape[0]
    if n == 0:
        raise ValueError("cannot evaluate an empty sample set")
    if labels.shape != (n,) or labels.min() < 0 or labels.max() >= N_CLASSES:
        raise ValueError("labels must be one class id per score row")

    predictions = np.argmax(scores, axis=1)
    confusion = np.zeros((N_CLASSES, N_CLASSES), dtype=np.int64)
    np.add.at(confusion, (labels, predictions), 1)
    accuracy = float(np.trace(confusion)) / n

    curves = []
    for c in range(N_CLASSES):
        mask = labels == c
        if mask.any() and not mask.all():
            curves.append(binary_roc(scores[:, c], mask))
        else:
            # class missing from this evaluation set (or the only class):
            # no ranked pairs exist, record the chance-level convention
            curves.append(RocCurve(fpr=np.array([0.0, 1.0]), tpr=np.array([0.0, 1.0]), auc=0.5))
    macro = float(np.mean([rc.auc for rc in curves]))

    onehot = np.zeros_like(scores, dtype=bool)
    onehot[np.arange(n), labels] = True
    micro = binary_roc(scores.ravel(), onehot.ravel()).auc if N_CLASSES > 1 else 1.0

    return EvalReport(
        accuracy=accuracy,
        confusion=confusion,
        per_class=tuple(curves),
        macro_auc=macro,
        micro_auc=micro,
        n_samples=n,
    )


def evaluate(model, samples) -> EvalReport:
    """Evaluate any model exposing predict_proba over raw features."""
    if not samples:
        raise ValueError("cannot evaluate an empty sample set")
    scores = model.predict_proba(features_matrix(samples))
    return evaluate_scores(scores, labels_vector(samples))


def accuracy_of(model, samples) -> float:
    if not samples:
        raise ValueError("cannot evaluate an empty sample set")
    scores = model.predict_proba(features_matrix(samples))
    return float(np.mean(np.argmax(scores, axis=1) == labels_vector(samples)))


# ---------------------------------------------------------------------------
# Accuracy vs labeled-sample-count curves.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CurvePoint:
    n_labeled: int
    mean_accuracy: float
    std_accuracy: float
    accuracies: tuple[float, ...]


def accuracy_vs_samples_curve(
    model_factory,
    pool,
    eval_samples,
    grid,
    seed: int = 0,
    n_repeats: int = 1,
) -> list[CurvePoint]:
    """Train a fresh model per (grid point, repeat) and measure accuracy.

    model_factory(samples, seed) must return a fitted model exposing
    predict_proba. ``pool`` is the labeled candidate set (stratified
    subsets are drawn from it), ``eval_samples`` the fixed evaluation set.
    """
    if not pool or not eval_samples:
        raise ValueError("need nonempty pool and evaluation samples")
    if n_repeats < 1:
        raise ValueError("n_repeats must be >= 1")
    grid = [int(g) for g in grid]
    for g in grid:
        if g < 1:
            raise ValueError(f"grid point {g} must be >= 1")
        if g > len(pool):
            raise ValueError(f"grid point {g} exceeds the {len(pool)} available labels")

    root = np.random.SeedSequence(seed)
    points: list[CurvePoint] = []
    for gi, g in enumerate(grid):
        accs = []
        for r in range(n_repeats):
            child = np.random.SeedSequence(entropy=root.entropy, spawn_key=(gi, r))
            subset_seed = int(child.generate_state(1)[0])
            subset, _, _ = stratified_subset(pool, g, subset_seed)
            model = model_factory(subset, subset_seed)
            accs.append(accuracy_of(model, eval_samples))
        arr = np.array(accs)
        points.append(
            CurvePoint(
                n_labeled=g,
                mean_accuracy=float(arr.mean()),
                std_accuracy=float(arr.std()),
                accuracies=tuple(accs),
            )
        )
    return points


# ---------------------------------------------------------------------------
# Flat-file outputs for external plotting.
# ---------------------------------------------------------------------------


def write_summary_json(report: EvalReport, path) -> None:
    Path(path).write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")


def write_confusion_csv(report: EvalReport, path) -> None:
    lines = ["true\\pred," + ",".join(str(c) for c in range(N_CLASSES))]
    for c in range(N_CLASSES):
        lines.append(f"{c}," + ",".join(str(int(v)) for v in report.confusion[c]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_roc_csvs(report: EvalReport, directory) -> list[Path]:
    directory = Path(directory)
    paths = []
    for c, rc in enumerate(report.per_class):
        path = directory / f"roc_class_{c}.csv"
        lines = ["fpr,tpr"]
        lines += [f"{repr(float(f))},{repr(float(t))}" for f, t in zip(rc.fpr, rc.tpr)]
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        paths.append(path)
    return paths


def write_curve_csv(points: list[CurvePoint], path) -> None:
    lines = ["n_labeled,mean_acc,std_acc"]
    for p in points:
        lines.append(f"{p.n_labeled},{repr(p.mean_accuracy)},{repr(p.std_accuracy)}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
