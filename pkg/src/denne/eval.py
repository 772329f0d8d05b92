"""Node classification (logistic regression, macro/micro-F1) and graph reconstruction."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit, log_expit, logsumexp

from .graph import Graph, LabelTable

log = logging.getLogger(__name__)

DEFAULT_FRACTIONS = (0.3, 0.5, 0.7)
DEFAULT_RATIOS = tuple(round(0.001 * t, 4) for t in range(1, 12))


class DataError(ValueError):
    pass


@dataclass(frozen=True)
class Split:
    train_ids: np.ndarray
    test_ids: np.ndarray
    train_fraction: float
    seed: int


def make_split(labels: LabelTable, train_fraction: float, seed: int) -> Split:
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    nodes = labels.labeled_nodes()
    if len(nodes) == 0:
        raise DataError("no labeled nodes to split")
    perm = np.random.default_rng(seed).permutation(nodes)
    cut = int(np.floor(train_fraction * len(nodes) + 1e-9))
    return Split(np.sort(perm[:cut]), np.sort(perm[cut:]), train_fraction, seed)


@dataclass
class ClassifierModel:
    weights: np.ndarray  # (num_labels, m + 1), bias last
    multilabel: bool
    l2: float
    converged: bool = True

    def scores(self, x: np.ndarray) -> np.ndarray:
        z = x @ self.weights[:, :-1].T + self.weights[:, -1]
        if self.multilabel:
            return expit(z)
        return np.exp(z - logsumexp(z, axis=1, keepdims=True))


def _fit_softmax(x, y, num_labels, l2, tol, max_iter):
    N, m = x.shape
    onehot = np.zeros((N, num_labels))
    onehot[np.arange(N), y] = 1.0
    xb = np.hstack([x, np.ones((N, 1))])

    def f(w):
        W = w.reshape(num_labels, m + 1)
        z = xb @ W.T
        lse = logsumexp(z, axis=1)
        nll = np.sum(lse - z[np.arange(N), y])
        prob = np.exp(z - lse[:, None])
        grad = (prob - onehot).T @ xb
        grad[:, :m] += l2 * W[:, :m]
        return nll + 0.5 * l2 * np.sum(W[:, :m] ** 2), grad.ravel()

    res = minimize(f, np.zeros(num_labels * (m + 1)), jac=True, method="L-BFGS-B",
                   options={"gtol": tol, "maxiter": max_iter, "ftol": 0.0})
    return res.x.reshape(num_labels, m + 1), res.success


def _fit_binary(x, t, l2, tol, max_iter):
    N, m = x.shape
    xb = np.hstack([x, np.ones((N, 1))])
    sign = 2.0 * t - 1.0

    def f(w):
        z = xb @ w
        nll = -np.sum(log_expit(sign * z))
        grad = xb.T @ (expit(z) - t)
        grad[:m] += l2 * w[:m]
        return nll + 0.5 * l2 * np.sum(w[:m] ** 2), grad

    res = minimize(f, np.zeros(m + 1), jac=True, method="L-BFGS-B",
                   options={"gtol": tol, "maxiter": max_iter, "ftol": 0.0})
    return res.x, res.success


def fit_classifier(embeddings: np.ndarray, labels: LabelTable, split: Split, l2: float = 1.0,
                   seed: int = 0, tol: float = 1e-5, max_iter: int = 1000) -> ClassifierModel:
    """L2-regularised logistic regression: multinomial, or one-vs-rest when multilabel.

    The objective is convex and optimisation starts from zero, so ``seed``
    does not influence the fit; it is kept for interface symmetry.
    """
    x = np.asarray(embeddings, dtype=float)[split.train_ids]
    C = labels.num_labels
    if labels.multilabel:
        t = np.zeros((len(split.train_ids), C))
        for r, node in enumerate(split.train_ids):
            t[r, list(labels.labels[node])] = 1.0
        rows, ok = [], True
        for c in range(C):
            w, success = _fit_binary(x, t[:, c], l2, tol, max_iter)
            rows.append(w)
            ok &= success
        W = np.array(rows)
    else:
        y = np.array([next(iter(labels.labels[node])) for node in split.train_ids])
        W, ok = _fit_softmax(x, y, C, l2, tol, max_iter)
    if not ok:
        log.warning("logistic regression stopped before reaching gradient tolerance %.1e", tol)
    return ClassifierModel(W, labels.multilabel, l2, bool(ok))


def top_labels(scores: np.ndarray, count: int) -> set[int]:
    # stable sort on -score breaks ties toward the lower label id
    order = np.argsort(-np.asarray(scores), kind="stable")
    return {int(c) for c in order[:count]}


def predict(classifier: ClassifierModel, embeddings: np.ndarray, label_counts=None) -> list[set[int]]:
    """Argmax label, or the top-``label_counts[i]`` labels in multilabel mode."""
    scores = classifier.scores(np.asarray(embeddings, dtype=float))
    if not classifier.multilabel:
        return [top_labels(row, 1) for row in scores]
    if label_counts is None:
        return [{int(c) for c in np.flatnonzero(row >= 0.5)} for row in scores]
    return [top_labels(row, int(c)) for row, c in zip(scores, label_counts)]


def _confusion(predicted, truth):
    labels = sorted(set().union(*predicted, *truth)) if predicted or truth else []
    tp = {c: 0 for c in labels}
    fp = dict(tp)
    fn = dict(tp)
    for p, t in zip(predicted, truth):
        for c in p & t:
            tp[c] += 1
        for c in p - t:
            fp[c] += 1
        for c in t - p:
            fn[c] += 1
    return labels, tp, fp, fn


def _f1(tp, fp, fn) -> float:
    denom = 2 * tp + fp + fn
    return 2.0 * tp / denom if denom else 0.0


def macro_f1(predicted, truth) -> float:
    """Unweighted mean of per-label F1 over labels seen in either side."""
    predicted = [set(p) for p in predicted]
    truth = [set(t) for t in truth]
    labels, tp, fp, fn = _confusion(predicted, truth)
    if not labels:
        return 0.0
    return float(np.mean([_f1(tp[c], fp[c], fn[c]) for c in labels]))


def micro_f1(predicted, truth) -> float:
    predicted = [set(p) for p in predicted]
    truth = [set(t) for t in truth]
    _, tp, fp, fn = _confusion(predicted, truth)
    return _f1(sum(tp.values()), sum(fp.values()), sum(fn.values()))


def classification_scores(embeddings, labels: LabelTable, train_fraction: float, seed: int,
                          l2: float = 1.0) -> tuple[float, float]:
    """(macro-F1, micro-F1) on the held-out part of one random split."""
    split = make_split(labels, train_fraction, seed)
    clf = fit_classifier(embeddings, labels, split, l2=l2, seed=seed)
    truth = [set(labels.labels[i]) for i in split.test_ids]
    pred = predict(clf, np.asarray(embeddings)[split.test_ids], [len(t) for t in truth])
    return macro_f1(pred, truth), micro_f1(pred, truth)


@dataclass
class ReconstructionResult:
    predicted_pairs: np.ndarray
    precision: float = 0.0
    recall: float = 0.0
    f1: float = 0.0


def reconstruct(embeddings: np.ndarray, k: int) -> ReconstructionResult:
    """The k node pairs with smallest squared embedding distance, ties by (i, j)."""
    u = np.asarray(embeddings, dtype=float)
    n = len(u)
    total = n * (n - 1) // 2
    if not 0 <= k <= total:
        raise IndexError(f"k={k} outside 0..{total}")
    iu, ju = np.triu_indices(n, k=1)
    # row by row keeps exact differences (no |x|^2 + |y|^2 - 2xy cancellation)
    d2 = np.concatenate([((u[i + 1:] - u[i]) ** 2).sum(axis=1) for i in range(n)]) if n else np.zeros(0)
    order = np.argsort(d2, kind="stable")[:k]
    return ReconstructionResult(np.stack([iu[order], ju[order]], axis=1))


def reconstruction_f1(predicted_pairs, pristine: Graph) -> tuple[float, float, float]:
    pairs = np.asarray(predicted_pairs, dtype=np.int64).reshape(-1, 2)
    k = len(pairs)
    n = pristine.n
    keys = np.minimum(pairs[:, 0], pairs[:, 1]) * n + np.maximum(pairs[:, 0], pairs[:, 1])
    hits = int(np.isin(keys, pristine.edge_keys).sum())
    precision = hits / k if k else 0.0
    recall = hits / pristine.edge_count if pristine.edge_count else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return precision, recall, f1


def pairs_for_ratio(n: int, ratio: float) -> int:
    return max(1, int(round(ratio * n * (n - 1) / 2)))


def reconstruction_scores(embeddings, pristine: Graph, ratio: float) -> ReconstructionResult:
    res = reconstruct(embeddings, pairs_for_ratio(pristine.n, ratio))
    res.precision, res.recall, res.f1 = reconstruction_f1(res.predicted_pairs, pristine)
    return res
