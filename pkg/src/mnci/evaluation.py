"""Node classification by stratified k-fold multinomial logistic regression."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from mnci.errors import ContractError, DataError


def weighted_f1(y_true, y_pred) -> float:
    """Per-class F1 averaged with weights proportional to true support."""
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if y_true.size == 0:
        raise ContractError("weighted_f1 of empty label sequences")
    if y_true.shape != y_pred.shape:
        raise ContractError("label sequences differ in length")
    total = 0.0
    for c in np.unique(y_true):
        tp = np.sum((y_true == c) & (y_pred == c))
        fp = np.sum((y_true != c) & (y_pred == c))
        fn = np.sum((y_true == c) & (y_pred != c))
        f1 = 2.0 * tp / (2.0 * tp + fp + fn)
        total += f1 * np.sum(y_true == c)
    return float(total / y_true.size)


def accuracy(y_true, y_pred) -> float:
    return float(np.mean(np.asarray(y_true) == np.asarray(y_pred)))


@dataclass
class ClassifierModel:
    classes: np.ndarray
    weights: np.ndarray  # (num_classes, d)
    bias: np.ndarray
    iterations: int = 0

    def predict(self, x) -> np.ndarray:
        scores = np.asarray(x) @ self.weights.T + self.bias
        return self.classes[np.argmax(scores, axis=1)]


def fit_logistic(x, y, l2: float = 1.0, tol: float = 1e-6, max_iter: int = 20000) -> ClassifierModel:
    """Multinomial logistic regression by full-batch gradient descent.

    Minimizes sum_i -log p(y_i | x_i) + l2/2 * ||W||^2 (bias unpenalized)
    with Armijo backtracking; stops once the objective's relative decrease
    falls below ``tol``.
    """
    x = np.asarray(x, dtype=np.float64)
    classes, y_idx = np.unique(np.asarray(y), return_inverse=True)
    n, d = x.shape
    k = classes.size
    if k == 1:
        return ClassifierModel(classes, np.zeros((1, d)), np.zeros(1))
    onehot = np.eye(k)[y_idx]
    xb = np.hstack([x, np.ones((n, 1))])
    theta = np.zeros((k, d + 1))
    penalty = np.ones(d + 1)
    penalty[-1] = 0.0

    def objective(th):
        s = xb @ th.T
        lse = logsumexp(s, axis=1)
        f = np.sum(lse - s[np.arange(n), y_idx]) + 0.5 * l2 * np.sum(th * th * penalty)
        return f, s, lse

    f, s, lse = objective(theta)
    step = 1.0
    it = 0
    for it in range(1, max_iter + 1):
        p = np.exp(s - lse[:, None])
        grad = (p - onehot).T @ xb + l2 * theta * penalty
        gg = np.sum(grad * grad)
        if gg == 0.0:
            break
        step *= 2.0
        while True:
            cand = theta - step * grad
            f_new, s_new, lse_new = objective(cand)
            if f_new <= f - 0.5 * step * gg or step < 1e-16:
                break
            step *= 0.5
        theta, decrease = cand, f - f_new
        f, s, lse = f_new, s_new, lse_new
        if decrease <= tol * max(1.0, abs(f)):
            break
    return ClassifierModel(classes, theta[:, :-1].copy(), theta[:, -1].copy(), it)


def stratified_folds(labels, k: int, rng: np.random.Generator) -> np.ndarray:
    """Fold index per sample; each class is spread round-robin after shuffling."""
    labels = np.asarray(labels)
    fold = np.empty(labels.size, dtype=np.int64)
    offset = 0
    for c in np.unique(labels):
        members = np.flatnonzero(labels == c)
        if members.size < k:
            raise DataError(f"class {c} has {members.size} labeled nodes, need at least {k}")
        members = rng.permutation(members)
        fold[members] = (offset + np.arange(members.size)) % k
        offset = (offset + members.size) % k
    return fold


@dataclass
class EvalReport:
    accuracy: float
    weighted_f1: float
    fold_accuracy: list[float] = field(default_factory=list)
    fold_weighted_f1: list[float] = field(default_factory=list)
    seed: int = 0

    def to_text(self) -> str:
        lines = [f"accuracy {self.accuracy!r}", f"weighted_f1 {self.weighted_f1!r}"]
        for i, (a, f) in enumerate(zip(self.fold_accuracy, self.fold_weighted_f1)):
            lines.append(f"fold_{i}_accuracy {a!r}")
            lines.append(f"fold_{i}_weighted_f1 {f!r}")
        lines.append(f"folds {len(self.fold_accuracy)}")
        lines.append(f"seed {self.seed}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "EvalReport":
        kv = dict(line.split(None, 1) for line in text.splitlines() if line.strip())
        k = int(kv["folds"])
        return cls(
            accuracy=float(kv["accuracy"]),
            weighted_f1=float(kv["weighted_f1"]),
            fold_accuracy=[float(kv[f"fold_{i}_accuracy"]) for i in range(k)],
            fold_weighted_f1=[float(kv[f"fold_{i}_weighted_f1"]) for i in range(k)],
            seed=int(kv["seed"]),
        )


def align(embeddings: dict[int, np.ndarray], labels: dict[int, int]) -> tuple[np.ndarray, np.ndarray]:
    """Feature matrix and label vector over labeled nodes, sorted by node id."""
    missing = [n for n in sorted(labels) if n not in embeddings]
    if missing:
        shown = ", ".join(map(str, missing[:10]))
        more = f" (and {len(missing) - 10} more)" if len(missing) > 10 else ""
        raise DataError(f"{len(missing)} labeled nodes have no embedding: {shown}{more}")
    ids = sorted(labels)
    return np.stack([embeddings[n] for n in ids]), np.array([labels[n] for n in ids])


def kfold_classify(embeddings: dict[int, np.ndarray], labels: dict[int, int], k: int = 5,
                   seed: int = 0, l2: float = 1.0) -> EvalReport:
    x, y = align(embeddings, labels)
    if k < 2:
        raise ContractError("need at least 2 folds")
    fold = stratified_folds(y, k, np.random.default_rng(seed))
    accs, f1s = [], []
    for i in range(k):
        test = fold == i
        clf = fit_logistic(x[~test], y[~test], l2=l2)
        pred = clf.predict(x[test])
        accs.append(accuracy(y[test], pred))
        f1s.append(weighted_f1(y[test], pred))
    return EvalReport(float(np.mean(accs)), float(np.mean(f1s)), accs, f1s, seed)
