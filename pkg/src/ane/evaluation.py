"""Node-classification evaluation: splits, a linear classifier, accuracy tables.

The protocol: repeatedly draw a uniform random train/test split of the
labeled nodes at each train ratio, fit a one-vs-rest L2-regularized logistic
regression on the training embeddings, and report mean and standard
deviation of test accuracy over the repetitions.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .nn import sigmoid

DEFAULT_RATIOS = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)


@dataclass(frozen=True)
class LabelSet:
    """Class labels over dense node indices; unlabeled nodes simply absent."""

    node_indices: np.ndarray  # dense node index per labeled node
    classes: np.ndarray  # class index per labeled node
    class_names: tuple

    @property
    def num_classes(self):
        return len(self.class_names)

    def __len__(self):
        return self.node_indices.size


def load_labels(path, index_of):
    """Read a ``node_id label`` file and align it to dense indices.

    ``index_of`` maps external ids to dense indices (from a Graph or an
    embedding file). Unknown ids are an error listing the first offenders;
    class indices are assigned by sorted label string for reproducibility.
    """
    pairs = []
    unknown = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected 'node_id label', got {line!r}")
            node_id, label = parts
            if node_id not in index_of:
                unknown.append(node_id)
            else:
                pairs.append((index_of[node_id], label))
    if unknown:
        shown = ", ".join(unknown[:5])
        raise ValueError(
            f"{path}: {len(unknown)} labeled ids not present in the graph/embedding "
            f"(first offenders: {shown})"
        )
    if not pairs:
        raise ValueError(f"{path}: no labels found")
    names = tuple(sorted({label for _, label in pairs}))
    name_idx = {name: k for k, name in enumerate(names)}
    pairs.sort()
    return LabelSet(
        node_indices=np.array([i for i, _ in pairs], dtype=np.int64),
        classes=np.array([name_idx[label] for _, label in pairs], dtype=np.int64),
        class_names=names,
    )


@dataclass(frozen=True)
class SplitSpec:
    """Evaluation protocol: train ratios, repetitions per ratio, seed."""

    ratios: tuple = DEFAULT_RATIOS
    repetitions: int = 10
    seed: int = 0

    def __post_init__(self):
        for r in self.ratios:
            if not 0.0 < r < 1.0:
                raise ValueError(f"train ratio must be in (0, 1), got {r}")
        if self.repetitions < 1:
            raise ValueError(f"repetitions must be >= 1, got {self.repetitions}")


def split(label_set, ratio, rep, seed, max_redraws=20):
    """Disjoint train/test cover of the labeled nodes, deterministic per
    (seed, rep). Positions returned index into ``label_set`` arrays.

    If some class is missing from the training side, the draw is repeated up
    to ``max_redraws`` times, then the split is used anyway with a warning.
    """
    if not 0.0 < ratio < 1.0:
        raise ValueError(f"train ratio must be in (0, 1), got {ratio}")
    n = len(label_set)
    n_train = int(round(ratio * n))
    n_train = min(max(n_train, 1), n - 1)
    rng = np.random.default_rng(np.random.SeedSequence((seed, rep)))
    all_classes = np.unique(label_set.classes)
    for attempt in range(max_redraws + 1):
        order = rng.permutation(n)
        train, test = order[:n_train], order[n_train:]
        if np.array_equal(np.unique(label_set.classes[train]), all_classes):
            return train, test
    warnings.warn(
        f"train split at ratio {ratio} is missing some class after {max_redraws} redraws",
        stacklevel=2,
    )
    return train, test


class LinearOvrClassifier:
    """One-vs-rest logistic regression fit by full-batch gradient descent.

    The objective per class is mean cross-entropy plus ``l2 / (2 n)`` times
    the squared weight norm (intercepts unpenalized), which matches a
    C-style regularization of 1/l2. The step size comes from a power-iteration
    bound on the logistic Hessian of the intercept-augmented feature matrix
    (the ones column dominates that bound), so descent is stable without
    line search.
    """

    def __init__(self, num_classes, dim):
        self.weights = np.zeros((num_classes, dim), dtype=np.float64)
        self.intercepts = np.zeros(num_classes, dtype=np.float64)
        self.iterations_run = 0
        self.final_grad_norm = np.inf

    def decision_values(self, x):
        return x @ self.weights.T + self.intercepts

    def predict(self, x):
        return self.decision_values(x).argmax(axis=1)

    def loss(self, x, classes, l2=1.0):
        n = x.shape[0]
        y = np.zeros((n, self.weights.shape[0]))
        y[np.arange(n), classes] = 1.0
        z = self.decision_values(x)
        # cross-entropy via log-sum-exp of the binary logistic losses
        ce = np.logaddexp(0.0, z) - y * z
        return float(ce.sum() / n + (l2 / (2.0 * n)) * (self.weights**2).sum())


def _spectral_norm_sq(x, iters=20):
    v = np.ones(x.shape[1]) / np.sqrt(x.shape[1])
    for _ in range(iters):
        v = x.T @ (x @ v)
        norm = np.linalg.norm(v)
        if norm == 0:
            return 0.0
        v /= norm
    return float(np.linalg.norm(x.T @ (x @ v)))


def fit_linear_ovr(features, classes, l2=1.0, max_iters=300, tol=1e-5):
    """Fit the one-vs-rest classifier; stops at gradient norm < tol or the
    iteration cap."""
    x = np.asarray(features, dtype=np.float64)
    classes = np.asarray(classes)
    present = np.unique(classes)
    if present.size < 2:
        raise ValueError("need at least 2 classes present in the training data")
    num_classes = int(classes.max()) + 1

    n, dim = x.shape
    model = LinearOvrClassifier(num_classes, dim)
    y = np.zeros((n, num_classes))
    y[np.arange(n), classes] = 1.0

    lam = l2 / n
    augmented = np.hstack([x, np.ones((n, 1))])
    lipschitz = _spectral_norm_sq(augmented) / (4.0 * n) + lam
    lr = 1.0 / max(lipschitz, 1e-12)

    for it in range(max_iters):
        p = sigmoid(model.decision_values(x))
        resid = (p - y) / n
        grad_w = resid.T @ x + lam * model.weights
        grad_b = resid.sum(axis=0)
        grad_norm = np.sqrt((grad_w**2).sum() + (grad_b**2).sum())
        model.iterations_run = it + 1
        model.final_grad_norm = float(grad_norm)
        if grad_norm < tol:
            break
        model.weights -= lr * grad_w
        model.intercepts -= lr * grad_b
    return model


def normalize_rows(vectors):
    """L2-normalize rows; all-zero rows stay zero."""
    norms = np.linalg.norm(vectors, axis=1, keepdims=True)
    return vectors / np.where(norms > 0, norms, 1.0)


@dataclass(frozen=True)
class RatioResult:
    ratio: float
    mean_accuracy: float
    std_accuracy: float
    repetitions: int


def evaluate(vectors, label_set, spec=SplitSpec(), l2=1.0, normalize=True, max_iters=300):
    """Accuracy table (one row per train ratio) for the given embeddings.

    ``vectors`` is an (N, d) array aligned with the dense indices referenced
    by ``label_set``. Rows are L2-normalized before classification unless
    ``normalize`` is disabled.
    """
    feats = np.asarray(vectors, dtype=np.float64)[label_set.node_indices]
    if normalize:
        feats = normalize_rows(feats)
    classes = label_set.classes

    results = []
    for ratio in spec.ratios:
        accs = []
        for rep in range(spec.repetitions):
            train, test = split(label_set, ratio, rep, spec.seed)
            model = fit_linear_ovr(feats[train], classes[train], l2=l2, max_iters=max_iters)
            pred = model.predict(feats[test])
            accs.append(float((pred == classes[test]).mean()))
        results.append(
            RatioResult(
                ratio=float(ratio),
                mean_accuracy=float(np.mean(accs)),
                std_accuracy=float(np.std(accs)),
                repetitions=spec.repetitions,
            )
        )
    return results


def format_accuracy_table(results, delimiter="\t"):
    """Delimiter-separated table with accuracy in percent, like the usual
    classification tables."""
    lines = [delimiter.join(["ratio", "mean_acc", "std_acc", "n_reps"])]
    for r in results:
        lines.append(
            delimiter.join(
                [
                    f"{r.ratio:.2f}",
                    f"{100.0 * r.mean_accuracy:.2f}",
                    f"{100.0 * r.std_accuracy:.2f}",
                    str(r.repetitions),
                ]
            )
        )
    return "\n".join(lines) + "\n"
