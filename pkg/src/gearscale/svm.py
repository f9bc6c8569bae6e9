"""Linear support vector machine trained on the dual, plus one-versus-all.

The binary solver is a pairwise coordinate ascent on

    max  sum(alpha) - 0.5 * ||sum_i alpha_i y_i x_i||**2
    s.t. 0 <= alpha_i <= C,  sum_i alpha_i y_i = 0

choosing the maximal violating pair at every step, so each update keeps the
equality constraint exact.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, InvalidArgumentError

MODEL_FORMAT = "gearscale.linear-svm"
MODEL_VERSION = 1


@dataclass(frozen=True, eq=False)
class TrainingSet:
    vectors: np.ndarray
    labels: np.ndarray  # entries in {-1, +1}

    def __post_init__(self):
        X = np.asarray(self.vectors, dtype=float)
        y = np.asarray(self.labels, dtype=float)
        if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.size:
            raise InvalidArgumentError("need an (l, d) matrix and l labels")
        if not np.all(np.isin(y, (-1.0, 1.0))):
            raise InvalidArgumentError("labels must be -1 or +1")
        if not (np.any(y > 0) and np.any(y < 0)):
            raise InvalidArgumentError("both labels must be present")
        if not np.all(np.isfinite(X)):
            raise InvalidArgumentError("feature vectors must be finite")
        object.__setattr__(self, "vectors", X)
        object.__setattr__(self, "labels", y)

    def __len__(self):
        return self.labels.size


@dataclass(frozen=True, eq=False)
class LinearSvmModel:
    """Trained binary classifier.

    ``dual_vectors`` and ``dual_coef`` (``v_i = alpha_i y_i``) hold every
    training point with a nonzero multiplier, so the kernel-form decision
    can be evaluated without the primal weights.
    """

    w: np.ndarray
    b: float
    alphas: np.ndarray
    dual_vectors: np.ndarray
    dual_coef: np.ndarray
    support_indices: np.ndarray
    C: float
    tol: float
    iterations: int = 0
    kkt_gap: float = 0.0

    @property
    def margin_width(self):
        return 2.0 / float(np.linalg.norm(self.w))

    def to_dict(self):
        return {
            "w": self.w.tolist(),
            "b": self.b,
            "C": self.C,
            "tol": self.tol,
            "iterations": self.iterations,
            "kkt_gap": self.kkt_gap,
            "support_indices": self.support_indices.tolist(),
            "dual_vectors": self.dual_vectors.tolist(),
            "dual_coef": self.dual_coef.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        dim = len(d["w"])
        return cls(
            w=np.array(d["w"], dtype=float),
            b=float(d["b"]),
            alphas=np.array([], dtype=float),
            dual_vectors=np.array(d["dual_vectors"], dtype=float).reshape(-1, dim),
            dual_coef=np.array(d["dual_coef"], dtype=float),
            support_indices=np.array(d["support_indices"], dtype=int),
            C=float(d["C"]),
            tol=float(d["tol"]),
            iterations=int(d["iterations"]),
            kkt_gap=float(d["kkt_gap"]),
        )


def _hinge_bias(F, y):
    # hinge loss in b is piecewise linear with kinks at b = F_i (f_i = y_i - F_i)
    candidates = np.unique(F)
    f = y - F
    loss = np.maximum(0.0, 1.0 - y[None, :] * (f[None, :] + candidates[:, None])).sum(axis=1)
    return float(candidates[int(np.argmin(loss))])


def _kkt_gap(K, y, alpha, C):
    F = y - K @ (alpha * y)
    pos, neg = y > 0, y < 0
    up = (pos & (alpha < C)) | (neg & (alpha > 0))
    low = (pos & (alpha > 0)) | (neg & (alpha < C))
    if not (up.any() and low.any()):
        return 0.0
    return float(F[up].max() - F[low].min())


def _polish(K, y, alpha, C, gap, sv_tol):
    """Solve the KKT equations exactly on the free multipliers.

    The pairwise solver stops at a KKT gap ``tol``, which can leave ``w``
    off by roughly ``sqrt(tol * sum(alpha))``. With the free and bounded
    sets fixed, the optimum solves a small linear system; that answer is
    kept only if it stays feasible and does not widen the gap.
    """
    free = np.flatnonzero((alpha > sv_tol * alpha.max()) & (alpha < C * (1 - sv_tol)))
    if free.size == 0:
        return alpha
    at_c = np.flatnonzero(alpha >= C * (1 - sv_tol))
    v_c = C * y[at_c]
    m = free.size
    A = np.zeros((m + 1, m + 1))
    A[:m, :m] = K[np.ix_(free, free)]
    A[:m, m] = 1.0
    A[m, :m] = 1.0
    rhs = np.concatenate([y[free] - K[np.ix_(free, at_c)] @ v_c, [-v_c.sum()]])
    try:
        sol = np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError:
        return alpha
    cand = np.zeros_like(alpha)
    cand[at_c] = C
    cand[free] = sol[:m] * y[free]
    if not np.all(np.isfinite(cand)) or np.any(cand[free] <= 0) or np.any(cand[free] >= C):
        return alpha
    return cand if _kkt_gap(K, y, cand, C) <= gap else alpha


def train_binary(ts: TrainingSet, C=1e3, tol=1e-4, max_iter=100_000, sv_tol=1e-8):
    """Solve the soft-margin dual to a KKT gap below ``tol``.

    Raises
    ------
    ConvergenceError
        When ``max_iter`` pair updates do not reach the tolerance.
    """
    if not C > 0:
        raise InvalidArgumentError("C must be positive")
    X, y = ts.vectors, ts.labels
    l = y.size
    K = X @ X.T
    diagK = np.diag(K)
    alpha = np.zeros(l)
    F = y.copy()  # y_t - w . x_t, with w = 0 initially
    pos, neg = y > 0, y < 0
    it = 0
    gap = math.inf
    while True:
        up = (pos & (alpha < C)) | (neg & (alpha > 0))
        low = (pos & (alpha > 0)) | (neg & (alpha < C))
        Fu = np.where(up, F, -np.inf)
        Fl = np.where(low, F, np.inf)
        i = int(np.argmax(Fu))
        j = int(np.argmin(Fl))
        gap = float(Fu[i] - Fl[j])
        if gap < tol:
            break
        if it >= max_iter:
            raise ConvergenceError(f"SVM dual not converged after {max_iter} iterations", gap)
        # step: alpha_i += y_i lam, alpha_j -= y_j lam
        cap_i = C - alpha[i] if y[i] > 0 else alpha[i]
        cap_j = alpha[j] if y[j] > 0 else C - alpha[j]
        eta = diagK[i] + diagK[j] - 2.0 * K[i, j]
        lam = gap / eta if eta > 1e-15 else math.inf
        lam = min(lam, cap_i, cap_j)
        # a clipped step lands exactly on the box edge, so bound tests stay exact
        alpha[i] = (C if y[i] > 0 else 0.0) if lam == cap_i else alpha[i] + y[i] * lam
        alpha[j] = (0.0 if y[j] > 0 else C) if lam == cap_j else alpha[j] - y[j] * lam
        F -= lam * (K[i] - K[j])
        it += 1

    alpha = _polish(K, y, alpha, C, gap, sv_tol)
    gap = _kkt_gap(K, y, alpha, C)
    v = alpha * y
    w = v @ X
    F = y - X @ w  # refresh from scratch to shed accumulated drift
    # "nonzero" is judged against the largest multiplier, since alphas can sit far below C
    floor = sv_tol * float(alpha.max())
    free = (alpha > floor) & (alpha < C * (1 - sv_tol))
    b = float(np.mean(F[free])) if np.any(free) else _hinge_bias(F, y)
    nz = np.flatnonzero(alpha > 0)
    return LinearSvmModel(
        w=w,
        b=b,
        alphas=alpha,
        dual_vectors=X[nz],
        dual_coef=v[nz],
        support_indices=np.flatnonzero(alpha > floor),
        C=float(C),
        tol=float(tol),
        iterations=it,
        kkt_gap=gap,
    )


def _check_dim(m, x):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != m.w.size:
        raise InvalidArgumentError(f"feature dimension {x.shape[-1]} != model dimension {m.w.size}")
    return x


def decision(m: LinearSvmModel, x, form="dual"):
    """Signed distance proxy ``sum_i v_i (x_i . x) + b``.

    ``form="primal"`` evaluates ``w . x + b`` instead; the two agree to
    rounding. Accepts a single vector or a stack of them.
    """
    x = _check_dim(m, x)
    if form == "primal":
        return x @ m.w + m.b
    if form != "dual":
        raise InvalidArgumentError(f"unknown decision form {form!r}")
    return (x @ m.dual_vectors.T) @ m.dual_coef + m.b


def classify(m: LinearSvmModel, x):
    """Sign of the decision value, with ``sign(0) = +1``."""
    d = decision(m, x)
    return np.where(d >= 0, 1, -1) if np.ndim(d) else (1 if d >= 0 else -1)


@dataclass(frozen=True, eq=False)
class MulticlassModel:
    class_names: tuple[str, ...]
    models: tuple[LinearSvmModel, ...]
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.class_names) != len(self.models):
            raise InvalidArgumentError("one binary model per class required")
        dims = {m.w.size for m in self.models}
        if len(dims) != 1:
            raise InvalidArgumentError("binary models disagree on feature dimension")

    @property
    def feature_dim(self):
        return self.models[0].w.size

    def to_json(self, path=None):
        doc = {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "feature_dim": self.feature_dim,
            "class_names": list(self.class_names),
            "meta": self.meta,
            "models": [dict(class_name=c, **m.to_dict()) for c, m in zip(self.class_names, self.models)],
        }
        text = json.dumps(doc, indent=1, sort_keys=True) + "\n"
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            doc = json.load(fh)
        if doc.get("format") != MODEL_FORMAT:
            raise InvalidArgumentError(f"{path}: not a {MODEL_FORMAT} document")
        if doc.get("version") != MODEL_VERSION:
            raise InvalidArgumentError(f"{path}: unsupported model version {doc.get('version')}")
        models = tuple(LinearSvmModel.from_dict(d) for d in doc["models"])
        return cls(tuple(doc["class_names"]), models, doc.get("meta", {}))


def train_ova(X, labels, classes=None, C=1e3, tol=1e-4, max_iter=100_000) -> MulticlassModel:
    """One binary model per class, that class against the rest."""
    X = np.asarray(X, dtype=float)
    labels = np.asarray(labels)
    if classes is None:
        classes = list(dict.fromkeys(labels.tolist()))
    classes = tuple(str(c) for c in classes)
    if len(classes) < 2:
        raise InvalidArgumentError("one-versus-all needs at least 2 classes")
    labels = labels.astype(str)
    present = set(labels.tolist())
    missing = [c for c in classes if c not in present]
    if missing:
        raise InvalidArgumentError(f"classes without training examples: {missing}")
    models = tuple(
        train_binary(TrainingSet(X, np.where(labels == c, 1.0, -1.0)), C, tol, max_iter) for c in classes
    )
    return MulticlassModel(classes, models, {"C": float(C), "tol": float(tol)})


def decision_matrix(mm: MulticlassModel, X):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return np.column_stack([decision(m, X) for m in mm.models])


def predict_ova(mm: MulticlassModel, X):
    """Class with the largest decision value; ties go to the earlier class.

    A single vector gives a single name, a matrix gives a list.
    """
    single = np.ndim(X) == 1
    D = decision_matrix(mm, X)
    names = [mm.class_names[k] for k in np.argmax(D, axis=1)]
    return names[0] if single else names


def percent(correct, total):
    """Success percentage truncated (not rounded) to two decimals."""
    if total <= 0:
        raise InvalidArgumentError("empty split")
    return math.floor(10000 * correct / total) / 100


@dataclass(frozen=True)
class SplitMetrics:
    binary: dict  # class -> one-vs-all accuracy (%)
    recall: dict  # class -> multiclass recall (%)
    overall: float
    n: int


def _split_metrics(mm, X, labels):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    labels = np.asarray(labels).astype(str)
    if labels.size == 0:
        raise InvalidArgumentError("empty split")
    D = decision_matrix(mm, X)
    pred = np.array(mm.class_names)[np.argmax(D, axis=1)]
    binary, recall = {}, {}
    for k, c in enumerate(mm.class_names):
        truth = labels == c
        said = D[:, k] >= 0
        binary[c] = percent(int(np.count_nonzero(said == truth)), labels.size)
        members = int(np.count_nonzero(truth))
        recall[c] = percent(int(np.count_nonzero(pred[truth] == c)), members) if members else float("nan")
    overall = percent(int(np.count_nonzero(pred == labels)), labels.size)
    return SplitMetrics(binary, recall, overall, int(labels.size))


def success_metrics(mm: MulticlassModel, train_set, test_set):
    """Train/test success in the layout of a per-condition results table.

    ``train_set`` and ``test_set`` are ``(X, labels)`` pairs. Returns
    ``{"train": SplitMetrics, "test": SplitMetrics}``.
    """
    return {"train": _split_metrics(mm, *train_set), "test": _split_metrics(mm, *test_set)}


def format_table(rows, class_names, kind="binary"):
    """Aligned text table: one row per ``(name, metrics)`` pair.

    ``metrics`` is the dict returned by :func:`success_metrics`.
    """
    head1 = ["Objective Function"] + [c for c in class_names for _ in (0, 1)]
    head2 = [""] + ["Train success (%)", "Test success (%)"] * len(class_names)
    body = []
    for name, met in rows:
        cells = [name]
        for c in class_names:
            cells += [f"{getattr(met['train'], kind)[c]:.2f}", f"{getattr(met['test'], kind)[c]:.2f}"]
        body.append(cells)
    table = [head1, head2] + body
    widths = [max(len(r[i]) for r in table) for i in range(len(head1))]
    return "\n".join("  ".join(cell.ljust(wd) for cell, wd in zip(r, widths)).rstrip() for r in table) + "\n"


def table_csv_rows(rows, class_names):
    header = ["objective"]
    for c in class_names:
        header += [f"{c}_train_pct", f"{c}_test_pct", f"{c}_train_recall_pct", f"{c}_test_recall_pct"]
    header += ["overall_train_pct", "overall_test_pct"]
    out = [header]
    for name, met in rows:
        r = [name]
        for c in class_names:
            r += [
                f"{met['train'].binary[c]:.2f}",
                f"{met['test'].binary[c]:.2f}",
                f"{met['train'].recall[c]:.2f}",
                f"{met['test'].recall[c]:.2f}",
            ]
        r += [f"{met['train'].overall:.2f}", f"{met['test'].overall:.2f}"]
        out.append(r)
    return out
