"""Frame similarity objectives, per-frame scale selection and scale-level features.

In every time frame of ``2n + 1`` samples the signal is compared against
each scalogram row over the same samples; the best-matching scale wins the
frame. The histogram of winning scales is the feature vector.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .cwt import Scalogram, ScaleGrid, WaveletParams, cwt
from .errors import DataFormatError, InvalidArgumentError, UndefinedCosineError

NORMALIZED_DOT = "normalized_dot"
DOT_PRODUCT = "dot_product"
LOCAL_GAUSSIAN = "local_gaussian_correlation"

OBJECTIVE_ALIASES = {
    "ndot": NORMALIZED_DOT,
    "dot": DOT_PRODUCT,
    "lgc": LOCAL_GAUSSIAN,
    NORMALIZED_DOT: NORMALIZED_DOT,
    DOT_PRODUCT: DOT_PRODUCT,
    LOCAL_GAUSSIAN: LOCAL_GAUSSIAN,
}
SHORT_NAMES = {NORMALIZED_DOT: "ndot", DOT_PRODUCT: "dot", LOCAL_GAUSSIAN: "lgc"}


def gaussian_tau(n):
    """Width giving the outermost frame samples one percent weight."""
    return n / math.sqrt(2 * math.log(10))


def gaussian_weights(n):
    """Weights ``exp(-(i - (n + 1))**2 / tau**2)`` for ``i = 1 .. 2n + 1``."""
    if n < 1:
        raise InvalidArgumentError("half width n must be >= 1")
    offsets = np.arange(-n, n + 1, dtype=float)
    return np.exp(-(offsets**2) / gaussian_tau(n) ** 2)


@dataclass(frozen=True)
class FrameObjective:
    kind: str = LOCAL_GAUSSIAN
    half_width_n: int = 15

    def __post_init__(self):
        try:
            object.__setattr__(self, "kind", OBJECTIVE_ALIASES[self.kind])
        except KeyError:
            raise InvalidArgumentError(f"unknown objective {self.kind!r}") from None
        if int(self.half_width_n) != self.half_width_n or self.half_width_n < 1:
            raise InvalidArgumentError("half_width_n must be an integer >= 1")
        object.__setattr__(self, "half_width_n", int(self.half_width_n))

    @property
    def frame_len(self):
        return 2 * self.half_width_n + 1

    @property
    def tau(self):
        return gaussian_tau(self.half_width_n)

    @property
    def short_name(self):
        return SHORT_NAMES[self.kind]

    def weights(self):
        if self.kind == LOCAL_GAUSSIAN:
            return gaussian_weights(self.half_width_n)
        return np.ones(self.frame_len)


def _centered(A):
    # shifting by the first sample first makes a constant frame exactly zero
    d = A - A[..., :1]
    return d - d.mean(axis=-1, keepdims=True)


def frame_similarity(X, C, obj: FrameObjective):
    """Similarity of one signal frame ``X`` and coefficient frame ``C``.

    ``normalized_dot`` is the plain cosine. The other two kinds are the
    mean-removed weighted sum ``sum w_i (x_i - xbar)(c_i - cbar)``, with unit
    weights for ``dot_product`` and Gaussian weights otherwise.
    """
    X = np.asarray(X, dtype=float)
    C = np.asarray(C, dtype=float)
    if X.shape != (obj.frame_len,) or C.shape != X.shape:
        raise InvalidArgumentError(f"frames must both have {obj.frame_len} samples")
    if obj.kind == NORMALIZED_DOT:
        nx, nc = np.linalg.norm(X), np.linalg.norm(C)
        if nx == 0 or nc == 0:
            raise UndefinedCosineError("cosine undefined for a zero-norm frame")
        return float(np.dot(X, C) / (nx * nc))
    w = obj.weights()
    return float(np.sum(w * _centered(X) * _centered(C)))


@dataclass(frozen=True, eq=False)
class ScaleTrace:
    centers: np.ndarray
    selected_scales: np.ndarray
    objective_values: np.ndarray

    def __len__(self):
        return self.centers.size

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("center_index,scale,objective_value\n")
            for b, a, v in zip(self.centers, self.selected_scales, self.objective_values):
                fh.write(f"{b},{a:g},{v:.17g}\n")
        return path


def frame_centers(n_samples, n, hop=1):
    if hop < 1:
        raise InvalidArgumentError("hop must be >= 1")
    if n_samples < 2 * n + 1:
        raise InvalidArgumentError(f"signal of {n_samples} samples is shorter than one frame ({2 * n + 1})")
    return np.arange(n, n_samples - n, hop)


def objective_map(x, scg: Scalogram, obj: FrameObjective, hop=1):
    """Objective value for every (scale, frame centre) pair.

    Returns ``(centers, values)`` where ``values`` has one row per scale.
    Frames closer than ``n`` samples to either end are skipped.
    """
    x = np.asarray(getattr(x, "samples", x), dtype=float)
    if scg.signal_len != x.size:
        raise InvalidArgumentError("scalogram and signal lengths differ")
    n = obj.half_width_n
    centers = frame_centers(x.size, n, hop)
    L = obj.frame_len
    X = sliding_window_view(x, L)[::hop]
    values = np.empty((len(scg.grid), centers.size))
    if obj.kind == NORMALIZED_DOT:
        nx = np.linalg.norm(X, axis=1)
        if np.any(nx == 0):
            raise UndefinedCosineError("cosine undefined for a zero-norm signal frame")
        for i, row in enumerate(scg.coefficients):
            C = sliding_window_view(row, L)[::hop]
            nc = np.linalg.norm(C, axis=1)
            if np.any(nc == 0):
                raise UndefinedCosineError(f"cosine undefined: zero coefficient frame at scale {scg.grid.scales[i]:g}")
            values[i] = np.einsum("bl,bl->b", X, C) / (nx * nc)
        return centers, values
    w = obj.weights()
    Xw = _centered(X) * w
    for i, row in enumerate(scg.coefficients):
        C = sliding_window_view(row, L)[::hop]
        values[i] = np.einsum("bl,bl->b", Xw, _centered(C))
    return centers, values


TIE_RTOL = 1e-12


def select_scales(x, scg: Scalogram, obj: FrameObjective, hop=1) -> ScaleTrace:
    """Pick the best-matching scale in every frame.

    Values within ``TIE_RTOL`` (relative) of the frame maximum count as
    tied, and ties go to the smallest scale. Without the tolerance, frames
    where several scales match exactly (a pure tone under the cosine) would
    be decided by rounding noise.
    """
    centers, values = objective_map(x, scg, obj, hop)
    top = values.max(axis=0)
    tied = values >= top - TIE_RTOL * np.abs(top)
    best = np.argmax(tied, axis=0)  # first tied row, i.e. smallest scale
    cols = np.arange(centers.size)
    return ScaleTrace(centers, scg.grid.scales[best], values[best, cols])


@dataclass(frozen=True, eq=False)
class FeatureVector:
    levels: np.ndarray
    label: str = ""
    provenance: str = "raw-signal"

    def __len__(self):
        return self.levels.size


def scale_distribution(tr: ScaleTrace, grid: ScaleGrid, label="") -> FeatureVector:
    """Normalized histogram of the selected scales, one bin per grid scale."""
    if len(tr) == 0:
        raise InvalidArgumentError("empty scale trace")
    idx = np.searchsorted(grid.scales, tr.selected_scales)
    if np.any(idx >= len(grid)) or np.any(grid.scales[np.minimum(idx, len(grid) - 1)] != tr.selected_scales):
        raise InvalidArgumentError("trace holds scales that are not on the grid")
    counts = np.bincount(idx, minlength=len(grid)).astype(float)
    return FeatureVector(counts / counts.sum(), label)


def mix_imf_features(per_imf, k=None) -> FeatureVector:
    """Average the scale-level distributions of ``k`` IMFs."""
    per_imf = list(per_imf)
    k = len(per_imf) if k is None else k
    if k < 1 or k != len(per_imf):
        raise InvalidArgumentError(f"expected {k} IMF feature vectors, got {len(per_imf)}")
    dims = {len(fv) for fv in per_imf}
    if len(dims) != 1:
        raise InvalidArgumentError(f"feature vectors have mismatched lengths {sorted(dims)}")
    levels = np.mean([fv.levels for fv in per_imf], axis=0)
    return FeatureVector(levels, per_imf[0].label, f"imf-mixed({k})")


def signal_features(x, grid, obj, hop=1, params=None, label=""):
    """CWT plus scale selection plus histogram for one series."""
    scg = cwt(x, grid, params or WaveletParams())
    return scale_distribution(select_scales(x, scg, obj, hop), grid, label)


def write_features_csv(path, vectors, n_levels=None):
    """One row per vector: the level values then the class label."""
    vectors = list(vectors)
    if n_levels is None:
        if not vectors:
            raise InvalidArgumentError("cannot infer feature width from no vectors")
        n_levels = len(vectors[0])
    with open(path, "w", newline="") as fh:
        fh.write(",".join(f"level_{i}" for i in range(1, n_levels + 1)) + ",label\n")
        for fv in vectors:
            if len(fv) != n_levels:
                raise InvalidArgumentError("all feature vectors must have the same length")
            fh.write(",".join(repr(float(v)) for v in fv.levels) + f",{fv.label}\n")
    return path


def read_features_csv(path):
    """Inverse of :func:`write_features_csv`; returns ``(X, labels)``."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows or rows[0][-1].strip() != "label":
        raise DataFormatError(f"{path}: missing 'label' header column")
    width = len(rows[0])
    X, labels = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != width:
            raise DataFormatError(f"{path}:{lineno}: expected {width} columns, got {len(row)}")
        try:
            X.append([float(v) for v in row[:-1]])
        except ValueError:
            raise DataFormatError(f"{path}:{lineno}: non-numeric feature value") from None
        labels.append(row[-1])
    return np.array(X, dtype=float).reshape(len(labels), width - 1), labels
