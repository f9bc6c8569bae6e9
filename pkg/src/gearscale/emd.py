"""Empirical mode decomposition by cubic-spline envelope sifting."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import DegenerateInputError, InvalidArgumentError, MonotoneSignalError

STOP_CRITERIA = "criteria"
STOP_CAP = "cap"


@dataclass(frozen=True)
class SiftConfig:
    """Sifting and decomposition controls.

    Parameters
    ----------
    sd_threshold : float
        Sifting may stop once the normalized squared change between two
        successive iterates drops below this value.
    max_sift_iters : int
        Hard cap on sifts per IMF.
    max_imfs : int
        Maximum number of IMFs to extract.
    boundary_policy : {"mirror", "clamp"}
        How the envelopes are anchored at the record ends.
    residual_tol : float
        Decomposition ends once the running residual's energy falls below
        ``residual_tol`` times the source energy.
    """

    sd_threshold: float = 0.25
    max_sift_iters: int = 64
    max_imfs: int = 10
    boundary_policy: str = "mirror"
    residual_tol: float = 1e-3

    def __post_init__(self):
        if not 0 < self.sd_threshold < 1:
            raise InvalidArgumentError("sd_threshold must lie in (0, 1)")
        if self.max_sift_iters < 1 or self.max_imfs < 1:
            raise InvalidArgumentError("max_sift_iters and max_imfs must be >= 1")
        if self.boundary_policy not in ("mirror", "clamp"):
            raise InvalidArgumentError(f"unknown boundary policy {self.boundary_policy!r}")
        if self.residual_tol < 0:
            raise InvalidArgumentError("residual_tol must be >= 0")


@dataclass(frozen=True, eq=False)
class ImfSet:
    """IMFs ``p_i`` and final residual ``r_n`` of one source series.

    ``sift_counts[i]`` is the number of sifts spent on IMF ``i`` and
    ``stop_reasons[i]`` says which criterion ended them (``"cap"`` marks
    IMFs cut off by the iteration limit).
    """

    imfs: np.ndarray  # shape (n_imfs, n_samples)
    residual: np.ndarray
    sift_counts: tuple[int, ...]
    stop_reasons: tuple[str, ...]

    def __len__(self):
        return self.imfs.shape[0]

    def reconstruct(self):
        return self.imfs.sum(axis=0) + self.residual

    def to_csv(self, path):
        cols = [f"imf{i + 1}" for i in range(len(self))] + ["residual"]
        data = np.column_stack([*self.imfs, self.residual])
        np.savetxt(path, data, delimiter=",", header=",".join(cols), comments="", fmt="%.17g")
        return path


def find_extrema(x):
    """Indices of interior local maxima and minima of ``x``.

    A flat run counts once, at its first index, when the slope changes sign
    across it.
    """
    x = np.asarray(x, dtype=float)
    d = np.sign(np.diff(x))
    nz = np.flatnonzero(d)
    if nz.size < 2:
        return np.array([], dtype=int), np.array([], dtype=int)
    s = d[nz]
    change = np.flatnonzero(s[1:] != s[:-1])
    # extremum sits after the last step of the run preceding the change
    idx = nz[change] + 1
    is_max = s[change] > 0
    return idx[is_max], idx[~is_max]


def count_zero_crossings(x):
    x = np.asarray(x, dtype=float)
    s = np.sign(x)
    s = s[s != 0]
    return int(np.count_nonzero(s[1:] != s[:-1]))


def count_extrema(x):
    mx, mn = find_extrema(x)
    return mx.size + mn.size


def imf_counts_agree(x):
    return abs(count_zero_crossings(x) - count_extrema(x)) <= 1


def _anchor_points(x, idx, policy):
    n = x.size
    t = idx.astype(float)
    v = x[idx]
    if policy == "mirror":
        left = idx[:2]
        right = idx[-2:]
        t = np.concatenate([-t[:2][::-1], t, 2.0 * (n - 1) - t[-2:][::-1]])
        v = np.concatenate([x[left][::-1], v, x[right][::-1]])
    else:  # clamp: hold the nearest extremum value at each end
        t = np.concatenate([[0.0], t, [n - 1.0]])
        v = np.concatenate([[v[0]], v, [v[-1]]])
    t, keep = np.unique(t, return_index=True)
    return t, v[keep]


def envelopes(x, policy="mirror"):
    """Upper and lower natural-cubic-spline envelopes of ``x``.

    Raises
    ------
    MonotoneSignalError
        If ``x`` has fewer than two interior maxima or minima.
    """
    x = np.asarray(x, dtype=float)
    mx, mn = find_extrema(x)
    if mx.size < 2 or mn.size < 2:
        raise MonotoneSignalError(f"{mx.size} maxima and {mn.size} minima; need 2 of each")
    grid = np.arange(x.size, dtype=float)
    tu, vu = _anchor_points(x, mx, policy)
    tl, vl = _anchor_points(x, mn, policy)
    upper = CubicSpline(tu, vu, bc_type="natural")(grid)
    lower = CubicSpline(tl, vl, bc_type="natural")(grid)
    return upper, lower


def sift_once(h, policy="mirror"):
    """One sifting step: subtract the mean envelope.

    Returns ``(h_next, sd)`` with ``sd = sum((h - h_next)**2) / sum(h**2)``.
    """
    h = np.asarray(h, dtype=float)
    energy = float(np.dot(h, h))
    if energy == 0.0:
        raise DegenerateInputError("cannot sift an all-zero series")
    upper, lower = envelopes(h, policy)
    h_next = h - (upper + lower) / 2.0
    diff = h - h_next
    return h_next, float(np.dot(diff, diff)) / energy


def _sift(x, cfg):
    h = np.asarray(x, dtype=float)
    for k in range(1, cfg.max_sift_iters + 1):
        h, sd = sift_once(h, cfg.boundary_policy)
        # both criteria must hold, so that an SD stop never yields a non-IMF
        if sd < cfg.sd_threshold and imf_counts_agree(h):
            return h, k, STOP_CRITERIA
    return h, cfg.max_sift_iters, STOP_CAP


def extract_imf(x, cfg: SiftConfig | None = None):
    """Sift ``x`` into its first IMF; returns ``(imf, iterations)``."""
    imf, iters, _ = _sift(x, cfg or SiftConfig())
    return imf, iters


def decompose(x, cfg: SiftConfig | None = None) -> ImfSet:
    """Peel IMFs off ``x`` (a ``Signal`` or array), highest frequency first.

    Stops when the running residual has fewer than two maxima or minima,
    carries negligible energy, or ``cfg.max_imfs`` IMFs have been taken.
    """
    cfg = cfg or SiftConfig()
    source = np.asarray(getattr(x, "samples", x), dtype=float)
    residual = source.copy()
    floor = cfg.residual_tol * float(np.dot(source, source))
    imfs, counts, reasons = [], [], []
    while len(imfs) < cfg.max_imfs:
        if imfs and float(np.dot(residual, residual)) <= floor:
            break
        try:
            imf, iters, why = _sift(residual, cfg)
        except (MonotoneSignalError, DegenerateInputError):
            break
        imfs.append(imf)
        counts.append(iters)
        reasons.append(why)
        residual = residual - imf
    stacked = np.array(imfs) if imfs else np.empty((0, source.size))
    return ImfSet(stacked, residual, tuple(counts), tuple(reasons))
