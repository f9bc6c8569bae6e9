"""Real Morlet continuous wavelet transform on a discrete scale grid.

Time inside the daughter wavelet is measured in samples, so scale ``a``
analyses roughly ``two_pi_nu0 / (2 pi a)`` cycles per sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError

T_CUT = 6.0  # kernel support in mother-wavelet time units; |psi| < 1e-15 beyond


@dataclass(frozen=True)
class WaveletParams:
    two_pi_nu0: float = 5.0

    def __post_init__(self):
        if not self.two_pi_nu0 > 0:
            raise InvalidArgumentError("two_pi_nu0 must be positive")


@dataclass(frozen=True, eq=False)
class ScaleGrid:
    scales: np.ndarray

    def __post_init__(self):
        s = np.array(self.scales, dtype=float)
        if s.ndim != 1 or s.size < 1:
            raise InvalidArgumentError("scale grid must be a non-empty 1-d sequence")
        if np.any(s <= 0) or np.any(np.diff(s) <= 0):
            raise InvalidArgumentError("scales must be positive and strictly increasing")
        s.setflags(write=False)
        object.__setattr__(self, "scales", s)

    @classmethod
    def integers(cls, s_max):
        """Scales ``1, 2, ..., s_max``."""
        return cls(np.arange(1, int(s_max) + 1))

    def __len__(self):
        return self.scales.size

    def __eq__(self, other):
        return isinstance(other, ScaleGrid) and np.array_equal(self.scales, other.scales)

    def index_of(self, scale):
        hits = np.flatnonzero(self.scales == scale)
        if hits.size == 0:
            raise InvalidArgumentError(f"scale {scale} is not on the grid")
        return int(hits[0])


@dataclass(frozen=True, eq=False)
class Scalogram:
    """CWT coefficients, rows indexed by scale and columns by sample."""

    coefficients: np.ndarray
    grid: ScaleGrid

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=float)
        if c.shape[0] != len(self.grid):
            raise InvalidArgumentError("one coefficient row per scale required")
        if not np.all(np.isfinite(c)):
            raise InvalidArgumentError("coefficients must be finite")

    @property
    def signal_len(self):
        return self.coefficients.shape[1]

    def row(self, scale):
        return self.coefficients[self.grid.index_of(scale)]

    def to_csv(self, path):
        n = self.signal_len
        with open(path, "w") as fh:
            fh.write("scale," + ",".join(str(b) for b in range(n)) + "\n")
            for a, row in zip(self.grid.scales, self.coefficients):
                fh.write(f"{a:g}," + ",".join(f"{v:.12g}" for v in row) + "\n")
        return path


def morlet(t, params: WaveletParams = WaveletParams()):
    """Real Morlet mother wavelet ``exp(-t**2) cos(two_pi_nu0 t) / sqrt(2 pi)``."""
    t = np.asarray(t, dtype=float)
    return np.exp(-(t**2)) * np.cos(params.two_pi_nu0 * t) / math.sqrt(2 * math.pi)


def _half_support(a):
    return int(math.floor(a * T_CUT))


def daughter(a, b=0.0, params: WaveletParams = WaveletParams()):
    """Daughter wavelet ``a**-0.5 psi((t - b) / a)`` sampled at integer ``t``.

    Returns ``(t, k)`` covering ``|t - b| <= a * T_CUT``.
    """
    if not a > 0:
        raise InvalidArgumentError("scale must be positive")
    lo = math.ceil(b - a * T_CUT)
    hi = math.floor(b + a * T_CUT)
    t = np.arange(lo, hi + 1, dtype=float)
    return t, morlet((t - b) / a, params) / math.sqrt(a)


def cwt(x, grid: ScaleGrid, params: WaveletParams = WaveletParams()) -> Scalogram:
    """Coefficients ``W(a, b) = sum_t x(t) k_{a,b}(t)`` for every grid scale.

    The signal is zero-extended past both ends. ``x`` may be a ``Signal`` or
    a plain array.
    """
    x = np.asarray(getattr(x, "samples", x), dtype=float)
    n = x.size
    out = np.empty((len(grid), n))
    for i, a in enumerate(grid.scales):
        m = _half_support(a)
        if 2 * m + 1 >= 4 * n:
            raise InvalidArgumentError(f"scale {a:g} kernel ({2 * m + 1} taps) too long for {n} samples")
        _, k = daughter(a, 0.0, params)
        # the kernel is even, so convolution equals the correlation sum
        out[i] = np.convolve(x, k, mode="full")[m : m + n]
    return Scalogram(out, grid)


def scale_for_frequency(f_hz, fs_hz, params: WaveletParams = WaveletParams()):
    """Scale whose wavelet oscillation frequency equals ``f_hz``."""
    if not f_hz > 0:
        raise InvalidArgumentError("frequency must be positive")
    if not fs_hz > 0:
        raise InvalidArgumentError("sample rate must be positive")
    return params.two_pi_nu0 / (2 * math.pi) * fs_hz / f_hz
