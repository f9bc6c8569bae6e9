"""Signals, synthetic generators and file ingestion.

Time inside the generators is physical seconds, ``t = k / fs``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.io import wavfile

from .errors import ChannelError, DataFormatError, InvalidArgumentError

SHAFT_HZ = 1420.0 / 60.0
MESH_HZ = 15 * SHAFT_HZ  # 355 Hz


def _frozen(values):
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Signal:
    """Uniformly sampled real series.

    ``samples`` is stored as a read-only float64 array.
    """

    samples: np.ndarray
    sample_rate_hz: float

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=float)
        if arr.ndim != 1:
            raise InvalidArgumentError("samples must be one-dimensional")
        if arr.size < 2:
            raise InvalidArgumentError("a signal needs at least 2 samples")
        if not np.all(np.isfinite(arr)):
            raise InvalidArgumentError("samples must be finite")
        if not (self.sample_rate_hz > 0 and math.isfinite(self.sample_rate_hz)):
            raise InvalidArgumentError("sample_rate_hz must be positive")
        object.__setattr__(self, "samples", _frozen(arr))
        object.__setattr__(self, "sample_rate_hz", float(self.sample_rate_hz))

    def __len__(self):
        return self.samples.size

    @property
    def duration_s(self):
        return self.samples.size / self.sample_rate_hz

    @property
    def times(self):
        return np.arange(self.samples.size) / self.sample_rate_hz


@dataclass(frozen=True)
class SegmentSet:
    segments: tuple[Signal, ...]
    source_label: str

    def __post_init__(self):
        segs = tuple(self.segments)
        if not segs:
            raise InvalidArgumentError("a segment set needs at least one segment")
        n, fs = len(segs[0]), segs[0].sample_rate_hz
        for s in segs:
            if len(s) != n or s.sample_rate_hz != fs:
                raise InvalidArgumentError("segments must share length and sample rate")
        object.__setattr__(self, "segments", segs)

    def __len__(self):
        return len(self.segments)

    def __iter__(self):
        return iter(self.segments)

    def __getitem__(self, i):
        return self.segments[i]

    def as_array(self):
        return np.vstack([s.samples for s in self.segments])


def _time_axis(duration_s, fs_hz):
    if not duration_s > 0 or not fs_hz > 0:
        raise InvalidArgumentError("duration_s and fs_hz must be positive")
    n = int(round(duration_s * fs_hz))
    if n < 2:
        raise InvalidArgumentError("duration_s * fs_hz must give at least 2 samples")
    return np.arange(n) / fs_hz


def generate_example1(duration_s=1.0, fs_hz=1000.0):
    """Two superimposed tones: ``sin(40 pi t)`` and ``2 cos(80 pi t)``.

    Returns ``(y1, y2, y)`` with ``y = y1 + y2``.
    """
    t = _time_axis(duration_s, fs_hz)
    y1 = np.sin(40 * np.pi * t)
    y2 = 2 * np.cos(80 * np.pi * t)
    return Signal(y1, fs_hz), Signal(y2, fs_hz), Signal(y1 + y2, fs_hz)


def generate_example2(duration_s=1.0, fs_hz=1000.0):
    """A 20 Hz tone plus the chirp ``cos(2 pi (10 + 80 t) t)``.

    The chirp's instantaneous frequency is ``10 + 160 t`` Hz.
    """
    t = _time_axis(duration_s, fs_hz)
    y1 = np.sin(40 * np.pi * t)
    y2 = np.cos(2 * np.pi * (10 + 80 * t) * t)
    return Signal(y1, fs_hz), Signal(y2, fs_hz), Signal(y1 + y2, fs_hz)


@dataclass(frozen=True)
class ConditionSpec:
    """Recipe for one synthetic gearbox condition.

    The record is a meshing tone (plus harmonics) amplitude-modulated at the
    shaft rate, an optional train of decaying resonance impulses, and white
    Gaussian noise.
    """

    name: str
    mesh_hz: float = MESH_HZ
    mesh_amplitude: float = 1.0
    harmonics: tuple[float, ...] = ()  # amplitudes of 2x, 3x, ... mesh
    modulation_depth: float = 0.0
    modulation_hz: float = SHAFT_HZ
    impulse_amplitude: float = 0.0
    impulse_rate_hz: float = SHAFT_HZ
    resonance_hz: float = 2500.0
    impulse_decay_s: float = 0.002
    impulse_jitter: float = 0.05  # fraction of the impulse period
    noise_std: float = 0.0


DEFAULT_CONDITIONS = (
    ConditionSpec("healthy", harmonics=(0.2,), modulation_depth=0.05, noise_std=0.1),
    ConditionSpec(
        "chipped",
        harmonics=(0.2,),
        modulation_depth=0.3,
        impulse_amplitude=4.0,
        impulse_rate_hz=SHAFT_HZ,  # one chipped tooth hits once per revolution
        resonance_hz=2800.0,
        impulse_decay_s=0.003,
        noise_std=0.1,
    ),
    ConditionSpec(
        "worn",
        mesh_amplitude=0.6,
        harmonics=(0.9, 0.3),
        modulation_depth=0.15,
        impulse_amplitude=1.5,
        impulse_rate_hz=3 * SHAFT_HZ,
        resonance_hz=1800.0,
        noise_std=0.1,
    ),
)


def _condition_record(spec, n, fs_hz, rng):
    t = np.arange(n) / fs_hz
    phase = rng.uniform(0, 2 * np.pi, size=1 + len(spec.harmonics))
    tone = spec.mesh_amplitude * np.cos(2 * np.pi * spec.mesh_hz * t + phase[0])
    for k, amp in enumerate(spec.harmonics, start=2):
        tone += amp * np.cos(2 * np.pi * k * spec.mesh_hz * t + phase[k - 1])
    mod_phase = rng.uniform(0, 2 * np.pi)
    x = (1 + spec.modulation_depth * np.cos(2 * np.pi * spec.modulation_hz * t + mod_phase)) * tone

    if spec.impulse_amplitude > 0 and spec.impulse_rate_hz > 0:
        period = 1.0 / spec.impulse_rate_hz
        starts = np.arange(rng.uniform(0, period), n / fs_hz, period)
        starts = starts + rng.normal(0, spec.impulse_jitter * period, size=starts.size)
        ring_len = int(math.ceil(8 * spec.impulse_decay_s * fs_hz))
        tau = np.arange(ring_len) / fs_hz
        ring = np.exp(-tau / spec.impulse_decay_s) * np.sin(2 * np.pi * spec.resonance_hz * tau)
        for t0 in starts:
            k0 = int(round(t0 * fs_hz))
            if k0 < 0 or k0 >= n:
                continue
            stop = min(n, k0 + ring_len)
            x[k0:stop] += spec.impulse_amplitude * ring[: stop - k0]

    if spec.noise_std > 0:
        x = x + rng.normal(0, spec.noise_std, size=n)
    return x


def generate_gear_dataset(
    conditions: Sequence[ConditionSpec] = DEFAULT_CONDITIONS,
    segments_per_condition: int = 80,
    segment_len: int = 1250,
    fs_hz: float = 10_000.0,
    seed: int = 0,
) -> list[SegmentSet]:
    """Synthesize one continuous record per condition and split it.

    Each condition draws from its own generator seeded by ``(seed, index)``,
    so adding a condition never perturbs the others.
    """
    conditions = list(conditions)
    if not conditions:
        raise InvalidArgumentError("at least one condition is required")
    if segments_per_condition < 1 or segment_len < 2:
        raise InvalidArgumentError("need segments_per_condition >= 1 and segment_len >= 2")
    if not fs_hz > 0:
        raise InvalidArgumentError("fs_hz must be positive")
    out = []
    for idx, spec in enumerate(conditions):
        rng = np.random.default_rng([seed, idx])
        record = _condition_record(spec, segments_per_condition * segment_len, fs_hz, rng)
        out.append(split_segments(Signal(record, fs_hz), segments_per_condition, label=spec.name))
    return out


def split_segments(s: Signal, n_segments: int, label: str = "") -> SegmentSet:
    """Cut ``s`` into consecutive, non-overlapping segments of equal length.

    Trailing samples that do not fill a whole segment are dropped.
    """
    n = len(s)
    if n_segments < 1 or n_segments > n / 2:
        raise InvalidArgumentError(f"cannot split {n} samples into {n_segments} segments")
    seg_len = n // n_segments
    data = s.samples[: seg_len * n_segments].reshape(n_segments, seg_len)
    return SegmentSet(tuple(Signal(row, s.sample_rate_hz) for row in data), label)


# -- file I/O ---------------------------------------------------------------


def _parse_row(row, lineno, path):
    try:
        return [float(v) for v in row]
    except ValueError:
        raise DataFormatError(f"{path}:{lineno}: non-numeric value in row {row!r}") from None


def _read_csv(path, channel):
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise DataFormatError(f"{path}: no data rows")
    start = 0
    try:
        [float(v) for v in rows[0]]
    except ValueError:
        start = 1  # header
    width = len(rows[start]) if start < len(rows) else 0
    if width == 0:
        raise DataFormatError(f"{path}: no data rows")
    if not 0 <= channel < width:
        raise ChannelError(f"{path}: channel {channel} out of range (file has {width})")
    values = []
    for lineno, row in enumerate(rows[start:], start=start + 1):
        if len(row) != width:
            raise DataFormatError(f"{path}:{lineno}: expected {width} columns, got {len(row)}")
        values.append(_parse_row(row, lineno, path)[channel])
    return np.array(values)


def _read_wav(path, channel):
    try:
        rate, data = wavfile.read(path)
    except ValueError as exc:
        raise DataFormatError(f"{path}: {exc}") from None
    if data.ndim == 1:
        data = data[:, None]
    if not 0 <= channel < data.shape[1]:
        raise ChannelError(f"{path}: channel {channel} out of range (file has {data.shape[1]})")
    col = data[:, channel]
    if col.dtype == np.int16:
        col = col / 32768.0
    elif col.dtype == np.int32:
        col = col / 2147483648.0
    elif col.dtype == np.uint8:
        col = (col.astype(float) - 128.0) / 128.0
    elif col.dtype.kind == "f":
        col = col.astype(float)
    else:
        raise DataFormatError(f"{path}: unsupported sample type {col.dtype}")
    return float(rate), col


def load_signal(path, format=None, channel=0, sample_rate_hz=None) -> Signal:
    """Read one channel of a CSV or WAV file.

    CSV files carry no rate, so ``sample_rate_hz`` is required for them; for
    WAV files it overrides the header rate when given. 16-bit PCM is scaled
    to [-1, 1).
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such signal file: {path}")
    fmt = (format or path.suffix.lstrip(".")).lower()
    if fmt == "csv":
        if sample_rate_hz is None:
            raise InvalidArgumentError("CSV input needs an explicit sample rate")
        samples, rate = _read_csv(path, channel), sample_rate_hz
    elif fmt == "wav":
        rate, samples = _read_wav(path, channel)
        rate = sample_rate_hz or rate
    else:
        raise InvalidArgumentError(f"unknown signal format {fmt!r}")
    if samples.size < 2:
        raise DataFormatError(f"{path}: fewer than 2 samples")
    if not np.all(np.isfinite(samples)):
        raise DataFormatError(f"{path}: non-finite samples")
    return Signal(samples, rate)


def save_signal(path, s: Signal, format=None):
    path = Path(path)
    fmt = (format or path.suffix.lstrip(".")).lower()
    if fmt == "csv":
        with open(path, "w", newline="") as fh:
            fh.write("amplitude\n")
            fh.writelines(f"{v:.17g}\n" for v in s.samples)
    elif fmt == "wav":
        wavfile.write(path, int(round(s.sample_rate_hz)), s.samples.astype(np.float32))
    else:
        raise InvalidArgumentError(f"unknown signal format {fmt!r}")
    return path
