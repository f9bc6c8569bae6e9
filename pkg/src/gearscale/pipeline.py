"""Batch diagnosis pipeline: segments to features to classifier to report.

Stages: load, emd, cwt, features, split, train, evaluate, write. A failure
anywhere is re-raised as :class:`PipelineStageError` naming the stage.
"""

from __future__ import annotations

import configparser
import contextlib
import csv
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import plotting
from .cwt import ScaleGrid, WaveletParams, cwt
from .emd import SiftConfig, decompose
from .errors import InvalidArgumentError, PipelineStageError
from .features import (
    DOT_PRODUCT,
    LOCAL_GAUSSIAN,
    NORMALIZED_DOT,
    FeatureVector,
    SHORT_NAMES,
    FrameObjective,
    mix_imf_features,
    objective_map,
    scale_distribution,
    select_scales,
    write_features_csv,
)
from .signal import DEFAULT_CONDITIONS, generate_example1, generate_example2, generate_gear_dataset, load_signal, split_segments
from .svm import format_table, success_metrics, table_csv_rows, train_ova

OBJECTIVES = (NORMALIZED_DOT, DOT_PRODUCT, LOCAL_GAUSSIAN)
DISPLAY_NAMES = {
    NORMALIZED_DOT: "Normalized dot product",
    DOT_PRODUCT: "Dot product",
    LOCAL_GAUSSIAN: "Local Gaussian correlation",
}
SYNTHETIC_RATE_HZ = 10_000.0
CONFIG_SECTION = "gearscale"


@contextlib.contextmanager
def stage(name, timings=None):
    """Tag any error raised inside the block with ``name``."""
    t0 = time.perf_counter()
    try:
        yield
    except PipelineStageError:
        raise
    except Exception as exc:
        raise PipelineStageError(name, exc) from exc
    finally:
        if timings is not None:
            timings[name] = timings.get(name, 0.0) + time.perf_counter() - t0


# -- configuration ----------------------------------------------------------


@dataclass(frozen=True)
class PipelineConfig:
    """Everything needed to reproduce one run.

    ``inputs`` holds ``(label, path)`` pairs; when empty the synthetic
    gearbox family is used. Each input file (or synthetic record) is cut
    into ``segments`` consecutive segments.
    """

    inputs: tuple[tuple[str, str], ...] = ()
    segments: int = 80
    segment_len: int = 1250  # synthetic only; file segments take len // segments
    rate_hz: float | None = None
    channel: int = 0
    use_emd: bool = False
    imf_count: int = 3
    scale_max: int = 32
    objective: str = LOCAL_GAUSSIAN
    frame_n: int = 15
    hop: int = 1
    train_frac: float = 0.375
    svm_c: float = 1e3
    svm_tol: float = 1e-4
    seed: int = 0
    out_dir: str = "gearscale-out"
    sd_threshold: float = 0.25
    max_sift_iters: int = 64
    max_imfs: int | None = None  # defaults to imf_count
    workers: int = 1
    figures: bool = True

    def __post_init__(self):
        if not 0 < self.train_frac < 1:
            raise InvalidArgumentError("train_frac must lie in (0, 1)")
        if self.use_emd and self.imf_count < 1:
            raise InvalidArgumentError("imf_count must be >= 1 when EMD is enabled")
        if self.scale_max < 2:
            raise InvalidArgumentError("scale_max must be >= 2")
        if self.segments < 2:
            raise InvalidArgumentError("need at least 2 segments per condition")
        if self.workers < 1:
            raise InvalidArgumentError("workers must be >= 1")
        if self.svm_c <= 0:
            raise InvalidArgumentError("svm_c must be positive")
        obj = FrameObjective(self.objective, self.frame_n)  # validates both
        object.__setattr__(self, "objective", obj.kind)
        object.__setattr__(self, "inputs", tuple((str(a), str(b)) for a, b in self.inputs))
        self.sift_config()

    @property
    def synthetic(self):
        return not self.inputs

    @property
    def grid(self):
        return ScaleGrid.integers(self.scale_max)

    def sift_config(self):
        return SiftConfig(
            sd_threshold=self.sd_threshold,
            max_sift_iters=self.max_sift_iters,
            max_imfs=self.max_imfs or self.imf_count,
        )

    def to_dict(self):
        d = asdict(self)
        d["inputs"] = [list(p) for p in self.inputs]
        return d

    def to_ini(self, path=None):
        """Flat ``key = value`` echo that :func:`load_config` reads back."""
        lines = [f"[{CONFIG_SECTION}]"]
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name == "inputs":
                v = ", ".join(f"{a}={b}" for a, b in v)
            elif v is None:
                v = ""
            elif isinstance(v, float):
                v = repr(v)
            lines.append(f"{f.name} = {v}")
        text = "\n".join(lines) + "\n"
        if path is not None:
            Path(path).write_text(text)
        return text


def parse_inputs(text):
    """``"a=x.csv, b=y.wav"`` to ``(("a", "x.csv"), ("b", "y.wav"))``."""
    pairs = []
    for item in filter(None, (s.strip() for s in text.split(","))):
        label, sep, path = item.partition("=")
        if not sep or not label.strip() or not path.strip():
            raise InvalidArgumentError(f"input {item!r} is not of the form label=path")
        pairs.append((label.strip(), path.strip()))
    return tuple(pairs)


def _coerce(name, raw):
    types = {f.name: f.type for f in fields(PipelineConfig)}
    if name not in types:
        raise InvalidArgumentError(f"unknown config key {name!r}")
    raw = raw.strip()
    t = types[name]
    if name == "inputs":
        return parse_inputs(raw)
    if "None" in t and raw == "":
        return None
    try:
        if t.startswith("bool"):
            low = raw.lower()
            if low not in ("1", "0", "true", "false", "yes", "no", "on", "off"):
                raise ValueError(raw)
            return low in ("1", "true", "yes", "on")
        if t.startswith("int"):
            return int(raw)
        if t.startswith("float"):
            return float(raw)
    except ValueError:
        raise InvalidArgumentError(f"config key {name!r}: cannot parse {raw!r}") from None
    return raw


def load_config(path, **overrides):
    """Read a flat key-value file; the section header is optional."""
    path = Path(path)
    if not path.is_file():
        raise InvalidArgumentError(f"config file not found: {path}")
    text = path.read_text()
    if not text.lstrip().startswith("["):
        text = f"[{CONFIG_SECTION}]\n" + text
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise InvalidArgumentError(f"{path}: {exc}") from None
    if cp.sections() != [CONFIG_SECTION]:
        raise InvalidArgumentError(f"{path}: expected a single [{CONFIG_SECTION}] section")
    values = {k: _coerce(k, v) for k, v in cp[CONFIG_SECTION].items()}
    values.update(overrides)
    return PipelineConfig(**values)


# -- data and features ------------------------------------------------------


def load_segment_sets(cfg: PipelineConfig):
    """Synthetic records or the configured files, split into segment sets.

    Several files may share a label; their segments are pooled.
    """
    if cfg.synthetic:
        return generate_gear_dataset(
            DEFAULT_CONDITIONS, cfg.segments, cfg.segment_len, cfg.rate_hz or SYNTHETIC_RATE_HZ, cfg.seed
        )
    sets = []
    for label, path in cfg.inputs:
        s = load_signal(path, channel=cfg.channel, sample_rate_hz=cfg.rate_hz)
        sets.append(split_segments(s, cfg.segments, label))
    return sets


@dataclass(frozen=True, eq=False)
class FeatureTable:
    """Feature rows for one objective, in segment order."""

    objective: str
    X: np.ndarray
    labels: tuple[str, ...]
    provenance: str
    class_names: tuple[str, ...]
    fs_hz: float
    first_segments: dict = field(default_factory=dict)  # label -> samples

    def vectors(self, idx=None):
        idx = range(len(self.labels)) if idx is None else idx
        return [FeatureVector(self.X[i], self.labels[i], self.provenance) for i in idx]


def _series_for(x, use_emd, k, sift_cfg):
    """The signal itself, or its first ``k`` IMFs (fewer if EMD stops early)."""
    if not use_emd:
        return [x]
    with stage("emd"):
        imfs = decompose(x, sift_cfg).imfs[:k]
        if len(imfs) == 0:
            raise InvalidArgumentError("decomposition produced no IMFs")
    return list(imfs)


def segment_features(x, scales, kinds, frame_n, hop, use_emd=False, k=3, sift_cfg=None):
    """Scale-level features of one segment for several objectives.

    The CWT of each series is computed once and shared by all objectives.
    Returns ``(levels_by_kind, n_series)``.
    """
    x = np.asarray(x, dtype=float)
    grid = ScaleGrid(scales)
    series = _series_for(x, use_emd, k, sift_cfg or SiftConfig(max_imfs=k))
    per_kind = {kind: [] for kind in kinds}
    for s in series:
        with stage("cwt"):
            scg = cwt(s, grid)
        with stage("features"):
            for kind in kinds:
                tr = select_scales(s, scg, FrameObjective(kind, frame_n), hop)
                per_kind[kind].append(scale_distribution(tr, grid))
    out = {}
    for kind, vecs in per_kind.items():
        out[kind] = (mix_imf_features(vecs, len(vecs)) if use_emd else vecs[0]).levels
    return out, len(series)


def _job(args):
    return segment_features(*args)


def extract_features(cfg: PipelineConfig, sets=None, kinds=None, timings=None):
    """Feature tables for each requested objective; one row per segment."""
    kinds = tuple(kinds or (cfg.objective,))
    if sets is None:
        with stage("load", timings):
            sets = load_segment_sets(cfg)
    with stage("load", timings):
        class_names = tuple(dict.fromkeys(s.source_label for s in sets))
        if len(class_names) < 2:
            raise InvalidArgumentError("need segments from at least 2 classes")
        fs = {seg.sample_rate_hz for s in sets for seg in s}
        if len(fs) != 1:
            raise InvalidArgumentError(f"inputs disagree on sample rate: {sorted(fs)}")
    scales = cfg.grid.scales
    sift_cfg = cfg.sift_config()
    labels, jobs = [], []
    for s in sets:
        for seg in s:
            labels.append(s.source_label)
            jobs.append((seg.samples, scales, kinds, cfg.frame_n, cfg.hop, cfg.use_emd, cfg.imf_count, sift_cfg))
    t0 = time.perf_counter()
    if cfg.workers > 1:
        # map keeps submission order, so rows never depend on scheduling
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_job, jobs, chunksize=max(1, len(jobs) // (4 * cfg.workers))))
    else:
        results = [_job(j) for j in jobs]
    if timings is not None:
        timings["features"] = timings.get("features", 0.0) + time.perf_counter() - t0
    provenance = f"imf-mixed({cfg.imf_count})" if cfg.use_emd else "raw-signal"
    fs_hz = fs.pop()
    first = {}
    for s in sets:
        first.setdefault(s.source_label, s[0].samples)
    return {
        kind: FeatureTable(kind, np.vstack([r[0][kind] for r in results]), tuple(labels), provenance, class_names, fs_hz, first)
        for kind in kinds
    }


def stratified_split(labels, class_names, train_frac, seed):
    """Seeded shuffle within each class; returns sorted train and test indices."""
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    train, test = [], []
    for c in class_names:
        idx = np.flatnonzero(labels == c)
        idx = idx[rng.permutation(idx.size)]
        n_tr = int(round(train_frac * idx.size))
        if not 1 <= n_tr < idx.size:
            raise InvalidArgumentError(f"class {c!r}: {idx.size} segments cannot give a non-empty train/test split")
        train.extend(idx[:n_tr].tolist())
        test.extend(idx[n_tr:].tolist())
    return np.sort(train), np.sort(test)


# -- reports ----------------------------------------------------------------


def _metrics_dict(m):
    return {"binary": m.binary, "recall": m.recall, "overall": m.overall, "n": m.n}


@dataclass
class RunReport:
    config: PipelineConfig
    objective: str
    class_names: tuple[str, ...]
    metrics: dict  # "train"/"test" -> SplitMetrics
    artifacts: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)

    @property
    def train_success(self):
        return self.metrics["train"].binary

    @property
    def test_success(self):
        return self.metrics["test"].binary

    def to_dict(self, timings=True):
        d = {
            "config": self.config.to_dict(),
            "objective": self.objective,
            "class_names": list(self.class_names),
            "train": _metrics_dict(self.metrics["train"]),
            "test": _metrics_dict(self.metrics["test"]),
            "artifacts": dict(sorted(self.artifacts.items())),
        }
        if timings:
            d["timings_s"] = {k: (round(v, 4) if isinstance(v, float) else v) for k, v in self.timings.items()}
        return d

    def to_json(self, path=None, timings=True):
        text = json.dumps(self.to_dict(timings), indent=1, sort_keys=True) + "\n"
        if path is not None:
            Path(path).write_text(text)
        return text

    def table(self, kind="binary"):
        return format_table([(DISPLAY_NAMES[self.objective], self.metrics)], self.class_names, kind)


def _write_csv(path, rows):
    with open(path, "w", newline="") as fh:
        csv.writer(fh, lineterminator="\n").writerows(rows)
    return path


def _report_text(rows, class_names, header):
    return (
        f"{header}\n\n"
        "One-versus-all success per class model\n"
        + format_table(rows, class_names, "binary")
        + "\nMulticlass recall per class\n"
        + format_table(rows, class_names, "recall")
        + "\nOverall multiclass accuracy\n"
        + "".join(f"  {name}: train {m['train'].overall:.2f}  test {m['test'].overall:.2f}\n" for name, m in rows)
    )


def write_first_segment_figures(table: FeatureTable, cfg: PipelineConfig, out_dir):
    """Scale traces, scalograms and objective maps for each class's first segment."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    grid = cfg.grid
    obj = FrameObjective(table.objective, cfg.frame_n)
    arts = {}
    for label, x in table.first_segments.items():
        series = _series_for(x, cfg.use_emd, cfg.imf_count, cfg.sift_config())
        for i, s in enumerate(series, start=1):
            tag = f"{label}_imf{i}" if cfg.use_emd else f"{label}_signal"
            scg = cwt(s, grid)
            centers, values = objective_map(s, scg, obj, cfg.hop)
            tr = select_scales(s, scg, obj, cfg.hop)
            arts[f"trace_{tag}"] = str(tr.to_csv(out_dir / f"trace_{tag}.csv"))
            if cfg.figures:
                arts[f"scalogram_{tag}"] = str(
                    plotting.scalogram_svg(out_dir / f"scalogram_{tag}.svg", scg, table.fs_hz, f"{label}: {tag}")
                )
                arts[f"map_{tag}"] = str(
                    plotting.objective_map_svg(
                        out_dir / f"map_{tag}.svg", centers, values, grid.scales, tr, scg.signal_len, table.fs_hz,
                        f"{label}: {obj.short_name} scale selection",
                    )
                )
    return arts


def run_pipeline(cfg: PipelineConfig, table: FeatureTable | None = None) -> RunReport:
    """Run one configuration end to end and write its artifacts.

    Pass ``table`` to reuse features already extracted for this objective.
    """
    timings = {}
    out = Path(cfg.out_dir)
    with stage("write", timings):
        out.mkdir(parents=True, exist_ok=True)
    if table is None:
        table = extract_features(cfg, timings=timings)[cfg.objective]
    with stage("split", timings):
        tr_idx, te_idx = stratified_split(table.labels, table.class_names, cfg.train_frac, cfg.seed)
        labels = np.asarray(table.labels)
    with stage("train", timings):
        mm = train_ova(table.X[tr_idx], labels[tr_idx], table.class_names, cfg.svm_c, cfg.svm_tol)
        mm.meta.update({"objective": cfg.objective, "provenance": table.provenance, "scale_max": cfg.scale_max})
    with stage("evaluate", timings):
        metrics = success_metrics(mm, (table.X[tr_idx], labels[tr_idx]), (table.X[te_idx], labels[te_idx]))
    report = RunReport(cfg, cfg.objective, table.class_names, metrics, timings=timings)
    arts = report.artifacts
    with stage("write", timings):
        arts["features"] = str(write_features_csv(out / "features.csv", table.vectors(), cfg.scale_max))
        arts["train_features"] = str(write_features_csv(out / "train_features.csv", table.vectors(tr_idx), cfg.scale_max))
        arts["test_features"] = str(write_features_csv(out / "test_features.csv", table.vectors(te_idx), cfg.scale_max))
        arts["model"] = str(out / "model.json")
        mm.to_json(arts["model"])
        arts["config"] = str(out / "config.ini")
        cfg.to_ini(arts["config"])
        arts.update(write_first_segment_figures(table, cfg, out / "figures"))
        rows = [(DISPLAY_NAMES[cfg.objective], metrics)]
        header = f"objective: {DISPLAY_NAMES[cfg.objective]}   features: {table.provenance}   scales: 1..{cfg.scale_max}"
        arts["report_txt"] = str(out / "report.txt")
        Path(arts["report_txt"]).write_text(_report_text(rows, table.class_names, header))
        arts["report_csv"] = str(_write_csv(out / "report.csv", table_csv_rows(rows, table.class_names)))
        arts["report_json"] = str(out / "report.json")
    report.to_json(arts["report_json"])
    return report


def compare_objectives(cfg: PipelineConfig, emd_settings=(False, True)):
    """All three objectives, with and without EMD, on identical splits.

    Features for every objective come from one pass over the segments per
    EMD setting. Returns ``{setting_name: [RunReport, ...]}`` and writes one
    table per setting plus a merged CSV under ``cfg.out_dir``.
    """
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    timings = {}
    with stage("load", timings):
        sets = load_segment_sets(cfg)
    results = {}
    csv_rows = None
    text = []
    for use_emd in emd_settings:
        setting = f"emd-k{cfg.imf_count}" if use_emd else "signal"
        sub = replace(cfg, use_emd=use_emd)
        tables = extract_features(sub, sets, OBJECTIVES, timings)
        reports = [
            run_pipeline(replace(sub, objective=kind, out_dir=str(out / setting / SHORT_NAMES[kind])), tables[kind])
            for kind in OBJECTIVES
        ]
        results[setting] = reports
        rows = [(DISPLAY_NAMES[r.objective], r.metrics) for r in reports]
        names = reports[0].class_names
        title = "Features from the first %d IMFs" % cfg.imf_count if use_emd else "Features from the signal"
        text.append(_report_text(rows, names, title))
        block = table_csv_rows(rows, names)
        if csv_rows is None:
            csv_rows = [["features"] + block[0]]
        csv_rows += [[setting] + r for r in block[1:]]
    with stage("write", timings):
        (out / "comparison.txt").write_text("\n".join(text))
        _write_csv(out / "comparison.csv", csv_rows)
        cfg.to_ini(out / "config.ini")
    return results


# -- worked examples ----------------------------------------------------------


EXAMPLE_SCALES = 64
EXAMPLE_N = 15


def run_examples(which, out_dir, sift_cfg: SiftConfig | None = None):
    """Two-tone (1) or tone-plus-chirp (2) demonstration figures.

    For the composite signal and its first two IMFs this writes a scalogram
    SVG and CSV plus a local Gaussian correlation map SVG and trace CSV:
    six SVGs and six CSVs in all. Returns ``{name: path}``.
    """
    if which not in (1, 2):
        raise InvalidArgumentError("which must be 1 or 2")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _, _, y = (generate_example1 if which == 1 else generate_example2)()
    imfs = decompose(y, sift_cfg or SiftConfig()).imfs
    if len(imfs) < 2:
        raise InvalidArgumentError(f"example {which}: decomposition gave {len(imfs)} IMFs, need 2")
    grid = ScaleGrid.integers(EXAMPLE_SCALES)
    obj = FrameObjective(LOCAL_GAUSSIAN, EXAMPLE_N)
    arts = {}
    for tag, s in (("signal", y.samples), ("imf1", imfs[0]), ("imf2", imfs[1])):
        stem = f"example{which}_{tag}"
        scg = cwt(s, grid, WaveletParams())
        centers, values = objective_map(s, scg, obj)
        tr = select_scales(s, scg, obj)
        arts[f"{tag}_scalogram_svg"] = str(plotting.scalogram_svg(out / f"{stem}_scalogram.svg", scg, y.sample_rate_hz, f"Example {which}, {tag}: |W|"))
        arts[f"{tag}_map_svg"] = str(
            plotting.objective_map_svg(
                out / f"{stem}_lgc_map.svg", centers, values, grid.scales, tr, scg.signal_len, y.sample_rate_hz,
                f"Example {which}, {tag}: local Gaussian correlation (n={EXAMPLE_N})",
            )
        )
        arts[f"{tag}_scalogram_csv"] = str(scg.to_csv(out / f"{stem}_scalogram.csv"))
        arts[f"{tag}_trace_csv"] = str(tr.to_csv(out / f"{stem}_lgc_trace.csv"))
    return arts


__all__ = [
    "PipelineConfig",
    "RunReport",
    "FeatureTable",
    "compare_objectives",
    "extract_features",
    "load_config",
    "run_examples",
    "run_pipeline",
    "segment_features",
    "stratified_split",
]
