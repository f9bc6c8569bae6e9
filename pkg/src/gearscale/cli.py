"""Command-line front end.

Verbs::

    gearscale examples  --which 1 --out DIR
    gearscale pipeline  [--config FILE] [--synthetic | --input LABEL=PATH ...] [options]
    gearscale compare   [same options as pipeline]
    gearscale train     --features CSV --model OUT.json
    gearscale predict   --model MODEL.json --features CSV [--out PRED.csv]

Exit status is 0 on success, 2 for configuration errors, 3 for data errors
and 4 when the SVM solver fails to converge.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import (
    ChannelError,
    ConvergenceError,
    DataFormatError,
    DegenerateInputError,
    GearScaleError,
    InvalidArgumentError,
    MonotoneSignalError,
    PipelineStageError,
    UndefinedCosineError,
)
from .features import read_features_csv
from .pipeline import PipelineConfig, compare_objectives, load_config, parse_inputs, run_examples, run_pipeline
from .svm import MulticlassModel, predict_ova, success_metrics, train_ova

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_CONVERGENCE = 0, 2, 3, 4

# flag dest -> PipelineConfig field
_FLAG_FIELDS = {
    "emd": "use_emd",
    "imfs": "imf_count",
    "scales": "scale_max",
    "objective": "objective",
    "frame_n": "frame_n",
    "hop": "hop",
    "train_frac": "train_frac",
    "svm_c": "svm_c",
    "svm_tol": "svm_tol",
    "seed": "seed",
    "out": "out_dir",
    "segments": "segments",
    "segment_len": "segment_len",
    "rate": "rate_hz",
    "channel": "channel",
    "sd_threshold": "sd_threshold",
    "max_sift_iters": "max_sift_iters",
    "max_imfs": "max_imfs",
    "workers": "workers",
    "figures": "figures",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _pipeline_options(p):
    src = p.add_mutually_exclusive_group()
    src.add_argument("--synthetic", action="store_true", help="use the built-in synthetic gearbox family (default)")
    src.add_argument("--input", action="append", metavar="LABEL=PATH", help="labelled CSV/WAV record; repeatable")
    p.add_argument("--config", type=Path, help="flat key = value file; flags override it")
    p.add_argument("--emd", action=argparse.BooleanOptionalAction, default=None, help="features from IMFs instead of the signal")
    p.add_argument("--imfs", type=int, help="number of leading IMFs to mix (default 3)")
    p.add_argument("--scales", type=int, help="scale grid 1..S (default 32)")
    p.add_argument("--objective", choices=("lgc", "dot", "ndot"), help="frame objective (default lgc)")
    p.add_argument("--frame-n", type=int, help="frame half width n; frames hold 2n+1 samples (default 15)")
    p.add_argument("--hop", type=int, help="frame stride in samples (default 1)")
    p.add_argument("--train-frac", type=float, help="per-class training fraction (default 0.375)")
    p.add_argument("--svm-c", type=float, help="SVM box constraint (default 1000)")
    p.add_argument("--svm-tol", type=float, help="SVM KKT tolerance (default 1e-4)")
    p.add_argument("--seed", type=int, help="seed for synthesis and the split (default 0)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--segments", type=int, help="segments per record (default 80)")
    p.add_argument("--segment-len", type=int, help="synthetic segment length (default 1250)")
    p.add_argument("--rate", type=float, help="sample rate in Hz; required for CSV input")
    p.add_argument("--channel", type=int, help="column or channel to read (default 0)")
    p.add_argument("--sd-threshold", type=float, help="sifting SD stop threshold (default 0.25)")
    p.add_argument("--max-sift-iters", type=int, help="sifting iteration cap (default 64)")
    p.add_argument("--max-imfs", type=int, help="IMFs to extract (default: --imfs)")
    p.add_argument("--workers", type=int, help="worker processes for feature extraction (default 1)")
    p.add_argument("--figures", action=argparse.BooleanOptionalAction, default=None, help="write SVG figures (default on)")


def build_parser():
    p = _Parser(prog="gearscale", description="Scale-level wavelet features and SVM gear fault diagnosis.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    ex = sub.add_parser("examples", help="regenerate the two-tone or chirp demonstration figures")
    ex.add_argument("--which", type=int, choices=(1, 2), default=1)
    ex.add_argument("--out", default="examples-out")

    for name, text in (("pipeline", "run one configuration end to end"), ("compare", "all objectives, with and without EMD")):
        _pipeline_options(sub.add_parser(name, help=text))

    tr = sub.add_parser("train", help="train a one-versus-all model from a features CSV")
    tr.add_argument("--features", type=Path, required=True)
    tr.add_argument("--model", type=Path, required=True, help="output model JSON")
    tr.add_argument("--svm-c", type=float, default=1e3)
    tr.add_argument("--svm-tol", type=float, default=1e-4)

    pr = sub.add_parser("predict", help="classify a features CSV with a saved model")
    pr.add_argument("--model", type=Path, required=True)
    pr.add_argument("--features", type=Path, required=True)
    pr.add_argument("--out", type=Path, help="predictions CSV (default: stdout)")
    return p


def config_from_args(args) -> PipelineConfig:
    overrides = {}
    for dest, fname in _FLAG_FIELDS.items():
        v = getattr(args, dest, None)
        if v is not None:
            overrides[fname] = v
    if args.input:
        overrides["inputs"] = tuple(pair for item in args.input for pair in parse_inputs(item))
    elif args.synthetic:
        overrides["inputs"] = ()
    if args.config is not None:
        return load_config(args.config, **overrides)
    return PipelineConfig(**overrides)


_DATA_ERRORS = (DataFormatError, ChannelError, FileNotFoundError, MonotoneSignalError, DegenerateInputError, UndefinedCosineError)


def _exit_code(exc):
    """Map an error to an exit status; stage errors are judged by their cause."""
    staged = isinstance(exc, PipelineStageError)
    cause = exc.cause if staged else exc
    if isinstance(cause, ConvergenceError):
        return EXIT_CONVERGENCE
    if isinstance(cause, _DATA_ERRORS):
        return EXIT_DATA
    if isinstance(cause, InvalidArgumentError):
        # bad values found while processing the data are data errors
        return EXIT_DATA if staged and exc.stage != "load" else EXIT_CONFIG
    return EXIT_DATA


def _cmd_examples(args):
    arts = run_examples(args.which, args.out)
    for name, path in sorted(arts.items()):
        print(f"{name}\t{path}")


def _cmd_pipeline(args):
    cfg = config_from_args(args)
    rep = run_pipeline(cfg)
    print(Path(rep.artifacts["report_txt"]).read_text(), end="")
    print(f"artifacts written to {cfg.out_dir}")


def _cmd_compare(args):
    cfg = config_from_args(args)
    compare_objectives(cfg)
    print((Path(cfg.out_dir) / "comparison.txt").read_text(), end="")


def _cmd_train(args):
    X, labels = read_features_csv(args.features)
    mm = train_ova(X, labels, C=args.svm_c, tol=args.svm_tol)
    mm.to_json(args.model)
    met = success_metrics(mm, (X, labels), (X, labels))["train"]
    print(f"trained {len(mm.class_names)} class models on {len(labels)} rows; train accuracy {met.overall:.2f}%")


def _cmd_predict(args):
    mm = MulticlassModel.from_json(args.model)
    X, labels = read_features_csv(args.features)
    if X.shape[1] != mm.feature_dim:
        raise DataFormatError(f"{args.features}: {X.shape[1]} features, model expects {mm.feature_dim}")
    pred = predict_ova(mm, X) if len(labels) else []
    rows = [["row", "label", "predicted"]] + [[i, t, p] for i, (t, p) in enumerate(zip(labels, pred))]
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        csv.writer(fh, lineterminator="\n").writerows(rows)
    finally:
        if args.out:
            fh.close()
    known = [i for i, t in enumerate(labels) if t in mm.class_names]
    if known:
        hits = int(np.sum([pred[i] == labels[i] for i in known]))
        print(f"accuracy {100.0 * hits / len(known):.2f}% on {len(known)} labelled rows", file=sys.stderr)


_COMMANDS = {
    "examples": _cmd_examples,
    "pipeline": _cmd_pipeline,
    "compare": _cmd_compare,
    "train": _cmd_train,
    "predict": _cmd_predict,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        _COMMANDS[args.verb](args)
    except (GearScaleError, OSError, ValueError) as exc:
        code = _exit_code(exc)
        print(f"gearscale: error: {exc}", file=sys.stderr)
        return code
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
