"""Command line interface: ``eegfp {run,extract,evaluate,synth,psd}``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .dsp import welch
from .edf_io import export_cohort, read_edf
from .errors import EEGFingerprintError
from .pipeline import (
    PipelineConfig,
    collect_features,
    config_from_mapping,
    evaluate_features,
    load_config_file,
    read_features_csv,
    run_pipeline,
    write_evaluation_csv,
    write_features_csv,
    write_psd_csv,
)
from .synth import synth_cohort

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3

logger = logging.getLogger("eegfingerprint")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser, out_help: str):
    p.add_argument("--config", type=Path, help="JSON file of flat config keys; flags override it")
    p.add_argument("--out", type=Path, help=out_help)
    p.add_argument("--features", help="comma-separated feature kinds, or 'all'")
    p.add_argument("--normalize", action="store_true", default=None,
                   help="z-score each vector entry before computing distances")
    p.add_argument("-v", "--verbose", action="store_true")


def _source(p: argparse.ArgumentParser):
    p.add_argument("--dataset", type=Path, help="root of an S###/S###R0#.edf tree")
    p.add_argument("--condition", help="open, closed or both")
    p.add_argument("--seed", type=int, help="seed of the synthetic cohort (unsigned 64-bit)")
    p.add_argument("--jobs", type=int, help="parallel subject-level extraction workers")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="eegfp", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="extract features, evaluate, write the full report bundle")
    _common(p, "output directory")
    _source(p)
    p.add_argument("--dump-scores", action="store_true", default=None,
                   help="also write raw scores and FAR/FRR curves")

    p = sub.add_parser("extract", help="write the features CSV only")
    _common(p, "output directory (features.csv is written there)")
    _source(p)

    p = sub.add_parser("evaluate", help="evaluate a features CSV")
    p.add_argument("features_csv", type=Path)
    _common(p, "output directory (evaluation.csv is written there)")

    p = sub.add_parser("synth", help="write a synthetic EDF cohort from a spec file")
    p.add_argument("--config", type=Path, help="JSON file with synth_* keys")
    p.add_argument("--out", type=Path, required=True, help="dataset root to create")
    p.add_argument("--condition", help="open, closed or both")
    p.add_argument("--seed", type=int)
    p.add_argument("-v", "--verbose", action="store_true")

    p = sub.add_parser("psd", help="dump the Welch PSD of one EDF recording as CSV")
    p.add_argument("edf", type=Path)
    p.add_argument("--config", type=Path, help="JSON file; welch_* keys are used")
    p.add_argument("--out", type=Path, required=True, help="CSV file to write")
    p.add_argument("-v", "--verbose", action="store_true")
    return parser


def _config(args) -> PipelineConfig:
    values = load_config_file(args.config) if getattr(args, "config", None) else {}
    overrides = {
        "dataset": getattr(args, "dataset", None),
        "condition": getattr(args, "condition", None),
        "out": getattr(args, "out", None),
        "features": getattr(args, "features", None),
        "seed": getattr(args, "seed", None),
        "normalize": getattr(args, "normalize", None),
        "n_jobs": getattr(args, "jobs", None),
        "dump_scores": getattr(args, "dump_scores", None),
    }
    values.update({k: (str(v) if isinstance(v, Path) else v) for k, v in overrides.items() if v is not None})
    try:
        config = config_from_mapping(values)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    return config


def _cmd_run(args) -> int:
    config = _config(args)
    if config.dataset_root is None and config.synth is None:
        raise UsageError("give --dataset or a config with synth_* keys")
    bundle = run_pipeline(config)
    for cond, res in bundle.results:
        print(f"{cond.value:6s} {res.kind.label:22s} EER={res.eer:.3f} auc_det={res.auc_det:.3f}")
    if bundle.manifest["skipped"]:
        print(f"{len(bundle.manifest['skipped'])} subject(s) skipped; see manifest.json", file=sys.stderr)
    return EXIT_OK


def _cmd_extract(args) -> int:
    config = _config(args)
    if config.dataset_root is None and config.synth is None:
        raise UsageError("give --dataset or a config with synth_* keys")
    vectors, skipped, _, _ = collect_features(config)
    config.out_dir.mkdir(parents=True, exist_ok=True)
    path = write_features_csv(vectors, config.out_dir / "features.csv")
    for s in skipped:
        print(f"skipped {s['subject']} ({s['condition']}): {s['reason']}", file=sys.stderr)
    print(path)
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    config = _config(args)
    vectors = read_features_csv(args.features_csv)
    results = evaluate_features(vectors, config.kinds, config.normalize)
    config.out_dir.mkdir(parents=True, exist_ok=True)
    print(write_evaluation_csv(results, config.out_dir / "evaluation.csv"))
    return EXIT_OK


def _cmd_synth(args) -> int:
    config = _config(args)
    if config.synth is None:
        raise UsageError("synth needs a --config with synth_* keys")
    paths = []
    for k, cond in enumerate(config.conditions):
        spec = replace(config.synth, condition=cond, seed=(config.synth.seed + k) % 2 ** 64)
        paths.extend(export_cohort(synth_cohort(spec), args.out))
    print(f"wrote {len(paths)} EDF files under {args.out}")
    return EXIT_OK


def _cmd_psd(args) -> int:
    values = load_config_file(args.config) if args.config else {}
    try:
        config = config_from_mapping(values)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    rec = read_edf(args.edf)
    freqs, power = welch(rec.samples, rec.sample_rate_hz, config.welch_params(rec.sample_rate_hz))
    args.out.parent.mkdir(parents=True, exist_ok=True)
    print(write_psd_csv(freqs, power, rec.channel_labels, args.out))
    return EXIT_OK


_COMMANDS = {
    "run": _cmd_run, "extract": _cmd_extract, "evaluate": _cmd_evaluate,
    "synth": _cmd_synth, "psd": _cmd_psd,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"eegfp: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (EEGFingerprintError, OSError) as exc:
        print(f"eegfp: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001
        logger.exception("internal error")
        print(f"eegfp: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
