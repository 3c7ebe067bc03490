"""End-to-end feature extraction, evaluation and report writing."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from joblib import Parallel, delayed

from . import __version__
from .biometrics import (
    ALL_KINDS,
    BASE_KINDS,
    EvalResult,
    FeatureKind,
    FeatureVector,
    concatenate_all,
    evaluate,
)
from .dsp import CANONICAL_BANDS, Window, WelchParams, relative_band_power, segment_epochs, welch_psd
from .edf_io import Condition, Recording, load_dataset
from .errors import EEGFingerprintError, EmptyDataset
from .specparam import FitOptions, fit_psd
from .synth import PeakSpec, SynthSpec, synth_cohort

logger = logging.getLogger(__name__)

_BAND_KINDS = dict(zip(
    (FeatureKind.THETA_REL, FeatureKind.ALPHA_REL, FeatureKind.BETA_REL, FeatureKind.GAMMA_REL),
    CANONICAL_BANDS,
))


@dataclass
class PipelineConfig:
    """Everything that determines a run (12 s epochs, 2 s Hamming Welch segments, 1-45 Hz fit by default)."""

    dataset_root: Path | None = None
    synth: SynthSpec | None = None
    conditions: tuple[Condition, ...] = (Condition.EYES_OPEN, Condition.EYES_CLOSED)
    epoch_len_s: float = 12.0
    n_epochs: int = 5
    welch_segment_s: float = 2.0
    welch_overlap: float = 0.5
    welch_window: Window = Window.HAMMING
    welch_fft_len: int | None = None
    fit: FitOptions = field(default_factory=FitOptions)
    kinds: tuple[FeatureKind, ...] = ALL_KINDS
    out_dir: Path = Path("eegfp_out")
    normalize: bool = False
    n_jobs: int = 1
    hist_bins: int = 50
    dump_scores: bool = False

    def __post_init__(self):
        self.conditions = tuple(Condition.parse(c) for c in self.conditions)
        self.kinds = tuple(FeatureKind(k) for k in self.kinds)
        self.welch_window = Window(self.welch_window)
        self.out_dir = Path(self.out_dir)
        if self.dataset_root is not None:
            self.dataset_root = Path(self.dataset_root)

    def welch_params(self, sample_rate_hz: float) -> WelchParams:
        return WelchParams.from_seconds(
            self.welch_segment_s, sample_rate_hz,
            overlap_fraction=self.welch_overlap, window=self.welch_window, fft_len=self.welch_fft_len,
        )

    def to_dict(self) -> dict:
        return {
            "dataset": str(self.dataset_root) if self.dataset_root else None,
            "synth": self.synth.to_dict() if self.synth else None,
            "condition": [c.value for c in self.conditions],
            "epoch_len_s": self.epoch_len_s,
            "n_epochs": self.n_epochs,
            "welch_segment_s": self.welch_segment_s,
            "welch_overlap": self.welch_overlap,
            "welch_window": self.welch_window.value,
            "welch_fft_len": self.welch_fft_len,
            "fit_lo_hz": self.fit.fit_lo_hz,
            "fit_hi_hz": self.fit.fit_hi_hz,
            "robust_percentile": self.fit.robust_percentile,
            "max_refits": self.fit.max_refits,
            "features": [k.value for k in self.kinds],
            "normalize": self.normalize,
            "hist_bins": self.hist_bins,
        }


# ---------------------------------------------------------------- config file

_SCALAR_KEYS = {
    "epoch_len_s": float, "n_epochs": int, "welch_segment_s": float, "welch_overlap": float,
    "welch_window": str, "welch_fft_len": int, "n_jobs": int, "hist_bins": int,
    "normalize": bool, "dump_scores": bool,
}
_FIT_KEYS = {"fit_lo_hz": float, "fit_hi_hz": float, "robust_percentile": float, "max_refits": int}
_SYNTH_KEYS = {
    "synth_n_subjects": "n_subjects", "synth_n_channels": "n_channels", "synth_n_epochs": "n_epochs",
    "synth_epoch_len_s": "epoch_len_s", "synth_sample_rate_hz": "sample_rate_hz",
    "synth_exponent_range": "exponent_range", "synth_offset_range": "offset_range",
    "synth_jitter": "within_subject_jitter", "synth_condition": "condition",
}
_PEAK_KEYS = {"synth_peak_center_hz": "center_hz", "synth_peak_log_height": "log_height",
              "synth_peak_width_hz": "width_hz"}
CONFIG_KEYS = frozenset(
    {"dataset", "condition", "out", "features", "seed"}
    | set(_SCALAR_KEYS) | set(_FIT_KEYS) | set(_SYNTH_KEYS) | set(_PEAK_KEYS)
)


def parse_conditions(value) -> tuple[Condition, ...]:
    if isinstance(value, str):
        if value.strip().lower() == "both":
            return (Condition.EYES_OPEN, Condition.EYES_CLOSED)
        value = value.split(",")
    return tuple(Condition.parse(v) for v in value)


def parse_kinds(value) -> tuple[FeatureKind, ...]:
    if isinstance(value, str):
        if value.strip().lower() == "all":
            return ALL_KINDS
        value = [v.strip() for v in value.split(",") if v.strip()]
    try:
        return tuple(FeatureKind(v) for v in value)
    except ValueError as exc:
        choices = ", ".join(k.value for k in FeatureKind)
        raise ValueError(f"{exc}; choose from {choices}") from None


def config_from_mapping(values: dict) -> PipelineConfig:
    """Build a config from the flat key schema (see README for every key)."""
    unknown = sorted(set(values) - CONFIG_KEYS)
    if unknown:
        raise ValueError(f"unknown config key(s): {', '.join(unknown)}")
    kw = {}
    if values.get("dataset") is not None:
        kw["dataset_root"] = Path(values["dataset"])
    if "condition" in values:
        kw["conditions"] = parse_conditions(values["condition"])
    if "out" in values:
        kw["out_dir"] = Path(values["out"])
    if "features" in values:
        kw["kinds"] = parse_kinds(values["features"])
    for key, typ in _SCALAR_KEYS.items():
        if values.get(key) is not None:
            kw[key] = typ(values[key])
    fit = {k: typ(values[k]) for k, typ in _FIT_KEYS.items() if k in values}
    if fit:
        kw["fit"] = FitOptions(**fit)

    synth = {attr: values[k] for k, attr in _SYNTH_KEYS.items() if k in values}
    peak = {attr: float(values[k]) for k, attr in _PEAK_KEYS.items() if k in values}
    if synth or peak:
        if peak:
            synth["peak_spec"] = PeakSpec(**peak)
        if "seed" in values:
            synth["seed"] = int(values["seed"])
        for key in ("n_subjects", "n_channels", "n_epochs"):
            if key in synth:
                synth[key] = int(synth[key])
        kw["synth"] = SynthSpec(**synth)
        kw.setdefault("conditions", (kw["synth"].condition,))
    return PipelineConfig(**kw)


def load_config_file(path) -> dict:
    with open(path) as fh:
        values = json.load(fh)
    if not isinstance(values, dict):
        raise ValueError(f"{path}: config must be a JSON object of flat keys")
    return values


# ---------------------------------------------------------------- extraction

def recording_features(rec: Recording, config: PipelineConfig) -> list[FeatureVector]:
    """Every base-kind feature vector of every epoch of one recording."""
    params = config.welch_params(rec.sample_rate_hz)
    out = []
    for epoch in segment_epochs(rec, config.epoch_len_s, config.n_epochs):
        psd = welch_psd(epoch, params)
        offsets, exponents = fit_psd(psd.frequencies_hz, psd.power, config.fit)
        values = {FeatureKind.SLOPE: exponents, FeatureKind.OFFSET: offsets}
        for kind, band in _BAND_KINDS.items():
            values[kind] = relative_band_power(psd, band)
        for kind in BASE_KINDS:
            out.append(FeatureVector(rec.subject_id, rec.condition, epoch.epoch_index, kind, values[kind]))
    return out


def _safe_features(rec, config):
    try:
        return recording_features(rec, config), None
    except EEGFingerprintError as exc:
        return None, f"{type(exc).__name__}: {exc}"


def extract_features(recordings, config: PipelineConfig, skipped: list | None = None) -> list[FeatureVector]:
    """Features for all recordings; failing subjects are logged and skipped."""
    recordings = list(recordings)
    if config.n_jobs == 1:
        results = [_safe_features(r, config) for r in recordings]
    else:
        results = Parallel(n_jobs=config.n_jobs)(delayed(_safe_features)(r, config) for r in recordings)

    vectors = []
    reference = None
    for rec, (feats, err) in zip(recordings, results):
        if err is None and reference is not None and rec.channel_labels != reference:
            err = "channel labels differ from the first subject"
        if err is not None:
            logger.warning("skipping %s (%s): %s", rec.subject_id, rec.condition, err)
            if skipped is not None:
                skipped.append({"subject": rec.subject_id,
                                "condition": rec.condition.value if rec.condition else None,
                                "reason": err})
            continue
        reference = reference or rec.channel_labels
        vectors.extend(feats)
    return vectors


def load_recordings(config: PipelineConfig, condition: Condition, skipped: list | None = None) -> list[Recording]:
    if config.dataset_root is not None:
        raw_skips = []
        recs = load_dataset(config.dataset_root, condition, skipped=raw_skips)
        if skipped is not None:
            skipped.extend({"subject": s, "condition": condition.value, "reason": r} for s, r in raw_skips)
        return recs
    if config.synth is not None:
        k = config.conditions.index(condition) if condition in config.conditions else 0
        spec = replace(config.synth, condition=condition, seed=(config.synth.seed + k) % 2 ** 64)
        return synth_cohort(spec)
    raise EmptyDataset("config names neither a dataset directory nor a synthetic cohort")


# ---------------------------------------------------------------- CSV formats

def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _sort_key(v: FeatureVector):
    return (
        v.condition.value if v.condition else "",
        v.subject_id,
        v.epoch_index,
        ALL_KINDS.index(v.kind),
    )


def write_features_csv(vectors, path) -> Path:
    """``subject,condition,epoch,kind,ch_1..ch_N`` with 17 significant digits."""
    vectors = sorted(vectors, key=_sort_key)
    width = max((v.values.size for v in vectors), default=0)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["subject", "condition", "epoch", "kind"] + [f"ch_{i + 1}" for i in range(width)])
    for v in vectors:
        row = [v.subject_id, v.condition.value if v.condition else "", v.epoch_index, v.kind.value]
        vals = [_fmt(x) for x in v.values]
        w.writerow(row + vals + [""] * (width - len(vals)))
    path = Path(path)
    path.write_text(buf.getvalue())
    return path


def read_features_csv(path) -> list[FeatureVector]:
    vectors = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[:4] != ["subject", "condition", "epoch", "kind"]:
            raise EEGFingerprintError(f"{path}: not a features CSV (bad header {header})")
        for lineno, row in enumerate(reader, start=2):
            try:
                vals = [float(x) for x in row[4:] if x != ""]
                vectors.append(FeatureVector(
                    row[0], Condition.parse(row[1]) if row[1] else None, int(row[2]),
                    FeatureKind(row[3]), np.array(vals),
                ))
            except (ValueError, IndexError) as exc:
                raise EEGFingerprintError(f"{path}:{lineno}: {exc}") from None
    if not vectors:
        raise EmptyDataset(f"{path}: no feature rows")
    return vectors


EVAL_COLUMNS = ["condition", "kind", "EER", "auc_det", "roc_auc", "n_genuine", "n_impostor"]


def write_evaluation_csv(results, path) -> Path:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(EVAL_COLUMNS)
    for cond, res in results:
        w.writerow([cond.value if cond else "", res.kind.value, _fmt(res.eer), _fmt(res.auc_det),
                    _fmt(res.roc_auc), res.n_genuine, res.n_impostor])
    path = Path(path)
    path.write_text(buf.getvalue())
    return path


def write_histogram_csv(result: EvalResult, path, n_bins: int = 50) -> Path:
    edges = np.linspace(0.0, 1.0, n_bins + 1)
    gen, _ = np.histogram(result.scores.genuine, bins=edges)
    imp, _ = np.histogram(result.scores.impostor, bins=edges)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["bin_lo", "bin_hi", "genuine", "impostor"])
    for lo, hi, g, i in zip(edges[:-1], edges[1:], gen, imp):
        w.writerow([_fmt(lo), _fmt(hi), int(g), int(i)])
    path = Path(path)
    path.write_text(buf.getvalue())
    return path


def write_scores_csv(result: EvalResult, path) -> Path:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["type", "score"])
    for s in result.scores.genuine:
        w.writerow(["genuine", _fmt(s)])
    for s in result.scores.impostor:
        w.writerow(["impostor", _fmt(s)])
    path = Path(path)
    path.write_text(buf.getvalue())
    return path


def write_curve_csv(result: EvalResult, path) -> Path:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["threshold", "far", "frr"])
    for t, a, r in result.curve:
        w.writerow([_fmt(t), _fmt(a), _fmt(r)])
    path = Path(path)
    path.write_text(buf.getvalue())
    return path


def write_psd_csv(freqs, power, labels, path) -> Path:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["freq_hz"] + list(labels))
    for k, f in enumerate(freqs):
        w.writerow([_fmt(f)] + [_fmt(p) for p in power[:, k]])
    path = Path(path)
    path.write_text(buf.getvalue())
    return path


# ---------------------------------------------------------------- evaluation

def evaluate_features(vectors, kinds=ALL_KINDS, normalize: bool = False) -> list[tuple[Condition, EvalResult]]:
    """One result per (condition, kind); conditions are never pooled."""
    vectors = list(vectors)
    conditions = sorted({v.condition for v in vectors}, key=lambda c: c.value if c else "")
    out = []
    for cond in conditions:
        subset = [v for v in vectors if v.condition == cond]
        for kind in kinds:
            kind = FeatureKind(kind)
            if kind is FeatureKind.SLOPE_OFFSET:
                chosen = concatenate_all(subset)
            else:
                chosen = [v for v in subset if v.kind is kind]
            out.append((cond, evaluate(chosen, normalize=normalize)))
    return out


@dataclass
class ReportBundle:
    features: list[FeatureVector]
    results: list[tuple[Condition, EvalResult]]
    paths: dict[str, Path]
    manifest: dict


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _input_hashes(config: PipelineConfig, recordings: list[Recording]) -> list[dict]:
    if config.dataset_root is None:
        return []
    out = []
    for rec in recordings:
        rel = Path(rec.subject_id) / f"{rec.subject_id}{rec.condition.run}.edf"
        out.append({"file": rel.as_posix(), "sha256": _sha256(config.dataset_root / rel)})
    return out


def collect_features(config: PipelineConfig):
    """Load every requested condition and extract features.

    Returns (vectors, skipped, inputs, channel_labels).
    """
    vectors, skipped, inputs, labels = [], [], [], {}
    for cond in config.conditions:
        recs = load_recordings(config, cond, skipped)
        vectors.extend(extract_features(recs, config, skipped))
        inputs.extend(_input_hashes(config, recs))
        labels[cond.value] = recs[0].channel_labels
    if not vectors:
        raise EmptyDataset("no subject produced features")
    return vectors, skipped, inputs, labels


def run_pipeline(config: PipelineConfig) -> ReportBundle:
    """Extract, evaluate, and write the report bundle into ``config.out_dir``."""
    vectors, skipped, inputs, labels = collect_features(config)
    results = evaluate_features(vectors, config.kinds, config.normalize)

    out = config.out_dir
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "features": write_features_csv(vectors, out / "features.csv"),
        "evaluation": write_evaluation_csv(results, out / "evaluation.csv"),
    }
    for cond, res in results:
        tag = f"{cond.value}_{res.kind.value}"
        paths[f"hist_{tag}"] = write_histogram_csv(res, out / f"scores_{tag}.csv", config.hist_bins)
        if config.dump_scores:
            paths[f"raw_{tag}"] = write_scores_csv(res, out / f"raw_scores_{tag}.csv")
            paths[f"curve_{tag}"] = write_curve_csv(res, out / f"curve_{tag}.csv")

    manifest = {
        "package": "eegfingerprint",
        "version": __version__,
        "config": config.to_dict(),
        "inputs": inputs,
        "skipped": skipped,
        "channel_labels": labels,
        "eer_tie_break": "smallest crossing",
        "outputs": sorted(p.name for p in paths.values()) + ["manifest.json"],
    }
    manifest_path = out / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    paths["manifest"] = manifest_path
    return ReportBundle(vectors, results, paths, manifest)
