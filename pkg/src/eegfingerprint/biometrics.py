"""Genuine/impostor similarity scoring and threshold-based error rates.

A pair of feature vectors is compared with ``1 / (1 + d)`` where ``d`` is their
Euclidean distance. A pair is accepted as "same subject" when its score is at
or above the threshold.
"""

from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass, replace

import numpy as np
from sklearn.metrics import roc_auc_score

from .edf_io import Condition
from .errors import (
    EmptyScores,
    IdentityMismatch,
    KindMismatch,
    TooFewEpochs,
    TooFewSubjects,
    VectorLengthMismatch,
)


class FeatureKind(str, enum.Enum):
    # SLOPE vectors hold the positive aperiodic exponent; distances are sign-blind
    SLOPE = "slope"
    OFFSET = "offset"
    SLOPE_OFFSET = "slope_offset"
    THETA_REL = "theta_rel"
    ALPHA_REL = "alpha_rel"
    BETA_REL = "beta_rel"
    GAMMA_REL = "gamma_rel"

    @property
    def label(self) -> str:
        return _LABELS[self]


_LABELS = {
    FeatureKind.SLOPE: "slope",
    FeatureKind.OFFSET: "offset",
    FeatureKind.SLOPE_OFFSET: "slope + offset",
    FeatureKind.THETA_REL: "theta relative power",
    FeatureKind.ALPHA_REL: "alpha relative power",
    FeatureKind.BETA_REL: "beta relative power",
    FeatureKind.GAMMA_REL: "gamma relative power",
}

ALL_KINDS = tuple(FeatureKind)
BASE_KINDS = tuple(k for k in FeatureKind if k is not FeatureKind.SLOPE_OFFSET)


@dataclass(frozen=True, eq=False)
class FeatureVector:
    subject_id: str
    condition: Condition | None
    epoch_index: int
    kind: FeatureKind
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64).ravel()
        if not np.all(np.isfinite(values)):
            raise ValueError(f"non-finite feature values for {self.subject_id} epoch {self.epoch_index}")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "kind", FeatureKind(self.kind))


@dataclass(eq=False)
class ScoreSet:
    genuine: np.ndarray
    impostor: np.ndarray


@dataclass(eq=False)
class FarFrrCurve:
    """Error rates at ascending thresholds, sentinels included at both ends."""

    thresholds: np.ndarray
    far: np.ndarray
    frr: np.ndarray

    def __len__(self):
        return len(self.thresholds)

    def __iter__(self):
        return zip(self.thresholds.tolist(), self.far.tolist(), self.frr.tolist())


@dataclass(eq=False)
class EvalResult:
    kind: FeatureKind
    curve: FarFrrCurve
    eer: float
    auc_det: float
    roc_auc: float
    n_genuine: int
    n_impostor: int
    scores: ScoreSet


def similarity(a: FeatureVector, b: FeatureVector) -> float:
    """``1 / (1 + ||a - b||)``; 1.0 exactly when the vectors coincide."""
    if a.kind != b.kind:
        raise KindMismatch(f"cannot compare {a.kind.value} with {b.kind.value}")
    if a.values.shape != b.values.shape:
        raise VectorLengthMismatch(f"lengths {a.values.size} and {b.values.size} differ")
    diff = a.values - b.values
    return 1.0 / (1.0 + float(np.sqrt(np.dot(diff, diff))))


def concatenate(slope: FeatureVector, offset: FeatureVector) -> FeatureVector:
    """Slope channels followed by offset channels, no rescaling."""
    if slope.kind is not FeatureKind.SLOPE or offset.kind is not FeatureKind.OFFSET:
        raise KindMismatch(f"expected (slope, offset), got ({slope.kind.value}, {offset.kind.value})")
    ident_a = (slope.subject_id, slope.condition, slope.epoch_index)
    ident_b = (offset.subject_id, offset.condition, offset.epoch_index)
    if ident_a != ident_b:
        raise IdentityMismatch(f"{ident_a} vs {ident_b}")
    return FeatureVector(
        slope.subject_id, slope.condition, slope.epoch_index, FeatureKind.SLOPE_OFFSET,
        np.concatenate([slope.values, offset.values]),
    )


def concatenate_all(vectors) -> list[FeatureVector]:
    """Pair every slope vector with the offset vector of the same epoch."""
    offsets = {
        (v.subject_id, v.condition, v.epoch_index): v
        for v in vectors if v.kind is FeatureKind.OFFSET
    }
    out = []
    for v in vectors:
        if v.kind is FeatureKind.SLOPE:
            key = (v.subject_id, v.condition, v.epoch_index)
            if key not in offsets:
                raise IdentityMismatch(f"no offset vector for {key}")
            out.append(concatenate(v, offsets[key]))
    return out


def _check_vectors(vectors) -> list[FeatureVector]:
    vectors = list(vectors)
    kinds = {v.kind for v in vectors}
    if len(kinds) > 1:
        raise KindMismatch(f"mixed feature kinds: {sorted(k.value for k in kinds)}")
    conditions = {v.condition for v in vectors}
    if len(conditions) > 1:
        raise ValueError("score sets are computed within one condition only")
    lengths = {v.values.size for v in vectors}
    if len(lengths) > 1:
        raise VectorLengthMismatch(f"mixed vector lengths: {sorted(lengths)}")
    per_subject = Counter(v.subject_id for v in vectors)
    if len(per_subject) < 2:
        raise TooFewSubjects(f"need at least 2 subjects, got {len(per_subject)}")
    short = sorted(s for s, n in per_subject.items() if n < 2)
    if short:
        raise TooFewEpochs(f"subjects with fewer than 2 epochs: {short}")
    # canonical order makes every downstream result independent of input order
    return sorted(vectors, key=lambda v: (v.subject_id, v.epoch_index))


def zscore(vectors) -> list[FeatureVector]:
    """Standardize each vector entry across the set (constant entries are left centred)."""
    vectors = list(vectors)
    X = np.stack([v.values for v in vectors])
    mu = X.mean(axis=0)
    sd = X.std(axis=0)
    sd[sd == 0] = 1.0
    Z = (X - mu) / sd
    return [replace(v, values=z) for v, z in zip(vectors, Z)]


def score_sets(vectors) -> ScoreSet:
    """Similarity scores of every unordered epoch pair, split by subject identity."""
    vectors = _check_vectors(vectors)
    X = np.stack([v.values for v in vectors])
    labels = np.array([v.subject_id for v in vectors])
    i, j = np.triu_indices(len(vectors), k=1)
    diff = X[i] - X[j]
    dist = np.sqrt(np.einsum("ij,ij->i", diff, diff))
    scores = 1.0 / (1.0 + dist)
    same = labels[i] == labels[j]
    return ScoreSet(genuine=scores[same], impostor=scores[~same])


def far_frr_curve(scores: ScoreSet) -> FarFrrCurve:
    """FAR and FRR at every distinct observed score plus one sentinel on each side.

    FAR(t) is the fraction of impostor scores >= t, FRR(t) the fraction of
    genuine scores < t.
    """
    gen = np.sort(np.asarray(scores.genuine, dtype=np.float64))
    imp = np.sort(np.asarray(scores.impostor, dtype=np.float64))
    if gen.size == 0 or imp.size == 0:
        raise EmptyScores(f"{gen.size} genuine and {imp.size} impostor scores")
    observed = np.unique(np.concatenate([gen, imp]))
    thresholds = np.concatenate([[observed[0] - 1.0], observed, [observed[-1] + 1.0]])
    far = (imp.size - np.searchsorted(imp, thresholds, side="left")) / imp.size
    frr = np.searchsorted(gen, thresholds, side="left") / gen.size
    return FarFrrCurve(thresholds, far, frr)


def eer(curve: FarFrrCurve) -> float:
    """Error rate where FAR meets FRR, linearly interpolated between thresholds.

    If several crossings exist the smallest rate is returned.
    """
    far, frr = curve.far, curve.frr
    diff = far - frr
    candidates = list(far[diff == 0])
    for k in np.flatnonzero((diff[:-1] > 0) & (diff[1:] < 0)):
        alpha = diff[k] / (diff[k] - diff[k + 1])
        a = far[k] + alpha * (far[k + 1] - far[k])
        b = frr[k] + alpha * (frr[k + 1] - frr[k])
        candidates.append(0.5 * (a + b))
    if not candidates:
        raise ValueError("FAR and FRR never cross; curve is missing its sentinels")
    return float(min(candidates))


def auc_det(curve: FarFrrCurve) -> float:
    """Trapezoidal area under FRR as a function of FAR (lower is better)."""
    # thresholds descending == FAR ascending, FRR descending
    far = curve.far[::-1]
    frr = curve.frr[::-1]
    return float(np.sum(np.diff(far) * (frr[1:] + frr[:-1]) / 2.0))


def roc_auc(scores: ScoreSet) -> float:
    """Conventional ROC AUC (genuine as positives); higher is better."""
    y = np.concatenate([np.ones(len(scores.genuine)), np.zeros(len(scores.impostor))])
    s = np.concatenate([scores.genuine, scores.impostor])
    return float(roc_auc_score(y, s))


def evaluate(vectors, kind: FeatureKind | None = None, normalize: bool = False) -> EvalResult:
    """Score all pairs of one feature kind and summarise FAR/FRR.

    ``kind`` selects vectors of that kind from a mixed list; concatenated
    slope+offset vectors are built on the fly if asked for and absent.
    """
    vectors = list(vectors)
    if kind is not None:
        kind = FeatureKind(kind)
        selected = [v for v in vectors if v.kind is kind]
        if not selected and kind is FeatureKind.SLOPE_OFFSET:
            selected = concatenate_all(vectors)
        vectors = selected
    if not vectors:
        raise TooFewSubjects(f"no {kind.value if kind else ''} feature vectors to evaluate")
    vectors = _check_vectors(vectors)
    if normalize:
        vectors = zscore(vectors)
    scores = score_sets(vectors)
    curve = far_frr_curve(scores)
    return EvalResult(
        kind=vectors[0].kind,
        curve=curve,
        eer=eer(curve),
        auc_det=auc_det(curve),
        roc_auc=roc_auc(scores),
        n_genuine=int(scores.genuine.size),
        n_impostor=int(scores.impostor.size),
        scores=scores,
    )
