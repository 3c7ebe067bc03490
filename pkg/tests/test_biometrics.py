import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from eegfingerprint.biometrics import (
    FeatureKind,
    FeatureVector,
    ScoreSet,
    auc_det,
    concatenate,
    eer,
    evaluate,
    far_frr_curve,
    roc_auc,
    score_sets,
    similarity,
)
from eegfingerprint.errors import (
    EmptyScores,
    IdentityMismatch,
    KindMismatch,
    TooFewEpochs,
    TooFewSubjects,
    VectorLengthMismatch,
)


def fv(values, subject="S001", epoch=0, kind=FeatureKind.OFFSET):
    return FeatureVector(subject, None, epoch, kind, np.asarray(values, dtype=float))


# ---------------------------------------------------------------- brute-force oracles

def sweep(gen, imp):
    """(threshold, FAR, FRR) by direct counting at every score and two sentinels."""
    values = sorted(set(gen) | set(imp))
    out = []
    for t in [values[0] - 1.0] + values + [values[-1] + 1.0]:
        far = sum(1 for s in imp if s >= t) / len(imp)
        frr = sum(1 for s in gen if s < t) / len(gen)
        out.append((t, far, frr))
    return out


def oracle_eer_minmax(gen, imp):
    return min(max(far, frr) for _, far, frr in sweep(gen, imp))


def oracle_eer_exact(gen, imp):
    """Crossing value with rational arithmetic; handles ties between classes."""
    pts = []
    values = sorted(set(gen) | set(imp))
    for t in [values[0] - 1.0] + values + [values[-1] + 1.0]:
        far = Fraction(sum(1 for s in imp if s >= t), len(imp))
        frr = Fraction(sum(1 for s in gen if s < t), len(gen))
        pts.append((far, frr))
    best = None
    for (a0, r0), (a1, r1) in zip(pts, pts[1:]):
        d0, d1 = a0 - r0, a1 - r1
        if d0 == 0:
            cand = a0
        elif d0 > 0 > d1:
            alpha = d0 / (d0 - d1)
            cand = a0 + alpha * (a1 - a0)
        else:
            continue
        best = cand if best is None else min(best, cand)
    if pts[-1][0] == pts[-1][1]:
        best = min(best, pts[-1][0]) if best is not None else pts[-1][0]
    return float(best)


def oracle_auc(gen, imp):
    pts = sorted(((far, frr) for _, far, frr in sweep(gen, imp)), key=lambda p: (p[0], -p[1]))
    area = 0.0
    for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
        area += (x1 - x0) * (y0 + y1) / 2
    return area


GEN3 = [0.9, 0.8, 0.4]
IMP3 = [0.7, 0.3, 0.2]


# ---------------------------------------------------------------- similarity

def test_identical_vectors_score_one():
    a = fv(np.arange(64.0))
    assert similarity(a, fv(np.arange(64.0), "S002")) == 1.0


def test_uniform_offset_closed_form():
    a = fv(np.zeros(64))
    b = fv(np.full(64, 0.1))
    assert similarity(a, b) == pytest.approx(1 / 1.8)


def test_unit_distance():
    assert similarity(fv([0.0, 0.0]), fv([0.6, 0.8])) == pytest.approx(0.5)


def test_similarity_errors():
    with pytest.raises(KindMismatch):
        similarity(fv([1.0]), fv([1.0], kind=FeatureKind.SLOPE))
    with pytest.raises(VectorLengthMismatch):
        similarity(fv([1.0]), fv([1.0, 2.0]))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3)), min_size=1, max_size=20))
def test_similarity_recovers_euclidean_metric(pairs):
    a = fv([p[0] for p in pairs])
    b = fv([p[1] for p in pairs])
    s = similarity(a, b)
    assert 0 < s <= 1
    assert s == similarity(b, a)
    d = math.dist(a.values, b.values)
    assert 1 / s - 1 == pytest.approx(d, rel=1e-9, abs=1e-9)


# ---------------------------------------------------------------- pairing

def _cohort(n_subjects, n_epochs, dim=3, seed=0, kind=FeatureKind.OFFSET):
    rng = np.random.default_rng(seed)
    return [
        fv(rng.standard_normal(dim), f"S{s:03d}", e, kind)
        for s in range(n_subjects) for e in range(n_epochs)
    ]


def test_pair_counts_small():
    ss = score_sets(_cohort(2, 2))
    assert ss.genuine.size == 2
    assert ss.impostor.size == 4


def test_pair_counts_full_cohort_scale():
    ss = score_sets(_cohort(95, 5, dim=2))
    assert ss.genuine.size == 95 * math.comb(5, 2) == 950
    assert ss.impostor.size == math.comb(475, 2) - 950 == 111_625


def test_pair_scores_match_pairwise_similarity():
    vecs = _cohort(3, 3)
    ss = score_sets(vecs)
    gen, imp = [], []
    for a, b in itertools.combinations(vecs, 2):
        (gen if a.subject_id == b.subject_id else imp).append(similarity(a, b))
    np.testing.assert_allclose(np.sort(ss.genuine), np.sort(gen), rtol=1e-15)
    np.testing.assert_allclose(np.sort(ss.impostor), np.sort(imp), rtol=1e-15)


def test_one_subject_rejected():
    with pytest.raises(TooFewSubjects):
        score_sets(_cohort(1, 5))


def test_single_epoch_subject_rejected():
    vecs = _cohort(3, 2)[:-1]
    with pytest.raises(TooFewEpochs):
        score_sets(vecs)


def test_mixed_kinds_rejected():
    vecs = _cohort(2, 2) + _cohort(2, 2, kind=FeatureKind.SLOPE)
    with pytest.raises(KindMismatch):
        score_sets(vecs)


# ---------------------------------------------------------------- curve, EER, area

def test_separated_threshold_between_classes():
    curve = far_frr_curve(ScoreSet(np.full(4, 0.9), np.full(6, 0.1)))
    rows = {t: (a, r) for t, a, r in curve}
    assert rows[0.9] == (0.0, 0.0)
    assert eer(curve) == 0.0
    assert auc_det(curve) == 0.0


def test_sentinels():
    curve = far_frr_curve(ScoreSet(np.array(GEN3), np.array(IMP3)))
    assert (curve.far[0], curve.frr[0]) == (1.0, 0.0)
    assert (curve.far[-1], curve.frr[-1]) == (0.0, 1.0)
    assert curve.thresholds[0] < 0.2 and curve.thresholds[-1] > 0.9


def test_three_by_three_at_0_65():
    gen, imp = np.array(GEN3), np.array(IMP3)
    # accept iff score >= t
    far = np.mean(imp >= 0.65)
    frr = np.mean(gen < 0.65)
    assert (far, frr) == (1 / 3, 1 / 3)
    curve = far_frr_curve(ScoreSet(gen, imp))
    assert eer(curve) == pytest.approx(1 / 3, abs=1e-15)
    # hand-integrated DET area: one strip of width 1/3 at FRR 1/3
    assert auc_det(curve) == pytest.approx(1 / 9, abs=1e-15)
    assert oracle_auc(GEN3, IMP3) == pytest.approx(1 / 9, abs=1e-15)
    assert roc_auc(ScoreSet(gen, imp)) == pytest.approx(8 / 9)


def test_identical_lists_give_half():
    s = np.linspace(0.1, 0.9, 9)
    curve = far_frr_curve(ScoreSet(s, s.copy()))
    assert eer(curve) == pytest.approx(0.5)


def test_identical_distributions_det_area(rng):
    g = rng.uniform(size=1500)
    i = rng.uniform(size=1500)
    assert auc_det(far_frr_curve(ScoreSet(g, i))) == pytest.approx(0.5, abs=0.02)


def test_empty_scores():
    with pytest.raises(EmptyScores):
        far_frr_curve(ScoreSet(np.array([]), np.array([0.5])))


@settings(max_examples=100, deadline=None)
@given(
    gen=st.lists(st.floats(0.01, 1.0), min_size=1, max_size=50),
    imp=st.lists(st.floats(0.01, 1.0), min_size=1, max_size=50),
)
def test_monotone_curve_and_oracles_with_ties(gen, imp):
    curve = far_frr_curve(ScoreSet(np.array(gen), np.array(imp)))
    assert np.all(np.diff(curve.far) <= 0)
    assert np.all(np.diff(curve.frr) >= 0)
    assert eer(curve) == pytest.approx(oracle_eer_exact(gen, imp), abs=1e-12)
    assert auc_det(curve) == pytest.approx(oracle_auc(gen, imp), abs=1e-12)
    assert roc_auc(ScoreSet(np.array(gen), np.array(imp))) == pytest.approx(1 - auc_det(curve), abs=1e-12)


def test_eer_equals_minmax_sweep_without_ties():
    for seed in range(50):
        r = np.random.default_rng(seed)
        gen = list(r.beta(4, 2, size=r.integers(1, 51)))
        imp = list(r.beta(2, 4, size=r.integers(1, 51)))
        curve = far_frr_curve(ScoreSet(np.array(gen), np.array(imp)))
        assert eer(curve) == pytest.approx(oracle_eer_minmax(gen, imp), abs=1e-12)


# ---------------------------------------------------------------- concatenation and evaluate

def test_concatenate_layout():
    s = fv([1.0, 2.0], kind=FeatureKind.SLOPE)
    o = fv([3.0, 4.0], kind=FeatureKind.OFFSET)
    c = concatenate(s, o)
    assert c.kind is FeatureKind.SLOPE_OFFSET
    np.testing.assert_array_equal(c.values, [1, 2, 3, 4])


def test_concatenate_identity_mismatch():
    with pytest.raises(IdentityMismatch):
        concatenate(fv([1.0], epoch=0, kind=FeatureKind.SLOPE), fv([1.0], epoch=1))


def test_concatenate_kind_check():
    with pytest.raises(KindMismatch):
        concatenate(fv([1.0]), fv([1.0]))


def test_self_concatenation_scales_distance_by_root_two(rng):
    a, b = rng.standard_normal(64), rng.standard_normal(64)
    d_single = np.linalg.norm(a - b)
    ca = concatenate(fv(a, kind=FeatureKind.SLOPE), fv(a))
    cb = concatenate(fv(b, "S002", kind=FeatureKind.SLOPE), fv(b, "S002"))
    assert 1 / similarity(ca, cb) - 1 == pytest.approx(np.sqrt(2) * d_single, rel=1e-12)


def test_evaluate_is_order_invariant():
    vecs = _cohort(6, 4, dim=5, seed=3)
    ref = evaluate(vecs)
    for seed in range(5):
        shuffled = [vecs[i] for i in np.random.default_rng(seed).permutation(len(vecs))]
        res = evaluate(shuffled)
        assert res.eer == ref.eer
        assert res.auc_det == ref.auc_det


def test_evaluate_separated_cohort():
    rng = np.random.default_rng(1)
    centres = rng.uniform(-5, 5, size=(20, 8))
    vecs = [fv(centres[s] + 0.05 * rng.standard_normal(8), f"S{s:03d}", e)
            for s in range(20) for e in range(5)]
    res = evaluate(vecs)
    assert res.eer <= 0.05
    assert res.n_genuine == 200 and res.n_impostor == math.comb(100, 2) - 200


def test_evaluate_builds_concatenation_on_request():
    vecs = _cohort(3, 2, kind=FeatureKind.SLOPE) + _cohort(3, 2, seed=9)
    res = evaluate(vecs, FeatureKind.SLOPE_OFFSET)
    assert res.kind is FeatureKind.SLOPE_OFFSET


def test_normalize_changes_only_when_asked():
    rng = np.random.default_rng(5)
    vecs = [fv(rng.standard_normal(3) * [1, 100, 1e4], f"S{s}", e) for s in range(5) for e in range(3)]
    raw = evaluate(vecs)
    again = evaluate(vecs, normalize=False)
    assert raw.eer == again.eer
    assert 0 <= evaluate(vecs, normalize=True).eer <= 1
