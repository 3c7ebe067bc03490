import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import make_pipeline
from sklearn.preprocessing import StandardScaler

from eegfingerprint import synth_cohort
from eegfingerprint.biometrics import FeatureKind, evaluate
from eegfingerprint.dsp import ALPHA, WelchParams, segment_epochs, welch, welch_psd, relative_band_power
from eegfingerprint.estimators import (
    AperiodicFeatures,
    IdentificationEvaluator,
    RelativeBandPower,
    WelchPSD,
)
from eegfingerprint.pipeline import PipelineConfig, extract_features
from eegfingerprint.specparam import fit_psd
from eegfingerprint.synth import SynthSpec

FS = 160.0


@pytest.fixture(scope="module")
def cohort():
    spec = SynthSpec(n_subjects=5, n_channels=4, n_epochs=3, epoch_len_s=6.0, seed=21)
    recs = synth_cohort(spec)
    epochs = [e for r in recs for e in segment_epochs(r, 6.0, 3)]
    X = np.stack([e.samples for e in epochs])
    y = np.array([e.subject_id for e in epochs])
    return recs, epochs, X, y


def test_params_round_trip_and_clone():
    est = AperiodicFeatures(output="offset", fit_range=(2.0, 40.0))
    params = est.get_params()
    assert params["output"] == "offset" and params["fit_range"] == (2.0, 40.0)
    twin = clone(est).set_params(max_refits=0)
    assert twin.max_refits == 0 and est.max_refits == 1


def test_transform_before_fit_raises(cohort):
    X = cohort[2]
    for est in (WelchPSD(), AperiodicFeatures(), RelativeBandPower()):
        with pytest.raises(NotFittedError):
            est.transform(X)


def test_welch_psd_matches_functional_core(cohort):
    _, epochs, X, _ = cohort
    out = WelchPSD().fit_transform(X)
    ref = welch_psd(epochs[0])
    assert out.shape == (X.shape[0], 4, ref.frequencies_hz.size)
    np.testing.assert_array_equal(out[0], ref.power)


def test_two_dimensional_input_is_single_channel(cohort):
    X = cohort[2][:, 0, :]
    out = WelchPSD().fit_transform(X)
    assert out.shape[1] == 1


def test_aperiodic_features_match_functional_core(cohort):
    _, epochs, X, _ = cohort
    feats = AperiodicFeatures().fit_transform(X)
    assert feats.shape == (X.shape[0], 8)
    f, p = welch(epochs[2].samples, FS, WelchParams())
    offsets, exponents = fit_psd(f, p)
    np.testing.assert_array_equal(feats[2, :4], exponents)
    np.testing.assert_array_equal(feats[2, 4:], offsets)
    only = AperiodicFeatures(output="offset").fit_transform(X)
    np.testing.assert_array_equal(only, feats[:, 4:])


def test_bad_output_option(cohort):
    with pytest.raises(ValueError):
        AperiodicFeatures(output="knee").fit(cohort[2])


def test_relative_band_power_matches_functional_core(cohort):
    _, epochs, X, _ = cohort
    out = RelativeBandPower(band=(ALPHA.lo_hz, ALPHA.hi_hz)).fit_transform(X)
    np.testing.assert_array_equal(out[1], relative_band_power(welch_psd(epochs[1]), ALPHA))


def test_evaluator_agrees_with_pipeline(cohort):
    recs, _, X, y = cohort
    feats = AperiodicFeatures(output="offset").fit_transform(X)
    ev = IdentificationEvaluator().fit(feats, y)
    vecs = extract_features(recs, PipelineConfig(epoch_len_s=6.0, n_epochs=3))
    ref = evaluate([v for v in vecs if v.kind is FeatureKind.OFFSET])
    assert ev.eer_ == ref.eer
    assert ev.auc_det_ == ref.auc_det
    assert ev.score(feats, y) == pytest.approx(1 - ref.eer)


def test_sklearn_pipeline_composition(cohort):
    _, _, X, y = cohort
    pipe = make_pipeline(AperiodicFeatures(output="both"), StandardScaler())
    Z = pipe.fit_transform(X)
    assert Z.shape == (X.shape[0], 8)
    np.testing.assert_allclose(Z.mean(axis=0), 0.0, atol=1e-10)
    ev = IdentificationEvaluator().fit(Z, y)
    assert 0.0 <= ev.eer_ <= 1.0


def test_evaluator_label_length_check():
    with pytest.raises(ValueError):
        IdentificationEvaluator().fit(np.zeros((4, 2)), ["a", "a", "b"])
