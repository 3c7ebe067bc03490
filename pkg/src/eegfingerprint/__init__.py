"""Aperiodic (1/f) and band-power EEG features for subject identification."""

__version__ = "0.1.0"

from .biometrics import (  # noqa: E402
    EvalResult,
    FeatureKind,
    FeatureVector,
    ScoreSet,
    auc_det,
    concatenate,
    eer,
    evaluate,
    far_frr_curve,
    score_sets,
    similarity,
)
from .dsp import (  # noqa: E402
    Band,
    Epoch,
    Psd,
    WelchParams,
    band_power,
    relative_band_power,
    segment_epochs,
    welch_psd,
)
from .edf_io import ChannelCalibration, Condition, Recording, load_dataset, parse_edf, read_edf, write_edf  # noqa: E402
from .estimators import AperiodicFeatures, IdentificationEvaluator, RelativeBandPower, WelchPSD  # noqa: E402
from .specparam import AperiodicFit, FitOptions, aperiodic_model, fit_aperiodic, fit_quality  # noqa: E402
from .synth import SynthSpec, add_oscillation, power_law_noise, synth_cohort  # noqa: E402
