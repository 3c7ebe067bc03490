"""scikit-learn compatible wrappers.

Transformers take epoched data shaped ``(n_epochs, n_channels, n_samples)``
and return one row per epoch, so they drop into ``sklearn.pipeline`` next to
scalers and classifiers. :class:`IdentificationEvaluator` is fitted on feature
rows plus subject labels and exposes the genuine/impostor error rates.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .biometrics import FeatureKind, FeatureVector, evaluate
from .dsp import TOTAL, Band, Psd, WelchParams, relative_band_power, welch
from .specparam import FitOptions, fit_aperiodic


def _check_epochs(X) -> np.ndarray:
    X = check_array(X, allow_nd=True, ensure_2d=False, dtype=np.float64)
    if X.ndim == 2:
        X = X[:, None, :]
    if X.ndim != 3:
        raise ValueError(f"expected (n_epochs, n_channels, n_samples), got shape {X.shape}")
    return X


class _WelchMixin:
    def _welch_params(self) -> WelchParams:
        return WelchParams.from_seconds(
            self.segment_len_s, self.sample_rate_hz,
            overlap_fraction=self.overlap, window=self.window, fft_len=self.fft_len,
        )

    def _psd(self, X):
        return welch(X, self.sample_rate_hz, self._welch_params())


class WelchPSD(_WelchMixin, TransformerMixin, BaseEstimator):
    """Welch power spectral density per epoch and channel.

    ``transform`` returns ``(n_epochs, n_channels, n_freqs)``; the grid is in
    ``frequencies_``.
    """

    def __init__(self, sample_rate_hz=160.0, segment_len_s=2.0, overlap=0.5, window="hamming", fft_len=None):
        self.sample_rate_hz = sample_rate_hz
        self.segment_len_s = segment_len_s
        self.overlap = overlap
        self.window = window
        self.fft_len = fft_len

    def fit(self, X, y=None):
        X = _check_epochs(X)
        self.n_channels_ = X.shape[1]
        self.frequencies_, _ = self._psd(X[:1, :1])
        return self

    def transform(self, X):
        check_is_fitted(self, "frequencies_")
        _, power = self._psd(_check_epochs(X))
        return power


class AperiodicFeatures(_WelchMixin, TransformerMixin, BaseEstimator):
    """Per-channel aperiodic offset and/or exponent of each epoch's spectrum.

    Parameters
    ----------
    output : {"offset", "exponent", "both"}
        ``"both"`` returns exponents for all channels followed by offsets.
    """

    def __init__(self, sample_rate_hz=160.0, segment_len_s=2.0, overlap=0.5, window="hamming",
                 fft_len=None, fit_range=(1.0, 45.0), robust_percentile=2.5, max_refits=1,
                 output="both"):
        self.sample_rate_hz = sample_rate_hz
        self.segment_len_s = segment_len_s
        self.overlap = overlap
        self.window = window
        self.fft_len = fft_len
        self.fit_range = fit_range
        self.robust_percentile = robust_percentile
        self.max_refits = max_refits
        self.output = output

    def fit(self, X, y=None):
        if self.output not in ("offset", "exponent", "both"):
            raise ValueError(f"output must be 'offset', 'exponent' or 'both', got {self.output!r}")
        X = _check_epochs(X)
        self.n_channels_ = X.shape[1]
        self.fit_options_ = FitOptions(self.fit_range[0], self.fit_range[1],
                                       self.robust_percentile, self.max_refits)
        return self

    def transform(self, X):
        check_is_fitted(self, "fit_options_")
        X = _check_epochs(X)
        freqs, power = self._psd(X)
        n_ep, n_ch = power.shape[:2]
        offsets = np.empty((n_ep, n_ch))
        exponents = np.empty((n_ep, n_ch))
        for e in range(n_ep):
            for c in range(n_ch):
                ft = fit_aperiodic(freqs, power[e, c], self.fit_options_)
                offsets[e, c] = ft.offset
                exponents[e, c] = ft.exponent
        if self.output == "offset":
            return offsets
        if self.output == "exponent":
            return exponents
        return np.hstack([exponents, offsets])


class RelativeBandPower(_WelchMixin, TransformerMixin, BaseEstimator):
    """Per-channel power in ``band`` divided by power in ``total`` (both half-open, Hz)."""

    def __init__(self, sample_rate_hz=160.0, band=(8.0, 13.0), total=(TOTAL.lo_hz, TOTAL.hi_hz),
                 segment_len_s=2.0, overlap=0.5, window="hamming", fft_len=None):
        self.sample_rate_hz = sample_rate_hz
        self.band = band
        self.total = total
        self.segment_len_s = segment_len_s
        self.overlap = overlap
        self.window = window
        self.fft_len = fft_len

    def fit(self, X, y=None):
        X = _check_epochs(X)
        self.n_channels_ = X.shape[1]
        self.band_ = Band("band", *self.band)
        self.total_ = Band("total", *self.total)
        return self

    def transform(self, X):
        check_is_fitted(self, "band_")
        freqs, power = self._psd(_check_epochs(X))
        return relative_band_power(Psd(freqs, power), self.band_, self.total_)


class IdentificationEvaluator(BaseEstimator):
    """Genuine/impostor evaluation of feature rows grouped by subject label.

    After ``fit(X, subjects)`` the attributes ``eer_``, ``auc_det_``,
    ``roc_auc_``, ``curve_`` and ``scores_`` hold the results. ``score``
    returns ``1 - EER`` so that larger is better, as sklearn expects.
    """

    def __init__(self, normalize=False):
        self.normalize = normalize

    def _result(self, X, y):
        X = check_array(X, dtype=np.float64)
        y = np.asarray(y)
        if y.shape[0] != X.shape[0]:
            raise ValueError(f"{X.shape[0]} rows but {y.shape[0]} labels")
        seen = {}
        vectors = []
        for row, label in zip(X, y):
            idx = seen.get(label, 0)
            seen[label] = idx + 1
            vectors.append(FeatureVector(str(label), None, idx, FeatureKind.OFFSET, row))
        return evaluate(vectors, normalize=self.normalize)

    def fit(self, X, y):
        res = self._result(X, y)
        self.eer_ = res.eer
        self.auc_det_ = res.auc_det
        self.roc_auc_ = res.roc_auc
        self.curve_ = res.curve
        self.scores_ = res.scores
        self.n_features_in_ = np.asarray(X).shape[1]
        return self

    def score(self, X, y):
        return 1.0 - self._result(X, y).eer
