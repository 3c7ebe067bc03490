"""Epoching, Welch power spectral density and band power."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .edf_io import Condition, Recording
from .errors import BandOutOfRange, RecordingTooShort, SegmentTooLong, ZeroTotalPower


@dataclass(eq=False)
class Epoch:
    subject_id: str
    condition: Condition | None
    epoch_index: int
    sample_rate_hz: float
    samples: np.ndarray  # (n_channels, n_samples)


@dataclass(eq=False)
class Psd:
    """One-sided power spectral density, ``power`` is (n_channels, n_freqs)."""

    frequencies_hz: np.ndarray
    power: np.ndarray

    @property
    def df(self) -> float:
        return float(self.frequencies_hz[1] - self.frequencies_hz[0])


class Window(str, enum.Enum):
    HAMMING = "hamming"
    HANN = "hann"
    RECTANGULAR = "rectangular"

    def values(self, n: int) -> np.ndarray:
        # symmetric windows, as in MATLAB's pwelch
        if self is Window.HAMMING:
            return np.hamming(n)
        if self is Window.HANN:
            return np.hanning(n)
        return np.ones(n)


@dataclass(frozen=True)
class WelchParams:
    segment_len_samples: int = 320
    overlap_fraction: float = 0.5
    window: Window = Window.HAMMING
    fft_len: int | None = None

    def __post_init__(self):
        if self.segment_len_samples < 2:
            raise ValueError(f"segment_len_samples must be >= 2, got {self.segment_len_samples}")
        if not 0 <= self.overlap_fraction < 1:
            raise ValueError(f"overlap_fraction must be in [0, 1), got {self.overlap_fraction}")
        object.__setattr__(self, "window", Window(self.window))
        if self.fft_len is not None and self.fft_len < self.segment_len_samples:
            raise ValueError("fft_len must be >= segment_len_samples")

    @classmethod
    def from_seconds(cls, segment_len_s: float, sample_rate_hz: float, **kwargs) -> "WelchParams":
        return cls(segment_len_samples=int(round(segment_len_s * sample_rate_hz)), **kwargs)

    @property
    def nfft(self) -> int:
        return self.fft_len or self.segment_len_samples

    @property
    def step(self) -> int:
        return max(1, self.segment_len_samples - int(round(self.overlap_fraction * self.segment_len_samples)))


@dataclass(frozen=True)
class Band:
    name: str
    lo_hz: float
    hi_hz: float

    def __post_init__(self):
        if not 0 < self.lo_hz < self.hi_hz:
            raise ValueError(f"band {self.name!r} needs 0 < lo < hi, got [{self.lo_hz}, {self.hi_hz})")


THETA = Band("theta", 4.0, 8.0)
ALPHA = Band("alpha", 8.0, 13.0)
BETA = Band("beta", 13.0, 30.0)
GAMMA = Band("gamma", 30.0, 45.0)
TOTAL = Band("total", 1.0, 45.0)
CANONICAL_BANDS = (THETA, ALPHA, BETA, GAMMA)


def segment_epochs(recording: Recording, epoch_len_s: float = 12.0, n_epochs: int = 5) -> list[Epoch]:
    """Cut ``n_epochs`` contiguous, non-overlapping epochs from the start of a recording.

    Samples past the last epoch are discarded.
    """
    if n_epochs < 1:
        raise ValueError(f"n_epochs must be >= 1, got {n_epochs}")
    epoch_len = int(round(epoch_len_s * recording.sample_rate_hz))
    if epoch_len < 1:
        raise ValueError(f"epoch length {epoch_len_s} s is shorter than one sample")
    needed = epoch_len * n_epochs
    if recording.n_samples < needed:
        raise RecordingTooShort(
            f"{recording.subject_id}: {recording.n_samples} samples, "
            f"need {needed} for {n_epochs} x {epoch_len_s} s"
        )
    return [
        Epoch(
            subject_id=recording.subject_id,
            condition=recording.condition,
            epoch_index=i,
            sample_rate_hz=recording.sample_rate_hz,
            samples=recording.samples[:, i * epoch_len:(i + 1) * epoch_len].copy(),
        )
        for i in range(n_epochs)
    ]


def welch(x: np.ndarray, sample_rate_hz: float, params: WelchParams = WelchParams()):
    """Welch PSD of the last axis of ``x``.

    Returns
    -------
    freqs : 1d array
    power : array, ``x.shape[:-1] + (n_freqs,)``
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[-1]
    seg = params.segment_len_samples
    if seg > n:
        raise SegmentTooLong(f"segment of {seg} samples does not fit in {n} samples")
    nfft = params.nfft
    step = params.step
    n_seg = 1 + (n - seg) // step

    starts = np.arange(n_seg) * step
    idx = starts[:, None] + np.arange(seg)[None, :]
    win = params.window.values(seg)
    scale = sample_rate_hz * np.sum(win ** 2)

    rows = x.reshape(-1, n)
    power = np.empty((rows.shape[0], nfft // 2 + 1))
    # one channel at a time: batched FFTs may round differently, and results
    # must not depend on how channels are grouped
    for r, row in enumerate(rows):
        segments = row[idx]
        segments = segments - segments.mean(axis=-1, keepdims=True)
        spec = np.fft.rfft(segments * win, n=nfft, axis=-1)
        power[r] = (spec.real ** 2 + spec.imag ** 2).mean(axis=0) / scale
    # one-sided: double everything but DC and (for even nfft) Nyquist
    if nfft % 2:
        power[:, 1:] *= 2
    else:
        power[:, 1:-1] *= 2
    power = power.reshape(x.shape[:-1] + (power.shape[-1],))
    freqs = np.fft.rfftfreq(nfft, d=1.0 / sample_rate_hz)
    return freqs, power


def welch_psd(epoch: Epoch, params: WelchParams = WelchParams()) -> Psd:
    freqs, power = welch(epoch.samples, epoch.sample_rate_hz, params)
    return Psd(freqs, np.atleast_2d(power))


def _band_mask(freqs: np.ndarray, band: Band) -> np.ndarray:
    df = freqs[1] - freqs[0]
    eps = 1e-9 * df
    if band.lo_hz < freqs[0] - eps or band.hi_hz > freqs[-1] + eps:
        raise BandOutOfRange(
            f"band {band.name!r} [{band.lo_hz}, {band.hi_hz}) outside grid "
            f"[{freqs[0]}, {freqs[-1]}] Hz"
        )
    # half-open [lo, hi) so bands sharing an edge never share a bin
    return (freqs >= band.lo_hz - eps) & (freqs < band.hi_hz - eps)


def band_power(psd: Psd, band: Band) -> np.ndarray:
    """Rectangular-rule band integral per channel over bins with lo <= f < hi."""
    mask = _band_mask(psd.frequencies_hz, band)
    return psd.power[..., mask].sum(axis=-1) * psd.df


def relative_band_power(psd: Psd, band: Band, total: Band = TOTAL) -> np.ndarray:
    """Band power as a fraction of ``total`` power, per channel."""
    num = band_power(psd, band)
    den = band_power(psd, total)
    if np.any(den <= 0):
        bad = np.flatnonzero(np.atleast_1d(den) <= 0)
        raise ZeroTotalPower(f"no power in {total.lo_hz}-{total.hi_hz} Hz on channel(s) {bad.tolist()}")
    return num / den
