"""Synthetic EEG-like cohorts with known aperiodic parameters.

Noise is synthesized by random-phase spectral shaping: every positive FFT bin
gets the amplitude that yields the target one-sided density
``P(f) = 10**offset * f**-exponent`` (optionally times a log-Gaussian peak) and
a uniform random phase. The expected Welch PSD therefore matches the target
and fitted offsets/exponents are directly comparable to the generating ones.

Seeding: subject ``s`` (0-based) of a cohort draws from
``numpy.random.default_rng(SeedSequence([seed, s]))``. This mapping is part of
the output contract; changing it changes every cohort.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .edf_io import Condition, Recording


@dataclass(frozen=True)
class PeakSpec:
    center_hz: float
    log_height: float
    width_hz: float

    def __post_init__(self):
        if self.center_hz <= 0 or self.width_hz <= 0:
            raise ValueError("peak center and width must be positive")


@dataclass(frozen=True)
class SynthSpec:
    n_subjects: int = 10
    n_channels: int = 8
    n_epochs: int = 5
    epoch_len_s: float = 12.0
    sample_rate_hz: float = 160.0
    exponent_range: tuple[float, float] = (1.0, 2.0)
    offset_range: tuple[float, float] = (0.0, 1.0)
    within_subject_jitter: float = 0.05
    peak_spec: PeakSpec | None = None
    seed: int = 0
    condition: Condition = Condition.EYES_CLOSED

    def __post_init__(self):
        if min(self.n_subjects, self.n_channels, self.n_epochs) < 1:
            raise ValueError("n_subjects, n_channels and n_epochs must be >= 1")
        if self.epoch_len_s <= 0 or self.sample_rate_hz <= 0:
            raise ValueError("epoch_len_s and sample_rate_hz must be positive")
        for name in ("exponent_range", "offset_range"):
            lo, hi = getattr(self, name)
            # lo == hi is allowed: it pins the parameter for every subject
            if not lo <= hi:
                raise ValueError(f"{name} must satisfy lo <= hi, got {(lo, hi)}")
            object.__setattr__(self, name, (float(lo), float(hi)))
        if self.exponent_range[0] < 0:
            raise ValueError("exponents must be >= 0")
        if self.within_subject_jitter < 0:
            raise ValueError("within_subject_jitter must be >= 0")
        if isinstance(self.peak_spec, dict):
            object.__setattr__(self, "peak_spec", PeakSpec(**self.peak_spec))
        elif isinstance(self.peak_spec, (list, tuple)):
            object.__setattr__(self, "peak_spec", PeakSpec(*self.peak_spec))
        object.__setattr__(self, "condition", Condition.parse(self.condition))
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    @property
    def epoch_samples(self) -> int:
        return int(round(self.epoch_len_s * self.sample_rate_hz))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["condition"] = self.condition.value
        d["exponent_range"] = list(self.exponent_range)
        d["offset_range"] = list(self.offset_range)
        return d


def _shaped_noise(n_samples, sample_rate_hz, log10_psd, rng) -> np.ndarray:
    """Real series whose one-sided PSD is ``10**log10_psd(f)`` for f > 0."""
    if n_samples < 2:
        raise ValueError("n_samples must be >= 2")
    freqs = np.fft.rfftfreq(n_samples, d=1.0 / sample_rate_hz)
    df = sample_rate_hz / n_samples
    density = np.zeros_like(freqs)
    density[1:] = 10.0 ** log10_psd(freqs[1:])
    # a cosine of amplitude A carries A**2/2 of power inside one bin of width df
    amp = np.sqrt(2.0 * density * df)
    phases = rng.uniform(0.0, 2.0 * np.pi, size=freqs.size)
    spectrum = amp * np.exp(1j * phases) * (n_samples / 2.0)
    if n_samples % 2 == 0:
        # the Nyquist bin is real: a +/-1 alternating sequence of power A**2/2
        spectrum[-1] = np.sqrt(density[-1] * df) * n_samples * (1.0 if np.cos(phases[-1]) >= 0 else -1.0)
    spectrum[0] = 0.0
    return np.fft.irfft(spectrum, n=n_samples)


def _log10_shape(offset, exponent, peak: PeakSpec | None):
    def shape(f):
        out = offset - exponent * np.log10(f)
        if peak is not None:
            out = out + peak.log_height * np.exp(-((f - peak.center_hz) ** 2) / (2.0 * peak.width_hz ** 2))
        return out
    return shape


def power_law_noise(n_samples: int, sample_rate_hz: float, exponent: float, offset: float = 0.0,
                    seed=None, peak: PeakSpec | None = None) -> np.ndarray:
    """Random-phase noise with one-sided PSD ``10**offset * f**-exponent``.

    ``seed`` may be an int, a ``SeedSequence`` or a ``Generator``.
    """
    if exponent < 0:
        raise ValueError(f"exponent must be >= 0, got {exponent}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return _shaped_noise(n_samples, sample_rate_hz, _log10_shape(offset, exponent, peak), rng)


def add_oscillation(samples, sample_rate_hz: float, center_hz: float, amplitude: float,
                    phase: float = 0.0) -> np.ndarray:
    """Return ``samples + amplitude * sin(2 pi center_hz t + phase)``."""
    samples = np.asarray(samples, dtype=np.float64)
    if not 0 < center_hz < sample_rate_hz / 2:
        raise ValueError(f"center_hz must lie in (0, {sample_rate_hz / 2}), got {center_hz}")
    t = np.arange(samples.shape[-1]) / sample_rate_hz
    return samples + amplitude * np.sin(2.0 * np.pi * center_hz * t + phase)


@dataclass
class SubjectTruth:
    """Generating parameters of one synthetic subject, per epoch and channel."""

    subject_id: str
    offsets: np.ndarray = field(repr=False)    # (n_epochs, n_channels)
    exponents: np.ndarray = field(repr=False)  # (n_epochs, n_channels)


def subject_rng(seed: int, subject_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(subject_index)]))


def synth_subject(spec: SynthSpec, subject_index: int) -> tuple[Recording, SubjectTruth]:
    rng = subject_rng(spec.seed, subject_index)
    n_ch, n_ep = spec.n_channels, spec.n_epochs
    base_offset = rng.uniform(*spec.offset_range, size=n_ch)
    base_exponent = rng.uniform(*spec.exponent_range, size=n_ch)
    jit = spec.within_subject_jitter
    offsets = base_offset + jit * rng.standard_normal((n_ep, n_ch))
    exponents = np.clip(base_exponent + jit * rng.standard_normal((n_ep, n_ch)), 0.0, None)

    n = spec.epoch_samples
    data = np.empty((n_ch, n_ep * n))
    for e in range(n_ep):
        for c in range(n_ch):
            data[c, e * n:(e + 1) * n] = _shaped_noise(
                n, spec.sample_rate_hz,
                _log10_shape(offsets[e, c], exponents[e, c], spec.peak_spec), rng,
            )
    subject_id = f"S{subject_index + 1:03d}"
    rec = Recording(
        subject_id=subject_id,
        condition=spec.condition,
        sample_rate_hz=spec.sample_rate_hz,
        channel_labels=[f"Ch{c + 1}" for c in range(n_ch)],
        samples=data,
    )
    return rec, SubjectTruth(subject_id, offsets, exponents)


def synth_cohort(spec: SynthSpec, return_truth: bool = False):
    """One :class:`Recording` per subject, epochs laid end to end.

    Per-channel (offset, exponent) are drawn once per subject from the SynthSpec
    ranges, then perturbed per epoch by Gaussian jitter (exponents clamped at 0).
    """
    pairs = [synth_subject(spec, s) for s in range(spec.n_subjects)]
    recordings = [p[0] for p in pairs]
    if return_truth:
        return recordings, [p[1] for p in pairs]
    return recordings
