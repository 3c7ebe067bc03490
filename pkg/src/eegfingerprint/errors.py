"""Exception hierarchy.

Every error raised on bad input derives from :class:`EEGFingerprintError`
and :class:`ValueError`, so callers can catch either. The CLI maps this
family to the "data error" exit code.
"""


class EEGFingerprintError(ValueError):
    """Base class for data/validation errors raised by this package."""


# EDF ingestion
class MalformedHeader(EEGFingerprintError):
    pass


class LengthMismatch(EEGFingerprintError):
    """Declared record layout disagrees with the number of bytes present."""


class DegenerateCalibration(EEGFingerprintError):
    pass


class UnsupportedSampleRate(EEGFingerprintError):
    """Signals in one file disagree on their sampling rate."""


class RangeOverflow(EEGFingerprintError):
    pass


class EmptyDataset(EEGFingerprintError):
    pass


# Spectral estimation
class RecordingTooShort(EEGFingerprintError):
    pass


class SegmentTooLong(EEGFingerprintError):
    pass


class BandOutOfRange(EEGFingerprintError):
    pass


class ZeroTotalPower(EEGFingerprintError):
    pass


# Aperiodic fitting
class NonpositiveFrequency(EEGFingerprintError):
    pass


class InsufficientPoints(EEGFingerprintError):
    pass


class DegenerateRange(EEGFingerprintError):
    pass


# Biometric evaluation
class KindMismatch(EEGFingerprintError):
    pass


class VectorLengthMismatch(EEGFingerprintError):
    pass


class IdentityMismatch(EEGFingerprintError):
    pass


class TooFewSubjects(EEGFingerprintError):
    pass


class TooFewEpochs(EEGFingerprintError):
    pass


class EmptyScores(EEGFingerprintError):
    pass
