"""EDF/EDF+ reading and writing, and PhysioNet eegmmidb-style dataset discovery.

Only the plain 16-bit EDF data layout is handled: a 256-byte global header,
256 bytes of per-signal headers for each signal, then data records holding
little-endian int16 samples with signals concatenated inside each record.
"""

from __future__ import annotations

import enum
import logging
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    DegenerateCalibration,
    EmptyDataset,
    LengthMismatch,
    MalformedHeader,
    RangeOverflow,
    UnsupportedSampleRate,
)

logger = logging.getLogger(__name__)

ANNOTATION_LABEL = "EDF Annotations"

# (name, width) of the per-signal header fields, in file order
_SIGNAL_FIELDS = (
    ("label", 16),
    ("transducer", 80),
    ("unit", 8),
    ("physical_min", 8),
    ("physical_max", 8),
    ("digital_min", 8),
    ("digital_max", 8),
    ("prefilter", 80),
    ("n_samples", 8),
    ("reserved", 32),
)


class Condition(str, enum.Enum):
    """Resting-state condition; the value is the CLI spelling."""

    EYES_OPEN = "open"
    EYES_CLOSED = "closed"

    @property
    def run(self) -> str:
        # eegmmidb baseline runs: R01 eyes open, R02 eyes closed
        return "R01" if self is Condition.EYES_OPEN else "R02"

    @classmethod
    def parse(cls, value: "str | Condition") -> "Condition":
        if isinstance(value, Condition):
            return value
        key = str(value).strip().lower()
        aliases = {
            "open": cls.EYES_OPEN, "eyesopen": cls.EYES_OPEN, "eyes_open": cls.EYES_OPEN,
            "eo": cls.EYES_OPEN, "r01": cls.EYES_OPEN,
            "closed": cls.EYES_CLOSED, "eyesclosed": cls.EYES_CLOSED,
            "eyes_closed": cls.EYES_CLOSED, "ec": cls.EYES_CLOSED, "r02": cls.EYES_CLOSED,
        }
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown condition {value!r}; expected 'open' or 'closed'") from None


@dataclass(frozen=True)
class ChannelCalibration:
    """Linear map between stored int16 values and physical units."""

    physical_min: float
    physical_max: float
    digital_min: int = -32768
    digital_max: int = 32767
    unit_label: str = "uV"

    def __post_init__(self):
        if self.digital_max == self.digital_min:
            raise DegenerateCalibration("digital_max equals digital_min")
        if self.physical_max == self.physical_min:
            raise DegenerateCalibration("physical_max equals physical_min")

    @property
    def gain(self) -> float:
        return (self.physical_max - self.physical_min) / (self.digital_max - self.digital_min)

    def to_physical(self, digital: np.ndarray) -> np.ndarray:
        digital = np.asarray(digital, dtype=np.float64)
        span = self.physical_max - self.physical_min
        return (digital - self.digital_min) * span / (self.digital_max - self.digital_min) + self.physical_min

    def to_digital(self, physical: np.ndarray) -> np.ndarray:
        physical = np.asarray(physical, dtype=np.float64)
        scaled = (physical - self.physical_min) / self.gain + self.digital_min
        lo, hi = sorted((self.digital_min, self.digital_max))
        return np.clip(np.rint(scaled), lo, hi).astype(np.int16)

    @classmethod
    def symmetric(cls, max_abs: float, unit_label: str = "uV") -> "ChannelCalibration":
        """Full int16 range mapped onto ``[-max_abs, max_abs]``."""
        return cls(-float(max_abs), float(max_abs), unit_label=unit_label)


@dataclass(eq=False)
class Recording:
    """Multi-channel recording in physical units.

    ``samples`` has shape ``(n_channels, n_samples)``.
    """

    subject_id: str
    condition: Condition | None
    sample_rate_hz: float
    channel_labels: list[str]
    samples: np.ndarray
    calibrations: list[ChannelCalibration] | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.samples = np.atleast_2d(np.asarray(self.samples, dtype=np.float64))
        if self.samples.shape[0] < 1:
            raise ValueError("recording needs at least one channel")
        if not self.sample_rate_hz > 0:
            raise ValueError(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")
        if len(self.channel_labels) != self.samples.shape[0]:
            raise ValueError(
                f"{len(self.channel_labels)} labels for {self.samples.shape[0]} channels"
            )
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("recording contains NaN or Inf samples")
        if self.condition is not None:
            self.condition = Condition.parse(self.condition)

    @property
    def n_channels(self) -> int:
        return self.samples.shape[0]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]

    @property
    def duration_s(self) -> float:
        return self.n_samples / self.sample_rate_hz


def _ascii(raw: bytes, what: str, strict: bool = True) -> str:
    if not strict:
        # free-text fields; some writers leak latin-1 into patient/recording ids
        return raw.decode("ascii", errors="replace")
    try:
        return raw.decode("ascii")
    except UnicodeDecodeError:
        raise MalformedHeader(f"non-ASCII bytes in header field {what}") from None


def _number(raw: bytes, what: str, kind=float):
    text = _ascii(raw, what).strip()
    try:
        value = float(text)
    except ValueError:
        raise MalformedHeader(f"field {what} is not numeric: {text!r}") from None
    if not math.isfinite(value):
        raise MalformedHeader(f"field {what} is not finite: {text!r}")
    if kind is int:
        # some writers emit integral fields as "160.0"
        if not value.is_integer():
            raise MalformedHeader(f"field {what} is not an integer: {text!r}")
        return int(value)
    return value


def _read_header(data: bytes) -> dict:
    if len(data) < 256:
        raise MalformedHeader(f"file is {len(data)} bytes, shorter than the 256-byte header")
    if data[:8] != b"0       ":
        raise MalformedHeader(f"bad version field {data[:8]!r}")
    header = {
        "patient": _ascii(data[8:88], "patient", strict=False).rstrip(),
        "recording": _ascii(data[88:168], "recording", strict=False).rstrip(),
        "header_bytes": _number(data[184:192], "header bytes", int),
        "reserved": _ascii(data[192:236], "reserved", strict=False).rstrip(),
        "n_records": _number(data[236:244], "number of records", int),
        "record_duration": _number(data[244:252], "record duration"),
        "n_signals": _number(data[252:256], "number of signals", int),
    }
    ns = header["n_signals"]
    if ns < 1:
        raise MalformedHeader(f"number of signals must be >= 1, got {ns}")
    if header["header_bytes"] != 256 * (ns + 1):
        raise MalformedHeader(
            f"header size {header['header_bytes']} inconsistent with {ns} signals"
        )
    if len(data) < header["header_bytes"]:
        raise MalformedHeader("file ends inside the signal headers")
    if header["record_duration"] <= 0:
        raise MalformedHeader(f"record duration must be positive, got {header['record_duration']}")

    signals = {name: [] for name, _ in _SIGNAL_FIELDS}
    pos = 256
    for name, width in _SIGNAL_FIELDS:
        for i in range(ns):
            raw = data[pos:pos + width]
            pos += width
            what = f"{name}[{i}]"
            if name in ("physical_min", "physical_max"):
                signals[name].append(_number(raw, what))
            elif name in ("digital_min", "digital_max", "n_samples"):
                signals[name].append(_number(raw, what, int))
            else:
                signals[name].append(_ascii(raw, what, strict=False).strip())
    if any(n < 1 for n in signals["n_samples"]):
        raise MalformedHeader("every signal needs at least one sample per record")
    header["signals"] = signals
    return header


def parse_edf(data: bytes, subject_id: str = "", condition: Condition | None = None) -> Recording:
    """Decode an EDF/EDF+ byte stream into a :class:`Recording`.

    Annotation signals are dropped. Stored integers are mapped to physical
    units with each signal's header calibration.

    Raises
    ------
    MalformedHeader, LengthMismatch, DegenerateCalibration, UnsupportedSampleRate
    """
    data = bytes(data)
    header = _read_header(data)
    sig = header["signals"]
    ns = header["n_signals"]

    samples_per_record = np.asarray(sig["n_samples"], dtype=np.int64)
    record_bytes = int(samples_per_record.sum()) * 2
    body = len(data) - header["header_bytes"]
    n_records = header["n_records"]
    if n_records == -1:
        # allowed by the standard while a recording is still being written
        if body % record_bytes:
            raise LengthMismatch(f"{body} data bytes is not a whole number of {record_bytes}-byte records")
        n_records = body // record_bytes
    elif n_records < 1:
        raise MalformedHeader(f"number of records must be positive, got {n_records}")
    if body != n_records * record_bytes:
        raise LengthMismatch(
            f"header declares {n_records} records of {record_bytes} bytes "
            f"({n_records * record_bytes} bytes) but {body} data bytes are present"
        )

    keep = [i for i in range(ns) if sig["label"][i] != ANNOTATION_LABEL]
    if not keep:
        raise MalformedHeader("file holds no data signals, only annotations")

    calibrations = []
    for i in keep:
        try:
            calibrations.append(ChannelCalibration(
                sig["physical_min"][i], sig["physical_max"][i],
                sig["digital_min"][i], sig["digital_max"][i], sig["unit"][i],
            ))
        except DegenerateCalibration as exc:
            raise DegenerateCalibration(f"signal {i} ({sig['label'][i]!r}): {exc}") from None

    rates = {int(samples_per_record[i]) for i in keep}
    if len(rates) != 1:
        raise UnsupportedSampleRate(f"signals disagree on samples per record: {sorted(rates)}")
    per_record = rates.pop()
    sample_rate = per_record / header["record_duration"]

    raw = np.frombuffer(data, dtype="<i2", offset=header["header_bytes"])
    raw = raw.reshape(n_records, record_bytes // 2)
    starts = np.concatenate([[0], np.cumsum(samples_per_record)])
    out = np.empty((len(keep), n_records * per_record), dtype=np.float64)
    for row, i in enumerate(keep):
        digital = raw[:, starts[i]:starts[i + 1]].reshape(-1)
        out[row] = calibrations[row].to_physical(digital)

    return Recording(
        subject_id=subject_id,
        condition=condition,
        sample_rate_hz=sample_rate,
        channel_labels=[sig["label"][i] for i in keep],
        samples=out,
        calibrations=calibrations,
    )


def read_edf(path, subject_id: str | None = None, condition: Condition | None = None) -> Recording:
    path = Path(path)
    return parse_edf(path.read_bytes(), subject_id=subject_id or path.stem, condition=condition)


def _field(value, width: int) -> bytes:
    text = str(value)
    if len(text) > width:
        raise ValueError(f"{text!r} does not fit in a {width}-character EDF field")
    return text.ljust(width).encode("ascii")


def _format_number(value: float, width: int = 8) -> str:
    if float(value).is_integer() and len(str(int(value))) <= width:
        return str(int(value))
    for digits in range(width, 0, -1):
        text = f"{value:.{digits}g}"
        if len(text) <= width:
            return text
    raise ValueError(f"{value} cannot be written in {width} characters")


def _record_layout(n_samples: int, sample_rate_hz: float) -> tuple[int, float]:
    """Pick (samples per record, record duration) so records tile the data exactly."""
    if float(sample_rate_hz).is_integer():
        per_record = math.gcd(n_samples, int(sample_rate_hz))
        return per_record, per_record / sample_rate_hz
    return n_samples, n_samples / sample_rate_hz


def write_edf(recording: Recording, calibrations=None) -> bytes:
    """Encode a recording as a 16-bit EDF byte stream.

    Parameters
    ----------
    recording : Recording
    calibrations : list of ChannelCalibration, optional
        One per channel. Defaults to a symmetric full-range calibration per
        channel sized to the channel's largest absolute value.

    Raises
    ------
    RangeOverflow
        If a sample lies outside its channel's physical range.
    """
    x = recording.samples
    n_ch, n_samples = x.shape
    if calibrations is None:
        calibrations = default_calibrations(recording)
    calibrations = list(calibrations)
    if len(calibrations) != n_ch:
        raise ValueError(f"{len(calibrations)} calibrations for {n_ch} channels")

    digital = np.empty((n_ch, n_samples), dtype=np.int16)
    written = []
    for i, cal in enumerate(calibrations):
        # quantize against the limits as they will read back from the header
        stored = ChannelCalibration(
            float(_format_number(cal.physical_min)), float(_format_number(cal.physical_max)),
            cal.digital_min, cal.digital_max, cal.unit_label,
        )
        lo, hi = sorted((stored.physical_min, stored.physical_max))
        if x[i].size and (x[i].min() < lo or x[i].max() > hi):
            raise RangeOverflow(
                f"channel {i} ({recording.channel_labels[i]!r}) spans "
                f"[{x[i].min()}, {x[i].max()}], outside physical range [{lo}, {hi}] "
                f"(as stored in the 8-character header fields)"
            )
        written.append(stored)
        digital[i] = stored.to_digital(x[i])

    per_record, duration = _record_layout(n_samples, recording.sample_rate_hz)
    n_records = n_samples // per_record

    head = b"".join([
        _field("0", 8),
        _field(recording.subject_id or "X", 80),
        _field("Startdate X", 80),
        _field("01.01.00", 8),
        _field("00.00.00", 8),
        _field(256 * (n_ch + 1), 8),
        _field("", 44),
        _field(n_records, 8),
        _field(_format_number(duration), 8),
        _field(n_ch, 4),
    ])
    per_signal = {
        "label": [lab[:16] for lab in recording.channel_labels],
        "transducer": [""] * n_ch,
        "unit": [c.unit_label for c in written],
        "physical_min": [_format_number(c.physical_min) for c in written],
        "physical_max": [_format_number(c.physical_max) for c in written],
        "digital_min": [c.digital_min for c in written],
        "digital_max": [c.digital_max for c in written],
        "prefilter": [""] * n_ch,
        "n_samples": [per_record] * n_ch,
        "reserved": [""] * n_ch,
    }
    for name, width in _SIGNAL_FIELDS:
        head += b"".join(_field(v, width) for v in per_signal[name])

    # (n_ch, n_records, per_record) -> records with channels concatenated
    body = digital.reshape(n_ch, n_records, per_record).transpose(1, 0, 2)
    return head + body.astype("<i2").tobytes()


def default_calibrations(recording: Recording, headroom: float = 1.0) -> list[ChannelCalibration]:
    """Symmetric per-channel calibrations that just cover each channel's range.

    Physical limits are rounded up to what the 8-character header field can
    hold, so the written limits still contain every sample.
    """
    cals = []
    for row in recording.samples:
        peak = float(np.max(np.abs(row))) * headroom if row.size else 0.0
        peak = peak if peak > 0 else 1.0
        # the header keeps 8 characters; the negative limit is the tighter one
        target = peak
        while -float(_format_number(-target)) < peak:
            target *= 1 + 1e-6
        cals.append(ChannelCalibration.symmetric(-float(_format_number(-target))))
    return cals


_SUBJECT_DIR = re.compile(r"^S\d{3}$")


def load_dataset(root_dir, condition, skipped: list | None = None) -> list[Recording]:
    """Load one baseline run per subject from ``<root>/S###/S###R0#.edf``.

    Subjects whose file is missing or unreadable are logged and skipped; when
    ``skipped`` is a list, ``(subject_id, reason)`` pairs are appended to it.

    Raises
    ------
    EmptyDataset
        If no subject could be loaded.
    """
    root = Path(root_dir)
    condition = Condition.parse(condition)
    if not root.is_dir():
        raise EmptyDataset(f"dataset root {root} is not a directory")

    recordings = []
    for subject_dir in sorted(p for p in root.iterdir() if p.is_dir() and _SUBJECT_DIR.match(p.name)):
        subject = subject_dir.name
        path = subject_dir / f"{subject}{condition.run}.edf"
        try:
            rec = read_edf(path, subject_id=subject, condition=condition)
        except (OSError, ValueError) as exc:
            reason = f"{type(exc).__name__}: {exc}"
            logger.warning("skipping %s: %s", subject, reason)
            if skipped is not None:
                skipped.append((subject, reason))
            continue
        recordings.append(rec)

    if not recordings:
        raise EmptyDataset(f"no {condition.value} recordings found under {root}")
    return recordings


def export_cohort(recordings, root_dir) -> list[Path]:
    """Write recordings into the ``<root>/S###/S###R0#.edf`` layout."""
    root = Path(root_dir)
    paths = []
    for rec in recordings:
        if rec.condition is None:
            raise ValueError(f"recording {rec.subject_id!r} has no condition; cannot pick a run name")
        folder = root / rec.subject_id
        folder.mkdir(parents=True, exist_ok=True)
        path = folder / f"{rec.subject_id}{rec.condition.run}.edf"
        path.write_bytes(write_edf(rec))
        paths.append(path)
    return paths
