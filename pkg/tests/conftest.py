import numpy as np
import pytest

ACCEPTANCE_RESULTS = {}


def craft_edf(signals, n_records, record_duration=1.0, version=b"0       ",
              header_bytes=None, n_records_field=None, extra=b""):
    """Hand-assemble an EDF byte stream without using the package writer.

    ``signals`` is a list of dicts with keys label, pmin, pmax, dmin, dmax,
    n (samples per record) and data (int array of length n * n_records).
    """
    ns = len(signals)

    def fld(v, w):
        return str(v).ljust(w)[:w].encode("ascii")

    head = version
    head += fld("patient", 80) + fld("recording", 80) + fld("01.01.00", 8) + fld("00.00.00", 8)
    head += fld(header_bytes if header_bytes is not None else 256 * (ns + 1), 8)
    head += fld("EDF+C", 44)
    head += fld(n_records if n_records_field is None else n_records_field, 8)
    head += fld(record_duration, 8) + fld(ns, 4)
    for key, width in (("label", 16), ("transducer", 80), ("unit", 8), ("pmin", 8), ("pmax", 8),
                       ("dmin", 8), ("dmax", 8), ("prefilter", 80), ("n", 8), ("reserved", 32)):
        for s in signals:
            head += fld(s.get(key, "uV" if key == "unit" else ""), width)
    body = b""
    for r in range(n_records):
        for s in signals:
            chunk = np.asarray(s["data"][r * s["n"]:(r + 1) * s["n"]], dtype="<i2")
            body += chunk.tobytes()
    return head + body + extra


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS):
        status, detail = ACCEPTANCE_RESULTS[key]
        terminalreporter.write_line(f"criterion {key}: {status:4s}  {detail}")
