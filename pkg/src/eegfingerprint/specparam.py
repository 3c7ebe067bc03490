"""Aperiodic (1/f) fit of power spectra in log-log space.

The model is a straight line in ``log10(power)`` versus ``log10(f)``::

    L(f) = offset - exponent * log10(f)

Peaks sit above the aperiodic background, so after an ordinary least-squares
pass the fit is repeated on the points lying at or under a low percentile of
the (positive-clipped) residuals. This is the robust "fixed" aperiodic mode of
spectral parameterization without the Gaussian peak model.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateRange, InsufficientPoints, NonpositiveFrequency

MIN_POINTS = 4


@dataclass(frozen=True)
class FitOptions:
    fit_lo_hz: float = 1.0
    fit_hi_hz: float = 45.0
    robust_percentile: float = 2.5
    max_refits: int = 1

    def __post_init__(self):
        if not 0 < self.fit_lo_hz < self.fit_hi_hz:
            raise ValueError(f"fit range must satisfy 0 < lo < hi, got [{self.fit_lo_hz}, {self.fit_hi_hz}]")
        if not 0 < self.robust_percentile <= 100:
            raise ValueError(f"robust_percentile must be in (0, 100], got {self.robust_percentile}")
        if self.max_refits < 0:
            raise ValueError(f"max_refits must be >= 0, got {self.max_refits}")


@dataclass(frozen=True, eq=False)
class AperiodicFit:
    """Fitted aperiodic parameters.

    ``exponent`` is positive for spectra that fall with frequency; the log-log
    slope is ``-exponent``.
    """

    offset: float
    exponent: float
    r_squared: float
    rmse: float
    n_points_used: int
    freqs_used: np.ndarray = field(repr=False, compare=False)

    @property
    def slope(self) -> float:
        return -self.exponent


def aperiodic_model(f_hz, offset: float, exponent: float):
    """log10 power of the fixed-mode aperiodic component at ``f_hz``."""
    f = np.asarray(f_hz, dtype=np.float64)
    if np.any(f <= 0):
        raise NonpositiveFrequency("aperiodic model is undefined for f <= 0")
    out = offset - exponent * np.log10(f)
    return float(out) if out.ndim == 0 else out


def _ols(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Intercept and slope of the least-squares line through (x, y)."""
    xm = x.mean()
    ym = y.mean()
    dx = x - xm
    sxx = np.dot(dx, dx)
    slope = np.dot(dx, y - ym) / sxx
    return ym - slope * xm, slope


def _quality(x: np.ndarray, y: np.ndarray, offset: float, exponent: float) -> tuple[float, float]:
    resid = y - (offset - exponent * x)
    ss_res = float(np.dot(resid, resid))
    rmse = float(np.sqrt(ss_res / len(y)))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot / len(y) < 1e-15:
        r2 = 1.0 if rmse < 1e-12 else 0.0
    else:
        r2 = float(np.clip(1.0 - ss_res / ss_tot, 0.0, 1.0))
    return r2, rmse


def _prepare(freqs, power, opts: FitOptions) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    freqs = np.asarray(freqs, dtype=np.float64)
    power = np.asarray(power, dtype=np.float64)
    if freqs.shape != power.shape or freqs.ndim != 1:
        raise ValueError(f"frequency and power series must be 1d and equal length, got {freqs.shape} and {power.shape}")
    in_range = (freqs >= opts.fit_lo_hz) & (freqs <= opts.fit_hi_hz) & (freqs > 0)
    keep = in_range & (power > 0) & np.isfinite(power)
    n = int(keep.sum())
    if n < MIN_POINTS:
        raise InsufficientPoints(
            f"{n} usable points in [{opts.fit_lo_hz}, {opts.fit_hi_hz}] Hz, need {MIN_POINTS}"
        )
    f = freqs[keep]
    if np.ptp(f) == 0:
        raise DegenerateRange("all frequencies in the fit range are equal")
    return f, np.log10(f), np.log10(power[keep])


def fit_aperiodic(freqs, power, opts: FitOptions = FitOptions()) -> AperiodicFit:
    """Robust fixed-mode aperiodic fit of one spectrum.

    Parameters
    ----------
    freqs, power : 1d arrays
        Frequency grid in Hz and linear power. Zero-power bins are ignored.
    opts : FitOptions

    Returns
    -------
    AperiodicFit
        Quality metrics refer to the points retained by the last refit.
    """
    f, x, y = _prepare(freqs, power, opts)
    offset, slope = _ols(x, y)
    used = np.ones(len(x), dtype=bool)

    for _ in range(opts.max_refits):
        resid = y - (offset + slope * x)
        flat = np.clip(resid, 0, None)
        thresh = np.percentile(flat, opts.robust_percentile)
        mask = flat <= thresh
        if mask.sum() < 2 or np.ptp(x[mask]) == 0:
            break
        offset, slope = _ols(x[mask], y[mask])
        used = mask

    exponent = -slope
    r2, rmse = _quality(x[used], y[used], offset, exponent)
    return AperiodicFit(
        offset=float(offset),
        exponent=float(exponent),
        r_squared=r2,
        rmse=rmse,
        n_points_used=int(used.sum()),
        freqs_used=f[used],
    )


def fit_quality(freqs, power, fit: AperiodicFit, opts: FitOptions = FitOptions()) -> tuple[float, float]:
    """(r_squared, rmse) of ``fit`` against log10 power at the fit's retained points."""
    f, x, y = _prepare(freqs, power, opts)
    keep = np.isin(f, fit.freqs_used)
    if keep.sum() != fit.n_points_used:
        raise ValueError("fit was not produced from this spectrum and range")
    return _quality(x[keep], y[keep], fit.offset, fit.exponent)


def fit_psd(freqs, power, opts: FitOptions = FitOptions()) -> tuple[np.ndarray, np.ndarray]:
    """Per-channel (offsets, exponents) for a (n_channels, n_freqs) power matrix."""
    power = np.atleast_2d(power)
    fits = [fit_aperiodic(freqs, row, opts) for row in power]
    return (
        np.array([ft.offset for ft in fits]),
        np.array([ft.exponent for ft in fits]),
    )
