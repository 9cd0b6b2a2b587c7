"""Model evaluation: regression R, divergence, residual correlation checks.

The accept/reject gate combines the Pearson R between outputs and targets,
the maximum percent divergence in price units, and an MSE ceiling.  Residual
whiteness is probed with normalized auto- and cross-correlations against the
95% white-noise band +/- 1.96 / sqrt(n).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import UndefinedStatisticError, ValidationError

Z_95 = 1.96


def confidence_bound(n: int) -> float:
    """Half-width of the 95% white-noise band for n observations."""
    return Z_95 / np.sqrt(n)


def regression_r(outputs, targets) -> float:
    """Pearson correlation coefficient between outputs and targets."""
    outputs = np.asarray(outputs, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if outputs.shape != targets.shape or outputs.size == 0:
        raise ValidationError("outputs and targets must be equal-length, non-empty")
    o = outputs - outputs.mean()
    t = targets - targets.mean()
    denom = np.sqrt((o @ o) * (t @ t))
    if denom == 0.0:
        raise UndefinedStatisticError("zero variance: R undefined")
    return float((o @ t) / denom)


def max_divergence(outputs, targets) -> float:
    """max |output - target| / |target| * 100, in the caller's price units."""
    outputs = np.asarray(outputs, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if outputs.shape != targets.shape or outputs.size == 0:
        raise ValidationError("outputs and targets must be equal-length, non-empty")
    if np.any(targets == 0.0):
        raise UndefinedStatisticError("zero target value: divergence undefined")
    return float(np.max(np.abs(outputs - targets) / np.abs(targets)) * 100.0)


def error_autocorrelation(errors, max_lag: int):
    """Normalized autocorrelation rho(0..max_lag) and the 95% band half-width.

    rho(0) = 1 by construction.
    """
    errors = np.asarray(errors, dtype=float)
    n = errors.size
    if max_lag < 1 or n <= max_lag:
        raise ValidationError("need series longer than max_lag >= 1")
    e = errors - errors.mean()
    denom = float(e @ e)
    if denom == 0.0:
        raise UndefinedStatisticError("constant error series: autocorrelation undefined")
    rho = np.empty(max_lag + 1)
    for lag in range(max_lag + 1):
        rho[lag] = float(e[lag:] @ e[:n - lag]) / denom if lag else 1.0
    return rho, confidence_bound(n)


def input_error_crosscorrelation(exo_channel, errors, max_lag: int):
    """Normalized cross-correlation for lags -max_lag..+max_lag plus the band.

    Lag L correlates error(k) with input(k - L); normalization is by the
    product of the two standard deviations, so a copied series gives 1 at
    lag 0.
    """
    x = np.asarray(exo_channel, dtype=float)
    e = np.asarray(errors, dtype=float)
    if x.shape != e.shape:
        raise ValidationError("channel and errors must be equal length")
    n = e.size
    if max_lag < 1 or n <= max_lag:
        raise ValidationError("need series longer than max_lag >= 1")
    xc = x - x.mean()
    ec = e - e.mean()
    sx = float(np.sqrt(xc @ xc))
    se = float(np.sqrt(ec @ ec))
    if sx == 0.0 or se == 0.0:
        raise UndefinedStatisticError("zero variance: cross-correlation undefined")
    lags = np.arange(-max_lag, max_lag + 1)
    rho = np.empty(lags.size)
    for i, lag in enumerate(lags):
        if lag >= 0:
            rho[i] = float(ec[lag:] @ xc[:n - lag]) / (sx * se)
        else:
            rho[i] = float(ec[:n + lag] @ xc[-lag:]) / (sx * se)
    return lags, rho, confidence_bound(n)


@dataclass(frozen=True)
class VerdictThresholds:
    r_min: float = 0.99
    divergence_max_pct: float = 10.0
    mse_max: float = np.inf


def acceptance_verdict(r_value: float, max_divergence_pct: float, mse: float,
                       thresholds: VerdictThresholds = VerdictThresholds()):
    """(accepted, reasons): reasons list every violated criterion."""
    reasons = []
    if r_value < thresholds.r_min:
        reasons.append(f"R {r_value:.6g} < {thresholds.r_min}")
    if max_divergence_pct > thresholds.divergence_max_pct:
        reasons.append(
            f"max divergence {max_divergence_pct:.4g}% > {thresholds.divergence_max_pct}%")
    if mse > thresholds.mse_max:
        reasons.append(f"MSE {mse:.6g} > {thresholds.mse_max}")
    return (not reasons), reasons


@dataclass
class DiagnosticsReport:
    mse: float
    msereg: float
    r_value: float
    max_divergence_pct: float
    autocorr: np.ndarray = field(repr=False)
    autocorr_bound: float = 0.0
    xcorr: dict = field(repr=False, default_factory=dict)  # channel -> (lags, rho)
    xcorr_bound: float = 0.0
    accepted: bool = False
    reasons: list = field(default_factory=list)

    @property
    def xcorr_within_bounds(self) -> bool:
        return all(np.all(np.abs(rho) <= self.xcorr_bound)
                   for _, rho in self.xcorr.values())

    def to_dict(self) -> dict:
        return {
            "mse": self.mse,
            "msereg": self.msereg,
            "r_value": self.r_value,
            "max_divergence_pct": self.max_divergence_pct,
            "autocorr": list(self.autocorr),
            "autocorr_bound": self.autocorr_bound,
            "xcorr": {ch: {"lags": [int(l) for l in lags], "rho": list(rho)}
                      for ch, (lags, rho) in self.xcorr.items()},
            "xcorr_bound": self.xcorr_bound,
            "xcorr_within_bounds": self.xcorr_within_bounds,
            "accepted": self.accepted,
            "reasons": self.reasons,
        }


def diagnose(outputs_price, targets_price, errors_norm, exo_channels_norm,
             weights=None, xi=1.0, max_lag=20,
             thresholds: VerdictThresholds = VerdictThresholds()) -> DiagnosticsReport:
    """Full report: metrics in price units, correlations on normalized errors.

    exo_channels_norm maps channel name -> normalized series aligned with
    errors_norm.  max_lag is clamped to the available series length.
    """
    outputs_price = np.asarray(outputs_price, dtype=float)
    targets_price = np.asarray(targets_price, dtype=float)
    errors_norm = np.asarray(errors_norm, dtype=float)
    mse = float(np.mean(errors_norm ** 2))
    if weights is not None and xi < 1.0:
        from .training import msereg as _msereg
        reg = _msereg(errors_norm, weights, xi)
    else:
        reg = mse
    r = regression_r(outputs_price, targets_price)
    div = max_divergence(outputs_price, targets_price)

    lag = min(max_lag, errors_norm.size - 1)
    ac, ac_bound = error_autocorrelation(errors_norm, lag)
    xcorr = {}
    xc_bound = ac_bound
    for ch, series in exo_channels_norm.items():
        lags, rho, xc_bound = input_error_crosscorrelation(series, errors_norm, lag)
        xcorr[ch] = (lags, rho)

    accepted, reasons = acceptance_verdict(r, div, mse, thresholds)
    return DiagnosticsReport(
        mse=mse, msereg=reg, r_value=r, max_divergence_pct=div,
        autocorr=ac, autocorr_bound=ac_bound,
        xcorr=xcorr, xcorr_bound=xc_bound,
        accepted=accepted, reasons=reasons,
    )
