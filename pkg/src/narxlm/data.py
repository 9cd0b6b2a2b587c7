"""OHLCV ingestion, channel normalization, and delay-shifted dataset preparation.

The raw series is a set of named daily channels (open/high/low/volume plus the
close target).  Supervised samples are built by sliding tapped delay lines over
the series: each sample pairs lagged exogenous values and lagged targets with
the current target.
"""

from __future__ import annotations

import csv
import datetime as _dt
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DataFormatError,
    InsufficientDataError,
    ValidationError,
)

CHANNELS = ("open", "high", "low", "volume", "close", "adj_close")
DEFAULT_EXO_CHANNELS = ("open", "high", "low", "volume")
DEFAULT_TARGET_CHANNEL = "close"

# CSV header aliases, lower-cased and stripped of spaces/underscores
_COLUMN_ALIASES = {
    "date": "date",
    "timestep": "date",
    "open": "open",
    "high": "high",
    "low": "low",
    "close": "close",
    "volume": "volume",
    "adjclose": "adj_close",
    "adjustedclose": "adj_close",
}

_REQUIRED = ("date", "open", "high", "low", "close", "volume")


def parse_date(token: str) -> int:
    """Parse a date cell to an integer day index.

    Plain integers pass through; ISO-8601 dates map to their proleptic
    Gregorian ordinal so consecutive calendar days are consecutive integers.
    """
    token = token.strip()
    try:
        return int(token)
    except ValueError:
        pass
    try:
        return _dt.date.fromisoformat(token).toordinal()
    except ValueError as exc:
        raise DataFormatError(f"unparseable date {token!r}") from exc


@dataclass(frozen=True)
class TimeSeriesFrame:
    """Daily OHLCV rows, column-major as float arrays keyed by channel name."""

    timesteps: np.ndarray
    open: np.ndarray
    high: np.ndarray
    low: np.ndarray
    volume: np.ndarray
    close: np.ndarray
    adj_close: np.ndarray

    def __post_init__(self):
        n = len(self.timesteps)
        if n < 1:
            raise ValidationError("frame must contain at least one row")
        for name in CHANNELS:
            if len(getattr(self, name)) != n:
                raise ValidationError(f"channel {name!r} length mismatch")
        if n > 1 and not np.all(np.diff(self.timesteps) > 0):
            raise ValidationError("timesteps must be strictly increasing")

    def validate_prices(self) -> "TimeSeriesFrame":
        """Check raw-price invariants; normalized frames need not satisfy them."""
        if np.any(self.volume < 0):
            row = int(np.argmax(self.volume < 0))
            raise ValidationError(f"negative volume at row {row}")
        bad = self.high < self.low
        if np.any(bad):
            row = int(np.argmax(bad))
            raise ValidationError(f"high < low at row {row}")
        return self

    def __len__(self) -> int:
        return len(self.timesteps)

    def channel(self, name: str) -> np.ndarray:
        if name not in CHANNELS:
            raise KeyError(f"unknown channel {name!r}")
        return getattr(self, name)

    def slice(self, start: int, stop: int) -> "TimeSeriesFrame":
        return TimeSeriesFrame(
            timesteps=self.timesteps[start:stop],
            **{c: getattr(self, c)[start:stop] for c in CHANNELS},
        )

    def restrict(self, t_from: int | None = None, t_to: int | None = None) -> "TimeSeriesFrame":
        """Rows with t_from <= timestep <= t_to (inclusive ends, None = open)."""
        mask = np.ones(len(self), dtype=bool)
        if t_from is not None:
            mask &= self.timesteps >= t_from
        if t_to is not None:
            mask &= self.timesteps <= t_to
        if not mask.any():
            raise InsufficientDataError("date range selects no rows")
        idx = np.flatnonzero(mask)
        return self.slice(int(idx[0]), int(idx[-1]) + 1)


def frame_from_columns(timesteps, open, high, low, volume, close, adj_close=None):
    """Build a frame from plain sequences; adj_close defaults to close."""
    close = np.asarray(close, dtype=float)
    return TimeSeriesFrame(
        timesteps=np.asarray(timesteps, dtype=np.int64),
        open=np.asarray(open, dtype=float),
        high=np.asarray(high, dtype=float),
        low=np.asarray(low, dtype=float),
        volume=np.asarray(volume, dtype=float),
        close=close,
        adj_close=close.copy() if adj_close is None else np.asarray(adj_close, dtype=float),
    )


def load_ohlcv(path) -> TimeSeriesFrame:
    """Read an OHLCV CSV into a frame sorted by ascending date.

    The header must name Date, Open, High, Low, Close, Volume
    (case-insensitive); Adj Close is optional and defaults to Close.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError(f"{path}: empty file") from None
        colmap = {}
        for pos, name in enumerate(header):
            key = name.strip().lower().replace(" ", "").replace("_", "").replace("-", "")
            if key in _COLUMN_ALIASES:
                colmap[_COLUMN_ALIASES[key]] = pos
        for required in _REQUIRED:
            if required not in colmap:
                raise DataFormatError(f"{path}: missing column {required!r}")

        rows = []
        for lineno, cells in enumerate(reader, start=2):
            if not cells or all(not c.strip() for c in cells):
                continue
            try:
                date = parse_date(cells[colmap["date"]])
                values = {}
                for ch in ("open", "high", "low", "close", "volume"):
                    values[ch] = float(cells[colmap[ch]])
                if "adj_close" in colmap:
                    values["adj_close"] = float(cells[colmap["adj_close"]])
                else:
                    values["adj_close"] = values["close"]
            except (ValueError, IndexError) as exc:
                raise DataFormatError(f"{path}: bad cell on row {lineno}: {exc}") from exc
            rows.append((date, values))

    if not rows:
        raise DataFormatError(f"{path}: no data rows")
    rows.sort(key=lambda r: r[0])
    return frame_from_columns(
        timesteps=[r[0] for r in rows],
        open=[r[1]["open"] for r in rows],
        high=[r[1]["high"] for r in rows],
        low=[r[1]["low"] for r in rows],
        volume=[r[1]["volume"] for r in rows],
        close=[r[1]["close"] for r in rows],
        adj_close=[r[1]["adj_close"] for r in rows],
    ).validate_prices()


@dataclass(frozen=True)
class NormalizationSpec:
    """Per-channel affine maps of observed [min, max] onto [lo, hi]."""

    ranges: dict  # channel -> (min, max)
    lo: float = -1.0
    hi: float = 1.0

    def apply_values(self, values, channel: str) -> np.ndarray:
        if channel not in self.ranges:
            raise KeyError(f"channel {channel!r} not in normalization spec")
        mn, mx = self.ranges[channel]
        values = np.asarray(values, dtype=float)
        return self.lo + (values - mn) * (self.hi - self.lo) / (mx - mn)

    def invert_values(self, values, channel: str) -> np.ndarray:
        if channel not in self.ranges:
            raise KeyError(f"channel {channel!r} not in normalization spec")
        mn, mx = self.ranges[channel]
        values = np.asarray(values, dtype=float)
        return mn + (values - self.lo) * (mx - mn) / (self.hi - self.lo)

    def to_dict(self) -> dict:
        return {
            "lo": self.lo,
            "hi": self.hi,
            "ranges": {c: [mn, mx] for c, (mn, mx) in self.ranges.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NormalizationSpec":
        return cls(
            ranges={c: (float(mn), float(mx)) for c, (mn, mx) in d["ranges"].items()},
            lo=float(d["lo"]),
            hi=float(d["hi"]),
        )


def fit_normalization(frame: TimeSeriesFrame, channels, lo=-1.0, hi=1.0,
                      fit_rows: int | None = None) -> NormalizationSpec:
    """Fit per-channel min/max over the first ``fit_rows`` rows (all by default).

    Constant channels have no usable range and are rejected.
    """
    stop = len(frame) if fit_rows is None else fit_rows
    ranges = {}
    for ch in channels:
        vals = frame.channel(ch)[:stop]
        mn, mx = float(np.min(vals)), float(np.max(vals))
        if mx <= mn:
            raise ValidationError(f"channel {ch!r} is constant over the fit window")
        ranges[ch] = (mn, mx)
    return NormalizationSpec(ranges=ranges, lo=float(lo), hi=float(hi))


def apply_normalization(frame: TimeSeriesFrame, spec: NormalizationSpec) -> TimeSeriesFrame:
    """Return a copy of the frame with spec'd channels mapped into [lo, hi]."""
    cols = {}
    for ch in CHANNELS:
        vals = frame.channel(ch)
        if ch in spec.ranges:
            cols[ch] = spec.apply_values(vals, ch)
        else:
            cols[ch] = vals.copy()
    return TimeSeriesFrame(timesteps=frame.timesteps.copy(), **cols)


def invert_normalization(values, spec: NormalizationSpec, channel: str) -> np.ndarray:
    return spec.invert_values(values, channel)


@dataclass(frozen=True)
class DelayedDataset:
    """Supervised matrices built from tapped delay lines.

    X rows concatenate lagged exogenous values, ordered (channel, lag) with
    lags in the order given by d_u; Y_hist rows hold lagged targets ordered by
    d_y; T is the current target.
    """

    X: np.ndarray
    Y_hist: np.ndarray
    T: np.ndarray
    d_u: tuple
    d_y: tuple
    exo_channels: tuple
    target_channel: str
    first_usable_index: int
    timesteps: np.ndarray = field(default=None)

    @property
    def n_samples(self) -> int:
        return len(self.T)


def _check_lags(d_u, d_y):
    d_u = tuple(sorted(int(i) for i in d_u))
    d_y = tuple(sorted(int(j) for j in d_y))
    if not d_u or not d_y:
        raise ValidationError("lag sets must be non-empty")
    if any(i < 0 for i in d_u):
        raise ValidationError("input lags must be >= 0")
    if any(j < 1 for j in d_y):
        raise ValidationError("feedback lags must be >= 1 (lag 0 is the prediction itself)")
    return d_u, d_y


def prepare_delayed(frame: TimeSeriesFrame, d_u, d_y,
                    exo_channels=DEFAULT_EXO_CHANNELS,
                    target_channel=DEFAULT_TARGET_CHANNEL) -> DelayedDataset:
    """Shift the series by the lag sets to produce supervised samples.

    Sample k (k >= first_usable_index) has regressors u_c(k-i) for i in d_u,
    c in exo_channels and y(k-j) for j in d_y, with target y(k).
    """
    d_u, d_y = _check_lags(d_u, d_y)
    exo_channels = tuple(exo_channels)
    max_lag = max(max(d_u), max(d_y))
    n = len(frame)
    if n <= max_lag:
        raise InsufficientDataError(
            f"frame has {n} rows but max lag {max_lag} needs at least {max_lag + 1}"
        )
    first = max_lag
    ks = np.arange(first, n)
    y = frame.channel(target_channel)

    x_cols = []
    for ch in exo_channels:
        u = frame.channel(ch)
        for lag in d_u:
            x_cols.append(u[ks - lag])
    X = np.column_stack(x_cols)
    Y_hist = np.column_stack([y[ks - lag] for lag in d_y])
    return DelayedDataset(
        X=X,
        Y_hist=Y_hist,
        T=y[ks].copy(),
        d_u=d_u,
        d_y=d_y,
        exo_channels=exo_channels,
        target_channel=target_channel,
        first_usable_index=first,
        timesteps=frame.timesteps[ks].copy(),
    )


def split_indices(n_samples: int, ratios=(0.70, 0.15, 0.15)):
    """Contiguous temporal train/validation/test blocks.

    Sizes follow largest-remainder rounding of the ratios; the blocks
    partition range(n_samples) in order.
    """
    if n_samples < 3:
        raise InsufficientDataError("need at least 3 samples to split")
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 3 or any(r <= 0 for r in ratios):
        raise ValidationError("ratios must be three positive numbers")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValidationError("ratios must sum to 1")

    exact = [r * n_samples for r in ratios]
    sizes = [int(np.floor(e)) for e in exact]
    remainders = [e - s for e, s in zip(exact, sizes)]
    leftover = n_samples - sum(sizes)
    # hand leftover samples to the largest remainders, earlier block on ties
    order = sorted(range(3), key=lambda i: (-remainders[i], i))
    for i in order[:leftover]:
        sizes[i] += 1
    # every block must hold at least one sample; steal from the largest
    while min(sizes) < 1:
        sizes[int(np.argmax(sizes))] -= 1
        sizes[int(np.argmin(sizes))] += 1

    a, b, c = sizes
    idx = np.arange(n_samples)
    return idx[:a], idx[a:a + b], idx[a + b:]
