"""Synthetic data generation for testing and demos.

A randomly initialized network acts as a teacher: driven by random exogenous
sequences, it produces a target series with a known generating equation.  The
same machinery also fabricates OHLCV-shaped frames whose close price is a
teacher function of the other channels, so the whole pipeline can be
exercised without market data.
"""

from __future__ import annotations

import numpy as np

from .data import DelayedDataset, TimeSeriesFrame, fit_normalization, frame_from_columns
from .errors import ValidationError
from .network import NarxConfig, NarxNetwork, init_weights


def make_supervised(U: np.ndarray, y: np.ndarray, d_u, d_y) -> DelayedDataset:
    """DelayedDataset straight from raw arrays (U: (n, n_exo), y: (n,))."""
    U = np.atleast_2d(np.asarray(U, dtype=float))
    y = np.asarray(y, dtype=float)
    if U.shape[0] != y.shape[0]:
        raise ValidationError("U and y must have equal length")
    d_u = tuple(sorted(d_u))
    d_y = tuple(sorted(d_y))
    max_lag = max(max(d_u), max(d_y))
    ks = np.arange(max_lag, len(y))
    X = np.column_stack([U[ks - lag, c] for c in range(U.shape[1]) for lag in d_u])
    Y_hist = np.column_stack([y[ks - lag] for lag in d_y])
    return DelayedDataset(
        X=X, Y_hist=Y_hist, T=y[ks].copy(), d_u=d_u, d_y=d_y,
        exo_channels=tuple(f"u{c}" for c in range(U.shape[1])),
        target_channel="y", first_usable_index=max_lag,
    )


def drive_teacher(net: NarxNetwork, U: np.ndarray, seed: int | None = None,
                  noise_std: float = 0.0) -> np.ndarray:
    """Iterate the teacher over exogenous rows U, feeding back its own output.

    The first max-lag values of y are zero (delay fill).  Optional white
    measurement noise is added after each step.
    """
    c = net.config
    U = np.atleast_2d(np.asarray(U, dtype=float))
    n = U.shape[0]
    max_lag = max(max(c.d_u), max(c.d_y))
    y = np.zeros(n)
    rng = np.random.default_rng(seed)
    noise = rng.normal(0.0, noise_std, size=n) if noise_std > 0 else np.zeros(n)
    for k in range(max_lag, n):
        x_row = np.array([U[k - lag, ci] for ci in range(c.n_exo) for lag in c.d_u])
        yh_row = np.array([y[k - lag] for lag in c.d_y])
        a = np.tanh(x_row @ net.W_ih.T + yh_row @ net.W_yh.T + net.b_h)
        y[k] = float(a @ net.W_ho + net.b_o) + noise[k]
    return y


def teacher_dataset(n_samples: int, seed: int, n_hidden: int = 5,
                    d_u=(0, 1), d_y=(1,), n_exo: int = 2,
                    noise_std: float = 0.0):
    """(teacher, U, y, dataset): a realizable supervised problem.

    U is uniform on [-1, 1]; the returned dataset has exactly n_samples rows.
    """
    config = NarxConfig(d_u=tuple(d_u), d_y=tuple(d_y),
                        n_hidden=n_hidden, n_exo=n_exo)
    teacher = init_weights(config, seed)
    max_lag = max(max(config.d_u), max(config.d_y))
    n = n_samples + max_lag
    rng = np.random.default_rng(seed + 1)
    U = rng.uniform(-1.0, 1.0, size=(n, n_exo))
    y = drive_teacher(teacher, U, seed=seed + 2, noise_std=noise_std)
    return teacher, U, y, make_supervised(U, y, config.d_u, config.d_y)


def synthetic_ohlcv_frame(n_rows: int, seed: int, n_hidden: int = 5,
                          d_u=(0, 1), d_y=(1,),
                          noise_std: float = 0.0,
                          price_range=(20.0, 22.0)):
    """OHLCV frame whose close price is a teacher function of O/H/L/V.

    Open, high, low wander inside a price band (high >= low enforced), volume
    inside a share band.  The channels are normalized to [-1, 1], fed through
    a random teacher network, and the resulting series (plus optional noise)
    is mapped into price_range as the close.  Returns (frame, teacher).
    """
    rng = np.random.default_rng(seed)
    lo, hi = price_range
    mid = 0.5 * (lo + hi)
    amp = 0.5 * (hi - lo)

    # smooth bounded random walks for the price channels
    def walk(scale):
        steps = rng.normal(0.0, scale, size=n_rows)
        w = np.cumsum(steps)
        w = w - w.mean()
        peak = np.max(np.abs(w))
        return mid + (w / peak) * 0.8 * amp if peak > 0 else np.full(n_rows, mid)

    base = walk(1.0)
    spread = np.abs(rng.normal(0.0, 0.05 * amp, size=n_rows))
    open_ = base + rng.normal(0.0, 0.05 * amp, size=n_rows)
    high = np.maximum(open_, base) + spread
    low = np.minimum(open_, base) - spread
    volume = rng.uniform(2e7, 1e8, size=n_rows)

    frame0 = frame_from_columns(
        timesteps=734506 + np.arange(n_rows),
        open=open_, high=high, low=low, volume=volume, close=base,
    )
    exo = ("open", "high", "low", "volume")
    spec = fit_normalization(frame0, exo)
    U = np.column_stack([spec.apply_values(frame0.channel(ch), ch) for ch in exo])

    config = NarxConfig(d_u=tuple(d_u), d_y=tuple(d_y),
                        n_hidden=n_hidden, n_exo=len(exo))
    teacher = init_weights(config, seed + 7)
    y = drive_teacher(teacher, U, seed=seed + 8, noise_std=noise_std)
    span = np.max(y) - np.min(y)
    if span <= 0:
        raise ValidationError("degenerate teacher output")
    close = lo + (y - np.min(y)) * (hi - lo) / span

    frame = frame_from_columns(
        timesteps=734506 + np.arange(n_rows),
        open=open_, high=high, low=low, volume=volume, close=close,
    ).validate_prices()
    return frame, teacher


def frame_to_csv(frame: TimeSeriesFrame, path):
    """Write a frame as a loader-compatible OHLCV CSV."""
    lines = ["Date,Open,High,Low,Close,Volume,Adj Close"]
    for i in range(len(frame)):
        lines.append(",".join([
            str(int(frame.timesteps[i])),
            repr(float(frame.open[i])), repr(float(frame.high[i])),
            repr(float(frame.low[i])), repr(float(frame.close[i])),
            repr(float(frame.volume[i])), repr(float(frame.adj_close[i])),
        ]))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
