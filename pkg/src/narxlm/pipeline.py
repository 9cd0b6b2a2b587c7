"""End-to-end helpers: normalize, train, diagnose, and simulate on a frame.

These glue the lower-level modules together the way the command-line front
end (and most callers) want: normalization fitted on the rows that feed the
training block only, diagnostics reported in de-normalized price units.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import (
    DEFAULT_EXO_CHANNELS,
    DEFAULT_TARGET_CHANNEL,
    TimeSeriesFrame,
    apply_normalization,
    fit_normalization,
    prepare_delayed,
    split_indices,
)
from .diagnostics import DiagnosticsReport, VerdictThresholds, diagnose
from .errors import InsufficientDataError
from .network import NarxConfig, NarxNetwork, close_loop, forward_open
from .training import TrainParams, TrainReport, train_with_restarts


@dataclass
class PreparedData:
    raw_frame: TimeSeriesFrame
    frame: TimeSeriesFrame          # normalized
    norm_spec: object
    dataset: object
    splits: tuple
    exo_channels: tuple
    target_channel: str


def prepare(raw_frame: TimeSeriesFrame, d_u, d_y,
            exo_channels=DEFAULT_EXO_CHANNELS,
            target_channel=DEFAULT_TARGET_CHANNEL,
            ratios=(0.70, 0.15, 0.15)) -> PreparedData:
    """Split, fit normalization on the training portion, build the dataset."""
    exo_channels = tuple(exo_channels)
    max_lag = max(max(d_u), max(d_y))
    n_samples = len(raw_frame) - max_lag
    if n_samples < 3:
        raise InsufficientDataError("too few rows for the requested lags")
    splits = split_indices(n_samples, ratios)
    # rows feeding the training samples: everything up to the last train target
    fit_rows = max_lag + len(splits[0])
    channels = set(exo_channels) | {target_channel}
    spec = fit_normalization(raw_frame, sorted(channels), fit_rows=fit_rows)
    frame = apply_normalization(raw_frame, spec)
    dataset = prepare_delayed(frame, d_u, d_y, exo_channels, target_channel)
    return PreparedData(raw_frame, frame, spec, dataset, splits,
                        exo_channels, target_channel)


def fit(prep: PreparedData, n_hidden: int, params: TrainParams, seed: int) -> TrainReport:
    config = NarxConfig(d_u=prep.dataset.d_u, d_y=prep.dataset.d_y,
                        n_hidden=n_hidden, n_exo=len(prep.exo_channels))
    return train_with_restarts(config, prep.dataset, prep.splits, params, seed)


def evaluate_open(net: NarxNetwork, prep: PreparedData, idx=None,
                  xi: float = 1.0, max_lag: int = 20,
                  thresholds: VerdictThresholds = VerdictThresholds()) -> DiagnosticsReport:
    """Open-loop one-step diagnostics on a sample block (all samples if None)."""
    dataset = prep.dataset
    if idx is None:
        idx = np.arange(dataset.n_samples)
    idx = np.asarray(idx)
    pred = forward_open(net, dataset)[idx]
    targ = dataset.T[idx]
    err = pred - targ
    pred_price = prep.norm_spec.invert_values(pred, prep.target_channel)
    targ_price = prep.norm_spec.invert_values(targ, prep.target_channel)
    exo = {ch: prep.frame.channel(ch)[dataset.first_usable_index:][idx]
           for ch in prep.exo_channels}
    return diagnose(pred_price, targ_price, err, exo,
                    weights=net.flatten(), xi=xi, max_lag=max_lag,
                    thresholds=thresholds)


def simulate(net: NarxNetwork, prep: PreparedData, start_row: int, horizon: int):
    """Closed-loop rollout starting at frame row ``start_row``.

    Targets before start_row prime the feedback taps; exogenous rows for
    start_row..start_row+horizon-1 must exist in the frame.  Returns
    (timesteps, predictions_price, targets_price) with targets NaN where the
    frame runs out.
    """
    c = net.config
    frame = prep.frame
    max_dy, max_du = max(c.d_y), max(c.d_u)
    if start_row < max(max_dy, max_du):
        raise InsufficientDataError("start_row leaves too little priming history")
    if start_row + horizon > len(frame):
        raise InsufficientDataError(
            f"horizon {horizon} from row {start_row} exceeds frame length {len(frame)}")
    y = frame.channel(prep.target_channel)
    exo_matrix = np.column_stack([frame.channel(ch) for ch in prep.exo_channels])
    primer_y = y[start_row - max_dy:start_row]
    primer_exo = exo_matrix[start_row - max_du:start_row] if max_du else \
        np.zeros((0, len(prep.exo_channels)))
    exo_future = exo_matrix[start_row:start_row + horizon]
    preds = close_loop(net).simulate(primer_y, primer_exo, exo_future)
    preds_price = prep.norm_spec.invert_values(preds, prep.target_channel)
    targs_price = prep.norm_spec.invert_values(
        y[start_row:start_row + horizon], prep.target_channel)
    ts = frame.timesteps[start_row:start_row + horizon]
    return ts, preds_price, targs_price


def simulate_diagnostics(preds_price, targs_price, prep: PreparedData,
                         start_row: int, max_lag: int = 20,
                         thresholds: VerdictThresholds = VerdictThresholds()) -> DiagnosticsReport:
    """Diagnostics for a closed-loop run over rows with known targets."""
    err = prep.norm_spec.apply_values(preds_price, prep.target_channel) - \
        prep.norm_spec.apply_values(targs_price, prep.target_channel)
    horizon = len(preds_price)
    exo = {ch: prep.frame.channel(ch)[start_row:start_row + horizon]
           for ch in prep.exo_channels}
    return diagnose(preds_price, targs_price, err, exo,
                    max_lag=max_lag, thresholds=thresholds)
