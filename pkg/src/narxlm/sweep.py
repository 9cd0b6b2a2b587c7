"""Grid search over input delays, feedback delays, and hidden-layer sizes.

Every grid point is trained with restarts and diagnosed; rows record the
training objective, regression R, and whether all input-error
cross-correlation lags stay inside the 95% confidence band.  Selection
filters on that band first, then maximizes R.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .data import prepare_delayed, split_indices
from .diagnostics import diagnose
from .errors import DivergedError, ValidationError
from .network import NarxConfig, forward_open
from .training import TrainParams, train_with_restarts


@dataclass(frozen=True)
class SweepGrid:
    d_u_candidates: tuple       # tuple of lag tuples
    d_y_candidates: tuple       # tuple of lag tuples
    neuron_candidates: tuple    # tuple of ints
    params: TrainParams
    seed: int = 0

    def __post_init__(self):
        if not (self.d_u_candidates and self.d_y_candidates and self.neuron_candidates):
            raise ValidationError("every grid axis must be non-empty")
        object.__setattr__(self, "d_u_candidates",
                           tuple(tuple(sorted(d)) for d in self.d_u_candidates))
        object.__setattr__(self, "d_y_candidates",
                           tuple(tuple(sorted(d)) for d in self.d_y_candidates))
        object.__setattr__(self, "neuron_candidates",
                           tuple(int(n) for n in self.neuron_candidates))

    def points(self):
        return list(product(self.d_u_candidates, self.d_y_candidates,
                            self.neuron_candidates))


@dataclass
class SweepRow:
    d_u: tuple
    d_y: tuple
    n_hidden: int
    performance: float = np.nan      # training MSEREG objective at stop
    mse: float = np.nan
    r_value: float = np.nan
    xcorr_within_bounds: bool = False
    wall_time: float = 0.0
    diverged: bool = False
    warning: str = ""

    def to_dict(self) -> dict:
        return {
            "d_u": list(self.d_u), "d_y": list(self.d_y), "n_hidden": self.n_hidden,
            "performance": self.performance, "mse": self.mse, "r_value": self.r_value,
            "xcorr_within_bounds": self.xcorr_within_bounds,
            "wall_time": self.wall_time, "diverged": self.diverged,
            "warning": self.warning,
        }


def parse_lag_range(token: str) -> tuple:
    """"a:b" -> (a, ..., b) inclusive; a bare integer is a singleton set."""
    token = token.strip()
    if ":" in token:
        a, b = token.split(":", 1)
        lo, hi = int(a), int(b)
        if hi < lo:
            raise ValidationError(f"bad lag range {token!r}")
        return tuple(range(lo, hi + 1))
    return (int(token),)


def run_sweep(grid: SweepGrid, frame, exo_channels, target_channel,
              ratios=(0.70, 0.15, 0.15), max_lag=20, norm_spec=None,
              jobs=1) -> list:
    """Train and diagnose every grid point; rows come back in grid order.

    The frame must already be normalized; norm_spec, when given, de-normalizes
    predictions for the price-unit metrics (R, divergence).  Diverged runs are
    kept as flagged rows so the table stays rectangular.
    """
    args = [(point, grid.params, grid.seed, frame, tuple(exo_channels),
             target_channel, ratios, max_lag, norm_spec)
            for point in grid.points()]
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_point, args))
    else:
        rows = [_sweep_point(a) for a in args]
    return rows


def _sweep_point(packed) -> SweepRow:
    (point, params, seed, frame, exo_channels, target_channel,
     ratios, max_lag, norm_spec) = packed
    d_u, d_y, n = point
    t0 = time.perf_counter()
    row = SweepRow(d_u=d_u, d_y=d_y, n_hidden=n)
    try:
        dataset = prepare_delayed(frame, d_u, d_y, exo_channels, target_channel)
        splits = split_indices(dataset.n_samples, ratios)
        config = NarxConfig(d_u=d_u, d_y=d_y, n_hidden=n,
                            n_exo=len(exo_channels))
        report = train_with_restarts(config, dataset, splits, params, seed)
        net = report.network
        pred = forward_open(net, dataset)
        err = pred - dataset.T
        exo = {ch: frame.channel(ch)[dataset.first_usable_index:]
               for ch in exo_channels}
        if norm_spec is not None:
            pred_price = norm_spec.invert_values(pred, target_channel)
            targ_price = norm_spec.invert_values(dataset.T, target_channel)
        else:
            pred_price, targ_price = pred, dataset.T
        diag = diagnose(pred_price, targ_price, err, exo,
                        weights=net.flatten(), xi=params.xi,
                        max_lag=max_lag)
        row.performance = report.records[report.best_epoch].train_objective
        row.mse = diag.mse
        row.r_value = diag.r_value
        row.xcorr_within_bounds = diag.xcorr_within_bounds
    except DivergedError as exc:
        row.diverged = True
        row.warning = str(exc)
    row.wall_time = time.perf_counter() - t0
    return row


def select_best(rows: list):
    """Pick the winner: bounds filter, then max R, then tie-breaks.

    Ties break by lower performance, fewer neurons, smaller max delay.  If no
    row passes the bounds filter the best unfiltered row is returned with a
    warning flag set.
    """
    live = [r for r in rows if not r.diverged]
    if not live:
        raise ValidationError("no non-diverged rows to select from")
    passing = [r for r in live if r.xcorr_within_bounds]
    pool = passing if passing else live

    def key(r):
        return (-r.r_value, r.performance, r.n_hidden,
                max(max(r.d_u), max(r.d_y)))

    best = min(pool, key=key)
    if not passing:
        best.warning = (best.warning + "; " if best.warning else "") + \
            "no configuration passed the cross-correlation bounds filter"
    return best
