"""NARX network: open-loop evaluation, residual Jacobian, closed-loop rollout.

The network has one hidden tanh layer fed by tapped delay lines over the
exogenous channels (lags d_u) and the target feedback signal (lags d_y), and a
single linear output unit.  Open-loop (series-parallel) evaluation reads true
lagged targets from the dataset; the closed-loop form replays its own
predictions into the feedback taps for multi-step-ahead forecasting.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import InsufficientDataError, ShapeError, ValidationError

FORMAT_VERSION = 1


@dataclass(frozen=True)
class NarxConfig:
    d_u: tuple
    d_y: tuple
    n_hidden: int
    n_exo: int
    hidden_transfer: str = "tanh"
    output_transfer: str = "linear"

    def __post_init__(self):
        object.__setattr__(self, "d_u", tuple(sorted(int(i) for i in self.d_u)))
        object.__setattr__(self, "d_y", tuple(sorted(int(j) for j in self.d_y)))
        if self.n_hidden < 1:
            raise ValidationError("n_hidden must be >= 1")
        if self.n_exo < 1:
            raise ValidationError("n_exo must be >= 1")
        if not self.d_u or any(i < 0 for i in self.d_u):
            raise ValidationError("d_u must be a non-empty set of lags >= 0")
        if not self.d_y or any(j < 1 for j in self.d_y):
            raise ValidationError("d_y must be a non-empty set of lags >= 1")
        if self.hidden_transfer != "tanh":
            raise ValidationError(f"unsupported hidden transfer {self.hidden_transfer!r}")
        if self.output_transfer != "linear":
            raise ValidationError(f"unsupported output transfer {self.output_transfer!r}")

    @property
    def n_input_taps(self) -> int:
        return len(self.d_u) * self.n_exo

    @property
    def n_params(self) -> int:
        n = self.n_hidden
        return n * (self.n_input_taps + len(self.d_y) + 1) + n + 1

    def to_dict(self) -> dict:
        return {
            "d_u": list(self.d_u),
            "d_y": list(self.d_y),
            "n_hidden": self.n_hidden,
            "n_exo": self.n_exo,
            "hidden_transfer": self.hidden_transfer,
            "output_transfer": self.output_transfer,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NarxConfig":
        return cls(
            d_u=tuple(d["d_u"]),
            d_y=tuple(d["d_y"]),
            n_hidden=int(d["n_hidden"]),
            n_exo=int(d["n_exo"]),
            hidden_transfer=d.get("hidden_transfer", "tanh"),
            output_transfer=d.get("output_transfer", "linear"),
        )


@dataclass(frozen=True)
class NarxNetwork:
    """Weight arrays plus config.

    W_ih: (n_hidden, n_exo * |d_u|) hidden weights on exogenous taps, column
          order (channel, lag) matching DelayedDataset.X.
    W_yh: (n_hidden, |d_y|) hidden weights on feedback taps.
    b_h:  (n_hidden,) hidden biases.
    W_ho: (n_hidden,) output weights.
    b_o:  scalar output bias.
    """

    config: NarxConfig
    W_ih: np.ndarray
    W_yh: np.ndarray
    b_h: np.ndarray
    W_ho: np.ndarray
    b_o: float

    def __post_init__(self):
        c = self.config
        if self.W_ih.shape != (c.n_hidden, c.n_input_taps):
            raise ShapeError(f"W_ih shape {self.W_ih.shape} != {(c.n_hidden, c.n_input_taps)}")
        if self.W_yh.shape != (c.n_hidden, len(c.d_y)):
            raise ShapeError(f"W_yh shape {self.W_yh.shape} != {(c.n_hidden, len(c.d_y))}")
        if self.b_h.shape != (c.n_hidden,) or self.W_ho.shape != (c.n_hidden,):
            raise ShapeError("bias/output weight shape mismatch")
        for arr in (self.W_ih, self.W_yh, self.b_h, self.W_ho):
            if not np.all(np.isfinite(arr)):
                raise ValidationError("non-finite weight")
        if not np.isfinite(self.b_o):
            raise ValidationError("non-finite output bias")

    # Canonical flattening: hidden-input weights, feedback weights, hidden
    # biases, output weights, output bias.  Jacobian columns use this order.
    def flatten(self) -> np.ndarray:
        return np.concatenate([
            self.W_ih.ravel(),
            self.W_yh.ravel(),
            self.b_h,
            self.W_ho,
            [self.b_o],
        ])

    @classmethod
    def from_flat(cls, config: NarxConfig, theta: np.ndarray) -> "NarxNetwork":
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (config.n_params,):
            raise ShapeError(f"parameter vector length {theta.shape} != {config.n_params}")
        n, ni, ny = config.n_hidden, config.n_input_taps, len(config.d_y)
        pos = 0
        W_ih = theta[pos:pos + n * ni].reshape(n, ni); pos += n * ni
        W_yh = theta[pos:pos + n * ny].reshape(n, ny); pos += n * ny
        b_h = theta[pos:pos + n]; pos += n
        W_ho = theta[pos:pos + n]; pos += n
        b_o = float(theta[pos])
        return cls(config, W_ih.copy(), W_yh.copy(), b_h.copy(), W_ho.copy(), b_o)

    def bias_mask(self) -> np.ndarray:
        """Boolean vector over the flat parameters, True at bias positions."""
        c = self.config
        n = c.n_hidden
        mask = np.zeros(c.n_params, dtype=bool)
        start = n * (c.n_input_taps + len(c.d_y))
        mask[start:start + n] = True  # hidden biases
        mask[-1] = True               # output bias
        return mask

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "config": self.config.to_dict(),
            "weights": [format(w, ".17g") for w in self.flatten()],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NarxNetwork":
        if d.get("format_version") != FORMAT_VERSION:
            raise ValidationError(f"unsupported model format version {d.get('format_version')}")
        config = NarxConfig.from_dict(d["config"])
        theta = np.array([float(w) for w in d["weights"]])
        return cls.from_flat(config, theta)

    def to_json(self, extra: dict | None = None) -> str:
        doc = self.to_dict()
        if extra:
            doc.update(extra)
        return json.dumps(doc, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "NarxNetwork":
        return cls.from_dict(json.loads(text))


def init_weights(config: NarxConfig, seed: int) -> NarxNetwork:
    """Uniform [-r, +r] init with r = 1/sqrt(fan-in), deterministic in seed."""
    rng = np.random.default_rng(seed)
    n, ni, ny = config.n_hidden, config.n_input_taps, len(config.d_y)
    r_hidden = 1.0 / np.sqrt(ni + ny)
    r_out = 1.0 / np.sqrt(n)
    return NarxNetwork(
        config=config,
        W_ih=rng.uniform(-r_hidden, r_hidden, size=(n, ni)),
        W_yh=rng.uniform(-r_hidden, r_hidden, size=(n, ny)),
        b_h=rng.uniform(-r_hidden, r_hidden, size=n),
        W_ho=rng.uniform(-r_out, r_out, size=n),
        b_o=float(rng.uniform(-r_out, r_out)),
    )


def _check_dataset(net: NarxNetwork, X: np.ndarray, Y_hist: np.ndarray):
    c = net.config
    if X.ndim != 2 or X.shape[1] != c.n_input_taps:
        raise ShapeError(f"X width {X.shape} != {c.n_input_taps} input taps")
    if Y_hist.ndim != 2 or Y_hist.shape[1] != len(c.d_y):
        raise ShapeError(f"Y_hist width {Y_hist.shape} != {len(c.d_y)} feedback taps")
    if X.shape[0] != Y_hist.shape[0]:
        raise ShapeError("X and Y_hist row counts differ")


def _hidden_activation(net: NarxNetwork, X, Y_hist):
    z = X @ net.W_ih.T + Y_hist @ net.W_yh.T + net.b_h
    return np.tanh(z)


def forward_open(net: NarxNetwork, dataset) -> np.ndarray:
    """One-step predictions with true lagged targets in the feedback taps."""
    X, Y_hist = dataset.X, dataset.Y_hist
    _check_dataset(net, X, Y_hist)
    a = _hidden_activation(net, X, Y_hist)
    return a @ net.W_ho + net.b_o


def jacobian(net: NarxNetwork, dataset):
    """Residuals F = yhat - T and the exact Jacobian dF/dtheta.

    Columns follow the canonical flattening.  Row k is the gradient of
    residual k; rows are independent because open-loop evaluation is a static
    feedforward pass.
    """
    X, Y_hist = dataset.X, dataset.Y_hist
    _check_dataset(net, X, Y_hist)
    a = _hidden_activation(net, X, Y_hist)               # (S, N)
    yhat = a @ net.W_ho + net.b_o
    F = yhat - dataset.T

    S = X.shape[0]
    n = net.config.n_hidden
    # back-prop through the linear output and tanh hidden layer
    da = (1.0 - a * a) * net.W_ho                        # (S, N): dyhat/dz_h
    J_Wih = da[:, :, None] * X[:, None, :]               # (S, N, ni)
    J_Wyh = da[:, :, None] * Y_hist[:, None, :]          # (S, N, ny)
    J = np.concatenate([
        J_Wih.reshape(S, -1),
        J_Wyh.reshape(S, -1),
        da,                                              # hidden biases
        a,                                               # output weights
        np.ones((S, 1)),                                 # output bias
    ], axis=1)
    return J, F


class ClosedLoopNarx:
    """Closed-loop (parallel) evaluator sharing the trained weights.

    Feedback taps read the evaluator's own prediction history once the primed
    true values are exhausted.
    """

    def __init__(self, net: NarxNetwork):
        self.net = net
        self.config = net.config

    def simulate(self, primer_y, primer_exo, exo_future) -> np.ndarray:
        """Roll the network forward for H = len(exo_future) steps.

        primer_y: trailing true targets, at least max(d_y) values.
        primer_exo: trailing exogenous rows (width n_exo, channel order as in
            the training dataset), at least max(d_u) rows.
        exo_future: (H, n_exo) true exogenous rows for the horizon.
        """
        c = self.config
        primer_y = np.asarray(primer_y, dtype=float)
        primer_exo = np.atleast_2d(np.asarray(primer_exo, dtype=float))
        exo_future = np.asarray(exo_future, dtype=float).reshape(-1, c.n_exo) \
            if np.size(exo_future) else np.zeros((0, c.n_exo))
        max_dy = max(c.d_y)
        max_du = max(c.d_u)
        if len(primer_y) < max_dy:
            raise InsufficientDataError(
                f"primer supplies {len(primer_y)} targets, need {max_dy}")
        if len(primer_exo) < max_du:
            raise InsufficientDataError(
                f"primer supplies {len(primer_exo)} exogenous rows, need {max_du}")
        if primer_exo.shape[1] != c.n_exo:
            raise ShapeError(f"primer exo width {primer_exo.shape[1]} != {c.n_exo}")

        y_hist = list(primer_y)
        exo_hist = [row for row in primer_exo]
        preds = np.empty(len(exo_future))
        for t, exo_now in enumerate(exo_future):
            exo_hist.append(exo_now)
            # regressor row ordered (channel, lag) to match DelayedDataset.X
            x_row = np.array([exo_hist[-1 - lag][ci]
                              for ci in range(c.n_exo) for lag in c.d_u])
            yh_row = np.array([y_hist[-lag] for lag in c.d_y])
            a = np.tanh(x_row @ self.net.W_ih.T + yh_row @ self.net.W_yh.T + self.net.b_h)
            y = float(a @ self.net.W_ho + self.net.b_o)
            preds[t] = y
            y_hist.append(y)
        return preds


def close_loop(net: NarxNetwork) -> ClosedLoopNarx:
    return ClosedLoopNarx(net)


def simulate_closed(evaluator: ClosedLoopNarx, primer_y, primer_exo, exo_future) -> np.ndarray:
    return evaluator.simulate(primer_y, primer_exo, exo_future)
