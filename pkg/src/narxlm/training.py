"""Levenberg-Marquardt training with regularized mean-square objective.

The objective blends the mean squared residual with the mean squared weight,
obj = xi * MSE + (1 - xi) * MSW, with biases excluded from MSW by default.
Each epoch proposes damped Gauss-Newton steps, raising the damping until a
step lowers the objective; validation MSE drives early stopping with
best-weights restoration.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import DivergedError, ValidationError
from .network import NarxConfig, NarxNetwork, forward_open, init_weights, jacobian


@dataclass(frozen=True)
class TrainParams:
    mu0: float = 1.0
    mu_dec: float = 0.8
    mu_inc: float = 1.5
    mu_max: float = 1e10
    epochs: int = 1000
    goal: float = 1e-5
    min_grad: float = 1e-7
    max_fail: int = 6
    xi: float = 0.9
    restarts: int = 10
    penalize_biases: bool = False

    def __post_init__(self):
        if not (0.0 < self.mu_dec < 1.0 < self.mu_inc):
            raise ValidationError("need 0 < mu_dec < 1 < mu_inc")
        if not (0.0 < self.mu0 < self.mu_max):
            raise ValidationError("need 0 < mu0 < mu_max")
        if not (0.0 <= self.xi <= 1.0):
            raise ValidationError("xi must lie in [0, 1]")
        if self.restarts < 1:
            raise ValidationError("restarts must be >= 1")

    def to_dict(self) -> dict:
        return {
            "mu": self.mu0, "mu_dec": self.mu_dec, "mu_inc": self.mu_inc,
            "mu_max": self.mu_max, "epochs": self.epochs, "goal": self.goal,
            "min_grad": self.min_grad, "max_fail": self.max_fail,
            "xi": self.xi, "restarts": self.restarts,
            "penalize_biases": self.penalize_biases,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrainParams":
        known = {
            "mu": "mu0", "mu_dec": "mu_dec", "mu_inc": "mu_inc",
            "mu_max": "mu_max", "epochs": "epochs", "goal": "goal",
            "min_grad": "min_grad", "max_fail": "max_fail", "xi": "xi",
            "restarts": "restarts", "penalize_biases": "penalize_biases",
        }
        kwargs = {field: d[key] for key, field in known.items() if key in d}
        return cls(**kwargs)


@dataclass
class EpochRecord:
    epoch: int
    train_objective: float
    train_mse: float
    val_mse: float
    test_mse: float
    grad_norm: float
    lam: float


@dataclass
class TrainReport:
    records: list
    stop_reason: str
    best_epoch: int
    network: NarxNetwork
    seed: int
    train_idx: np.ndarray = field(repr=False, default=None)
    val_idx: np.ndarray = field(repr=False, default=None)
    test_idx: np.ndarray = field(repr=False, default=None)

    @property
    def best_val_mse(self) -> float:
        return self.records[self.best_epoch].val_mse

    @property
    def best_test_mse(self) -> float:
        return self.records[self.best_epoch].test_mse

    def to_dict(self) -> dict:
        return {
            "stop_reason": self.stop_reason,
            "best_epoch": self.best_epoch,
            "seed": self.seed,
            "n_epochs": len(self.records),
            "best_val_mse": self.best_val_mse,
            "best_test_mse": self.best_test_mse,
            "final_train_objective": self.records[-1].train_objective,
            "splits": {
                "train": [int(self.train_idx[0]), int(self.train_idx[-1]) + 1],
                "val": [int(self.val_idx[0]), int(self.val_idx[-1]) + 1],
                "test": [int(self.test_idx[0]), int(self.test_idx[-1]) + 1],
            },
        }


def msereg(errors, weights, xi, bias_mask=None, penalize_biases=False):
    """xi * mean(errors^2) + (1 - xi) * mean(weights^2).

    With a bias mask supplied and penalize_biases False, bias entries are
    dropped from the weight mean.
    """
    errors = np.asarray(errors, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if errors.size == 0 or weights.size == 0:
        raise ValidationError("msereg needs non-empty errors and weights")
    mse = float(np.mean(errors ** 2))
    if xi == 1.0:
        return mse
    if bias_mask is not None and not penalize_biases:
        weights = weights[~np.asarray(bias_mask)]
    msw = float(np.mean(weights ** 2)) if weights.size else 0.0
    return xi * mse + (1.0 - xi) * msw


class StepFailure(Exception):
    """Normal-equation factorization failed; caller should raise the damping."""


def lm_step(J, F, lam, weights=None, xi=1.0, bias_mask=None, penalize_biases=False):
    """Solve the damped, regularized normal equations for a step d.

    (xi*J'J + alpha*M + lam*I) d = -(xi*J'F + alpha*M w), where M masks the
    penalized weights and alpha = (1 - xi) * n_residuals / n_penalized.  With
    xi = 1 this is exactly (J'J + lam*I) d = -J'F.  Solved by Cholesky; a
    non-positive-definite system raises StepFailure so the caller can retry
    with larger damping.
    """
    J = np.asarray(J, dtype=float)
    F = np.asarray(F, dtype=float)
    n_params = J.shape[1]
    A = xi * (J.T @ J)
    b = -xi * (J.T @ F)
    if xi < 1.0:
        if weights is None:
            raise ValidationError("weights required when xi < 1")
        w = np.asarray(weights, dtype=float)
        mask = np.ones(n_params, dtype=bool)
        if bias_mask is not None and not penalize_biases:
            mask = ~np.asarray(bias_mask)
        n_pen = int(mask.sum())
        if n_pen:
            alpha = (1.0 - xi) * J.shape[0] / n_pen
            A[np.flatnonzero(mask), np.flatnonzero(mask)] += alpha
            b -= alpha * np.where(mask, w, 0.0)
    A[np.diag_indices_from(A)] += lam
    try:
        c, low = scipy.linalg.cho_factor(A, check_finite=False)
        d = scipy.linalg.cho_solve((c, low), b, check_finite=False)
    except (scipy.linalg.LinAlgError, ValueError) as exc:
        raise StepFailure(str(exc)) from exc
    if not np.all(np.isfinite(d)):
        raise StepFailure("non-finite step")
    return d


def _block_mse(net, dataset, idx):
    if len(idx) == 0:
        return 0.0
    sub = _subset(dataset, idx)
    pred = forward_open(net, sub)
    return float(np.mean((pred - sub.T) ** 2))


def _subset(dataset, idx):
    from .data import DelayedDataset
    return DelayedDataset(
        X=dataset.X[idx], Y_hist=dataset.Y_hist[idx], T=dataset.T[idx],
        d_u=dataset.d_u, d_y=dataset.d_y, exo_channels=dataset.exo_channels,
        target_channel=dataset.target_channel,
        first_usable_index=dataset.first_usable_index,
        timesteps=None if dataset.timesteps is None else dataset.timesteps[idx],
    )


def train(config: NarxConfig, dataset, splits, params: TrainParams, seed: int) -> TrainReport:
    """One LM run from a seeded random init, with early stopping."""
    train_idx, val_idx, test_idx = splits
    train_set = _subset(dataset, train_idx)
    n_train = train_set.n_samples

    net = init_weights(config, seed)
    theta = net.flatten()
    bias_mask = net.bias_mask()
    lam = params.mu0
    xi = params.xi

    def objective(th):
        candidate = NarxNetwork.from_flat(config, th)
        pred = forward_open(candidate, train_set)
        err = pred - train_set.T
        return msereg(err, th, xi, bias_mask, params.penalize_biases), candidate

    records = []
    best_epoch = -1
    best_val = np.inf
    best_theta = theta.copy()
    fails = 0
    stop_reason = "epochs-exhausted"
    obj, net = objective(theta)

    for epoch in range(params.epochs):
        if not np.isfinite(obj):
            raise DivergedError(f"non-finite objective at epoch {epoch}", epoch=epoch)
        J, F = jacobian(net, train_set)
        # gradient of the objective in mean-square units
        grad = xi * (2.0 / n_train) * (J.T @ F)
        if xi < 1.0:
            mask = np.ones_like(bias_mask) if params.penalize_biases else ~bias_mask
            n_pen = int(mask.sum())
            if n_pen:
                grad = grad + (1.0 - xi) * (2.0 / n_pen) * np.where(mask, theta, 0.0)
        grad_norm = float(np.max(np.abs(grad)))

        # propose steps until one lowers the objective or damping tops out
        accepted = False
        while lam <= params.mu_max:
            try:
                d = lm_step(J, F, lam, theta, xi, bias_mask, params.penalize_biases)
            except StepFailure:
                lam *= params.mu_inc
                continue
            cand_obj, cand_net = objective(theta + d)
            if np.isfinite(cand_obj) and cand_obj < obj:
                theta = theta + d
                obj, net = cand_obj, cand_net
                lam *= params.mu_dec
                accepted = True
                break
            lam *= params.mu_inc

        train_mse = _block_mse(net, dataset, train_idx)
        val_mse = _block_mse(net, dataset, val_idx)
        test_mse = _block_mse(net, dataset, test_idx)
        records.append(EpochRecord(epoch, obj, train_mse, val_mse, test_mse, grad_norm, lam))

        if val_mse < best_val:
            best_val = val_mse
            best_epoch = epoch
            best_theta = theta.copy()
            fails = 0
        else:
            fails += 1

        if not accepted:
            stop_reason = "mu-max"
            break
        if obj <= params.goal:
            stop_reason = "goal-met"
            break
        if grad_norm <= params.min_grad:
            stop_reason = "min-grad"
            break
        if fails >= params.max_fail:
            stop_reason = "max-fail"
            break

    if not records:
        raise DivergedError("no epochs ran", epoch=0)
    if best_epoch < 0:
        best_epoch = len(records) - 1
        best_theta = theta.copy()

    return TrainReport(
        records=records,
        stop_reason=stop_reason,
        best_epoch=best_epoch,
        network=NarxNetwork.from_flat(config, best_theta),
        seed=seed,
        train_idx=np.asarray(train_idx),
        val_idx=np.asarray(val_idx),
        test_idx=np.asarray(test_idx),
    )


def train_with_restarts(config: NarxConfig, dataset, splits, params: TrainParams,
                        seed: int) -> TrainReport:
    """Run ``params.restarts`` trainings with derived seeds; keep the best.

    Restart i uses seed + i.  Selection: minimal validation MSE at the best
    epoch, ties broken by lower test MSE, then lower seed.
    """
    best = None
    failures = []
    for i in range(params.restarts):
        try:
            report = train(config, dataset, splits, params, seed + i)
        except DivergedError as exc:
            failures.append((seed + i, exc))
            continue
        key = (report.best_val_mse, report.best_test_mse, report.seed)
        if best is None or key < best[0]:
            best = (key, report)
    if best is None:
        raise DivergedError(
            f"all {params.restarts} restarts diverged: "
            + "; ".join(f"seed {s}: {e}" for s, e in failures))
    return best[1]
