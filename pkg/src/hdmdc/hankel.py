"""Hankel (time-delay) augmented DMD with control.

The state is augmented with ``s`` delayed copies of itself and the input
with ``z`` delayed copies of itself; the two counts are independent. Fitting
reuses the plain DMDc operator solve on the augmented snapshot matrices.

Histories are passed chronologically (oldest column first, the current sample
last). Inside the augmented vectors the blocks run newest first:
``x_hat_j = [x_j, x_{j-1}, ..., x_{j-s}]`` and likewise for ``u_hat_j``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import dmdc, numerics
from .dataset import Record
from .errors import BoundsError, InsufficientDataError, InvalidInputError

SAMPLES_PER_PERIOD = 32
IIC_TRANSIENT_PERIODS = 5.0


def nearest_int(x: float) -> int:
    """Round to nearest, halves away from zero."""
    return int(math.copysign(math.floor(abs(x) + 0.5), x))


@dataclass(frozen=True)
class HyperParams:
    """Training length and maximum state/input delays, in reference periods."""

    l_tr: float
    l_dx: float = 0.0
    l_du: float = 0.0

    def __post_init__(self):
        if not (self.l_tr > 0 and self.l_dx >= 0 and self.l_du >= 0):
            raise InvalidInputError(f"invalid hyperparameters {self}")


@dataclass(frozen=True)
class HankelConfig:
    s: int
    z: int
    n_tr: int
    samples_per_that: float = SAMPLES_PER_PERIOD

    def __post_init__(self):
        if self.s < 0 or self.z < 0:
            raise InvalidInputError("delay counts must be non-negative")
        if self.n_tr < 2:
            raise InvalidInputError(f"n_tr must be at least 2, got {self.n_tr}")

    @property
    def max_delay(self) -> int:
        return max(self.s, self.z)

    @property
    def window_length(self) -> int:
        """Samples consumed by a fit: n_tr snapshot pairs plus the delay history."""
        return self.n_tr + self.max_delay + 1


def durations_to_counts(h: HyperParams, samples_per_that: float = SAMPLES_PER_PERIOD) -> HankelConfig:
    if samples_per_that < 1:
        raise InvalidInputError("samples_per_that must be >= 1")
    n_tr = nearest_int(h.l_tr * samples_per_that)
    if n_tr < 2:
        raise InvalidInputError(
            f"l_tr={h.l_tr} gives only {n_tr} training samples (need >= 2)"
        )
    return HankelConfig(
        s=nearest_int(h.l_dx * samples_per_that),
        z=nearest_int(h.l_du * samples_per_that),
        n_tr=n_tr,
        samples_per_that=samples_per_that,
    )


@dataclass(frozen=True, eq=False)
class HankelDmdcModel:
    A: np.ndarray
    B: np.ndarray
    n: int
    l: int
    config: HankelConfig
    dt: float = 1.0
    train_residual: float = float("nan")

    def __post_init__(self):
        s, z = self.config.s, self.config.z
        if self.A.shape != (self.n * (s + 1),) * 2 or self.B.shape != (
            self.n * (s + 1),
            self.l * (z + 1),
        ):
            raise InvalidInputError("operator shapes do not match the delay configuration")

    @property
    def s(self) -> int:
        return self.config.s

    @property
    def z(self) -> int:
        return self.config.z

    def as_dmdc(self) -> dmdc.DmdcModel:
        return dmdc.DmdcModel(A=self.A, B=self.B, dt=self.dt)


def _delay_stack(W: np.ndarray, first: int, ncols: int, delays: int) -> np.ndarray:
    """Rows [W_{c}, W_{c-1}, ..., W_{c-delays}] for columns c = first..first+ncols-1."""
    return np.vstack([W[:, first - k : first - k + ncols] for k in range(delays + 1)])


def build_hankel_blocks(states, inputs, s: int, z: int) -> dmdc.SnapshotPair:
    """Augmented snapshot pair with Y_hat = [X; S; U; Z] and X_hat' = [X'; S'].

    Block row k of S is the state sequence delayed by k samples (k = 1..s),
    Z likewise for inputs (k = 1..z). Columns start at the first sample that
    has a full delay history.
    """
    X = dmdc._as_2d(states, "states")
    U = dmdc._as_2d(inputs, "inputs")
    if X.shape[1] != U.shape[1]:
        raise InvalidInputError("states and inputs differ in length")
    if s < 0 or z < 0:
        raise InvalidInputError("delay counts must be non-negative")
    m = X.shape[1]
    p = max(s, z)
    ncols = m - 1 - p
    if ncols < 1:
        raise InsufficientDataError(
            f"{m} samples cannot hold delays (s={s}, z={z}); need at least {p + 2}, "
            f"short by {p + 2 - m}"
        )
    Y = np.vstack([_delay_stack(X, p, ncols, s), _delay_stack(U, p, ncols, z)])
    Xp = _delay_stack(X, p + 1, ncols, s)
    return dmdc.SnapshotPair(Y=Y, Xp=Xp, n=X.shape[0] * (s + 1), l=U.shape[0] * (z + 1))


def _config(h, samples_per_that) -> HankelConfig:
    if isinstance(h, HankelConfig):
        return h
    return durations_to_counts(h, samples_per_that)


def training_window(record: Record, cfg: HankelConfig, window_end: int | None = None) -> tuple[int, int]:
    """Sample range [start, end) used to fit ``cfg`` ending at ``window_end``."""
    end = record.m if window_end is None else int(window_end)
    start = end - cfg.window_length
    if start < 0 or end > record.m:
        raise BoundsError(
            f"training window of {cfg.window_length} samples ending at {end} does not fit "
            f"in a record of {record.m} samples"
        )
    return start, end


def fit_hankel_dmdc(
    record: Record,
    h,
    window_end: int | None = None,
    samples_per_that: float = SAMPLES_PER_PERIOD,
    rel_tol: float = numerics.DEFAULT_REL_TOL,
) -> HankelDmdcModel:
    """Fit on the most recent ``n_tr`` snapshot pairs before ``window_end``.

    ``h`` may be a :class:`HyperParams` (converted with ``samples_per_that``)
    or an explicit :class:`HankelConfig`.
    """
    cfg = _config(h, samples_per_that)
    start, end = training_window(record, cfg, window_end)
    pair = build_hankel_blocks(
        record.state[:, start:end], record.input[:, start:end], cfg.s, cfg.z
    )
    A, B = dmdc.fit_operator(pair.Y, pair.Xp, pair.n, rel_tol)
    residual = float(np.linalg.norm(pair.Xp - A @ pair.Y[: pair.n] - B @ pair.Y[pair.n :]))
    return HankelDmdcModel(
        A=A, B=B, n=record.n, l=record.l, config=cfg, dt=record.dt, train_residual=residual
    )


def one_step_residual(model: HankelDmdcModel, record: Record, start: int = 0, end: int | None = None) -> float:
    """RMS one-step error of the base state over record[start:end]."""
    end = record.m if end is None else end
    pair = build_hankel_blocks(record.state[:, start:end], record.input[:, start:end], model.s, model.z)
    err = pair.Xp[: model.n] - (model.A @ pair.Y[: pair.n] + model.B @ pair.Y[pair.n :])[: model.n]
    return float(np.sqrt(np.mean(err**2)))


def _iterate(model: HankelDmdcModel, x_hat0: np.ndarray, u_seq: np.ndarray, T: int) -> np.ndarray:
    # u_seq columns are u_{j-z} .. u_{j+T-1}
    z, n = model.z, model.n
    l = model.l
    U_hat = np.empty((l * (z + 1), T))
    for k in range(z + 1):
        U_hat[k * l : (k + 1) * l] = u_seq[:, z - k : z - k + T]
    forced = model.B @ U_hat
    out = np.empty((n, T + 1))
    xa = x_hat0.copy()
    out[:, 0] = xa[:n]
    A = model.A
    with np.errstate(over="ignore", invalid="ignore"):
        for j in range(T):
            xa = A @ xa + forced[:, j]
            out[:, j + 1] = xa[:n]
    return out


def _stack_newest_first(history: np.ndarray) -> np.ndarray:
    return history[:, ::-1].reshape(-1, order="F")


def predict_hankel(model: HankelDmdcModel, state_history, input_history, future_inputs) -> np.ndarray:
    """Predict from a complete delay history.

    Parameters
    ----------
    state_history : (n, s+1) array
        x_{j-s} .. x_j, current state last.
    input_history : (l, z+1) array
        u_{j-z} .. u_j, aligned with ``state_history``.
    future_inputs : (l, T) array
        u_{j+1} .. u_{j+T}, aligned with the predicted states. The last column
        pairs with the final predicted state and does not enter the recurrence.

    Returns
    -------
    (n, T+1) array of x_j .. x_{j+T}.
    """
    Xh = dmdc._as_2d(state_history, "state_history")
    Uh = dmdc._as_2d(input_history, "input_history")
    Uf = np.asarray(future_inputs, dtype=float).reshape(model.l, -1)
    if Xh.shape != (model.n, model.s + 1):
        raise InvalidInputError(f"state_history must be {(model.n, model.s + 1)}, got {Xh.shape}")
    if Uh.shape != (model.l, model.z + 1):
        raise InvalidInputError(f"input_history must be {(model.l, model.z + 1)}, got {Uh.shape}")
    T = Uf.shape[1]
    u_seq = np.hstack([Uh, Uf])[:, : model.z + T]
    return _iterate(model, _stack_newest_first(Xh), u_seq, T)


@dataclass(frozen=True, eq=False)
class IicPrediction:
    trajectory: np.ndarray
    transient: np.ndarray
    transient_steps: int


def predict_iic(model: HankelDmdcModel, x0, inputs, transient_periods: float = IIC_TRANSIENT_PERIODS) -> IicPrediction:
    """Predict from the current state only, zero-filling unknown delay slots.

    ``inputs`` holds u_j .. u_{j+T-1} (same convention as :func:`dmdc.predict`).
    Samples inside the first ``transient_periods`` reference periods are flagged
    in ``transient``.
    """
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    U = np.asarray(inputs, dtype=float).reshape(model.l, -1)
    if x0.size != model.n:
        raise InvalidInputError(f"x0 must have length {model.n}")
    T = U.shape[1]
    x_hat0 = np.zeros(model.n * (model.s + 1))
    x_hat0[: model.n] = x0
    u_seq = np.hstack([np.zeros((model.l, model.z)), U])
    traj = _iterate(model, x_hat0, u_seq, T)
    steps = nearest_int(transient_periods * model.config.samples_per_that)
    mask = np.arange(T + 1) < steps
    return IicPrediction(trajectory=traj, transient=mask, transient_steps=steps)


def predict_window(model: HankelDmdcModel, record: Record, start: int, steps: int, iic: bool = False) -> np.ndarray:
    """Predict record samples start .. start+steps using the record's own history and inputs."""
    if start < 0 or steps < 0 or start + steps > record.m - 1:
        raise BoundsError(f"prediction window [{start}, {start + steps}] outside record of {record.m}")
    if iic:
        return predict_iic(model, record.state[:, start], record.input[:, start : start + steps]).trajectory
    if start < model.config.max_delay:
        raise BoundsError(
            f"start {start} leaves no room for a {model.config.max_delay}-sample delay history"
        )
    return predict_hankel(
        model,
        record.state[:, start - model.s : start + 1],
        record.input[:, start - model.z : start + 1],
        record.input[:, start + 1 : start + steps + 1],
    )
