"""Dynamic mode decomposition with control.

The operator G = [A B] is the Frobenius-norm least-squares map from the
stacked state/input snapshots Y to the advanced states X'. It is computed
from a full (untruncated) SVD of Y, splitting the left singular vectors into
their state rows U1 and input rows U2.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import numerics
from .errors import InsufficientDataError, InvalidInputError

UNSTABLE_MARGIN = 1e-9


@dataclass(frozen=True, eq=False)
class SnapshotPair:
    Y: np.ndarray
    Xp: np.ndarray
    n: int
    l: int

    def __post_init__(self):
        if self.Y.shape[1] != self.Xp.shape[1]:
            raise InvalidInputError("Y and Xp must have the same number of columns")
        if self.Y.shape[0] != self.n + self.l:
            raise InvalidInputError("Y must have n + l rows")


@dataclass(frozen=True, eq=False)
class DmdcModel:
    A: np.ndarray
    B: np.ndarray
    dt: float = 1.0

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def l(self) -> int:
        return self.B.shape[1]

    @property
    def G(self) -> np.ndarray:
        return np.hstack([self.A, self.B])


def _as_2d(a, name):
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        a = a[None, :]
    if a.ndim != 2:
        raise InvalidInputError(f"{name} must be 2-D")
    return a


def assemble_snapshots(states, inputs) -> SnapshotPair:
    """Y columns are (x_j; u_j) for j < m-1, Xp columns are x_{j+1}."""
    X = _as_2d(states, "states")
    U = _as_2d(inputs, "inputs")
    if X.shape[1] != U.shape[1]:
        raise InvalidInputError(
            f"states and inputs differ in length ({X.shape[1]} vs {U.shape[1]})"
        )
    m = X.shape[1]
    if m < 2:
        raise InsufficientDataError(f"need at least 2 snapshots, got {m}")
    Y = np.vstack([X[:, :-1], U[:, :-1]])
    return SnapshotPair(Y=Y, Xp=X[:, 1:].copy(), n=X.shape[0], l=U.shape[0])


def fit_operator(Y, Xp, n: int, rel_tol: float = numerics.DEFAULT_REL_TOL):
    """Return (A, B) = X' V Sigma^-1 [U1; U2]^T from the SVD of Y."""
    Y = numerics.as_matrix(Y, "Y")
    Xp = numerics.as_matrix(Xp, "Xp")
    if not np.any(Y):
        raise InvalidInputError("Y is identically zero")
    f = numerics.svd(Y)
    s = f.singular_values
    keep = s > rel_tol * s[0]
    # X' V Sigma^-1 on the retained singular directions
    W = (Xp @ f.V[:, keep]) / s[keep]
    U1 = f.U[:n, keep]
    U2 = f.U[n:, keep]
    return W @ U1.T, W @ U2.T


def fit_dmdc(p: SnapshotPair, dt: float = 1.0, rel_tol: float = numerics.DEFAULT_REL_TOL) -> DmdcModel:
    A, B = fit_operator(p.Y, p.Xp, p.n, rel_tol)
    return DmdcModel(A=A, B=B, dt=dt)


def fit_residual(model: DmdcModel, p: SnapshotPair) -> float:
    """Frobenius norm of X' - [A B] Y."""
    return float(np.linalg.norm(p.Xp - model.G @ p.Y))


def predict(model: DmdcModel, x0, inputs) -> np.ndarray:
    """Iterate the fitted recurrence; returns n x (T+1) for l x T inputs."""
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    U = _as_2d(inputs, "inputs") if np.size(inputs) else np.zeros((model.l, 0))
    if x0.size != model.n or U.shape[0] != model.l:
        raise InvalidInputError(
            f"model expects x0 of length {model.n} and {model.l} input rows, "
            f"got {x0.size} and {U.shape[0]}"
        )
    T = U.shape[1]
    X = np.empty((model.n, T + 1))
    X[:, 0] = x0
    A, B = model.A, model.B
    with np.errstate(over="ignore", invalid="ignore"):
        for j in range(T):
            X[:, j + 1] = A @ X[:, j] + B @ U[:, j]
    return X


@dataclass(frozen=True)
class StabilityReport:
    eigenvalues: np.ndarray
    spectral_radius: float
    continuous_real_parts: np.ndarray
    unstable: bool


def stability_report(model) -> StabilityReport:
    """Discrete spectrum of A; continuous growth rates are ln|lambda| / dt."""
    ev = numerics.eigenvalues(model.A)
    mag = np.abs(ev)
    radius = float(mag.max()) if mag.size else 0.0
    with np.errstate(divide="ignore"):
        rates = np.log(mag) / model.dt
    return StabilityReport(
        eigenvalues=ev,
        spectral_radius=radius,
        continuous_real_parts=rates,
        unstable=radius > 1.0 + UNSTABLE_MARGIN,
    )
