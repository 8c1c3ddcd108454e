"""Synthetic ground truth: long-crested irregular waves and forced oracle
systems (exact linear recurrences and an RK4-integrated Duffing oscillator)."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dataset import Record
from .errors import DivergenceError, InvalidInputError

GRAVITY = 9.80665


@dataclass(frozen=True)
class WaveSpec:
    n_components: int = 100
    omega_min: float = 0.41
    omega_max: float = 1.47
    hs: float = 7.0
    tp: float = 9.2
    gamma: float = 3.3
    seed: int = 0

    def __post_init__(self):
        if not self.omega_max > self.omega_min > 0:
            raise InvalidInputError("need omega_max > omega_min > 0")
        if not (self.hs > 0 and self.tp > 0):
            raise InvalidInputError("hs and tp must be positive")
        if self.n_components < 1:
            raise InvalidInputError("need at least one wave component")

    @property
    def omega_peak(self) -> float:
        return 2.0 * np.pi / self.tp

    @property
    def d_omega(self) -> float:
        if self.n_components == 1:
            return self.omega_max - self.omega_min
        return (self.omega_max - self.omega_min) / (self.n_components - 1)


def _jonswap_shape(omega, wp, gamma):
    # Pierson-Moskowitz core with unit Hs; integrates to 1/16 before peak enhancement.
    omega = np.asarray(omega, dtype=float)
    out = np.zeros_like(omega)
    pos = omega > 0
    w = omega[pos]
    sigma = np.where(w <= wp, 0.07, 0.09)
    r = np.exp(-((w - wp) ** 2) / (2.0 * sigma**2 * wp**2))
    with np.errstate(under="ignore", over="ignore"):
        # log form keeps w -> 0 finite (w^-5 overflows where the exponential underflows)
        pm = (5.0 / 16.0) * wp**4 * np.exp(-5.0 * np.log(w) - 1.25 * (wp / w) ** 4)
    out[pos] = pm * gamma**r
    return out


def _enhancement_norm(wp, gamma):
    """Ratio of the unit-Hs PM variance (1/16) to the peak-enhanced variance."""
    w = np.linspace(0.2 * wp, 20.0 * wp, 200_001)
    var = np.trapezoid(_jonswap_shape(w, wp, gamma), w)
    # analytic omega^-5 tail beyond the grid
    var += (5.0 / 64.0) * wp**4 * w[-1] ** -4
    return (1.0 / 16.0) / var


def jonswap_density(omega, spec: WaveSpec):
    """JONSWAP spectral density [m^2 s] scaled so its variance is hs^2/16."""
    wp = spec.omega_peak
    scale = spec.hs**2 * _enhancement_norm(wp, spec.gamma)
    return scale * _jonswap_shape(omega, wp, spec.gamma)


def wave_components(spec: WaveSpec):
    """Frequencies, amplitudes sqrt(2 S dw) and uniform random phases."""
    if spec.n_components == 1:
        omega = np.array([spec.omega_min])
    else:
        omega = np.linspace(spec.omega_min, spec.omega_max, spec.n_components)
    amplitude = np.sqrt(2.0 * jonswap_density(omega, spec) * spec.d_omega)
    rng = np.random.default_rng(spec.seed)
    phase = rng.uniform(0.0, 2.0 * np.pi, spec.n_components)
    return omega, amplitude, phase


def synthesize_wave(spec: WaveSpec, t_grid) -> np.ndarray:
    """Elevation eta(t) = sum_i zeta_i cos(omega_i t + phi_i)."""
    t = np.asarray(t_grid, dtype=float)
    if t.size > 2:
        d = np.diff(t)
        if np.max(np.abs(d - d.mean())) > 1e-6 * abs(d.mean()):
            raise InvalidInputError("t_grid must be uniform")
    omega, amp, phase = wave_components(spec)
    return np.cos(np.outer(t, omega) + phase) @ amp


def wave_record(spec: WaveSpec, dt: float, m: int) -> Record:
    t = dt * np.arange(m)
    eta = synthesize_wave(spec, t)
    return Record(
        dt=dt,
        state=np.zeros((0, m)),
        input=eta[None, :],
        t_hat=spec.tp,
        state_names=(),
        input_names=("eta_cg",),
    )


@dataclass(frozen=True, eq=False)
class OracleSystem:
    """Known generator for synthetic records.

    ``kind="linear"`` uses ``A_true``/``B_true``; ``kind="duffing"`` integrates
    x'' + damping x' + stiffness x + cubic x^3 = gain u(t).
    """

    kind: str
    dt: float
    A_true: np.ndarray | None = None
    B_true: np.ndarray | None = None
    stiffness: float = 1.0
    cubic: float = 0.0
    damping: float = 0.0
    gain: float = 1.0

    def __post_init__(self):
        if self.kind not in ("linear", "duffing"):
            raise InvalidInputError(f"unknown oracle kind {self.kind!r}")
        if not self.dt > 0:
            raise InvalidInputError("dt must be positive")
        if self.kind == "linear":
            A = np.atleast_2d(np.asarray(self.A_true, dtype=float))
            B = np.asarray(self.B_true, dtype=float).reshape(A.shape[0], -1)
            if A.shape[0] != A.shape[1]:
                raise InvalidInputError("A_true must be square")
            object.__setattr__(self, "A_true", A)
            object.__setattr__(self, "B_true", B)


def linear_system(A, B, dt: float = 1.0) -> OracleSystem:
    return OracleSystem(kind="linear", dt=dt, A_true=A, B_true=B)


def random_stable_system(n: int, l: int, rng, radius: float = 0.9, dt: float = 1.0):
    """Random (A, B) with spectral radius exactly ``radius``."""
    A = rng.standard_normal((n, n))
    A *= radius / np.max(np.abs(np.linalg.eigvals(A)))
    B = rng.standard_normal((n, l))
    return linear_system(A, B, dt)


def prbs(l: int, m: int, rng, hold: int = 1) -> np.ndarray:
    """Random +/-1 sequence held for ``hold`` samples per level."""
    levels = rng.choice([-1.0, 1.0], size=(l, -(-m // hold)))
    return np.repeat(levels, hold, axis=1)[:, :m]


def simulate_linear(sys: OracleSystem, x0, inputs) -> np.ndarray:
    """Iterate x_{j+1} = A x_j + B u_j; returns n x (T+1) for l x T inputs."""
    if sys.kind != "linear":
        raise InvalidInputError("simulate_linear needs a linear oracle")
    A, B = sys.A_true, sys.B_true
    n, l = B.shape
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    U = np.asarray(inputs, dtype=float)
    if U.ndim == 1:
        U = U[None, :]
    if x0.size != n or U.shape[0] != l:
        raise InvalidInputError(
            f"expected x0 of length {n} and {l} input rows, got {x0.size} and {U.shape[0]}"
        )
    T = U.shape[1]
    X = np.empty((n, T + 1))
    X[:, 0] = x0
    for j in range(T):
        X[:, j + 1] = A @ X[:, j] + B @ U[:, j]
    return X


def linear_record(sys: OracleSystem, x0, inputs, t_hat: float) -> Record:
    """Record of m samples; the final input column only pairs with the last state."""
    U = np.atleast_2d(np.asarray(inputs, dtype=float))
    X = simulate_linear(sys, x0, U[:, :-1])
    return Record(
        dt=sys.dt,
        state=X,
        input=U,
        t_hat=t_hat,
        state_names=tuple(f"x{i}" for i in range(X.shape[0])),
        input_names=tuple(f"u{i}" for i in range(U.shape[0])),
    )


def simulate_duffing(sys: OracleSystem, x0, forcing) -> np.ndarray:
    """Fixed-step RK4 of the forced Duffing oscillator.

    ``forcing`` holds u at the sample instants and is linearly interpolated
    inside each step. Returns the 2 x T trajectory of (x, x').
    """
    if sys.kind != "duffing":
        raise InvalidInputError("simulate_duffing needs a duffing oracle")
    u = np.asarray(forcing, dtype=float).reshape(-1)
    T = u.size
    h = float(sys.dt)
    d, k, c, g = (float(p) for p in (sys.damping, sys.stiffness, sys.cubic, sys.gain))

    def rhs(x, v, f):
        return v, g * f - d * v - k * x - c * x**3

    out = np.empty((2, T))
    x, v = (float(a) for a in np.asarray(x0, dtype=float).reshape(2))
    out[:, 0] = x, v
    for j in range(T - 1):
        # plain floats: overflow in x**3 raises instead of warning
        f0, f1 = float(u[j]), float(u[j + 1])
        fm = 0.5 * (f0 + f1)
        try:
            k1x, k1v = rhs(x, v, f0)
            k2x, k2v = rhs(x + 0.5 * h * k1x, v + 0.5 * h * k1v, fm)
            k3x, k3v = rhs(x + 0.5 * h * k2x, v + 0.5 * h * k2v, fm)
            k4x, k4v = rhs(x + h * k3x, v + h * k3v, f1)
            x += h / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x)
            v += h / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
        except OverflowError:
            x = v = float("inf")
        if not (math.isfinite(x) and math.isfinite(v)):
            raise DivergenceError(f"Duffing integration diverged at step {j + 1}", step=j + 1)
        out[:, j + 1] = x, v
    return out


def duffing_record(sys: OracleSystem, x0, forcing, t_hat: float) -> Record:
    X = simulate_duffing(sys, x0, forcing)
    return Record(
        dt=sys.dt,
        state=X,
        input=np.asarray(forcing, dtype=float).reshape(1, -1),
        t_hat=t_hat,
        state_names=("x", "xdot"),
        input_names=("u",),
    )


# Benchmark used for the delay-embedding comparison: damped hardening
# oscillator near resonance, driven by a JONSWAP-shaped sea whose peak period
# is the reference period. Only the displacement is observed by default, so
# the velocity is a latent variable (as rates are for the ship angles).
DUFFING_BENCHMARK = dict(stiffness=1.0, cubic=1.0, damping=0.3, gain=1.0)


def duffing_benchmark(
    seed: int,
    n_periods: float = 40,
    samples_per_period: int = 32,
    observed: tuple[str, ...] = ("x",),
    hs: float = 2.0,
) -> Record:
    tp = 2.0 * np.pi
    dt = tp / samples_per_period
    m = int(round(n_periods * samples_per_period))
    wave = WaveSpec(
        omega_min=0.41 * 9.2 / tp, omega_max=1.47 * 9.2 / tp, hs=hs, tp=tp, seed=seed
    )
    u = synthesize_wave(wave, dt * np.arange(m))
    sys = OracleSystem(kind="duffing", dt=dt, **DUFFING_BENCHMARK)
    full = duffing_record(sys, (0.0, 0.0), u, t_hat=tp)
    rows = [full.state_names.index(c) for c in observed]
    return Record(
        dt=dt,
        state=full.state[rows],
        input=full.input,
        t_hat=tp,
        state_names=tuple(observed),
        input_names=full.input_names,
    )
