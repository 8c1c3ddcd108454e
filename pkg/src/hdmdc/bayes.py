"""Bayesian Hankel-DMDc: the training length and delays are uniform random
variables; a Monte Carlo ensemble of fits gives the pointwise mean and
standard deviation of the predicted trajectory."""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import hankel
from .dataset import Record
from .errors import EnsembleFailureError, InvalidInputError
from .hankel import HyperParams

DEFAULT_PRIOR_BOUNDS = {"l_tr": (1.0, 3.0), "l_dx": (1.0, 5.0), "l_du": (1.0, 2.0)}


@dataclass(frozen=True)
class HyperPrior:
    """Independent uniform ranges (in reference periods) for the three hyperparameters."""

    l_tr: tuple[float, float]
    l_dx: tuple[float, float]
    l_du: tuple[float, float]

    def __post_init__(self):
        for name in ("l_tr", "l_dx", "l_du"):
            lo, hi = getattr(self, name)
            if not (0 <= lo <= hi):
                raise InvalidInputError(f"{name} bounds must satisfy 0 <= lower <= upper")
        if self.l_tr[0] <= 0:
            raise InvalidInputError("l_tr lower bound must be positive")

    @classmethod
    def default(cls) -> "HyperPrior":
        return cls(**DEFAULT_PRIOR_BOUNDS)

    def upper(self) -> HyperParams:
        return HyperParams(self.l_tr[1], self.l_dx[1], self.l_du[1])


def sample_hyperparams(prior: HyperPrior, count: int, seed) -> list[HyperParams]:
    if count < 1:
        raise InvalidInputError("count must be >= 1")
    rng = np.random.default_rng(seed)
    cols = [rng.uniform(*getattr(prior, name), size=count) for name in ("l_tr", "l_dx", "l_du")]
    return [HyperParams(float(a), float(b), float(c)) for a, b, c in zip(*cols)]


@dataclass(frozen=True, eq=False)
class EnsemblePrediction:
    mu: np.ndarray
    sigma: np.ndarray
    n_realizations: int
    excluded: int
    seed: int | None
    realizations: np.ndarray = field(repr=False)
    params: tuple[HyperParams, ...] = ()
    start: int = 0
    dt: float = 1.0
    t0: float = 0.0

    @property
    def time(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.mu.shape[1])


@dataclass(frozen=True, eq=False)
class ChebyshevBand:
    lower: np.ndarray
    upper: np.ndarray
    k: float

    @property
    def nominal_coverage(self) -> float:
        """Distribution-free lower bound 1 - 1/k^2."""
        return 1.0 - 1.0 / self.k**2


def chebyshev_band(e: EnsemblePrediction, k: float = 4.0) -> ChebyshevBand:
    if not k > 0:
        raise InvalidInputError("coverage factor must be positive")
    return ChebyshevBand(lower=e.mu - k * e.sigma, upper=e.mu + k * e.sigma, k=k)


def _realization(args):
    train, h, train_end, test, start, steps, spt, iic = args
    model = hankel.fit_hankel_dmdc(train, h, window_end=train_end, samples_per_that=spt)
    return hankel.predict_window(model, test, start, steps, iic=iic)


def _order_free_moments(R: np.ndarray):
    # Sorting along the realization axis makes the reduction independent of
    # the order in which realizations were produced. Summing offsets from the
    # minimum keeps identical realizations exact (mu equal to them, sigma 0).
    S = np.sort(R, axis=0)
    mu = S[0] + (S - S[0]).sum(axis=0) / S.shape[0]
    D = np.sort((R - mu) ** 2, axis=0)
    return mu, np.sqrt(D.sum(axis=0) / S.shape[0])


def ensemble_from_params(
    train: Record,
    params,
    test: Record | None = None,
    start: int | None = None,
    steps: int | None = None,
    samples_per_that: float = hankel.SAMPLES_PER_PERIOD,
    train_end: int | None = None,
    iic: bool = False,
    seed=None,
    jobs: int = 1,
) -> EnsemblePrediction:
    """Fit and predict once per hyperparameter set on a common window.

    Every realization trains on the window of ``train`` ending at
    ``train_end`` and predicts ``test`` samples ``start .. start+steps``.
    Realizations with non-finite values are dropped and counted.
    """
    params = list(params)
    if not params:
        raise InvalidInputError("no hyperparameter realizations given")
    test = train if test is None else test
    if start is None:
        start = max(hankel.durations_to_counts(h, samples_per_that).max_delay for h in params)
    if steps is None:
        steps = test.m - 1 - start
    tasks = [(train, h, train_end, test, start, steps, samples_per_that, iic) for h in params]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            trajs = list(ex.map(_realization, tasks))
    else:
        trajs = [_realization(t) for t in tasks]
    R = np.stack(trajs)
    ok = np.all(np.isfinite(R), axis=(1, 2))
    if not ok.any():
        raise EnsembleFailureError(f"all {len(params)} realizations are non-finite")
    mu, sigma = _order_free_moments(R[ok])
    return EnsemblePrediction(
        mu=mu,
        sigma=sigma,
        n_realizations=int(ok.sum()),
        excluded=int((~ok).sum()),
        seed=seed,
        realizations=R[ok],
        params=tuple(params),
        start=start,
        dt=test.dt,
        t0=test.t0 + start * test.dt,
    )


def ensemble_predict(
    record: Record,
    prior: HyperPrior,
    n_mc: int = 100,
    prediction_window: tuple[int, int] | None = None,
    seed=0,
    test: Record | None = None,
    samples_per_that: float = hankel.SAMPLES_PER_PERIOD,
    train_end: int | None = None,
    iic: bool = False,
    jobs: int = 1,
) -> EnsemblePrediction:
    """Monte Carlo Bayesian Hankel-DMDc prediction.

    ``prediction_window`` is ``(start, steps)`` on ``test`` (defaults to the
    training record itself, starting after the largest possible delay).
    """
    params = sample_hyperparams(prior, n_mc, seed)
    if prediction_window is None:
        start = hankel.durations_to_counts(prior.upper(), samples_per_that).max_delay
        steps = None
    else:
        start, steps = prediction_window
    return ensemble_from_params(
        record, params, test=test, start=start, steps=steps,
        samples_per_that=samples_per_that, train_end=train_end, iic=iic, seed=seed, jobs=jobs,
    )


def band_coverage(e: EnsemblePrediction, band: ChebyshevBand) -> np.ndarray:
    """Fraction of realizations inside the band at each channel and time step."""
    R = e.realizations
    inside = (R >= band.lower[None]) & (R <= band.upper[None])
    return inside.mean(axis=0)
