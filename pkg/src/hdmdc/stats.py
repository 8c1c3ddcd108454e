"""Statistical validation: Gaussian KDE, moving block bootstrap, pointwise
quantile bands over replicate PDFs, KDE-based JSD tables and box-plot
summaries."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateChannelError, InvalidInputError
from .metrics import js_divergence

DEFAULT_GRID_POINTS = 512
GRID_PAD_BANDWIDTHS = 5.0
QUANTILE_RULE = "linear interpolation between order statistics (type 7)"


@dataclass(frozen=True, eq=False)
class KdeEstimate:
    grid: np.ndarray
    density: np.ndarray
    bandwidth: float

    def integral(self) -> float:
        return float(np.trapezoid(self.density, self.grid))


def bandwidth(series) -> float:
    """h = sigma * T^(-1/5), population sigma, no extra prefactor."""
    x = np.asarray(series, dtype=float).reshape(-1)
    if x.size < 2:
        raise InvalidInputError("KDE needs at least two samples")
    sigma = x.std()
    if not sigma > 0:
        raise DegenerateChannelError("KDE of a zero-variance series")
    return float(sigma * x.size ** (-0.2))


def default_grid(*series, n_points: int = DEFAULT_GRID_POINTS) -> np.ndarray:
    """Grid over the joint data range padded by 5 of the widest bandwidth."""
    h = max(bandwidth(s) for s in series)
    lo = min(np.min(s) for s in series) - GRID_PAD_BANDWIDTHS * h
    hi = max(np.max(s) for s in series) + GRID_PAD_BANDWIDTHS * h
    return np.linspace(lo, hi, n_points)


def kde_pdf(series, grid=None) -> KdeEstimate:
    x = np.asarray(series, dtype=float).reshape(-1)
    h = bandwidth(x)
    y = default_grid(x) if grid is None else np.asarray(grid, dtype=float)
    xi = (y[:, None] - x[None, :]) / h
    dens = np.exp(-0.5 * xi**2).sum(axis=1) / (x.size * h * np.sqrt(2.0 * np.pi))
    return KdeEstimate(grid=y, density=dens, bandwidth=h)


@dataclass(frozen=True, eq=False)
class BootstrapSet:
    replicates: np.ndarray
    block_len: int
    seed: int | None
    starts: np.ndarray


def moving_block_bootstrap(series, block_len: int, n_replicates: int, seed=None) -> BootstrapSet:
    """Concatenate uniformly drawn overlapping blocks, truncated to the series length."""
    x = np.asarray(series, dtype=float).reshape(-1)
    T = x.size
    if not 1 <= block_len <= T:
        raise InvalidInputError(f"block_len must be in [1, {T}], got {block_len}")
    if n_replicates < 1:
        raise InvalidInputError("n_replicates must be >= 1")
    rng = np.random.default_rng(seed)
    n_blocks = -(-T // block_len)
    starts = rng.integers(0, T - block_len + 1, size=(n_replicates, n_blocks))
    idx = (starts[:, :, None] + np.arange(block_len)).reshape(n_replicates, -1)[:, :T]
    return BootstrapSet(replicates=x[idx], block_len=block_len, seed=seed, starts=starts)


@dataclass(frozen=True, eq=False)
class PdfBand:
    lower: np.ndarray
    upper: np.ndarray
    width: np.ndarray
    mean: np.ndarray
    p_low: float
    p_high: float


def pdf_confidence(pdfs, p_low: float = 0.025, p_high: float = 0.975, grids=None) -> PdfBand:
    """Pointwise quantiles of replicate densities evaluated on one shared grid.

    ``pdfs`` is either a (B, G) array or a sequence of :class:`KdeEstimate`.
    """
    if len(pdfs) and isinstance(pdfs[0], KdeEstimate):
        grid0 = pdfs[0].grid
        for k in pdfs[1:]:
            if k.grid.shape != grid0.shape or not np.array_equal(k.grid, grid0):
                raise InvalidInputError("replicate PDFs are on different grids")
        P = np.vstack([k.density for k in pdfs])
    else:
        P = np.asarray(pdfs, dtype=float)
    if P.ndim != 2 or P.shape[0] < 2:
        raise InvalidInputError("need at least two replicate PDFs")
    lo, hi = np.quantile(P, [p_low, p_high], axis=0)
    return PdfBand(lower=lo, upper=hi, width=hi - lo, mean=P.mean(axis=0), p_low=p_low, p_high=p_high)


def trapezoid_masses(grid, density) -> np.ndarray:
    """Probability masses from trapezoidal weights, renormalised to sum 1."""
    g = np.asarray(grid, dtype=float)
    w = np.empty_like(g)
    d = np.diff(g)
    w[0] = d[0] / 2
    w[-1] = d[-1] / 2
    w[1:-1] = (d[:-1] + d[1:]) / 2
    p = np.clip(density, 0.0, None) * w
    return p / p.sum()


def jsd_of_kdes(a: KdeEstimate, b: KdeEstimate) -> float:
    if a.grid.shape != b.grid.shape or not np.array_equal(a.grid, b.grid):
        raise InvalidInputError("KDE estimates must share a grid")
    return js_divergence(trapezoid_masses(a.grid, a.density), trapezoid_masses(b.grid, b.density))


@dataclass(frozen=True)
class JsdSummary:
    """Expected value and quantile interval of bootstrapped JSD for one channel."""

    channel: str
    ev: float
    q_low: float
    q_high: float

    @property
    def width(self) -> float:
        return self.q_high - self.q_low


@dataclass(frozen=True, eq=False)
class ChannelPdfValidation:
    channel: str
    grid: np.ndarray
    ref_band: PdfBand
    pred_band: PdfBand
    jsd_samples: np.ndarray
    summary: JsdSummary


def validate_channel_pdf(
    ref, pred, channel: str = "x", n_boot: int = 100, block_len: int = 32,
    seed=None, p_low: float = 0.025, p_high: float = 0.975, n_points: int = DEFAULT_GRID_POINTS,
) -> ChannelPdfValidation:
    """Bootstrap both series, estimate replicate PDFs on a shared grid, and
    summarise the replicate-wise JSD between reference and prediction."""
    ref = np.asarray(ref, dtype=float).reshape(-1)
    pred = np.asarray(pred, dtype=float).reshape(-1)
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    s_ref, s_pred = ss.spawn(2)
    br = moving_block_bootstrap(ref, min(block_len, ref.size), n_boot, s_ref)
    bp = moving_block_bootstrap(pred, min(block_len, pred.size), n_boot, s_pred)
    grid = default_grid(ref, pred, n_points=n_points)
    kr = [kde_pdf(r, grid) for r in br.replicates]
    kp = [kde_pdf(p, grid) for p in bp.replicates]
    j = np.array([jsd_of_kdes(a, b) for a, b in zip(kr, kp)])
    lo, hi = np.quantile(j, [p_low, p_high])
    return ChannelPdfValidation(
        channel=channel,
        grid=grid,
        ref_band=pdf_confidence(kr, p_low, p_high),
        pred_band=pdf_confidence(kp, p_low, p_high),
        jsd_samples=j,
        summary=JsdSummary(channel=channel, ev=float(j.mean()), q_low=float(lo), q_high=float(hi)),
    )


def jsd_table(summaries) -> list[JsdSummary]:
    """Per-channel rows followed by their channel average ("avg")."""
    rows = list(summaries)
    avg = JsdSummary(
        channel="avg",
        ev=float(np.mean([r.ev for r in rows])),
        q_low=float(np.mean([r.q_low for r in rows])),
        q_high=float(np.mean([r.q_high for r in rows])),
    )
    return rows + [avg]


@dataclass(frozen=True)
class BoxPlotStats:
    q1: float
    median: float
    q3: float
    whisker_low: float
    whisker_high: float
    mean: float
    n_outliers: int
    n: int
    n_nonfinite: int = 0


def boxplot_stats(values) -> BoxPlotStats:
    """Quartiles (type 7), 1.5 IQR whiskers and mean.

    Non-finite values are excluded from the quartiles and counted both in
    ``n_nonfinite`` and as outliers; the mean is over finite values.
    """
    v = np.asarray(values, dtype=float).reshape(-1)
    if v.size == 0:
        raise InvalidInputError("boxplot_stats needs at least one value")
    fin = v[np.isfinite(v)]
    n_bad = int(v.size - fin.size)
    if fin.size == 0:
        nan = float("nan")
        return BoxPlotStats(nan, nan, nan, nan, nan, nan, n_bad, int(v.size), n_bad)
    q1, med, q3 = np.quantile(fin, [0.25, 0.5, 0.75])
    iqr = q3 - q1
    lo_fence, hi_fence = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    inside = fin[(fin >= lo_fence) & (fin <= hi_fence)]
    return BoxPlotStats(
        q1=float(q1),
        median=float(med),
        q3=float(q3),
        whisker_low=float(inside.min()),
        whisker_high=float(inside.max()),
        mean=float(fin.mean()),
        n_outliers=int(fin.size - inside.size) + n_bad,
        n=int(v.size),
        n_nonfinite=n_bad,
    )
