"""Full-factorial design of experiment over (l_tr, l_dx, l_du)."""
from __future__ import annotations

import csv
import io
import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import dmdc, hankel, metrics
from .bayes import HyperPrior
from .errors import BoundsError, HdmdcError, InvalidInputError
from .hankel import HyperParams, nearest_int
from .stats import BoxPlotStats, boxplot_stats

METRICS = ("nrmse", "nammae", "jsd")
DEFAULT_L_TR = (1.0, 2.0, 3.0, 5.0, 7.0, 10.0)
DEFAULT_DELAYS = (0.0, 0.5, 1.0, 2.0, 3.0, 4.0, 5.0)


@dataclass(frozen=True)
class DoeGrid:
    l_tr: tuple[float, ...] = DEFAULT_L_TR
    l_dx: tuple[float, ...] = DEFAULT_DELAYS
    l_du: tuple[float, ...] = DEFAULT_DELAYS
    l_te: float = 15.0

    def __post_init__(self):
        for name in ("l_tr", "l_dx", "l_du"):
            levels = tuple(float(v) for v in getattr(self, name))
            if not levels:
                raise InvalidInputError(f"{name} needs at least one level")
            object.__setattr__(self, name, levels)

    def configs(self) -> list[HyperParams]:
        return [HyperParams(a, b, c) for a, b, c in itertools.product(self.l_tr, self.l_dx, self.l_du)]

    def __len__(self) -> int:
        return len(self.l_tr) * len(self.l_dx) * len(self.l_du)

    @property
    def max_delay(self) -> float:
        return max(max(self.l_dx), max(self.l_du))

    def validation_start(self, samples_per_that: float) -> int:
        return nearest_int(self.max_delay * samples_per_that)

    def test_samples(self, samples_per_that: float) -> int:
        return nearest_int(self.l_te * samples_per_that)

    def check_bounds(self, record_periods: float) -> None:
        """Both training and evaluation spans must fit in one record."""
        if max(self.l_tr) + self.max_delay > record_periods:
            raise BoundsError(
                f"l_tr_max + max delay = {max(self.l_tr) + self.max_delay} exceeds record "
                f"length {record_periods:g} periods"
            )
        if self.l_te + self.max_delay > record_periods:
            raise BoundsError(
                f"l_te + max delay = {self.l_te + self.max_delay} exceeds record "
                f"length {record_periods:g} periods"
            )


@dataclass(frozen=True)
class SweepCell:
    config_index: int
    train_index: int
    validation_index: int
    l_tr: float
    l_dx: float
    l_du: float
    n_tr: int
    s: int
    z: int
    nrmse: float
    nammae: float
    jsd: float
    spectral_radius: float
    unstable: bool
    error: str = ""


@dataclass(eq=False)
class SweepResult:
    grid: DoeGrid
    configs: list[HyperParams]
    cells: list[SweepCell]
    n_train: int
    n_validation: int
    aggregates: dict[tuple[int, str], BoxPlotStats] = field(default_factory=dict)

    def cells_for(self, config_index: int) -> list[SweepCell]:
        return [c for c in self.cells if c.config_index == config_index]

    def values(self, config_index: int, metric: str) -> np.ndarray:
        return np.array([getattr(c, metric) for c in self.cells_for(config_index)])

    def recompute_aggregates(self) -> dict[tuple[int, str], BoxPlotStats]:
        by_config = {i: [] for i in range(len(self.configs))}
        for c in self.cells:
            by_config[c.config_index].append(c)
        return {
            (i, m): boxplot_stats(np.array([getattr(c, m) for c in by_config[i]]))
            for i in range(len(self.configs))
            for m in METRICS
        }


def _evaluate_pair(args):
    ci, ti, h, train, validations, spt, start, steps, n_bins = args
    nan = float("nan")
    try:
        cfg = hankel.durations_to_counts(h, spt)
        model = hankel.fit_hankel_dmdc(train, cfg)
        rep = dmdc.stability_report(model)
    except HdmdcError as exc:
        cfg = None
        return [
            SweepCell(ci, ti, vi, h.l_tr, h.l_dx, h.l_du, 0, 0, 0, nan, nan, nan, nan, False, str(exc))
            for vi in range(len(validations))
        ]
    cells = []
    for vi, v in enumerate(validations):
        common = (ci, ti, vi, h.l_tr, h.l_dx, h.l_du, cfg.n_tr, cfg.s, cfg.z)
        try:
            pred = hankel.predict_window(model, v, start, steps)
            ref = v.state[:, start : start + steps + 1]
            r = metrics.evaluate(ref, pred, n_bins=n_bins)
            cells.append(SweepCell(*common, r.nrmse, r.nammae, r.jsd, rep.spectral_radius, rep.unstable))
        except HdmdcError as exc:
            cells.append(SweepCell(*common, nan, nan, nan, rep.spectral_radius, rep.unstable, str(exc)))
    return cells


def run_full_factorial(
    train_records,
    validation_records,
    grid: DoeGrid = DoeGrid(),
    samples_per_that: float = hankel.SAMPLES_PER_PERIOD,
    jobs: int = 1,
    n_bins: int = metrics.DEFAULT_BINS,
) -> SweepResult:
    """Fit one model per (configuration, training record), score it on every
    validation window. Cells come back ordered by (config, train, validation).

    Every validation window starts at the grid's largest delay so all
    configurations are scored on identical samples.
    """
    train_records = list(train_records)
    validation_records = list(validation_records)
    if not train_records or not validation_records:
        raise InvalidInputError("need at least one training and one validation record")
    configs = grid.configs()
    start = grid.validation_start(samples_per_that)
    steps = grid.test_samples(samples_per_that) - 1
    tasks = [
        (ci, ti, h, tr, validation_records, samples_per_that, start, steps, n_bins)
        for ci, h in enumerate(configs)
        for ti, tr in enumerate(train_records)
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            chunks = list(ex.map(_evaluate_pair, tasks, chunksize=4))
    else:
        chunks = [_evaluate_pair(t) for t in tasks]
    cells = [c for chunk in chunks for c in chunk]
    result = SweepResult(
        grid=grid,
        configs=configs,
        cells=cells,
        n_train=len(train_records),
        n_validation=len(validation_records),
    )
    result.aggregates = result.recompute_aggregates()
    return result


@dataclass(frozen=True)
class RankedConfig:
    config_index: int
    params: HyperParams
    nrmse: float
    nammae: float
    jsd: float
    n_finite: int


def _finite_mean(x):
    x = x[np.isfinite(x)]
    return float(x.mean()) if x.size else float("nan")


def rank_configs(r: SweepResult, metric: str = "nrmse") -> list[RankedConfig]:
    """Configurations ascending by mean ``metric`` over finite cells.

    Ties resolve by (l_tr, l_dx, l_du). Configurations without a single
    finite value of ``metric`` are left out.
    """
    if metric not in METRICS:
        raise InvalidInputError(f"metric must be one of {METRICS}")
    ranked = []
    for i, h in enumerate(r.configs):
        means = {m: _finite_mean(r.values(i, m)) for m in METRICS}
        n_fin = int(np.isfinite(r.values(i, metric)).sum())
        if n_fin:
            ranked.append(RankedConfig(i, h, means["nrmse"], means["nammae"], means["jsd"], n_fin))
    ranked.sort(key=lambda c: (getattr(c, metric), c.params.l_tr, c.params.l_dx, c.params.l_du))
    return ranked


def best_table(r: SweepResult) -> list[tuple[str, RankedConfig]]:
    """Best configuration per metric, labelled best_NRMSE / best_NAMMAE / best_JSD."""
    rows = []
    for m in METRICS:
        ranked = rank_configs(r, m)
        if ranked:
            rows.append((f"best_{m.upper()}", ranked[0]))
    return rows


def subdomain_filter(r, bounds: dict) -> HyperPrior:
    """Uniform prior over a box of the explored grid.

    ``r`` is a :class:`SweepResult` or a :class:`DoeGrid`; ``bounds`` maps
    each hyperparameter name to (lower, upper) in reference periods.
    """
    grid = r.grid if isinstance(r, SweepResult) else r
    out = {}
    for name in ("l_tr", "l_dx", "l_du"):
        levels = np.array(getattr(grid, name))
        lo, hi = bounds.get(name, (levels.min(), levels.max()))
        if lo > hi:
            raise InvalidInputError(f"{name}: lower bound above upper bound")
        if lo < levels.min() or hi > levels.max():
            raise InvalidInputError(
                f"{name} bounds [{lo}, {hi}] leave the explored range "
                f"[{levels.min()}, {levels.max()}]"
            )
        if not np.any((levels >= lo) & (levels <= hi)):
            raise InvalidInputError(f"{name} bounds [{lo}, {hi}] contain no grid level")
        out[name] = (float(lo), float(hi))
    return HyperPrior(**out)


def cells_to_csv(r: SweepResult) -> str:
    buf = io.StringIO()
    names = list(SweepCell.__dataclass_fields__)
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(names)
    for c in r.cells:
        d = asdict(c)
        w.writerow([repr(v) if isinstance(v, float) else v for v in (d[k] for k in names)])
    return buf.getvalue()


def aggregates_to_csv(r: SweepResult) -> str:
    buf = io.StringIO()
    stat_names = list(BoxPlotStats.__dataclass_fields__)
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["config_index", "l_tr", "l_dx", "l_du"] + [f"{m}_{s}" for m in METRICS for s in stat_names])
    for i, h in enumerate(r.configs):
        row = [i, repr(h.l_tr), repr(h.l_dx), repr(h.l_du)]
        for m in METRICS:
            st = asdict(r.aggregates[(i, m)])
            row += [repr(v) if isinstance(v, float) else v for v in (st[s] for s in stat_names)]
        w.writerow(row)
    return buf.getvalue()


def best_table_to_csv(r: SweepResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["row", "nrmse_avg", "nammae_avg", "jsd_avg", "l_tr", "l_dx", "l_du"])
    for label, c in best_table(r):
        w.writerow([label, repr(c.nrmse), repr(c.nammae), repr(c.jsd),
                    repr(c.params.l_tr), repr(c.params.l_dx), repr(c.params.l_du)])
    return buf.getvalue()
