import numpy as np
import pytest

from hdmdc import hankel, metrics, sweep, synth
from hdmdc.bayes import HyperPrior
from hdmdc.errors import BoundsError, InvalidInputError
from hdmdc.stats import boxplot_stats

from conftest import linear_oracle_record


def corpus(n_train, n_val, m=200, seed=0):
    """Records of one linear system with independent inputs and initial states."""
    sys_ = linear_oracle_record(n=2, l=1, m=m, seed=seed, t_hat=8.0)[0]
    rng = np.random.default_rng(seed + 100)
    out = []
    for _ in range(n_train + n_val):
        u = rng.standard_normal((1, m))
        out.append(synth.linear_record(sys_, rng.standard_normal(2), u, t_hat=8.0))
    return out[:n_train], out[n_train:]


def test_default_grid_cardinality():
    g = sweep.DoeGrid()
    assert len(g) == 294 == len(g.configs())
    assert g.configs()[0] == hankel.HyperParams(1, 0, 0)
    assert g.test_samples(32) == 480 and g.validation_start(32) == 160


def test_check_bounds():
    sweep.DoeGrid().check_bounds(20)
    with pytest.raises(BoundsError):
        sweep.DoeGrid().check_bounds(19)


def test_degenerate_sweep_equals_direct_call():
    tr, va = corpus(1, 1)
    g = sweep.DoeGrid(l_tr=(4,), l_dx=(0.5,), l_du=(0.25,), l_te=10)
    r = sweep.run_full_factorial(tr, va, g, samples_per_that=8)
    assert len(r.cells) == 1
    model = hankel.fit_hankel_dmdc(tr[0], hankel.HyperParams(4, 0.5, 0.25), samples_per_that=8)
    pred = hankel.predict_window(model, va[0], 4, 79)
    ref = metrics.evaluate(va[0].state[:, 4:84], pred)
    c = r.cells[0]
    assert (c.nrmse, c.nammae, c.jsd) == (ref.nrmse, ref.nammae, ref.jsd)


def test_cells_per_config_and_aggregates():
    tr, va = corpus(3, 2)
    g = sweep.DoeGrid(l_tr=(2, 4), l_dx=(0, 1), l_du=(0,), l_te=10)
    r = sweep.run_full_factorial(tr, va, g, samples_per_that=8)
    assert len(r.cells) == 4 * 6
    order = [(c.config_index, c.train_index, c.validation_index) for c in r.cells]
    assert order == sorted(order)
    for i in range(4):
        assert len(r.cells_for(i)) == 6
        assert r.aggregates[(i, "nrmse")] == boxplot_stats(r.values(i, "nrmse"))


def test_bound_violations_become_cell_errors():
    tr, va = corpus(1, 1, m=60)
    g = sweep.DoeGrid(l_tr=(2, 20), l_dx=(0,), l_du=(0,), l_te=5)
    r = sweep.run_full_factorial(tr, va, g, samples_per_that=8)
    ok, bad = r.cells
    assert ok.error == "" and np.isfinite(ok.nrmse)
    assert bad.error and np.isnan(bad.nrmse)
    assert r.aggregates[(1, "nrmse")].n_nonfinite == 1


def make_result(values):
    """SweepResult with hand-assigned nrmse cells per configuration."""
    g = sweep.DoeGrid(l_tr=tuple(float(i + 1) for i in range(len(values))), l_dx=(0,), l_du=(0,))
    cells = []
    for ci, vals in enumerate(values):
        for vi, v in enumerate(vals):
            cells.append(sweep.SweepCell(ci, 0, vi, ci + 1.0, 0.0, 0.0, 1, 0, 0, v, v / 10, v / 100, 0.5, False))
    r = sweep.SweepResult(g, g.configs(), cells, 1, len(values[0]))
    r.aggregates = r.recompute_aggregates()
    return r


def test_rank_single_config():
    r = make_result([[0.3, 0.4]])
    assert sweep.rank_configs(r)[0].config_index == 0


def test_rank_by_hand():
    r = make_result([[0.3, 0.5], [0.2, 0.5], [np.nan, np.nan]])
    ranked = sweep.rank_configs(r, "nrmse")
    assert [c.config_index for c in ranked] == [1, 0]
    assert ranked[0].nrmse == pytest.approx(0.35)
    labels = [lab for lab, _ in sweep.best_table(r)]
    assert labels == ["best_NRMSE", "best_NAMMAE", "best_JSD"]


def test_best_table_csv_schema():
    r = make_result([[0.0725, 0.0725]])
    text = sweep.best_table_to_csv(r)
    header, row = text.splitlines()[:2]
    assert header == "row,nrmse_avg,nammae_avg,jsd_avg,l_tr,l_dx,l_du"
    assert row.startswith("best_NRMSE,0.0725,")


def test_subdomain_filter():
    g = sweep.DoeGrid()
    assert sweep.subdomain_filter(g, {"l_tr": (1, 3), "l_dx": (1, 5), "l_du": (1, 2)}) == HyperPrior.default()
    p = sweep.subdomain_filter(g, {"l_tr": (2, 2), "l_dx": (1, 1), "l_du": (0, 0)})
    assert p.l_tr == (2, 2) and p.l_du == (0, 0)
    with pytest.raises(InvalidInputError):
        sweep.subdomain_filter(g, {"l_tr": (0.5, 3)})
    with pytest.raises(InvalidInputError):
        sweep.subdomain_filter(g, {"l_tr": (3.5, 4.5)})


def test_csv_outputs_have_one_row_per_item():
    tr, va = corpus(1, 2)
    g = sweep.DoeGrid(l_tr=(2, 4), l_dx=(0,), l_du=(0, 1), l_te=10)
    r = sweep.run_full_factorial(tr, va, g, samples_per_that=8)
    assert len(sweep.cells_to_csv(r).splitlines()) == 1 + 8
    assert len(sweep.aggregates_to_csv(r).splitlines()) == 1 + 4
