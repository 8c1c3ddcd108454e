"""Command-line front end.

Every subcommand accepts ``--config FILE`` (YAML or JSON mapping). Config keys
are the long option names with dashes or underscores; an option given on the
command line wins over the config file. Outputs start with a ``#`` header
recording the toolkit version, a hash of the effective configuration and the
seeds, and contain nothing time-dependent, so reruns are byte-identical.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
from pathlib import Path

import numpy as np
import yaml

from . import __version__, bayes, dataset, dmdc, hankel, metrics, modelio, stats, sweep, synth
from .errors import ConfigError, DataError, HdmdcError, SchemaError

OUTPUT_DIR_ENV = "HDMDC_OUTPUT_DIR"


# --------------------------------------------------------------------------
# argument plumbing


def _floats(text):
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(v) for v in str(text).replace(",", " ").split()]


def _add(p, *flags, default=None, **kw):
    """Register an option whose default lives outside argparse.

    argparse sees ``None`` so that explicitly given options can be told apart
    from config-file values.
    """
    dest = flags[0].lstrip("-").replace("-", "_")
    p.add_argument(*flags, dest=dest, default=None, **kw)
    p.set_defaults(**{f"_default_{dest}": default})


def _common(p, seed=False):
    p.add_argument("--config", default=None, help="YAML/JSON file with option values")
    _add(p, "--out-dir", default=None, help=f"output directory (default ${OUTPUT_DIR_ENV} or .)")
    if seed:
        _add(p, "--seed", type=int, default=0)


def _resolve(args) -> dict:
    ns = vars(args)
    defaults = {k[len("_default_"):]: v for k, v in ns.items() if k.startswith("_default_")}
    cfg = {}
    if ns.get("config"):
        path = Path(ns["config"])
        if not path.is_file():
            raise ConfigError(f"config file {path} does not exist")
        loaded = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a mapping")
        for key, value in loaded.items():
            k = str(key).replace("-", "_")
            if k not in defaults:
                raise ConfigError(f"unknown config key {key!r} for '{ns['command']}'")
            cfg[k] = value
    out = {}
    for k, d in defaults.items():
        if ns.get(k) is not None:
            out[k] = ns[k]
        elif k in cfg:
            out[k] = cfg[k]
        else:
            out[k] = d
    if out.get("out_dir") is None:
        out["out_dir"] = os.environ.get(OUTPUT_DIR_ENV, ".")
    out["command"] = ns["command"]
    return out


def _config_hash(cfg: dict) -> str:
    # Output location and worker count do not change results, so they stay out of the hash.
    kept = {k: v for k, v in cfg.items() if k not in ("out_dir", "jobs")}
    blob = json.dumps(kept, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _header(cfg: dict, seeds=()) -> dict:
    return {
        "hdmdc": __version__,
        "command": cfg["command"],
        "config_hash": _config_hash(cfg),
        "seeds": " ".join(str(s) for s in seeds) if seeds else "none",
    }


def _header_text(header: dict) -> str:
    return "".join(f"# {k}: {v}\n" for k, v in header.items())


def _out_dir(cfg) -> Path:
    d = Path(cfg["out_dir"])
    d.mkdir(parents=True, exist_ok=True)
    return d


def _require_file(path, what):
    if path is None:
        raise ConfigError(f"--{what} is required")
    if not Path(path).is_file():
        raise ConfigError(f"{what} file {path} does not exist")
    return Path(path)


def _write(path: Path, header: dict, body: str) -> Path:
    path.write_text(_header_text(header) + body, encoding="utf-8")
    return path


def _rows_to_csv(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


def _read_table(path):
    """Generic CSV reader: returns (metadata, column names, float array rows x cols)."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    meta = dataset._read_metadata(l for l in lines if l.startswith("#"))
    body = [l for l in lines if l.strip() and not l.startswith("#")]
    if not body:
        raise SchemaError(f"{path}: empty table")
    rows = list(csv.reader(body))
    try:
        data = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float)
    except ValueError as exc:
        raise SchemaError(f"{path}: non-numeric value ({exc})") from exc
    return meta, [h.strip() for h in rows[0]], data.reshape(len(rows) - 1, len(rows[0]))


def _load_record(path, cfg) -> dataset.Record:
    rec = dataset.load_csv(_require_file(path, "record"), t_hat=cfg.get("t_hat"))
    if cfg.get("downsample", 1) not in (None, 1):
        rec = dataset.downsample(rec, int(cfg["downsample"]))
    return rec


def _load_corpus(cfg):
    """Train/validation/test records from a manifest, z-scored on the training set."""
    spec = dataset.load_manifest(_require_file(cfg["manifest"], "manifest"))
    corpus = {}
    for role in dataset.ROLES:
        for p in spec.paths(role):
            _require_file(p, "record")
        corpus[role] = [_load_record(p, cfg) for p in spec.paths(role)]
    if cfg.get("standardize", True) and corpus["train"]:
        st = dataset.fit_standardizer(corpus["train"])
        corpus = {r: [st.standardize(x) for x in recs] for r, recs in corpus.items()}
    return corpus


# --------------------------------------------------------------------------
# subcommands


def cmd_synth(cfg):
    out = _out_dir(cfg)
    kind = cfg["kind"]
    spt = float(cfg["samples_per_that"])
    count = int(cfg["count"])
    seeds = [cfg["seed"] + i for i in range(count)]
    header = _header(cfg, seeds)
    written = []
    for seed in seeds:
        if kind == "wave":
            spec = synth.WaveSpec(
                n_components=int(cfg["n_components"]), omega_min=cfg["omega_min"],
                omega_max=cfg["omega_max"], hs=cfg["hs"], tp=cfg["tp"], gamma=cfg["gamma"], seed=seed,
            )
            rec = synth.wave_record(spec, spec.tp / spt, int(round(cfg["periods"] * spt)))
        elif kind == "linear":
            rng = np.random.default_rng(cfg["system_seed"])
            sys_ = synth.random_stable_system(
                int(cfg["n_state"]), int(cfg["n_input"]), rng, radius=cfg["radius"]
            )
            rr = np.random.default_rng(seed)
            m = int(round(cfg["periods"] * spt))
            rec = synth.linear_record(
                sys_, rr.standard_normal(sys_.A_true.shape[0]),
                rr.standard_normal((sys_.B_true.shape[1], m)), t_hat=spt * sys_.dt,
            )
        elif kind == "duffing":
            rec = synth.duffing_benchmark(
                seed, n_periods=cfg["periods"], samples_per_period=int(spt),
                observed=tuple(str(cfg["observed"]).replace(",", " ").split()), hs=cfg["hs"],
            )
        else:
            raise ConfigError(f"unknown synth kind {kind!r}")
        path = out / f"{kind}_{seed}.csv"
        dataset.write_csv(rec, path, header)
        written.append(path)
    if cfg.get("split"):
        n_tr, n_va, n_te = (int(v) for v in str(cfg["split"]).split(","))
        if n_tr + n_va + n_te != count:
            raise ConfigError(f"split {cfg['split']} does not add up to count {count}")
        roles = ["train"] * n_tr + ["validation"] * n_va + ["test"] * n_te
        body = "".join(f"{r} {p.name}\n" for r, p in zip(roles, written))
        _write(out / "manifest.txt", header, body)
    return written


def _hyper(cfg):
    return hankel.HyperParams(float(cfg["l_tr"]), float(cfg["l_dx"]), float(cfg["l_du"]))


def cmd_fit(cfg):
    out = _out_dir(cfg)
    rec = _load_record(cfg["record"], cfg)
    model = hankel.fit_hankel_dmdc(
        rec, _hyper(cfg), window_end=cfg["window_end"], samples_per_that=float(cfg["samples_per_that"])
    )
    rep = dmdc.stability_report(model)
    header = _header(cfg)
    modelio.save_model(model, out / "model.json", meta=header)
    c = model.config
    body = _rows_to_csv(
        ["n", "l", "s", "z", "n_tr", "train_residual", "spectral_radius", "unstable"],
        [[model.n, model.l, c.s, c.z, c.n_tr, model.train_residual, rep.spectral_radius, int(rep.unstable)]],
    )
    _write(out / "fit_report.csv", header, body)
    return model


def _prediction_csv(t, names, traj, transient=None) -> str:
    cols = ["t", *names] + (["transient"] if transient is not None else [])
    rows = []
    for j in range(traj.shape[1]):
        row = [float(t[j]), *(float(v) for v in traj[:, j])]
        if transient is not None:
            row.append(int(transient[j]))
        rows.append(row)
    return _rows_to_csv(cols, rows)


def cmd_predict(cfg):
    out = _out_dir(cfg)
    model = modelio.load_model(_require_file(cfg["model"], "model"))
    rec = _load_record(cfg["record"], cfg)
    start = int(cfg["start"])
    steps = cfg["steps"]
    steps = rec.m - 1 - start if steps is None else int(steps)
    if isinstance(model, dmdc.DmdcModel):
        traj = dmdc.predict(model, rec.state[:, start], rec.input[:, start : start + steps])
        transient = None
    elif cfg["iic"]:
        p = hankel.predict_iic(model, rec.state[:, start], rec.input[:, start : start + steps])
        traj, transient = p.trajectory, p.transient
    else:
        traj = hankel.predict_window(model, rec, start, steps)
        transient = np.zeros(steps + 1, dtype=bool)
    t = rec.t0 + rec.dt * (start + np.arange(steps + 1))
    _write(out / "prediction.csv", _header(cfg), _prediction_csv(t, rec.state_names, traj, transient))
    return traj


def _aligned_channels(ref: dataset.Record, pred_path, suffix="", skip_transient=False):
    """Reference and predicted (channels x T) arrays matched by time stamp and name."""
    _, cols, data = _read_table(pred_path)
    if not cols or cols[0] != "t":
        raise SchemaError(f"{pred_path}: first column must be 't'")
    if skip_transient and "transient" in cols:
        data = data[data[:, cols.index("transient")] == 0]
    t = data[:, 0]
    idx = np.rint((t - ref.t0) / ref.dt).astype(int)
    if np.any(idx < 0) or np.any(idx >= ref.m) or np.max(np.abs(ref.t0 + idx * ref.dt - t), initial=0) > 1e-6 * ref.dt:
        raise DataError(f"{pred_path}: time stamps do not fall on the reference grid")
    names, pred_rows = [], []
    for name in ref.state_names:
        for cand in (name + suffix, name, name + "_mu"):
            if cand in cols:
                names.append(name)
                pred_rows.append(data[:, cols.index(cand)])
                break
    if not names:
        raise SchemaError(f"{pred_path}: no state channel of the reference found")
    ref_rows = ref.state[[ref.state_names.index(n) for n in names]][:, idx]
    return names, ref_rows, np.vstack(pred_rows), t


def cmd_metrics(cfg):
    out = _out_dir(cfg)
    ref = _load_record(cfg["ref"], cfg)
    names, R, P, _ = _aligned_channels(ref, _require_file(cfg["pred"], "pred"), skip_transient=cfg["skip_transient"])
    rep = metrics.evaluate(R, P, n_bins=int(cfg["n_bins"]), channel_names=names)
    header = _header(cfg)
    header["nammae_normalisation"] = rep.nammae_normalisation
    _write(out / "metrics.csv", header,
           _rows_to_csv(["nrmse", "nammae", "jsd", "T", "N"], [[rep.nrmse, rep.nammae, rep.jsd, rep.T, rep.N]]))
    rows = [[n, a, b, c] for n, a, b, c in zip(names, rep.nrmse_channels, rep.nammae_channels, rep.jsd_channels)]
    _write(out / "metrics_channels.csv", header, _rows_to_csv(["channel", "nrmse", "nammae", "jsd"], rows))
    return rep


def cmd_sweep(cfg):
    out = _out_dir(cfg)
    corpus = _load_corpus(cfg)
    grid = sweep.DoeGrid(
        l_tr=tuple(_floats(cfg["l_tr"])), l_dx=tuple(_floats(cfg["l_dx"])),
        l_du=tuple(_floats(cfg["l_du"])), l_te=float(cfg["l_te"]),
    )
    res = sweep.run_full_factorial(
        corpus["train"], corpus["validation"], grid,
        samples_per_that=float(cfg["samples_per_that"]), jobs=int(cfg["jobs"]), n_bins=int(cfg["n_bins"]),
    )
    header = _header(cfg)
    _write(out / "cells.csv", header, sweep.cells_to_csv(res))
    _write(out / "aggregate.csv", header, sweep.aggregates_to_csv(res))
    _write(out / "best.csv", header, sweep.best_table_to_csv(res))
    return res


def _ensemble_csv(e, band, names) -> str:
    cols = ["t"]
    for n in names:
        cols += [f"{n}_mu", f"{n}_sigma", f"{n}_band_lower", f"{n}_band_upper"]
    rows = []
    t = e.time
    for j in range(e.mu.shape[1]):
        row = [float(t[j])]
        for i in range(len(names)):
            row += [e.mu[i, j], e.sigma[i, j], band.lower[i, j], band.upper[i, j]]
        rows.append(row)
    return _rows_to_csv(cols, rows)


def cmd_bayes(cfg):
    out = _out_dir(cfg)
    prior = bayes.HyperPrior(
        l_tr=tuple(_floats(cfg["l_tr"])), l_dx=tuple(_floats(cfg["l_dx"])), l_du=tuple(_floats(cfg["l_du"]))
    )
    if cfg["manifest"]:
        corpus = _load_corpus(cfg)
        train = corpus["train"][int(cfg["train_index"])]
        tests = corpus["test"] or corpus["validation"]
    else:
        train = _load_record(cfg["train"], cfg)
        tests = [_load_record(cfg["test"], cfg) if cfg["test"] else train]
    spt = float(cfg["samples_per_that"])
    header = _header(cfg, [cfg["seed"]])
    results = []
    for i, test in enumerate(tests):
        start = cfg["start"]
        if start is None:
            start = hankel.durations_to_counts(prior.upper(), spt).max_delay
        window = (int(start), None if cfg["steps"] is None else int(cfg["steps"]))
        e = bayes.ensemble_predict(
            train, prior, n_mc=int(cfg["n_mc"]), prediction_window=window, seed=cfg["seed"],
            test=test, samples_per_that=spt, train_end=cfg["train_end"], iic=bool(cfg["iic"]),
            jobs=int(cfg["jobs"]),
        )
        band = bayes.chebyshev_band(e, float(cfg["k"]))
        h = dict(header, n_realizations=e.n_realizations, excluded=e.excluded, coverage_factor=band.k)
        name = "ensemble.csv" if len(tests) == 1 else f"ensemble_{i}.csv"
        _write(out / name, h, _ensemble_csv(e, band, test.state_names))
        results.append(e)
    return results


def cmd_validate_pdf(cfg):
    out = _out_dir(cfg)
    ref = _load_record(cfg["ref"], cfg)
    names, R, P, _ = _aligned_channels(ref, _require_file(cfg["pred"], "pred"), skip_transient=cfg["skip_transient"])
    seeds = np.random.SeedSequence(cfg["seed"]).spawn(len(names))
    kde_rows, summaries = [], []
    for i, name in enumerate(names):
        v = stats.validate_channel_pdf(
            R[i], P[i], channel=name, n_boot=int(cfg["n_boot"]), block_len=int(cfg["block_len"]),
            seed=seeds[i], n_points=int(cfg["grid_points"]),
        )
        for g, a, b, c, d, e_, f in zip(v.grid, v.ref_band.mean, v.ref_band.lower, v.ref_band.upper,
                                        v.pred_band.mean, v.pred_band.lower, v.pred_band.upper):
            kde_rows.append([name, g, a, b, c, d, e_, f])
        summaries.append(v.summary)
    header = _header(cfg, [cfg["seed"]])
    header["quantile_rule"] = stats.QUANTILE_RULE
    _write(out / "kde.csv", header, _rows_to_csv(
        ["channel", "y", "ref_mean", "ref_q0.025", "ref_q0.975", "pred_mean", "pred_q0.025", "pred_q0.975"],
        kde_rows))
    table = stats.jsd_table(summaries)
    _write(out / "jsd_summary.csv", header, _rows_to_csv(
        ["channel", "EV", "q0.025", "q0.975", "U"],
        [[s.channel, s.ev, s.q_low, s.q_high, s.width] for s in table]))
    return table


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hdmdc", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"hdmdc {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write synthetic records")
    _common(p, seed=True)
    _add(p, "--kind", choices=["wave", "linear", "duffing"], default="wave")
    _add(p, "--count", type=int, default=1, help="records to write (seeds seed..seed+count-1)")
    _add(p, "--split", default=None, help="train,validation,test counts; writes manifest.txt")
    _add(p, "--periods", type=float, default=20.0, help="record length in reference periods")
    _add(p, "--samples-per-that", type=float, default=32)
    _add(p, "--hs", type=float, default=7.0)
    _add(p, "--tp", type=float, default=9.2)
    _add(p, "--gamma", type=float, default=3.3)
    _add(p, "--n-components", type=int, default=100)
    _add(p, "--omega-min", type=float, default=0.41)
    _add(p, "--omega-max", type=float, default=1.47)
    _add(p, "--n-state", type=int, default=6)
    _add(p, "--n-input", type=int, default=2)
    _add(p, "--radius", type=float, default=0.95)
    _add(p, "--system-seed", type=int, default=0)
    _add(p, "--observed", default="x xdot", help="duffing channels to keep, e.g. 'x xdot'")

    def data_opts(p):
        _add(p, "--t-hat", type=float, default=None, help="reference period if not in the CSV metadata")
        _add(p, "--downsample", type=int, default=1)
        _add(p, "--samples-per-that", type=float, default=32)

    p = sub.add_parser("fit", help="fit a Hankel-DMDc model")
    _common(p)
    data_opts(p)
    _add(p, "--record", default=None)
    _add(p, "--l-tr", type=float, default=1.0)
    _add(p, "--l-dx", type=float, default=0.0)
    _add(p, "--l-du", type=float, default=0.0)
    _add(p, "--window-end", type=int, default=None)

    p = sub.add_parser("predict", help="predict a record window with a saved model")
    _common(p)
    data_opts(p)
    _add(p, "--model", default=None)
    _add(p, "--record", default=None)
    _add(p, "--start", type=int, default=0)
    _add(p, "--steps", type=int, default=None)
    _add(p, "--iic", action="store_true", default=False, help="zero-filled delay history")

    p = sub.add_parser("metrics", help="NRMSE, NAMMAE and JSD of a prediction")
    _common(p)
    data_opts(p)
    _add(p, "--ref", default=None)
    _add(p, "--pred", default=None)
    _add(p, "--n-bins", type=int, default=metrics.DEFAULT_BINS)
    _add(p, "--skip-transient", action="store_true", default=False)

    p = sub.add_parser("sweep", help="full-factorial hyperparameter sweep")
    _common(p)
    data_opts(p)
    _add(p, "--manifest", default=None)
    _add(p, "--l-tr", default=" ".join(map(str, sweep.DEFAULT_L_TR)))
    _add(p, "--l-dx", default=" ".join(map(str, sweep.DEFAULT_DELAYS)))
    _add(p, "--l-du", default=" ".join(map(str, sweep.DEFAULT_DELAYS)))
    _add(p, "--l-te", type=float, default=15.0)
    _add(p, "--n-bins", type=int, default=metrics.DEFAULT_BINS)
    _add(p, "--standardize", type=_bool, default=True)
    _add(p, "--jobs", type=int, default=1)

    p = sub.add_parser("bayes", help="Monte Carlo Bayesian Hankel-DMDc ensemble")
    _common(p, seed=True)
    data_opts(p)
    _add(p, "--manifest", default=None)
    _add(p, "--train-index", type=int, default=0)
    _add(p, "--train", default=None)
    _add(p, "--test", default=None)
    _add(p, "--l-tr", nargs=2, type=float, default=list(bayes.DEFAULT_PRIOR_BOUNDS["l_tr"]))
    _add(p, "--l-dx", nargs=2, type=float, default=list(bayes.DEFAULT_PRIOR_BOUNDS["l_dx"]))
    _add(p, "--l-du", nargs=2, type=float, default=list(bayes.DEFAULT_PRIOR_BOUNDS["l_du"]))
    _add(p, "--n-mc", type=int, default=100)
    _add(p, "--start", type=int, default=None)
    _add(p, "--steps", type=int, default=None)
    _add(p, "--train-end", type=int, default=None)
    _add(p, "--k", type=float, default=4.0)
    _add(p, "--iic", action="store_true", default=False)
    _add(p, "--standardize", type=_bool, default=True)
    _add(p, "--jobs", type=int, default=1)

    p = sub.add_parser("validate-pdf", help="bootstrapped KDE comparison and JSD table")
    _common(p, seed=True)
    data_opts(p)
    _add(p, "--ref", default=None)
    _add(p, "--pred", default=None)
    _add(p, "--n-boot", type=int, default=100)
    _add(p, "--block-len", type=int, default=32)
    _add(p, "--grid-points", type=int, default=stats.DEFAULT_GRID_POINTS)
    _add(p, "--skip-transient", action="store_true", default=False)
    return parser


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    t = str(text).lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {text!r}")


COMMANDS = {
    "synth": cmd_synth,
    "fit": cmd_fit,
    "predict": cmd_predict,
    "metrics": cmd_metrics,
    "sweep": cmd_sweep,
    "bayes": cmd_bayes,
    "validate-pdf": cmd_validate_pdf,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _resolve(args)
        COMMANDS[cfg["command"]](cfg)
    except HdmdcError as exc:
        record = {"error": type(exc).__name__, "message": str(exc), "exit_code": exc.exit_code}
        print(json.dumps(record), file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
