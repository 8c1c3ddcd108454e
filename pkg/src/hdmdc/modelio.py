"""Versioned JSON model files. Floats are written with their shortest exact
representation, so a save/load round trip is bit-exact."""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .dmdc import DmdcModel
from .errors import SchemaError
from .hankel import HankelConfig, HankelDmdcModel

FORMAT = "hdmdc-model"
VERSION = 1


def _matrix(M: np.ndarray) -> dict:
    return {"rows": int(M.shape[0]), "cols": int(M.shape[1]), "data": [float(v) for v in M.ravel()]}


def _unmatrix(d: dict) -> np.ndarray:
    data = np.array(d["data"], dtype=float)
    if data.size != d["rows"] * d["cols"]:
        raise SchemaError("matrix entry count does not match its shape")
    return data.reshape(d["rows"], d["cols"])


def model_to_dict(model) -> dict:
    out = {"format": FORMAT, "version": VERSION, "dt": float(model.dt)}
    if isinstance(model, HankelDmdcModel):
        cfg = model.config
        out.update(
            kind="hankel",
            n=model.n,
            l=model.l,
            delays={"s": cfg.s, "z": cfg.z, "n_tr": cfg.n_tr, "samples_per_that": cfg.samples_per_that},
            train_residual=model.train_residual if math.isfinite(model.train_residual) else None,
        )
    else:
        out.update(kind="dmdc", n=model.n, l=model.l)
    out["A"] = _matrix(model.A)
    out["B"] = _matrix(model.B)
    return out


def model_from_dict(d: dict):
    if d.get("format") != FORMAT:
        raise SchemaError("not an hdmdc model file")
    if d.get("version") != VERSION:
        raise SchemaError(f"unsupported model file version {d.get('version')}")
    A, B = _unmatrix(d["A"]), _unmatrix(d["B"])
    if d["kind"] == "dmdc":
        return DmdcModel(A=A, B=B, dt=d["dt"])
    if d["kind"] == "hankel":
        dl = d["delays"]
        cfg = HankelConfig(s=dl["s"], z=dl["z"], n_tr=dl["n_tr"], samples_per_that=dl["samples_per_that"])
        res = d.get("train_residual")
        return HankelDmdcModel(
            A=A, B=B, n=d["n"], l=d["l"], config=cfg, dt=d["dt"],
            train_residual=float("nan") if res is None else res,
        )
    raise SchemaError(f"unknown model kind {d['kind']!r}")


def dumps(model, meta: dict | None = None) -> str:
    d = model_to_dict(model)
    if meta:
        d["meta"] = meta
    return json.dumps(d, indent=1) + "\n"


def save_model(model, path, meta: dict | None = None) -> None:
    Path(path).write_text(dumps(model, meta), encoding="utf-8")


def load_model(path):
    try:
        d = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid model file ({exc})") from exc
    return model_from_dict(d)
