"""Multichannel forced time series: CSV ingestion, decimation, z-scoring,
windowing and the train/validation/test manifest."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    BoundsError,
    ConfigError,
    DegenerateChannelError,
    GridError,
    InvalidInputError,
    SchemaError,
)

STATE_CHANNELS = ("x3", "phi", "theta", "psi", "v1", "v2")
INPUT_CHANNELS = ("alpha", "eta_cg")
GRID_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class Record:
    """Uniformly sampled states (n x m) and exogenous inputs (l x m).

    ``t_hat`` is the reference encounter period in seconds; windows and delays
    elsewhere in the package are expressed in units of it.
    """

    dt: float
    state: np.ndarray
    input: np.ndarray
    t_hat: float
    state_names: tuple[str, ...] = STATE_CHANNELS
    input_names: tuple[str, ...] = INPUT_CHANNELS
    t0: float = 0.0

    def __post_init__(self):
        state = np.atleast_2d(np.asarray(self.state, dtype=float))
        inp = np.asarray(self.input, dtype=float)
        if inp.ndim == 1:
            inp = inp[None, :]
        if inp.ndim != 2:
            raise InvalidInputError("input must be 2-D")
        if inp.shape[0] == 0:
            inp = np.zeros((0, state.shape[1]))
        object.__setattr__(self, "state", state)
        object.__setattr__(self, "input", inp)
        object.__setattr__(self, "state_names", tuple(self.state_names))
        object.__setattr__(self, "input_names", tuple(self.input_names))
        if state.shape[1] != inp.shape[1]:
            raise InvalidInputError(
                f"state has {state.shape[1]} samples but input has {inp.shape[1]}"
            )
        if len(self.state_names) != state.shape[0] or len(self.input_names) != inp.shape[0]:
            raise InvalidInputError("channel names do not match channel counts")
        if not (self.dt > 0 and self.t_hat > 0):
            raise InvalidInputError("dt and t_hat must be positive")
        if not (np.all(np.isfinite(state)) and np.all(np.isfinite(inp))):
            raise InvalidInputError("record contains non-finite samples")

    @property
    def n(self) -> int:
        return self.state.shape[0]

    @property
    def l(self) -> int:
        return self.input.shape[0]

    @property
    def m(self) -> int:
        return self.state.shape[1]

    @property
    def time(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.m)

    @property
    def samples_per_period(self) -> float:
        return self.t_hat / self.dt

    def with_arrays(self, state, input) -> "Record":
        return replace(self, state=state, input=input)


def _read_metadata(lines: Iterable[str]) -> dict[str, str]:
    meta = {}
    for line in lines:
        body = line[1:].strip()
        if ":" in body:
            key, value = body.split(":", 1)
            meta[key.strip()] = value.strip()
    return meta


def load_csv(
    path,
    t_hat: float | None = None,
    state_names: Sequence[str] | None = None,
    input_names: Sequence[str] | None = None,
) -> Record:
    """Read a record from CSV.

    The first column must be ``t``. Lines starting with ``#`` are metadata of
    the form ``# key: value``; recognised keys are ``t_hat``, ``state`` and
    ``input`` (space separated channel lists). Explicit arguments override the
    metadata, and the ship-motion schema is the fallback channel layout.
    """
    text = Path(path).read_text(encoding="utf-8")
    lines = text.splitlines()
    meta = _read_metadata(l for l in lines if l.startswith("#"))
    body = [l for l in lines if l.strip() and not l.startswith("#")]
    if not body:
        raise SchemaError(f"{path}: no header row")
    rows = list(csv.reader(body))
    header = [h.strip() for h in rows[0]]
    if header[0] != "t":
        raise SchemaError(f"{path}: first column must be 't', got {header[0]!r}")

    if state_names is None:
        state_names = meta["state"].split() if "state" in meta else STATE_CHANNELS
    if input_names is None:
        input_names = meta["input"].split() if "input" in meta else INPUT_CHANNELS
    if t_hat is None:
        if "t_hat" not in meta:
            raise SchemaError(f"{path}: t_hat not given and missing from metadata")
        t_hat = float(meta["t_hat"])

    missing = [c for c in (*state_names, *input_names) if c not in header]
    if missing:
        raise SchemaError(f"{path}: missing channel(s) {', '.join(missing)}")
    try:
        data = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float)
    except ValueError as exc:
        raise SchemaError(f"{path}: non-numeric value ({exc})") from exc
    if data.ndim != 2 or data.shape[0] < 2 or data.shape[1] != len(header):
        raise SchemaError(f"{path}: need at least two complete data rows")

    t = data[:, 0]
    dt = (t[-1] - t[0]) / (len(t) - 1)
    if not dt > 0:
        raise GridError(f"{path}: time column is not increasing")
    dev = np.max(np.abs(np.diff(t) - dt))
    if dev > GRID_TOL * dt:
        raise GridError(f"{path}: non-uniform time grid (max deviation {dev:.3g} s)")

    col = {name: i for i, name in enumerate(header)}
    state = data[:, [col[c] for c in state_names]].T
    inp = data[:, [col[c] for c in input_names]].T.reshape(len(input_names), -1)
    return Record(
        dt=float(dt),
        state=state,
        input=inp,
        t_hat=float(t_hat),
        state_names=tuple(state_names),
        input_names=tuple(input_names),
        t0=float(t[0]),
    )


def record_to_csv(record: Record, header: dict | None = None) -> str:
    """Serialise a record; ``header`` entries become leading ``# key: value`` lines."""
    buf = io.StringIO()
    for key, value in (header or {}).items():
        buf.write(f"# {key}: {value}\n")
    buf.write(f"# t_hat: {record.t_hat!r}\n")
    buf.write(f"# state: {' '.join(record.state_names)}\n")
    buf.write(f"# input: {' '.join(record.input_names)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t", *record.state_names, *record.input_names])
    t = record.time
    for j in range(record.m):
        writer.writerow(
            [repr(float(t[j]))]
            + [repr(float(v)) for v in record.state[:, j]]
            + [repr(float(v)) for v in record.input[:, j]]
        )
    return buf.getvalue()


def write_csv(record: Record, path, header: dict | None = None) -> None:
    Path(path).write_text(record_to_csv(record, header), encoding="utf-8")


def downsample(r: Record, factor: int) -> Record:
    """Keep every ``factor``-th sample from index 0 (plain decimation)."""
    if int(factor) != factor or factor < 1:
        raise InvalidInputError("downsampling factor must be a positive integer")
    factor = int(factor)
    if factor > r.m:
        raise InvalidInputError(f"factor {factor} exceeds record length {r.m}")
    return replace(
        r, state=r.state[:, ::factor], input=r.input[:, ::factor], dt=r.dt * factor
    )


def slice_window(r: Record, start: int, length: int) -> Record:
    if start < 0 or length < 1 or start + length > r.m:
        raise BoundsError(
            f"window [{start}, {start + length}) outside record of {r.m} samples"
        )
    return replace(
        r,
        state=r.state[:, start : start + length],
        input=r.input[:, start : start + length],
        t0=r.t0 + start * r.dt,
    )


@dataclass(frozen=True, eq=False)
class Standardizer:
    """Per-channel z-score statistics (population standard deviation)."""

    state_mean: np.ndarray
    state_std: np.ndarray
    input_mean: np.ndarray
    input_std: np.ndarray

    def standardize(self, r: Record) -> Record:
        return r.with_arrays(
            (r.state - self.state_mean[:, None]) / self.state_std[:, None],
            (r.input - self.input_mean[:, None]) / self.input_std[:, None],
        )

    def destandardize(self, r: Record) -> Record:
        return r.with_arrays(
            r.state * self.state_std[:, None] + self.state_mean[:, None],
            r.input * self.input_std[:, None] + self.input_mean[:, None],
        )

    def destandardize_state(self, x: np.ndarray) -> np.ndarray:
        return x * self.state_std[:, None] + self.state_mean[:, None]


def _channel_stats(blocks, names):
    data = np.concatenate(blocks, axis=1)
    mean = data.mean(axis=1)
    std = data.std(axis=1)
    flat = [names[i] for i in np.flatnonzero(std == 0)]
    if flat:
        raise DegenerateChannelError(f"zero-variance channel(s): {', '.join(flat)}")
    return mean, std


def fit_standardizer(records: Sequence[Record]) -> Standardizer:
    if not records:
        raise InvalidInputError("cannot fit a standardizer on an empty training set")
    s_mean, s_std = _channel_stats([r.state for r in records], records[0].state_names)
    i_mean, i_std = _channel_stats([r.input for r in records], records[0].input_names)
    return Standardizer(s_mean, s_std, i_mean, i_std)


def standardize(r: Record, s: Standardizer) -> Record:
    return s.standardize(r)


def destandardize(r: Record, s: Standardizer) -> Record:
    return s.destandardize(r)


ROLES = ("train", "validation", "test")


@dataclass(frozen=True)
class SplitSpec:
    """Record paths per role, as listed in a split manifest."""

    train: tuple[str, ...] = ()
    validation: tuple[str, ...] = ()
    test: tuple[str, ...] = ()
    base_dir: str = field(default=".", compare=False)

    def __post_init__(self):
        sets = [set(self.train), set(self.validation), set(self.test)]
        for i in range(3):
            for j in range(i + 1, 3):
                common = sets[i] & sets[j]
                if common:
                    raise ConfigError(
                        f"{ROLES[i]} and {ROLES[j]} share records: {sorted(common)}"
                    )

    def paths(self, role: str) -> list[Path]:
        return [Path(self.base_dir) / p for p in getattr(self, role)]

    def load(self, role: str, **kwargs) -> list[Record]:
        return [load_csv(p, **kwargs) for p in self.paths(role)]


def load_manifest(path) -> SplitSpec:
    """Parse ``<role> <path>`` lines; ``#`` starts a comment.

    Relative record paths resolve against the manifest's directory.
    """
    entries: dict[str, list[str]] = {r: [] for r in ROLES}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split(None, 1)
        role = parts[0].rstrip(":")
        if role not in entries or len(parts) != 2:
            raise ConfigError(f"{path}:{lineno}: expected '<train|validation|test> <path>'")
        entries[role].append(parts[1].strip())
    return SplitSpec(
        train=tuple(entries["train"]),
        validation=tuple(entries["validation"]),
        test=tuple(entries["test"]),
        base_dir=str(Path(path).parent),
    )
