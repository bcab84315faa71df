"""Config documents, snapshots, series tables and certificate files.

Config grammar: one ``key = value`` per line, ``#`` starts a comment, keys
are dotted (``grid.n``, ``sim.cfl`` ...), vectors are comma lists.  The
canonical text form is sorted by key with normalised values, so emitting a
parsed canonical document reproduces it byte for byte.

Snapshot layout: a single-line JSON header terminated by ``\\n``, then the
momentum components as little-endian float64, row-major, last axis fastest.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable

import numpy as np

from .diagnostics import BlowupCertificate
from .dynamics import SERIES_COLUMNS, RhsForm, SeriesRow, SimConfig, SimState
from .errors import ConfigError, FormatError
from .spectral import Grid

SNAPSHOT_FORMAT = "eptorus-snapshot"
SNAPSHOT_VERSION = 1

# key -> type tag
SCHEMA: dict[str, str] = {
    "grid.n": "int-vector",
    "grid.L": "real-vector",
    "sim.t_end": "real",
    "sim.cfl": "real",
    "sim.dt_min": "real",
    "sim.dt_max": "real",
    "sim.dealias": "flag",
    "sim.detect_grad_factor": "real",
    "sim.detect_tail_frac": "real",
    "sim.rhs_form": "string",
    "scenario.kind": "string",
    "scenario.initial": "string",
    "scenario.direction": "int-vector",
    "scenario.x0": "real-vector",
    "scenario.margin": "real",
    "scenario.K_max": "int",
    "scenario.amplitude": "real",
    "scenario.eps": "real",
    "scenario.N": "int",
    "scenario.p": "real",
    "scenario.r": "real",
    "scenario.M": "real",
    "scenario.sigma": "real",
    "scenario.seed": "int",
    "output.dir": "string",
    "output.snapshot_every": "int",
}

_FLAGS = {"on": True, "true": True, "1": True, "off": False, "false": False, "0": False}


def _parse_real(text: str) -> float:
    v = float(text)
    if text.strip().lower() in ("nan", "+nan", "-nan"):
        raise ValueError("nan is not a valid setting")
    return v


def _parse_value(kind: str, text: str):
    if kind == "int":
        return int(text)
    if kind == "real":
        return _parse_real(text)
    if kind == "flag":
        try:
            return _FLAGS[text.lower()]
        except KeyError:
            raise ValueError(f"expected on/off, got {text!r}") from None
    if kind == "string":
        if not text:
            raise ValueError("empty string")
        return text
    if kind == "int-vector":
        return tuple(int(p) for p in text.split(","))
    if kind == "real-vector":
        return tuple(_parse_real(p) for p in text.split(","))
    raise AssertionError(kind)


def _format_real(v: float) -> str:
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return repr(float(v))


def _format_value(kind: str, value) -> str:
    if kind == "int":
        return str(int(value))
    if kind == "real":
        return _format_real(value)
    if kind == "flag":
        return "on" if value else "off"
    if kind == "string":
        return str(value)
    if kind == "int-vector":
        return ",".join(str(int(v)) for v in value)
    if kind == "real-vector":
        return ",".join(_format_real(v) for v in value)
    raise AssertionError(kind)


@dataclass
class ConfigDoc:
    """Typed dotted-key settings, with the source line of every key."""

    values: dict[str, Any] = field(default_factory=dict)
    lines: dict[str, int] = field(default_factory=dict, compare=False)

    def __contains__(self, key: str) -> bool:
        return key in self.values

    def __getitem__(self, key: str):
        return self.values[key]

    def get(self, key: str, default=None):
        return self.values.get(key, default)

    def set(self, key: str, value) -> None:
        if key not in SCHEMA:
            raise ConfigError(f"unknown key {key!r}")
        self.values[key] = _parse_value(SCHEMA[key], _format_value(SCHEMA[key], value))

    def require(self, *keys: str) -> None:
        missing = [k for k in keys if k not in self.values]
        if missing:
            raise ConfigError(f"missing required key(s): {', '.join(missing)}")


def parse_config(text: str) -> ConfigDoc:
    doc = ConfigDoc()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        key, value = (p.strip() for p in line.split("=", 1))
        if key not in SCHEMA:
            raise ConfigError(f"unknown key {key!r}", lineno)
        if key in doc.values:
            raise ConfigError(f"duplicate key {key!r}", lineno)
        value = "".join(value.split()) if SCHEMA[key].endswith("vector") else value
        try:
            doc.values[key] = _parse_value(SCHEMA[key], value)
        except ValueError as exc:
            raise ConfigError(f"{key}: expected {SCHEMA[key]}, got {value!r} ({exc})", lineno) from None
        doc.lines[key] = lineno
    return doc


def emit_config(doc: ConfigDoc) -> str:
    return "".join(f"{k} = {_format_value(SCHEMA[k], doc.values[k])}\n" for k in sorted(doc.values))


def read_config(path: str | os.PathLike) -> ConfigDoc:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text)


def grid_from_config(doc: ConfigDoc) -> Grid:
    doc.require("grid.n")
    n = doc["grid.n"]
    L = doc.get("grid.L", (1.0,) * len(n))
    try:
        return Grid(n, L)
    except ValueError as exc:
        raise ConfigError(str(exc), doc.lines.get("grid.n")) from None


def sim_config_from(doc: ConfigDoc, grid: Grid) -> SimConfig:
    doc.require("sim.t_end")
    kw: dict[str, Any] = {}
    for key, name in [("sim.cfl", "cfl"), ("sim.dt_min", "dt_min"), ("sim.dt_max", "dt_max"),
                      ("sim.dealias", "dealias"), ("sim.detect_grad_factor", "detect_grad_factor"),
                      ("sim.detect_tail_frac", "detect_tail_frac")]:
        if key in doc:
            kw[name] = doc[key]
    if "sim.rhs_form" in doc:
        try:
            kw["rhs_form"] = RhsForm(doc["sim.rhs_form"])
        except ValueError:
            raise ConfigError(f"sim.rhs_form must be convective or flux",
                              doc.lines.get("sim.rhs_form")) from None
    try:
        return SimConfig(grid, doc["sim.t_end"], **kw)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


# --- snapshots ------------------------------------------------------------


def write_snapshot(state: SimState, path: str | os.PathLike) -> None:
    grid = state.grid
    header = {
        "format": SNAPSHOT_FORMAT,
        "version": SNAPSHOT_VERSION,
        "d": grid.d,
        "n": list(grid.n),
        "L": list(grid.L),
        "t": float(state.t),
        "fields": [f"m{i + 1}" for i in range(grid.d)],
        "dtype": "float64",
        "byte_order": "little",
    }
    payload = np.ascontiguousarray(state.m, dtype="<f8").tobytes()
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8") + b"\n")
        fh.write(payload)


def read_snapshot(path: str | os.PathLike) -> SimState:
    with open(path, "rb") as fh:
        data = fh.read()
    nl = data.find(b"\n")
    if nl < 0:
        raise FormatError(f"{path}: missing header line")
    try:
        header = json.loads(data[:nl].decode("utf-8"))
        if header.get("format") != SNAPSHOT_FORMAT:
            raise FormatError(f"{path}: not a snapshot file")
        if header.get("dtype") != "float64" or header.get("byte_order") != "little":
            raise FormatError(f"{path}: unsupported sample encoding")
        d = int(header["d"])
        grid = Grid(tuple(header["n"]), tuple(header["L"]))
        t = float(header["t"])
        fields = header["fields"]
    except FormatError:
        raise
    except (ValueError, KeyError, TypeError) as exc:
        raise FormatError(f"{path}: bad header ({exc})") from None
    if grid.d != d or len(fields) != d:
        raise FormatError(f"{path}: header dimensions disagree")
    payload = data[nl + 1:]
    expected = 8 * d * grid.size
    if len(payload) != expected:
        raise FormatError(f"{path}: payload has {len(payload)} bytes, expected {expected}")
    m = np.frombuffer(payload, dtype="<f8").astype(float).reshape((d,) + grid.shape)
    return SimState(grid, t, m)


# --- series and certificates ----------------------------------------------


def _fmt(v: float) -> str:
    return "%.17g" % v


def write_series(rows: Iterable[SeriesRow], path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(SERIES_COLUMNS) + "\n")
        for r in rows:
            fh.write(",".join(_fmt(getattr(r, c)) for c in SERIES_COLUMNS) + "\n")


def read_series(path: str | os.PathLike) -> list[SeriesRow]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != SERIES_COLUMNS:
            raise FormatError(f"{path}: unexpected columns {header}")
        return [SeriesRow(*(float(v) for v in row)) for row in reader]


def _dump_json(doc: dict, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def write_certificate(cert: BlowupCertificate, path: str | os.PathLike) -> None:
    _dump_json(cert.to_dict(), path)


def read_certificate(path: str | os.PathLike) -> BlowupCertificate:
    with open(path, encoding="utf-8") as fh:
        return BlowupCertificate.from_dict(json.load(fh))


def write_json(doc: dict, path: str | os.PathLike) -> None:
    _dump_json(doc, path)
