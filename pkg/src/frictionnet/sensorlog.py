"""Sensor log and ground-truth CSV files.

Log header (exact)::

    t,v,T_air,cam_s1..cam_s7,rcs1,rcs2,mu_obs,dFx1..dFx4,dFy1..dFy4,Fz1..Fz4

Empty fields denote absent readings.  Per-tire groups are all-or-nothing.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import LogFormatError
from .roadnet import PAVEMENTS, WEATHER

LOG_HEADER = (
    ["t", "v", "T_air"]
    + [f"cam_s{i}" for i in range(1, 8)]
    + ["rcs1", "rcs2", "mu_obs"]
    + [f"dFx{i}" for i in range(1, 5)]
    + [f"dFy{i}" for i in range(1, 5)]
    + [f"Fz{i}" for i in range(1, 5)]
)
TRUTH_HEADER = ["t", "R", "W", "mu_class"]


@dataclass(frozen=True)
class SensorLogRecord:
    timestamp: float
    speed: float
    air_temp: float | None = None
    camera_scores: tuple[float, ...] | None = None
    rcs1_raw: int | None = None
    rcs2_raw: int | None = None
    observer_mu: float | None = None
    observer_dFx_dmu: tuple[float, ...] | None = None
    observer_dFy_dmu: tuple[float, ...] | None = None
    observer_Fz: tuple[float, ...] | None = None


@dataclass(frozen=True)
class GroundTruth:
    timestamp: float
    pavement: int
    weather: int
    friction: int


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, int):
        return str(x)
    return repr(float(x))


def _group(values: Sequence[float] | None, n: int) -> list[str]:
    if values is None:
        return [""] * n
    return [_fmt(v) for v in values]


def write_log(records: Iterable[SensorLogRecord], path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(LOG_HEADER)
        for r in records:
            writer.writerow(
                [_fmt(r.timestamp), _fmt(r.speed), _fmt(r.air_temp)]
                + _group(r.camera_scores, 7)
                + [_fmt(r.rcs1_raw), _fmt(r.rcs2_raw), _fmt(r.observer_mu)]
                + _group(r.observer_dFx_dmu, 4)
                + _group(r.observer_dFy_dmu, 4)
                + _group(r.observer_Fz, 4)
            )


def check_header(found: Sequence[str], expected: Sequence[str], path) -> None:
    for i, name in enumerate(expected):
        if i >= len(found):
            raise LogFormatError(f"{path}: missing column {name!r}")
        if found[i].strip() != name:
            raise LogFormatError(f"{path}: column {i + 1} is {found[i]!r}, expected {name!r}")
    if len(found) > len(expected):
        raise LogFormatError(f"{path}: unexpected column {found[len(expected)]!r}")


def _float(cell: str, column: str, line: int, required: bool = False) -> float | None:
    cell = cell.strip()
    if not cell:
        if required:
            raise LogFormatError(f"line {line}: column {column!r} is required")
        return None
    try:
        value = float(cell)
    except ValueError:
        raise LogFormatError(f"line {line}: column {column!r} has non-numeric value {cell!r}") from None
    if not math.isfinite(value):
        raise LogFormatError(f"line {line}: column {column!r} is not finite")
    return value


def _int(cell: str, column: str, line: int) -> int | None:
    value = _float(cell, column, line)
    if value is None:
        return None
    if not value.is_integer():
        raise LogFormatError(f"line {line}: column {column!r} must be an integer")
    return int(value)


def _read_group(row, names, line) -> tuple[float, ...] | None:
    values = [_float(row[n], n, line) for n in names]
    if all(v is None for v in values):
        return None
    if any(v is None for v in values):
        missing = [n for n, v in zip(names, values) if v is None]
        raise LogFormatError(f"line {line}: partial group, missing {', '.join(missing)}")
    return tuple(values)


def read_log(path: str | os.PathLike) -> list[SensorLogRecord]:
    records = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise LogFormatError(f"{path}: empty file, missing column 't'") from None
        check_header(header, LOG_HEADER, path)
        last_t = -math.inf
        for line, cells in enumerate(reader, start=2):
            if not any(c.strip() for c in cells):
                continue
            if len(cells) != len(LOG_HEADER):
                raise LogFormatError(f"line {line}: expected {len(LOG_HEADER)} fields, got {len(cells)}")
            row = dict(zip(LOG_HEADER, cells))
            t = _float(row["t"], "t", line, required=True)
            if t < last_t:
                raise LogFormatError(f"line {line}: timestamp {t} decreases")
            last_t = t
            fz = _read_group(row, [f"Fz{i}" for i in range(1, 5)], line)
            if fz is not None and any(f <= 0 for f in fz):
                raise LogFormatError(f"line {line}: wheel loads must be positive")
            records.append(
                SensorLogRecord(
                    timestamp=t,
                    speed=_float(row["v"], "v", line, required=True),
                    air_temp=_float(row["T_air"], "T_air", line),
                    camera_scores=_read_group(row, [f"cam_s{i}" for i in range(1, 8)], line),
                    rcs1_raw=_int(row["rcs1"], "rcs1", line),
                    rcs2_raw=_int(row["rcs2"], "rcs2", line),
                    observer_mu=_float(row["mu_obs"], "mu_obs", line),
                    observer_dFx_dmu=_read_group(row, [f"dFx{i}" for i in range(1, 5)], line),
                    observer_dFy_dmu=_read_group(row, [f"dFy{i}" for i in range(1, 5)], line),
                    observer_Fz=fz,
                )
            )
    return records


def write_truth(truth: Iterable[GroundTruth], path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRUTH_HEADER)
        for g in truth:
            writer.writerow([_fmt(g.timestamp), PAVEMENTS[g.pavement], WEATHER[g.weather], g.friction + 1])


def read_truth(path: str | os.PathLike) -> list[GroundTruth]:
    out = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise LogFormatError(f"{path}: empty file, missing column 't'") from None
        check_header(header, TRUTH_HEADER, path)
        for line, cells in enumerate(reader, start=2):
            if not any(c.strip() for c in cells):
                continue
            if len(cells) != len(TRUTH_HEADER):
                raise LogFormatError(f"line {line}: expected {len(TRUTH_HEADER)} fields")
            t, pav, wea, mu = (c.strip() for c in cells)
            try:
                out.append(
                    GroundTruth(float(t), PAVEMENTS.index(pav), WEATHER.index(wea), int(mu) - 1)
                )
            except ValueError:
                raise LogFormatError(f"line {line}: bad ground-truth row {cells}") from None
            if not 0 <= out[-1].friction < 8:
                raise LogFormatError(f"line {line}: mu_class {mu} outside 1..8")
    return out
