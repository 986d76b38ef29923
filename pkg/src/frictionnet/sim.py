"""Synthetic drives by ancestral sampling from the road network.

This is a stress-test generator, not a vehicle simulator: the pavement,
precipitation and air temperature of each scenario segment are clamped and
every other node is drawn afresh at each time step.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import InvalidClamp, InvalidEvidence, ScenarioError
from .network import Evidence, Network, validate_evidence
from .roadnet import (
    CAMERA_CLASSES,
    MU,
    P,
    PAVEMENTS,
    R,
    S_C,
    S_FO,
    S_RCS1,
    S_RCS2,
    S_T,
    W,
    WetnessBinning,
    discretize_temperature,
    friction_midpoint,
)
from .sensorlog import GroundTruth, SensorLogRecord

Rng = np.random.Generator | int | None


def _rng(seed: Rng) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _check_clamp(network: Network, clamped: Evidence) -> dict[str, int]:
    try:
        clamped = validate_evidence(network, clamped)
    except InvalidEvidence as exc:
        raise InvalidClamp(str(exc)) from None
    for name in clamped:
        loose = [p for p in network.parents(name) if p not in clamped]
        if loose:
            raise InvalidClamp(
                f"cannot clamp {name!r} without its parents {', '.join(loose)}; "
                "forward sampling would not condition on it"
            )
    return clamped


def sample_batch(
    network: Network, n: int, clamped: Evidence | None = None, rng: Rng = None
) -> np.ndarray:
    """Draw ``n`` complete assignments; columns follow ``network.names``.

    Clamped variables must form an ancestrally closed set (roots, or nodes
    whose parents are all clamped), so the draws come from the exact
    conditional distribution of the rest given the clamp.
    """
    clamped = _check_clamp(network, clamped or {})
    rng = _rng(rng)
    out = np.empty((n, len(network.variables)), dtype=np.int64)
    for name in network.order:
        col = network.position(name)
        if name in clamped:
            out[:, col] = clamped[name]
            continue
        parents = network.parents(name)
        rows = network.cpts[name].rows
        if parents:
            cards = [network.variable(p).cardinality for p in parents]
            row_idx = np.ravel_multi_index(
                tuple(out[:, network.position(p)] for p in parents), cards
            )
        else:
            row_idx = np.zeros(n, dtype=np.int64)
        cum = np.cumsum(rows, axis=1)
        u = rng.random(n)
        draws = (u[:, None] >= cum[row_idx]).sum(axis=1)
        # rounding can leave the last cumulative entry a hair under 1
        last_positive = np.array([np.flatnonzero(r > 0)[-1] for r in rows])
        out[:, col] = np.minimum(draws, last_positive[row_idx])
    return out


def ancestral_sample(network: Network, clamped: Evidence | None = None, rng_seed: Rng = None) -> dict[str, int]:
    """One complete assignment drawn given the clamped variables."""
    row = sample_batch(network, 1, clamped, rng_seed)[0]
    return {name: int(s) for name, s in zip(network.names, row)}


@dataclass(frozen=True)
class Segment:
    duration: float
    pavement: str
    precipitation: bool
    air_temperature: float
    speed: float
    excitation: float = 1.0
    camera_override: str | None = None

    def __post_init__(self):
        if not self.duration > 0:
            raise ScenarioError(f"segment duration must be positive, got {self.duration}")
        if not self.speed >= 0:
            raise ScenarioError(f"segment speed must be nonnegative, got {self.speed}")
        if self.pavement not in PAVEMENTS:
            raise ScenarioError(f"unknown pavement {self.pavement!r}")
        if not 0.0 <= self.excitation <= 1.0:
            raise ScenarioError("excitation is a probability in [0, 1]")
        if self.camera_override is not None and self.camera_override not in CAMERA_CLASSES:
            raise ScenarioError(f"unknown camera class {self.camera_override!r}")
        if not math.isfinite(self.air_temperature):
            raise ScenarioError("air temperature must be finite")


@dataclass(frozen=True)
class Scenario:
    segments: tuple[Segment, ...]

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        if not self.segments:
            raise ScenarioError("a scenario needs at least one segment")

    def steps(self, sample_rate: float) -> list[int]:
        return [max(1, round(s.duration * sample_rate)) for s in self.segments]


def _parse_bool(value) -> bool:
    if isinstance(value, bool):
        return value
    if isinstance(value, str) and value.lower() in ("true", "false"):
        return value.lower() == "true"
    raise ScenarioError(f"precipitation must be true or false, got {value!r}")


def scenario_from_document(doc: Mapping) -> Scenario:
    try:
        segments = [
            Segment(
                duration=float(s["duration"]),
                pavement=s["pavement"],
                precipitation=_parse_bool(s["precipitation"]),
                air_temperature=float(s["air_temperature"]),
                speed=float(s["speed"]),
                excitation=float(s.get("excitation", 1.0)),
                camera_override=s.get("camera_override"),
            )
            for s in doc["segments"]
        ]
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioError(f"malformed scenario: {exc!r}") from None
    return Scenario(tuple(segments))


def load_scenario(path: str | os.PathLike) -> Scenario:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: {exc}") from None
    return scenario_from_document(doc)


@dataclass
class SimulatedDrive:
    records: list[SensorLogRecord] = field(default_factory=list)
    truth: list[GroundTruth] = field(default_factory=list)

    def __post_init__(self):
        if len(self.records) != len(self.truth):
            raise ValueError("records and ground truth must be aligned")

    def __len__(self):
        return len(self.records)


@dataclass(frozen=True)
class SimulatorSettings:
    camera_distance: float = 6.3
    camera_confidence: float = 0.9
    wetness: WetnessBinning = WetnessBinning()
    wheel_load: float = 4000.0
    excited_sensitivity: float = 0.5
    idle_sensitivity: float = 0.02


def _camera_scores(label: int, confidence: float) -> tuple[float, ...]:
    rest = (1.0 - confidence) / (len(CAMERA_CLASSES) - 1)
    return tuple(confidence if i == label else rest for i in range(len(CAMERA_CLASSES)))


def generate_drive(
    network: Network,
    scenario: Scenario,
    sample_rate: float,
    rng_seed: Rng = None,
    settings: SimulatorSettings = SimulatorSettings(),
) -> SimulatedDrive:
    """Sensor log plus aligned ground truth for a scenario.

    The camera looks ``camera_distance`` ahead, so the frame captured at step
    ``j`` shows the road sampled for step ``j + ceil(d * rate)`` where
    ``d = distance / speed``.  At standstill it shows the current step.
    """
    if not sample_rate > 0:
        raise ScenarioError("sample rate must be positive")
    rng = _rng(rng_seed)
    steps = scenario.steps(sample_rate)
    blocks = []
    seg_of_step = []
    for k, (seg, n) in enumerate(zip(scenario.segments, steps)):
        clamp = {
            R: PAVEMENTS.index(seg.pavement),
            P: 0 if seg.precipitation else 1,
            S_T: discretize_temperature(seg.air_temperature),
        }
        blocks.append(sample_batch(network, n, clamp, rng))
        seg_of_step.extend([k] * n)
    samples = np.concatenate(blocks)
    total = len(samples)
    col = {name: network.position(name) for name in (R, W, MU, S_C, S_RCS1, S_RCS2, S_FO)}

    excited = rng.random(total)
    rcs_u = rng.random((total, 2))
    s = settings
    records, truth = [], []
    for j in range(total):
        seg = scenario.segments[seg_of_step[j]]
        t = j / sample_rate
        if seg.speed > 0:
            ahead = math.ceil(s.camera_distance / seg.speed * sample_rate - 1e-9)
            viewed = min(j + ahead, total - 1)
        else:
            viewed = j
        override = scenario.segments[seg_of_step[viewed]].camera_override
        label = CAMERA_CLASSES.index(override) if override else int(samples[viewed, col[S_C]])

        raw = []
        for i, node in enumerate((S_RCS1, S_RCS2)):
            lo, hi = s.wetness.interval(int(samples[j, col[node]]))
            raw.append(lo + min(int(rcs_u[j, i] * (hi - lo + 1)), hi - lo))

        sens = s.excited_sensitivity if excited[j] < seg.excitation else s.idle_sensitivity
        fz = (s.wheel_load,) * 4
        records.append(
            SensorLogRecord(
                timestamp=t,
                speed=seg.speed,
                air_temp=seg.air_temperature,
                camera_scores=_camera_scores(label, s.camera_confidence),
                rcs1_raw=raw[0],
                rcs2_raw=raw[1],
                observer_mu=friction_midpoint(int(samples[j, col[S_FO]])),
                observer_dFx_dmu=tuple(sens * f for f in fz),
                observer_dFy_dmu=tuple(0.5 * sens * f for f in fz),
                observer_Fz=fz,
            )
        )
        truth.append(
            GroundTruth(t, int(samples[j, col[R]]), int(samples[j, col[W]]), int(samples[j, col[MU]]))
        )
    return SimulatedDrive(records, truth)
