"""Replay of recorded or simulated sensor logs through the road network."""

from __future__ import annotations

import csv
import heapq
import math
import os
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import LengthMismatch, NonPositiveLoad, ZeroOrNegativeSpeed
from .inference import Distribution, PosteriorCache
from .metrics import (
    PAVEMENT_VARIABLE,
    WEATHER_VARIABLE,
    accuracy,
    camera_scores_to_marginals,
    hellinger,
    split_camera_label,
)
from .network import Network
from .roadnet import (
    MU,
    R,
    S_C,
    S_FO,
    S_RCS1,
    S_RCS2,
    S_T,
    SENSORS,
    W,
    WetnessBinning,
    discretize_friction,
    discretize_temperature,
    discretize_wetness,
)
from .sensorlog import GroundTruth, SensorLogRecord

CAMERA_DISTANCE = 6.3
# slack when comparing effective camera times with log timestamps
TIME_EPS = 1e-9


def camera_delay(distance: float, speed: float) -> float:
    """Time until the road seen by the camera reaches the front tires."""
    if not distance > 0:
        raise ValueError(f"camera distance must be positive, got {distance}")
    if not speed > 0:
        raise ZeroOrNegativeSpeed(f"no delay defined at speed {speed}")
    return distance / speed


def observer_sensitivity(dF_dmu: float, Fz: float) -> float:
    """Tire force sensitivity to the friction coefficient, relative to wheel load."""
    if not Fz > 0:
        raise NonPositiveLoad(f"wheel load must be positive, got {Fz}")
    return dF_dmu / Fz


@dataclass(frozen=True)
class ObserverGate:
    threshold: float = 0.1

    def __post_init__(self):
        if not self.threshold > 0:
            raise ValueError("gate threshold must be positive")


def observer_sensitivities(record: SensorLogRecord) -> list[float]:
    if record.observer_Fz is None:
        return []
    out = []
    for forces in (record.observer_dFx_dmu, record.observer_dFy_dmu):
        if forces is not None:
            out.extend(observer_sensitivity(f, z) for f, z in zip(forces, record.observer_Fz))
    return out


def gate_observer(record: SensorLogRecord, gate: ObserverGate = ObserverGate()) -> int | None:
    """Observer friction class if any tire is excited enough, else ``None``."""
    if record.observer_mu is None:
        return None
    if any(abs(s) > gate.threshold for s in observer_sensitivities(record)):
        return discretize_friction(record.observer_mu)
    return None


@dataclass(frozen=True)
class ReplayConfig:
    camera_distance: float = CAMERA_DISTANCE
    gate: ObserverGate = ObserverGate()
    wetness: WetnessBinning = WetnessBinning()


def assemble_evidence(
    record: SensorLogRecord, config: ReplayConfig = ReplayConfig(), camera_class: int | None = None
) -> dict[str, int]:
    evidence = {}
    if camera_class is not None:
        evidence[S_C] = camera_class
    if record.air_temp is not None:
        evidence[S_T] = discretize_temperature(record.air_temp)
    if record.rcs1_raw is not None:
        evidence[S_RCS1] = discretize_wetness(record.rcs1_raw, config.wetness)
    if record.rcs2_raw is not None:
        evidence[S_RCS2] = discretize_wetness(record.rcs2_raw, config.wetness)
    fo = gate_observer(record, config.gate)
    if fo is not None:
        evidence[S_FO] = fo
    return evidence


@dataclass(frozen=True)
class PosteriorEntry:
    timestamp: float
    pavement: Distribution
    weather: Distribution
    friction: Distribution
    evidence: dict
    camera_time: float | None = None
    camera_scores: tuple[float, ...] | None = None

    def flags(self) -> str:
        return "".join("1" if s in self.evidence else "0" for s in SENSORS)


@dataclass
class PosteriorTimeSeries:
    entries: list[PosteriorEntry] = field(default_factory=list)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, i):
        return self.entries[i]


class _CameraDelayLine:
    """Holds camera frames until the road they show reaches the tires."""

    def __init__(self, distance: float):
        self.distance = distance
        self._pending: list = []
        self._seq = 0
        self.effective = -math.inf
        self.capture_time: float | None = None
        self.scores: tuple[float, ...] | None = None

    def push(self, t: float, speed: float, scores) -> None:
        if speed <= 0:
            return  # standstill: keep whatever is applied now
        eff = t + camera_delay(self.distance, speed)
        heapq.heappush(self._pending, (eff, t, self._seq, scores))
        self._seq += 1

    def advance(self, now: float) -> None:
        while self._pending and self._pending[0][0] <= now + TIME_EPS:
            eff, t, _, scores = heapq.heappop(self._pending)
            if eff >= self.effective:
                self.effective, self.capture_time, self.scores = eff, t, scores


def run_replay(
    network: Network, log: Sequence[SensorLogRecord], config: ReplayConfig = ReplayConfig()
) -> PosteriorTimeSeries:
    """Posterior of pavement, weather and friction at every log record.

    The camera evidence at time ``t`` is the frame with the latest effective
    time (capture time plus travel delay) not after ``t``.
    """
    infer = PosteriorCache(network)
    delay = _CameraDelayLine(config.camera_distance)
    series = PosteriorTimeSeries()
    for record in log:
        if record.camera_scores is not None:
            delay.push(record.timestamp, record.speed, record.camera_scores)
        delay.advance(record.timestamp)
        cam = None if delay.scores is None else int(np.argmax(delay.scores))
        evidence = assemble_evidence(record, config, cam)
        series.entries.append(
            PosteriorEntry(
                timestamp=record.timestamp,
                pavement=infer(R, evidence),
                weather=infer(W, evidence),
                friction=infer(MU, evidence),
                evidence=evidence,
                camera_time=delay.capture_time,
                camera_scores=delay.scores,
            )
        )
    return series


@dataclass(frozen=True)
class ScoreRow:
    acc_pavement: float
    acc_weather: float
    hellinger_pavement: float
    hellinger_weather: float


@dataclass(frozen=True)
class ReplayReport:
    camera: ScoreRow
    bn: ScoreRow
    n: int
    n_pavement: int


def camera_baseline(entry: PosteriorEntry) -> tuple[Distribution, Distribution, int | None, int | None]:
    """Standalone camera marginals and labels for the frame applied at ``entry``."""
    if entry.camera_scores is None:
        return (Distribution.uniform(PAVEMENT_VARIABLE), Distribution.uniform(WEATHER_VARIABLE),
                None, None)
    pav, wea, pav_label = camera_scores_to_marginals(entry.camera_scores)
    _, wea_label = split_camera_label(int(np.argmax(entry.camera_scores)))
    return pav, wea, pav_label, wea_label


def replay_report(series: PosteriorTimeSeries, truth: Sequence[GroundTruth]) -> ReplayReport:
    """Accuracy and mean Hellinger distance for the camera alone and for the network.

    Samples whose camera pavement label is Nan (snow, or no frame yet) are
    left out of the pavement accuracy of both.
    """
    if len(series) != len(truth):
        raise LengthMismatch(f"{len(series)} posteriors vs {len(truth)} ground-truth rows")
    cam_pav, cam_wea, bn_pav, bn_wea = [], [], [], []
    h = {k: [] for k in ("cam_p", "cam_w", "bn_p", "bn_w")}
    for entry, g in zip(series, truth):
        pav, wea, pav_label, wea_label = camera_baseline(entry)
        cam_pav.append(pav_label)
        cam_wea.append(wea_label)
        bn_pav.append(None if pav_label is None else entry.pavement.argmax())
        bn_wea.append(entry.weather.argmax())
        true_p = Distribution.delta(PAVEMENT_VARIABLE, g.pavement)
        true_w = Distribution.delta(WEATHER_VARIABLE, g.weather)
        h["cam_p"].append(hellinger(true_p, pav))
        h["cam_w"].append(hellinger(true_w, wea))
        h["bn_p"].append(hellinger(true_p, entry.pavement.probabilities))
        h["bn_w"].append(hellinger(true_w, entry.weather.probabilities))
    truths_p = [g.pavement for g in truth]
    truths_w = [g.weather for g in truth]
    n = len(truth)

    def mean(xs):
        return math.fsum(xs) / n

    camera = ScoreRow(
        accuracy(cam_pav, truths_p, exclude_nan=True),
        accuracy(cam_wea, truths_w),
        mean(h["cam_p"]),
        mean(h["cam_w"]),
    )
    bn = ScoreRow(
        accuracy(bn_pav, truths_p, exclude_nan=True),
        accuracy(bn_wea, truths_w),
        mean(h["bn_p"]),
        mean(h["bn_w"]),
    )
    return ReplayReport(camera, bn, n, sum(1 for x in cam_pav if x is not None))


def posterior_header() -> list[str]:
    return (
        ["t"]
        + [f"R_{i}" for i in range(1, 4)]
        + [f"W_{i}" for i in range(1, 4)]
        + [f"mu_{i}" for i in range(1, 9)]
        + ["evidence_flags"]
    )


def write_posteriors(series: PosteriorTimeSeries, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(posterior_header())
        for e in series:
            values = [e.timestamp, *e.pavement.probabilities, *e.weather.probabilities,
                      *e.friction.probabilities]
            writer.writerow([f"{v:.6f}" for v in values] + [e.flags()])


def write_report(report: ReplayReport, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["algorithm", "acc_R", "acc_W", "hellinger_R", "hellinger_W", "n", "n_R"])
        for name, row in (("camera", report.camera), ("bn", report.bn)):
            writer.writerow(
                [name]
                + [f"{v:.6f}" for v in (row.acc_pavement, row.acc_weather,
                                        row.hellinger_pavement, row.hellinger_weather)]
                + [report.n, report.n_pavement]
            )
