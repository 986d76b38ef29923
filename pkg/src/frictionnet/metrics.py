"""Distances between discrete distributions and label accuracy."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptyAfterExclusion,
    EmptySampleSet,
    LengthMismatch,
    NonOrdinalVariable,
    UnnormalizedScores,
)
from .inference import Distribution
from .network import Variable
from .roadnet import CAMERA_CLASSES, PAVEMENTS, WEATHER

WASSERSTEIN = "wasserstein1"
HELLINGER = "hellinger"

PAVEMENT_VARIABLE = Variable("R", PAVEMENTS)
WEATHER_VARIABLE = Variable("W", WEATHER)


def _vectors(p, q) -> tuple[np.ndarray, np.ndarray]:
    a = p.probabilities if isinstance(p, Distribution) else np.asarray(p, dtype=np.float64)
    b = q.probabilities if isinstance(q, Distribution) else np.asarray(q, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise DimensionMismatch(f"cannot compare distributions of shape {a.shape} and {b.shape}")
    return a, b


def wasserstein1(p, q) -> float:
    """Earth mover's distance between two distributions over ordered classes.

    Adjacent classes are one unit apart, so the result is the sum of absolute
    differences of the two CDFs.
    """
    for d in (p, q):
        if isinstance(d, Distribution) and not d.variable.ordinal:
            raise NonOrdinalVariable(f"{d.variable.name!r} is nominal; use hellinger")
    a, b = _vectors(p, q)
    return float(np.abs(np.cumsum(a) - np.cumsum(b))[:-1].sum())


def hellinger(p, q) -> float:
    a, b = _vectors(p, q)
    d = np.sqrt(a) - np.sqrt(b)
    # clip guards rounding just above 1 for disjoint supports
    return min(float(np.sqrt(d @ d) / math.sqrt(2.0)), 1.0)


METRICS = {WASSERSTEIN: wasserstein1, HELLINGER: hellinger}


def metric_for(variable: Variable) -> str:
    return WASSERSTEIN if variable.ordinal else HELLINGER


@dataclass(frozen=True)
class MetricReport:
    variable: str
    kind: str
    mean: float
    n: int


def mean_distance(samples: Sequence[tuple], kind: str | None = None) -> MetricReport:
    """Equal-weight mean distance over ``(truth, estimate)`` pairs.

    ``kind`` defaults to the metric matching the truth variable's scale.
    """
    if not samples:
        raise EmptySampleSet("no samples to average")
    truth0 = samples[0][0]
    name = truth0.variable.name if isinstance(truth0, Distribution) else ""
    if kind is None:
        if not isinstance(truth0, Distribution):
            raise ValueError("kind is required for raw vectors")
        kind = metric_for(truth0.variable)
    fn = METRICS[kind]
    dims = {len(t) for t, _ in samples} | {len(e) for _, e in samples}
    if len(dims) != 1:
        raise DimensionMismatch(f"samples mix dimensions {sorted(dims)}")
    mean = math.fsum(fn(t, e) for t, e in samples) / len(samples)
    return MetricReport(name, kind, mean, len(samples))


def is_nan_label(label) -> bool:
    if label is None:
        return True
    if isinstance(label, float) and math.isnan(label):
        return True
    return isinstance(label, str) and label.lower() == "nan"


def accuracy(predictions: Sequence, truths: Sequence, exclude_nan: bool = False) -> float:
    """Fraction of predictions equal to the truth.

    Nan labels (``None``, ``float('nan')`` or ``"Nan"``) count as wrong, or are
    dropped from numerator and denominator when ``exclude_nan`` is set.
    """
    if len(predictions) != len(truths):
        raise LengthMismatch(f"{len(predictions)} predictions vs {len(truths)} truths")
    pairs = list(zip(predictions, truths))
    if exclude_nan:
        pairs = [(p, t) for p, t in pairs if not is_nan_label(p)]
    if not pairs:
        raise EmptyAfterExclusion("no samples left to score")
    correct = sum(1 for p, t in pairs if not is_nan_label(p) and p == t)
    return correct / len(pairs)


def split_camera_label(label: int) -> tuple[int | None, int]:
    """Camera class index to (pavement index or None for snow, weather index)."""
    if label == len(CAMERA_CLASSES) - 1:
        return None, 2
    return label // 2, label % 2


def camera_scores_to_marginals(scores: Iterable[float]) -> tuple[Distribution, Distribution, int | None]:
    """Camera output scores to pavement and weather marginals.

    The snow score carries no pavement information and is spread evenly over
    the three pavements.  The pavement label is ``None`` (Nan) when snow is
    the top-scoring class.
    """
    s = np.asarray(list(scores), dtype=np.float64)
    if s.shape != (7,):
        raise UnnormalizedScores(f"expected 7 camera scores, got {s.shape[0]}")
    if np.any(s < 0) or abs(s.sum() - 1.0) > 1e-6:
        raise UnnormalizedScores(f"camera scores must be nonnegative and sum to 1 (sum {s.sum()})")
    s = s / s.sum()
    snow = s[6]
    weather = np.array([s[0] + s[2] + s[4], s[1] + s[3] + s[5], snow])
    pavement = np.array([s[0] + s[1], s[2] + s[3], s[4] + s[5]]) + snow / 3.0
    label, _ = split_camera_label(int(np.argmax(s)))
    return Distribution(PAVEMENT_VARIABLE, pavement), Distribution(WEATHER_VARIABLE, weather), label
