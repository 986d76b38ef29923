"""The 10-node road-condition network, its CPT constants and discretizers.

Tables are kept in percent exactly as published; conversion to fractions and
the renormalization of the few rows that do not add up to 100 % happen at
load time (see :func:`frictionnet.io.renormalize_cpt_row`).

State indices returned by the discretizers are 0-based, i.e. ``0`` is the
first class (``S_T1``, ``mu1``, ``level1``).
"""

from __future__ import annotations

import copy
import math
import os
from dataclasses import dataclass, field
from importlib import resources
from typing import Any, Mapping

import numpy as np

from .errors import (
    NegativeFriction,
    NetworkError,
    NonFiniteInput,
    OutOfRange,
)
from .io import network_from_document, read_document, renormalize_cpt_row  # noqa: F401
from .network import Cpt, Network

R, T, P, W, MU, S_C, S_T, S_RCS1, S_RCS2, S_FO = (
    "R", "T", "P", "W", "mu_max", "S_C", "S_T", "S_RCS1", "S_RCS2", "S_FO",
)
NODES = (R, T, P, W, MU, S_C, S_T, S_RCS1, S_RCS2, S_FO)
SENSORS = (S_C, S_T, S_RCS1, S_RCS2, S_FO)
ROAD_CONDITIONS = (R, W, MU)

PAVEMENTS = ("Asphalt", "Concrete", "Cobblestone")
WEATHER = ("Dry", "Wet", "Snow")
CAMERA_CLASSES = ("AD", "AW", "CD", "CW", "CbD", "CbW", "S")
TEMPERATURE_CLASSES = ("T1", "T2", "T3", "T4")
AIR_TEMPERATURE_CLASSES = ("S_T1", "S_T2", "S_T3", "S_T4")
FRICTION_CLASSES = tuple(f"mu{i}" for i in range(1, 9))
OBSERVER_CLASSES = tuple(f"S_FO{i}" for i in range(1, 9))
WETNESS_CLASSES = ("level1", "level2", "level3")

EDGES = (
    (S_T, T),
    (P, W), (T, W),
    (R, S_C), (W, S_C),
    (R, S_RCS1), (W, S_RCS1),
    (R, S_RCS2), (W, S_RCS2),
    (R, MU), (W, MU),
    (MU, S_FO),
)

# P(T | S_T), percent
PAVEMENT_TEMPERATURE = (
    (95.05, 1.84, 0.87, 0.24),
    (41.46, 50.73, 7.54, 0.27),
    (5.07, 22.68, 71.72, 0.53),
    (10.15, 2.87, 51.40, 35.58),
)

# P(W | P, T), rows (P=true: T1..T4, P=false: T1..T4), percent
ROAD_WEATHER = (
    (5.00, 95.00, 0.00),
    (5.00, 90.00, 5.00),
    (5.00, 20.00, 75.00),
    (5.00, 0.00, 95.00),
    (95.00, 5.00, 0.00),
    (95.00, 2.50, 2.50),
    (95.00, 1.75, 3.25),
    (95.00, 0.00, 5.00),
)

# P(mu_max | R, W), rows (R major, W minor), percent
MAX_FRICTION = (
    (0, 0, 0, 0, 0, 15, 76, 9),
    (0, 0, 0, 11, 47, 36, 5, 0),
    (7, 51, 3, 9, 2, 1, 0, 0),
    (0, 0, 0, 0, 0, 7, 72, 21),
    (0, 0, 0, 0, 7, 87, 6, 0),
    (13, 42, 26, 11, 5, 2, 1, 0),
    (0, 0, 0, 3, 54, 42, 1, 0),
    (0, 9, 72, 18, 1, 0, 0, 0),
    (8, 73, 18, 1, 0, 0, 0, 0),
)

# P(S_FO | mu_max), percent
FRICTION_OBSERVER = (
    (99.68, 0.02, 0.00, 0.00, 0.27, 0.00, 0.03, 0.00),
    (71.76, 20.7, 0.21, 0.01, 6.62, 0.00, 0.70, 0.00),
    (55.76, 0.15, 28.37, 9.55, 5.25, 0.00, 0.92, 0.00),
    (17.31, 0.04, 0.1, 56.31, 22.96, 2.85, 0.43, 0.00),
    (10.70, 0.02, 0.03, 0.54, 78.5, 8.91, 1.09, 0.21),
    (5.32, 0.01, 0.02, 0.21, 10.47, 75.01, 8.79, 0.17),
    (2.12, 0.01, 0.01, 0.05, 8.03, 7.84, 81.49, 0.45),
    (0.45, 0.02, 0.02, 0.03, 2.24, 2.59, 19.12, 75.53),
)

# P(S_RCS | R, W); asphalt and concrete share rows, cobblestone is flat
_RCS_PAVED = {"Dry": (95.00, 5.00, 0.00), "Wet": (17.5, 26.25, 56.25), "Snow": (96.00, 4.00, 0.00)}
_RCS_COBBLE = (99.00, 1.00, 0.00)
ROAD_CONDITION_SENSOR = tuple(
    _RCS_COBBLE if r == "Cobblestone" else _RCS_PAVED[w] for r in PAVEMENTS for w in WEATHER
)

# rows known to miss 100 %; the loader must flag exactly these
DEFICIENT_ROWS = ((T, "S_T=S_T1"), (MU, "R=Asphalt, W=Wet"), (MU, "R=Asphalt, W=Snow"))


@dataclass(frozen=True, eq=False)
class CameraConfusionMatrix:
    """Row-stochastic 7x7 matrix, rows = true class, columns = predicted class."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=np.float64)
        if m.shape != (7, 7):
            raise NetworkError(f"camera confusion matrix must be 7x7, got {m.shape}")
        if np.any(m < 0) or np.any(np.abs(m.sum(axis=1) - 1.0) > 1e-9):
            raise NetworkError("camera confusion matrix rows must be nonnegative and sum to 1")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def row(self, pavement: int, weather: int) -> np.ndarray:
        return self.matrix[camera_class(pavement, weather)]


def camera_class(pavement: int, weather: int) -> int:
    """Camera label index of the true (pavement, weather) combination."""
    if weather == 2:
        return 6
    return 2 * pavement + weather


def default_camera_matrix() -> CameraConfusionMatrix:
    """Stand-in confusion matrix.

    No measured matrix for the camera is available.  Each non-snow class
    keeps 0.85 on the diagonal, 0.06 goes to the same pavement with the other
    weather, 0.04 is split over the other pavements with the same weather and
    the remaining 0.05 is spread evenly over the rest.  Snow keeps 0.85 and
    leaks 0.05 to each wet class.
    """
    m = np.zeros((7, 7))
    for r in range(3):
        for w in range(2):
            i = camera_class(r, w)
            m[i, i] = 0.85
            m[i, camera_class(r, 1 - w)] = 0.06
            others = [camera_class(q, w) for q in range(3) if q != r]
            for j in others:
                m[i, j] = 0.02
            rest = [j for j in range(7) if m[i, j] == 0.0]
            for j in rest:
                m[i, j] = 0.05 / len(rest)
    m[6, 6] = 0.85
    for r in range(3):
        m[6, camera_class(r, 1)] = 0.05
    return CameraConfusionMatrix(m)


@dataclass(frozen=True)
class WetnessBinning:
    """Thresholds on the raw 16-bit wetness level of the acoustic sensor."""

    low: int = 1000
    high: int = 10000

    def __post_init__(self):
        if not 0 <= self.low < self.high <= 65535:
            raise NetworkError(f"invalid wetness thresholds low={self.low} high={self.high}")

    def interval(self, level: int) -> tuple[int, int]:
        """Inclusive raw range of a wetness class."""
        return [(0, self.low), (self.low + 1, self.high), (self.high + 1, 65535)][level]


def discretize_temperature(t: float) -> int:
    """Air or pavement temperature in degrees Celsius to a class index.

    ``>5`` -> 0, ``(0, 5]`` -> 1, ``(-21, 0]`` -> 2, ``<=-21`` -> 3.
    """
    if not math.isfinite(t):
        raise NonFiniteInput(f"temperature {t!r} is not finite")
    if t > 5.0:
        return 0
    if t > 0.0:
        return 1
    if t > -21.0:
        return 2
    return 3


FRICTION_STEP = 0.15
FRICTION_CLASS_COUNT = 8


def discretize_friction(mu: float) -> int:
    """Friction coefficient to one of 8 bins of width 0.15; above 1.2 clamps to the top bin."""
    if not math.isfinite(mu):
        raise NonFiniteInput(f"friction {mu!r} is not finite")
    if mu < 0:
        raise NegativeFriction(f"friction coefficient {mu} < 0")
    # tolerance so that decimal multiples of the step land on the upper bin
    k = math.floor(mu / FRICTION_STEP + 1e-9)
    return min(k, FRICTION_CLASS_COUNT - 1)


def friction_midpoint(index: int) -> float:
    return (index + 0.5) * FRICTION_STEP


def discretize_wetness(raw: int, binning: WetnessBinning = WetnessBinning()) -> int:
    if isinstance(raw, float):
        if not raw.is_integer():
            raise OutOfRange(f"wetness level {raw} is not an integer")
        raw = int(raw)
    if not 0 <= raw <= 65535:
        raise OutOfRange(f"wetness level {raw} outside 0..65535")
    if raw <= binning.low:
        return 0
    if raw <= binning.high:
        return 1
    return 2


def _variables_doc() -> list[dict[str, Any]]:
    layout = [
        (R, PAVEMENTS, False),
        (T, TEMPERATURE_CLASSES, True),
        (P, ("true", "false"), False),
        (W, WEATHER, False),
        (MU, FRICTION_CLASSES, True),
        (S_C, CAMERA_CLASSES, False),
        (S_T, AIR_TEMPERATURE_CLASSES, True),
        (S_RCS1, WETNESS_CLASSES, True),
        (S_RCS2, WETNESS_CLASSES, True),
        (S_FO, OBSERVER_CLASSES, True),
    ]
    return [{"name": n, "states": list(s), "ordinal": o} for n, s, o in layout]


def _uniform(k: int) -> dict[str, Any]:
    return {"units": "fraction", "rows": [[1.0 / k] * k]}


def published_document() -> dict[str, Any]:
    """Network document with every published table verbatim (percent).

    The camera CPT is absent; it is derived from the confusion matrix.
    """
    def table(rows):
        return [list(map(float, r)) for r in rows]

    return {
        "units": "percent",
        "variables": _variables_doc(),
        "cpts": [
            {"child": R, "parents": [], **_uniform(3)},
            {"child": P, "parents": [], **_uniform(2)},
            {"child": S_T, "parents": [], **_uniform(4)},
            {"child": T, "parents": [S_T], "rows": table(PAVEMENT_TEMPERATURE)},
            {"child": W, "parents": [P, T], "rows": table(ROAD_WEATHER)},
            {"child": MU, "parents": [R, W], "rows": table(MAX_FRICTION)},
            {"child": S_FO, "parents": [MU], "rows": table(FRICTION_OBSERVER)},
            {"child": S_RCS1, "parents": [R, W], "rows": table(ROAD_CONDITION_SENSOR)},
            {"child": S_RCS2, "parents": [R, W], "rows": table(ROAD_CONDITION_SENSOR)},
        ],
    }


def camera_cpt(camera_matrix: CameraConfusionMatrix) -> Cpt:
    rows = [camera_matrix.row(r, w) for r in range(3) for w in range(3)]
    return Cpt(S_C, (R, W), np.array(rows))


def build_roadnet(
    camera_matrix: CameraConfusionMatrix | None = None,
    *,
    renormalize: bool = True,
    warnings: list | None = None,
) -> Network:
    """The road-condition network with the published tables and a camera CPT."""
    if camera_matrix is None:
        camera_matrix = default_camera_matrix()
    return network_from_document(
        published_document(),
        renormalize=renormalize,
        extra_cpts=[camera_cpt(camera_matrix)],
        warnings=warnings,
    )


@dataclass(frozen=True, eq=False)
class RoadModel:
    """A loaded model file: network plus the sensor configuration around it."""

    network: Network
    camera_matrix: CameraConfusionMatrix | None
    wetness: WetnessBinning
    warnings: tuple = ()
    document: Mapping[str, Any] = field(default_factory=dict, repr=False)


def model_document() -> dict[str, Any]:
    """Contents of the bundled default model file."""
    doc = published_document()
    doc["camera_confusion_matrix"] = default_camera_matrix().matrix.tolist()
    doc["wetness_thresholds"] = {"low": WetnessBinning.low, "high": WetnessBinning.high}
    doc["renormalize"] = True
    return doc


def model_from_document(doc: Mapping[str, Any]) -> RoadModel:
    doc = copy.deepcopy(dict(doc))
    camera = None
    extra = []
    if "camera_confusion_matrix" in doc:
        camera = CameraConfusionMatrix(doc["camera_confusion_matrix"])
        has_camera_cpt = any(c.get("child") == S_C for c in doc.get("cpts", []))
        if not has_camera_cpt and any(v.get("name") == S_C for v in doc.get("variables", [])):
            extra.append(camera_cpt(camera))
    thresholds = doc.get("wetness_thresholds", {})
    try:
        wetness = WetnessBinning(
            int(thresholds.get("low", WetnessBinning.low)),
            int(thresholds.get("high", WetnessBinning.high)),
        )
    except (TypeError, ValueError) as exc:
        raise NetworkError(f"malformed wetness_thresholds: {exc}") from None
    warnings: list = []
    network = network_from_document(
        doc, renormalize=bool(doc.get("renormalize", True)), extra_cpts=extra, warnings=warnings
    )
    return RoadModel(network, camera, wetness, tuple(warnings), doc)


def bundled_model_path() -> str:
    return str(resources.files("frictionnet") / "data" / "roadnet.json")


def load_model(path: str | os.PathLike | None = None) -> RoadModel:
    """Load a model file; ``None`` selects the bundled default."""
    if path is None:
        path = bundled_model_path()
    return model_from_document(read_document(path))


def is_road_network(network: Network) -> bool:
    return all(n in network for n in NODES)
