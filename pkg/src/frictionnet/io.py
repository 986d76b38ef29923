"""JSON network files and the CPT row renormalization pass.

File layout::

    {
      "units": "percent" | "fraction",
      "variables": [{"name": "R", "states": ["Asphalt", ...], "ordinal": false}, ...],
      "cpts": [{"child": "W", "parents": ["P", "T"], "rows": [[...], ...]}, ...]
    }

A CPT entry may carry its own ``"units"`` overriding the document default.
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass
from typing import Any, Iterable, Mapping

import numpy as np

from .errors import AllZeroRow, NetworkError, UnnormalizedRow
from .network import Cpt, Network, Variable, _row_label, build_network

log = logging.getLogger(__name__)

WARN_TOLERANCE = 1e-6
# rows closer than this to unit sum are left bit-for-bit untouched
EXACT_TOLERANCE = 1e-12

UNIT_SCALE = {"percent": 100.0, "fraction": 1.0}


@dataclass(frozen=True)
class RenormalizationWarning:
    table: str
    row: str
    total: float

    def __str__(self):
        return f"renormalized CPT {self.table} row [{self.row}]: entries summed to {self.total:.6f}"


def renormalize_cpt_row(
    row,
    policy: str = "proportional",
    *,
    table: str = "",
    row_label: str = "",
    sink: list | None = None,
) -> np.ndarray:
    """Scale ``row`` to unit sum.

    ``policy="strict"`` raises :class:`UnnormalizedRow` instead of scaling
    when the sum is off by more than the warning tolerance.  A
    :class:`RenormalizationWarning` is appended to ``sink`` (and logged)
    whenever the correction exceeds that tolerance.
    """
    row = np.asarray(row, dtype=np.float64)
    if np.any(row < 0) or not np.all(np.isfinite(row)):
        raise UnnormalizedRow(f"CPT {table} row [{row_label}] has negative or non-finite entries")
    total = float(row.sum())
    if total == 0.0:
        raise AllZeroRow(f"CPT {table} row [{row_label}] is all zero")
    if abs(total - 1.0) > WARN_TOLERANCE:
        if policy == "strict":
            raise UnnormalizedRow(f"CPT {table} row [{row_label}] sums to {total!r}")
        record = RenormalizationWarning(table, row_label, total)
        log.warning("%s", record)
        if sink is not None:
            sink.append(record)
    if abs(total - 1.0) <= EXACT_TOLERANCE:
        return row
    return row / total


def raw_rows(doc: Mapping[str, Any]) -> dict[str, np.ndarray]:
    """CPT rows exactly as written in the document, keyed by child."""
    return {c["child"]: np.array(c["rows"], dtype=np.float64) for c in doc["cpts"]}


def _variables(doc) -> list[Variable]:
    try:
        return [
            Variable(v["name"], tuple(v["states"]), bool(v.get("ordinal", False)))
            for v in doc["variables"]
        ]
    except (KeyError, TypeError) as exc:
        raise NetworkError(f"malformed variables section: {exc}") from None


def network_from_document(
    doc: Mapping[str, Any],
    *,
    renormalize: bool = False,
    extra_cpts: Iterable[Cpt] = (),
    warnings: list | None = None,
) -> Network:
    """Build a network from a parsed document.

    Rows are converted to fractions.  With ``renormalize`` every row passes
    through :func:`renormalize_cpt_row`; otherwise rows must already sum to
    one within the network tolerance.
    """
    variables = _variables(doc)
    cards = {v.name: v.cardinality for v in variables}
    index = {v.name: i for i, v in enumerate(variables)}
    default_units = doc.get("units", "fraction")
    cpts = []
    for entry in doc.get("cpts", []):
        try:
            child, parents, rows = entry["child"], tuple(entry.get("parents", ())), entry["rows"]
        except (KeyError, TypeError) as exc:
            raise NetworkError(f"malformed CPT entry: {exc}") from None
        units = entry.get("units", default_units)
        if units not in UNIT_SCALE:
            raise NetworkError(f"unknown units {units!r} in CPT of {child!r}")
        rows = np.array(rows, dtype=np.float64) / UNIT_SCALE[units]
        if renormalize and rows.ndim == 2 and all(p in cards for p in parents) and child in cards:
            rows = np.array(
                [
                    renormalize_cpt_row(
                        r,
                        table=child,
                        row_label=_row_label(variables, index, parents, i),
                        sink=warnings,
                    )
                    for i, r in enumerate(rows)
                ]
            )
        cpts.append(Cpt(child, parents, rows))
    cpts.extend(extra_cpts)
    return build_network(variables, cpts)


def network_to_document(network: Network) -> dict[str, Any]:
    return {
        "units": "fraction",
        "variables": [
            {"name": v.name, "states": list(v.states), "ordinal": v.ordinal}
            for v in network.variables
        ],
        "cpts": [
            {
                "child": v.name,
                "parents": list(network.parents(v.name)),
                "rows": network.cpts[v.name].rows.tolist(),
            }
            for v in network.variables
        ],
    }


def read_document(path: str | os.PathLike) -> dict[str, Any]:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def load_network(
    path: str | os.PathLike, *, renormalize: bool = False, warnings: list | None = None
) -> Network:
    return network_from_document(read_document(path), renormalize=renormalize, warnings=warnings)


def save_network(network: Network, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(network_to_document(network), fh, indent=2)
        fh.write("\n")
