"""Discrete Bayesian network representation.

A :class:`Network` is an immutable DAG of :class:`Variable` objects, each
carrying one :class:`Cpt`.  CPT rows are stored row-major over the ordered
parent list, so ``cpt.table`` (shape ``parent_cards + (child_card,)``) and
``cpt.rows`` (shape ``(n_rows, child_card)``) are two views of the same data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    CycleDetected,
    DuplicateName,
    IncompleteAssignment,
    InvalidEvidence,
    MissingCpt,
    NetworkError,
    RowLengthMismatch,
    UnknownParent,
    UnnormalizedRow,
)

ROW_TOLERANCE = 1e-9

Evidence = Mapping[str, int]
Assignment = Mapping[str, int]


@dataclass(frozen=True)
class Variable:
    name: str
    states: tuple[str, ...]
    ordinal: bool = False

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        if len(self.states) < 2:
            raise NetworkError(f"variable {self.name!r} needs at least 2 states")
        if len(set(self.states)) != len(self.states):
            raise DuplicateName(f"variable {self.name!r} has duplicate state labels")

    @property
    def cardinality(self) -> int:
        return len(self.states)

    def index(self, label: str) -> int:
        try:
            return self.states.index(label)
        except ValueError:
            raise InvalidEvidence(
                f"{label!r} is not a state of {self.name!r} (states: {', '.join(self.states)})"
            ) from None


@dataclass(frozen=True, eq=False)
class Cpt:
    """P(child | parents) as a 2-D array of rows."""

    child: str
    parents: tuple[str, ...]
    rows: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "parents", tuple(self.parents))
        rows = np.array(self.rows, dtype=np.float64)
        if rows.ndim == 1:
            rows = rows[None, :]
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)

    def __eq__(self, other):
        if not isinstance(other, Cpt):
            return NotImplemented
        return (
            self.child == other.child
            and self.parents == other.parents
            and self.rows.shape == other.rows.shape
            and np.array_equal(self.rows, other.rows)
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class Network:
    """Validated network.  Build with :func:`build_network`."""

    variables: tuple[Variable, ...]
    cpts: Mapping[str, Cpt]
    order: tuple[str, ...]
    _index: Mapping[str, int] = field(repr=False)
    _tables: Mapping[str, np.ndarray] = field(repr=False)

    def __eq__(self, other):
        if not isinstance(other, Network):
            return NotImplemented
        return self.variables == other.variables and all(
            self.cpts[v.name] == other.cpts[v.name] for v in self.variables
        )

    __hash__ = None

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    def variable(self, name: str) -> Variable:
        try:
            return self.variables[self._index[name]]
        except KeyError:
            raise InvalidEvidence(f"unknown variable {name!r}") from None

    def __contains__(self, name: str) -> bool:
        return name in self._index

    def position(self, name: str) -> int:
        return self._index[name]

    def parents(self, name: str) -> tuple[str, ...]:
        return self.cpts[name].parents

    def children(self, name: str) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables if name in self.cpts[v.name].parents)

    def table(self, name: str) -> np.ndarray:
        """CPT of ``name`` shaped ``(*parent_cards, child_card)``."""
        return self._tables[name]

    def cardinalities(self) -> tuple[int, ...]:
        return tuple(v.cardinality for v in self.variables)

    def ancestors(self, names: Iterable[str]) -> set[str]:
        """``names`` together with all of their ancestors."""
        seen: set[str] = set()
        stack = list(names)
        while stack:
            n = stack.pop()
            if n in seen:
                continue
            seen.add(n)
            stack.extend(self.cpts[n].parents)
        return seen

    def subnetwork(self, keep: Iterable[str]) -> "Network":
        """Restriction to an ancestrally closed set of variables."""
        keep = set(keep)
        variables = [v for v in self.variables if v.name in keep]
        return build_network(variables, [self.cpts[v.name] for v in variables])


def _topological_order(variables: Sequence[Variable], cpts: Mapping[str, Cpt]) -> tuple[str, ...]:
    # Kahn's algorithm; ties broken by declaration order for determinism.
    indeg = {v.name: len(cpts[v.name].parents) for v in variables}
    children: dict[str, list[str]] = {v.name: [] for v in variables}
    for v in variables:
        for p in cpts[v.name].parents:
            children[p].append(v.name)
    position = {v.name: i for i, v in enumerate(variables)}
    ready = sorted((n for n, d in indeg.items() if d == 0), key=position.__getitem__)
    order: list[str] = []
    while ready:
        n = ready.pop(0)
        order.append(n)
        for c in children[n]:
            indeg[c] -= 1
            if indeg[c] == 0:
                ready.append(c)
                ready.sort(key=position.__getitem__)
    if len(order) != len(variables):
        stuck = sorted(n for n, d in indeg.items() if d > 0)
        raise CycleDetected(f"cycle detected among variables: {', '.join(stuck)}")
    return tuple(order)


def build_network(
    variables: Sequence[Variable], cpts: Iterable[Cpt], *, tol: float = ROW_TOLERANCE
) -> Network:
    """Validate variables and CPTs and return an immutable :class:`Network`."""
    variables = tuple(variables)
    if not variables:
        raise NetworkError("a network needs at least one variable")
    index: dict[str, int] = {}
    for i, v in enumerate(variables):
        if v.name in index:
            raise DuplicateName(f"duplicate variable name {v.name!r}")
        index[v.name] = i

    by_child: dict[str, Cpt] = {}
    for cpt in cpts:
        if cpt.child not in index:
            raise UnknownParent(f"CPT given for unknown variable {cpt.child!r}")
        if cpt.child in by_child:
            raise NetworkError(f"more than one CPT for {cpt.child!r}")
        by_child[cpt.child] = cpt
    for v in variables:
        if v.name not in by_child:
            raise MissingCpt(f"no CPT for variable {v.name!r}")

    tables: dict[str, np.ndarray] = {}
    for v in variables:
        cpt = by_child[v.name]
        if len(set(cpt.parents)) != len(cpt.parents):
            raise NetworkError(f"CPT of {v.name!r} lists a parent twice")
        for p in cpt.parents:
            if p not in index:
                raise UnknownParent(f"CPT of {v.name!r} references unknown parent {p!r}")
        parent_cards = tuple(variables[index[p]].cardinality for p in cpt.parents)
        n_rows = math.prod(parent_cards)
        if cpt.rows.shape != (n_rows, v.cardinality):
            raise RowLengthMismatch(
                f"CPT of {v.name!r} has shape {cpt.rows.shape}, expected ({n_rows}, {v.cardinality})"
            )
        if np.any(~np.isfinite(cpt.rows)) or np.any(cpt.rows < 0) or np.any(cpt.rows > 1):
            raise UnnormalizedRow(f"CPT of {v.name!r} has entries outside [0, 1]")
        sums = cpt.rows.sum(axis=1)
        bad = np.flatnonzero(np.abs(sums - 1.0) > tol)
        if bad.size:
            r = int(bad[0])
            raise UnnormalizedRow(
                f"CPT of {v.name!r}, row {_row_label(variables, index, cpt.parents, r)} "
                f"sums to {sums[r]!r}"
            )
        table = cpt.rows.reshape(parent_cards + (v.cardinality,))
        table.setflags(write=False)
        tables[v.name] = table

    order = _topological_order(variables, by_child)
    return Network(
        variables=variables,
        cpts={v.name: by_child[v.name] for v in variables},
        order=order,
        _index=index,
        _tables=tables,
    )


def _row_label(variables, index, parents, row: int) -> str:
    if not parents:
        return "(prior)"
    cards = [variables[index[p]].cardinality for p in parents]
    states = np.unravel_index(row, cards)
    return ", ".join(
        f"{p}={variables[index[p]].states[s]}" for p, s in zip(parents, states)
    )


def row_label(network: Network, child: str, row: int) -> str:
    """Human readable parent configuration of ``row`` in ``child``'s CPT."""
    return _row_label(network.variables, network._index, network.parents(child), row)


def validate_evidence(network: Network, evidence: Evidence) -> dict[str, int]:
    out = {}
    for name, state in evidence.items():
        var = network.variable(name)
        if isinstance(state, str):
            state = var.index(state)
        if not isinstance(state, (int, np.integer)) or not 0 <= state < var.cardinality:
            raise InvalidEvidence(f"state {state!r} out of range for {name!r}")
        out[name] = int(state)
    return out


def parse_evidence(network: Network, labelled: Mapping[str, str]) -> dict[str, int]:
    """Convert ``{var: state_label}`` to ``{var: state_index}``."""
    return {name: network.variable(name).index(label) for name, label in labelled.items()}


def joint_probability(network: Network, assignment: Assignment) -> float:
    """Product of every node's CPT entry under a complete assignment."""
    missing = [n for n in network.names if n not in assignment]
    if missing:
        raise IncompleteAssignment(f"assignment lacks {', '.join(missing)}")
    p = 1.0
    for name in network.order:
        table = network.table(name)
        key = tuple(assignment[q] for q in network.parents(name)) + (assignment[name],)
        factor = float(table[key])
        if factor == 0.0:
            return 0.0
        p *= factor
    return p


def joint_tensor(network: Network) -> np.ndarray:
    """Full joint distribution as an array with one axis per variable."""
    letters = {n: chr(ord("a") + i) if i < 26 else chr(ord("A") + i - 26)
               for i, n in enumerate(network.names)}
    operands = []
    subscripts = []
    for name in network.names:
        operands.append(network.table(name))
        subscripts.append("".join(letters[p] for p in network.parents(name)) + letters[name])
    out = "".join(letters[n] for n in network.names)
    return np.einsum(",".join(subscripts) + "->" + out, *operands)
