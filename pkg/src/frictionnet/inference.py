"""Exact posterior queries on a :class:`~frictionnet.network.Network`.

Two independent routes are provided.  :func:`posterior_enumeration` sums the
factorized joint over every hidden completion and serves as the oracle;
:func:`posterior_ve` runs variable elimination and is what everything else
uses.
"""

from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import QueryIsEvidence, ZeroProbabilityEvidence
from .network import Evidence, Network, Variable, validate_evidence

NORMALIZATION_TOLERANCE = 1e-9


@dataclass(frozen=True, eq=False)
class Distribution:
    variable: Variable
    probabilities: np.ndarray

    def __post_init__(self):
        p = np.array(self.probabilities, dtype=np.float64)
        if p.shape != (self.variable.cardinality,):
            raise ValueError(
                f"distribution over {self.variable.name!r} needs {self.variable.cardinality} entries"
            )
        if np.any(p < 0) or abs(p.sum() - 1.0) > NORMALIZATION_TOLERANCE:
            raise ValueError(f"not a probability vector: {p}")
        p.setflags(write=False)
        object.__setattr__(self, "probabilities", p)

    @classmethod
    def delta(cls, variable: Variable, state: int) -> "Distribution":
        p = np.zeros(variable.cardinality)
        p[state] = 1.0
        return cls(variable, p)

    @classmethod
    def uniform(cls, variable: Variable) -> "Distribution":
        return cls(variable, np.full(variable.cardinality, 1.0 / variable.cardinality))

    def __len__(self):
        return len(self.probabilities)

    def __getitem__(self, key):
        if isinstance(key, str):
            key = self.variable.index(key)
        return float(self.probabilities[key])

    def __eq__(self, other):
        if not isinstance(other, Distribution):
            return NotImplemented
        return self.variable == other.variable and np.array_equal(
            self.probabilities, other.probabilities
        )

    __hash__ = None

    def argmax(self) -> int:
        return int(np.argmax(self.probabilities))

    def as_dict(self) -> dict[str, float]:
        return {s: float(p) for s, p in zip(self.variable.states, self.probabilities)}

    def entropy(self) -> float:
        p = self.probabilities[self.probabilities > 0]
        return float(-(p * np.log(p)).sum())


def _prepare(network: Network, query: str, evidence: Evidence) -> dict[str, int]:
    network.variable(query)
    evidence = validate_evidence(network, evidence)
    if query in evidence:
        raise QueryIsEvidence(f"query variable {query!r} is also observed")
    return evidence


def _normalize(network: Network, query: str, unnormalized: np.ndarray, evidence) -> Distribution:
    total = float(unnormalized.sum())
    if not total > 0.0:
        raise ZeroProbabilityEvidence(f"evidence {dict(evidence)} has probability zero")
    return Distribution(network.variable(query), unnormalized / total)


def posterior_enumeration(network: Network, query: str, evidence: Evidence) -> Distribution:
    """P(query | evidence) by summing the joint over all hidden completions.

    Deliberately naive: the product of CPT entries is recomputed for every
    complete assignment.  Use only as a reference.
    """
    evidence = _prepare(network, query, evidence)
    names = network.names
    hidden = [n for n in names if n != query and n not in evidence]
    cards = {v.name: v.cardinality for v in network.variables}

    # flattened CPT rows as python lists; row index via mixed-radix strides
    lookups = []
    for name in network.order:
        parents = network.parents(name)
        strides = []
        stride = 1
        for p in reversed(parents):
            strides.append(stride)
            stride *= cards[p]
        strides.reverse()
        lookups.append((name, parents, strides, network.cpts[name].rows.tolist()))

    result = np.zeros(cards[query])
    assignment = dict(evidence)
    for y in range(cards[query]):
        assignment[query] = y
        acc = 0.0
        for states in itertools.product(*(range(cards[h]) for h in hidden)):
            assignment.update(zip(hidden, states))
            p = 1.0
            for name, parents, strides, rows in lookups:
                r = 0
                for par, s in zip(parents, strides):
                    r += assignment[par] * s
                p *= rows[r][assignment[name]]
                if p == 0.0:
                    break
            acc += p
        result[y] = acc
    return _normalize(network, query, result, evidence)


def prune_barren(network: Network, query: str | Iterable[str], evidence: Evidence) -> Network:
    """Drop every node that is not the query, observed, or an ancestor of either.

    This is the fixed point of repeatedly deleting unobserved, unqueried
    leaves; such nodes sum to one and cannot change any posterior.
    """
    queries = [query] if isinstance(query, str) else list(query)
    keep = network.ancestors(list(queries) + list(evidence))
    if len(keep) == len(network.variables):
        return network
    return network.subnetwork(keep)


class _Factor:
    __slots__ = ("scope", "values")

    def __init__(self, scope: tuple[str, ...], values: np.ndarray):
        self.scope = scope
        self.values = values


def _einsum_product(factors: Sequence[_Factor], keep: Sequence[str], letters) -> _Factor:
    subs = ",".join("".join(letters[v] for v in f.scope) for f in factors)
    out = "".join(letters[v] for v in keep)
    values = np.einsum(subs + "->" + out, *(f.values for f in factors))
    return _Factor(tuple(keep), values)


def min_degree_order(factors_scopes: Iterable[Sequence[str]], hidden: Iterable[str]) -> list[str]:
    """Greedy min-degree elimination order over the interaction graph.

    Ties are broken by the order of ``hidden``.
    """
    hidden = list(hidden)
    rank = {h: i for i, h in enumerate(hidden)}
    adj: dict[str, set[str]] = {h: set() for h in hidden}
    for scope in factors_scopes:
        for a in scope:
            if a in adj:
                adj[a].update(b for b in scope if b != a)
    remaining = set(hidden)
    order = []
    while remaining:
        v = min(remaining, key=lambda h: (len(adj[h] & remaining), rank[h]))
        nbrs = adj[v] & remaining
        for a in nbrs:
            adj[a].update(nbrs - {a})
        order.append(v)
        remaining.discard(v)
    return order


def posterior_ve(
    network: Network,
    query: str,
    evidence: Evidence,
    *,
    order: Sequence[str] | None = None,
    prune: bool = True,
) -> Distribution:
    """P(query | evidence) by variable elimination.

    ``order`` fixes the elimination order of hidden variables; names that are
    not hidden (or were pruned) are skipped and unlisted hidden variables are
    eliminated last.  The default is min-degree.
    """
    evidence = _prepare(network, query, evidence)
    net = prune_barren(network, query, evidence) if prune else network
    names = net.names
    letters = {n: chr(ord("a") + i) if i < 26 else chr(ord("A") + i - 26) for i, n in enumerate(names)}

    factors: list[_Factor] = []
    for name in names:
        scope = net.parents(name) + (name,)
        values = net.table(name)
        index = tuple(evidence[v] if v in evidence else slice(None) for v in scope)
        if any(v in evidence for v in scope):
            values = values[index]
            scope = tuple(v for v in scope if v not in evidence)
        factors.append(_Factor(scope, values))

    hidden = [n for n in names if n != query and n not in evidence]
    if order is None:
        elim = min_degree_order((f.scope for f in factors), hidden)
    else:
        hidden_set = set(hidden)
        elim = [v for v in order if v in hidden_set]
        elim += [v for v in hidden if v not in set(elim)]

    for var in elim:
        touching = [f for f in factors if var in f.scope]
        if not touching:
            continue
        rest = [f for f in factors if var not in f.scope]
        scope = []
        for f in touching:
            scope.extend(v for v in f.scope if v != var and v not in scope)
        factors = rest + [_einsum_product(touching, scope, letters)]

    result = _einsum_product(factors, (query,), letters).values
    return _normalize(network, query, np.asarray(result, dtype=np.float64), evidence)


def posteriors(
    network: Network, queries: Sequence[str], evidence: Evidence, **kwargs
) -> dict[str, Distribution]:
    return {q: posterior_ve(network, q, evidence, **kwargs) for q in queries}


class PosteriorCache:
    """Thread-safe memo of ``posterior_ve`` keyed by (query, evidence).

    Concurrent misses on the same key may compute twice; both writers store
    identical values, so readers never see inconsistent results.
    """

    def __init__(self, network: Network, infer=posterior_ve):
        self.network = network
        self._infer = infer
        self._memo: dict = {}
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def __call__(self, query: str, evidence: Mapping[str, int]) -> Distribution:
        key = (query, tuple(sorted(evidence.items())))
        try:
            value = self._memo[key]
        except KeyError:
            value = self._infer(self.network, query, evidence)
            with self._lock:
                self.misses += 1
                self._memo.setdefault(key, value)
            return value
        with self._lock:
            self.hits += 1
        return value

    def __len__(self):
        return len(self._memo)
