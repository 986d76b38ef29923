"""Exhaustive evaluation of a network over its whole domain, per sensor subset.

Every complete assignment with nonzero joint probability is one sample.  For
a sensor subset the evidence of a sample is its projection onto those
sensors; the posterior of each road-condition variable is compared with the
sample's true state and the distances are averaged with equal weight.

Two routes compute the same means:

``collapsed`` (default)
    counts how many positive assignments share each (evidence, true state)
    pair and weights one memoized posterior per evidence key by that count.
``enumerate``
    streams :func:`enumerate_domain` sample by sample.  Slow; kept as a
    cross-check for reduced domains.
"""

from __future__ import annotations

import csv
import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Sequence

import numpy as np

from .inference import Distribution, PosteriorCache, posterior_ve
from .metrics import METRICS, metric_for
from .network import Evidence, Network, joint_tensor, validate_evidence
from .roadnet import ROAD_CONDITIONS, SENSORS


@dataclass(frozen=True)
class DomainCombination:
    states: tuple[int, ...]
    probability: float

    def assignment(self, names: Sequence[str]) -> dict[str, int]:
        return dict(zip(names, self.states))


def _restricted_joint(network: Network, fixed: Evidence | None) -> np.ndarray:
    joint = joint_tensor(network)
    if fixed:
        fixed = validate_evidence(network, fixed)
        mask = np.zeros_like(joint, dtype=bool)
        index = tuple(
            fixed[n] if n in fixed else slice(None) for n in network.names
        )
        mask[index] = True
        joint = np.where(mask, joint, 0.0)
    return joint


def enumerate_domain(network: Network, fixed: Evidence | None = None) -> Iterator[DomainCombination]:
    """Yield every complete assignment of positive probability, row-major over variables.

    ``fixed`` restricts the sweep to assignments agreeing with it.
    """
    joint = _restricted_joint(network, fixed)
    for idx in np.argwhere(joint > 0.0):
        states = tuple(int(i) for i in idx)
        yield DomainCombination(states, float(joint[states]))


def raw_domain_size(network: Network) -> int:
    return math.prod(network.cardinalities())


def canonical_subset(subset, sensors: Sequence[str] = SENSORS) -> tuple[str, ...]:
    subset = set(subset)
    unknown = subset - set(sensors)
    if unknown:
        raise ValueError(f"unknown sensors {sorted(unknown)}")
    return tuple(s for s in sensors if s in subset)


def subset_mask(subset: Sequence[str], sensors: Sequence[str] = SENSORS) -> int:
    return sum(1 << i for i, s in enumerate(sensors) if s in subset)


def power_set(sensors: Sequence[str] = SENSORS) -> list[tuple[str, ...]]:
    """All subsets in binary-mask order (bit i = ``sensors[i]``)."""
    return [
        tuple(s for i, s in enumerate(sensors) if mask >> i & 1)
        for mask in range(1 << len(sensors))
    ]


@dataclass(frozen=True)
class EvalEntry:
    subset: tuple[str, ...]
    variable: str
    metric: str
    mean: float
    n: int
    weighted_mean: float = float("nan")


@dataclass
class EvalResult:
    sensors: tuple[str, ...]
    targets: tuple[str, ...]
    entries: dict = field(default_factory=dict)

    def add(self, entry: EvalEntry) -> None:
        self.entries[(entry.subset, entry.variable)] = entry

    def __getitem__(self, key) -> EvalEntry:
        subset, variable = key
        return self.entries[(canonical_subset(subset, self.sensors), variable)]

    def subsets(self) -> list[tuple[str, ...]]:
        return sorted({s for s, _ in self.entries}, key=lambda s: subset_mask(s, self.sensors))

    def rows(self) -> list[EvalEntry]:
        rank = {t: i for i, t in enumerate(self.targets)}
        return sorted(
            self.entries.values(),
            key=lambda e: (subset_mask(e.subset, self.sensors), rank[e.variable]),
        )

    def mean(self, subset, variable) -> float:
        return self[subset, variable].mean

    def __eq__(self, other):
        if not isinstance(other, EvalResult):
            return NotImplemented
        if set(self.entries) != set(other.entries):
            return False
        for key, a in self.entries.items():
            b = other.entries[key]
            if (a.metric, a.mean, a.n) != (b.metric, b.mean, b.n):
                return False
            if not (a.weighted_mean == b.weighted_mean
                    or (math.isnan(a.weighted_mean) and math.isnan(b.weighted_mean))):
                return False
        return True


class _Neumaier:
    """Compensated running sum."""

    __slots__ = ("total", "comp", "count")

    def __init__(self):
        self.total = 0.0
        self.comp = 0.0
        self.count = 0

    def add(self, x: float) -> None:
        t = self.total + x
        if abs(self.total) >= abs(x):
            self.comp += (self.total - t) + x
        else:
            self.comp += (x - t) + self.total
        self.total = t
        self.count += 1

    @property
    def value(self) -> float:
        return self.total + self.comp


def _collapsed_subset(network, subset, targets, joint, positive, n, infer) -> list[EvalEntry]:
    names = network.names
    out = []
    total_mass = math.fsum(joint.ravel())
    for target in targets:
        var = network.variable(target)
        metric = metric_for(var)
        distance = METRICS[metric]
        keep = sorted(network.position(v) for v in (*subset, target))
        others = tuple(i for i in range(len(names)) if i not in keep)
        counts = positive.sum(axis=others)
        weights = joint.sum(axis=others)
        kept_names = [names[i] for i in keep]
        # move the target axis last so each evidence key indexes a row over true states
        t_axis = kept_names.index(target)
        counts = np.moveaxis(counts, t_axis, -1)
        weights = np.moveaxis(weights, t_axis, -1)
        ev_names = [k for k in kept_names if k != target]
        deltas = [Distribution.delta(var, x) for x in range(var.cardinality)]
        terms, wterms = [], []
        for key in np.ndindex(*counts.shape[:-1]):
            row = counts[key]
            if not row.any():
                continue
            evidence = dict(zip(ev_names, (int(k) for k in key)))
            q = infer(target, evidence)
            for x in np.flatnonzero(row):
                d = distance(deltas[x], q)
                terms.append(float(row[x]) * d)
                wterms.append(float(weights[key][x]) * d)
        mean = math.fsum(terms) / n
        wmean = math.fsum(wterms) / total_mass
        out.append(EvalEntry(subset, target, metric, mean, int(n), wmean))
    return out


def evaluate_subsets(
    network: Network,
    subsets: Sequence[Sequence[str]] | None = None,
    *,
    targets: Sequence[str] = ROAD_CONDITIONS,
    sensors: Sequence[str] = SENSORS,
    fixed: Evidence | None = None,
    method: str = "collapsed",
    memoize: bool = True,
    workers: int = 1,
) -> EvalResult:
    """Mean distance of each target's posterior to the truth, per sensor subset.

    ``subsets`` defaults to the full power set of ``sensors``.  ``fixed``
    restricts the domain (used to test on reduced domains).  Posteriors are
    memoized by (target, projected evidence); ``memoize=False`` recomputes
    every posterior and is only practical on small domains.
    """
    sensors = tuple(sensors)
    targets = tuple(targets)
    if subsets is None:
        subsets = power_set(sensors)
    subsets = [canonical_subset(s, sensors) for s in subsets]
    if not subsets:
        raise ValueError("no sensor subsets to evaluate")
    subsets = list(dict.fromkeys(subsets))

    if memoize:
        infer = PosteriorCache(network)
    else:
        def infer(query, evidence):
            return posterior_ve(network, query, evidence)

    result = EvalResult(sensors, targets)
    if method == "collapsed":
        joint = _restricted_joint(network, fixed)
        positive = (joint > 0.0).astype(np.float64)
        n = int(positive.sum())
        args = (targets, joint, positive, n, infer)
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                chunks = list(pool.map(lambda s: _collapsed_subset(network, s, *args), subsets))
        else:
            chunks = [_collapsed_subset(network, s, *args) for s in subsets]
        for entry in itertools.chain.from_iterable(chunks):
            result.add(entry)
        return result
    if method != "enumerate":
        raise ValueError(f"unknown method {method!r}")

    names = network.names
    pos = {n: i for i, n in enumerate(names)}
    variables = {t: network.variable(t) for t in targets}
    metrics = {t: metric_for(variables[t]) for t in targets}
    sums = {(s, t): _Neumaier() for s in subsets for t in targets}
    wsums = {(s, t): _Neumaier() for s in subsets for t in targets}
    dist_memo: dict = {}
    mass = _Neumaier()
    for combo in enumerate_domain(network, fixed):
        mass.add(combo.probability)
        for s in subsets:
            evidence = {name: combo.states[pos[name]] for name in s}
            ekey = tuple(evidence.values())
            for t in targets:
                x = combo.states[pos[t]]
                mkey = (s, t, ekey, x)
                d = dist_memo.get(mkey) if memoize else None
                if d is None:
                    q = infer(t, evidence)
                    d = METRICS[metrics[t]](Distribution.delta(variables[t], x), q)
                    if memoize:
                        dist_memo[mkey] = d
                sums[s, t].add(d)
                wsums[s, t].add(combo.probability * d)
    for s in subsets:
        for t in targets:
            acc = sums[s, t]
            result.add(EvalEntry(s, t, metrics[t], acc.value / acc.count, acc.count,
                                 wsums[s, t].value / mass.value))
    return result


REPORT_COLUMNS = ("subset", "variable", "metric", "mean", "n")


def emit_report(result: EvalResult, path: str | os.PathLike, *, weighted: bool = False) -> None:
    """Write the sweep as CSV, one row per (subset, variable) in mask order."""
    columns = REPORT_COLUMNS + (("weighted_mean",) if weighted else ())
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for e in result.rows():
            row = [";".join(e.subset), e.variable, e.metric, repr(e.mean), e.n]
            if weighted:
                row.append(repr(e.weighted_mean))
            writer.writerow(row)


def load_report(
    path: str | os.PathLike,
    *,
    sensors: Sequence[str] = SENSORS,
    targets: Sequence[str] = ROAD_CONDITIONS,
) -> EvalResult:
    result = EvalResult(tuple(sensors), tuple(targets))
    with open(path, encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            subset = tuple(row["subset"].split(";")) if row["subset"] else ()
            result.add(
                EvalEntry(
                    canonical_subset(subset, sensors),
                    row["variable"],
                    row["metric"],
                    float(row["mean"]),
                    int(row["n"]),
                    float(row.get("weighted_mean") or "nan"),
                )
            )
    return result


def discrepancy_report(
    result: EvalResult,
    *,
    variable: str = "W",
    target: float = 0.635,
    tolerance: float = 0.05,
) -> str | None:
    """Explain a miss of the single-RCS reference value, or ``None`` if within tolerance.

    Compares equal-weight and probability-weighted means for each acoustic
    sensor alone and for both together.
    """
    rcs = [s for s in result.sensors if s.startswith("S_RCS")]
    candidates = [(s,) for s in rcs] + ([tuple(rcs)] if len(rcs) > 1 else [])
    available = [c for c in candidates if (c, variable) in result.entries]
    if not available:
        return None
    single = [c for c in available if len(c) == 1]
    if single and all(abs(result[c, variable].mean - target) <= tolerance for c in single):
        return None
    lines = [
        f"single-sensor acoustic reference for {variable}: {target:.3f} +/- {tolerance:.3f}",
        f"{'subset':<18}{'equal-weight':>14}{'prob-weighted':>15}{'n':>9}",
    ]
    for c in available:
        e = result[c, variable]
        lines.append(f"{'+'.join(c):<18}{e.mean:>14.6f}{e.weighted_mean:>15.6f}{e.n:>9d}")
    return "\n".join(lines) + "\n"
