import numpy as np
import pytest

from frictionnet.network import Cpt, Variable, build_network
from frictionnet.roadnet import build_roadnet

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def roadnet():
    return build_roadnet()


def random_network(rng: np.random.Generator, max_nodes: int = 8, max_states: int = 4,
                   zero_prob: float = 0.1):
    """Random DAG over nodes X0..Xk with Dirichlet CPT rows, some entries zeroed."""
    n = int(rng.integers(1, max_nodes + 1))
    variables = [
        Variable(f"X{i}", tuple(f"s{j}" for j in range(int(rng.integers(2, max_states + 1)))))
        for i in range(n)
    ]
    cpts = []
    for i, v in enumerate(variables):
        k = int(rng.integers(0, min(i, 3) + 1))
        parents = tuple(f"X{j}" for j in sorted(rng.choice(i, size=k, replace=False))) if k else ()
        n_rows = int(np.prod([variables[int(p[1:])].cardinality for p in parents])) if parents else 1
        rows = rng.dirichlet(np.ones(v.cardinality), size=n_rows)
        mask = rng.random(rows.shape) < zero_prob
        mask[np.arange(n_rows), rng.integers(0, v.cardinality, n_rows)] = False
        rows = np.where(mask, 0.0, rows)
        rows /= rows.sum(axis=1, keepdims=True)
        cpts.append(Cpt(v.name, parents, rows))
    # shuffle declaration order so topological sorting is exercised
    perm = rng.permutation(n)
    return build_network([variables[i] for i in perm], [cpts[i] for i in perm])


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
