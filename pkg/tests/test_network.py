import json
import math

import numpy as np
import pytest

from frictionnet.errors import (
    CycleDetected,
    DuplicateName,
    IncompleteAssignment,
    InvalidEvidence,
    MissingCpt,
    RowLengthMismatch,
    UnknownParent,
    UnnormalizedRow,
)
from frictionnet.io import load_network, network_to_document, save_network
from frictionnet.network import (
    Cpt,
    Variable,
    build_network,
    joint_probability,
    joint_tensor,
    validate_evidence,
)

from conftest import random_network
import published_tables as pv

A = Variable("A", ("a0", "a1"))
B = Variable("B", ("b0", "b1"))


def test_single_node_network():
    net = build_network([A], [Cpt("A", (), [0.5, 0.5])])
    assert net.names == ("A",)
    assert net.order == ("A",)


def test_row_count_mismatch():
    with pytest.raises(RowLengthMismatch):
        build_network([A, B], [Cpt("A", (), [0.5, 0.5]), Cpt("B", ("A",), [[0.5, 0.5]])])


def test_row_length_mismatch():
    with pytest.raises(RowLengthMismatch):
        build_network([A], [Cpt("A", (), [0.2, 0.3, 0.5])])


def test_cycle_detected():
    with pytest.raises(CycleDetected, match="cycle"):
        build_network(
            [A, B],
            [Cpt("A", ("B",), [[1, 0], [0, 1]]), Cpt("B", ("A",), [[1, 0], [0, 1]])],
        )


def test_missing_cpt():
    with pytest.raises(MissingCpt):
        build_network([A, B], [Cpt("A", (), [0.5, 0.5])])


def test_unknown_parent():
    with pytest.raises(UnknownParent):
        build_network([A], [Cpt("A", ("Z",), [[0.5, 0.5], [0.5, 0.5]])])


def test_unnormalized_row():
    with pytest.raises(UnnormalizedRow):
        build_network([A], [Cpt("A", (), [0.5, 0.5 + 1e-8])])
    # within tolerance is accepted
    build_network([A], [Cpt("A", (), [0.5, 0.5 + 1e-10])])


def test_variable_invariants():
    with pytest.raises(Exception):
        Variable("X", ("only",))
    with pytest.raises(DuplicateName):
        Variable("X", ("s", "s"))
    with pytest.raises(DuplicateName):
        build_network([A, A], [Cpt("A", (), [0.5, 0.5])])


def test_joint_single_factor():
    net = build_network([A], [Cpt("A", (), [0.3, 0.7])])
    assert joint_probability(net, {"A": 1}) == 0.7


def test_joint_zero_factor_is_exact_zero():
    net = build_network(
        [A, B], [Cpt("A", (), [0.5, 0.5]), Cpt("B", ("A",), [[1, 0], [0, 1]])]
    )
    assert joint_probability(net, {"A": 0, "B": 1}) == 0.0


def test_joint_incomplete():
    net = build_network([A, B], [Cpt("A", (), [0.5, 0.5]), Cpt("B", ("A",), [[1, 0], [0, 1]])])
    with pytest.raises(IncompleteAssignment):
        joint_probability(net, {"A": 0})


def test_evidence_validation():
    net = build_network([A], [Cpt("A", (), [0.5, 0.5])])
    assert validate_evidence(net, {"A": "a1"}) == {"A": 1}
    with pytest.raises(InvalidEvidence):
        validate_evidence(net, {"A": 2})
    with pytest.raises(InvalidEvidence):
        validate_evidence(net, {"Q": 0})


def _hand_joint(a):
    """Product of published table entries for one road-network assignment."""
    pav = ["Asphalt", "Concrete", "Cobblestone"][a["R"]]
    wea = ["Dry", "Wet", "Snow"][a["W"]]
    st = f"S_T{a['S_T'] + 1}"
    t_row = pv.PAVEMENT_TEMPERATURE[st]
    w_row = pv.ROAD_WEATHER[(["true", "false"][a["P"]], f"T{a['T'] + 1}")]
    mu_row = pv.MAX_FRICTION[(pav, wea)]
    fo_row = pv.FRICTION_OBSERVER[f"mu{a['mu_max'] + 1}"]
    rcs = pv.rcs_row(pav, wea)
    from frictionnet.roadnet import camera_class, default_camera_matrix

    cam = default_camera_matrix().matrix[camera_class(a["R"], a["W"])]
    p = (1 / 3) * (1 / 2) * (1 / 4)
    p *= t_row[a["T"]] / sum(t_row)
    p *= w_row[a["W"]] / sum(w_row)
    p *= mu_row[a["mu_max"]] / sum(mu_row)
    p *= fo_row[a["S_FO"]] / sum(fo_row)
    p *= rcs[a["S_RCS1"]] / 100 * rcs[a["S_RCS2"]] / 100
    p *= cam[a["S_C"]]
    return p


def test_road_joint_matches_hand_product(roadnet):
    rng = np.random.default_rng(5)
    joint = joint_tensor(roadnet)
    positive = np.argwhere(joint > 0)
    picks = positive[rng.choice(len(positive), 5, replace=False)]
    for idx in picks:
        a = dict(zip(roadnet.names, map(int, idx)))
        assert math.isclose(joint_probability(roadnet, a), _hand_joint(a), rel_tol=1e-12)


def test_joint_tensor_sums_to_one():
    rng = np.random.default_rng(1)
    for _ in range(20):
        net = random_network(rng, max_nodes=6)
        assert math.isclose(joint_tensor(net).sum(), 1.0, rel_tol=1e-12)


def test_file_round_trip(tmp_path, roadnet):
    p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
    save_network(roadnet, p1)
    once = load_network(p1)
    save_network(once, p2)
    twice = load_network(p2)
    assert once == roadnet
    assert twice == once
    assert p1.read_bytes() == p2.read_bytes()


def test_percent_units(tmp_path):
    doc = {
        "units": "percent",
        "variables": [{"name": "A", "states": ["a0", "a1"]}],
        "cpts": [{"child": "A", "parents": [], "rows": [[30, 70]]}],
    }
    path = tmp_path / "m.json"
    path.write_text(json.dumps(doc))
    net = load_network(path)
    assert net.cpts["A"].rows.tolist() == [[0.3, 0.7]]
    assert network_to_document(net)["units"] == "fraction"
