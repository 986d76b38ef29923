import itertools
import math

import numpy as np
import pytest

from frictionnet.domain_eval import (
    discrepancy_report,
    emit_report,
    enumerate_domain,
    evaluate_subsets,
    load_report,
    power_set,
    raw_domain_size,
)
from frictionnet.metrics import hellinger

import published_tables as pv


def _positive_count_oracle():
    """Count positive assignments from zero patterns of the published tables."""
    cam_support = 7  # the stand-in camera matrix has no zero in the relevant rows
    pav = ["Asphalt", "Concrete", "Cobblestone"]
    wea = ["Dry", "Wet", "Snow"]
    total = 0
    for r, w in itertools.product(pav, wea):
        mu_row = pv.MAX_FRICTION[(r, w)]
        fo = sum(sum(1 for x in pv.FRICTION_OBSERVER[f"mu{m + 1}"] if x > 0)
                 for m in range(8) if mu_row[m] > 0)
        rcs = sum(1 for x in pv.rcs_row(r, w) if x > 0)
        w_idx = wea.index(w)
        weather_paths = 0
        for p, st_, t in itertools.product(("true", "false"), range(4), range(4)):
            if pv.PAVEMENT_TEMPERATURE[f"S_T{st_ + 1}"][t] > 0 and pv.ROAD_WEATHER[(p, f"T{t + 1}")][w_idx] > 0:
                weather_paths += 1
        cam = 7 if w != "Snow" else 4
        total += weather_paths * fo * rcs * rcs * cam
    return total


def test_domain_size_matches_oracle(roadnet):
    assert raw_domain_size(roadnet) == 3 * 4 * 2 * 3 * 8 * 7 * 4 * 3 * 3 * 8
    n = sum(1 for _ in enumerate_domain(roadnet))
    assert n == _positive_count_oracle()


def test_zero_probability_combination_never_yielded(roadnet):
    names = roadnet.names
    r, w, mu = names.index("R"), names.index("W"), names.index("mu_max")
    for combo in enumerate_domain(roadnet, {"R": 0, "W": 0}):
        assert combo.states[mu] != 0
        assert combo.probability > 0
        assert combo.states[r] == 0 and combo.states[w] == 0


@pytest.fixture(scope="module")
def small_sweep(roadnet):
    subsets = [(), ("S_RCS1",), ("S_RCS1", "S_RCS2"), ("S_C", "S_T"), ("S_FO",)]
    return evaluate_subsets(roadnet, subsets)


def test_empty_subset_closed_form(roadnet, small_sweep):
    # with no evidence the posterior of R is the uniform prior
    expected = hellinger([1, 0, 0], [1 / 3] * 3)
    assert math.isclose(small_sweep[(), "R"].mean, expected, abs_tol=1e-12)
    assert small_sweep[(), "R"].n == sum(1 for _ in enumerate_domain(roadnet))


def test_second_rcs_adds_little(small_sweep):
    one = small_sweep[("S_RCS1",), "W"].mean
    two = small_sweep[("S_RCS1", "S_RCS2"), "W"].mean
    assert two <= one + 1e-12
    assert one - two <= 0.06


def test_memoization_transparent(roadnet):
    fixed = {"R": 0}
    subsets = [(), ("S_RCS1",), ("S_T", "S_FO")]
    a = evaluate_subsets(roadnet, subsets, fixed=fixed, memoize=True)
    b = evaluate_subsets(roadnet, subsets, fixed=fixed, memoize=False)
    for key, e in a.entries.items():
        assert abs(e.mean - b.entries[key].mean) <= 1e-12


def test_enumerate_matches_collapsed(roadnet):
    fixed = {"R": 0, "P": 0}
    subsets = [(), ("S_RCS1",), ("S_C", "S_FO")]
    a = evaluate_subsets(roadnet, subsets, fixed=fixed)
    b = evaluate_subsets(roadnet, subsets, fixed=fixed, method="enumerate")
    for key, e in a.entries.items():
        assert e.n == b.entries[key].n
        assert abs(e.mean - b.entries[key].mean) <= 1e-12
        assert abs(e.weighted_mean - b.entries[key].weighted_mean) <= 1e-12


def test_enumerate_memo_off_matches(roadnet):
    fixed = {"R": 1, "P": 1, "S_T": 2, "T": 2, "W": 0}
    subsets = [("S_RCS1",), ("S_C", "S_T")]
    a = evaluate_subsets(roadnet, subsets, fixed=fixed, method="enumerate", memoize=True)
    b = evaluate_subsets(roadnet, subsets, fixed=fixed, method="enumerate", memoize=False)
    assert a == b


def test_threaded_equals_serial(roadnet):
    subsets = power_set()[:6]
    a = evaluate_subsets(roadnet, subsets, fixed={"R": 2})
    b = evaluate_subsets(roadnet, subsets, fixed={"R": 2}, workers=3)
    assert a == b


def test_power_set_order():
    ps = power_set()
    assert len(ps) == 32 and ps[0] == () and ps[1] == ("S_C",) and ps[-1] == tuple(ps[-1])
    assert len(set(ps)) == 32


def test_report_round_trip(tmp_path, small_sweep):
    path = tmp_path / "r.csv"
    emit_report(small_sweep, path, weighted=True)
    lines = path.read_text().splitlines()
    assert len(lines) == 1 + 5 * 3
    assert lines[0] == "subset,variable,metric,mean,n,weighted_mean"
    assert load_report(path) == small_sweep
    again = tmp_path / "s.csv"
    emit_report(small_sweep, again, weighted=True)
    assert path.read_bytes() == again.read_bytes()


def test_discrepancy_note(small_sweep):
    note = discrepancy_report(small_sweep)
    w = small_sweep[("S_RCS1",), "W"].mean
    if abs(w - 0.635) <= 0.05:
        assert note is None
    else:
        assert "S_RCS1+S_RCS2" in note and "prob-weighted" in note
    assert discrepancy_report(small_sweep, target=w) is None


def test_unknown_sensor_rejected(roadnet):
    with pytest.raises(ValueError):
        evaluate_subsets(roadnet, [("S_X",)])
