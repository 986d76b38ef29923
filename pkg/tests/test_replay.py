import numpy as np
import pytest

from frictionnet.errors import EmptyAfterExclusion, LengthMismatch, NonPositiveLoad, ZeroOrNegativeSpeed
from frictionnet.network import joint_tensor
from frictionnet.replay import (
    ObserverGate,
    ReplayConfig,
    assemble_evidence,
    camera_delay,
    gate_observer,
    observer_sensitivity,
    replay_report,
    run_replay,
)
from frictionnet.sensorlog import GroundTruth, SensorLogRecord
from frictionnet.sim import Scenario, Segment, generate_drive


def _record(t=0.0, v=10.0, **kw):
    return SensorLogRecord(timestamp=t, speed=v, **kw)


def _cam(label, conf=0.9):
    rest = (1 - conf) / 6
    return tuple(conf if i == label else rest for i in range(7))


def test_camera_delay():
    assert camera_delay(6.3, 12.6) == 0.5
    with pytest.raises(ZeroOrNegativeSpeed):
        camera_delay(6.3, 0.0)
    with pytest.raises(ZeroOrNegativeSpeed):
        camera_delay(6.3, -1.0)


def test_sensitivity():
    assert observer_sensitivity(400.0, 4000.0) == 0.1
    with pytest.raises(NonPositiveLoad):
        observer_sensitivity(1.0, 0.0)


def test_gate_threshold_is_strict():
    fz = (4000.0,) * 4
    at = _record(observer_mu=0.5, observer_dFx_dmu=(400.0,) * 4, observer_dFy_dmu=(0.0,) * 4, observer_Fz=fz)
    above = _record(observer_mu=0.5, observer_dFx_dmu=(0.0, 0.0, 0.0, 404.0),
                    observer_dFy_dmu=(0.0,) * 4, observer_Fz=fz)
    lateral = _record(observer_mu=0.5, observer_dFx_dmu=(0.0,) * 4,
                      observer_dFy_dmu=(0.0, 500.0, 0.0, 0.0), observer_Fz=fz)
    assert gate_observer(at) is None
    assert gate_observer(above) == 3
    assert gate_observer(lateral) == 3
    assert gate_observer(above, ObserverGate(0.2)) is None


def test_assemble_evidence():
    rec = _record(air_temp=-5.0, rcs1_raw=500, rcs2_raw=20000)
    assert assemble_evidence(rec, camera_class=3) == {"S_C": 3, "S_T": 2, "S_RCS1": 0, "S_RCS2": 2}
    assert assemble_evidence(_record()) == {}


def test_empty_log(roadnet):
    assert len(run_replay(roadnet, [])) == 0


def test_no_evidence_gives_prior(roadnet):
    series = run_replay(roadnet, [_record()])
    assert np.allclose(series[0].pavement.probabilities, 1 / 3)
    assert series[0].flags() == "00000"


def test_snow_camera_overruled(roadnet):
    rec = _record(air_temp=15.0, rcs1_raw=30000, rcs2_raw=30000, camera_scores=_cam(6))
    # frame captured at t=0 reaches the tires at t=0.63
    log = [rec, _record(t=1.0, air_temp=15.0, rcs1_raw=30000, rcs2_raw=30000)]
    series = run_replay(roadnet, log)
    assert "S_C" not in series[0].evidence
    assert series[1].evidence["S_C"] == 6
    assert series[1].weather.argmax() == 1


def test_delay_bookkeeping(roadnet):
    # 6 m at 2 m/s: a frame taken at t becomes effective at t + 3
    log = []
    for k in range(10):
        t = float(k)
        scores = _cam(k % 6) if k % 2 == 0 else None
        log.append(_record(t=t, v=2.0, camera_scores=scores))
    series = run_replay(roadnet, log, ReplayConfig(camera_distance=6.0))
    times = [e.camera_time for e in series]
    assert times == [None, None, None, 0.0, 0.0, 2.0, 2.0, 4.0, 4.0, 6.0]
    assert series[5].evidence["S_C"] == 2


def test_standstill_holds_last_frame(roadnet):
    log = [_record(t=0.0, v=10.0, camera_scores=_cam(1)),
           _record(t=1.0, v=0.0, camera_scores=_cam(4)),
           _record(t=2.0, v=0.0, camera_scores=_cam(4))]
    series = run_replay(roadnet, log)
    assert [e.evidence.get("S_C") for e in series] == [None, 1, 1]


def test_observer_reduces_friction_entropy(roadnet):
    fz = (4000.0,) * 4
    base = dict(air_temp=10.0, rcs1_raw=100, rcs2_raw=100, observer_mu=0.98,
                observer_dFy_dmu=(0.0,) * 4, observer_Fz=fz)
    idle = _record(observer_dFx_dmu=(10.0,) * 4, **base)
    excited = _record(observer_dFx_dmu=(2000.0,) * 4, **base)
    a, b = run_replay(roadnet, [idle])[0], run_replay(roadnet, [excited])[0]
    assert "S_FO" not in a.evidence and b.evidence["S_FO"] == 6
    assert b.friction.entropy() < a.friction.entropy()


def _bayes_optimal_weather_accuracy(net, clamp):
    """Expected accuracy of the MAP weather decision when sampling under ``clamp``."""
    joint = joint_tensor(net)
    names = net.names
    # model joint over (W, evidence) with the unobserved R and P summed out
    ev = ["S_C", "S_T", "S_RCS1", "S_RCS2", "S_FO"]
    keep = ["W"] + ev
    others = tuple(i for i, n in enumerate(names) if n not in keep)
    order = sorted(keep, key=names.index)
    model = np.moveaxis(joint.sum(axis=others), [order.index(k) for k in keep], range(len(keep)))
    # sampling distribution given the clamp: zero every cell that disagrees with it
    mask = np.zeros_like(joint, dtype=bool)
    mask[tuple(clamp.get(n, slice(None)) for n in names)] = True
    sampling = np.moveaxis(np.where(mask, joint, 0.0).sum(axis=others),
                           [order.index(k) for k in keep], range(len(keep)))
    sampling = sampling / sampling.sum()
    decision = model.argmax(axis=0)
    return float(np.take_along_axis(sampling, decision[None], axis=0).sum())


def test_accuracy_matches_bayes_optimal(roadnet):
    seg = Segment(duration=100.0, pavement="Concrete", precipitation=True,
                  air_temperature=3.0, speed=6.3, excitation=1.0)
    drive = generate_drive(roadnet, Scenario((seg,)), 10.0, 11)
    series = run_replay(roadnet, drive.records)
    skip = 10  # first second has no effective camera frame
    hits = [e.weather.argmax() == g.weather for e, g in zip(series.entries[skip:], drive.truth[skip:])]
    expected = _bayes_optimal_weather_accuracy(roadnet, {"R": 1, "P": 0, "S_T": 1})
    assert abs(np.mean(hits) - expected) < 0.03
    assert all(e.flags() == "11111" for e in series.entries[skip:])


def test_report_and_determinism(roadnet):
    seg = Segment(duration=5.0, pavement="Asphalt", precipitation=False, air_temperature=20.0, speed=10.0)
    drive = generate_drive(roadnet, Scenario((seg,)), 10.0, 3)
    a = run_replay(roadnet, drive.records)
    b = run_replay(roadnet, drive.records)
    ra, rb = replay_report(a, drive.truth), replay_report(b, drive.truth)
    assert ra == rb
    assert ra.n == 50 and 0 <= ra.bn.acc_weather <= 1
    with pytest.raises(LengthMismatch):
        replay_report(a, drive.truth[:-1])


def test_all_nan_camera_labels(roadnet):
    rec = _record(camera_scores=_cam(6))
    series = run_replay(roadnet, [rec, _record(t=5.0)])
    truth = [GroundTruth(0.0, 0, 2, 0), GroundTruth(5.0, 0, 2, 0)]
    with pytest.raises(EmptyAfterExclusion):
        replay_report(series, truth)
