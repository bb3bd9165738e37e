import dataclasses
import math

import numpy as np
import pytest

from fracform.config import parse_config, resolve_config
from fracform.errors import DisconnectionError
from fracform.simulation import (
    csv_header,
    emit_csv,
    format_value,
    read_csv,
    run_simulation,
    sweep_tau,
)

SINGLE = """
[scenario]
dt = 0.05
horizon = {horizon}

[target]
speed = 10
heading = 0.3
turn_amplitude = 0

[uav.1]
x = {x}
y = {y}
speed = 10
heading = 0.3
"""


def single_uav(horizon=10.0, x=100.0, y=0.0):
    return parse_config(SINGLE.format(horizon=horizon, x=x, y=y), "single.cfg")


# -- closed loop --------------------------------------------------------------

def test_single_uav_holds_its_slot():
    traj, summary = run_simulation(single_uav())
    assert np.max(traj.ep_norm) <= 1e-3
    assert summary.converged and summary.convergence_time == 0.0


def test_log_shape_and_time_axis():
    cfg = parse_config(SINGLE.format(horizon=0.05, x=100, y=0))
    traj, _ = run_simulation(cfg)
    assert len(traj) == 2
    assert np.all(np.diff(traj.times) > 0)


def test_out_of_range_uav_aborts():
    # the only UAV starts beyond the communication range of the target
    with pytest.raises(DisconnectionError):
        run_simulation(single_uav(x=1000.0))


def test_isolated_uav_is_logged_and_coasts():
    text = SINGLE.format(horizon=0.1, x=100, y=0) + "\n[uav.2]\nx = 5000\ny = 0\nspeed = 10\nheading = 0\n"
    traj, summary = run_simulation(parse_config(text))
    assert summary.isolation_count == len(traj)
    assert all(i == 1 for _, i in traj.isolation_events)
    assert np.all(traj.inputs[:, 1] == 0.0)
    assert not summary.connectivity_maintained
    assert not summary.converged and summary.convergence_time is None


def test_set_a_sweep_properties(sweep_a):
    for run in sweep_a:
        s = run.summary
        assert s.converged and s.connectivity_maintained
        assert s.min_lambda2 > 0
        assert s.final_separations == pytest.approx([100.0] * 4, rel=0.02)


def test_final_geometry_matches_slots(sweep_a):
    spacing = math.pi / 2
    for run in sweep_a:
        rel = run.traj.states[-1, :, :2] - run.traj.target[-1, :2]
        ang = np.arctan2(rel[:, 1], rel[:, 0])
        gaps = np.angle(np.exp(1j * (np.roll(ang, -1) - ang)))[:-1]
        assert np.all(np.abs(np.degrees(gaps - spacing)) <= 2.0)


def test_set_b_keeps_connectivity(sweep_b):
    for run in sweep_b:
        assert np.all(run.traj.lambda2 > 0)
        assert run.summary.connectivity_maintained


def test_effort_is_l1_of_applied_inputs(sweep_a):
    run = sweep_a[0]
    dt = 0.05
    expected = [float(np.sum(np.abs(run.traj.inputs[:-1, i, :])) * dt) for i in range(4)]
    assert run.summary.control_effort == pytest.approx(expected, rel=1e-12)


def test_sweep_zero_equals_single_run(set_a_regular):
    cfg = set_a_regular.with_tau(0.0)
    (summary,) = sweep_tau(set_a_regular, [0.0])
    _, single = run_simulation(cfg)
    assert summary == single


def test_sweep_records_failed_runs():
    summaries = sweep_tau(single_uav(horizon=0.1, x=1000.0), [0.0, -0.1])
    assert all(s.error and "isolated" in s.error for s in summaries)
    assert [s.tau for s in summaries] == [0.0, -0.1]


def test_observer_tracks_speeds(set_a_regular):
    traj, _ = run_simulation(set_a_regular.with_observer(True))
    err = np.abs(traj.v_hat - traj.states[:, :, 2])
    assert np.all(err[traj.times >= 10.0] < 0.1)


# -- CSV ----------------------------------------------------------------------

def test_csv_header_counts():
    assert len(csv_header(4, False)) == 30
    assert len(csv_header(4, True)) == 34
    assert csv_header(1, True) == ["t", "x1", "y1", "v1", "phi1", "accel1", "turnrate1", "ep_norm1", "vhat1",
                                   "lambda2"]


@pytest.mark.parametrize("value, text", [
    (0.0, "0"), (1.0, "1"), (-2.5, "-2.5"), (0.1, "0.1"), (1 / 3, "0.333333333"),
    (123456.789012, "123456.789"), (1e-7, "1e-07"), (2.0 ** 60, "1.1529215e+18"),
])
def test_format_value(value, text):
    assert format_value(value) == text


def test_csv_round_trip(tmp_path):
    traj, _ = run_simulation(single_uav(horizon=1.0, x=90, y=5))
    path = emit_csv(traj, tmp_path / "run.csv")
    header, data = read_csv(path)
    assert header == csv_header(1, False)
    assert data.shape == (len(traj), 9)
    np.testing.assert_allclose(data[:, 0], traj.times, rtol=1e-9)
    np.testing.assert_allclose(data[:, 1:5], traj.states[:, 0, :], rtol=1e-8, atol=1e-300)
    np.testing.assert_allclose(data[:, 7], traj.ep_agent[:, 0], rtol=1e-8)
    np.testing.assert_allclose(data[:, 8], traj.lambda2, rtol=1e-8)
    assert path.read_text().endswith("\n")


def test_csv_unwritable_path(tmp_path):
    traj, _ = run_simulation(single_uav(horizon=0.05))
    with pytest.raises(OSError, match="cannot write CSV"):
        emit_csv(traj, tmp_path / "missing" / "run.csv")


def test_runs_are_deterministic(tmp_path):
    cfg = resolve_config("tableB.cfg")
    cfg = dataclasses.replace(cfg, horizon=5.0)
    a = emit_csv(run_simulation(cfg)[0], tmp_path / "a.csv")
    b = emit_csv(run_simulation(cfg)[0], tmp_path / "b.csv")
    assert a.read_bytes() == b.read_bytes()
