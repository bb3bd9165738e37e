import math

import numpy as np
import pytest

from fracform.errors import DomainError, IntegrationError, SingularityError
from fracform.vehicle import (
    AgentState,
    ControlInput,
    TargetProfile,
    VelocityBounds,
    acceleration,
    input_matrix,
    input_matrix_inverse,
    state_derivative,
    step,
    target_input,
    wrap_angle,
)

BOUNDS = VelocityBounds(5.0, 25.0)


def random_state(rng):
    return AgentState(*rng.uniform(-500, 500, 2), rng.uniform(5, 25), rng.uniform(-math.pi, math.pi))


def test_input_matrix_examples():
    np.testing.assert_allclose(input_matrix(AgentState(0, 0, 1, 0)), np.eye(2))
    np.testing.assert_allclose(input_matrix(AgentState(0, 0, 2, math.pi / 2)), [[0, -2], [1, 0]], atol=1e-12)
    assert np.linalg.det(input_matrix(AgentState(0, 0, 8, 0.7854))) == pytest.approx(8.0, abs=1e-9)


def test_input_matrix_inverse_examples(rng):
    np.testing.assert_allclose(input_matrix_inverse(AgentState(0, 0, 1, 0)), np.eye(2))
    for _ in range(100):
        s = random_state(rng)
        np.testing.assert_allclose(input_matrix(s) @ input_matrix_inverse(s, 5.0), np.eye(2), atol=1e-12)


def test_input_matrix_inverse_guard():
    with pytest.raises(SingularityError):
        input_matrix_inverse(AgentState(0, 0, 0, 0))
    with pytest.raises(SingularityError):
        input_matrix_inverse(AgentState(0, 0, 4.0, 0), v_min=5.0)


def test_state_derivative_examples():
    np.testing.assert_allclose(state_derivative(AgentState(0, 0, 10, 0), ControlInput()), [10, 0, 0, 0])
    np.testing.assert_allclose(state_derivative(AgentState(0, 0, 10, math.pi / 2), ControlInput(1, 0.1)),
                               [0, 10, 1, 0.1], atol=1e-12)


def test_second_derivative_matches_input_matrix(rng):
    # differentiate p' = v (cos phi, sin phi) along the flow by central differences
    h = 1e-5
    for _ in range(100):
        s = random_state(rng)
        u = ControlInput(*rng.uniform(-3, 3, 2))

        def pdot(t):
            v = s.speed + u.accel * t
            phi = s.heading + u.turn_rate * t
            return np.array([v * math.cos(phi), v * math.sin(phi)])

        fd = (pdot(h) - pdot(-h)) / (2 * h)
        np.testing.assert_allclose(input_matrix(s) @ u.as_array(), fd, atol=1e-6)
        np.testing.assert_allclose(acceleration(s, u), input_matrix(s) @ u.as_array(), atol=1e-12)


def test_step_zero_input_straight_line():
    s1 = step(AgentState(0, 0, 10, 0), ControlInput(), 0.1, BOUNDS)
    assert (s1.x, s1.y, s1.speed, s1.heading) == (1.0, 0.0, 10.0, 0.0)


def test_step_clamps_speed():
    assert step(AgentState(0, 0, 10, 0), ControlInput(1000, 0), 0.1, BOUNDS).speed == 25.0
    assert step(AgentState(0, 0, 10, 0), ControlInput(-1000, 0), 0.1, BOUNDS).speed == 5.0


def test_step_rejects_bad_dt():
    with pytest.raises(DomainError):
        step(AgentState(0, 0, 10, 0), ControlInput(), 0.0, BOUNDS)


def test_step_non_finite():
    with pytest.raises(IntegrationError):
        step(AgentState(0, 0, 1e308, 0), ControlInput(), 10.0)


def circle_error(dt, omega=2 * math.pi / 10, v=10.0):
    """Max position error of RK4 over one full turn vs the closed-form circle."""
    radius = v / omega
    n = int(round(2 * math.pi / omega / dt))
    s = AgentState(0.0, 0.0, v, 0.0)
    u = ControlInput(0.0, omega)
    err = 0.0
    for k in range(1, n + 1):
        s = step(s, u, dt)
        t = k * dt
        exact = (radius * math.sin(omega * t), radius * (1 - math.cos(omega * t)))
        err = max(err, math.hypot(s.x - exact[0], s.y - exact[1]))
    return err, s, radius


def test_circle_returns_to_start():
    _, s, radius = circle_error(1e-3)
    assert math.hypot(s.x, s.y) <= 1e-4 * radius


def test_rk4_order_on_circle():
    e1, *_ = circle_error(0.5)
    e2, *_ = circle_error(0.25)
    assert e1 / e2 >= 8.0


def test_zero_input_keeps_speed_and_heading(rng):
    for _ in range(20):
        s = random_state(rng)
        s1 = step(s, ControlInput(), 0.05, BOUNDS)
        assert s1.speed == s.speed
        assert s1.heading == pytest.approx(s.heading, abs=1e-15)
        d = np.array([s1.x - s.x, s1.y - s.y])
        np.testing.assert_allclose(d, 0.05 * s.velocity, atol=1e-12)


def test_post_step_speed_always_in_bounds(rng):
    for _ in range(200):
        s = random_state(rng)
        s1 = step(s, ControlInput(*rng.uniform(-200, 200, 2)), 0.05, BOUNDS)
        assert BOUNDS.v_min <= s1.speed <= BOUNDS.v_max
        assert -math.pi < s1.heading <= math.pi


def test_second_difference_of_integrated_path(rng):
    # p0 - 2 p1 + p2 over dt^2 is a central estimate of the acceleration at p1
    dt = 1e-3
    for _ in range(10):
        s0 = random_state(rng)
        u = ControlInput(*rng.uniform(-1, 1, 2))
        s1 = step(s0, u, dt)
        s2 = step(s1, u, dt)
        pdd = (s2.position - 2 * s1.position + s0.position) / dt**2
        np.testing.assert_allclose(pdd, acceleration(s1, u), atol=1e-3)


def test_wrap_angle():
    assert wrap_angle(math.pi) == pytest.approx(math.pi)
    assert wrap_angle(-math.pi) == pytest.approx(math.pi)
    assert wrap_angle(3 * math.pi / 2) == pytest.approx(-math.pi / 2)


def test_target_input_schedule():
    assert target_input(0.0) == ControlInput(0.0, 0.0)
    assert target_input(12.5).turn_rate == pytest.approx(0.5, abs=1e-15)
    assert target_input(12.5).accel == 0.0
    assert abs(target_input(25.0).turn_rate) <= 1e-12
    with pytest.raises(DomainError):
        target_input(-1.0)


def test_target_profile_holds_speed():
    prof = TargetProfile(AgentState(0, 0, 10, 0))
    s = prof.initial
    for k in range(200):
        s = prof.advance(s, k * 0.05, 0.05)
    assert s.speed == pytest.approx(10.0, abs=1e-12)
    # heading is the integral of the turn rate: 0.5*50/(2 pi) (1 - cos(2 pi t/50)) at t = 10
    expected = wrap_angle(0.5 * 50 / (2 * math.pi) * (1 - math.cos(2 * math.pi * 10 / 50)))
    assert s.heading == pytest.approx(expected, abs=1e-8)


def test_target_profile_cartesian_mode():
    prof = TargetProfile(AgentState(0, 0, 10, 0), mode="cartesian")
    u = prof.input_at(12.5, prof.initial)
    np.testing.assert_allclose(acceleration(prof.initial, u), [0.0, 0.5], atol=1e-12)
    with pytest.raises(DomainError):
        TargetProfile(AgentState(0, 0, 10, 0), mode="polar")


def test_bounds_validation():
    with pytest.raises(DomainError):
        VelocityBounds(5, 5)
    with pytest.raises(DomainError):
        ControlInput(float("nan"), 0)
