"""Unicycle kinematics, RK4 integration and speed saturation."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from fracform.errors import DomainError, IntegrationError, SingularityError

DEFAULT_DT = 0.05


def wrap_angle(phi: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    wrapped = math.remainder(phi, 2.0 * math.pi)
    if wrapped <= -math.pi:
        wrapped += 2.0 * math.pi
    return wrapped


@dataclass(frozen=True)
class AgentState:
    x: float
    y: float
    speed: float
    heading: float

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y])

    @property
    def velocity(self) -> np.ndarray:
        return np.array([self.speed * math.cos(self.heading), self.speed * math.sin(self.heading)])

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.speed, self.heading])

    @classmethod
    def from_array(cls, s) -> "AgentState":
        return cls(float(s[0]), float(s[1]), float(s[2]), float(s[3]))


@dataclass(frozen=True)
class ControlInput:
    accel: float = 0.0
    turn_rate: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.accel) and math.isfinite(self.turn_rate)):
            raise DomainError(f"control input must be finite, got ({self.accel}, {self.turn_rate})")

    def as_array(self) -> np.ndarray:
        return np.array([self.accel, self.turn_rate])

    @classmethod
    def from_array(cls, u) -> "ControlInput":
        return cls(float(u[0]), float(u[1]))


ZERO_INPUT = ControlInput(0.0, 0.0)


@dataclass(frozen=True)
class VelocityBounds:
    v_min: float = 5.0
    v_max: float = 25.0

    def __post_init__(self):
        if not 0 < self.v_min < self.v_max:
            raise DomainError(f"need 0 < v_min < v_max, got ({self.v_min}, {self.v_max})")

    def clamp(self, v: float) -> float:
        return min(max(v, self.v_min), self.v_max)


def input_matrix(state: AgentState) -> np.ndarray:
    """M such that the planar acceleration equals ``M @ [accel, turn_rate]``."""
    c, s, v = math.cos(state.heading), math.sin(state.heading), state.speed
    return np.array([[c, -v * s], [s, v * c]])


def input_matrix_inverse(state: AgentState, v_min: float = 0.0) -> np.ndarray:
    v = state.speed
    if v <= 0.0 or v < v_min:
        raise SingularityError(f"speed {v} below lower bound {v_min}; input matrix is singular or unguarded")
    c, s = math.cos(state.heading), math.sin(state.heading)
    return np.array([[c, s], [-s / v, c / v]])


def acceleration(state: AgentState, u: ControlInput) -> np.ndarray:
    """Planar acceleration produced by input ``u`` at ``state``."""
    c, s, v = math.cos(state.heading), math.sin(state.heading), state.speed
    return np.array([c * u.accel - v * s * u.turn_rate, s * u.accel + v * c * u.turn_rate])


def _rhs(s: np.ndarray, u: np.ndarray) -> np.ndarray:
    return np.array([s[2] * math.cos(s[3]), s[2] * math.sin(s[3]), u[0], u[1]])


def state_derivative(state: AgentState, u: ControlInput) -> np.ndarray:
    """Time derivative ``(x', y', v', phi')`` of the unicycle."""
    return _rhs(state.as_array(), u.as_array())


def rk4_integrate(s: np.ndarray, dt: float, input_at: Callable[[float], np.ndarray], t: float = 0.0) -> np.ndarray:
    """One classical RK4 step of the raw unicycle ODE, no saturation."""
    h = 0.5 * dt
    u0 = input_at(t)
    uh = input_at(t + h)
    u1 = input_at(t + dt)
    # overflow surfaces as a non-finite result, checked by the caller
    with np.errstate(over="ignore", invalid="ignore"):
        k1 = _rhs(s, u0)
        k2 = _rhs(s + h * k1, uh)
        k3 = _rhs(s + h * k2, uh)
        k4 = _rhs(s + dt * k3, u1)
        return s + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _finish(raw: np.ndarray, bounds: VelocityBounds | None) -> AgentState:
    if not np.all(np.isfinite(raw)):
        raise IntegrationError(f"non-finite state after integration: {raw}")
    speed = float(raw[2]) if bounds is None else bounds.clamp(float(raw[2]))
    return AgentState(float(raw[0]), float(raw[1]), speed, wrap_angle(float(raw[3])))


def step(state: AgentState, u: ControlInput, dt: float, bounds: VelocityBounds | None = None) -> AgentState:
    """Advance one agent by ``dt`` under a held input, then clamp speed and wrap heading.

    ``bounds=None`` disables the speed clamp (useful for pure kinematics checks).
    """
    if not dt > 0:
        raise DomainError(f"dt must be positive, got {dt}")
    ua = u.as_array()
    raw = rk4_integrate(state.as_array(), dt, lambda _t: ua)
    return _finish(raw, bounds)


def step_scheduled(state: AgentState, schedule: Callable[[float], ControlInput], t: float, dt: float,
                   bounds: VelocityBounds | None = None) -> AgentState:
    """Like :func:`step` but the input is re-evaluated at the RK4 stage times."""
    if not dt > 0:
        raise DomainError(f"dt must be positive, got {dt}")
    raw = rk4_integrate(state.as_array(), dt, lambda tt: schedule(tt).as_array(), t)
    return _finish(raw, bounds)


TARGET_TURN_AMPLITUDE = 0.5
TARGET_PERIOD = 50.0


def target_input(t: float, amplitude: float = TARGET_TURN_AMPLITUDE) -> ControlInput:
    """Target maneuver: constant speed, sinusoidal turn rate."""
    if t < 0:
        raise DomainError(f"time must be non-negative, got {t}")
    return ControlInput(0.0, amplitude * math.sin(2.0 * math.pi * t / TARGET_PERIOD))


def target_cartesian_accel(t: float, amplitude: float = TARGET_TURN_AMPLITUDE) -> np.ndarray:
    """Alternative reading of the maneuver as a world-frame acceleration."""
    if t < 0:
        raise DomainError(f"time must be non-negative, got {t}")
    return np.array([0.0, amplitude * math.sin(2.0 * math.pi * t / TARGET_PERIOD)])


@dataclass(frozen=True)
class TargetProfile:
    """Target initial state plus the rule producing its input at time ``t``.

    ``mode`` is ``"speed-heading"`` (the schedule is ``[accel, turn_rate]``)
    or ``"cartesian"`` (the schedule is a world-frame acceleration that is
    mapped through the inverse input matrix at the current state).
    ``turn_amplitude = 0`` gives a straight-line target.
    """

    initial: AgentState
    mode: str = "speed-heading"
    turn_amplitude: float = TARGET_TURN_AMPLITUDE

    def __post_init__(self):
        if self.mode not in ("speed-heading", "cartesian"):
            raise DomainError(f"unknown target input mode {self.mode!r}")
        if not math.isfinite(self.turn_amplitude):
            raise DomainError("turn amplitude must be finite")

    def input_at(self, t: float, state: AgentState) -> ControlInput:
        if self.mode == "speed-heading":
            return target_input(t, self.turn_amplitude)
        return ControlInput.from_array(input_matrix_inverse(state) @ target_cartesian_accel(t, self.turn_amplitude))

    def advance(self, state: AgentState, t: float, dt: float) -> AgentState:
        amp = self.turn_amplitude
        if self.mode == "speed-heading":
            return step_scheduled(state, lambda tt: target_input(tt, amp), t, dt)
        # cartesian mode needs the state at each stage, so integrate the full closed loop
        def f(tt, s):
            st = AgentState.from_array(s)
            return _rhs(s, input_matrix_inverse(st) @ target_cartesian_accel(tt, amp))
        s = state.as_array()
        h = 0.5 * dt
        k1 = f(t, s)
        k2 = f(t + h, s + h * k1)
        k3 = f(t + h, s + h * k2)
        k4 = f(t + dt, s + dt * k3)
        return _finish(s + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4), None)
