"""Fractional-power speed observer and the two-state linear/nonlinear demo."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from fracform.controller import spow
from fracform.errors import DomainError, IntegrationError
from fracform.vehicle import AgentState, ControlInput

POS_POWER = 3.0 / 5.0
VEL_POWER = 1.0 / 5.0


@dataclass(frozen=True)
class ObserverState:
    z_hat: float
    v_hat: float


@dataclass(frozen=True)
class DemoState:
    y1: float
    y2: float
    y1_hat: float
    y2_hat: float

    def as_array(self) -> np.ndarray:
        return np.array([self.y1, self.y2, self.y1_hat, self.y2_hat])

    @classmethod
    def from_array(cls, a) -> "DemoState":
        return cls(*(float(v) for v in a))

    @property
    def error(self) -> np.ndarray:
        return np.array([self.y1 - self.y1_hat, self.y2 - self.y2_hat])


def transform(state: AgentState, u: ControlInput) -> tuple[float, float]:
    """Body-frame coordinate ``z`` and the drift ``w`` so that ``dz/dt = v + w``."""
    c, s = math.cos(state.heading), math.sin(state.heading)
    z = state.x * c + state.y * s
    w = (state.y * c - state.x * s) * u.turn_rate
    return z, w


def _spow1(e: float, a: float) -> float:
    return math.copysign(abs(e) ** a, e) if e != 0.0 else 0.0


def observer_step(obs: ObserverState, measured: tuple[float, float], u: ControlInput, dt: float,
                  measured_next: tuple[float, float] | None = None,
                  pos_power: float = POS_POWER, vel_power: float = VEL_POWER) -> ObserverState:
    """Advance the speed observer by one RK4 step.

    The output error is ``z - z_hat``. If ``measured_next`` is given the
    measurement is linearly interpolated across the step, otherwise it is held.
    """
    if not dt > 0:
        raise DomainError(f"dt must be positive, got {dt}")
    z0, w0 = measured
    z1, w1 = measured_next if measured_next is not None else measured

    def f(frac, zh, vh):
        e = z0 + frac * (z1 - z0) - zh
        w = w0 + frac * (w1 - w0)
        return vh + w + _spow1(e, pos_power), u.accel + _spow1(e, vel_power)

    h = 0.5 * dt
    a1, b1 = f(0.0, obs.z_hat, obs.v_hat)
    a2, b2 = f(0.5, obs.z_hat + h * a1, obs.v_hat + h * b1)
    a3, b3 = f(0.5, obs.z_hat + h * a2, obs.v_hat + h * b2)
    a4, b4 = f(1.0, obs.z_hat + dt * a3, obs.v_hat + dt * b3)
    zh = obs.z_hat + dt / 6.0 * (a1 + 2 * a2 + 2 * a3 + a4)
    vh = obs.v_hat + dt / 6.0 * (b1 + 2 * b2 + 2 * b3 + b4)
    if not (math.isfinite(zh) and math.isfinite(vh)):
        raise IntegrationError("observer state became non-finite")
    return ObserverState(zh, vh)


def _plant(y: np.ndarray) -> np.ndarray:
    return np.array([y[1], -y[0] - y[1]])


def _linear_rhs(s: np.ndarray) -> np.ndarray:
    e = s[0] - s[2]
    return np.concatenate([_plant(s[:2]), [s[3] + e, -s[2] - s[3] + e]])


def _nonlinear_rhs(s: np.ndarray) -> np.ndarray:
    e = s[0] - s[2]
    return np.concatenate([_plant(s[:2]), [s[3] + _spow1(e, POS_POWER), -s[2] - s[3] + _spow1(e, VEL_POWER)]])


def _rk4(f, s, dt):
    k1 = f(s)
    k2 = f(s + 0.5 * dt * k1)
    k3 = f(s + 0.5 * dt * k2)
    k4 = f(s + dt * k3)
    return s + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def demo_linear_step(d: DemoState, dt: float) -> DemoState:
    if not dt > 0:
        raise DomainError(f"dt must be positive, got {dt}")
    return DemoState.from_array(_rk4(_linear_rhs, d.as_array(), dt))


def demo_nonlinear_step(d: DemoState, dt: float) -> DemoState:
    if not dt > 0:
        raise DomainError(f"dt must be positive, got {dt}")
    return DemoState.from_array(_rk4(_nonlinear_rhs, d.as_array(), dt))


DEMO_INITIAL = DemoState(1.0, -1.0, -1.0, 1.0)


def run_demo(kind: str, horizon: float = 20.0, dt: float = 1e-3, initial: DemoState = DEMO_INITIAL):
    """Integrate the demo and return ``(times, states)`` with states as an (N, 4) array."""
    stepper = {"linear": demo_linear_step, "nonlinear": demo_nonlinear_step}[kind]
    n = int(round(horizon / dt))
    out = np.empty((n + 1, 4))
    d = initial
    out[0] = d.as_array()
    for k in range(n):
        d = stepper(d, dt)
        out[k + 1] = d.as_array()
    return np.arange(n + 1) * dt, out
