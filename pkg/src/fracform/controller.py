"""Linear and fractional-power consensus formation laws."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from fracform.errors import DomainError, IsolationError
from fracform.vehicle import AgentState, ControlInput, input_matrix_inverse


def spow(x, alpha: float):
    """Elementwise signed power ``sign(x) * |x|**alpha``."""
    if not alpha > 0:
        raise DomainError(f"alpha must be positive, got {alpha}")
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.abs(x) ** alpha


def derived_powers(tau: float) -> tuple[float, float]:
    """Position and velocity exponents ``(1 + 2 tau, (1 + 2 tau) / (1 + tau))``."""
    if not tau > -0.5:
        raise DomainError(f"tau must exceed -1/2, got {tau}")
    return 1.0 + 2.0 * tau, (1.0 + 2.0 * tau) / (1.0 + tau)


@dataclass(frozen=True)
class ControllerParams:
    k1: float = 1.0
    k2: float = 1.6
    tau: float = 0.0
    alpha1: float = field(init=False)
    alpha2: float = field(init=False)

    def __post_init__(self):
        a1, a2 = derived_powers(self.tau)
        object.__setattr__(self, "alpha1", a1)
        object.__setattr__(self, "alpha2", a2)


@dataclass(frozen=True)
class FormationSpec:
    """Desired slots ``delta * (cos psi_i, sin psi_i)`` around the target."""

    delta: float
    psi: tuple[float, ...]

    def __post_init__(self):
        if not self.delta > 0:
            raise DomainError(f"delta must be positive, got {self.delta}")
        object.__setattr__(self, "psi", tuple(float(p) for p in self.psi))

    @classmethod
    def regular(cls, delta: float, n: int) -> "FormationSpec":
        """Evenly spaced slots ``psi_i = 2 pi i / n`` for ``i = 1..n``."""
        return cls(delta, tuple(2.0 * math.pi * i / n for i in range(1, n + 1)))

    @property
    def offsets(self) -> np.ndarray:
        psi = np.asarray(self.psi)
        return self.delta * np.column_stack([np.cos(psi), np.sin(psi)])

    def offset(self, i: int) -> np.ndarray:
        return self.delta * np.array([math.cos(self.psi[i]), math.sin(self.psi[i])])

    def __len__(self):
        return len(self.psi)


@dataclass(frozen=True)
class Neighbor:
    """What agent ``i`` knows about one neighbor ``j``.

    ``hat_position`` is ``p_j - P_j`` (the target uses a zero offset).
    """

    weight: float
    hat_position: np.ndarray
    velocity: np.ndarray
    acceleration: np.ndarray


def bracket(hat_p_i, vel_i, nb: Neighbor, params: ControllerParams) -> np.ndarray:
    """Desired planar acceleration of ``i`` from one neighbor's term."""
    return (np.asarray(nb.acceleration, dtype=float)
            - params.k1 * spow(np.asarray(hat_p_i) - nb.hat_position, params.alpha1)
            - params.k2 * spow(np.asarray(vel_i) - nb.velocity, params.alpha2))


def pairwise_control(state_i: AgentState, offset_i, nb: Neighbor, params: ControllerParams,
                     v_min: float = 0.0) -> ControlInput:
    hat_p_i = state_i.position - np.asarray(offset_i, dtype=float)
    minv = input_matrix_inverse(state_i, v_min)
    return ControlInput.from_array(minv @ bracket(hat_p_i, state_i.velocity, nb, params))


def linear_control(state_i: AgentState, offset_i, neighbors: Sequence[Neighbor], k1: float, k2: float,
                   v_min: float = 0.0) -> ControlInput:
    """Weighted linear consensus law (the ``tau = 0`` member of the family)."""
    hat_p_i = state_i.position - np.asarray(offset_i, dtype=float)
    vel_i = state_i.velocity
    total = sum(nb.weight for nb in neighbors)
    if not total > 0:
        raise IsolationError("agent has no weighted neighbors")
    acc = sum(nb.weight * (nb.acceleration - k1 * (hat_p_i - nb.hat_position) - k2 * (vel_i - nb.velocity))
              for nb in neighbors)
    return ControlInput.from_array(input_matrix_inverse(state_i, v_min) @ (acc / total))


def consensus_command(state_i: AgentState, offset_i, neighbors: Sequence[Neighbor],
                      params: ControllerParams) -> np.ndarray:
    """Weighted mean of the neighbor brackets, i.e. the commanded ``M_i u_i``."""
    total = 0.0
    acc = np.zeros(2)
    hat_p_i = state_i.position - np.asarray(offset_i, dtype=float)
    vel_i = state_i.velocity
    for nb in neighbors:
        if nb.weight <= 0:
            continue
        total += nb.weight
        acc += nb.weight * bracket(hat_p_i, vel_i, nb, params)
    if not total > 0:
        raise IsolationError("agent has no weighted neighbors")
    return acc / total


def consensus_control(state_i: AgentState, offset_i, neighbors: Sequence[Neighbor], params: ControllerParams,
                      v_min: float = 0.0) -> ControlInput:
    """Fractional-power consensus formation law for one UAV.

    Raises :class:`IsolationError` when the neighbor weights sum to zero; the
    caller decides the fallback.
    """
    cmd = consensus_command(state_i, offset_i, neighbors, params)
    return ControlInput.from_array(input_matrix_inverse(state_i, v_min) @ cmd)
