"""Closed-form special solutions, residual bounds and stability diagnostics.

These are the checkable pieces behind the convergence argument for the
fractional-power law: the one-dimensional special solution with finite
touchdown, the residual functions and their bounds, the odd-power
inequalities, the target/UAV split of the Laplacian, and the Lyapunov
candidate of the pairwise double integrator.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from fracform.controller import ControllerParams, FormationSpec, spow
from fracform.errors import DisconnectionError, DomainError, FormationError
from fracform.graph import jacobi_eigh
from fracform.vehicle import AgentState


# -- special solution ---------------------------------------------------------

def special_initial_velocity(x1_0: float, tau: float) -> float:
    """Initial velocity ``-x1_0**(1 + tau)`` that puts the system on the special solution."""
    if not x1_0 > 0:
        raise DomainError(f"x1_0 must be positive, got {x1_0}")
    return -(x1_0 ** (1.0 + tau))


def gain_relation_k2(tau: float, k1: float) -> float:
    """``k2`` satisfying the gain relation, with ``(-1)**(-(1+2tau)/(1+tau))`` taken as ``-1``."""
    if not -0.5 < tau <= 0:
        raise DomainError(f"tau must lie in (-1/2, 0], got {tau}")
    ratio = Fraction((1.0 + 2.0 * tau) / (1.0 + tau)).limit_denominator(1000)
    if ratio.numerator % 2 == 0 or ratio.denominator % 2 == 0:
        warnings.warn(f"exponent {ratio} is not a ratio of odd integers; using (-1)**x = -1 anyway",
                      stacklevel=2)
    return 1.0 + tau + k1


def touchdown_time(x1_0: float, tau: float) -> float:
    """Time at which both states of the special solution reach zero."""
    if not tau < 0:
        raise DomainError(f"finite touchdown needs tau < 0, got {tau}")
    if not x1_0 > 0:
        raise DomainError(f"x1_0 must be positive, got {x1_0}")
    return -1.0 / (tau * x1_0 ** tau)


@dataclass(frozen=True)
class SpecialSolutionParams:
    x1_0: float
    tau: float
    k1: float
    k2: float

    def __post_init__(self):
        if not -0.5 < self.tau < 0:
            raise DomainError(f"tau must lie in (-1/2, 0), got {self.tau}")
        if not self.x1_0 > 0:
            raise DomainError(f"x1_0 must be positive, got {self.x1_0}")
        if abs((1.0 + self.tau) - (self.k2 - self.k1)) > 1e-9:
            raise DomainError(f"gains ({self.k1}, {self.k2}) violate 1 + tau = k2 - k1 for tau={self.tau}")

    @classmethod
    def from_k1(cls, x1_0: float, tau: float, k1: float) -> "SpecialSolutionParams":
        return cls(x1_0, tau, k1, gain_relation_k2(tau, k1))

    @property
    def x2_0(self) -> float:
        return special_initial_velocity(self.x1_0, self.tau)

    @property
    def touchdown(self) -> float:
        return touchdown_time(self.x1_0, self.tau)


def special_solution(p: SpecialSolutionParams, t: float) -> tuple[float, float]:
    """Closed-form ``(x1, x2)`` on ``[0, touchdown]``."""
    td = p.touchdown
    if t < 0 or t > td * (1 + 1e-12):
        raise DomainError(f"t={t} outside [0, {td}]")
    base = max(p.x1_0 ** (-p.tau) + p.tau * t, 0.0)
    if base == 0.0:
        return 0.0, 0.0
    return base ** (-1.0 / p.tau), -(base ** (-(1.0 + p.tau) / p.tau))


def _batch_powers(tau):
    tau = np.asarray(tau, dtype=float)
    if not np.all(tau > -0.5):
        raise DomainError(f"tau must exceed -1/2, got {tau}")
    return 1.0 + 2.0 * tau, (1.0 + 2.0 * tau) / (1.0 + tau)


def double_integrator_rhs(x, k1, k2, tau) -> np.ndarray:
    """``x1' = x2, x2' = -k1 spow(x1, a1) - k2 spow(x2, a2)``; ``x`` stacks ``(x1, x2)``.

    ``x`` may be a batch of shape ``(B, 2d)``; gains and ``tau`` are then
    scalars or length-``B`` arrays, one per trajectory.
    """
    x = np.asarray(x, dtype=float)
    a1, a2 = _batch_powers(tau)
    k1, k2 = np.asarray(k1, dtype=float), np.asarray(k2, dtype=float)
    if x.ndim == 2:
        k1, k2, a1, a2 = (np.reshape(v, (-1, 1)) if v.ndim else v for v in (k1, k2, a1, a2))
    half = x.shape[-1] // 2
    x1, x2 = x[..., :half], x[..., half:]
    acc = -k1 * np.sign(x1) * np.abs(x1) ** a1 - k2 * np.sign(x2) * np.abs(x2) ** a2
    return np.concatenate([x2, acc], axis=-1)


def integrate_double_integrator(x0, k1, k2, tau, horizon: float, dt: float):
    """RK4 trajectory of the signed-power double integrator; returns ``(t, X)``.

    With a batch ``x0`` of shape ``(B, 2d)`` the result ``X`` has shape
    ``(N, B, 2d)``.
    """
    n = int(round(horizon / dt))
    x = np.asarray(x0, dtype=float).copy()
    out = np.empty((n + 1,) + x.shape)
    out[0] = x
    f = lambda s: double_integrator_rhs(s, k1, k2, tau)
    for k in range(n):
        k_1 = f(x)
        k_2 = f(x + 0.5 * dt * k_1)
        k_3 = f(x + 0.5 * dt * k_2)
        k_4 = f(x + dt * k_3)
        x = x + dt / 6.0 * (k_1 + 2 * k_2 + 2 * k_3 + k_4)
        out[k + 1] = x
    return np.arange(n + 1) * dt, out


@dataclass(frozen=True)
class OracleComparison:
    max_deviation: float
    final_state: tuple[float, float]
    touchdown: float


def compare_special_solution(tau: float, x1_0: float, k1: float | None = None,
                             t_end: float | None = None, dt: float = 1e-3) -> OracleComparison:
    """Integrate from the special initial condition and compare with the closed form.

    ``k1`` defaults to ``-0.3`` (the worked-example gain); ``k2`` follows from
    the gain relation. Deviation is measured on ``[0, t_end]`` with ``t_end``
    defaulting to 96% of touchdown, and the final state is taken at touchdown.
    """
    k1 = -0.3 if k1 is None else k1
    p = SpecialSolutionParams.from_k1(x1_0, tau, k1)
    td = p.touchdown
    t_end = 0.96 * td if t_end is None else t_end
    t, xs = integrate_double_integrator([p.x1_0, p.x2_0], p.k1, p.k2, tau, td, dt)
    mask = t <= t_end + 1e-12
    exact = np.array([special_solution(p, tt) for tt in t[mask]])
    dev = float(np.max(np.abs(xs[mask] - exact)))
    return OracleComparison(dev, (float(xs[-1, 0]), float(xs[-1, 1])), td)


# -- residual functions -------------------------------------------------------

def residual_f(pi, pj, pt, alpha: float) -> float:
    """Normalised gap between the signed power of a difference and the difference of signed powers."""
    pi, pj, pt = (np.atleast_1d(np.asarray(v, dtype=float)) for v in (pi, pj, pt))
    a = spow(pi - pt, alpha)
    b = spow(pj - pt, alpha)
    den = float(np.linalg.norm(a + b))
    if den == 0.0:
        raise DomainError("degenerate configuration: denominator vanishes")
    return float(np.linalg.norm(spow(pi - pj, alpha) - a + b)) / den


def residual_fbar(r: float, alpha: float) -> float:
    """One-dimensional residual as a function of the distance ratio ``r``."""
    if not r > 0:
        raise DomainError(f"r must be positive, got {r}")
    if not 0 < alpha < 1:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    ra = r ** alpha
    if r < 1:
        return ((1 - r) ** alpha - (1 - ra)) / (1 + ra)
    if r > 1:
        return ((r - 1) ** alpha - (ra - 1)) / (1 + ra)
    return 0.0


def fbar_bound(alpha: float) -> float:
    return 2.0 ** (1.0 - alpha) - 1.0


def alpha_for_epsilon(epsilon: float) -> float:
    """Exponent that keeps the residual below ``epsilon``: ``1 - log2(1 + epsilon)``."""
    if not epsilon > 0:
        raise DomainError(f"epsilon must be positive, got {epsilon}")
    return 1.0 - math.log2(epsilon + 1.0)


# -- odd-power inequalities ---------------------------------------------------

def _odd_ratio(m) -> Fraction:
    frac = Fraction(m).limit_denominator(1000) if not isinstance(m, Fraction) else m
    if abs(float(frac) - float(m)) > 1e-12:
        raise DomainError(f"m={m} is not a small rational")
    if frac.numerator % 2 == 0 or frac.denominator % 2 == 0:
        raise DomainError(f"m={frac} is not an odd integer or a ratio of odd integers")
    if not frac > 1:
        raise DomainError(f"m must exceed 1, got {frac}")
    return frac


def lemma1_holds(a: float, b: float, m, rtol: float = 1e-12) -> bool:
    """Check ``|a+b|^m <= 2^(m-1)|a^m+b^m|`` and ``|a-b|^m <= 2^(m-1)|a^m-b^m|``.

    Powers of signed reals are odd signed powers. A relative slack ``rtol``
    absorbs rounding at equality cases such as ``a == b``.
    """
    mf = float(_odd_ratio(m))
    c = 2.0 ** (mf - 1.0)

    def le(lhs, rhs):
        return lhs <= rhs + rtol * max(abs(lhs), abs(rhs), 1e-300)

    am, bm = float(spow(a, mf)), float(spow(b, mf))
    return le(abs(a + b) ** mf, c * abs(am + bm)) and le(abs(a - b) ** mf, c * abs(am - bm))


# -- Laplacian split and residual norm ---------------------------------------

@dataclass(frozen=True)
class SplitLaplacian:
    ln_plus_bn: np.ndarray
    b_n: np.ndarray
    target_degree: float

    def reassemble(self) -> np.ndarray:
        n = len(self.b_n)
        out = np.empty((n + 1, n + 1))
        out[:n, :n] = self.ln_plus_bn
        out[:n, n] = -self.b_n
        out[n, :n] = -self.b_n
        out[n, n] = self.target_degree
        return out


def split_laplacian(L, tol: float = 1e-12) -> SplitLaplacian:
    """Separate the UAV block ``L_n + B_n`` and target coupling ``b_n`` (target is the last node)."""
    lap = np.asarray(L, dtype=float)
    if lap.ndim != 2 or lap.shape[0] != lap.shape[1] or lap.shape[0] < 2:
        raise DomainError(f"need a square matrix of order >= 2, got {lap.shape}")
    n = lap.shape[0] - 1
    split = SplitLaplacian(lap[:n, :n].copy(), -lap[:n, n].copy(), float(lap[n, n]))
    scale = max(1.0, float(np.max(np.abs(lap))))
    if np.max(np.abs(split.reassemble() - lap)) > tol * scale:
        raise FormationError("Laplacian is not symmetric; split does not reassemble")
    if np.max(np.abs(split.ln_plus_bn @ np.ones(n) - split.b_n)) > tol * scale * n:
        raise FormationError("(L_n + B_n) 1 != b_n; input is not a Laplacian")
    return split


@dataclass(frozen=True)
class ResidualNormReport:
    inverse_norm: float
    min_eigenvalue: float
    complete_unit: bool
    bound_holds: bool


def residual_norm_bound_check(L, tol: float = 1e-9) -> ResidualNormReport:
    """Spectral norm of ``(L_n + B_n)^-1`` and whether it respects the unit bound.

    The unit bound is asserted only for the complete unit-weight graph; for
    other connected graphs the computed norm is reported and ``bound_holds``
    records whether it happens to be at most 1.
    """
    lap = np.asarray(L, dtype=float)
    split = split_laplacian(lap)
    w, _ = jacobi_eigh(split.ln_plus_bn)
    lam_min = float(w[0])
    if lam_min <= tol:
        raise DisconnectionError(f"L_n + B_n is singular (smallest eigenvalue {lam_min:.3e})")
    # symmetric positive definite: ||M^-1||_2 = 1 / lambda_min
    inv_norm = 1.0 / lam_min
    m = lap.shape[0]
    off = lap[~np.eye(m, dtype=bool)]
    complete = bool(np.all(np.abs(off + 1.0) <= tol))
    return ResidualNormReport(inv_norm, lam_min, complete, inv_norm <= 1.0 + tol)


# -- formation error and Lyapunov candidate -----------------------------------

@dataclass(frozen=True)
class ErrorVector:
    e_p: np.ndarray
    e_v: np.ndarray

    @property
    def per_agent_position(self) -> np.ndarray:
        return np.hypot(self.e_p[0::2], self.e_p[1::2])

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.e_p))


def formation_error(states, target: AgentState, formation: FormationSpec) -> ErrorVector:
    """Stacked slot errors ``(p_i - P_i) - p_t`` and velocity errors ``v_i - v_t``."""
    states = list(states)
    if len(states) != len(formation):
        raise DomainError(f"{len(states)} states but {len(formation)} formation slots")
    pos = np.array([s.position for s in states]) - formation.offsets - target.position
    vel = np.array([s.velocity for s in states]) - target.velocity
    return ErrorVector(pos.reshape(-1), vel.reshape(-1))


def lyapunov_Q(x1, x2, params: ControllerParams) -> np.ndarray:
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    a1 = params.alpha1
    return 0.5 * x2 * x2 + (params.k1 / (a1 + 1.0)) * np.abs(x1) ** (a1 + 1.0)


def lyapunov_V(x1, x2, params: ControllerParams) -> float:
    """``V = Q.Q / 2`` with ``Q = x2^2/2 + k1 |x1|^(a1+1) / (a1+1)`` elementwise."""
    if not params.alpha1 > 0:
        raise DomainError("alpha1 must be positive")
    q = lyapunov_Q(x1, x2, params)
    return 0.5 * float(q @ q)
