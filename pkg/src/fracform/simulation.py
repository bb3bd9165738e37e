"""Closed-loop multi-UAV simulation, run summaries, sweeps and CSV output."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from fracform.analysis import formation_error
from fracform.config import ScenarioConfig
from fracform.controller import Neighbor, consensus_command
from fracform.errors import DisconnectionError, FormationError, IntegrationError, IsolationError
from fracform.graph import build_adjacency, laplacian, spectral_summary
from fracform.observer import ObserverState, observer_step, transform
from fracform.vehicle import AgentState, ControlInput, ZERO_INPUT, acceleration, input_matrix_inverse, step

log = logging.getLogger(__name__)


@dataclass
class TrajectoryLog:
    """Per-step record of a run. Row ``k`` holds the state at ``t_k`` and the input applied on ``[t_k, t_k+1)``."""

    times: np.ndarray            # (N,)
    states: np.ndarray           # (N, n, 4)  x, y, v, phi
    inputs: np.ndarray           # (N, n, 2)  accel, turn rate
    target: np.ndarray           # (N, 4)
    lambda2: np.ndarray          # (N,)
    ep_norm: np.ndarray          # (N,)
    ep_agent: np.ndarray         # (N, n)
    v_hat: np.ndarray | None     # (N, n) when the observer is on
    isolation_events: list[tuple[int, int]] = field(default_factory=list)

    @property
    def n_uavs(self) -> int:
        return self.states.shape[1]

    def __len__(self):
        return len(self.times)


@dataclass(frozen=True)
class RunSummary:
    tau: float
    converged: bool
    convergence_time: float | None
    min_lambda2: float
    connectivity_maintained: bool
    control_effort: tuple[float, ...]
    final_separations: tuple[float, ...]
    final_error: float
    isolation_count: int = 0
    error: str | None = None

    @property
    def total_effort(self) -> float:
        return float(sum(self.control_effort))

    @classmethod
    def failed(cls, tau: float, message: str) -> "RunSummary":
        return cls(tau, False, None, float("nan"), False, (), (), float("nan"), 0, message)

    def as_dict(self) -> dict:
        return {
            "tau": self.tau,
            "converged": self.converged,
            "convergence_time": self.convergence_time,
            "min_lambda2": self.min_lambda2,
            "connectivity_maintained": self.connectivity_maintained,
            "control_effort": list(self.control_effort),
            "total_effort": self.total_effort if self.control_effort else None,
            "final_separations": list(self.final_separations),
            "final_error": self.final_error,
            "isolation_count": self.isolation_count,
            "error": self.error,
        }


def _target_accel(cfg: ScenarioConfig, state: AgentState, t: float) -> np.ndarray:
    return acceleration(state, cfg.target_profile.input_at(t, state))


def run_simulation(cfg: ScenarioConfig) -> tuple[TrajectoryLog, RunSummary]:
    """Simulate the closed loop for ``cfg.horizon`` seconds.

    Each step builds the graph over all UAVs plus the target, evaluates every
    UAV's consensus law against the previous step's published accelerations,
    and advances all agents with RK4. UAVs without neighbors coast for that
    step. Raises :class:`DisconnectionError` when every UAV is isolated and
    :class:`IntegrationError` on a non-finite state.
    """
    n = cfg.n_uavs
    N = cfg.n_steps
    dt = cfg.dt
    params = cfg.controller
    offsets = cfg.formation.offsets
    v_min = cfg.bounds.v_min

    times = np.arange(N) * dt
    states_log = np.empty((N, n, 4))
    inputs_log = np.empty((N, n, 2))
    target_log = np.empty((N, 4))
    lam2 = np.empty(N)
    ep_norm = np.empty(N)
    ep_agent = np.empty((N, n))
    v_hat_log = np.empty((N, n)) if cfg.observer.enabled else None
    isolation: list[tuple[int, int]] = []

    uavs = list(cfg.uav_initial_states)
    target = cfg.target_profile.initial
    published = np.zeros((n, 2))
    observers: list[ObserverState] = []
    if cfg.observer.enabled:
        v0 = cfg.observer.initial_speed
        v0 = target.speed if v0 is None else v0
        observers = [ObserverState(transform(s, ZERO_INPUT)[0], v0) for s in uavs]

    for k in range(N):
        t = times[k]
        positions = np.array([s.position for s in uavs] + [target.position])
        adj = build_adjacency(positions, cfg.comm)
        lam2[k] = spectral_summary(laplacian(adj)).fiedler_value

        err = formation_error(uavs, target, cfg.formation)
        ep_norm[k] = err.norm
        ep_agent[k] = err.per_agent_position
        states_log[k] = [s.as_array() for s in uavs]
        target_log[k] = target.as_array()
        if v_hat_log is not None:
            v_hat_log[k] = [o.v_hat for o in observers]

        # snapshot of what every node publishes at t_k
        hat = np.vstack([positions[:n] - offsets, positions[n]])
        vel = np.array([s.velocity for s in uavs] + [target.velocity])
        acc = np.vstack([published, _target_accel(cfg, target, t)])

        inputs: list[ControlInput] = []
        isolated = 0
        for i, s in enumerate(uavs):
            nbrs = [Neighbor(adj[i, j], hat[j], vel[j], acc[j]) for j in range(n + 1) if j != i and adj[i, j] > 0]
            try:
                cmd = consensus_command(s, offsets[i], nbrs, params)
            except IsolationError:
                isolated += 1
                isolation.append((k, i))
                log.info("t=%.3f: UAV %d isolated, coasting", t, i + 1)
                inputs.append(ZERO_INPUT)
                continue
            inputs.append(ControlInput.from_array(input_matrix_inverse(s, v_min) @ cmd))
        if isolated == n:
            raise DisconnectionError(f"all UAVs isolated at step {k} (t={t:.3f}); aborting")
        inputs_log[k] = [u.as_array() for u in inputs]

        if k == N - 1:
            break

        published = np.array([acceleration(s, u) for s, u in zip(uavs, inputs)])
        try:
            new_uavs = [step(s, u, dt, cfg.bounds) for s, u in zip(uavs, inputs)]
            new_target = cfg.target_profile.advance(target, t, dt)
        except IntegrationError as exc:
            raise IntegrationError(f"step {k} (t={t:.3f}): {exc}") from None
        if cfg.observer.enabled:
            # the speed clamp may cut the commanded accel; feed the observer what was realised
            realised = [ControlInput((s1.speed - s.speed) / dt, u.turn_rate) for s, s1, u in zip(uavs, new_uavs, inputs)]
            observers = [
                observer_step(o, transform(s, u), u, dt, measured_next=transform(s1, u),
                              pos_power=cfg.observer.pos_power, vel_power=cfg.observer.vel_power)
                for o, s, s1, u in zip(observers, uavs, new_uavs, realised)
            ]
        uavs, target = new_uavs, new_target

    traj = TrajectoryLog(times, states_log, inputs_log, target_log, lam2, ep_norm, ep_agent, v_hat_log, isolation)
    return traj, summarize(traj, cfg)


def summarize(traj: TrajectoryLog, cfg: ScenarioConfig) -> RunSummary:
    dt = cfg.dt
    below = np.all(traj.ep_agent < cfg.convergence_threshold, axis=1)
    connected = bool(np.all(traj.lambda2 > cfg.connectivity_tol))
    converged = bool(below[-1]) and connected
    conv_time = None
    if converged:
        # start of the final run of steps with every agent inside the threshold
        above = np.flatnonzero(~below)
        first = 0 if above.size == 0 else int(above[-1]) + 1
        conv_time = float(traj.times[first])
    elif below[-1] and not connected:
        log.warning("connectivity dropped to %.3e; convergence claim suppressed", float(np.min(traj.lambda2)))

    applied = traj.inputs[:-1]
    effort = tuple(float(v) for v in np.sum(np.abs(applied).sum(axis=2), axis=0) * dt)
    final_pos = traj.states[-1, :, :2]
    seps = tuple(float(v) for v in np.hypot(*(final_pos - traj.target[-1, :2]).T))
    return RunSummary(
        tau=cfg.controller.tau,
        converged=converged,
        convergence_time=conv_time,
        min_lambda2=float(np.min(traj.lambda2)),
        connectivity_maintained=connected,
        control_effort=effort,
        final_separations=seps,
        final_error=float(traj.ep_norm[-1]),
        isolation_count=len(traj.isolation_events),
    )


def sweep_tau(cfg: ScenarioConfig, taus) -> list[RunSummary]:
    """Independent runs differing only in ``tau``; a failing run yields a summary carrying its error."""
    out = []
    for tau in taus:
        try:
            _, summary = run_simulation(cfg.with_tau(float(tau)))
        except (FormationError, ValueError) as exc:
            log.error("tau=%g failed: %s", tau, exc)
            summary = RunSummary.failed(float(tau), str(exc))
        out.append(summary)
    return out


# -- CSV ---------------------------------------------------------------------

AGENT_COLUMNS = ("x", "y", "v", "phi", "accel", "turnrate", "ep_norm")


def format_value(v: float) -> str:
    """Shortest round-trip representation, capped at 9 significant digits."""
    v = float(v)
    if v == 0.0:
        return "0"
    s = repr(v)
    digits = len(s.split("e")[0].replace("-", "").replace(".", "").lstrip("0"))
    if digits > 9:
        s = repr(float(f"{v:.9g}"))
    if s.endswith(".0"):
        s = s[:-2]
    return s


def csv_header(n_uavs: int, observer: bool) -> list[str]:
    cols = ["t"]
    for i in range(1, n_uavs + 1):
        cols += [f"{c}{i}" for c in AGENT_COLUMNS]
        if observer:
            cols.append(f"vhat{i}")
    cols.append("lambda2")
    return cols


def csv_rows(traj: TrajectoryLog):
    n = traj.n_uavs
    for k in range(len(traj)):
        row = [traj.times[k]]
        for i in range(n):
            row += list(traj.states[k, i]) + list(traj.inputs[k, i]) + [traj.ep_agent[k, i]]
            if traj.v_hat is not None:
                row.append(traj.v_hat[k, i])
        row.append(traj.lambda2[k])
        yield [format_value(v) for v in row]


def emit_csv(traj: TrajectoryLog, path) -> Path:
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(csv_header(traj.n_uavs, traj.v_hat is not None))
            writer.writerows(csv_rows(traj))
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write CSV: {exc.strerror}", str(path)) from None
    return path


def read_csv(path) -> tuple[list[str], np.ndarray]:
    """Header and data matrix of a CSV written by :func:`emit_csv`."""
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array([[float(v) for v in r] for r in rows[1:]])
