"""Scenario definition and the ``.cfg`` file format.

The format is INI-style (``[section]`` headers, ``key = value`` lines,
``#``/``;`` comments), parsed with :mod:`configparser`. Angles are radians,
lengths metres, times seconds. Example::

    [scenario]
    format = 1
    dt = 0.05
    horizon = 100
    connectivity_tol = 1e-6
    target_input_mode = speed-heading

    [comm]
    range = 300
    sigma = 10

    [controller]
    k1 = 1
    k2 = 1.6
    tau = -0.1

    [bounds]
    v_min = 5
    v_max = 25

    [formation]
    delta = 100
    psi = regular            # or a comma-separated list, one angle per UAV

    [target]
    x = 0
    y = 0
    speed = 10
    heading = 0
    turn_amplitude = 0.5     # turn rate 0.5 sin(2 pi t / 50); 0 flies straight

    [observer]
    enabled = off
    # initial_speed = 0      # default: the target's initial speed

    [uav.1]
    x = 18.2249
    y = 71.4778
    speed = 8
    heading = 0

UAV sections are ``[uav.1] .. [uav.n]`` and must be numbered consecutively.
"""

from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

from fracform.controller import ControllerParams, FormationSpec
from fracform.errors import ConfigError, DomainError
from fracform.graph import DEFAULT_CONNECTIVITY_TOL, CommModel
from fracform.observer import POS_POWER, VEL_POWER
from fracform.vehicle import DEFAULT_DT, TARGET_TURN_AMPLITUDE, AgentState, TargetProfile, VelocityBounds

FORMAT_VERSION = 1
DEFAULT_HORIZON = 100.0
DEFAULT_CONVERGENCE_THRESHOLD = 1.0


@dataclass(frozen=True)
class ObserverConfig:
    enabled: bool = False
    initial_speed: float | None = None  # None: start from the target's initial speed
    pos_power: float = POS_POWER
    vel_power: float = VEL_POWER


@dataclass(frozen=True)
class ScenarioConfig:
    uav_initial_states: tuple[AgentState, ...]
    target_profile: TargetProfile
    formation: FormationSpec
    comm: CommModel = CommModel()
    controller: ControllerParams = ControllerParams()
    bounds: VelocityBounds = VelocityBounds()
    dt: float = DEFAULT_DT
    horizon: float = DEFAULT_HORIZON
    observer: ObserverConfig = field(default_factory=ObserverConfig)
    connectivity_tol: float = DEFAULT_CONNECTIVITY_TOL
    convergence_threshold: float = DEFAULT_CONVERGENCE_THRESHOLD
    name: str = "scenario"

    def __post_init__(self):
        object.__setattr__(self, "uav_initial_states", tuple(self.uav_initial_states))
        if not self.dt > 0:
            raise ConfigError("scenario.dt: must be positive")
        if not self.horizon >= self.dt:
            raise ConfigError("scenario.horizon: must be at least dt")
        if not self.uav_initial_states:
            raise ConfigError("uav: at least one UAV section is required")
        if len(self.formation.psi) != len(self.uav_initial_states):
            raise ConfigError(f"formation.psi: expected {len(self.uav_initial_states)} angles, "
                              f"got {len(self.formation.psi)}")
        if not self.connectivity_tol > 0:
            raise ConfigError("scenario.connectivity_tol: must be positive")
        if not self.convergence_threshold > 0:
            raise ConfigError("scenario.convergence_threshold: must be positive")
        for i, s in enumerate(self.uav_initial_states, start=1):
            if not self.bounds.v_min <= s.speed <= self.bounds.v_max:
                raise ConfigError(f"uav.{i}.speed: {s.speed} outside [{self.bounds.v_min}, {self.bounds.v_max}]")

    @property
    def n_uavs(self) -> int:
        return len(self.uav_initial_states)

    @property
    def n_steps(self) -> int:
        """Number of logged rows, ``floor(horizon / dt) + 1``."""
        return int(math.floor(self.horizon / self.dt + 1e-9)) + 1

    def with_tau(self, tau: float) -> "ScenarioConfig":
        c = self.controller
        return replace(self, controller=ControllerParams(c.k1, c.k2, tau))

    def with_observer(self, enabled: bool) -> "ScenarioConfig":
        return replace(self, observer=replace(self.observer, enabled=enabled))


_BOOL = {"on": True, "true": True, "yes": True, "1": True, "off": False, "false": False, "no": False, "0": False}


class _Reader:
    def __init__(self, parser: configparser.ConfigParser):
        self.p = parser

    def num(self, section, key, default=None) -> float:
        if not self.p.has_option(section, key):
            if default is None:
                raise ConfigError(f"{section}.{key}: required field is missing")
            return default
        raw = self.p.get(section, key)
        try:
            value = float(raw)
        except ValueError:
            raise ConfigError(f"{section}.{key}: expected a number, got {raw!r}") from None
        if not math.isfinite(value):
            raise ConfigError(f"{section}.{key}: must be finite")
        return value

    def flag(self, section, key, default: bool) -> bool:
        if not self.p.has_option(section, key):
            return default
        raw = self.p.get(section, key).strip().lower()
        if raw not in _BOOL:
            raise ConfigError(f"{section}.{key}: expected on/off, got {raw!r}")
        return _BOOL[raw]

    def text(self, section, key, default: str) -> str:
        return self.p.get(section, key).strip() if self.p.has_option(section, key) else default

    def state(self, section) -> AgentState:
        if not self.p.has_section(section):
            raise ConfigError(f"{section}: section is missing")
        return AgentState(self.num(section, "x"), self.num(section, "y"),
                          self.num(section, "speed"), self.num(section, "heading"))


def parse_config(text: str, source: str = "<string>") -> ScenarioConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=source)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError(f"{source}:{exc.lineno}: expected a [section] header before {exc.line.strip()!r}") from None
    except configparser.ParsingError as exc:
        lineno, line = exc.errors[0]
        raise ConfigError(f"{source}:{lineno}: cannot parse {line.strip()!r}") from None
    except configparser.Error as exc:
        lineno = getattr(exc, "lineno", None)
        where = f"{source}:{lineno}" if lineno else source
        raise ConfigError(f"{where}: {exc.message.splitlines()[0]}") from None
    r = _Reader(parser)

    version = r.num("scenario", "format", float(FORMAT_VERSION))
    if version != FORMAT_VERSION:
        raise ConfigError(f"scenario.format: unsupported version {version:g}")

    uav_sections = sorted((s for s in parser.sections() if s.startswith("uav")),
                          key=lambda s: int(re.sub(r"\D", "", s) or 0))
    for k, s in enumerate(uav_sections, start=1):
        if s != f"uav.{k}":
            raise ConfigError(f"{s}: UAV sections must be named uav.1 .. uav.n consecutively")
    known = {"scenario", "comm", "controller", "bounds", "formation", "target", "observer", *uav_sections}
    for s in parser.sections():
        if s not in known:
            raise ConfigError(f"{s}: unknown section")

    try:
        uavs = tuple(r.state(s) for s in uav_sections)
        n = len(uavs)
        if n == 0:
            raise ConfigError("uav: at least one [uav.1] section is required")

        psi_raw = r.text("formation", "psi", "regular")
        delta = r.num("formation", "delta", 100.0)
        if psi_raw.lower() == "regular":
            formation = FormationSpec.regular(delta, n)
        else:
            try:
                psi = tuple(float(v) for v in psi_raw.split(","))
            except ValueError:
                raise ConfigError(f"formation.psi: expected 'regular' or a list of numbers, got {psi_raw!r}") from None
            formation = FormationSpec(delta, psi)

        target = AgentState(r.num("target", "x", 0.0), r.num("target", "y", 0.0),
                            r.num("target", "speed", 10.0), r.num("target", "heading", 0.0))
        mode = r.text("scenario", "target_input_mode", "speed-heading")
        if mode not in ("speed-heading", "cartesian"):
            raise ConfigError(f"scenario.target_input_mode: expected speed-heading or cartesian, got {mode!r}")

        return ScenarioConfig(
            uav_initial_states=uavs,
            target_profile=TargetProfile(target, mode, r.num("target", "turn_amplitude", TARGET_TURN_AMPLITUDE)),
            formation=formation,
            comm=CommModel(r.num("comm", "range", 300.0), r.num("comm", "sigma", 10.0)),
            controller=ControllerParams(r.num("controller", "k1", 1.0), r.num("controller", "k2", 1.6),
                                        r.num("controller", "tau", 0.0)),
            bounds=VelocityBounds(r.num("bounds", "v_min", 5.0), r.num("bounds", "v_max", 25.0)),
            dt=r.num("scenario", "dt", DEFAULT_DT),
            horizon=r.num("scenario", "horizon", DEFAULT_HORIZON),
            observer=ObserverConfig(r.flag("observer", "enabled", False),
                                    (r.num("observer", "initial_speed")
                                     if parser.has_option("observer", "initial_speed") else None),
                                    r.num("observer", "pos_power", POS_POWER),
                                    r.num("observer", "vel_power", VEL_POWER)),
            connectivity_tol=r.num("scenario", "connectivity_tol", DEFAULT_CONNECTIVITY_TOL),
            convergence_threshold=r.num("scenario", "convergence_threshold", DEFAULT_CONVERGENCE_THRESHOLD),
            name=r.text("scenario", "name", Path(source).stem),
        )
    except DomainError as exc:
        raise ConfigError(f"{source}: {exc}") from None


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc.strerror}") from None
    return parse_config(text, source=str(path))


BUNDLED = ("tableA.cfg", "tableB.cfg", "tableA_regular.cfg", "tableB_regular.cfg")


def bundled_config_path(name: str) -> Path:
    """Filesystem path of a config shipped with the package."""
    ref = resources.files("fracform") / "configs" / name
    if not ref.is_file():
        raise ConfigError(f"no bundled config named {name!r}; choose from {', '.join(BUNDLED)}")
    return Path(str(ref))


def resolve_config(path_or_name) -> ScenarioConfig:
    """Load ``path_or_name`` from disk, falling back to a bundled config of that name."""
    p = Path(path_or_name)
    if p.exists() or p.name not in BUNDLED:
        return load_config(p)
    return load_config(bundled_config_path(p.name))
