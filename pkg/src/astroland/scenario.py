"""Scenario configuration, the closed-loop simulation loop and log export."""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from . import controller as ctl
from . import guidance as gd
from .gravity import GravityModel
from .rigid_body import (
    MOMENT_CONSISTENT,
    MOMENT_PAPER_LITERAL,
    AsteroidModel,
    CollisionError,
    DumbbellParams,
    NonFiniteStateError,
    SpacecraftState,
    WrenchInput,
    gravity_wrench,
    step_dumbbell,
    step_until_contact,
)
from .shape_model import MeshError, TriangleMesh, data_path, load_mesh, surface_radius_along
from .so3 import axis_angle
from .units import UnitError, parse_quantity, period_to_rate

SCHEMA_VERSION = 1
BUILTIN_PREFIX = "builtin:"


class ConfigError(ValueError):
    """Schema or unit violation; ``path`` is the dotted key."""

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


class Termination(str, enum.Enum):
    COMPLETED = "completed"
    COLLISION = "collision"
    COMMAND_BELOW_SURFACE = "command_below_surface"
    NUMERICAL_ABORT = "numerical_abort"


@dataclass(frozen=True)
class ScenarioConfig:
    mesh_path: Path
    mesh_units: Optional[str] = None
    density: float = 1900.0
    G: float = 6.67430e-11
    gravity_enabled: bool = True
    spin_rate: float = 0.0
    spin_axis: tuple = (0.0, 0.0, 1.0)
    m1: float = 500.0
    m2: float = 500.0
    length: float = 3.0
    sphere_radius: float = 0.5
    x0: np.ndarray = field(default_factory=lambda: np.zeros(3))
    v0: np.ndarray = field(default_factory=lambda: np.zeros(3))
    R0: np.ndarray = field(default_factory=lambda: np.eye(3))
    Omega0: np.ndarray = field(default_factory=lambda: np.zeros(3))
    guidance: gd.GuidanceConfig = field(default_factory=gd.GuidanceConfig)
    gains: Optional[ctl.ControlGains] = None
    zeta: float = ctl.DEFAULT_ZETA
    wn_translation: float = ctl.DEFAULT_WN_TRANSLATION
    wn_attitude: float = ctl.DEFAULT_WN_ATTITUDE
    controller_enabled: bool = True
    moment_mode: str = MOMENT_CONSISTENT
    dt: float = 1.0
    t_final: float = 7200.0
    control_substeps: Optional[int] = None
    output_csv: Optional[Path] = None
    output_json: Optional[Path] = None
    seed: Optional[int] = None

    def params(self):
        return DumbbellParams.symmetric_pair(self.m1, self.m2, self.length, self.sphere_radius)


# ---------------------------------------------------------------------------
# config loading

_MISSING = object()


class _Section:
    def __init__(self, data, path):
        if data is None:
            data = {}
        if not isinstance(data, dict):
            raise ConfigError(path, "expected a mapping")
        self.data = data
        self.path = path
        self.used = set()

    def _key(self, key):
        return f"{self.path}.{key}" if self.path else key

    def raw(self, key, default=_MISSING):
        self.used.add(key)
        if key not in self.data or self.data[key] is None:
            if default is _MISSING:
                raise ConfigError(self._key(key), "missing required field")
            return default
        return self.data[key]

    def section(self, key, required=False):
        if required:
            return _Section(self.raw(key), self._key(key))
        return _Section(self.raw(key, {}), self._key(key))

    def quantity(self, key, kind, default=_MISSING, unit=None, positive=False):
        value = self.raw(key, default)
        if value is default and default is not _MISSING:
            return default
        try:
            q = parse_quantity(value, kind, unit)
        except UnitError as exc:
            raise ConfigError(self._key(key), str(exc)) from None
        if positive and not q > 0:
            raise ConfigError(self._key(key), "must be positive")
        return q

    def vector(self, key, kind, default=_MISSING):
        value = self.raw(key, default)
        if value is default and default is not _MISSING:
            return np.array(default, dtype=np.float64)
        unit = None
        if isinstance(value, dict):
            unit = value.get("unit")
            value = value.get("value")
        if not isinstance(value, (list, tuple)) or len(value) != 3:
            raise ConfigError(self._key(key), "expected a 3-vector")
        try:
            return np.array([parse_quantity(v, kind, unit) for v in value])
        except UnitError as exc:
            raise ConfigError(self._key(key), str(exc)) from None

    def boolean(self, key, default):
        value = self.raw(key, default)
        if not isinstance(value, bool):
            raise ConfigError(self._key(key), "expected true/false")
        return value

    def choice(self, key, options, default):
        value = self.raw(key, default)
        if value not in options:
            raise ConfigError(self._key(key), f"expected one of {sorted(map(str, options))}, got {value!r}")
        return value

    def check_unknown(self):
        extra = set(self.data) - self.used
        if extra:
            raise ConfigError(self._key(sorted(extra)[0]), "unknown field")


def resolve_mesh_path(value, base_dir):
    if value.startswith(BUILTIN_PREFIX):
        return data_path(value[len(BUILTIN_PREFIX):])
    p = Path(value)
    return p if p.is_absolute() else (Path(base_dir) / p)


def config_from_dict(data, base_dir=".") -> ScenarioConfig:
    root = _Section(data, "")
    ast = root.section("asteroid", required=True)
    mesh_value = ast.raw("mesh")
    if not isinstance(mesh_value, str):
        raise ConfigError("asteroid.mesh", "expected a path string")
    mesh_path = resolve_mesh_path(mesh_value, base_dir)
    mesh_units = ast.choice("mesh_units", {"m", "km", None}, None)
    density = ast.quantity("density", "density", unit="kg/m3", positive=True)
    G = ast.quantity("G", "none", default=6.67430e-11)
    if not G > 0:
        raise ConfigError("asteroid.G", "must be positive")
    gravity_enabled = ast.boolean("gravity", True)
    if "rotation_period" in ast.data and ast.data["rotation_period"] is not None:
        spin_rate = period_to_rate(ast.quantity("rotation_period", "time", unit="s", positive=True))
    else:
        spin_rate = ast.quantity("spin_rate", "rate", default=0.0, unit="rad/s")
    spin_axis = ast.vector("spin_axis", "none", default=(0.0, 0.0, 1.0))
    if np.linalg.norm(spin_axis) == 0:
        raise ConfigError("asteroid.spin_axis", "must be non-zero")
    ast.used.add("rotation_period")
    ast.check_unknown()

    sc = root.section("spacecraft")
    m1 = sc.quantity("m1", "mass", default=500.0, unit="kg", positive=True)
    m2 = sc.quantity("m2", "mass", default=500.0, unit="kg", positive=True)
    length = sc.quantity("length", "length", default=3.0, unit="m", positive=True)
    r_s = sc.quantity("sphere_radius", "length", default=0.5, unit="m", positive=True)
    moment_mode = sc.choice("moment_mode", {MOMENT_CONSISTENT, MOMENT_PAPER_LITERAL}, MOMENT_CONSISTENT)
    sc.check_unknown()

    init = root.section("initial_state")
    x0 = init.vector("position", "length", default=(0.0, -2550.0, 0.0))
    v0 = init.vector("velocity", "speed", default=(0.0, 0.0, 0.0))
    att = init.section("attitude")
    axis = att.vector("axis", "none", default=(0.0, 0.0, 1.0))
    angle = att.quantity("angle", "angle", default=0.5 * math.pi, unit="rad")
    att.check_unknown()
    Om0 = init.vector("angular_velocity", "rate", default=(0.0, 0.0, 0.0))
    init.check_unknown()

    gsec = root.section("guidance")
    mode = gsec.choice("mode", {gd.LANDING, gd.HOLD}, gd.LANDING)
    hold = gsec.vector("hold_position", "length", default=x0) if mode == gd.HOLD else None
    try:
        gcfg = gd.GuidanceConfig(
            r0=gsec.quantity("r0", "length", default=2550.0, unit="m", positive=True),
            t_d=gsec.quantity("t_d", "time", default=3600.0, unit="s", positive=True),
            descent_rate=gsec.quantity("descent_rate", "speed", default=None, unit="m/s"),
            continuity=gsec.choice("continuity", {gd.CONTINUOUS, gd.PAPER_LITERAL}, gd.CONTINUOUS),
            phase1_sync=gsec.choice("phase1_sync", {gd.SYNC_INERTIAL, gd.SYNC_ASTEROID}, gd.SYNC_INERTIAL),
            mode=mode,
            hold_position=hold,
            h_attitude=gsec.quantity("h_attitude", "time", default=gd.H_ATTITUDE, unit="s", positive=True),
        )
    except ValueError as exc:
        raise ConfigError("guidance", str(exc)) from None
    gsec.check_unknown()

    csec = root.section("controller")
    enabled = csec.boolean("enabled", True)
    zeta = csec.quantity("zeta", "none", default=ctl.DEFAULT_ZETA, positive=True)
    wn_x = csec.quantity("wn_translation", "rate", default=ctl.DEFAULT_WN_TRANSLATION, unit="rad/s", positive=True)
    wn_R = csec.quantity("wn_attitude", "rate", default=ctl.DEFAULT_WN_ATTITUDE, unit="rad/s", positive=True)
    gains = None
    if "gains" in csec.data:
        gs = csec.section("gains")
        try:
            gains = ctl.ControlGains(
                gs.quantity("k_x", "none"), gs.quantity("k_v", "none"),
                gs.quantity("k_R", "none"), gs.quantity("k_Omega", "none"),
            )
        except ValueError as exc:
            raise ConfigError("controller.gains", str(exc)) from None
        gs.check_unknown()
    csec.check_unknown()

    sim = root.section("simulation")
    dt = sim.quantity("dt", "time", default=1.0, unit="s", positive=True)
    t_final = sim.quantity("t_final", "time", default=7200.0, unit="s", positive=True)
    substeps = sim.raw("control_substeps", None)
    if substeps == "auto":
        substeps = None
    if substeps is not None and (not isinstance(substeps, int) or isinstance(substeps, bool) or substeps < 1):
        raise ConfigError("simulation.control_substeps", "expected a positive integer or 'auto'")
    seed = sim.raw("seed", None)
    if seed is not None and not isinstance(seed, int):
        raise ConfigError("simulation.seed", "expected an integer")
    sim.check_unknown()
    if mode == gd.LANDING and t_final < gcfg.t_d:
        raise ConfigError("simulation.t_final", "must be at least guidance.t_d")

    out = root.section("output")
    csv_path = out.raw("csv", None)
    json_path = out.raw("json", None)
    out.check_unknown()
    root.check_unknown()

    def _out(p):
        if p is None:
            return None
        p = Path(p)
        return p if p.is_absolute() else Path(base_dir) / p

    return ScenarioConfig(
        mesh_path=mesh_path, mesh_units=mesh_units, density=density, G=G,
        gravity_enabled=gravity_enabled, spin_rate=spin_rate,
        spin_axis=tuple(spin_axis / np.linalg.norm(spin_axis)),
        m1=m1, m2=m2, length=length, sphere_radius=r_s,
        x0=x0, v0=v0, R0=axis_angle(axis, angle), Omega0=Om0,
        guidance=gcfg, gains=gains, zeta=zeta, wn_translation=wn_x, wn_attitude=wn_R,
        controller_enabled=enabled, moment_mode=moment_mode,
        dt=dt, t_final=t_final, control_substeps=substeps,
        output_csv=_out(csv_path), output_json=_out(json_path), seed=seed,
    )


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError("", f"config file not found: {path}")
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError("", f"malformed config: {exc}") from None
    return config_from_dict(data, base_dir=path.parent)


# ---------------------------------------------------------------------------
# trajectory log

def _vec(name, n=3):
    return [f"{name}_{i}" for i in range(n)]


COLUMNS = (
    ["t"] + _vec("x") + _vec("v") + [f"R_{i}{j}" for i in range(3) for j in range(3)]
    + _vec("Omega") + _vec("x_d") + ["Psi"] + _vec("e_x") + _vec("e_v") + _vec("e_R")
    + _vec("e_Omega") + _vec("u_f") + _vec("u_m")
    + ["min_altitude", "pointing_error", "potential", "laplacian"]
)
_INDEX = {c: i for i, c in enumerate(COLUMNS)}


@dataclass
class TrajectoryLog:
    data: np.ndarray
    summary: dict
    columns: tuple = tuple(COLUMNS)

    def __len__(self):
        return len(self.data)

    def column(self, name):
        return self.data[:, _INDEX[name]]

    def block(self, name, n=3):
        i = _INDEX[f"{name}_0"]
        return self.data[:, i:i + n]

    @property
    def t(self):
        return self.column("t")

    def rotations(self):
        i = _INDEX["R_00"]
        return self.data[:, i:i + 9].reshape(-1, 3, 3)


def _fmt(x):
    x = float(x)
    if math.isfinite(x):
        return "%.17g" % x
    if math.isnan(x):
        return "NaN"
    return "Infinity" if x > 0 else "-Infinity"


def _summary_path(path):
    path = Path(path)
    return path.with_name(path.stem + ".summary.json")


def _dump_summary(summary):
    return json.dumps(summary, indent=2, sort_keys=True, allow_nan=True) + "\n"


def export(log: TrajectoryLog, fmt, path):
    """Write ``log`` as CSV (plus a ``<stem>.summary.json`` sidecar) or JSON."""
    path = Path(path)
    fmt = fmt.lower()
    if fmt == "csv":
        lines = [",".join(log.columns)]
        lines += [",".join(_fmt(v) for v in row) for row in log.data]
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        _summary_path(path).write_text(_dump_summary(log.summary), encoding="utf-8")
    elif fmt == "json":
        records = ",\n".join("[" + ",".join(_fmt(v) for v in row) + "]" for row in log.data)
        text = (
            '{"schema_version": %d,\n"columns": %s,\n"summary": %s,\n"records": [\n%s\n]}\n'
            % (SCHEMA_VERSION, json.dumps(list(log.columns)),
               json.dumps(log.summary, sort_keys=True, allow_nan=True), records)
        )
        path.write_text(text, encoding="utf-8")
    else:
        raise ValueError(f"unknown export format {fmt!r}")
    return path


def read_log(path, fmt=None) -> TrajectoryLog:
    path = Path(path)
    fmt = (fmt or path.suffix.lstrip(".")).lower()
    if fmt == "csv":
        lines = path.read_text(encoding="utf-8").splitlines()
        columns = tuple(lines[0].split(","))
        rows = [[float(v) for v in line.split(",")] for line in lines[1:] if line]
        data = np.array(rows, dtype=np.float64).reshape(len(rows), len(columns))
        sp = _summary_path(path)
        summary = json.loads(sp.read_text(encoding="utf-8")) if sp.exists() else {}
        return TrajectoryLog(data, summary, columns)
    if fmt == "json":
        doc = json.loads(path.read_text(encoding="utf-8"))
        if doc.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema version {doc.get('schema_version')!r}")
        columns = tuple(doc["columns"])
        data = np.array(doc["records"], dtype=np.float64).reshape(len(doc["records"]), len(columns))
        return TrajectoryLog(data, doc["summary"], columns)
    raise ValueError(f"unknown log format {fmt!r}")


# ---------------------------------------------------------------------------
# simulation


CONTROL_STEP_RATIO = 0.5


def auto_substeps(dt, gains, params):
    """Control updates per log step so that the fastest closed-loop rate r satisfies r*h <= 0.5."""
    j_min = float(np.linalg.eigvalsh(params.J).min())
    rate = max(
        gains.k_Omega / j_min, math.sqrt(gains.k_R / j_min),
        gains.k_v / params.mass, math.sqrt(gains.k_x / params.mass),
    )
    return max(1, math.ceil(dt * rate / CONTROL_STEP_RATIO - 1e-9))


@dataclass(frozen=True)
class Simulation:
    """Everything built from a config before the loop starts."""

    config: ScenarioConfig
    mesh: TriangleMesh
    asteroid: AsteroidModel
    params: DumbbellParams
    gains: ctl.ControlGains
    guidance: gd.GuidanceConfig
    initial_state: SpacecraftState
    substeps: int


def build_simulation(config: ScenarioConfig) -> Simulation:
    try:
        mesh = load_mesh(config.mesh_path, units=config.mesh_units)
    except FileNotFoundError as exc:
        raise ConfigError("asteroid.mesh", str(exc)) from None
    except MeshError as exc:
        raise ConfigError("asteroid.mesh", str(exc)) from None
    gravity = GravityModel.from_mesh(mesh, config.density, config.G) if config.gravity_enabled else None
    asteroid = AsteroidModel(gravity, config.spin_rate, np.array(config.spin_axis))
    params = config.params()
    gains = config.gains or ctl.select_gains(
        params, config.zeta, config.wn_translation, config.wn_attitude
    )
    g = config.guidance
    if g.mode == gd.LANDING:
        surface = surface_radius_along(mesh, gd.phase2_direction(g, asteroid))
        if not g.r0 > mesh.max_radius():
            raise ConfigError("guidance.r0", "must exceed the maximum body radius")
        g = gd.GuidanceConfig(
            r0=g.r0, t_d=g.t_d, descent_rate=g.descent_rate, continuity=g.continuity,
            phase1_sync=g.phase1_sync, mode=g.mode, hold_position=g.hold_position,
            surface_radius=surface, h_attitude=g.h_attitude,
        )
    state = SpacecraftState(config.x0, config.v0, config.R0, config.Omega0, 0.0)
    if config.control_substeps is not None:
        substeps = config.control_substeps
    elif config.controller_enabled:
        substeps = auto_substeps(config.dt, gains, params)
    else:
        substeps = 1
    return Simulation(config, mesh, asteroid, params, gains, g, state, substeps)


def run_scenario(config: ScenarioConfig) -> TrajectoryLog:
    return run_simulation(build_simulation(config))


def _control(state, cmd, sim, gw):
    if not sim.config.controller_enabled:
        return np.zeros(3), np.zeros(3)
    u_f = ctl.control_force(state, cmd, sim.gains, sim.params, gw.F1, gw.F2)
    u_m = ctl.control_moment(state, cmd, sim.gains, sim.params, gw.M1, gw.M2)
    return u_f, u_m


def run_simulation(sim: Simulation) -> TrajectoryLog:
    """Guidance -> controller -> dynamics, one record per ``dt``.

    The control wrench is held constant over each of ``sim.substeps`` equal
    sub-intervals of a log step.
    """
    cfg = sim.config
    asteroid, params = sim.asteroid, sim.params
    dt = cfg.dt
    n_steps = int(round(cfg.t_final / dt))
    n_sub = sim.substeps
    h = dt / n_sub
    vertices = sim.mesh.vertices
    stream = gd.CommandStream(sim.guidance, asteroid)

    def advance(s, hh, wrench):
        return step_dumbbell(s, asteroid, params, wrench, hh, cfg.moment_mode)

    rows = []
    state = sim.initial_state
    reason = Termination.COMPLETED
    detail = ""
    int_uf = int_um = 0.0
    last_errors = None

    try:
        for k in range(n_steps + 1):
            t = k * dt
            cmd = stream(t)
            try:
                gw = gravity_wrench(state, asteroid, params, cfg.moment_mode)
            except CollisionError as exc:
                reason, detail = Termination.COLLISION, str(exc)
                break
            errors = ctl.compute_errors(state, cmd)
            u_f, u_m = _control(state, cmd, sim, gw)
            rows.append(_record(state, cmd, errors, u_f, u_m, asteroid, vertices))
            last_errors = errors
            if cmd.below_surface:
                reason, detail = Termination.COMMAND_BELOW_SURFACE, f"commanded radius below surface at t={t}"
                break
            if k == n_steps:
                break
            collided = None
            for j in range(n_sub):
                if j > 0:
                    ts = t + j * h
                    state = SpacecraftState(state.x, state.v, state.R, state.Omega, ts)
                    cmd = stream(ts)
                    try:
                        gw = gravity_wrench(state, asteroid, params, cfg.moment_mode)
                    except CollisionError as exc:
                        collided = exc
                        break
                    u_f, u_m = _control(state, cmd, sim, gw)
                wrench = WrenchInput(u_f, u_m)
                res = step_until_contact(state, lambda s, hh: advance(s, hh, wrench), h)
                int_uf += np.linalg.norm(u_f) * (res.state.t - state.t)
                int_um += np.linalg.norm(u_m) * (res.state.t - state.t)
                state = res.state
                if res.collision is not None:
                    collided = res.collision
                    break
            if collided is not None:
                reason, detail = Termination.COLLISION, str(collided)
                if state.t > t:
                    rows.append(_contact_record(state, stream, sim))
                break
            # pin time to the grid so logs do not accumulate rounding
            state = SpacecraftState(state.x, state.v, state.R, state.Omega, (k + 1) * dt)
    except NonFiniteStateError as exc:
        reason, detail = Termination.NUMERICAL_ABORT, str(exc)

    data = np.array(rows, dtype=np.float64).reshape(len(rows), len(COLUMNS))
    switch = None
    if sim.guidance.mode == gd.LANDING:
        switch = int(round(sim.guidance.t_d / dt))
    summary = {
        "schema_version": SCHEMA_VERSION,
        "termination_reason": reason.value,
        "termination_detail": detail,
        "n_records": len(rows),
        "dt": dt,
        "control_substeps": n_sub,
        "t_final": float(data[-1, 0]) if len(rows) else 0.0,
        "phase_switch_index": switch,
        "velocity_jump_at_switch": (
            gd.velocity_jump_at_switch(sim.guidance, asteroid) if switch is not None else 0.0
        ),
        "integral_u_f": float(int_uf),
        "integral_u_m": float(int_um),
        "final_e_x": float(np.linalg.norm(last_errors.e_x)) if last_errors else None,
        "final_e_v": float(np.linalg.norm(last_errors.e_v)) if last_errors else None,
        "final_Psi": float(last_errors.Psi) if last_errors else None,
        "final_e_R": float(np.linalg.norm(last_errors.e_R)) if last_errors else None,
        "final_e_Omega": float(np.linalg.norm(last_errors.e_Omega)) if last_errors else None,
        "seed": cfg.seed,
    }
    return TrajectoryLog(data, summary)


def _contact_record(state, stream, sim):
    """Record for the last collision-free state inside a truncated step."""
    cmd = stream(state.t)
    try:
        gw = gravity_wrench(state, sim.asteroid, sim.params, sim.config.moment_mode)
        u_f, u_m = _control(state, cmd, sim, gw)
    except CollisionError:
        u_f = u_m = np.zeros(3)
    return _record(state, cmd, ctl.compute_errors(state, cmd), u_f, u_m, sim.asteroid, sim.mesh.vertices)


def _record(state, cmd, errors, u_f, u_m, asteroid, vertices):
    RA = asteroid.rotation(state.t)
    z = RA.T @ state.x
    altitude = float(np.sqrt(((vertices - z) ** 2).sum(axis=1)).min())
    r = np.linalg.norm(state.x)
    b1 = state.R[:, 0]
    nadir = -state.x / r if r > 0 else b1
    pointing = float(np.arctan2(np.linalg.norm(np.cross(b1, nadir)), b1 @ nadir))
    if asteroid.gravity is not None:
        ev = asteroid.gravity.evaluate(z)
        pot, lap = ev.potential, ev.laplacian
    else:
        pot = lap = 0.0
    return np.concatenate((
        [state.t], state.x, state.v, state.R.ravel(), state.Omega, cmd.x_d, [errors.Psi],
        errors.e_x, errors.e_v, errors.e_R, errors.e_Omega, u_f, u_m,
        [altitude, pointing, pot, lap],
    ))
