"""Config files: schema, validation, and construction of run objects.

Configs are YAML with five sections.  Keys carry explicit unit suffixes
(_kg, _us, _ns, _nm) where the unit is not an SI base combination; bare
physical keys are SI (rad/s, V/m, V/m^2, J, J/m, C^2 m^2/J, m).
Unknown keys are rejected so typos cannot silently fall back to defaults.
"""

from __future__ import annotations

import copy
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from .control import OptimizerConfig, TargetSpec, initial_packet, make_target
from .errors import ConfigError
from .grid import Grid2D, make_grid
from .params import (DerivedGeometry, InternalModel, PhysicalParams,
                     derive_geometry, to_internal)
from .propagator import ControlField, SpinorField

_REQUIRED = object()

_SCHEMA: dict[str, dict[str, tuple[type, object]]] = {
    "physical": {
        "mass_kg": (float, _REQUIRED),
        "pol_down": (float, _REQUIRED),
        "pol_up": (float, _REQUIRED),
        "omega_x": (float, _REQUIRED),
        "omega_z": (float, _REQUIRED),
        "static_field": (float, _REQUIRED),
        "rf_gradient": (float, _REQUIRED),
        "exchange_energy": (float, _REQUIRED),
        "exchange_gradient": (float, _REQUIRED),
        "com_shift": (float, None),     # m; omit to solve from static_field
    },
    "grid": {
        "nx": (int, 256),
        "nz": (int, 256),
        "qx_min_nm": (float, -80.0),
        "qx_max_nm": (float, 80.0),
        "qz_min_nm": (float, -80.0),
        "qz_max_nm": (float, 80.0),
    },
    "time": {
        "t_final_us": (float, 10.0),
        "dt_ns": (float, 1.0),
        "snapshot_ns": (float, 10.0),
        "frame_times_us": (list, [0.0, 5.0, 10.0]),
    },
    "state": {
        "initial_center_nm": (list, _REQUIRED),
        "target_center_nm": (list, _REQUIRED),
    },
    "control": {
        "mode": (str, "spinor"),
        "alpha0": (float, _REQUIRED),   # 1/((V/m)^2 us)
        "eta": (float, 1.0),
        "zeta": (float, 1.0),
        "max_iters": (int, 200),
        "stop_tol": (float, 1e-6),
        "stop_patience": (int, 5),
        "guess": (dict, {"kind": "zero"}),
    },
    "output": {
        "dir": (str, "run_out"),
    },
}

_GUESS_KEYS = {
    "zero": set(),
    "rect": {"amplitude", "t_on_us", "t_off_us"},
    "gauss": {"amplitude", "center_us", "sigma_us"},
    "file": {"path"},
}


def _coerce(section: str, key: str, spec: tuple[type, object], value):
    typ, _ = spec
    if typ is float:
        if isinstance(value, bool) or not isinstance(value, (int, float, str)):
            raise ConfigError(f"config: {section}.{key} must be a number")
        try:
            return float(value)
        except ValueError:
            raise ConfigError(f"config: {section}.{key} is not a number: {value!r}")
    if typ is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"config: {section}.{key} must be an integer")
        return value
    if typ is str:
        if not isinstance(value, str):
            raise ConfigError(f"config: {section}.{key} must be a string")
        return value
    if typ is list:
        if not isinstance(value, list):
            raise ConfigError(f"config: {section}.{key} must be a list")
        return [float(v) for v in value]
    if typ is dict:
        if not isinstance(value, dict):
            raise ConfigError(f"config: {section}.{key} must be a mapping")
        return copy.deepcopy(value)
    raise AssertionError(f"unhandled schema type for {section}.{key}")


def _validate_guess(guess: dict) -> dict:
    kind = guess.get("kind")
    if kind not in _GUESS_KEYS:
        raise ConfigError(
            f"config: control.guess.kind must be one of {sorted(_GUESS_KEYS)}, "
            f"got {kind!r}")
    allowed = _GUESS_KEYS[kind] | {"kind"}
    for key in guess:
        if key not in allowed:
            raise ConfigError(f"config: unknown key control.guess.{key}")
    for key in _GUESS_KEYS[kind]:
        if key not in guess:
            raise ConfigError(f"config: missing required key control.guess.{key}")
    out = {"kind": kind}
    for key in _GUESS_KEYS[kind]:
        out[key] = guess[key] if key == "path" else float(guess[key])
    return out


@dataclass(frozen=True)
class RunConfig:
    """Validated config with every default applied."""

    raw: dict
    path: str

    def section(self, name: str) -> dict:
        return self.raw[name]


def load_config(path: str | Path) -> RunConfig:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    try:
        doc = yaml.safe_load(p.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"config: cannot parse {p}: {exc}")
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError(f"config: top level of {p} must be a mapping")
    return validate_config(doc, str(p))


def validate_config(doc: dict, path: str = "<dict>") -> RunConfig:
    for section in doc:
        if section not in _SCHEMA:
            raise ConfigError(f"config: unknown section {section!r}")
    resolved: dict = {}
    for section, keys in _SCHEMA.items():
        given = doc.get(section, {})
        if given is None:
            given = {}
        if not isinstance(given, dict):
            raise ConfigError(f"config: section {section!r} must be a mapping")
        for key in given:
            if key not in keys:
                raise ConfigError(f"config: unknown key {section}.{key}")
        out = {}
        for key, spec in keys.items():
            if key in given:
                out[key] = _coerce(section, key, spec, given[key])
            elif spec[1] is _REQUIRED:
                raise ConfigError(f"config: missing required key {section}.{key}")
            else:
                out[key] = copy.deepcopy(spec[1])
        resolved[section] = out

    resolved["control"]["guess"] = _validate_guess(resolved["control"]["guess"])
    if resolved["control"]["mode"] not in ("spinor", "bo"):
        raise ConfigError("config: control.mode must be 'spinor' or 'bo'")
    for key in ("initial_center_nm", "target_center_nm"):
        if len(resolved["state"][key]) != 2:
            raise ConfigError(f"config: state.{key} must be [qx_nm, qz_nm]")
    return RunConfig(raw=resolved, path=path)


@dataclass
class Setup:
    """Everything a propagation or optimisation run needs, internal units."""

    cfg: RunConfig
    params: PhysicalParams
    geometry: DerivedGeometry
    model: InternalModel
    grid: Grid2D
    nt: int
    dt: float               # internal time units (us)
    snapshot_every: int     # steps between trace snapshots
    frame_steps: tuple[int, ...]
    ncomp: int
    initial_center: tuple[float, float]
    target_center: tuple[float, float]


def build_params(cfg: RunConfig) -> tuple[PhysicalParams, DerivedGeometry]:
    ph = cfg.section("physical")
    params = PhysicalParams(
        mass=ph["mass_kg"], pol_down=ph["pol_down"], pol_up=ph["pol_up"],
        omega_x=ph["omega_x"], omega_z=ph["omega_z"],
        static_field=ph["static_field"], rf_gradient=ph["rf_gradient"],
        exchange_energy=ph["exchange_energy"],
        exchange_gradient=ph["exchange_gradient"])
    geometry = derive_geometry(params, com_shift=ph["com_shift"])
    return params, geometry


def _steps_for(t_us: float, dt: float, what: str) -> int:
    steps = t_us / dt
    n = int(round(steps))
    if abs(steps - n) > 1e-9 * max(1.0, abs(steps)):
        raise ConfigError(
            f"config: {what} = {t_us:g} us is not a whole number of steps "
            f"at dt = {dt:g} us")
    return n


def build_setup(cfg: RunConfig) -> Setup:
    params, geometry = build_params(cfg)
    model = to_internal(params, geometry)

    g = cfg.section("grid")
    grid = make_grid(g["nx"], g["nz"], g["qx_min_nm"], g["qx_max_nm"],
                     g["qz_min_nm"], g["qz_max_nm"])

    t = cfg.section("time")
    dt = t["dt_ns"] * 1e-3
    if dt <= 0:
        raise ConfigError("config: time.dt_ns must be positive")
    nt = _steps_for(t["t_final_us"], dt, "time.t_final_us")
    if nt < 1:
        raise ConfigError("config: horizon shorter than one step")
    every = _steps_for(t["snapshot_ns"] * 1e-3, dt, "time.snapshot_ns")
    if every < 1:
        raise ConfigError("config: snapshot cadence shorter than one step")
    frame_steps = []
    for ft in t["frame_times_us"]:
        s = _steps_for(ft, dt, "time.frame_times_us entry")
        if not 0 <= s <= nt:
            raise ConfigError(
                f"config: frame time {ft:g} us outside the horizon")
        frame_steps.append(s)

    st = cfg.section("state")
    ncomp = 2 if cfg.section("control")["mode"] == "spinor" else 1
    return Setup(cfg=cfg, params=params, geometry=geometry, model=model,
                 grid=grid, nt=nt, dt=dt, snapshot_every=every,
                 frame_steps=tuple(frame_steps), ncomp=ncomp,
                 initial_center=tuple(st["initial_center_nm"]),
                 target_center=tuple(st["target_center_nm"]))


def build_states(setup: Setup) -> tuple[SpinorField, TargetSpec]:
    psi0 = initial_packet(setup.model, setup.grid, setup.initial_center,
                          ncomp=setup.ncomp)
    target = make_target(setup.model, setup.grid, setup.target_center)
    return psi0, target


def build_guess(setup: Setup, kind_override: str | None = None,
                base_dir: str | Path | None = None) -> ControlField:
    ctl = setup.cfg.section("control")
    guess = dict(ctl["guess"])
    if kind_override is not None and kind_override != guess.get("kind"):
        raise ConfigError(
            f"seed-field override '{kind_override}' does not match the "
            f"config guess '{guess.get('kind')}'; edit the config instead")
    kind = guess["kind"]
    nt, dt = setup.nt, setup.dt
    if kind == "zero":
        return ControlField.zeros(nt, dt)
    if kind == "rect":
        return ControlField.rectangular(nt, dt, guess["amplitude"],
                                        guess["t_on_us"], guess["t_off_us"])
    if kind == "gauss":
        return ControlField.gaussian(nt, dt, guess["amplitude"],
                                     guess["center_us"], guess["sigma_us"])
    path = Path(guess["path"])
    if base_dir is not None and not path.is_absolute():
        path = Path(base_dir) / path
    return load_field_file(path, nt, dt)


def load_field_file(path: str | Path, nt: int, dt: float) -> ControlField:
    """Read a field CSV (t_us, u_V_per_m) laid out on this run's midpoints."""
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"field file not found: {p}")
    try:
        arr = np.loadtxt(p, delimiter=",", skiprows=1, ndmin=2)
    except ValueError as exc:
        raise ConfigError(f"field file {p}: {exc}")
    if arr.shape[1] != 2:
        raise ConfigError(f"field file {p}: expected two columns t_us,u")
    if arr.shape[0] != nt:
        raise ConfigError(
            f"field file {p}: has {arr.shape[0]} samples, run needs {nt}")
    t_expect = (np.arange(nt) + 0.5) * dt
    if not np.allclose(arr[:, 0], t_expect, rtol=0.0, atol=1e-9):
        raise ConfigError(
            f"field file {p}: time column does not match the run's "
            f"step midpoints (dt = {dt:g} us)")
    return ControlField(arr[:, 1], dt)


def optimizer_config(setup: Setup, max_iters_override: int | None = None) -> OptimizerConfig:
    ctl = setup.cfg.section("control")
    return OptimizerConfig(
        alpha0=ctl["alpha0"], eta=ctl["eta"], zeta=ctl["zeta"],
        max_iters=max_iters_override if max_iters_override is not None
        else ctl["max_iters"],
        stop_tol=ctl["stop_tol"], stop_patience=ctl["stop_patience"])


def resolve_outdir(cfg: RunConfig, override: str | None = None) -> Path:
    """Output directory: CLI override, else config, under the optional
    CIMOTION_OUT_ROOT environment root for relative paths."""
    chosen = Path(override if override is not None else cfg.section("output")["dir"])
    root = os.environ.get("CIMOTION_OUT_ROOT")
    if root and not chosen.is_absolute():
        chosen = Path(root) / chosen
    return chosen


def manifest_dict(setup: Setup) -> dict:
    """Fully resolved config plus derived equilibrium values, for echoing."""
    from .params import from_internal
    si = from_internal(setup.model)
    return {
        "config": copy.deepcopy(setup.cfg.raw),
        "config_path": setup.cfg.path,
        "derived": {
            "separation_m": setup.geometry.separation,
            "com_shift_m": setup.geometry.com_shift,
            "com_shift_solved_m": setup.geometry.com_shift_solved,
            "omega_eff_x_rad_s": setup.geometry.omega_eff_x,
            "omega_eff_z_rad_s": setup.geometry.omega_eff_z,
            "packet_sigma_x_nm": setup.model.packet_sigma_x,
            "packet_sigma_z_nm": setup.model.packet_sigma_z,
            "tuning_slope_J_per_m": si["tuning_slope"],
            "steps": setup.nt,
            "dt_us": setup.dt,
        },
    }
