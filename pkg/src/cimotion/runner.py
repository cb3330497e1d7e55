"""Command implementations: equilibrium, surfaces, evolve, optimize.

Every command writes a manifest.yaml echoing the fully resolved config and
derived equilibrium values into its output directory, so a run can be
reproduced from its outputs alone.  All CSV numbers are written with %.17g
so repeated runs are byte-identical.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import yaml

from . import frames
from .config import (RunConfig, Setup, build_guess, build_setup, build_states,
                     load_field_file, manifest_dict, optimizer_config,
                     resolve_outdir)
from .control import run_optimization, terminal_overlap
from .errors import ConfigError
from .observables import crossing_count
from .params import from_internal
from .propagator import ControlField, RecordSpec, propagate_forward
from .surfaces import (adiabatic_states, eval_coefficients, eval_surfaces,
                       mixing_angle, surface_gap_at, ci_location)

_FMT = "%.17g"


def _write_csv(path: Path, header: str, columns: list[np.ndarray]) -> None:
    data = np.column_stack(columns)
    np.savetxt(path, data, delimiter=",", header=header, comments="", fmt=_FMT)


def _write_kv(path: Path, pairs: list[tuple[str, object]]) -> None:
    with open(path, "w") as fh:
        fh.write("key,value\n")
        for key, value in pairs:
            if isinstance(value, float):
                fh.write(f"{key},{_FMT % value}\n")
            else:
                fh.write(f"{key},{value}\n")


def _write_matrix(path: Path, grid, mat: np.ndarray) -> None:
    """Matrix CSV: first row is qz coordinates (with a corner cell), first
    column is qx; body is the field, qx down the rows."""
    nx, nz = mat.shape
    out = np.empty((nx + 1, nz + 1))
    out[0, 0] = np.nan
    out[0, 1:] = grid.qz
    out[1:, 0] = grid.qx
    out[1:, 1:] = mat
    np.savetxt(path, out, delimiter=",", fmt=_FMT)


def _write_manifest(outdir: Path, setup: Setup, extra: dict | None = None) -> None:
    doc = manifest_dict(setup)
    if extra:
        doc["run"] = extra
    with open(outdir / "manifest.yaml", "w") as fh:
        yaml.safe_dump(doc, fh, sort_keys=True)


def _prepare_outdir(cfg: RunConfig, out_override: str | None) -> Path:
    outdir = resolve_outdir(cfg, out_override)
    outdir.mkdir(parents=True, exist_ok=True)
    return outdir


def _write_frames(outdir: Path, recorded: list[tuple[float, np.ndarray]],
                  grid) -> None:
    if not recorded:
        return
    fdir = outdir / "frames"
    fdir.mkdir(exist_ok=True)
    names, times = [], []
    for i, (t_us, rho) in enumerate(recorded):
        name = f"frame_{i:03d}.bin"
        frames.write_frame(fdir / name, rho, t_us)
        names.append(name)
        times.append(t_us)
    with open(fdir / "index.csv", "w") as fh:
        fh.write("file,t_us,nx,nz\n")
        for name, t_us in zip(names, times):
            fh.write(f"{name},{_FMT % t_us},{grid.nx},{grid.nz}\n")


def run_equilibrium(cfg: RunConfig, out_override: str | None = None) -> dict:
    setup = build_setup(cfg)
    outdir = _prepare_outdir(cfg, out_override)
    geo = setup.geometry
    si = from_internal(setup.model)
    pairs = [
        ("separation_m", geo.separation),
        ("separation_um", geo.separation * 1e6),
        ("com_shift_m", geo.com_shift),
        ("com_shift_solved_m", geo.com_shift_solved),
        ("com_shift_mismatch_rel",
         abs(geo.com_shift - geo.com_shift_solved)
         / max(abs(geo.com_shift_solved), 1e-300)),
        ("omega_eff_x_rad_s", geo.omega_eff_x),
        ("omega_eff_z_rad_s", geo.omega_eff_z),
        ("omega_eff_x_over_2pi_Hz", geo.omega_eff_x / (2 * np.pi)),
        ("omega_eff_z_over_2pi_Hz", geo.omega_eff_z / (2 * np.pi)),
        ("packet_sigma_x_nm", setup.model.packet_sigma_x),
        ("packet_sigma_z_nm", setup.model.packet_sigma_z),
        ("tuning_slope_J_per_m", si["tuning_slope"]),
    ]
    _write_kv(outdir / "geometry.csv", pairs)
    _write_manifest(outdir, setup)
    report = dict(pairs)
    print(f"separation z0 = {geo.separation * 1e6:.6g} um")
    print(f"com shift used = {geo.com_shift * 1e6:.6g} um "
          f"(solved from static field: {geo.com_shift_solved * 1e6:.6g} um)")
    print(f"effective frequencies: {geo.omega_eff_x / 2 / np.pi / 1e6:.6g} MHz (x), "
          f"{geo.omega_eff_z / 2 / np.pi / 1e6:.6g} MHz (z)")
    return report


def run_surfaces(cfg: RunConfig, out_override: str | None = None) -> dict:
    setup = build_setup(cfg)
    outdir = _prepare_outdir(cfg, out_override)
    grid, model = setup.grid, setup.model
    coeffs = eval_coefficients(model, grid)
    surf = eval_surfaces(model, grid, coeffs)
    angle, _ = mixing_angle(coeffs)

    _write_matrix(outdir / "E_plus.csv", grid, surf.upper)
    _write_matrix(outdir / "E_minus.csv", grid, surf.lower)
    _write_matrix(outdir / "S.csv", grid, coeffs.confinement)
    _write_matrix(outdir / "W.csv", grid, coeffs.coupling)
    _write_matrix(outdir / "G.csv", grid, coeffs.tuning)
    _write_matrix(outdir / "Lambda.csv", grid, angle)

    iz0 = int(np.argmin(np.abs(grid.qz)))
    _write_csv(outdir / "slice_qz0.csv", "qx_nm,E_minus,E_plus",
               [grid.qx, surf.lower[:, iz0], surf.upper[:, iz0]])

    gap = surface_gap_at(model, surf.ci_qx, surf.ci_qz)
    _write_kv(outdir / "summary.csv", [
        ("ci_qx_nm", surf.ci_qx),
        ("ci_qz_nm", surf.ci_qz),
        ("ci_gap_internal", gap),
        ("slice_qz_nm", float(grid.qz[iz0])),
    ])
    _write_manifest(outdir, setup)
    print(f"conical intersection at qx = {surf.ci_qx:g} nm, "
          f"qz = {surf.ci_qz:g} nm; gap there = {gap:.3e}")
    return {"ci_qx": surf.ci_qx, "ci_qz": surf.ci_qz, "gap": gap}


def _record_spec(setup: Setup, target) -> RecordSpec:
    return RecordSpec(every=setup.snapshot_every,
                      frame_steps=setup.frame_steps,
                      target=target.amplitude)


def run_evolve(cfg: RunConfig, out_override: str | None = None,
               field: str = "zero") -> dict:
    setup = build_setup(cfg)
    outdir = _prepare_outdir(cfg, out_override)
    psi0, target = build_states(setup)
    coeffs = eval_coefficients(setup.model, setup.grid)
    if field == "zero":
        control = ControlField.zeros(setup.nt, setup.dt)
    else:
        control = load_field_file(field, setup.nt, setup.dt)

    psi_f, record = propagate_forward(setup.model, psi0, control, coeffs,
                                      record=_record_spec(setup, target))
    j1 = terminal_overlap(psi_f, target)
    ci_qx, _ = ci_location(setup.model)
    crossings = crossing_count(record.qx, ci_qx)

    _write_csv(outdir / "qx_trace.csv", "t_us,qx_nm", [record.times, record.qx])
    _write_csv(outdir / "j1_trace.csv", "t_us,j1", [record.times, record.overlap])
    _write_frames(outdir, record.frames, setup.grid)
    _write_kv(outdir / "summary.csv", [
        ("final_qx_nm", float(record.qx[-1])),
        ("final_qz_nm", float(record.qz[-1])),
        ("final_j1", j1),
        ("final_j1_trace", float(record.overlap[-1])),
        ("norm_drift", float(abs(record.norm[-1] - record.norm[0]))),
        ("crossing_count", crossings),
        ("mode", "spinor" if setup.ncomp == 2 else "bo"),
    ])
    _write_manifest(outdir, setup, {"command": "evolve", "field": str(field)})
    print(f"final <qx> = {record.qx[-1]:.4f} nm, terminal overlap = {j1:.6f}, "
          f"norm drift = {abs(record.norm[-1] - record.norm[0]):.3e}")
    return {"final_qx": float(record.qx[-1]), "j1": j1,
            "crossings": crossings, "record": record}


def run_optimize(cfg: RunConfig, out_override: str | None = None,
                 mode_override: str | None = None,
                 max_iters_override: int | None = None,
                 seed_field_override: str | None = None) -> dict:
    if mode_override is not None:
        raw = {**cfg.raw}
        control = dict(raw["control"])
        if mode_override not in ("spinor", "bo"):
            raise ConfigError(f"unknown mode {mode_override!r}")
        control["mode"] = mode_override
        raw["control"] = control
        cfg = RunConfig(raw=raw, path=cfg.path)
    setup = build_setup(cfg)
    outdir = _prepare_outdir(cfg, out_override)
    psi0, target = build_states(setup)
    coeffs = eval_coefficients(setup.model, setup.grid)
    guess = build_guess(setup, kind_override=seed_field_override,
                        base_dir=Path(cfg.path).parent if cfg.path else None)
    opts = optimizer_config(setup, max_iters_override)

    result = run_optimization(setup.model, psi0, target, guess, coeffs, opts)

    # Replay the optimal field with recording, plus a zero-field companion
    # trace for comparison.
    psi_f, record = propagate_forward(setup.model, psi0, result.control,
                                      coeffs, record=_record_spec(setup, target))
    replay_j1 = terminal_overlap(psi_f, target)
    _, record0 = propagate_forward(setup.model, psi0,
                                   ControlField.zeros(setup.nt, setup.dt),
                                   coeffs, record=_record_spec(setup, target))

    iters = np.arange(result.j_total.size)
    _write_csv(outdir / "convergence.csv", "iteration,J,J1,J2",
               [iters, result.j_total, result.j_overlap, result.j_cost])
    _write_csv(outdir / "field_opt.csv", "t_us,u_V_per_m",
               [result.control.t_mid, result.control.samples])
    _write_csv(outdir / "qx_trace.csv", "t_us,qx_nm,qx_zero_field_nm",
               [record.times, record.qx, record0.qx])
    _write_csv(outdir / "j1_trace.csv", "t_us,j1", [record.times, record.overlap])
    _write_frames(outdir, record.frames, setup.grid)

    ci_qx, _ = ci_location(setup.model)
    final_j1 = float(result.j_overlap[-1])
    _write_kv(outdir / "summary.csv", [
        ("mode", "spinor" if setup.ncomp == 2 else "bo"),
        ("iterations", result.iterations),
        ("converged", int(result.converged)),
        ("final_J", float(result.j_total[-1])),
        ("final_J1", final_j1),
        ("final_J2", float(result.j_cost[-1])),
        ("replay_J1", replay_j1),
        ("replay_J1_mismatch", abs(replay_j1 - final_j1)),
        ("crossing_count", crossing_count(record.qx, ci_qx)),
        ("crossing_count_zero_field", crossing_count(record0.qx, ci_qx)),
        ("final_qx_nm", float(record.qx[-1])),
        ("reversal_gap", result.reversal_gap),
    ])
    _write_manifest(outdir, setup, {"command": "optimize"})
    print(f"{result.iterations} iterations "
          f"({'converged' if result.converged else 'iteration cap reached'}); "
          f"J1 = {final_j1:.6f}, J2 = {result.j_cost[-1]:.6f}")
    return {"result": result, "record": record, "record_free": record0,
            "replay_j1": replay_j1, "outdir": outdir}
