"""Explicit upwind finite-volume stepper for ``u_t - chi (u p_x)_x = u (1 - u)``.

Cell averages live on a :class:`~kswave.model.Grid1D`; the pressure is solved
once per step from ``u^n`` and the face velocities are frozen for the step.
Boundary fluxes are zero, so with the reaction switched off the scheme
conserves mass to round-off.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .diagnostics import (
    LevelSetTrace,
    Separatrix,
    front_zero,
    jump_height,
    level_set,
)
from .elliptic import solve_pressure_neumann, staggered_velocity
from .model import Field, Grid1D, InitialCondition, ModelParams, eval_ic, make_params

__all__ = [
    "CFLViolationError",
    "SchemeState",
    "upwind_flux",
    "face_fluxes",
    "cfl_dt",
    "initial_state",
    "step",
    "run",
    "run_fields",
]

log = logging.getLogger(__name__)

_BOUND_TOL = 1e-12


class CFLViolationError(RuntimeError):
    """A step left ``[0, 1]``; reduce ``cfl``."""


@dataclass(frozen=True)
class SchemeState:
    u: Field
    p: Field
    v: np.ndarray
    step_count: int = 0
    dt_last: float = float("nan")

    @property
    def time(self) -> float:
        return self.u.time


def upwind_flux(uL, uR, v):
    """``v uL`` if ``v >= 0`` else ``v uR``.  Works elementwise on arrays."""
    if np.ndim(v) == 0 and np.ndim(uL) == 0 and np.ndim(uR) == 0:
        return v * uL if v >= 0 else v * uR
    return np.where(v >= 0, v * uL, v * uR)


def face_fluxes(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """All ``M + 1`` face fluxes with the two boundary fluxes pinned to zero."""
    G = np.zeros(u.size + 1)
    G[1:-1] = upwind_flux(u[:-1], u[1:], v[1:-1])
    return G


def _with_pressure(u: Field, params: ModelParams, step_count=0, dt_last=float("nan")) -> SchemeState:
    p = solve_pressure_neumann(u, params)
    v = staggered_velocity(p, params.chi)
    v.setflags(write=False)
    return SchemeState(u, p, v, step_count, dt_last)


def initial_state(grid: Grid1D, ic: InitialCondition, params: ModelParams, t0: float = 0.0) -> SchemeState:
    return _with_pressure(Field(grid, eval_ic(ic, grid.centers), t0), params)


def cfl_dt(state: SchemeState, cfl: float, dt_max: float) -> float:
    """``min(dt_max, cfl dx / max|v|, cfl)``; the last term caps the reaction (slope <= 1)."""
    if not 0 < cfl <= 1:
        raise ValueError(f"cfl must lie in (0, 1], got {cfl}")
    vmax = float(np.max(np.abs(state.v)))
    if vmax == 0.0:
        return min(dt_max, cfl)
    return min(dt_max, cfl * state.u.grid.dx / vmax, cfl)


def step(state: SchemeState, dt: float, params: ModelParams, reaction: bool = True) -> SchemeState:
    """One forward-Euler upwind step followed by a fresh pressure solve."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    u = state.u.values
    G = face_fluxes(u, state.v)
    new = u - (dt / state.u.grid.dx) * np.diff(G)
    if reaction:
        new = new + dt * u * (1.0 - u)
    lo, hi = float(new.min()), float(new.max())
    if lo < -_BOUND_TOL or hi > 1.0 + _BOUND_TOL:
        raise CFLViolationError(
            f"t={state.time + dt:.6g}: values in [{lo:.3e}, {hi:.15g}] after dt={dt:.3e}; reduce cfl")
    return _with_pressure(Field(state.u.grid, new, state.time + dt), params,
                          state.step_count + 1, dt)


def _event_times(cfg) -> np.ndarray:
    """Times the stepper lands on exactly: snapshots, speed-window ends, T_final."""
    ev = {float(s) for s in cfg.time.snapshot_times}
    ev.update((0.0, cfg.diagnostics.t1, cfg.diagnostics.t2, cfg.time.T_final))
    return np.array(sorted(e for e in ev if 0.0 <= e <= cfg.time.T_final))


def run_fields(state: SchemeState, params: ModelParams, T: float, cfl: float = 0.9,
               dt_max: float = 0.1, reaction: bool = True):
    """Plain integration to ``T`` without diagnostics; yields every accepted state."""
    yield state
    while state.time < T - 1e-12:
        dt = min(cfl_dt(state, cfl, dt_max), T - state.time)
        state = step(state, dt, params, reaction)
        yield state


def run(config) -> tuple[SchemeState, LevelSetTrace]:
    """Integrate one experiment to ``T_final`` and sample its diagnostics.

    Snapshot times and the speed-window ends are hit exactly by shortening
    the step that would cross them.  Routine samples are taken at the first
    accepted step at or past each multiple of ``sample_interval``; shortening
    every step onto a fine sampling grid would lower the effective Courant
    number and add numerical diffusion.  The separatrix is tracked only when
    the initial density vanishes at the right end of the domain (otherwise it
    is NaN in the trace).
    """
    params = make_params(config.sigma, config.chi)
    grid = Grid1D(config.grid.L, config.grid.M)
    tc, dc = config.time, config.diagnostics
    state = initial_state(grid, config.ic, params)

    mode = dc.separatrix
    if mode == "auto":
        mode = "kernel" if state.u.values[-1] <= dc.front_threshold else "off"
    sep = None
    if mode != "off":
        h0 = dc.h0 if dc.h0 is not None else front_zero(state.u, dc.front_threshold)
        sep = Separatrix(h0, params, grid, mode)

    levels = np.asarray(dc.betas, float)
    events = _event_times(config)
    snaps = {round(float(s), 12) for s in tc.snapshot_times}
    bound = params.max_speed + 1e-9

    rows_t, rows_xi, rows_h, rows_j, rows_m, rows_v = [], [], [], [], [], []
    st_t, st_h, st_v = [], [], []
    snapshots = {}

    def sample(s: SchemeState):
        u = s.u
        rows_t.append(u.time)
        rows_xi.append([front_zero(u, dc.front_threshold) if b == 0 else
                        (lambda x: np.nan if x is None else x)(level_set(u, b)) for b in levels])
        h = sep.h if sep is not None else np.nan
        rows_h.append(h)
        front = h if sep is not None else front_zero(u, dc.front_threshold)
        j = jump_height(u, front, dc.jump_window)
        rows_j.append(np.nan if j is None else j)
        rows_m.append(u.mass())
        rows_v.append(float(np.max(np.abs(s.v))))
        key = round(u.time, 12)
        if key in snaps:
            snapshots[key] = (u, s.p)

    sample(state)
    k = 1
    next_sample = tc.sample_interval
    while k < len(events):
        target = events[k]
        dt = cfl_dt(state, tc.cfl, tc.dt_max)
        hit = state.time + dt >= target - 1e-12
        if hit:
            dt = target - state.time
        new = step(state, dt, params, tc.reaction)
        if hit:
            t_hit = float(target)
            new = SchemeState(Field(grid, new.u.values, t_hit), Field(grid, new.p.values, t_hit),
                              new.v, new.step_count, new.dt_last)
        vmax = float(np.max(np.abs(state.v)))
        if vmax > bound:
            raise AssertionError(f"face speed {vmax} exceeds chi/(2 sigma) = {params.max_speed}")
        if sep is not None:
            sep.advance(state.u, new.u, dt, state.v, new.v)
            st_h.append(sep.last_speed)
        else:
            st_h.append(np.nan)
        st_t.append(new.time)
        st_v.append(vmax)
        state = new
        if hit or state.time >= next_sample - 1e-12:
            sample(state)
            while next_sample <= state.time + 1e-12:
                next_sample += tc.sample_interval
        if hit:
            k += 1

    trace = LevelSetTrace(
        times=np.array(rows_t), levels=levels, xi=np.array(rows_xi, float).reshape(len(rows_t), levels.size),
        separatrix=np.array(rows_h), jump=np.array(rows_j), mass=np.array(rows_m), dx=grid.dx,
        vmax=np.array(rows_v), step_times=np.array(st_t), step_hspeed=np.array(st_h),
        step_vmax=np.array(st_v), snapshots=snapshots,
    )
    log.info("run finished: %d steps, t=%.6g", state.step_count, state.time)
    return state, trace
