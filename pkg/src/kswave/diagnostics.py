"""Front tracking and theory-vs-numerics checks on PDE fields.

Level sets, the separatrix (rightmost characteristic), jump height, measured
propagation speeds and exponential gap fits.  All functions take immutable
snapshots; :class:`Separatrix` is the only stateful piece and advances in
lock-step with the PDE stepper.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .model import Field, Grid1D, ModelParams

__all__ = [
    "DomainExitError",
    "InterpolatedSampleWarning",
    "LevelSetTrace",
    "level_set",
    "front_zero",
    "propagation_speed",
    "separatrix_speed",
    "Separatrix",
    "track_separatrix",
    "jump_height",
    "gap_decay",
    "fit_log_rate",
    "GapFit",
    "smooth_speed_check",
    "levelset_excess",
    "aligned_sup_distance",
]


class DomainExitError(RuntimeError):
    """The tracked separatrix left ``[-L, L]``; enlarge the domain."""


class InterpolatedSampleWarning(UserWarning):
    """A requested time was not sampled; the value was interpolated."""


@dataclass
class LevelSetTrace:
    """Sampled time series of one PDE run.

    ``xi[k, j]`` is the position of level ``levels[j]`` at ``times[k]`` (NaN
    when the level is absent).  Level 0 is the numerical support edge
    (:func:`front_zero`).  ``separatrix`` is NaN when it is not tracked.
    """

    times: np.ndarray
    levels: np.ndarray
    xi: np.ndarray
    separatrix: np.ndarray
    jump: np.ndarray
    mass: np.ndarray
    dx: float = float("nan")
    vmax: np.ndarray | None = None
    # per accepted step
    step_times: np.ndarray | None = None
    step_hspeed: np.ndarray | None = None
    step_vmax: np.ndarray | None = None
    snapshots: dict = field(default_factory=dict, repr=False)

    def level_index(self, beta: float) -> int:
        j = np.flatnonzero(np.isclose(self.levels, beta, atol=5e-5))
        if j.size == 0:
            raise KeyError(f"level {beta} not traced; have {list(self.levels)}")
        return int(j[0])

    def xi_of(self, beta: float) -> np.ndarray:
        return self.xi[:, self.level_index(beta)]


def level_set(u: Field, beta: float):
    """Rightmost downward crossing of ``beta``, linearly interpolated.

    Returns ``None`` when no cell pair ``u_i >= beta > u_{i+1}`` exists.
    """
    v = u.values
    idx = np.flatnonzero((v[:-1] >= beta) & (v[1:] < beta))
    if idx.size == 0:
        return None
    i = idx[-1]
    x = u.grid.centers
    return float(x[i] + (v[i] - beta) / (v[i] - v[i + 1]) * u.grid.dx)


def front_zero(u: Field, threshold: float = 1e-8) -> float:
    """Right edge of the numerical support: last cell with ``u > threshold``, plus dx/2."""
    idx = np.flatnonzero(u.values > threshold)
    if idx.size == 0:
        return -u.grid.L
    return float(u.grid.centers[idx[-1]] + 0.5 * u.grid.dx)


def _interp_at(times, series, t):
    k = np.searchsorted(times, t)
    if k < len(times) and math.isclose(times[k], t, rel_tol=0.0, abs_tol=1e-9):
        return float(series[k])
    if k > 0 and math.isclose(times[k - 1], t, rel_tol=0.0, abs_tol=1e-9):
        return float(series[k - 1])
    if t < times[0] or t > times[-1]:
        raise ValueError(f"time {t} outside sampled range [{times[0]}, {times[-1]}]")
    warnings.warn(f"t={t} not sampled, interpolating", InterpolatedSampleWarning, stacklevel=3)
    return float(np.interp(t, times, series))


def propagation_speed(trace: LevelSetTrace, beta: float, t1: float, t2: float) -> float:
    """Mean speed of level ``beta`` between two sample times."""
    if not t1 < t2:
        raise ValueError("need t1 < t2")
    xi = trace.xi_of(beta)
    a = _interp_at(trace.times, xi, t1)
    b = _interp_at(trace.times, xi, t2)
    return (b - a) / (t2 - t1)


# -- separatrix -----------------------------------------------------------------

def separatrix_speed(u: Field, h: float, params: ModelParams) -> float:
    """``(chi/sigma) int_0^inf rho(y) u(h - y) dy`` for piecewise-constant ``u``.

    This is ``-chi (rho_x * u)(h)`` for a density vanishing to the right of
    ``h``; it only sees mass behind the separatrix, so numerical smearing ahead
    of the front cannot stall it.
    """
    s, chi = params.sigma, params.chi
    f = u.grid.faces
    left = f[:-1]
    m = left < h
    if not m.any():
        return 0.0
    right = np.minimum(f[1:][m], h)
    w = np.exp((right - h) / s) - np.exp((left[m] - h) / s)
    return chi / (2.0 * s) * float(np.dot(w, u.values[m]))


def _gradient_speed(v_faces: np.ndarray, grid: Grid1D, h: float) -> float:
    return float(np.interp(h, grid.faces, v_faces))


class Separatrix:
    """Characteristic issued from ``h0``, advanced with the PDE steps.

    ``mode='kernel'`` (default) uses :func:`separatrix_speed`; ``mode='gradient'``
    interpolates the scheme's face velocities.  The gradient form is the
    literal characteristic ODE but is unstable once the upwind smear puts the
    discrete front ahead of ``h``: characteristics behind a sharp front move
    slower than it.  Time integration is the explicit midpoint rule with the
    velocity field linearly interpolated in time across the step.
    """

    def __init__(self, h0: float, params: ModelParams, grid: Grid1D, mode: str = "kernel"):
        if mode not in ("kernel", "gradient"):
            raise ValueError(f"unknown separatrix mode {mode!r}")
        self.h = float(h0)
        self.params = params
        self.grid = grid
        self.mode = mode
        self.last_speed = 0.0
        self._check()

    def _check(self):
        if not -self.grid.L <= self.h <= self.grid.L:
            raise DomainExitError(f"separatrix at {self.h:.6g} left [-{self.grid.L}, {self.grid.L}]")

    def _speed(self, u: Field, v: np.ndarray | None, h: float) -> float:
        if self.mode == "kernel":
            return separatrix_speed(u, h, self.params)
        return _gradient_speed(v, self.grid, h)

    def advance(self, u_old: Field, u_new: Field, dt: float,
                v_old: np.ndarray | None = None, v_new: np.ndarray | None = None) -> float:
        k1 = self._speed(u_old, v_old, self.h)
        hm = self.h + 0.5 * dt * k1
        k2 = 0.5 * (self._speed(u_old, v_old, hm) + self._speed(u_new, v_new, hm))
        self.h += dt * k2
        self.last_speed = k2
        self._check()
        return self.h


def track_separatrix(states, params: ModelParams, h0: float, mode: str = "kernel"):
    """Integrate the separatrix along a sequence of consecutive scheme states.

    ``states`` yields objects with ``u`` (Field) and ``v`` (face velocities).
    Returns ``(times, h, speeds)``.
    """
    it = iter(states)
    prev = next(it)
    sep = Separatrix(h0, params, prev.u.grid, mode)
    times, hs, speeds = [prev.u.time], [sep.h], [np.nan]
    for st in it:
        dt = st.u.time - prev.u.time
        sep.advance(prev.u, st.u, dt, getattr(prev, "v", None), getattr(st, "v", None))
        times.append(st.u.time)
        hs.append(sep.h)
        speeds.append(sep.last_speed)
        prev = st
    return np.array(times), np.array(hs), np.array(speeds)


def jump_height(u: Field, front: float, K: int = 3):
    """Max of ``u`` over the ``K`` cells immediately left of ``front``.

    ``None`` when ``front`` sits on the domain boundary (no cells on one side).
    """
    g = u.grid
    if front <= -g.L + 0.5 * g.dx or front >= g.L:
        return None
    idx = np.flatnonzero(g.centers < front)
    if idx.size == 0:
        return None
    return float(u.values[idx[-K:]].max())


@dataclass(frozen=True)
class GapFit:
    rate: float
    intercept: float
    residual: float
    t_window: tuple
    truncated: bool


def fit_log_rate(times, gap, window: tuple | None = None, floor: float = 0.0) -> GapFit:
    """Least-squares slope of ``log(gap)`` against ``t``.

    Only the first contiguous run of samples with ``gap > floor`` is used;
    later samples (gap no longer resolved) are dropped and ``truncated`` is set.
    """
    t = np.asarray(times, float)
    g = np.asarray(gap, float)
    if window is not None:
        m = (t >= window[0]) & (t <= window[1])
        t, g = t[m], g[m]
    good = np.isfinite(g) & (g > floor)
    ok = np.flatnonzero(good)
    if ok.size < 2:
        raise ValueError("fewer than two resolved gap samples")
    start = ok[0]
    stop = start
    while stop < g.size and good[stop]:
        stop += 1
    truncated = stop < g.size or start > 0
    t, g = t[start:stop], g[start:stop]
    if t.size < 2:
        raise ValueError("fewer than two resolved gap samples")
    y = np.log(g)
    A = np.vstack([t, np.ones_like(t)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    res = float(np.sqrt(np.mean((A @ coef - y) ** 2)))
    return GapFit(float(coef[0]), float(coef[1]), res, (float(t[0]), float(t[-1])), bool(truncated))


def gap_decay(trace: LevelSetTrace, beta: float, window: tuple | None = None) -> GapFit:
    """Exponential rate of the gap ``h*(t) - xi(t, beta)``; resolution floor one cell."""
    gap = trace.separatrix - trace.xi_of(beta)
    return fit_log_rate(trace.times, gap, window, floor=trace.dx)


def smooth_speed_check(profile) -> tuple[bool, float]:
    """Check ``-chi P'(z) < c`` at every node; returns (holds, min margin ``c + chi P'``).

    ``profile`` needs ``c``, ``Pprime`` and ``chi`` attributes.
    """
    margin = profile.c + profile.chi * np.asarray(profile.Pprime)
    m = float(np.min(margin))
    return bool(m > 0.0), m


def levelset_excess(trace: LevelSetTrace, beta: float) -> float:
    """Largest ``xi(t, beta) - h*(t)`` over the trace (NaN samples skipped)."""
    d = trace.xi_of(beta) - trace.separatrix
    d = d[np.isfinite(d)]
    return float(d.max()) if d.size else float("nan")


def aligned_sup_distance(u: Field, ref: Field, beta: float = 0.5, exclude: int = 0) -> float:
    """Sup-distance between ``u`` and ``ref`` after shifting ``ref`` so the level-``beta`` fronts coincide.

    The shifted reference is linearly interpolated; only cells whose preimage
    lies inside the reference grid count.  ``exclude`` drops that many cells on
    each side of the front, where upwind smearing of a jump dominates.
    """
    xu, xr = level_set(u, beta), level_set(ref, beta)
    if xu is None or xr is None:
        raise ValueError(f"level {beta} missing in one of the fields")
    x = u.grid.centers
    xs = x - (xu - xr)
    rx = ref.grid.centers
    m = (xs >= rx[0]) & (xs <= rx[-1])
    if exclude:
        m &= np.abs(x - xu) > exclude * u.grid.dx
    d = np.abs(u.values[m] - np.interp(xs[m], rx, ref.values))
    return float(d.max())
