"""Sharp traveling wave: profile operator, fixed-point iteration, wave speed.

A profile is a pair of arrays ``(z, U)`` on a uniform grid of ``[-Z, 0]``
(``z[-1] == 0``), extended by 1 to the left of ``-Z`` and by 0 for ``z >= 0``.  The operator maps ``U`` to the profile ``V`` solving

    V' = V (1 + chi_hat P - (1 + chi_hat) V) / (chi (P'(0) - P'(z))),
    V(0-) = (1 + chi_hat P(0)) / (1 + chi_hat),

with ``P = rho * U``.  The denominator vanishes at ``z = 0``; integration
starts from the exact boundary value and the exact limiting slope there.
A second route integrates the same map along the characteristic variable
``tau`` and is used as a cross-check.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson, solve_ivp
from scipy.interpolate import CubicSpline
from scipy.optimize import bisect

from .elliptic import PressurePair, convolve_halfline
from .model import InvalidParameterError, ModelParams, norm_eta

__all__ = [
    "WaveProfile",
    "Admissibility",
    "SingularityError",
    "FixedPointError",
    "ConsistencyError",
    "AssumptionWarning",
    "OperatorOutput",
    "wave_grid",
    "is_admissible",
    "project_admissible",
    "apply_T_ode",
    "apply_T_tau",
    "upsilon_along",
    "fixed_point",
    "wave_speed",
    "f_appendix",
    "find_chibar",
    "porous_medium_profile",
]


class SingularityError(ArithmeticError):
    """The profile ODE denominator vanished away from ``z = 0``."""


class FixedPointError(RuntimeError):
    """Iteration did not reach the tolerance; ``history`` holds the residuals."""

    def __init__(self, msg: str, history):
        super().__init__(msg)
        self.history = list(history)


class ConsistencyError(RuntimeError):
    """Two independent evaluations of the same quantity disagree."""


class AssumptionWarning(UserWarning):
    """``chi_hat`` is at or above the threshold where the theory applies."""


@dataclass(frozen=True)
class Admissibility:
    ok: bool
    index: int | None = None
    reason: str = ""

    def __bool__(self):
        return self.ok


@dataclass(frozen=True)
class OperatorOutput:
    """Image ``V`` of a profile together with the pressure of the *input*."""

    V: np.ndarray
    pressure: PressurePair


@dataclass(frozen=True)
class WaveProfile:
    z: np.ndarray
    U: np.ndarray
    P: np.ndarray
    Pprime: np.ndarray
    c: float
    U0minus: float
    iterations: int
    residual_eta: float
    chi: float
    sigma: float
    chi_hat: float
    residual_sup: float = float("nan")
    projection: float = 0.0
    history: tuple = field(default=(), repr=False)

    @property
    def dz(self) -> float:
        return float(self.z[1] - self.z[0])

    @property
    def Pprime0(self) -> float:
        return -self.c / self.chi


def wave_grid(dz: float, Z: float) -> np.ndarray:
    """Uniform nodes on ``[-Z, 0]`` with spacing ``dz`` (Z rounded to a multiple of dz)."""
    if not dz > 0 or not Z > 0:
        raise InvalidParameterError("dz and Z must be positive")
    n = int(round(Z / dz))
    if n < 4:
        raise InvalidParameterError("need at least 4 panels")
    return dz * (np.arange(n + 1) - n)


# -- admissible set ---------------------------------------------------------------

def is_admissible(U, chi_hat: float, mono_tol: float = 1e-12, bound_tol: float = 1e-12) -> Admissibility:
    """Bounds ``[2/(2+chi_hat), 1]`` and monotone nonincrease, first violation located."""
    U = np.asarray(U, float)
    lo = 2.0 / (2.0 + chi_hat)
    bad = np.flatnonzero((U < lo - bound_tol) | (U > 1.0 + bound_tol) | ~np.isfinite(U))
    if bad.size:
        i = int(bad[0])
        return Admissibility(False, i, f"U[{i}]={U[i]:.17g} outside [{lo:.17g}, 1]")
    inc = np.flatnonzero(np.diff(U) > mono_tol)
    if inc.size:
        i = int(inc[0])
        return Admissibility(False, i, f"increase U[{i}] -> U[{i + 1}] by {U[i + 1] - U[i]:.3g}")
    return Admissibility(True)


def project_admissible(U, chi_hat: float) -> tuple[np.ndarray, float]:
    """Clip to the bounds, then take the running max from the right.  Returns (U, distance)."""
    U = np.asarray(U, float)
    lo = 2.0 / (2.0 + chi_hat)
    W = np.clip(U, lo, 1.0)
    W = np.maximum.accumulate(W[::-1])[::-1]
    return W, float(np.max(np.abs(W - U)))


# -- pressure on the refined grid ---------------------------------------------------

def _refine(U: np.ndarray, tail: float) -> np.ndarray:
    """Insert cubic-interpolated midpoints (one-sided next to ``z = 0``)."""
    n = U.size - 1
    Ug = np.concatenate(([tail], U))  # ghost node left of -Z
    mid = np.empty(n)
    # midpoint of [z_{i-1}, z_i] from z_{i-2}..z_{i+1}
    mid[:n - 1] = (-Ug[0:n - 1] + 9.0 * Ug[1:n] + 9.0 * Ug[2:n + 1] - Ug[3:n + 2]) / 16.0
    mid[n - 1] = (U[n - 3] - 5.0 * U[n - 2] + 15.0 * U[n - 1] + 5.0 * U[n]) / 16.0
    out = np.empty(2 * n + 1)
    out[0::2] = U
    out[1::2] = mid
    return out


def _fine_pressure(z, U, sigma, tail):
    h = float(z[1] - z[0])
    zf = 0.5 * h * (np.arange(2 * (z.size - 1) + 1) - 2 * (z.size - 1))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        pp = convolve_halfline(zf, _refine(U, tail), sigma, tail_value=tail)
    return zf, pp


def _check_profile(z, U):
    z = np.asarray(z, float)
    U = np.asarray(U, float)
    if z.shape != U.shape or z.size < 5:
        raise InvalidParameterError("z and U must match and have at least 5 nodes")
    if z[-1] != 0.0:
        raise InvalidParameterError("profile grid must end at z = 0")
    return z, U


# -- operator, ODE route ------------------------------------------------------------

class _Rhs:
    """Right-hand side of the profile ODE with ``P, P'`` known on a fine grid."""

    def __init__(self, zf, P, Pp, Pp0, params: ModelParams):
        self.zf, self.P, self.Pp, self.Pp0 = zf, P, Pp, Pp0
        self.h = float(zf[1] - zf[0])
        self.chi = params.chi
        self.ch = params.chi_hat
        self.N = zf.size - 1
        self.eps = 1e-14 * max(1.0, abs(params.chi * Pp0))
        self.Pl, self.Ppl = P.tolist(), Pp.tolist()  # scalar access is faster on lists

    def node(self, k: int, v: float) -> float:
        den = self.chi * (self.Pp0 - self.Pp[k])
        if abs(den) < self.eps:
            raise SingularityError(f"vanishing denominator at z={self.zf[k]:.6g}")
        return v * (1.0 + self.ch * self.P[k] - (1.0 + self.ch) * v) / den

    def at(self, z: float, v: float) -> float:
        # local cubic through four fine nodes; exact at z = 0, so the
        # small denominator near the singular point keeps relative accuracy
        j = min(max(int(math.floor((z - self.zf[0]) / self.h)) - 1, 0), self.N - 3)
        t = (z - self.zf[j]) / self.h
        w0 = -(t - 1.0) * (t - 2.0) * (t - 3.0) / 6.0
        w1 = t * (t - 2.0) * (t - 3.0) / 2.0
        w2 = -t * (t - 1.0) * (t - 3.0) / 2.0
        w3 = t * (t - 1.0) * (t - 2.0) / 6.0
        P, Pp = self.Pl, self.Ppl
        Pz = w0 * P[j] + w1 * P[j + 1] + w2 * P[j + 2] + w3 * P[j + 3]
        Ppz = w0 * Pp[j] + w1 * Pp[j + 1] + w2 * Pp[j + 2] + w3 * Pp[j + 3]
        den = self.chi * (self.Pp0 - Ppz)
        if den == 0.0:  # only z = 0 itself; the seed never lands there
            raise SingularityError(f"vanishing denominator at z={z:.6g}")
        return v * (1.0 + self.ch * Pz - (1.0 + self.ch) * v) / den


def _rk4(f, z, v, h):
    k1 = f(z, v)
    k2 = f(z + 0.5 * h, v + 0.5 * h * k1)
    k3 = f(z + 0.5 * h, v + 0.5 * h * k2)
    k4 = f(z + h, v + h * k3)
    return v + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def apply_T_ode(z, U, params: ModelParams, tail: float = 1.0, layer: float = 0.5) -> OperatorOutput:
    """Image of ``U`` under the profile operator, by classical RK4 from ``0-`` to ``-Z``.

    Next to ``z = 0`` the linearised equation has decay rate ``a/|z|`` with
    ``a = (1+chi_hat) V0 / (chi |P''(0-)|)``, too stiff for a fixed step of
    ``dz``.  The layer ``|z| < max(layer sigma, (2a + 1) dz)`` is covered with
    geometrically growing substeps (``h <= |z|/(16 a)``), seeded a tiny
    distance from 0 by the limiting slope.  Keeping the layer width fixed in
    ``z`` preserves fourth-order convergence in ``dz``.
    """
    z, U = _check_profile(z, U)
    n = z.size - 1
    dz = float(z[1] - z[0])
    sig, chi, ch = params.sigma, params.chi, params.chi_hat
    zf, pp = _fine_pressure(z, U, sig, tail)
    P, Pp, Pp0 = pp.P, pp.Pprime, pp.Pprime0
    rhs = _Rhs(zf, P, Pp, Pp0, params)

    V = np.empty(n + 1)
    P0 = P[-1]
    V0 = (1.0 + ch * P0) / (1.0 + ch)
    V[n] = V0
    slope = Pp0 * (1.0 + ch * P0) / ((1.0 + ch) * (1.0 + ch * U[-1]))

    curv = abs(P0 - U[-1]) / sig**2          # |P''(0-)|
    a = (1.0 + ch) * V0 / (chi * curv) if curv > 0 else 1.0
    a = max(a, 1.0)
    # the layer width is fixed in z so the switch point does not move with dz
    K = min(n, max(int(math.ceil(2.0 * a)) + 1, int(math.ceil(layer * sig / dz))))

    s = dz * 1e-3
    v = V0 - s * slope
    for j in range(1, K + 1):
        target = j * dz
        while s < target:
            h = min(s / (16.0 * a), dz, target - s)
            if target - s - h < 1e-3 * h:
                h = target - s
            v = _rk4(rhs.at, -s, v, -h)
            s = target if h == target - s else s + h
        V[n - j] = v

    # regular part: RK4 stages sit on the half-step grid
    node = rhs.node
    for i in range(n - K, 0, -1):
        k = 2 * i
        vi = V[i]
        k1 = node(k, vi)
        k2 = node(k - 1, vi - 0.5 * dz * k1)
        k3 = node(k - 1, vi - 0.5 * dz * k2)
        k4 = node(k - 2, vi - dz * k3)
        V[i - 1] = vi - dz / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    pair = PressurePair(P[0::2].copy(), Pp[0::2].copy(), Pp0)
    return OperatorOutput(V, pair)


# -- operator, characteristic route ---------------------------------------------------

def _w_rhs(chi_hat: float, P: float, w: float) -> float:
    # reciprocal of the profile equation W' = W (1 + chi_hat P - (1 + chi_hat) W)
    return 1.0 + chi_hat - (1.0 + chi_hat * P) * w


def upsilon_along(P_of_t, t0: float, t1: float, t_eval, chi_hat: float, P_start: float,
                  rtol: float = 1e-12, atol: float = 1e-14):
    """Solve ``W' = W (1 + chi_hat P(t) - (1 + chi_hat) W)`` from its rest value at ``t0``.

    ``W(t0) = (1 + chi_hat P_start)/(1 + chi_hat)`` stands in for the value at
    ``t = -inf``.  The reciprocal ``1/W`` obeys a linear equation, which is
    what gets integrated.  Returns ``W`` at ``t_eval``.
    """
    w0 = (1.0 + chi_hat) / (1.0 + chi_hat * P_start)
    sol = solve_ivp(lambda t, w: _w_rhs(chi_hat, P_of_t(t), w), (t0, t1), [w0], method="DOP853",
                    t_eval=np.atleast_1d(t_eval), rtol=rtol, atol=atol)
    if not sol.success:
        raise SingularityError(sol.message)
    return 1.0 / sol.y[0]


def apply_T_tau(z, U, params: ModelParams, tail: float = 1.0, tau_min: float = 1e-10,
                rtol: float = 1e-12) -> np.ndarray:
    """Same map as :func:`apply_T_ode`, integrated along ``tau``.

    ``tau' = chi (P'(0) - P'(tau))`` with ``tau(0) = -1`` is integrated
    backward until ``tau`` is within ``tau_min`` of 0.  From there ``tau`` and
    the reciprocal profile run forward together in ``t``, the profile starting
    from its asymptotic value, and the result is sampled where ``tau(t)`` hits
    each grid node (Newton on the dense output).
    """
    z, U = _check_profile(z, U)
    n = z.size - 1
    Z = -z[0]
    chi, ch = params.chi, params.chi_hat
    zf, pp = _fine_pressure(z, U, params.sigma, tail)
    Pp0 = pp.Pprime0
    Ps = CubicSpline(zf, pp.P)
    Pps = CubicSpline(zf, pp.Pprime)

    def dtau(t, tau):
        return chi * (Pp0 - Pps(np.clip(tau, -Z, 0.0)))

    def joint(t, y):
        tau = min(max(y[0], -Z), 0.0)
        return [chi * (Pp0 - float(Pps(tau))), _w_rhs(ch, float(Ps(tau)), y[1])]

    near0 = lambda t, y: y[0] + tau_min
    near0.terminal = True
    back = solve_ivp(lambda t, y: dtau(t, y[0]), (0.0, -1e4), [-1.0], method="DOP853",
                     events=near0, rtol=rtol, atol=tau_min * 1e-3)
    if back.status != 1:
        raise SingularityError("tau did not approach 0 backward in t")
    t_start = float(back.t_events[0][0])

    edge = lambda t, y: y[0] + Z
    edge.terminal = True
    w0 = (1.0 + ch) / (1.0 + ch * pp.P[-1])
    fwd = solve_ivp(joint, (t_start, 1e4), [-tau_min, w0], method="DOP853", events=edge,
                    dense_output=True, rtol=rtol, atol=[tau_min * 1e-3, 1e-14])
    if fwd.status != 1:
        raise SingularityError("tau did not reach -Z forward in t")
    t_end = float(fwd.t_events[0][0])

    # invert tau(t) at the interior nodes: interpolated guess, then Newton
    targets = z[:n]
    tk = np.interp(targets, fwd.y[0][::-1], fwd.t[::-1])
    for _ in range(6):
        tau_k = fwd.sol(tk)[0]
        tk = np.clip(tk - (tau_k - targets) / dtau(tk, tau_k), t_start, t_end)
    V = np.empty(n + 1)
    V[:n] = 1.0 / fwd.sol(tk)[1]
    V[n] = 1.0 / w0
    return V


# -- fixed point ---------------------------------------------------------------------

def fixed_point(params: ModelParams, dz: float = 1e-2, Z: float | None = None, tol: float = 1e-10,
                max_iter: int = 200, eta: float | None = None, proj_tol: float = 1e-8) -> WaveProfile:
    """Iterate the profile operator from ``U = 1`` until the weighted residual is below ``tol``."""
    if not params.assumption3_ok:
        warnings.warn(f"chi_hat={params.chi_hat:.6g} is not below the threshold "
                      f"{_chibar_cached():.6g}; convergence is not guaranteed",
                      AssumptionWarning, stacklevel=2)
    sig = params.sigma
    Z = 40.0 * sig if Z is None else Z
    eta = 0.5 / sig if eta is None else eta
    z = wave_grid(dz, Z)
    U = np.ones_like(z)
    history = []
    proj_max = 0.0
    for it in range(1, max_iter + 1):
        V = apply_T_ode(z, U, params).V
        adm = is_admissible(V, params.chi_hat, mono_tol=proj_tol, bound_tol=proj_tol)
        if not adm:
            V, d = project_admissible(V, params.chi_hat)
            proj_max = max(proj_max, d)
        res = norm_eta(z, V - U, eta, sig)
        sup = float(np.max(np.abs(V - U)))
        history.append(res)
        U = V
        if res < tol:
            break
    else:
        raise FixedPointError(f"no convergence after {max_iter} iterations, "
                              f"last residual {history[-1]:.3e}", history)

    pp = _fine_pressure(z, U, sig, 1.0)[1]
    prof = WaveProfile(
        z=z, U=U, P=pp.P[0::2].copy(), Pprime=pp.Pprime[0::2].copy(), c=-params.chi * pp.Pprime0,
        U0minus=float(U[-1]), iterations=it, residual_eta=res, chi=params.chi, sigma=sig,
        chi_hat=params.chi_hat, residual_sup=sup, projection=proj_max, history=tuple(history),
    )
    _assert_invariants(prof, params)
    return prof


def _assert_invariants(prof: WaveProfile, params: ModelParams):
    lo, hi = params.speed_interval
    if not lo < prof.c < hi:
        raise ConsistencyError(f"wave speed {prof.c} outside ({lo}, {hi})")
    ch = params.chi_hat
    expect = (1.0 + ch * prof.P[-1]) / (1.0 + ch)
    if abs(prof.U0minus - expect) > 1e-8:
        raise ConsistencyError(f"U(0-)={prof.U0minus} but boundary formula gives {expect}")
    adm = is_admissible(prof.U, ch, mono_tol=1e-12, bound_tol=1e-12)
    if not adm:
        raise ConsistencyError(f"converged profile not admissible: {adm.reason}")


def wave_speed(profile: WaveProfile, tol: float = 1e-10) -> tuple[float, float]:
    """``-chi P'(0)`` and an independent Simpson evaluation of the speed integral.

    The quadrature runs on the profile grid refined by cubic midpoints; the
    part left of ``-Z`` is added in closed form with tail value 1.
    """
    z, U = profile.z, profile.U
    s, chi = profile.sigma, profile.chi
    c = profile.c
    zf = 0.5 * profile.dz * (np.arange(2 * z.size - 1) - 2 * (z.size - 1))
    Uf = _refine(U, 1.0)
    quad = chi / (2.0 * s**2) * (simpson(np.exp(zf / s) * Uf, x=zf) + s * np.exp(zf[0] / s))
    if abs(c - quad) > tol:
        raise ConsistencyError(f"speed {c!r} vs quadrature {quad!r} differ by {abs(c - quad):.3e}")
    return c, quad


# -- threshold function --------------------------------------------------------------

def f_appendix(x):
    """``ln((2-x)/x) + 2/(2+x) * (x/2 ln(x/2) + 1 - x/2)`` on ``(0, 2)``."""
    xa = np.asarray(x, dtype=float)
    if np.any(~((xa > 0.0) & (xa < 2.0))):
        raise InvalidParameterError("f is defined on (0, 2) only")
    h = 0.5 * xa
    r = np.log((2.0 - xa) / xa) + 2.0 / (2.0 + xa) * (h * np.log(h) + 1.0 - h)
    return float(r) if r.ndim == 0 else r


def find_chibar(tol: float = 1e-12) -> float:
    """Unique root of :func:`f_appendix`, by bisection (f is strictly decreasing)."""
    return float(bisect(f_appendix, 1e-6, 2.0 - 1e-6, xtol=tol, rtol=4 * np.finfo(float).eps))


def _chibar_cached() -> float:
    from .model import chibar

    return chibar()


def porous_medium_profile(z):
    """``max(0, 1 - exp(z/sqrt 2))``, the explicit wave of the zero-range limit."""
    r = np.maximum(0.0, -np.expm1(np.asarray(z, dtype=float) / math.sqrt(2.0)))
    return float(r) if r.ndim == 0 else r
