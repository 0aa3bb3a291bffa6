"""Domain types shared by the solvers: parameters, grids, fields, initial data.

Everything here is immutable once built. The kernel is the exponential
resolvent kernel of ``(I - sigma^2 d_xx)^{-1}`` on the line.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

__all__ = [
    "InvalidParameterError",
    "ModelParams",
    "Grid1D",
    "Field",
    "InitialCondition",
    "make_params",
    "eval_ic",
    "kernel_rho",
    "norm_eta",
    "chibar",
]


class InvalidParameterError(ValueError):
    """A model or numerical parameter is outside its admissible range."""


@lru_cache(maxsize=1)
def chibar() -> float:
    """Root of the threshold function ``f``; upper limit for ``chi_hat``."""
    from .travelingwave import find_chibar

    return find_chibar()


@dataclass(frozen=True)
class ModelParams:
    """Kernel range ``sigma`` and sensing coefficient ``chi``.

    ``chi_hat = chi / sigma**2`` controls the jump height ``2/(2+chi_hat)``
    and the admissible wave-speed interval.
    """

    sigma: float
    chi: float
    chi_hat: float
    assumption3_ok: bool

    @property
    def speed_interval(self) -> tuple[float, float]:
        s, h = self.sigma, self.chi_hat
        return s * h / (2.0 + h), s * h / 2.0

    @property
    def jump_bound(self) -> float:
        return 2.0 / (2.0 + self.chi_hat)

    @property
    def max_speed(self) -> float:
        return self.chi / (2.0 * self.sigma)


def make_params(sigma: float, chi: float) -> ModelParams:
    if not (sigma > 0 and math.isfinite(sigma)):
        raise InvalidParameterError(f"sigma must be positive, got {sigma!r}")
    if not (chi > 0 and math.isfinite(chi)):
        raise InvalidParameterError(f"chi must be positive, got {chi!r}")
    chi_hat = chi / sigma**2
    return ModelParams(float(sigma), float(chi), chi_hat, bool(chi_hat < chibar()))


@dataclass(frozen=True)
class Grid1D:
    """Uniform cell-centred grid on ``[-L, L]`` with ``M`` cells."""

    L: float
    M: int

    def __post_init__(self):
        if not self.L > 0:
            raise InvalidParameterError(f"L must be positive, got {self.L!r}")
        if int(self.M) != self.M or self.M < 1:
            raise InvalidParameterError(f"M must be a positive integer, got {self.M!r}")

    @property
    def dx(self) -> float:
        return 2.0 * self.L / self.M

    @property
    def centers(self) -> np.ndarray:
        # symmetric construction keeps x_i = -x_{M+1-i} exactly
        i = np.arange(self.M)
        return (2.0 * i + 1.0 - self.M) * (self.L / self.M)

    @property
    def faces(self) -> np.ndarray:
        return (2.0 * np.arange(self.M + 1) - self.M) * (self.L / self.M)


@dataclass(frozen=True)
class Field:
    grid: Grid1D
    values: np.ndarray = field(repr=False)
    time: float = 0.0

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.M,):
            raise InvalidParameterError(
                f"field has shape {v.shape}, grid expects ({self.grid.M},)"
            )
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def x(self) -> np.ndarray:
        return self.grid.centers

    def mass(self) -> float:
        return float(self.values.sum() * self.grid.dx)


_IC_KINDS = ("polynomial", "ramp", "plateau_ramp", "sigmoid", "constant", "profile")


@dataclass(frozen=True)
class InitialCondition:
    """Descriptor of an initial profile.

    kinds
        ``polynomial``   ``(x-x0)^2/(L+x0)^2`` on ``[-L, x0]``, zero after.
        ``ramp``         ``-(x+15)/5`` on ``[-20, -15]``  (phi_1).
        ``plateau_ramp`` 1 on ``[-20,-17.5]``, ``-(x+15)/10`` on ``[-17.5,-15]`` (phi_2).
        ``sigmoid``      ``1/(1+exp(alpha (x-x0)))``.
        ``constant``     ``value`` everywhere.
        ``profile``      tabulated ``(z, U)`` placed with its edge at ``x0``;
                         left of the table ``U[0]``, right of 0 zero.
    """

    kind: str
    x0: float = -15.0
    L: float = 20.0
    exponent: float = 2.0
    alpha: float = 5.0
    value: float = 0.0
    table: tuple | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in _IC_KINDS:
            raise InvalidParameterError(
                f"unknown initial condition {self.kind!r}; expected one of {_IC_KINDS}"
            )
        if self.kind == "polynomial" and not self.x0 > -self.L:
            raise InvalidParameterError("polynomial IC needs x0 > -L")
        if self.kind == "constant" and not 0.0 <= self.value <= 1.0:
            raise InvalidParameterError("constant IC must lie in [0, 1]")
        if self.kind == "profile" and self.table is None:
            raise InvalidParameterError("profile IC needs a (z, U) table")

    @classmethod
    def from_profile(cls, z, U, x0: float = 0.0) -> "InitialCondition":
        return cls("profile", x0=x0, table=(np.asarray(z, float), np.asarray(U, float)))


def eval_ic(ic: InitialCondition, x):
    """Evaluate the initial profile at ``x`` (scalar or array)."""
    xa = np.asarray(x, dtype=float)
    k = ic.kind
    if k == "polynomial":
        w = ic.L + ic.x0
        out = np.where(xa <= ic.x0, (np.abs(xa - ic.x0) / w) ** ic.exponent, 0.0)
    elif k == "ramp":
        out = np.where((xa >= -20.0) & (xa <= -15.0), -(xa + 15.0) / 5.0, 0.0)
    elif k == "plateau_ramp":
        out = np.where(xa <= -17.5, 1.0, np.where(xa <= -15.0, -(xa + 15.0) / 10.0, 0.0))
    elif k == "sigmoid":
        # 1/(1+e^s) written to avoid overflow for large |s|
        s = ic.alpha * (xa - ic.x0)
        out = np.where(s > 0, np.exp(-np.abs(s)) / (1.0 + np.exp(-np.abs(s))),
                       1.0 / (1.0 + np.exp(-np.abs(s))))
    elif k == "constant":
        out = np.full_like(xa, ic.value)
    else:
        z, U = ic.table
        zz = xa - ic.x0
        out = np.where(zz < 0.0, np.interp(zz, z, U, left=U[0], right=U[-1]), 0.0)
    out = np.clip(out, 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


def kernel_rho(x, sigma: float):
    """``exp(-|x|/sigma) / (2 sigma)``, the Green's function of ``I - sigma^2 d_xx``."""
    r = np.exp(-np.abs(np.asarray(x, dtype=float)) / sigma) / (2.0 * sigma)
    return float(r) if r.ndim == 0 else r


def norm_eta(z, values, eta: float, sigma: float = 1.0) -> float:
    """Weighted sup-norm ``sup sqrt(-z) e^{eta z} |values(z)|`` over ``z < 0``.

    Nodes at ``z >= 0`` (where the weight vanishes) are ignored. ``eta`` must
    lie in ``(0, 1/sigma)``.
    """
    if not 0.0 < eta < 1.0 / sigma:
        raise InvalidParameterError(f"eta must lie in (0, 1/sigma) = (0, {1.0 / sigma}), got {eta}")
    z = np.asarray(z, dtype=float)
    v = np.asarray(values, dtype=float)
    m = z < 0.0
    if not m.any():
        return 0.0
    w = np.sqrt(-z[m]) * np.exp(eta * z[m])
    return float(np.max(w * np.abs(v[m])))
