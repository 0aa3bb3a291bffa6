"""Pressure from density.

Two routes to ``p = (I - sigma^2 d_xx)^{-1} u``:

* :func:`solve_pressure_neumann` -- discrete three-point resolvent on the
  bounded interval with ghost-cell Neumann closure, used by the PDE stepper.
* :func:`convolve_halfline` -- the exponential kernel convolved with a profile
  supported on a half-line, used by the traveling-wave solver.  Returns the
  pressure and its derivative, both needed to fourth order because ``P'(0)``
  fixes the wave speed.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import solve_banded
from scipy.signal import lfilter

from .model import Field, InvalidParameterError, ModelParams

__all__ = [
    "PressurePair",
    "TruncationWarning",
    "neumann_matrix",
    "solve_pressure_neumann",
    "staggered_velocity",
    "convolve_halfline",
]


class TruncationWarning(UserWarning):
    """Half-line domain too short for the declared tail tolerance."""


@dataclass(frozen=True)
class PressurePair:
    P: np.ndarray
    Pprime: np.ndarray
    Pprime0: float


@lru_cache(maxsize=32)
def _banded(M: int, r: float) -> np.ndarray:
    ab = np.empty((3, M))
    ab[0, 0] = 0.0
    ab[0, 1:] = -r
    ab[2, -1] = 0.0
    ab[2, :-1] = -r
    ab[1, :] = 1.0 + 2.0 * r
    ab[1, 0] = ab[1, -1] = 1.0 + r
    ab.setflags(write=False)
    return ab


def neumann_matrix(M: int, dx: float, sigma: float) -> np.ndarray:
    """Dense ``I - sigma^2 A`` (ghost-cell Neumann).  For testing and small M."""
    r = sigma**2 / dx**2
    K = np.diag(np.full(M, 1.0 + 2.0 * r)) - r * (np.eye(M, k=1) + np.eye(M, k=-1))
    K[0, 0] = K[-1, -1] = 1.0 + r
    return K


def solve_pressure_neumann(u: Field, params: ModelParams) -> Field:
    """Solve ``(I - sigma^2 A) p = u`` with ``p_0 = p_1`` and ``p_{M+1} = p_M``.

    The matrix is symmetric and strictly diagonally dominant, so ``p`` obeys
    the discrete maximum principle ``min(u) <= p <= max(u)``.
    """
    M = u.grid.M
    if M < 2:
        raise InvalidParameterError("Neumann resolvent needs at least 2 cells")
    r = params.sigma**2 / u.grid.dx**2
    p = solve_banded((1, 1), _banded(M, r), u.values, check_finite=False)
    return Field(u.grid, p, u.time)


def staggered_velocity(p: Field, chi: float) -> np.ndarray:
    """Face velocities ``v_{i+1/2} = -chi (p_{i+1} - p_i)/dx``; zero on the two boundary faces."""
    v = np.zeros(p.grid.M + 1)
    v[1:-1] = -chi * np.diff(p.values) / p.grid.dx
    return v


# -- half-line convolution ----------------------------------------------------

_GL_X, _GL_W = np.polynomial.legendre.leggauss(24)


@lru_cache(maxsize=64)
def _panel_weights(h: float, sigma: float):
    """Weights of exact kernel integration of a cubic interpolant over one panel.

    Local coordinate ``s`` in ``[0, h]``; stencil offsets are in units of h.
    Returns (left-sweep centred, left-sweep one-sided, right-sweep centred,
    right-sweep one-sided) weight vectors, each already divided by ``2 sigma``.
    """
    s = 0.5 * h * (_GL_X + 1.0)
    w = 0.5 * h * _GL_W

    def lagrange(offsets):
        nodes = h * np.asarray(offsets, float)
        B = []
        for k, nk in enumerate(nodes):
            b = np.ones_like(s)
            for m, nm in enumerate(nodes):
                if m != k:
                    b *= (s - nm) / (nk - nm)
            B.append(b)
        return np.array(B)

    centred = lagrange((-1, 0, 1, 2))
    onesided = lagrange((-2, -1, 0, 1))
    kl = np.exp((s - h) / sigma) / (2.0 * sigma)
    kr = np.exp(-s / sigma) / (2.0 * sigma)
    return (centred @ (kl * w), onesided @ (kl * w),
            centred @ (kr * w), onesided @ (kr * w))


def convolve_halfline(z, U, sigma: float, tail_value: float | None = None,
                      right_value: float = 0.0, tail_tol: float = 1e-12) -> PressurePair:
    """Convolve ``rho`` with a profile tabulated on a uniform grid ``[-Z, 0]``.

    The profile is extended by ``tail_value`` (default ``U[0]``) to the left of
    ``-Z`` and by ``right_value`` (default 0, the sharp-front case) to the right
    of 0.  Both extensions are integrated in closed form; inside the grid each
    panel integrates a local cubic interpolant of ``U`` exactly against the
    kernel, so ``P`` and ``P'`` are fourth-order accurate.  The two one-sided
    integrals are accumulated by O(N) exponential recursions.

    ``Pprime0`` is the one-sided value at ``0^-``.
    """
    z = np.asarray(z, dtype=float)
    U = np.asarray(U, dtype=float)
    n = z.size - 1
    if n < 3 or U.shape != z.shape:
        raise InvalidParameterError("need matching z, U with at least 4 nodes")
    h = (z[-1] - z[0]) / n
    if not np.allclose(np.diff(z), h, rtol=1e-9, atol=0.0):
        raise InvalidParameterError("z grid must be uniform")
    Z = -z[0]
    tail = U[0] if tail_value is None else float(tail_value)
    if np.exp(-Z / sigma) > tail_tol:
        warnings.warn(
            f"half-line truncated at Z={Z:g}: exp(-Z/sigma)={np.exp(-Z / sigma):.2e} "
            f"exceeds tail tolerance {tail_tol:.0e}", TruncationWarning, stacklevel=2)

    wl_c, wl_o, wr_c, wr_o = _panel_weights(float(h), float(sigma))
    # stencil j-2..j+1 for panel [z_{j-1}, z_j]; ghost node left of -Z carries the tail
    Ug = np.concatenate(([tail], U))
    stencil = np.stack([Ug[0:n], Ug[1:n + 1], Ug[2:n + 2],
                        np.concatenate((Ug[3:n + 2], [0.0]))])
    bl = wl_c @ stencil
    br = wr_c @ stencil
    last = U[n - 3:n + 1]
    # last panel touches the discontinuity at 0: one-sided stencil
    bl[-1] = wl_o @ last
    br[-1] = wr_o @ last

    E = np.exp(-h / sigma)
    IL = np.empty(n + 1)
    IL[0] = 0.5 * tail
    IL[1:] = lfilter([1.0], [1.0, -E], bl, zi=[E * IL[0]])[0]
    IR = np.empty(n + 1)
    IR[n] = 0.5 * right_value
    IR[:n] = lfilter([1.0], [1.0, -E], br[::-1], zi=[E * IR[n]])[0][::-1]

    P = IL + IR
    Pp = (IR - IL) / sigma
    return PressurePair(P, Pp, float(-IL[n] / sigma))
