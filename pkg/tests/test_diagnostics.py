import math
import warnings

import numpy as np
import pytest
from scipy.integrate import quad

from kswave.diagnostics import (
    DomainExitError,
    InterpolatedSampleWarning,
    LevelSetTrace,
    Separatrix,
    aligned_sup_distance,
    fit_log_rate,
    front_zero,
    gap_decay,
    jump_height,
    level_set,
    levelset_excess,
    propagation_speed,
    separatrix_speed,
    smooth_speed_check,
    track_separatrix,
)
from kswave.elliptic import convolve_halfline
from kswave.hyperbolic import initial_state, run_fields
from kswave.model import Field, Grid1D, InitialCondition, eval_ic, make_params
from kswave.travelingwave import porous_medium_profile

P11 = make_params(1.0, 1.0)


def field(fn, L=1.0, M=100):
    g = Grid1D(L, M)
    return Field(g, fn(g.centers))


def test_level_set_linear_profile():
    u = field(lambda x: (1 - x) / 2)
    assert level_set(u, 0.5) == pytest.approx(0.0, abs=1e-12)


def test_level_set_absent_and_rightmost():
    assert level_set(field(np.zeros_like), 0.5) is None
    u = field(lambda x: np.where(x < -0.5, 0.8, np.where(x < 0.0, 0.1, np.where(x < 0.5, 0.6, 0.0))))
    x = level_set(u, 0.3)
    assert 0.45 < x < 0.55


def test_front_zero_examples():
    g = Grid1D(20.0, 2000)
    u = Field(g, eval_ic(InitialCondition("polynomial"), g.centers))
    assert abs(front_zero(u) + 15.0) <= g.dx
    assert front_zero(Field(g, np.zeros(g.M))) == -20.0
    assert front_zero(Field(g, np.ones(g.M))) == pytest.approx(20.0)


def _trace(times, xi):
    t = np.asarray(times, float)
    xi = np.asarray(xi, float).reshape(-1, 1)
    n = t.size
    return LevelSetTrace(t, np.array([0.0]), xi, np.zeros(n), np.zeros(n), np.zeros(n), dx=0.1)


def test_propagation_speed_and_interpolation_flag():
    tr = _trace([0, 1, 2, 3], [1.0, 1.5, 2.0, 2.5])
    assert propagation_speed(tr, 0.0, 1, 3) == pytest.approx(0.5)
    assert propagation_speed(_trace([0, 1, 2], [4, 4, 4]), 0.0, 0, 2) == 0.0
    with pytest.warns(InterpolatedSampleWarning):
        assert propagation_speed(tr, 0.0, 0.5, 3) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        propagation_speed(tr, 0.0, 3, 1)
    with pytest.raises(KeyError):
        tr.xi_of(0.5)


def test_separatrix_speed_full_block():
    # u = 1 on [-L, h): speed = chi/(2 sigma) (1 - e^{-(h+L)/sigma})
    g = Grid1D(10.0, 1000)
    h = 0.0
    u = Field(g, (g.centers < h).astype(float))
    expect = 0.5 * (1 - math.exp(-10.0))
    assert separatrix_speed(u, h, P11) == pytest.approx(expect, rel=1e-12)
    # mid-cell h integrates a partial cell exactly
    h2 = 0.013
    u2 = Field(g, np.ones(g.M))
    assert separatrix_speed(u2, h2, P11) == pytest.approx(0.5 * (1 - math.exp(-(h2 + 10.0))), rel=1e-12)


def test_separatrix_speed_ignores_mass_ahead():
    g = Grid1D(5.0, 500)
    u = Field(g, np.where(g.centers > 1.0, 1.0, 0.0))
    assert separatrix_speed(u, 0.0, P11) == 0.0


def test_separatrix_constant_on_empty_field():
    g = Grid1D(5.0, 100)
    st = initial_state(g, InitialCondition("constant", value=0.0), P11)
    t, h, _ = track_separatrix(run_fields(st, P11, 2.0), P11, 1.0)
    assert np.all(h == 1.0) and t[-1] == pytest.approx(2.0)


def test_separatrix_bounds_and_domain_exit():
    g = Grid1D(5.0, 500)
    st = initial_state(g, InitialCondition("polynomial", x0=-2.0, L=5.0), P11)
    for mode in ("kernel", "gradient"):
        t, h, s = track_separatrix(run_fields(st, P11, 3.0), P11, front_zero(st.u), mode)
        assert np.nanmax(s) <= P11.max_speed + 1e-6
        assert np.all(np.diff(h) >= -1e-12)
    with pytest.raises(DomainExitError):
        Separatrix(6.0, P11, g)
    with pytest.raises(ValueError):
        Separatrix(0.0, P11, g, mode="exact")


def test_jump_height_examples():
    g = Grid1D(1.0, 100)
    assert jump_height(Field(g, np.zeros(100)), 0.0) == 0.0
    assert jump_height(Field(g, np.where(g.centers < 0, 0.8, 0.0)), 0.0) == pytest.approx(0.8)
    assert jump_height(Field(g, np.ones(100)), 1.0) is None
    assert jump_height(Field(g, np.ones(100)), -1.0) is None


def test_fit_log_rate_synthetic():
    t = np.linspace(0, 30, 61)
    fit = fit_log_rate(t, np.exp(-0.1 * t))
    assert fit.rate == pytest.approx(-0.1, abs=1e-6) and not fit.truncated
    assert fit_log_rate(t, np.full_like(t, 3.0)).rate == pytest.approx(0.0, abs=1e-9)


def test_fit_log_rate_truncates_below_floor():
    t = np.arange(10.0)
    gap = np.exp(-0.5 * t)
    fit = fit_log_rate(t, gap, floor=np.exp(-0.5 * 5.5))
    assert fit.truncated and fit.t_window == (0.0, 5.0)
    assert fit.rate == pytest.approx(-0.5)
    with pytest.raises(ValueError):
        fit_log_rate(t, gap, floor=10.0)


def test_gap_decay_and_excess_on_trace():
    t = np.linspace(0, 10, 11)
    tr = LevelSetTrace(t, np.array([0.2]), (1.0 - np.exp(-0.3 * t)).reshape(-1, 1),
                       np.ones(11), np.zeros(11), np.zeros(11), dx=1e-9)
    assert gap_decay(tr, 0.2).rate == pytest.approx(-0.3)
    # xi - h = -e^{-0.3 t}, largest at the last sample
    assert levelset_excess(tr, 0.2) == pytest.approx(-math.exp(-3.0))


def test_smooth_speed_check_trivial():
    class P:
        c, chi, Pprime = 1.0, 1.0, np.zeros(10)

    ok, margin = smooth_speed_check(P)
    assert ok and margin == 1.0


def test_smooth_speed_check_porous_profile():
    # transplanted explicit profile: margin against an independent quadrature of rho_x * U
    s, chi, c = 1.0, 1.0, 1 / math.sqrt(2)
    z = np.linspace(-40, 0, 8001)
    pp = convolve_halfline(z, porous_medium_profile(z), s, tail_value=1.0)

    class Prof:
        pass

    prof = Prof()
    prof.c, prof.chi, prof.Pprime = c, chi, pp.Pprime
    ok, margin = smooth_speed_check(prof)

    def Pprime_quad(zq):
        f = lambda y: 1 - math.exp(y / math.sqrt(2))
        left = quad(lambda y: math.exp((y - zq) / s) * f(y), -40, zq)[0] + s * math.exp((-40 - zq) / s)
        right = quad(lambda y: math.exp((zq - y) / s) * f(y), zq, 0)[0]
        return (right - left) / (2 * s * s)

    k = int(np.argmin(c + chi * pp.Pprime))
    nodes = np.concatenate((z[::400], z[max(k - 2, 0):k + 3]))
    oracle = min(c + chi * Pprime_quad(zq) for zq in nodes)
    assert margin == pytest.approx(oracle, abs=1e-6)
    assert ok == (margin > 0)


def test_aligned_distance_of_shifted_copy():
    g = Grid1D(10.0, 1000)
    a = Field(g, 1 / (1 + np.exp(3 * (g.centers - 1.0))))
    b = Field(g, 1 / (1 + np.exp(3 * (g.centers + 2.0))))
    assert aligned_sup_distance(a, b) < 1e-4
    with pytest.raises(ValueError):
        aligned_sup_distance(a, Field(g, np.zeros(g.M)))
