"""Numerical lab for the 1-D hyperbolic Keller-Segel model with logistic growth.

The density is transported by the gradient of a nonlocal pressure
``p = (I - sigma^2 d_xx)^{-1} u``.  Submodules:

``model``          parameters, grids, fields, initial data
``elliptic``       pressure solves (bounded interval and half-line kernel)
``hyperbolic``     upwind finite-volume stepper
``diagnostics``    level sets, separatrix, speeds, jump height
``travelingwave``  sharp traveling-wave profile by fixed-point iteration
``config``, ``io``, ``cli``  experiment files, CSV output, command line
"""

from .model import (
    Field,
    Grid1D,
    InitialCondition,
    InvalidParameterError,
    ModelParams,
    chibar,
    eval_ic,
    kernel_rho,
    make_params,
    norm_eta,
)
from .elliptic import convolve_halfline, solve_pressure_neumann, staggered_velocity
from .hyperbolic import SchemeState, cfl_dt, initial_state, run, run_fields, step, upwind_flux
from .diagnostics import (
    LevelSetTrace,
    aligned_sup_distance,
    front_zero,
    gap_decay,
    jump_height,
    level_set,
    propagation_speed,
    separatrix_speed,
    smooth_speed_check,
    track_separatrix,
)
from .travelingwave import (
    WaveProfile,
    apply_T_ode,
    apply_T_tau,
    f_appendix,
    find_chibar,
    fixed_point,
    is_admissible,
    porous_medium_profile,
    wave_speed,
)
from .config import ExperimentConfig, parse_config

__version__ = "0.1.0"
