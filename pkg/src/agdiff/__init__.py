"""Deterministic particle approximation of 1-d aggregation-diffusion dynamics
on a torus, with finite-volume and self-similar reference solutions."""

from ._pairwise import active_backend, compiled_available
from .domain import TorusDomain, gap, periodic_diff, wrap
from .dynamics import (CollapseSignal, IntegratorConfig, Trajectory,
                       klin_convolve, phi_jumps, rhs, simulate, step)
from .initial import InitialDatum, barenblatt, build_initial
from .kernels import Kernel, KernelSpec, build_kernel, validate_kernel
from .nonlinearity import (Nonlinearity, NonlinearitySpec, build_nonlinearity,
                           validate_nonlinearity)
from .oracle import FVConfig, compare_trajectories, fv_solve, spacetime_l1
from .state import (GridDensity, ParticleState, cdf_at, init_from_density,
                    l1_distance, pseudo_inverse, to_grid)

__version__ = "0.1.0"

__all__ = [
    "TorusDomain", "wrap", "periodic_diff", "gap",
    "Kernel", "KernelSpec", "build_kernel", "validate_kernel",
    "Nonlinearity", "NonlinearitySpec", "build_nonlinearity",
    "validate_nonlinearity",
    "ParticleState", "GridDensity", "init_from_density", "cdf_at",
    "pseudo_inverse", "to_grid", "l1_distance",
    "IntegratorConfig", "Trajectory", "CollapseSignal", "rhs", "phi_jumps",
    "klin_convolve", "step", "simulate",
    "FVConfig", "fv_solve", "barenblatt", "compare_trajectories",
    "spacetime_l1", "InitialDatum", "build_initial",
    "active_backend", "compiled_available",
]
