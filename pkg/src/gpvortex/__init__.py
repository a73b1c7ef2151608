"""Spectral steady-state solvers for condensates coupled to a magnetic field.

Library layout:

* ``gpvortex.spectral`` : Legendre/GLL machinery, bases, banded Galerkin matrices.
* ``gpvortex.poisson``  : radial field solver (Robin/Neumann pair).
* ``gpvortex.problem``  : model parameters, energies, residuals, projections.
* ``gpvortex.flows``    : normalized gradient flows (gflm, asgf1, asgf2).
* ``gpvortex.ncg``      : preconditioned conjugate gradient on the norm sphere.
* ``gpvortex.bench``    : reference benchmark configurations and golden values.
* ``gpvortex.cli``      : solve / sweep / bench command line front end.
"""

from .bench import run_bench
from .flows import FlowConfig, run_flow
from .ncg import CgConfig, PerturbConfig, run_ppncg
from .problem import (
    ExistenceWarning,
    GPProblem,
    ModelParams,
    SteadyStateResult,
    WaveFunction,
    harmonic_potential,
    lattice_potential,
)

__all__ = [
    "FlowConfig",
    "run_flow",
    "CgConfig",
    "PerturbConfig",
    "run_ppncg",
    "run_bench",
    "ExistenceWarning",
    "GPProblem",
    "ModelParams",
    "SteadyStateResult",
    "WaveFunction",
    "harmonic_potential",
    "lattice_potential",
]

__version__ = "0.1.0"
