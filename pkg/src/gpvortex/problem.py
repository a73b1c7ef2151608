"""Variational setup of the single and binary condensate models.

Defines the model parameters, the wave function on the unit-norm manifold,
and pure evaluations of energy, chemical potential, Euler-Lagrange residual,
component masses and the normalization projection, all in the mapped
coordinate x = 2r/R - 1 with the polar Jacobian weight made explicit.

Weighted-norm conventions (hat vectors are Galerkin coefficients):

    ||phi||^2      = (pi R^2 / 2) * sum_j  u_j^T C u_j
    kinetic(Phi)   = pi * sum_j u_j^T (A + S^2 B) u_j
    int f r dr     = (R^2/4) * sum_q w_q (x_q + 1) f(x_q)

The energy of the single model is
    E = kinetic - pi * int (beta phi^4 + H phi^2) r dr,
and of the binary model
    E = kinetic + 2 pi * int (V1 phi1^2 + V2 phi2^2 - eta (phi1^2 - phi2^2)
                              - beta phi1^2 phi2^2 - (2 H0 + H1) phi1 phi2) r dr,
with the chemical potential doubling the quartic and field cross terms.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .poisson import MagneticField, PoissonWorkspace, field_for_state
from .spectral import (
    BandedCholesky,
    BasisFamily,
    banded_combine,
    centrifugal_matrix,
    gauss_lobatto,
    mass_matrix,
    stiffness_matrix,
)

__all__ = [
    "SINGLE_BETA_THRESHOLDS",
    "BINARY_BETA_THRESHOLDS",
    "ExistenceWarning",
    "lattice_potential",
    "harmonic_potential",
    "ModelParams",
    "WaveFunction",
    "Diagnostics",
    "SteadyStateResult",
    "GPProblem",
]


# Empirical existence thresholds for the contact interaction strength, by
# winding number 0..15. Single-component model: no state exists above the
# threshold. Binary model: states exist up to the threshold and none beyond
# twice the threshold.
SINGLE_BETA_THRESHOLDS = (
    5.85, 24.16, 44.88, 66.21, 87.75, 109.38, 131.06, 152.76,
    174.47, 196.20, 217.94, 239.68, 261.42, 283.17, 304.92, 326.67,
)
BINARY_BETA_THRESHOLDS = (
    11.70, 48.31, 89.75, 132.42, 175.50, 218.76, 262.11, 305.51,
    348.94, 392.40, 435.87, 479.35, 522.84, 566.33, 609.83, 653.34,
)


class ExistenceWarning(UserWarning):
    """Raised (as a warning) when beta exceeds the known existence threshold."""


def lattice_potential(r):
    """Harmonic trap plus optical lattice: r^2/2 + 25 sin^2(pi r / 4)."""
    return r**2 / 2 + 25 * np.sin(np.pi * r / 4) ** 2


def harmonic_potential(k: float = 1.0) -> Callable:
    """Harmonic trap k r^2 / 2."""

    def _v(r):
        return k * r**2 / 2

    return _v


@dataclass(frozen=True)
class ModelParams:
    """All physical and discretization parameters of one problem instance.

    ``model`` is "single" or "binary". The single model has no external
    potential and no background field; the binary model couples two components
    through the contact term, the detuning ``eta``, and the total field
    ``background_field + H1``.
    """

    model: str
    winding: int = 0
    beta: float = 0.0
    gamma: float = 0.0
    eta: float = 0.0
    background_field: float = 0.0
    mass_split: float = 0.5
    V1: Optional[Callable] = None
    V2: Optional[Callable] = None
    radius: float = 20.0
    modes: int = 200
    beta_exceeds_threshold: bool = field(init=False, default=False)

    def __post_init__(self):
        if self.model not in ("single", "binary"):
            raise ValueError("model must be 'single' or 'binary'")
        if self.radius <= 1.0:
            raise ValueError("radius must exceed 1")
        if self.modes < 8:
            raise ValueError("at least 8 modes are required")
        if self.winding < 0 or int(self.winding) != self.winding:
            raise ValueError("winding must be a non-negative integer")
        if not 0.0 <= self.mass_split <= 1.0:
            raise ValueError("mass_split must lie in [0, 1]")
        if self.model == "single" and (self.V1 is not None or self.V2 is not None):
            raise ValueError("the single model has no external potential")
        thresholds = SINGLE_BETA_THRESHOLDS if self.model == "single" else BINARY_BETA_THRESHOLDS
        if self.winding < len(thresholds) and self.beta > thresholds[self.winding]:
            object.__setattr__(self, "beta_exceeds_threshold", True)
            limit = thresholds[self.winding]
            if self.model == "single":
                msg = (
                    f"beta={self.beta:g} exceeds the existence threshold {limit:g} "
                    f"for winding {self.winding} (single model); no steady state is "
                    "known to exist and the run may not converge"
                )
            else:
                msg = (
                    f"beta={self.beta:g} exceeds the existence threshold {limit:g} "
                    f"for winding {self.winding} (binary model); no steady state "
                    f"exists beyond {2 * limit:g}"
                )
            warnings.warn(msg, ExistenceWarning, stacklevel=2)

    @property
    def ncomp(self) -> int:
        return 1 if self.model == "single" else 2


@dataclass(frozen=True)
class WaveFunction:
    """One or two radial profiles as rows of ``coeffs`` plus the winding number."""

    winding: int
    radius: float
    basis: BasisFamily
    coeffs: np.ndarray  # shape (ncomp, basis.dim)

    @property
    def ncomp(self) -> int:
        return self.coeffs.shape[0]

    def with_coeffs(self, coeffs: np.ndarray) -> "WaveFunction":
        return replace(self, coeffs=coeffs)


@dataclass(frozen=True)
class Diagnostics:
    energy: float
    chemical_potential: float
    residual_norm: float
    masses: tuple


@dataclass
class StateEval:
    """Field, energies and Galerkin residual of one state, computed together."""

    field: MagneticField
    u_nodal: np.ndarray
    energy: float
    mu: float
    r_hat: np.ndarray
    residual_norm: float
    load_n: np.ndarray


@dataclass
class SteadyStateResult:
    """Outcome of one solver run."""

    converged: bool
    status: str  # "converged" | "max_iter" | "diverged"
    energy: float
    mu: float
    masses: tuple
    iterations: int
    wall_seconds: float
    residual_norm: float
    history: np.ndarray  # rows (iter, energy, mu, residual_norm)
    state: WaveFunction
    field: MagneticField
    invariants: dict


class GPProblem:
    """Discretized variational problem: immutable operators plus pure evaluations.

    Construction assembles the boundary-adapted basis for the requested
    winding number, the banded Galerkin matrices, an aliasing-safe working
    quadrature grid of modes+4 points for every nonlinear term, and the field
    solver workspace. All methods are pure functions of their arguments.
    """

    def __init__(self, params: ModelParams):
        self.params = params
        S, R, N = params.winding, params.radius, params.modes
        self.S = int(S)
        self.R = float(R)

        if self.S > 0:
            self.basis = BasisFamily.dirichlet_both(N - 1)
        else:
            self.basis = BasisFamily.dirichlet_right(N)
        self.grid = gauss_lobatto(N + 4)
        x = self.grid.nodes
        self.r_nodes = self.R / 2 * (x + 1.0)

        self.phi_mat = self.basis.eval_matrix(x)  # (p, dim)
        self._load_w = self.grid.weights * (x + 1.0)
        self._load_mat = self.phi_mat * self._load_w[:, None]  # load = _load_mat.T @ f

        self.A = stiffness_matrix(self.basis)
        self.B = centrifugal_matrix(self.basis) if self.S > 0 else None
        self.C = mass_matrix(self.basis)
        self.C_solve = BandedCholesky(self.C)
        if self.S > 0:
            self.kinetic_band = banded_combine([(1.0, self.A), (float(self.S**2), self.B)])
        else:
            self.kinetic_band = self.A
        self.poisson = PoissonWorkspace(N - 1, self.R, self.grid)

        if params.model == "binary":
            v1 = params.V1 or (lambda r: np.zeros_like(r))
            v2 = params.V2 or (lambda r: np.zeros_like(r))
            self.V_nodal = np.array(
                [np.broadcast_to(v1(self.r_nodes), x.shape), np.broadcast_to(v2(self.r_nodes), x.shape)],
                dtype=float,
            )
        else:
            self.V_nodal = None

    # -- basic geometry on the manifold ------------------------------------

    def load(self, values: np.ndarray) -> np.ndarray:
        """Weak-form load of nodal values against the wave-function basis."""
        return self._load_mat.T @ values

    def nodal(self, coeffs: np.ndarray) -> np.ndarray:
        """Nodal values of coefficient rows; shape preserved."""
        return coeffs @ self.phi_mat.T

    def quad(self, values: np.ndarray) -> float:
        """Quadrature of nodal values against the weight (x+1)."""
        return float(self._load_w @ values)

    def inner(self, a: np.ndarray, b: np.ndarray) -> float:
        """Weighted L2 inner product of coefficient arrays (summed over components)."""
        a2 = np.atleast_2d(a)
        b2 = np.atleast_2d(b)
        s = sum(float(a2[j] @ self.C.matvec(b2[j])) for j in range(a2.shape[0]))
        return math.pi * self.R**2 / 2 * s

    def norm2(self, coeffs: np.ndarray) -> float:
        return self.inner(coeffs, coeffs)

    def project(self, state: WaveFunction) -> WaveFunction:
        """Rescale to unit weighted norm (components scaled jointly)."""
        n2 = self.norm2(state.coeffs)
        if n2 <= 0.0 or not np.isfinite(n2):
            raise ValueError("cannot normalize a state with zero or non-finite norm")
        return state.with_coeffs(state.coeffs / math.sqrt(n2))

    def masses(self, state: WaveFunction) -> tuple:
        """Per-component squared norms."""
        return tuple(self.inner(state.coeffs[j], state.coeffs[j]) for j in range(state.ncomp))

    # -- initial data -------------------------------------------------------

    def initial_guess(self) -> WaveFunction:
        """Gaussian vortex profile r^S e^{-r^2/2} / sqrt(pi S!), projected onto
        the basis and normalized (binary: split sqrt(alpha), sqrt(1-alpha))."""
        S = self.S
        r = self.r_nodes
        profile = r**S * np.exp(-(r**2) / 2) / math.sqrt(math.pi * math.factorial(S))
        coeffs = self.C_solve.solve(self.load(profile))
        if self.params.model == "binary":
            a = self.params.mass_split
            coeffs = np.array([math.sqrt(a) * coeffs, math.sqrt(1 - a) * coeffs])
        else:
            coeffs = coeffs[None, :]
        state = WaveFunction(S, self.R, self.basis, coeffs)
        return self.project(state)

    def random_state(self, rng: np.random.Generator) -> WaveFunction:
        coeffs = rng.standard_normal((self.params.ncomp, self.basis.dim))
        return self.project(WaveFunction(self.S, self.R, self.basis, coeffs))

    def random_tangent(self, state: WaveFunction, rng: np.random.Generator) -> np.ndarray:
        """Unit-norm tangent coefficient array at a normalized state."""
        xi = rng.standard_normal(state.coeffs.shape)
        xi -= self.inner(xi, state.coeffs) * state.coeffs
        return xi / math.sqrt(self.norm2(xi))

    # -- field --------------------------------------------------------------

    def solve_field(self, state: WaveFunction, state_nodal: np.ndarray | None = None) -> MagneticField:
        """Magnetic field of a state: source |phi|^2 or phi1*phi2."""
        if state_nodal is None:
            state_nodal = self.nodal(state.coeffs)
        return field_for_state(state, self.params.gamma, self.poisson, state_nodal)

    # -- energies and residuals ----------------------------------------------

    def kinetic(self, coeffs: np.ndarray) -> float:
        c2 = np.atleast_2d(coeffs)
        s = sum(float(c2[j] @ self.kinetic_band.matvec(c2[j])) for j in range(c2.shape[0]))
        return math.pi * s

    def _interaction_quads(self, u: np.ndarray, h_nodal: np.ndarray):
        """Shared interaction integrals; returns (energy_part, mu_part)."""
        p = self.params
        R2 = self.R**2
        if p.model == "single":
            quart = self.quad(u[0] ** 4)
            fld = self.quad(h_nodal * u[0] ** 2)
            e_part = -math.pi * R2 / 4 * (p.beta * quart + fld)
            mu_part = -math.pi * R2 / 2 * (p.beta * quart + fld)
        else:
            u1, u2 = u
            v_sq = self.quad(self.V_nodal[0] * u1**2 + self.V_nodal[1] * u2**2)
            det = self.quad(u1**2 - u2**2)
            quart = self.quad(u1**2 * u2**2)
            cross0 = self.quad(u1 * u2)
            cross1 = self.quad(h_nodal * u1 * u2)
            h0 = p.background_field
            common = v_sq - p.eta * det
            e_part = math.pi * R2 / 2 * (common - p.beta * quart - 2 * h0 * cross0 - cross1)
            mu_part = math.pi * R2 / 2 * (common - 2 * p.beta * quart - 2 * h0 * cross0 - 2 * cross1)
        return e_part, mu_part

    def energy(self, state: WaveFunction, field: MagneticField) -> float:
        u = self.nodal(state.coeffs)
        e_part, _ = self._interaction_quads(u, field.nodal)
        return self.kinetic(state.coeffs) + e_part

    def chemical_potential(self, state: WaveFunction, field: MagneticField) -> float:
        u = self.nodal(state.coeffs)
        _, mu_part = self._interaction_quads(u, field.nodal)
        return self.kinetic(state.coeffs) + mu_part

    def energy_and_mu(self, state: WaveFunction, field: MagneticField, state_nodal=None):
        u = self.nodal(state.coeffs) if state_nodal is None else state_nodal
        kin = self.kinetic(state.coeffs)
        e_part, mu_part = self._interaction_quads(u, field.nodal)
        return kin + e_part, kin + mu_part

    def mu_energy_gap(self, state: WaveFunction, field: MagneticField, state_nodal=None) -> float:
        """The exact integral by which mu falls short of E (identity check)."""
        u = self.nodal(state.coeffs) if state_nodal is None else state_nodal
        p = self.params
        R2 = self.R**2
        if p.model == "single":
            return math.pi * R2 / 4 * self.quad(p.beta * u[0] ** 4 + field.nodal * u[0] ** 2)
        return math.pi * R2 / 2 * self.quad(
            p.beta * u[0] ** 2 * u[1] ** 2 + field.nodal * u[0] * u[1]
        )

    def gradient_terms(self, u: np.ndarray, h_nodal: np.ndarray) -> np.ndarray:
        """Nodal values of the potential/nonlinear part of the residual operator.

        Single: -(beta u^2 + H) u. Binary component 1: (V1 - eta - beta u2^2) u1
        - (H0 + H1) u2, and symmetrically for component 2.
        """
        p = self.params
        if p.model == "single":
            return (-(p.beta * u[0] ** 2 + h_nodal) * u[0])[None, :]
        h_tot = p.background_field + h_nodal
        n1 = (self.V_nodal[0] - p.eta - p.beta * u[1] ** 2) * u[0] - h_tot * u[1]
        n2 = (self.V_nodal[1] + p.eta - p.beta * u[0] ** 2) * u[1] - h_tot * u[0]
        return np.array([n1, n2])

    def residual(self, state: WaveFunction, field: MagneticField, mu: float | None = None):
        """Galerkin residual coefficients and weighted norm.

        Solves C r = (2/R^2)(A + S^2 B) u + load(nonlinear terms) - mu C u for
        each component; the norm is sqrt((pi R^2/2) sum r^T C r).
        """
        u = self.nodal(state.coeffs)
        if mu is None:
            _, mu = self.energy_and_mu(state, field, state_nodal=u)
        n_nodal = self.gradient_terms(u, field.nodal)
        r_hat = np.empty_like(state.coeffs)
        for j in range(state.ncomp):
            rhs = (
                2.0 / self.R**2 * self.kinetic_band.matvec(state.coeffs[j])
                + self.load(n_nodal[j])
                - mu * self.C.matvec(state.coeffs[j])
            )
            r_hat[j] = self.C_solve.solve(rhs)
        return r_hat, math.sqrt(max(self.norm2(r_hat), 0.0))

    def diagnostics(self, state: WaveFunction, field: MagneticField) -> Diagnostics:
        e, mu = self.energy_and_mu(state, field)
        _, rnorm = self.residual(state, field, mu)
        return Diagnostics(e, mu, rnorm, self.masses(state))

    def evaluate(self, state: WaveFunction) -> StateEval:
        """Solve the field and assemble energy, mu and residual in one pass."""
        u_nodal = self.nodal(state.coeffs)
        fld = self.solve_field(state, u_nodal)
        energy, mu = self.energy_and_mu(state, fld, state_nodal=u_nodal)
        n_nodal = self.gradient_terms(u_nodal, fld.nodal)
        load_n = np.array([self.load(n_nodal[j]) for j in range(state.ncomp)])
        r_hat = np.empty_like(state.coeffs)
        for j in range(state.ncomp):
            rhs = (
                2.0 / self.R**2 * self.kinetic_band.matvec(state.coeffs[j])
                + load_n[j]
                - mu * self.C.matvec(state.coeffs[j])
            )
            r_hat[j] = self.C_solve.solve(rhs)
        rnorm = math.sqrt(max(self.norm2(r_hat), 0.0))
        return StateEval(fld, u_nodal, energy, mu, r_hat, rnorm, load_n)

    # -- sampling ------------------------------------------------------------

    def sample_profile(self, state: WaveFunction, r: np.ndarray) -> np.ndarray:
        """Component values at radii r; shape (ncomp, len(r))."""
        x = 2 * np.asarray(r, dtype=float) / self.R - 1.0
        return state.coeffs @ self.basis.eval_matrix(x).T

    def sample_field(self, fld: MagneticField, r: np.ndarray) -> np.ndarray:
        x = 2 * np.asarray(r, dtype=float) / self.R - 1.0
        return self.poisson.basis.eval_matrix(x) @ fld.coeffs
