"""Radial Poisson solver for the magnetic field on the mapped domain.

The field H satisfies -(1/r) d/dr (r dH/dr) = gamma * source on [0, R] with a
regularity (Neumann) condition at r=0 and the logarithmic Robin condition
H'(R) = H(R) / (R log R) at the truncation radius. After the map
r = (R/2)(x+1) the weak form reduces to a tridiagonal Galerkin system in the
robin-adapted Legendre basis, solved in O(N) per call.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import (
    BandedMatrix,
    BasisFamily,
    QuadratureGrid,
    banded_combine,
    banded_solve,
    field_operator_matrix,
)

__all__ = ["MagneticField", "PoissonWorkspace", "solve_field", "field_for_state"]


@dataclass(frozen=True)
class MagneticField:
    """Solved radial field: robin-basis coefficients plus cached nodal values."""

    coeffs: np.ndarray
    nodal: np.ndarray
    gamma: float
    radius: float


class PoissonWorkspace:
    """Reusable discrete setup of the field solve for fixed (dim, radius, grid).

    Holds the robin basis, its evaluation matrix on the working quadrature
    grid, the assembled system band (-4/R^2 times the weak field operator) and
    the weighted load map. Immutable after construction; `solve` is pure.
    """

    def __init__(self, dim: int, radius: float, grid: QuadratureGrid):
        self.radius = float(radius)
        self.grid = grid
        self.basis = BasisFamily.robin(dim, radius)
        x = grid.nodes
        self.zeta = self.basis.eval_matrix(x)
        self._load_weight = grid.weights * (x + 1.0)
        operator = field_operator_matrix(self.basis)
        self.system: BandedMatrix = banded_combine([(-4.0 / radius**2, operator)])

    def load(self, values: np.ndarray) -> np.ndarray:
        return self.zeta.T @ (self._load_weight * values)

    def solve(self, source_nodal: np.ndarray, gamma: float) -> MagneticField:
        source_nodal = np.asarray(source_nodal, dtype=float)
        if source_nodal.shape != self.grid.nodes.shape:
            raise ValueError("source must be sampled on the workspace grid")
        if gamma == 0.0 or not np.any(source_nodal):
            zero = np.zeros(self.basis.dim)
            return MagneticField(zero, np.zeros(self.grid.num_points), gamma, self.radius)
        coeffs = banded_solve(self.system, self.load(gamma * source_nodal))
        return MagneticField(coeffs, self.zeta @ coeffs, gamma, self.radius)


def solve_field(source_nodal: np.ndarray, gamma: float, ws: PoissonWorkspace) -> MagneticField:
    """Solve the mapped field equation for a gamma-free nodal source."""
    return ws.solve(source_nodal, gamma)


def field_for_state(state, gamma: float, ws: PoissonWorkspace, state_nodal: np.ndarray | None = None) -> MagneticField:
    """Field generated by a wave function: source |phi|^2 (one component) or
    phi_1 * phi_2 (two components).

    ``state_nodal`` may pass precomputed nodal component values (shape
    (ncomp, num_points)); otherwise they are evaluated from the coefficients.
    """
    if state_nodal is None:
        state_nodal = state.coeffs @ state.basis.eval_matrix(ws.grid.nodes).T
    if state_nodal.shape[0] == 1:
        source = state_nodal[0] ** 2
    else:
        source = state_nodal[0] * state_nodal[1]
    return ws.solve(source, gamma)
