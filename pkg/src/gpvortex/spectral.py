"""Legendre spectral machinery on [-1, 1] with the polar Jacobian weight (x+1).

This module provides the building blocks shared by every solver in the package:

* Legendre polynomial evaluation by the three-term recurrence, including first
  and second derivative tables.
* Gauss-Legendre-Lobatto (GLL) quadrature, exact for polynomials of degree
  <= 2*num_points - 3.
* Three boundary-adapted basis families built from Legendre differences:
  ``dirichlet_both`` (vanishing at both endpoints, used for vortex profiles),
  ``dirichlet_right`` (vanishing at x=1 only, used for symmetric profiles) and
  ``robin`` (Neumann at x=-1 and a logarithmic Robin condition at x=1, used
  for the magnetic field).
* Closed-form banded Galerkin matrices for the weak forms that appear in the
  mapped radial problems, together with independent quadrature oracles that
  assemble the same matrices densely from the integrands.

Everything here is immutable after construction and safe to share.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve_banded, cholesky_banded, solve_banded

__all__ = [
    "QuadratureGrid",
    "BasisFamily",
    "BandedMatrix",
    "BandedCholesky",
    "SpectralField",
    "legendre_eval",
    "legendre_table",
    "legendre_deriv_table",
    "legendre_second_deriv_table",
    "gauss_lobatto",
    "stiffness_matrix",
    "centrifugal_matrix",
    "mass_matrix",
    "field_operator_matrix",
    "galerkin_matrix_oracle",
    "banded_combine",
    "banded_solve",
    "nodal_values",
    "load_vector",
]


# ---------------------------------------------------------------------------
# Legendre polynomials
# ---------------------------------------------------------------------------

def legendre_table(max_degree: int, x: np.ndarray) -> np.ndarray:
    """Values of L_0..L_max_degree at the points ``x``.

    Returns an array of shape ``(len(x), max_degree + 1)`` filled via the
    recurrence (n+1) L_{n+1} = (2n+1) x L_n - n L_{n-1}.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    table = np.empty((x.size, max_degree + 1))
    table[:, 0] = 1.0
    if max_degree >= 1:
        table[:, 1] = x
    for n in range(1, max_degree):
        table[:, n + 1] = ((2 * n + 1) * x * table[:, n] - n * table[:, n - 1]) / (n + 1)
    return table


def legendre_deriv_table(max_degree: int, x: np.ndarray) -> np.ndarray:
    """First derivatives L'_0..L'_max_degree via L'_n = (2n-1) L_{n-1} + L'_{n-2}."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    table = legendre_table(max_degree, x)
    deriv = np.zeros_like(table)
    if max_degree >= 1:
        deriv[:, 1] = 1.0
    for n in range(2, max_degree + 1):
        deriv[:, n] = (2 * n - 1) * table[:, n - 1] + deriv[:, n - 2]
    return deriv


def legendre_second_deriv_table(max_degree: int, x: np.ndarray) -> np.ndarray:
    """Second derivatives, applying the same recurrence to the first derivatives."""
    deriv = legendre_deriv_table(max_degree, x)
    second = np.zeros_like(deriv)
    for n in range(2, max_degree + 1):
        second[:, n] = (2 * n - 1) * deriv[:, n - 1] + second[:, n - 2]
    return second


def legendre_eval(degree: int, x):
    """Evaluate L_degree at ``x`` (scalar or array)."""
    if degree < 0:
        raise ValueError("degree must be >= 0")
    scalar = np.isscalar(x)
    values = legendre_table(degree, x)[:, degree]
    return float(values[0]) if scalar else values


# ---------------------------------------------------------------------------
# Gauss-Legendre-Lobatto quadrature
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadratureGrid:
    """GLL nodes and weights on [-1, 1].

    Nodes are strictly increasing and include both endpoints; the rule is
    exact for polynomials of degree <= 2*num_points - 3.
    """

    nodes: np.ndarray
    weights: np.ndarray

    @property
    def num_points(self) -> int:
        return self.nodes.size


def gauss_lobatto(num_points: int) -> QuadratureGrid:
    """Gauss-Legendre-Lobatto rule with ``num_points`` nodes.

    Interior nodes are the roots of L'_{p-1}, found by Newton iteration from
    Chebyshev-Gauss-Lobatto initial guesses (tolerance 1e-15, at most 50
    steps); weights are 2 / (p (p-1) L_{p-1}(x)^2).
    """
    p = int(num_points)
    if p < 2:
        raise ValueError("a Lobatto rule needs at least 2 points")
    if p == 2:
        return QuadratureGrid(np.array([-1.0, 1.0]), np.array([1.0, 1.0]))

    n = p - 1
    x = -np.cos(np.pi * np.arange(1, p - 1) / n)
    for _ in range(50):
        dl = legendre_deriv_table(n, x)
        d2l = legendre_second_deriv_table(n, x)
        step = dl[:, n] / d2l[:, n]
        x = x - step
        if np.max(np.abs(step)) < 1e-15:
            break
    else:
        raise RuntimeError("Lobatto node search did not converge")
    # enforce the exact +/- symmetry of the rule
    x = 0.5 * (x - x[::-1])
    nodes = np.concatenate(([-1.0], x, [1.0]))
    ln = legendre_table(n, nodes)[:, n]
    weights = 2.0 / (p * n * ln**2)
    return QuadratureGrid(nodes, weights)


# ---------------------------------------------------------------------------
# Boundary-adapted basis families
# ---------------------------------------------------------------------------

DIRICHLET_BOTH = "dirichlet_both"
DIRICHLET_RIGHT = "dirichlet_right"
ROBIN = "robin"


def _robin_coefficients(dim: int, radius: float) -> tuple[np.ndarray, np.ndarray]:
    if radius <= 1.0:
        raise ValueError("robin basis requires radius > 1 (log(radius) > 0)")
    ln_r = math.log(radius)
    i = np.arange(dim, dtype=float)
    denom = ln_r * (i + 1) * (i + 3) - 1.0
    if np.any(np.abs(denom) < 1e-12):
        raise ValueError("degenerate robin coefficient denominator for this radius")
    a = (2 * i + 3) / ((i + 2) ** 2 * denom)
    b = (i + 1) ** 2 / (i + 2) ** 2 * (ln_r * i * (i + 2) - 1.0) / (-denom)
    return a, b


@dataclass(frozen=True)
class BasisFamily:
    """A family of Legendre-difference basis functions on [-1, 1].

    ``dirichlet_both``  : chi_i = L_i - L_{i+2}, zero at both endpoints.
    ``dirichlet_right`` : chi_i = L_i - L_{i+1}, zero at x=1.
    ``robin``           : zeta_i = L_i + a_i L_{i+1} + b_i L_{i+2} with
                          zeta'(-1) = 0 and zeta'(1) = zeta(1) / (2 log R).
    """

    kind: str
    dim: int
    radius: float | None = None
    robin_a: np.ndarray | None = None
    robin_b: np.ndarray | None = None

    @classmethod
    def dirichlet_both(cls, dim: int) -> "BasisFamily":
        return cls(DIRICHLET_BOTH, int(dim))

    @classmethod
    def dirichlet_right(cls, dim: int) -> "BasisFamily":
        return cls(DIRICHLET_RIGHT, int(dim))

    @classmethod
    def robin(cls, dim: int, radius: float) -> "BasisFamily":
        a, b = _robin_coefficients(int(dim), float(radius))
        return cls(ROBIN, int(dim), float(radius), a, b)

    @property
    def max_degree(self) -> int:
        return self.dim if self.kind == DIRICHLET_RIGHT else self.dim + 1

    def _tables(self, x, table_fn):
        t = table_fn(self.max_degree, x)
        d = self.dim
        if self.kind == DIRICHLET_BOTH:
            return t[:, :d] - t[:, 2 : d + 2]
        if self.kind == DIRICHLET_RIGHT:
            return t[:, :d] - t[:, 1 : d + 1]
        return t[:, :d] + self.robin_a * t[:, 1 : d + 1] + self.robin_b * t[:, 2 : d + 2]

    def eval_matrix(self, x: np.ndarray) -> np.ndarray:
        """Basis values at ``x``; shape (len(x), dim)."""
        return self._tables(x, legendre_table)

    def deriv_matrix(self, x: np.ndarray) -> np.ndarray:
        """Basis first derivatives at ``x``; shape (len(x), dim)."""
        return self._tables(x, legendre_deriv_table)

    def second_deriv_matrix(self, x: np.ndarray) -> np.ndarray:
        return self._tables(x, legendre_second_deriv_table)


@dataclass(frozen=True)
class SpectralField:
    """Coefficients of one radial function in a boundary-adapted basis."""

    basis: BasisFamily
    coeffs: np.ndarray

    def __post_init__(self):
        if self.coeffs.shape != (self.basis.dim,):
            raise ValueError("coefficient length must equal the basis dimension")


def nodal_values(field: SpectralField, grid: QuadratureGrid) -> np.ndarray:
    """Pointwise values of the field at the grid nodes."""
    return field.basis.eval_matrix(grid.nodes) @ field.coeffs


def load_vector(values_on_grid: np.ndarray, grid: QuadratureGrid, basis: BasisFamily) -> np.ndarray:
    """Weak-form right-hand side: component i is the quadrature of
    ``values * basis_i * (x+1)``.

    This is how every nonlinear term enters the Galerkin systems.
    """
    values = np.asarray(values_on_grid, dtype=float)
    if values.shape != grid.nodes.shape:
        raise ValueError("values must be sampled on the quadrature grid")
    w = grid.weights * (grid.nodes + 1.0) * values
    return basis.eval_matrix(grid.nodes).T @ w


# ---------------------------------------------------------------------------
# Symmetric banded matrices
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BandedMatrix:
    """Symmetric banded matrix in upper band storage.

    ``ab`` has shape (halfbw + 1, n) with ab[halfbw + i - j, j] = a[i, j] for
    j - halfbw <= i <= j (scipy's upper convention); the last row is the main
    diagonal.
    """

    ab: np.ndarray

    @property
    def dim(self) -> int:
        return self.ab.shape[1]

    @property
    def halfbw(self) -> int:
        return self.ab.shape[0] - 1

    @property
    def _diags(self) -> tuple:
        cached = self.__dict__.get("_diags_cache")
        if cached is None:
            u = self.halfbw
            cached = tuple(self.ab[u - k, k:] for k in range(u + 1))
            object.__setattr__(self, "_diags_cache", cached)
        return cached

    def diagonal(self, offset: int = 0) -> np.ndarray:
        k = abs(offset)
        if k > self.halfbw:
            return np.zeros(self.dim - k)
        return self.ab[self.halfbw - k, k:]

    def entry(self, i: int, j: int) -> float:
        k = abs(i - j)
        if k > self.halfbw:
            return 0.0
        return float(self.ab[self.halfbw - k, max(i, j)])

    def matvec(self, x: np.ndarray) -> np.ndarray:
        diags = self._diags
        y = diags[0] * x
        for k in range(1, len(diags)):
            d = diags[k]
            y[:-k] += d * x[k:]
            y[k:] += d * x[:-k]
        return y

    def dense(self) -> np.ndarray:
        n = self.dim
        out = np.zeros((n, n))
        out[np.arange(n), np.arange(n)] = self.diagonal(0)
        for k in range(1, self.halfbw + 1):
            d = self.diagonal(k)
            idx = np.arange(n - k)
            out[idx, idx + k] = d
            out[idx + k, idx] = d
        return out

    @classmethod
    def from_diagonals(cls, diags: list[np.ndarray]) -> "BandedMatrix":
        """Build from [main, first off-diagonal, ...]."""
        n = diags[0].size
        u = len(diags) - 1
        ab = np.zeros((u + 1, n))
        for k, d in enumerate(diags):
            ab[u - k, k:] = d
        return cls(ab)


def banded_combine(terms: list[tuple[float, BandedMatrix]]) -> BandedMatrix:
    """Linear combination sum(c * M) of symmetric banded matrices."""
    n = terms[0][1].dim
    u = max(m.halfbw for _, m in terms)
    ab = np.zeros((u + 1, n))
    for c, m in terms:
        if m.dim != n:
            raise ValueError("dimension mismatch in banded combination")
        ab[u - m.halfbw :, :] += c * m.ab
    return BandedMatrix(ab)


class BandedCholesky:
    """Cached Cholesky factorization of a symmetric positive definite band."""

    def __init__(self, matrix: BandedMatrix):
        self._factor = cholesky_banded(matrix.ab, lower=False, check_finite=False)

    def solve(self, b: np.ndarray) -> np.ndarray:
        return cho_solve_banded((self._factor, False), b, check_finite=False)


def banded_solve(matrix: BandedMatrix, b: np.ndarray) -> np.ndarray:
    """Solve a symmetric (possibly indefinite) banded system by general LU."""
    u = matrix.halfbw
    n = matrix.dim
    full = np.zeros((2 * u + 1, n))
    full[: u + 1, :] = matrix.ab
    for k in range(1, u + 1):
        full[u + k, : n - k] = matrix.ab[u - k, k:]
    return solve_banded((u, u), full, b, check_finite=False)


# ---------------------------------------------------------------------------
# Closed-form Galerkin matrices
# ---------------------------------------------------------------------------

def stiffness_matrix(basis: BasisFamily) -> BandedMatrix:
    """Weak Laplacian: entries of integral(chi_j' chi_i' (x+1) dx)."""
    i = np.arange(basis.dim, dtype=float)
    if basis.kind == DIRICHLET_BOTH:
        return BandedMatrix.from_diagonals([4 * i + 6, 2 * i[:-1] + 4])
    if basis.kind == DIRICHLET_RIGHT:
        return BandedMatrix.from_diagonals([2 * i + 2])
    raise ValueError(f"stiffness matrix not defined for basis kind {basis.kind!r}")


def centrifugal_matrix(basis: BasisFamily) -> BandedMatrix:
    """Angular term: entries of integral(chi_j chi_i / (x+1) dx).

    Only defined for the double-Dirichlet family, where the integrand's
    endpoint singularity is removable.
    """
    if basis.kind != DIRICHLET_BOTH:
        raise ValueError("centrifugal matrix requires the double-Dirichlet basis")
    i = np.arange(basis.dim, dtype=float)
    diag = 2 * (2 * i + 3) / ((i + 1) * (i + 2))
    off = -2 / (i[:-1] + 2)
    return BandedMatrix.from_diagonals([diag, off])


def mass_matrix(basis: BasisFamily) -> BandedMatrix:
    """Weighted mass: entries of integral(chi_j chi_i (x+1) dx)."""
    i = np.arange(basis.dim, dtype=float)
    if basis.kind == DIRICHLET_BOTH:
        d0 = 2 / (2 * i + 1) + 2 / (2 * i + 5)
        j = i[:-1]
        d1 = 2 / ((2 * j + 1) * (2 * j + 5)) + 2 * (j + 3) / ((2 * j + 5) * (2 * j + 7))
        j = i[:-2]
        d2 = -2 / (2 * j + 5)
        j = i[:-3]
        d3 = -2 * (j + 3) / ((2 * j + 5) * (2 * j + 7))
        return BandedMatrix.from_diagonals([d0, d1, d2, d3])
    if basis.kind == DIRICHLET_RIGHT:
        d0 = 4 * (i + 1) / ((2 * i + 1) * (2 * i + 3))
        j = i[:-1]
        d1 = 4 / ((2 * j + 1) * (2 * j + 3) * (2 * j + 5))
        j = i[:-2]
        d2 = -2 * (j + 2) / ((2 * j + 3) * (2 * j + 5))
        return BandedMatrix.from_diagonals([d0, d1, d2])
    raise ValueError(f"mass matrix not defined for basis kind {basis.kind!r}")


def field_operator_matrix(basis: BasisFamily) -> BandedMatrix:
    """Weak field operator: entries of
    integral((zeta_j'' + zeta_j'/(x+1)) zeta_i (x+1) dx) on the robin basis.

    The matrix is symmetric tridiagonal. Its entries reduce to closed forms in
    the robin coefficients: the diagonal is
    2(i+1) a_i + 2(2i+3) b_i + 2(i+2) a_i b_i and the off-diagonal 2(i+2) b_i
    (both verified against the quadrature oracle in the test suite).
    """
    if basis.kind != ROBIN:
        raise ValueError("field operator matrix requires the robin basis")
    i = np.arange(basis.dim, dtype=float)
    a = basis.robin_a
    b = basis.robin_b
    diag = 2 * (i + 1) * a + 2 * (2 * i + 3) * b + 2 * (i + 2) * a * b
    off = 2 * (i[:-1] + 2) * b[:-1]
    return BandedMatrix.from_diagonals([diag, off])


# ---------------------------------------------------------------------------
# Quadrature oracle
# ---------------------------------------------------------------------------

def galerkin_matrix_oracle(basis: BasisFamily, form: str, num_points: int | None = None) -> np.ndarray:
    """Assemble a Galerkin matrix densely from its defining integrand.

    Independent check on the closed-form builders: the integrands are formed
    pointwise on a high-order GLL grid (exact, the integrands are polynomial)
    with no use of the closed forms. ``form`` is one of ``stiffness``,
    ``centrifugal``, ``mass`` or ``field_operator``.
    """
    p = num_points or (2 * basis.max_degree + 6)
    grid = gauss_lobatto(p)
    x = grid.nodes
    w = grid.weights
    xp1 = x + 1.0

    if form == "stiffness":
        d = basis.deriv_matrix(x)
        return d.T @ (d * (w * xp1)[:, None])
    if form == "mass":
        v = basis.eval_matrix(x)
        return v.T @ (v * (w * xp1)[:, None])
    if form == "centrifugal":
        if basis.kind != DIRICHLET_BOTH:
            raise ValueError("centrifugal form requires the double-Dirichlet basis")
        v = basis.eval_matrix(x)
        weight = np.zeros_like(x)
        interior = xp1 > 0
        weight[interior] = w[interior] / xp1[interior]
        # chi_i(-1) = 0 exactly, so the endpoint's contribution is the
        # removable limit 0; masking the weight realizes that limit.
        return v.T @ (v * weight[:, None])
    if form == "field_operator":
        v = basis.eval_matrix(x)
        dv = basis.deriv_matrix(x)
        d2v = basis.second_deriv_matrix(x)
        rhs = d2v * xp1[:, None] + dv
        return v.T @ (rhs * w[:, None])
    raise ValueError(f"unknown form {form!r}")
