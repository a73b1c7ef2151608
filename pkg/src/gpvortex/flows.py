"""Normalized gradient-flow iterations with inertia and stabilization.

Three schemes march the constrained gradient flow of the energy to a steady
state, renormalizing after every step:

* ``gflm``  : semi-implicit flow with an explicit multiplier term; the
              (1, 0, 0) special case of ``asgf1``.
* ``asgf1`` : inertia operator alpha0 + (alpha1 - alpha2*Lap) d/dt with the
              position treated implicitly and a scalar stabilization shift
              chosen from the nodal bound of the frozen-coefficient operator.
* ``asgf2`` : same inertia, fully explicit right-hand side (no shift).

Each step costs one field solve, one weak-form load and a few banded
operations; the per-step linear systems are symmetric positive definite and
solved by banded Cholesky.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import cho_solve_banded, cholesky_banded

from .problem import GPProblem, SteadyStateResult, WaveFunction

__all__ = [
    "FlowConfig",
    "FlowState",
    "stabilization_shift",
    "flow_step",
    "asgf1_step",
    "asgf2_step",
    "evaluate_state",
    "run_flow",
]

SCHEMES = ("gflm", "asgf1", "asgf2")
DIVERGENCE_FACTOR = 1e6


def _per_component(value, ncomp: int) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(value, dtype=float))
    if arr.size == 1:
        arr = np.full(ncomp, arr[0])
    if arr.size != ncomp:
        raise ValueError("inertia coefficients must be scalar or one per component")
    return arr


@dataclass(frozen=True)
class FlowConfig:
    """Scheme selection, time step, inertia coefficients and stopping rule."""

    scheme: str = "gflm"
    tau: float = 0.1
    alpha0: float | tuple = 1.0
    alpha1: float | tuple = 0.0
    alpha2: float | tuple = 0.0
    tol: float = 1e-10
    max_iter: int = 100_000
    velocity_scale: float = 0.0
    rescale_velocity: bool = False

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}")
        if self.tau <= 0:
            raise ValueError("tau must be positive")

    def alphas(self, ncomp: int) -> np.ndarray:
        """Per-component (alpha0, alpha1, alpha2) rows; gflm pins (1, 0, 0)."""
        if self.scheme == "gflm":
            a = np.zeros((3, ncomp))
            a[0] = 1.0
            return a
        a = np.array(
            [
                _per_component(self.alpha0, ncomp),
                _per_component(self.alpha1, ncomp),
                _per_component(self.alpha2, ncomp),
            ]
        )
        if np.any(a < 0):
            raise ValueError("inertia coefficients must be non-negative")
        if np.any(np.all(a == 0, axis=0)):
            raise ValueError("alpha0, alpha1, alpha2 may not vanish simultaneously")
        return a


@dataclass
class FlowState:
    """Position/velocity pair plus the diagnostics of the current position."""

    u: WaveFunction
    v: np.ndarray
    iteration: int
    field: object
    u_nodal: np.ndarray
    energy: float
    mu: float
    r_hat: np.ndarray
    residual_norm: float
    load_n: np.ndarray


def _evaluate(problem: GPProblem, state: WaveFunction, v: np.ndarray, iteration: int) -> FlowState:
    ev = problem.evaluate(state)
    return FlowState(
        state, v, iteration, ev.field, ev.u_nodal, ev.energy, ev.mu, ev.r_hat, ev.residual_norm, ev.load_n
    )


def stabilization_shift(problem: GPProblem, fs: FlowState) -> np.ndarray:
    """Scalar shift per component: nodal maximum of the frozen-operator bound,
    clipped at zero."""
    p = problem.params
    u = fs.u_nodal
    h = fs.field.nodal
    if p.model == "single":
        vals = -0.5 * (p.beta * u[0] ** 2 + h + fs.mu)
        return np.array([max(float(vals.max()), 0.0)])
    habs = np.abs(p.background_field + h)
    s1 = 0.5 * (problem.V_nodal[0] - p.eta - p.beta * u[1] ** 2 + habs - fs.mu)
    s2 = 0.5 * (problem.V_nodal[1] + p.eta - p.beta * u[0] ** 2 + habs - fs.mu)
    return np.array([max(float(s1.max()), 0.0), max(float(s2.max()), 0.0)])


class _StepWorkspace:
    """Padded band copies so each step assembles its system in one fused op."""

    def __init__(self, problem: GPProblem):
        u = max(problem.C.halfbw, problem.kinetic_band.halfbw)
        n = problem.C.dim
        self.halfbw = u
        self.c_band = np.zeros((u + 1, n))
        self.c_band[u - problem.C.halfbw :, :] = problem.C.ab
        self.k_band = np.zeros((u + 1, n))
        self.k_band[u - problem.kinetic_band.halfbw :, :] = problem.kinetic_band.ab

    def solve(self, c_coef: float, k_coef: float, rhs: np.ndarray) -> np.ndarray:
        system = c_coef * self.c_band + k_coef * self.k_band
        return cho_solve_banded((cholesky_banded(system, lower=False, check_finite=False), False), rhs, check_finite=False)


def _asgf1_update(problem, ws, fs, alphas, tau, shifts):
    """Implicit step: eliminate the velocity and solve for the new position."""
    R2 = problem.R**2
    new_coeffs = np.empty_like(fs.u.coeffs)
    new_v = np.empty_like(fs.v)
    for j in range(fs.u.ncomp):
        a0, a1, a2 = alphas[:, j]
        u_j, v_j = fs.u.coeffs[j], fs.v[j]
        c_coef = a0 / tau + a1 / tau**2 + shifts[j]
        k_coef = 4 * a2 / (R2 * tau**2) + 2.0 / R2
        rhs = (
            problem.C.matvec((a0 / tau + a1 / tau**2 + shifts[j] + fs.mu) * u_j + (a1 / tau) * v_j)
            + problem.kinetic_band.matvec(4 * a2 / R2 * (u_j / tau**2 + v_j / tau))
            - fs.load_n[j]
        )
        new_coeffs[j] = ws.solve(c_coef, k_coef, rhs)
        new_v[j] = (new_coeffs[j] - u_j) / tau
    return new_coeffs, new_v


def _asgf2_update(problem, ws, fs, alphas, tau):
    """Explicit right-hand side: solve for the new velocity, then advance."""
    R2 = problem.R**2
    new_coeffs = np.empty_like(fs.u.coeffs)
    new_v = np.empty_like(fs.v)
    for j in range(fs.u.ncomp):
        a0, a1, a2 = alphas[:, j]
        u_j, v_j = fs.u.coeffs[j], fs.v[j]
        rhs = (
            problem.C.matvec((a1 / tau) * v_j + fs.mu * u_j)
            + problem.kinetic_band.matvec(4 * a2 / (R2 * tau) * v_j - 2.0 / R2 * u_j)
            - fs.load_n[j]
        )
        new_v[j] = ws.solve(a0 + a1 / tau, 4 * a2 / (R2 * tau), rhs)
        new_coeffs[j] = u_j + tau * new_v[j]
    return new_coeffs, new_v


def _advance(problem, ws, fs, cfg, alphas):
    if cfg.scheme == "asgf2":
        star, v_star = _asgf2_update(problem, ws, fs, alphas, cfg.tau)
    else:
        shifts = stabilization_shift(problem, fs)
        star, v_star = _asgf1_update(problem, ws, fs, alphas, cfg.tau, shifts)
    n2 = problem.norm2(star)
    if not np.isfinite(n2) or n2 <= 0.0:
        return fs.u.with_coeffs(star), v_star, False
    scale = 1.0 / math.sqrt(n2)
    if cfg.rescale_velocity:
        v_star = v_star * scale
    return fs.u.with_coeffs(star * scale), v_star, True


def flow_step(problem: GPProblem, fs: FlowState, cfg: FlowConfig):
    """One step of the configured scheme; returns the projected (state, velocity)."""
    ws = _StepWorkspace(problem)
    alphas = cfg.alphas(fs.u.ncomp)
    state, v, ok = _advance(problem, ws, fs, cfg, alphas)
    if not ok:
        raise FloatingPointError("flow step produced a non-normalizable state")
    return state, v


def asgf1_step(problem: GPProblem, fs: FlowState, cfg: FlowConfig):
    """One implicit step with stabilization shift (gflm and asgf1)."""
    if cfg.scheme == "asgf2":
        raise ValueError("asgf1_step called with an asgf2 configuration")
    return flow_step(problem, fs, cfg)


def asgf2_step(problem: GPProblem, fs: FlowState, cfg: FlowConfig):
    """One explicit-right-hand-side step (no stabilization shift)."""
    if cfg.scheme != "asgf2":
        cfg = replace(cfg, scheme="asgf2")
    return flow_step(problem, fs, cfg)


def evaluate_state(problem: GPProblem, state: WaveFunction, v: np.ndarray | None = None) -> FlowState:
    """Diagnostics bundle for a state (field solved, residual assembled)."""
    if v is None:
        v = np.zeros_like(state.coeffs)
    return _evaluate(problem, state, v, 0)


def run_flow(problem: GPProblem, cfg: FlowConfig, guess: WaveFunction | None = None) -> SteadyStateResult:
    """March the chosen scheme until the residual norm drops below tol.

    The field is re-solved for every iterate; the history records one
    (iteration, energy, mu, residual) row per step taken. Divergence (any
    non-finite coefficient, or |E| exceeding 1e6 * max(1, |E_0|)) aborts with
    status "diverged"; hitting max_iter reports "max_iter".
    """
    t0 = time.perf_counter()
    state = problem.project(guess if guess is not None else problem.initial_guess())
    v = cfg.velocity_scale * state.coeffs
    alphas = cfg.alphas(state.ncomp)
    ws = _StepWorkspace(problem)

    fs = _evaluate(problem, state, v, 0)
    e_ref = max(1.0, abs(fs.energy))
    history = []
    inv = {"norm_error_max": abs(problem.norm2(state.coeffs) - 1.0), "orthogonality_max": 0.0, "mu_identity_max": 0.0}
    while True:
        if fs.residual_norm < cfg.tol:
            status = "converged"
            break
        if fs.iteration >= cfg.max_iter:
            status = "max_iter"
            break
        try:
            state, v, ok = _advance(problem, ws, fs, cfg, alphas)
        except (FloatingPointError, np.linalg.LinAlgError, ValueError):
            ok = False
        if not ok:
            status = "diverged"
            break
        fs = _evaluate(problem, state, v, fs.iteration + 1)
        history.append((fs.iteration, fs.energy, fs.mu, fs.residual_norm))
        inv["norm_error_max"] = max(inv["norm_error_max"], abs(problem.norm2(state.coeffs) - 1.0))
        inv["orthogonality_max"] = max(inv["orthogonality_max"], abs(problem.inner(fs.r_hat, state.coeffs)))
        gap = problem.mu_energy_gap(state, fs.field, state_nodal=fs.u_nodal)
        inv["mu_identity_max"] = max(inv["mu_identity_max"], abs(fs.mu - (fs.energy - gap)))
        if not np.isfinite(fs.energy) or not np.isfinite(fs.residual_norm) or abs(fs.energy) > DIVERGENCE_FACTOR * e_ref:
            status = "diverged"
            break

    hist = np.array(history, dtype=float).reshape(len(history), 4)
    return SteadyStateResult(
        converged=(status == "converged"),
        status=status,
        energy=fs.energy,
        mu=fs.mu,
        masses=problem.masses(fs.u),
        iterations=fs.iteration,
        wall_seconds=time.perf_counter() - t0,
        residual_norm=fs.residual_norm,
        history=hist,
        state=fs.u,
        field=fs.field,
        invariants=inv,
    )
