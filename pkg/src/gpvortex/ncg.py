"""Perturbed preconditioned nonlinear conjugate gradient on the norm sphere.

Minimizes the condensate energy over the unit weighted-L2 sphere by a
projected conjugate gradient iteration: a shifted-kinetic preconditioner
applied through one banded solve, Polak-Ribiere(+) or Fletcher-Reeves
momentum, tangent-space projection of the search direction, a great-circle
update phi <- cos(theta) phi + sin(theta) p_hat with the angle found by a
second-order guess refined by Brent's method, and a seeded tangent-noise
perturbation loop that restarts the iteration to escape saddle points.

The field is re-solved at every energy evaluation, including every line
search trial point.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import brent as _brent

from .problem import GPProblem, StateEval, SteadyStateResult, WaveFunction
from .spectral import BandedCholesky, banded_combine

__all__ = [
    "CgConfig",
    "PerturbConfig",
    "CgState",
    "apply_preconditioner",
    "momentum_beta",
    "line_search_theta",
    "cg_iterate",
    "saddle_escape",
    "run_ppncg",
]


@dataclass(frozen=True)
class CgConfig:
    """Stopping rule, momentum variant and line-search controls."""

    tol: float = 1e-10
    max_iter: int = 5000
    momentum: str = "pr+"  # "pr+" or "fr"
    theta_small: float = 1e-7
    line_tol: float = 1e-10
    max_line_evals: int = 60
    curvature_step: float = 1e-4

    def __post_init__(self):
        if self.momentum not in ("pr+", "fr"):
            raise ValueError("momentum must be 'pr+' or 'fr'")


@dataclass(frozen=True)
class PerturbConfig:
    """Saddle-escape controls: tangent noise size, probe length, acceptance."""

    delta: float = 1e-2
    probe_iterations: int = 7
    escape_threshold: float = 1e-9
    max_escape_rounds: int = 3
    seed: int = 0

    def __post_init__(self):
        if self.delta <= 0:
            raise ValueError("perturbation amplitude must be positive")
        if self.probe_iterations < 1:
            raise ValueError("at least one probe iteration is required")
        if self.max_escape_rounds < 0:
            raise ValueError("max_escape_rounds must be non-negative")


@dataclass
class CgState:
    """Current iterate plus the previous residual/direction bookkeeping."""

    phi: WaveFunction
    ev: StateEval
    iteration: int = 0
    r_prev: Optional[np.ndarray] = None
    pr_prev: Optional[np.ndarray] = None
    rpr_prev: Optional[float] = None
    d_prev: Optional[np.ndarray] = None
    stalled: int = 0
    last_tangency: float = 0.0

    @property
    def energy(self) -> float:
        return self.ev.energy

    @property
    def residual_norm(self) -> float:
        return self.ev.residual_norm


def fresh_state(problem: GPProblem, phi: WaveFunction) -> CgState:
    phi = problem.project(phi)
    return CgState(phi, problem.evaluate(phi))


def apply_preconditioner(problem: GPProblem, r_hat: np.ndarray, phi: WaveFunction) -> np.ndarray:
    """Apply the inverse shifted-kinetic operator to residual coefficients.

    Solves [c (R^2/4) C + (1/2)(A + S^2 B)] y = (R^2/4) C r per component,
    where c is the kinetic seminorm of the current state (both components
    summed in the binary model). The operator is symmetric positive definite.
    """
    c = problem.kinetic(phi.coeffs)
    quarter_r2 = problem.R**2 / 4
    system = banded_combine([(c * quarter_r2, problem.C), (0.5, problem.kinetic_band)])
    chol = BandedCholesky(system)
    out = np.empty_like(np.atleast_2d(r_hat))
    r2 = np.atleast_2d(r_hat)
    for j in range(r2.shape[0]):
        out[j] = chol.solve(quarter_r2 * problem.C.matvec(r2[j]))
    return out if r_hat.ndim == 2 else out[0]


def momentum_beta(problem: GPProblem, r, pr, r_prev, pr_prev, variant: str = "pr+") -> float:
    """Conjugacy weight from current and previous preconditioned residuals."""
    denom = problem.inner(r_prev, pr_prev)
    if denom <= 0.0:
        raise ValueError("previous preconditioned residual norm vanished")
    if variant == "fr":
        return problem.inner(r, pr) / denom
    raw = (problem.inner(r, pr) - problem.inner(r_prev, pr)) / denom
    return max(raw, 0.0)


def line_search_theta(
    problem: GPProblem,
    phi: WaveFunction,
    p_unit: np.ndarray,
    r_hat: np.ndarray,
    mu: float,
    energy0: float,
    cfg: CgConfig = CgConfig(),
):
    """Angle minimizing g(theta) = E(cos(theta) phi + sin(theta) p_unit).

    The slope g'(0) = 2<r + mu phi, p> is exact; the curvature g''(0) comes
    from a central difference of g. Small second-order steps are taken
    directly; otherwise the step seeds a bracket and Brent's method refines it
    within the evaluation budget. Returns (theta, stagnated); the accepted
    angle satisfies g(theta) <= g(0) + 1e-12.
    """
    evals = {"count": 0}
    cache: dict[float, float] = {0.0: energy0}

    def g(theta: float) -> float:
        t = float(theta)
        if t in cache:
            return cache[t]
        evals["count"] += 1
        coeffs = math.cos(t) * phi.coeffs + math.sin(t) * p_unit
        trial = phi.with_coeffs(coeffs)
        fld = problem.solve_field(trial)
        val = problem.energy(trial, fld)
        cache[t] = val
        return val

    slope0 = 2.0 * (problem.inner(r_hat, p_unit) + mu * problem.inner(phi.coeffs, p_unit))
    if slope0 >= 0.0:
        return 0.0, True

    h = cfg.curvature_step
    curv = (g(h) - 2.0 * energy0 + g(-h)) / h**2
    theta_newton = -slope0 / curv if curv > 0 else None
    if theta_newton is not None and abs(theta_newton) < cfg.theta_small:
        return theta_newton, False

    # Bracket a minimum in the descent direction, then refine with Brent.
    t1 = theta_newton if theta_newton is not None and 0 < theta_newton < 1.3 else 0.4
    while g(t1) >= energy0 and evals["count"] < cfg.max_line_evals:
        t1 *= 0.25
        if t1 < 1e-12:
            return 0.0, True
    if g(t1) >= energy0:
        return 0.0, True
    hi = min(2.0 * t1, 0.999 * math.pi / 2)
    while g(hi) < g(t1) and hi < 0.99 * math.pi / 2 and evals["count"] < cfg.max_line_evals:
        t1, hi = hi, min(2.0 * hi, 0.999 * math.pi / 2)
    if g(hi) <= g(t1):
        theta = t1 if g(t1) <= g(hi) else hi
    else:
        budget = max(4, (cfg.max_line_evals - evals["count"]) // 2)
        theta = float(_brent(g, brack=(0.0, t1, hi), tol=cfg.line_tol, maxiter=budget))
    best_t, best_v = min(cache.items(), key=lambda kv: kv[1])
    if best_v < g(theta):
        theta = best_t
    if g(theta) > energy0 + 1e-12:
        return 0.0, True
    return theta, False


def cg_iterate(problem: GPProblem, st: CgState, cfg: CgConfig = CgConfig()) -> CgState:
    """One full update of the projected conjugate gradient iteration.

    The first call from a fresh state is a preconditioned steepest-descent
    step (no momentum); later calls add momentum, project the direction onto
    the tangent space, line-search the great-circle angle and re-solve the
    field at the new iterate.
    """
    phi = st.phi
    r = st.ev.r_hat
    pr = apply_preconditioner(problem, r, phi)
    if st.d_prev is None:
        d = -pr
    else:
        try:
            beta = momentum_beta(problem, r, pr, st.r_prev, st.pr_prev, cfg.momentum)
        except ValueError:
            beta = 0.0
        d = -pr + beta * st.d_prev
    p = d - problem.inner(d, phi.coeffs) * phi.coeffs
    if problem.inner(r, p) >= 0.0:
        d = -pr
        p = d - problem.inner(d, phi.coeffs) * phi.coeffs
    pnorm2 = problem.norm2(p)
    if pnorm2 <= 0.0:
        return CgState(phi, st.ev, st.iteration + 1, r, pr, problem.inner(r, pr), d, st.stalled + 1, 0.0)
    p_unit = p / math.sqrt(pnorm2)
    tangency = abs(problem.inner(p_unit, phi.coeffs))

    theta, stagnated = line_search_theta(problem, phi, p_unit, r, st.ev.mu, st.ev.energy, cfg)
    if stagnated:
        return CgState(phi, st.ev, st.iteration + 1, r, pr, problem.inner(r, pr), d, st.stalled + 1, tangency)
    coeffs = math.cos(theta) * phi.coeffs + math.sin(theta) * p_unit
    phi_new = problem.project(phi.with_coeffs(coeffs))
    return CgState(
        phi_new,
        problem.evaluate(phi_new),
        st.iteration + 1,
        r,
        pr,
        problem.inner(r, pr),
        d,
        0,
        tangency,
    )


def saddle_escape(
    problem: GPProblem,
    st: CgState,
    pc: PerturbConfig,
    cfg: CgConfig = CgConfig(),
    rng: np.random.Generator | None = None,
):
    """One perturb-probe-decide round from a converged iterate.

    Draws seeded tangent noise, maps the perturbed state back to the sphere,
    runs a few conjugate gradient iterations, and keeps the probe only if the
    energy dropped below the pre-perturbation energy by more than the relative
    escape threshold; otherwise the original state is restored.
    """
    if rng is None:
        rng = np.random.default_rng(pc.seed)
    e0 = st.energy
    xi = problem.random_tangent(st.phi, rng)
    perturbed = problem.project(st.phi.with_coeffs(st.phi.coeffs + pc.delta * xi))
    probe = fresh_state(problem, perturbed)
    for _ in range(pc.probe_iterations):
        probe = cg_iterate(problem, probe, cfg)
    if e0 - probe.energy > pc.escape_threshold * max(abs(e0), 1e-6):
        return probe, True
    return st, False


def run_ppncg(
    problem: GPProblem,
    cfg: CgConfig = CgConfig(),
    pc: PerturbConfig | None = PerturbConfig(),
    guess: WaveFunction | None = None,
) -> SteadyStateResult:
    """Minimize to the residual tolerance, then attempt saddle escapes.

    Records one history row per conjugate gradient iteration (probe
    iterations included). ``pc=None`` disables the perturbation stage.
    """
    t0 = time.perf_counter()
    st = fresh_state(problem, guess if guess is not None else problem.initial_guess())
    rng = np.random.default_rng(pc.seed) if pc is not None else None

    history = []
    inv = {
        "norm_error_max": abs(problem.norm2(st.phi.coeffs) - 1.0),
        "orthogonality_max": 0.0,
        "mu_identity_max": 0.0,
        "tangency_max": 0.0,
        "energy_increase_max": 0.0,
        "escape_rounds": 0,
    }

    def record(prev_energy: float, state: CgState):
        history.append((len(history) + 1, state.energy, state.ev.mu, state.residual_norm))
        inv["norm_error_max"] = max(inv["norm_error_max"], abs(problem.norm2(state.phi.coeffs) - 1.0))
        inv["orthogonality_max"] = max(
            inv["orthogonality_max"], abs(problem.inner(state.ev.r_hat, state.phi.coeffs))
        )
        gap = problem.mu_energy_gap(state.phi, state.ev.field, state_nodal=state.ev.u_nodal)
        inv["mu_identity_max"] = max(inv["mu_identity_max"], abs(state.ev.mu - (state.energy - gap)))
        inv["tangency_max"] = max(inv["tangency_max"], state.last_tangency)
        inv["energy_increase_max"] = max(inv["energy_increase_max"], state.energy - prev_energy)

    status = "max_iter"

    def converge(state: CgState) -> CgState:
        nonlocal status
        while True:
            if state.residual_norm < cfg.tol:
                status = "converged"
                return state
            if len(history) >= cfg.max_iter:
                status = "max_iter"
                return state
            prev_e = state.energy
            state = cg_iterate(problem, state, cfg)
            record(prev_e, state)
            if not np.isfinite(state.energy) or not np.isfinite(state.residual_norm):
                status = "diverged"
                return state
            if state.stalled >= 3:
                status = "stagnated"
                return state

    st = converge(st)
    if pc is not None and status == "converged":
        for _ in range(pc.max_escape_rounds):
            e_before = st.energy
            probe, escaped = saddle_escape(problem, st, pc, cfg, rng)
            if not escaped:
                break
            inv["escape_rounds"] += 1
            # probe iterations enter the history with the perturbation jump
            # excluded from the monotonicity bookkeeping
            history.append((len(history) + 1, probe.energy, probe.ev.mu, probe.residual_norm))
            st = converge(probe)
            if status != "converged":
                break
            if abs(st.energy - e_before) <= pc.escape_threshold * max(abs(e_before), 1e-6):
                break

    return SteadyStateResult(
        converged=(status == "converged"),
        status=status,
        energy=st.energy,
        mu=st.ev.mu,
        masses=problem.masses(st.phi),
        iterations=len(history),
        wall_seconds=time.perf_counter() - t0,
        residual_norm=st.residual_norm,
        history=np.array(history, dtype=float).reshape(len(history), 4),
        state=st.phi,
        field=st.ev.field,
        invariants=inv,
    )
