import math

import numpy as np
import pytest

from gpvortex.flows import (
    FlowConfig,
    asgf1_step,
    asgf2_step,
    evaluate_state,
    flow_step,
    run_flow,
    stabilization_shift,
)
from gpvortex.ncg import CgConfig, run_ppncg
from gpvortex.problem import GPProblem, ModelParams, harmonic_potential, lattice_potential


def single(**kw):
    kw.setdefault("winding", 2)
    kw.setdefault("radius", 12.0)
    kw.setdefault("modes", 48)
    return GPProblem(ModelParams("single", **kw))


def binary(**kw):
    kw.setdefault("radius", 12.0)
    kw.setdefault("modes", 48)
    return GPProblem(ModelParams("binary", **kw))


def test_config_validation():
    with pytest.raises(ValueError):
        FlowConfig(scheme="euler")
    with pytest.raises(ValueError):
        FlowConfig(tau=0.0)
    cfg = FlowConfig(scheme="asgf1", alpha0=0.0, alpha1=0.0, alpha2=0.0)
    with pytest.raises(ValueError):
        cfg.alphas(1)
    with pytest.raises(ValueError):
        FlowConfig(scheme="asgf1", alpha0=-1.0).alphas(1)
    with pytest.raises(ValueError):
        FlowConfig(scheme="asgf1", alpha0=(1.0, 1.0, 1.0)).alphas(2)
    # gflm pins the inertia triple
    np.testing.assert_array_equal(FlowConfig(scheme="gflm", alpha0=5.0).alphas(2),
                                  [[1.0, 1.0], [0.0, 0.0], [0.0, 0.0]])
    pair = FlowConfig(scheme="asgf1", alpha0=(0.1, 0.2), alpha1=1.0, alpha2=2.0).alphas(2)
    np.testing.assert_array_equal(pair, [[0.1, 0.2], [1.0, 1.0], [2.0, 2.0]])


def _dense_reference_step(problem, fs, cfg):
    """Assemble the per-step systems densely and advance, mirroring the scheme."""
    alphas = cfg.alphas(fs.u.ncomp)
    tau = cfg.tau
    R2 = problem.R**2
    Cd = problem.C.dense()
    ABd = problem.kinetic_band.dense()
    Kd = 2.0 / R2 * ABd
    shifts = (
        np.zeros(fs.u.ncomp) if cfg.scheme == "asgf2" else stabilization_shift(problem, fs)
    )
    new_u = np.empty_like(fs.u.coeffs)
    new_v = np.empty_like(fs.v)
    for j in range(fs.u.ncomp):
        a0, a1, a2 = alphas[:, j]
        u, v = fs.u.coeffs[j], fs.v[j]
        Md = a1 * Cd + 4 * a2 / R2 * ABd
        if cfg.scheme == "asgf2":
            lhs = a0 * Cd + Md / tau
            rhs = Md @ v / tau - Kd @ u - fs.load_n[j] + fs.mu * Cd @ u
            new_v[j] = np.linalg.solve(lhs, rhs)
            new_u[j] = u + tau * new_v[j]
        else:
            lhs = (a0 / tau) * Cd + Md / tau**2 + Kd + shifts[j] * Cd
            rhs = (
                (a0 / tau) * Cd @ u
                + Md @ (u / tau**2 + v / tau)
                + (shifts[j] + fs.mu) * Cd @ u
                - fs.load_n[j]
            )
            new_u[j] = np.linalg.solve(lhs, rhs)
            new_v[j] = (new_u[j] - u) / tau
    norm = math.sqrt(problem.norm2(new_u))
    return new_u / norm, new_v


@pytest.mark.parametrize("scheme,alphas", [
    ("gflm", (1.0, 0.0, 0.0)),
    ("asgf1", (0.02, 0.5, 0.3)),
    ("asgf2", (0.5, 1.0, 0.2)),
])
def test_one_step_matches_dense_oracle(scheme, alphas):
    for problem in (
        single(beta=5.0, gamma=math.pi, modes=16),
        binary(winding=1, beta=3.0, gamma=math.pi, eta=2.0, background_field=1.0,
               modes=16, V1=lattice_potential, V2=lattice_potential),
    ):
        rng = np.random.default_rng(7)
        st = problem.random_state(rng)
        v = 0.3 * rng.standard_normal(st.coeffs.shape)
        fs = evaluate_state(problem, st, v)
        cfg = FlowConfig(scheme=scheme, tau=0.2, alpha0=alphas[0], alpha1=alphas[1], alpha2=alphas[2])
        stepper = asgf2_step if scheme == "asgf2" else asgf1_step
        new_state, new_v = stepper(problem, fs, cfg)
        ref_u, ref_v = _dense_reference_step(problem, fs, cfg)
        assert np.abs(new_state.coeffs - ref_u).max() < 1e-12
        assert np.abs(new_v - ref_v).max() < 1e-12


def test_gflm_is_asgf1_special_case():
    problem = single(beta=5.0, gamma=math.pi)
    r1 = run_flow(problem, FlowConfig(scheme="gflm", tau=0.1, tol=0.0, max_iter=50))
    r2 = run_flow(problem, FlowConfig(scheme="asgf1", tau=0.1, alpha0=1.0, alpha1=0.0, alpha2=0.0,
                                      tol=0.0, max_iter=50))
    assert np.abs(r1.state.coeffs - r2.state.coeffs).max() < 1e-13
    np.testing.assert_allclose(r1.history[:, 1], r2.history[:, 1], atol=1e-13)


def test_fixed_point_is_preserved():
    problem = binary(winding=1, radius=16.0, modes=120,
                     V1=harmonic_potential(1.0), V2=harmonic_potential(1.0))
    converged = run_ppncg(problem, CgConfig(tol=1e-11), pc=None)
    assert converged.converged
    fs = evaluate_state(problem, converged.state)
    for cfg in (
        FlowConfig(scheme="gflm", tau=0.5),
        FlowConfig(scheme="asgf1", tau=1.0, alpha0=0.01, alpha1=1.0, alpha2=0.5),
        FlowConfig(scheme="asgf2", tau=1.0, alpha0=0.015, alpha1=1.1, alpha2=0.5),
    ):
        new_state, _ = flow_step(problem, fs, cfg)
        assert np.abs(new_state.coeffs - converged.state.coeffs).max() < 1e-10


def test_stabilization_shift_values():
    # single model: expression negative everywhere clips to zero
    p = single(winding=0, beta=0.0, gamma=0.0)
    fs = evaluate_state(p, p.initial_guess())
    assert fs.mu > 0
    assert stabilization_shift(p, fs)[0] == 0.0

    # forced chemical potential reproduces the nodal maximum
    p2 = single(winding=0, beta=1.0, gamma=0.0)
    fs2 = evaluate_state(p2, p2.initial_guess())
    fs2.mu = -2.0
    expected = np.max(-0.5 * (1.0 * fs2.u_nodal[0] ** 2 + 0.0 - 2.0))
    assert stabilization_shift(p2, fs2)[0] == pytest.approx(expected, rel=1e-14)

    # binary harmonic trap: max over nodes of (r^2/2 - mu)/2 at mu = 1
    pb = binary(winding=0, radius=12.0, V1=harmonic_potential(1.0), V2=harmonic_potential(1.0))
    fsb = evaluate_state(pb, pb.initial_guess())
    fsb.mu = 1.0
    shifts = stabilization_shift(pb, fsb)
    expected = 0.5 * (12.0**2 / 2 - 1.0)
    assert shifts[0] == pytest.approx(expected, rel=1e-14)
    assert shifts[1] == pytest.approx(expected, rel=1e-14)


def test_small_step_energy_decay():
    problem = single(winding=0, beta=0.0, gamma=math.pi, modes=64)
    res = run_flow(problem, FlowConfig(scheme="gflm", tau=0.01, tol=0.0, max_iter=200))
    energies = res.history[:, 1]
    assert np.all(np.diff(energies) <= 1e-10)
    assert res.invariants["norm_error_max"] < 1e-12
    assert res.invariants["orthogonality_max"] < 1e-8
    assert res.invariants["mu_identity_max"] < 1e-9


def test_velocity_options():
    problem = single(beta=5.0, gamma=math.pi)
    base = run_flow(problem, FlowConfig(scheme="asgf1", tau=1.0, alpha0=0.01, alpha1=1.0,
                                        alpha2=0.5, tol=1e-10, max_iter=3000, velocity_scale=10.0))
    assert base.converged
    rescaled = run_flow(problem, FlowConfig(scheme="asgf1", tau=1.0, alpha0=0.01, alpha1=1.0,
                                            alpha2=0.5, tol=1e-10, max_iter=3000,
                                            velocity_scale=10.0, rescale_velocity=True))
    assert rescaled.converged
    assert abs(base.energy - rescaled.energy) < 1e-9


def test_non_convergence_and_divergence_reporting():
    problem = single(beta=30.0, gamma=math.pi, modes=64)
    capped = run_flow(problem, FlowConfig(scheme="gflm", tau=0.1, tol=1e-10, max_iter=3))
    assert not capped.converged and capped.status == "max_iter"
    assert capped.iterations == 3 and capped.history.shape == (3, 4)

    blown = run_flow(problem, FlowConfig(scheme="asgf2", tau=10.0, alpha0=1.0, tol=1e-10, max_iter=400))
    assert not blown.converged
    assert blown.status in ("diverged", "max_iter")


def test_history_matches_iteration_count():
    problem = single(beta=5.0, gamma=math.pi)
    res = run_flow(problem, FlowConfig(scheme="gflm", tau=0.5, tol=1e-10, max_iter=4000))
    assert res.converged
    assert res.history.shape == (res.iterations, 4)
    assert res.history[-1, 3] < 1e-10
    # already-converged guess takes zero iterations
    again = run_flow(problem, FlowConfig(scheme="gflm", tau=0.5, tol=1e-8), guess=res.state)
    assert again.converged and again.iterations == 0 and again.history.shape == (0, 4)
