import math

import numpy as np
import pytest

from gpvortex.ncg import CgConfig, run_ppncg
from gpvortex.problem import (
    ExistenceWarning,
    GPProblem,
    ModelParams,
    WaveFunction,
    harmonic_potential,
    lattice_potential,
)


def single(winding=0, beta=0.0, gamma=0.0, radius=20.0, modes=200):
    return GPProblem(
        ModelParams("single", winding=winding, beta=beta, gamma=gamma, radius=radius, modes=modes)
    )


def binary(**kw):
    kw.setdefault("radius", 12.0)
    kw.setdefault("modes", 64)
    return GPProblem(ModelParams("binary", **kw))


def test_params_validation():
    with pytest.raises(ValueError):
        ModelParams("both")
    with pytest.raises(ValueError):
        ModelParams("single", radius=0.5)
    with pytest.raises(ValueError):
        ModelParams("single", modes=4)
    with pytest.raises(ValueError):
        ModelParams("single", winding=-1)
    with pytest.raises(ValueError):
        ModelParams("binary", mass_split=1.5)
    with pytest.raises(ValueError):
        ModelParams("single", V1=lattice_potential)


def test_beta_threshold_warning():
    with pytest.warns(ExistenceWarning):
        p = ModelParams("single", winding=0, beta=6.0)
    assert p.beta_exceeds_threshold
    with pytest.warns(ExistenceWarning):
        pb = ModelParams("binary", winding=0, beta=12.0)
    assert pb.beta_exceeds_threshold
    ok = ModelParams("single", winding=2, beta=30.0)
    assert not ok.beta_exceeds_threshold


def test_initial_guess_values():
    p0 = single(winding=0)
    st0 = p0.initial_guess()
    assert p0.sample_profile(st0, np.array([0.0]))[0, 0] == pytest.approx(1 / math.sqrt(math.pi), abs=1e-9)
    p2 = single(winding=2)
    st2 = p2.initial_guess()
    assert p2.sample_profile(st2, np.array([1.0]))[0, 0] == pytest.approx(
        math.exp(-0.5) / math.sqrt(2 * math.pi), abs=1e-9
    )
    # continuum norm is exactly 1; the projected coefficients reproduce it
    for S in (0, 1, 3, 5):
        p = single(winding=S)
        profile = p.r_nodes**S * np.exp(-(p.r_nodes**2) / 2) / math.sqrt(math.pi * math.factorial(S))
        raw = p.C_solve.solve(p.load(profile))
        assert abs(p.norm2(raw[None, :]) - 1.0) < 1e-8


def test_project_properties():
    p = single(winding=2, modes=64, radius=12.0)
    rng = np.random.default_rng(0)
    st = p.random_state(rng)
    assert abs(p.norm2(st.coeffs) - 1.0) < 1e-14
    again = p.project(st)
    assert np.abs(again.coeffs - st.coeffs).max() < 1e-15
    scaled = p.project(st.with_coeffs(7.0 * st.coeffs))
    assert np.abs(scaled.coeffs - st.coeffs).max() < 1e-14
    with pytest.raises(ValueError):
        p.project(st.with_coeffs(0.0 * st.coeffs))

    pb = binary()
    stb = pb.initial_guess()
    same = pb.project(stb)
    assert np.abs(same.coeffs - stb.coeffs).max() < 1e-15


def test_free_gaussian_energy_is_closed_form():
    for S, expected in ((0, 0.5), (2, 1.5)):
        p = single(winding=S)
        st = p.initial_guess()
        fld = p.solve_field(st)
        e, mu = p.energy_and_mu(st, fld)
        assert e == pytest.approx(expected, abs=1e-9)
        assert mu == pytest.approx(e, abs=1e-12)  # no interactions


def test_binary_harmonic_guess_energy():
    for S in (0, 1, 3):
        pb = binary(winding=S, radius=16.0, modes=160,
                    V1=harmonic_potential(1.0), V2=harmonic_potential(1.0))
        st = pb.initial_guess()
        fld = pb.solve_field(st)
        e, mu = pb.energy_and_mu(st, fld)
        assert e == pytest.approx(S + 1.0, abs=1e-8)
        assert mu == pytest.approx(S + 1.0, abs=1e-8)


def test_masses_follow_the_split():
    for split, expected in ((0.5, (0.5, 0.5)), (0.8, (0.8, 0.2))):
        pb = binary(mass_split=split)
        m = pb.masses(pb.initial_guess())
        assert m[0] == pytest.approx(expected[0], abs=1e-9)
        assert m[1] == pytest.approx(expected[1], abs=1e-9)
        assert m[0] + m[1] == pytest.approx(1.0, abs=1e-12)


def test_lattice_potential_values():
    assert lattice_potential(0.0) == 0.0
    assert lattice_potential(2.0) == pytest.approx(27.0, abs=1e-12)
    assert lattice_potential(4.0) == pytest.approx(8.0, abs=1e-12)


def _random_problem_states(problem, n, seed):
    rng = np.random.default_rng(seed)
    return [problem.random_state(rng) for _ in range(n)], rng


def test_mu_energy_identity_on_random_states():
    ps = single(winding=2, beta=10.0, gamma=math.pi, modes=64, radius=12.0)
    pb = binary(winding=1, beta=5.0, gamma=math.pi, eta=3.0, background_field=2.0,
                V1=lattice_potential, V2=lattice_potential)
    for p in (ps, pb):
        states, _ = _random_problem_states(p, 5, 11)
        for st in states:
            fld = p.solve_field(st)
            e, mu = p.energy_and_mu(st, fld)
            gap = p.mu_energy_gap(st, fld)
            assert abs(mu - (e - gap)) < 1e-9


def test_residual_orthogonality_on_random_states():
    ps = single(winding=2, beta=10.0, gamma=math.pi, modes=64, radius=12.0)
    pb = binary(winding=1, beta=5.0, gamma=math.pi, eta=3.0, background_field=2.0,
                V1=lattice_potential, V2=lattice_potential)
    for p in (ps, pb):
        states, _ = _random_problem_states(p, 5, 13)
        for st in states:
            fld = p.solve_field(st)
            r_hat, _ = p.residual(st, fld)
            assert abs(p.inner(r_hat, st.coeffs)) < 1e-8


def test_residual_vanishes_at_discrete_eigenstate():
    pb = binary(winding=0, radius=16.0, modes=160,
                V1=harmonic_potential(1.0), V2=harmonic_potential(1.0))
    res = run_ppncg(pb, CgConfig(tol=1e-11), pc=None)
    st = res.state
    fld = pb.solve_field(st)
    _, rnorm = pb.residual(st, fld)
    assert rnorm < 1e-10


def directional_derivative(problem, state, direction, h):
    def energy_at(eps):
        trial = state.with_coeffs(state.coeffs + eps * direction)
        fld = problem.solve_field(trial)
        return problem.energy(trial, fld)

    return (energy_at(h) - energy_at(-h)) / (2 * h)


def test_gradient_factor_of_two():
    ps = single(winding=2, beta=5.0, gamma=math.pi, modes=48, radius=12.0)
    pb = binary(winding=1, beta=5.0, gamma=math.pi, eta=3.0, background_field=2.0,
                modes=48, V1=lattice_potential, V2=lattice_potential)
    for p in (ps, pb):
        rng = np.random.default_rng(17)
        for _ in range(3):
            st = p.random_state(rng)
            tangent = p.random_tangent(st, rng)
            fld = p.solve_field(st)
            _, mu = p.energy_and_mu(st, fld)
            r_hat, _ = p.residual(st, fld, mu)
            predicted = 2.0 * (p.inner(r_hat, tangent) + mu * p.inner(st.coeffs, tangent))
            d1 = directional_derivative(p, st, tangent, 1e-4)
            d2 = directional_derivative(p, st, tangent, 1e-5)
            richardson = (100.0 * d2 - d1) / 99.0
            assert abs(richardson - predicted) / max(abs(predicted), 1e-12) < 1e-6


def test_energy_independent_of_resolution():
    vals = []
    for radius, modes in ((20.0, 200), (24.0, 240)):
        p = single(winding=2, beta=30.0, gamma=math.pi, radius=radius, modes=modes)
        res = run_ppncg(p, CgConfig(tol=1e-10), pc=None)
        assert res.converged
        vals.append(res.energy)
    assert abs(vals[0] - vals[1]) < 1e-8


def test_wavefunction_and_diagnostics_roundtrip():
    p = single(winding=2, beta=10.0, gamma=math.pi, modes=64, radius=12.0)
    st = p.initial_guess()
    fld = p.solve_field(st)
    d = p.diagnostics(st, fld)
    assert d.energy == pytest.approx(p.energy(st, fld), abs=1e-14)
    assert d.chemical_potential == pytest.approx(p.chemical_potential(st, fld), abs=1e-14)
    assert len(d.masses) == 1
    assert isinstance(st, WaveFunction) and st.ncomp == 1
