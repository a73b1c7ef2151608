"""Compute the S=2 central vortex of the single-component model four ways.

The condensate couples to its own magnetic field through the radial Poisson
equation, so each energy evaluation carries a field solve. All four solvers
must land on the same minimizer; the reference values below are the
published 10-digit energy and chemical potential for this configuration.
"""

import math
import time

import numpy as np

from gpvortex import CgConfig, FlowConfig, GPProblem, ModelParams, PerturbConfig, run_flow, run_ppncg

E_REF, MU_REF = 0.4666956706, 0.5688732593

problem = GPProblem(
    ModelParams("single", winding=2, beta=30.0, gamma=math.pi, radius=20.0, modes=200)
)

runs = [
    ("gflm   tau=1", lambda: run_flow(problem, FlowConfig("gflm", tau=1.0))),
    (
        "asgf1  tau=1",
        lambda: run_flow(problem, FlowConfig("asgf1", tau=1.0, alpha0=0.01, alpha1=1.0, alpha2=0.5)),
    ),
    (
        "asgf2  tau=1",
        lambda: run_flow(problem, FlowConfig("asgf2", tau=1.0, alpha0=0.015, alpha1=1.1, alpha2=0.5)),
    ),
    ("ppncg       ", lambda: run_ppncg(problem, CgConfig(), PerturbConfig(seed=1))),
]

print(f"reference: E = {E_REF:.10f}, mu = {MU_REF:.10f}")
print(f"{'solver':14s} {'iters':>6s} {'seconds':>8s} {'E - ref':>10s} {'mu - ref':>10s}")
last = None
for name, job in runs:
    t0 = time.perf_counter()
    last = job()
    dt = time.perf_counter() - t0
    print(
        f"{name:14s} {last.iterations:6d} {dt:8.2f} {last.energy - E_REF:+10.1e} "
        f"{last.mu - MU_REF:+10.1e}   [{last.status}]"
    )

r = np.linspace(0.0, problem.R, 1001)
phi = problem.sample_profile(last.state, r)[0]
i = int(np.argmax(phi))
print(f"\nvortex profile peak: phi = {phi[i]:.6f} at r = {r[i]:.2f}")
