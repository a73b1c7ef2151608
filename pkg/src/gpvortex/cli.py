"""Command line front end: solve one problem, sweep a parameter, or run a
regression table.

Exit codes: 0 on success/convergence, 2 on non-convergence or a failing
bench row, 1 on usage errors. All CSV output uses fixed 17-significant-digit
scientific formatting, so identical run specifications (including the seed)
produce bit-identical files.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from .bench import TABLE_IDS, run_bench
from .flows import FlowConfig, run_flow
from .ncg import CgConfig, PerturbConfig, run_ppncg
from .problem import GPProblem, ModelParams, harmonic_potential, lattice_potential

__all__ = ["RunSpec", "parse_runspec", "run", "main"]

SOLVERS = ("gflm", "asgf1", "asgf2", "ppncg")
FLOAT_FMT = "%.17e"


@dataclass(frozen=True)
class RunSpec:
    """Fully resolved configuration of one solve; every field has a default."""

    model: str = ""
    solver: str = ""
    winding: int = 0
    beta: float = 0.0
    gamma: float = 0.0
    eta: float = 0.0
    background_field: float = 0.0
    mass_split: float = 0.5
    potential: str = "none"
    radius: float = 20.0
    modes: int = 200
    tau: float = 0.1
    alpha0: str = "1"
    alpha1: str = "0"
    alpha2: str = "0"
    tol: float = 1e-10
    max_iter: int = 100_000
    velocity_scale: float = 0.0
    momentum: str = "pr+"
    perturb_delta: float = 1e-2
    seed: int = 0
    out: str = "out"
    sweep: str = ""
    values: str = ""

    def to_config_text(self) -> str:
        lines = ["# gpvortex run specification"]
        for f in fields(self):
            lines.append(f"{f.name} = {getattr(self, f.name)!r}")
        return "\n".join(lines) + "\n"


def _coerce(name: str, kind, raw: str):
    raw = raw.strip()
    if raw.startswith(("'", '"')) and raw.endswith(raw[0]) and len(raw) >= 2:
        raw = raw[1:-1]
    try:
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
    except ValueError as exc:
        raise SystemExit(f"error: malformed value for {name!r}: {raw!r}") from exc
    return raw


def parse_config_file(path: str) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment; unknown keys error."""
    types = {f.name: type(getattr(RunSpec(), f.name)) for f in fields(RunSpec)}
    out = {}
    for ln, line in enumerate(Path(path).read_text().splitlines(), 1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise SystemExit(f"error: {path}:{ln}: expected 'key = value'")
        key, raw = (s.strip() for s in stripped.split("=", 1))
        if key not in types:
            raise SystemExit(f"error: {path}:{ln}: unknown key {key!r}")
        out[key] = _coerce(key, types[key], raw)
    return out


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gpvortex",
        description="Steady symmetric and vortex states of magnetically coupled condensates.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="key = value configuration file (flags override)")
        p.add_argument("--model", choices=("single", "binary"))
        p.add_argument("--solver", choices=SOLVERS)
        p.add_argument("--winding", type=int, help="vortex winding number S (default 0)")
        p.add_argument("--beta", type=float, help="contact interaction strength")
        p.add_argument("--gamma", type=float, help="field coupling strength")
        p.add_argument("--eta", type=float, help="detuning (binary)")
        p.add_argument("--background-field", type=float, dest="background_field", help="uniform field H0 (binary)")
        p.add_argument("--mass-split", type=float, dest="mass_split", help="initial mass fraction of component 1")
        p.add_argument("--potential", help="none | harmonic:<k> (k r^2/2) | lattice")
        p.add_argument("--radius", type=float, help="truncation radius R")
        p.add_argument("--modes", type=int, help="spectral resolution N")
        p.add_argument("--tau", type=float, help="flow time step")
        p.add_argument("--alpha0", help="inertia coefficient (comma pair for binary)")
        p.add_argument("--alpha1", help="inertia coefficient (comma pair for binary)")
        p.add_argument("--alpha2", help="inertia coefficient (comma pair for binary)")
        p.add_argument("--tol", type=float, help="residual stopping tolerance")
        p.add_argument("--max-iter", type=int, dest="max_iter")
        p.add_argument("--velocity-scale", type=float, dest="velocity_scale", help="initial velocity = scale * state")
        p.add_argument("--momentum", choices=("fr", "pr+"), help="conjugate gradient momentum variant")
        p.add_argument("--perturb-delta", type=float, dest="perturb_delta", help="saddle-escape noise amplitude")
        p.add_argument("--seed", type=int, help="random seed")
        p.add_argument("--out", help="output directory")

    p_solve = sub.add_parser("solve", help="compute one steady state")
    add_common(p_solve)
    p_sweep = sub.add_parser("sweep", help="re-solve over a list of parameter values")
    add_common(p_sweep)
    p_sweep.add_argument("--sweep", help="parameter to vary: beta | eta | background_field | winding")
    p_sweep.add_argument("--values", help="comma separated parameter values")
    p_bench = sub.add_parser("bench", help="run a golden regression table")
    p_bench.add_argument("table", choices=TABLE_IDS)
    p_bench.add_argument("--out", help="output directory")
    return parser


def parse_runspec(argv: list[str]) -> tuple[str, RunSpec]:
    """Resolve (subcommand, RunSpec): flags override config-file keys override defaults."""
    parser = _build_parser()
    ns = parser.parse_args(argv)
    if ns.command == "bench":
        return "bench", replace(RunSpec(), out=ns.out or "out", model=ns.table)
    values = {}
    if ns.config:
        values.update(parse_config_file(ns.config))
    for f in fields(RunSpec):
        flag = getattr(ns, f.name, None)
        if flag is not None:
            values[f.name] = flag
    spec = replace(RunSpec(), **values)
    missing = [name for name in ("model", "solver") if not getattr(spec, name)]
    if missing:
        parser.error(f"missing required flag(s): {', '.join('--' + m for m in missing)}")
    if spec.solver not in SOLVERS:
        parser.error(f"unknown solver {spec.solver!r}")
    if spec.model not in ("single", "binary"):
        parser.error(f"unknown model {spec.model!r}")
    if ns.command == "sweep" and (not spec.sweep or not spec.values):
        parser.error("sweep requires --sweep and --values")
    return ns.command, spec


def _potential_fn(spec_text: str):
    if spec_text == "none":
        return None
    if spec_text == "lattice":
        return lattice_potential
    if spec_text.startswith("harmonic:"):
        return harmonic_potential(float(spec_text.split(":", 1)[1]))
    raise SystemExit(f"error: unknown potential {spec_text!r}")


def _alpha_value(text: str):
    parts = [float(p) for p in str(text).split(",")]
    return parts[0] if len(parts) == 1 else tuple(parts)


def _problem_for(spec: RunSpec) -> GPProblem:
    v = _potential_fn(spec.potential)
    if spec.model == "single" and v is not None:
        raise SystemExit("error: the single model takes no external potential")
    params = ModelParams(
        spec.model,
        winding=spec.winding,
        beta=spec.beta,
        gamma=spec.gamma,
        eta=spec.eta,
        background_field=spec.background_field,
        mass_split=spec.mass_split,
        V1=v,
        V2=v,
        radius=spec.radius,
        modes=spec.modes,
    )
    return GPProblem(params)


def _solve(spec: RunSpec):
    problem = _problem_for(spec)
    if spec.solver == "ppncg":
        result = run_ppncg(
            problem,
            CgConfig(tol=spec.tol, max_iter=spec.max_iter, momentum=spec.momentum),
            PerturbConfig(delta=spec.perturb_delta, seed=spec.seed),
        )
    else:
        cfg = FlowConfig(
            scheme=spec.solver,
            tau=spec.tau,
            alpha0=_alpha_value(spec.alpha0),
            alpha1=_alpha_value(spec.alpha1),
            alpha2=_alpha_value(spec.alpha2),
            tol=spec.tol,
            max_iter=spec.max_iter,
            velocity_scale=spec.velocity_scale,
        )
        result = run_flow(problem, cfg)
    return problem, result


def _write_history(path: Path, result):
    with path.open("w") as fh:
        fh.write("iter,energy,mu,residual\n")
        for row in result.history:
            fh.write(
                "%d,%s,%s,%s\n"
                % (int(row[0]), FLOAT_FMT % row[1], FLOAT_FMT % row[2], FLOAT_FMT % row[3])
            )


def _write_profile(path: Path, problem: GPProblem, result):
    r = np.linspace(0.0, problem.R, 1001)
    phi = problem.sample_profile(result.state, r)
    binary = problem.params.model == "binary"
    with path.open("w") as fh:
        if binary:
            h = problem.sample_field(result.field, r)
            fh.write("r,phi1,phi2,H\n")
            for i in range(r.size):
                fh.write(
                    "%s,%s,%s,%s\n"
                    % (FLOAT_FMT % r[i], FLOAT_FMT % phi[0, i], FLOAT_FMT % phi[1, i], FLOAT_FMT % h[i])
                )
        else:
            fh.write("r,phi1\n")
            for i in range(r.size):
                fh.write("%s,%s\n" % (FLOAT_FMT % r[i], FLOAT_FMT % phi[0, i]))


def _summary_dict(spec: RunSpec, result) -> dict:
    return {
        "converged": bool(result.converged),
        "status": result.status,
        "energy": float(result.energy),
        "mu": float(result.mu),
        "masses": [float(m) for m in result.masses],
        "iterations": int(result.iterations),
        "residual_norm": float(result.residual_norm),
        "wall_seconds": float(result.wall_seconds),
        "invariants": {k: (float(v) if isinstance(v, (float, np.floating)) else int(v)) for k, v in result.invariants.items()},
        "spec": {f.name: getattr(spec, f.name) for f in fields(spec)},
    }


def run(spec: RunSpec) -> int:
    """Execute one solve: history/profile CSVs, a summary record, exit code."""
    out = Path(spec.out)
    out.mkdir(parents=True, exist_ok=True)
    problem, result = _solve(spec)
    _write_history(out / "history.csv", result)
    _write_profile(out / "profile.csv", problem, result)
    (out / "summary.json").write_text(json.dumps(_summary_dict(spec, result), indent=2) + "\n")
    (out / "runspec.cfg").write_text(spec.to_config_text())
    print(
        f"{result.status}: E={result.energy:.10f} mu={result.mu:.10f} "
        f"iters={result.iterations} residual={result.residual_norm:.3e}"
    )
    return 0 if result.converged else 2


SWEEPABLE = ("beta", "eta", "background_field", "winding")


def run_sweep(spec: RunSpec) -> int:
    if spec.sweep not in SWEEPABLE:
        raise SystemExit(f"error: --sweep must be one of {SWEEPABLE}")
    try:
        raw = [v for v in spec.values.split(",") if v.strip()]
        vals = [int(v) if spec.sweep == "winding" else float(v) for v in raw]
    except ValueError:
        raise SystemExit("error: malformed --values list")
    if not vals:
        raise SystemExit("error: empty --values list")
    out = Path(spec.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    all_ok = True
    for v in vals:
        sub = replace(spec, **{spec.sweep: v}, out=str(out / f"{spec.sweep}_{v:g}"))
        problem, result = _solve(sub)
        Path(sub.out).mkdir(parents=True, exist_ok=True)
        _write_history(Path(sub.out) / "history.csv", result)
        _write_profile(Path(sub.out) / "profile.csv", problem, result)
        m = list(result.masses) + [math.nan] * (2 - len(result.masses))
        rows.append((v, result))
        all_ok &= result.converged
        print(
            f"{spec.sweep}={v:g}: {result.status} E={result.energy:.10f} "
            f"masses=({m[0]:.8f},{m[1]:.8f})"
        )
    with (out / "sweep.csv").open("w") as fh:
        fh.write(f"{spec.sweep},converged,energy,mu,mass1,mass2,iterations,residual\n")
        for v, result in rows:
            m = list(result.masses)
            m1 = FLOAT_FMT % m[0]
            m2 = FLOAT_FMT % m[1] if len(m) > 1 else ""
            fh.write(
                "%g,%d,%s,%s,%s,%s,%d,%s\n"
                % (
                    v,
                    int(result.converged),
                    FLOAT_FMT % result.energy,
                    FLOAT_FMT % result.mu,
                    m1,
                    m2,
                    result.iterations,
                    FLOAT_FMT % result.residual_norm,
                )
            )
    return 0 if all_ok else 2


def run_bench_cmd(table: str, out_dir: str) -> int:
    report = run_bench(table)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for line in report.lines():
        print(line)
    with (out / f"bench_{table}.csv").open("w") as fh:
        fh.write("row,status,converged,passed,energy,mu,iterations,iters_paper,reason\n")
        for r in report.rows:
            fh.write(
                '%s,%s,%d,%d,%s,%s,%d,%s,"%s"\n'
                % (
                    r["row"].replace(",", ";"),
                    r["status"],
                    int(r["converged"]),
                    int(r["passed"]),
                    FLOAT_FMT % r["energy"],
                    FLOAT_FMT % r["mu"],
                    r["iterations"],
                    "" if r["iters_paper"] is None else r["iters_paper"],
                    r["reason"],
                )
            )
    return 0 if report.passed else 2


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        command, spec = parse_runspec(argv)
        if command == "bench":
            return run_bench_cmd(spec.model, spec.out)
        if command == "sweep":
            return run_sweep(spec)
        return run(spec)
    except SystemExit as exc:
        # argparse exits with its own codes; normalize usage failures to 1
        if isinstance(exc.code, int):
            return 0 if exc.code == 0 else 1
        if exc.code is not None:
            print(exc.code, file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
