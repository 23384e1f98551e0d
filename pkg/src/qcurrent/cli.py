"""Command-line entry point.

Exit codes: 0 success, 1 invariant failure, 2 config error, 3 numerical
failure (kernel or degeneracy problems).
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

import numpy as np

from . import continuum, currents, observables, steady
from .invariants import FAULTS, report_rows, run_invariant_suite
from .numerics import DEFAULT_DT, NumericalError, ode_step, trace_distance
from .scenario import (ConfigError, ScenarioConfig, columns, evaluate_point, header_lines,
                       initial_state, load_config, make_generator, render_table, run_scenario)

EXIT_OK, EXIT_INVARIANT, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3


def _emit(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
        return
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def cmd_steady(cfg: ScenarioConfig, args) -> int:
    row = evaluate_point(replace(cfg, sweep=None))
    _emit(render_table([row], columns(cfg), header_lines("steady", cfg, args.seed)), args.out)
    return EXIT_OK


def cmd_sweep(cfg: ScenarioConfig, args) -> int:
    if cfg.sweep is None:
        raise ConfigError("sweep needs a [sweep] section")
    rows = run_scenario(cfg, jobs=args.jobs)
    _emit(render_table(rows, columns(cfg), header_lines("sweep", cfg, args.seed)), args.out)
    return EXIT_OK


def cmd_contextuality(cfg: ScenarioConfig, args) -> int:
    """Sector-1 witness and currents along the sweep, with the two onsets."""
    if cfg.sweep is None:
        raise ConfigError("contextuality-scan needs a [sweep] section")
    cfg = replace(cfg, initial="basis-sector:1", outputs=("sector_current", "sector_mu"))
    rows = run_scenario(cfg, jobs=args.jobs)
    var = cfg.sweep.variable
    onset = next((r[var] for r in rows
                  if r["mu_min_a_1"] is not None and r["mu_min_a_1"] < currents.WITNESS_THRESHOLD),
                 None)
    th = [(r[var], r["J_th_a_1"]) for r in rows if r["J_th_a_1"] is not None]
    flip = next((x for (x, v) in th[1:] if th and np.sign(v) != np.sign(th[0][1])), None)
    header = header_lines("contextuality-scan", cfg, args.seed)
    header.append(f"contextuality onset: {var}={'none' if onset is None else repr(onset)}")
    header.append(f"thermal current sign change: {var}={'none' if flip is None else repr(flip)}")
    cols = [var, "kernel_dim", "status", "J_tun_a_1", "J_th_a_1", "J_a_1", "mu_min_a_1"]
    _emit(render_table(rows, cols, header), args.out)
    return EXIT_OK


def cmd_evolve(cfg: ScenarioConfig, args) -> int:
    gen = make_generator(cfg)
    rho = initial_state(cfg, gen.hamiltonian)
    if rho is None:
        raise ConfigError("evolve needs an explicit initial state, not basis-sector")
    final = steady.steady_state(gen, rho)
    spec = cfg.evolve
    dt = min(spec.dt, DEFAULT_DT * 10)
    times = np.linspace(0.0, spec.t_max, spec.samples)
    rows, t = [], 0.0
    for target in times:
        while target - t > 1e-12:
            h = min(dt, target - t)
            rho = ode_step(rho, gen.apply, h)
            t += h
        cur = currents.edge_current(gen, rho, "a")
        rows.append({"t": float(target), "trace": float(np.trace(rho).real),
                     "J_tun_a": cur.tunneling, "J_th_a": cur.thermal, "J_a": cur.total,
                     "Q_a": observables.heat_flux(gen, rho, "a"),
                     "Q_b": observables.heat_flux(gen, rho, "b"),
                     "N": observables.negativity(rho),
                     "distance_to_limit": trace_distance(rho, final)})
    cols = ["t", "trace", "J_tun_a", "J_th_a", "J_a", "Q_a", "Q_b", "N", "distance_to_limit"]
    header = header_lines("evolve", cfg, args.seed)
    header.append(f"evolve: t_max={spec.t_max!r} dt={dt!r} samples={spec.samples}")
    _emit(render_table(rows, cols, header), args.out)
    return EXIT_OK


def cmd_continuum(cfg: ScenarioConfig, args) -> int:
    spec = cfg.continuum
    rows = []
    for N in spec.Ns:
        p = continuum.ContinuumParams(N, spec.ell, spec.mass)
        rows.append({"N": N, "eps_N": p.eps, "ell_N": p.ell_N,
                     "error_band": continuum.current_error(p, 0, spec.band),
                     "error_entrywise": continuum.current_error(p, 0, None),
                     "continuity_residual": continuum.continuity_residual(p, 0)})
    header = header_lines("continuum-check", None, args.seed)
    header.append(f"continuum: ell={spec.ell!r} mass={spec.mass!r} band={spec.band!r}")
    for k in (1, 2, 3):
        header.append(f"riemann N=5000 k={k}: sum={continuum.riemann_sum(5000, k)!r} "
                      f"limit={continuum.riemann_limit(k)!r}")
    cols = ["N", "eps_N", "ell_N", "error_band", "error_entrywise", "continuity_residual"]
    _emit(render_table(rows, cols, header), args.out)
    return EXIT_OK


def cmd_invariants(cfg: ScenarioConfig, args) -> int:
    seed = 0 if args.seed is None else args.seed
    results = run_invariant_suite(seed, tuple(args.inject_fault or ()))
    header = header_lines("invariants", None, seed)
    if args.inject_fault:
        header.append(f"injected faults: {','.join(args.inject_fault)}")
    failed = sum(not r.passed for r in results)
    header.append(f"{len(results) - failed} passed, {failed} failed")
    cols = ["module", "invariant", "residual", "tol", "status"]
    _emit(render_table(report_rows(results), cols, header), args.out)
    return EXIT_INVARIANT if failed else EXIT_OK


COMMANDS = {
    "steady": cmd_steady,
    "sweep": cmd_sweep,
    "evolve": cmd_evolve,
    "continuum-check": cmd_continuum,
    "contextuality-scan": cmd_contextuality,
    "invariants": cmd_invariants,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="scenario config (INI)")
    common.add_argument("--out", help="write the CSV table here instead of stdout")
    common.add_argument("--seed", type=int, default=None, help="random seed (invariants)")
    common.add_argument("--jobs", type=int, default=1, help="parallel workers for sweeps")
    parser = argparse.ArgumentParser(prog="qcurrent", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "steady": "steady-state observables at one parameter point",
        "sweep": "observables along the configured sweep",
        "evolve": "fixed-step time evolution from the initial state",
        "continuum-check": "continuum-limit error ladder of the assembled current",
        "contextuality-scan": "Margenau-Hill witness and thermal current along a sweep",
        "invariants": "run the seeded invariant suite",
    }
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common], help=helps[name])
        if name == "invariants":
            sp.add_argument("--inject-fault", action="append", choices=FAULTS,
                            help="deliberately corrupt part of the model (suite self-test)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.jobs < 1:
        parser.error("--jobs must be >= 1")
    try:
        cfg = load_config(args.config)
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
