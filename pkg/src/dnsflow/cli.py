"""Command-line entry point: run, verify and converge subcommands.

Exit codes: 0 success, 1 verification failure, 2 usage or config error,
3 solver failure.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import analysis, bench, snapshot
from .fields import BoundaryCondition, VelocityField, divergence, norm_l2
from .manifest import ConfigError, RunManifest, load_manifest
from .scheme import DnsConfig, SolverFailure, Trajectory, run

EXIT_OK = 0
EXIT_VERIFY_FAIL = 1
EXIT_USAGE = 2
EXIT_SOLVER = 3


def _build_initial(man: RunManifest) -> VelocityField:
    kind = man.initial.kind
    grid = man.cfg.grid
    if kind == "zero":
        return VelocityField.zeros(grid)
    if kind == "taylor_green":
        oracle = bench.TaylorGreenOracle(amplitude=man.initial.amplitude,
                                         nu=man.cfg.nu)
        a, _ = bench.taylor_green_field(0.0, grid, oracle)
        return a
    if kind == "random_solenoidal":
        return bench.random_solenoidal_field(grid, seed=man.seed,
                                             amplitude=man.initial.amplitude)
    if kind == "stream_bump":
        return bench.stream_bump_field(grid, amplitude=man.initial.amplitude)
    if kind == "snapshot":
        v, _ = snapshot.read_vtk(man.initial.file)
        if v.spec != grid:
            raise ConfigError("snapshot grid does not match the [grid] section")
        return v
    raise ConfigError(f"unhandled initial kind {kind}")


def _ladder_configs(man: RunManifest) -> list[DnsConfig]:
    if not man.ladder_hs:
        raise ConfigError("this subcommand needs a [ladder] section with h = ...")
    cfg = man.cfg
    return [
        DnsConfig(h=h, T=cfg.T, grid=cfg.grid, interp_order=cfg.interp_order,
                  path=cfg.path, nu=cfg.nu, minimizer_tol=cfg.minimizer_tol,
                  minimizer_max_iters=cfg.minimizer_max_iters,
                  div_tol=cfg.div_tol)
        for h in sorted(man.ladder_hs, reverse=True)
    ]


def _run_ladder(man: RunManifest, configs) -> list[Trajectory]:
    def one(cfg: DnsConfig) -> Trajectory:
        sub = RunManifest(cfg=cfg, initial=man.initial, out_dir=man.out_dir,
                          cadence=man.cadence, seed=man.seed, threads=1)
        return run(_build_initial(sub), cfg)

    if man.threads > 1:
        with ThreadPoolExecutor(max_workers=man.threads) as pool:
            return list(pool.map(one, configs))
    return [one(cfg) for cfg in configs]


def cmd_run(man: RunManifest) -> int:
    out = Path(man.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    a = _build_initial(man)
    cfg = man.cfg

    def snapshot_sink(n: int, result) -> None:
        if n % man.cadence == 0 or n == cfg.n_steps:
            snapshot.write_vtk(out / f"snapshot_{n}.vtk", result.v, result.p)

    snapshot.write_vtk(out / "snapshot_0.vtk", a)
    traj = run(a, cfg, sinks=[snapshot_sink])

    ledger = analysis.ledger_from_results(traj)
    (out / "ledger.csv").write_text(analysis.ledger_to_csv(ledger))

    report = [
        f"steps = {cfg.n_steps}",
        f"final_time = {traj.final_time:.17g}",
        f"projected_initial = {traj.projected_initial}",
        f"max_divergence = {max(float(np.max(np.abs(divergence(s.v).data))) for s in traj.results):.6e}",
        f"max_el_residual = {max(r.el_residual for r in traj.results):.6e}",
    ]
    step_rep = analysis.check_step_inequality(ledger)
    cum = analysis.check_cumulative_estimate(ledger, traj.final_time)
    report += [
        f"step_inequality_holds = {step_rep.all_hold}",
        f"max_fitted_c = {step_rep.max_fitted_c:.6e}",
        f"cumulative_estimate_holds = {cum.holds}",
        f"cumulative_bound = {cum.bound:.6e}",
        f"cumulative_lhs = {cum.max_lhs:.6e}",
    ]
    if man.initial.kind == "taylor_green":
        oracle = bench.TaylorGreenOracle(amplitude=man.initial.amplitude,
                                         nu=cfg.nu)
        exact, _ = bench.taylor_green_field(traj.final_time, cfg.grid, oracle)
        report.append(
            f"l2_error_vs_oracle = {norm_l2(traj.snapshots[-1] - exact):.6e}")
        if not math.isclose(traj.final_time, cfg.T, rel_tol=1e-12):
            report.append(f"comparison_time = {traj.final_time:.17g} "
                          "(T/h not integral; floor(T/h) steps taken)")
    (out / "report.txt").write_text("\n".join(report) + "\n")
    print("\n".join(report))
    return EXIT_OK


def _verify_checks(man: RunManifest, trajs: list[Trajectory]) -> list[tuple[str, bool, str]]:
    """Run every mandatory check over the ladder; returns (name, ok, detail)."""
    cfg = man.cfg
    checks: list[tuple[str, bool, str]] = []
    periodic = cfg.grid.bc is BoundaryCondition.PERIODIC
    div_bound = 1e-10 if periodic else 1e-8

    worst_div = 0.0
    for traj in trajs:
        for snap in traj.snapshots[1:]:
            worst_div = max(worst_div,
                            float(np.max(np.abs(divergence(snap).data))))
    checks.append(("divergence_free_steps", worst_div < div_bound,
                   f"max_divergence={worst_div:.3e} bound={div_bound:.0e}"))

    ledgers = [analysis.build_energy_ledger(t) for t in trajs]
    step_reports = [analysis.check_step_inequality(led) for led in ledgers]
    all_hold = all(rep.all_hold for rep in step_reports)
    max_cs = [rep.max_fitted_c for rep in step_reports]
    checks.append(("step_inequality_every_rung", all_hold,
                   "max_fitted_c per rung: "
                   + ", ".join(f"{c:.3e}" for c in max_cs)))

    stable = analysis.stable_within_factor(max_cs, factor=2.0)
    checks.append(("fitted_c_h_stable", stable,
                   "max/min within factor 2 (or all at the dissipative floor)"))

    cums = [analysis.check_cumulative_estimate(led, t.final_time)
            for led, t in zip(ledgers, trajs)]
    checks.append(("cumulative_energy_estimate", all(c.holds for c in cums),
                   "; ".join(f"lhs={c.max_lhs:.3e} bound={c.bound:.3e}"
                             for c in cums)))

    if len(trajs) >= 2:
        alpha_rep = analysis.monitor_assumption_a(trajs)
        checks.append(("gradient_scaling_monitor",
                       math.isfinite(alpha_rep.alpha),
                       f"alpha={alpha_rep.alpha:.4f} "
                       f"within_sqrt_h={alpha_rep.within_assumption}"))

        increments = [analysis.max_step_increment(t) for t in trajs]
        ratios = [increments[i] / increments[i + 1]
                  for i in range(len(increments) - 1)
                  if increments[i + 1] > 0.0]
        halving = bool(ratios) and all(1.5 <= r <= 2.5 for r in ratios)
        if all(inc == 0.0 for inc in increments):
            halving = True
        checks.append(("interpolant_increment_halving", halving,
                       "ratios: " + ", ".join(f"{r:.3f}" for r in ratios)))

    if periodic:
        phis = analysis.default_test_functions(trajs[0].final_time)
        decreasing = True
        details = []
        for k, phi in enumerate(phis):
            residuals = [abs(analysis.weak_residual(t, phi).linear_residual)
                         for t in trajs]
            zero_floor = 1e-12
            for i in range(len(residuals) - 1):
                if residuals[i + 1] > max(residuals[i], zero_floor):
                    decreasing = False
            details.append(f"phi{k}: " +
                           "->".join(f"{r:.2e}" for r in residuals))
        checks.append(("weak_residual_decreases", decreasing,
                       "; ".join(details)))

    const_res = analysis.material_derivative_identity(
        analysis.constant_analytic_field(0.7, -0.3), h=0.1, quad_nodes=8,
        spec=cfg.grid)
    r8 = analysis.material_derivative_identity(
        bench.TaylorGreenOracle().as_analytic_field(0.0), h=1e-2,
        quad_nodes=8, spec=cfg.grid)
    r16 = analysis.material_derivative_identity(
        bench.TaylorGreenOracle().as_analytic_field(0.0), h=1e-2,
        quad_nodes=16, spec=cfg.grid)
    md_ok = const_res < 1e-12 and r8 / r16 >= 3.5
    checks.append(("material_derivative_identity", md_ok,
                   f"constant={const_res:.1e} M8/M16={r8 / max(r16, 1e-300):.3f}"))
    return checks


def cmd_verify(man: RunManifest, inject_fault: int | None = None) -> int:
    out = Path(man.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    configs = _ladder_configs(man)
    trajs = _run_ladder(man, configs)
    if inject_fault is not None:
        traj = trajs[0]
        if not 0 <= inject_fault < len(traj.snapshots):
            raise ConfigError(f"fault index {inject_fault} outside the "
                              f"trajectory (0..{len(traj.snapshots) - 1})")
        traj.replace_snapshot(inject_fault, -traj.snapshots[inject_fault])
    checks = _verify_checks(man, trajs)
    lines = []
    for name, ok, detail in checks:
        lines.append(f"{name}: {'PASS' if ok else 'FAIL'} ({detail})")
    all_ok = all(ok for _, ok, _ in checks)
    lines.append(f"overall: {'PASS' if all_ok else 'FAIL'}")
    (out / "verify.txt").write_text("\n".join(lines) + "\n")
    print("\n".join(lines))
    return EXIT_OK if all_ok else EXIT_VERIFY_FAIL


def cmd_converge(man: RunManifest) -> int:
    out = Path(man.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if not man.ladder_hs:
        raise ConfigError("converge needs a [ladder] section with h = ...")
    if man.initial.kind != "taylor_green":
        raise ConfigError("the convergence study compares against the "
                          "Taylor-Green oracle; set initial kind accordingly")
    cells = man.ladder_cells or (man.cfg.grid.cells[0],)
    oracle = bench.TaylorGreenOracle(amplitude=man.initial.amplitude,
                                     nu=man.cfg.nu)
    if man.threads > 1:
        with ThreadPoolExecutor(max_workers=man.threads) as pool:
            table = bench.convergence_study(man.cfg, man.ladder_hs, cells,
                                            oracle=oracle, executor=pool)
    else:
        table = bench.convergence_study(man.cfg, man.ladder_hs, cells,
                                        oracle=oracle)
    (out / "convergence.csv").write_text(table.to_csv())
    text = table.to_text()
    (out / "convergence.txt").write_text(text)
    print(text, end="")
    return EXIT_OK


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dnsflow",
        description="Variational time-discrete incompressible flow solver")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (("run", "advance the scheme and emit snapshots"),
                            ("verify", "run the h-ladder and check every "
                                       "energy/weak-form statement"),
                            ("converge", "oracle convergence study")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="path to the config file")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--threads", type=int, default=None,
                       help="ladder fan-out width (default 1; env "
                            "DNS_FLOW_THREADS as fallback)")
        p.add_argument("--seed", type=int, default=0,
                       help="seed for random initial data")
        if name == "verify":
            p.add_argument("--inject-fault", type=int, default=None,
                           metavar="STEP",
                           help="self-test hook: negate snapshot STEP of the "
                                "first rung before the checks")
    return parser


def main(argv=None) -> int:
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    threads = args.threads
    if threads is None:
        threads = int(os.environ.get("DNS_FLOW_THREADS", "1") or "1")
    try:
        man = load_manifest(args.config, out_dir=args.out, seed=args.seed,
                            threads=threads)
        if args.command == "run":
            return cmd_run(man)
        if args.command == "verify":
            return cmd_verify(man, inject_fault=args.inject_fault)
        return cmd_converge(man)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SolverFailure as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
