"""Command line entry point: ``seli-mfg <command> ...``.

Exit codes: 0 success, 2 equilibrium not reached, 3 bad configuration,
4 acceptance or calibration failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .config import load_config
from .errors import CalibrationFailed, InvalidConfig, NotConverged, ParseError, SeliError
from .experiments import SWEEPABLE, calibrate_nu, run_sweep
from .finite import mean_field_deviation, simulate
from .outputs import emit_trajectories, write_baseline, write_csv, write_manifest
from .solver import baseline_evaluation, solve_mfe, summary_metrics

EXIT_OK, EXIT_NOT_CONVERGED, EXIT_CONFIG, EXIT_CRITERIA = 0, 2, 3, 4


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _out_dir(args, cfg) -> Path:
    return Path(args.out if args.out else cfg.output_dir)


def _print_summary(s, cfg):
    print(f"{'class':>10} {'m_I mfe':>10} {'m_I base':>10} {'reduction':>10} {'QoI mfe':>9} {'QoI base':>9}")
    for c, cls in enumerate(cfg.network.classes):
        red = s.infection_reduction_pct[c]
        red_s = "undefined" if red is None else f"{red:.2f}%"
        print(f"{f'k={cls.degree},i={cls.type_id}':>10} {s.infected_mfe[c]:10.4g} {s.infected_baseline[c]:10.4g} "
              f"{red_s:>10} {s.qoi_mfe[c]:9.4g} {s.qoi_baseline[c]:9.4g}")
    print(f"theta(T): equilibrium {s.theta_mfe:.4g}, baseline {s.theta_baseline:.4g}")


def cmd_solve(args) -> int:
    cfg = load_config(args.config)
    out = _out_dir(args, cfg)
    code = EXIT_OK
    try:
        sol = solve_mfe(cfg)
    except NotConverged as exc:
        print(f"error: {exc}", file=sys.stderr)
        sol, code = exc.solution, EXIT_NOT_CONVERGED
    base = baseline_evaluation(cfg)
    s = summary_metrics(sol, base, cfg)
    files = emit_trajectories(sol, base, cfg, out, s)
    write_manifest(out, cfg, files, {"iterations": sol.iterations_used, "residual": sol.final_residual,
                                     "converged": sol.converged})
    print(f"{'converged' if sol.converged else 'NOT converged'} after {sol.iterations_used} iterations, "
          f"residual {sol.final_residual:.3e}")
    _print_summary(s, cfg)
    print(f"wrote {len(files)} files to {out}")
    return code


def cmd_baseline(args) -> int:
    cfg = load_config(args.config)
    out = _out_dir(args, cfg)
    base = baseline_evaluation(cfg)
    files = write_baseline(base, cfg, out)
    write_manifest(out, cfg, files)
    for c, cls in enumerate(cfg.network.classes):
        print(f"k={cls.degree},i={cls.type_id}: m_I(T)={base.trajectory.final[c, 3]:.4g} "
              f"QoI(0)={base.qoi[0, c]:.4g} QoI(T)={base.qoi[-1, c]:.4g} cost={base.cumulative_cost[c]:.4g}")
    print(f"theta(T) = {base.aggregates.theta[-1]:.4g}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    out = _out_dir(args, cfg)
    code = EXIT_OK
    try:
        sol = solve_mfe(cfg)
    except NotConverged as exc:
        print(f"error: {exc}", file=sys.stderr)
        sol, code = exc.solution, EXIT_NOT_CONVERGED
    seed = cfg.seed if args.seed is None else args.seed
    res = simulate(cfg, sol.policy, args.n, args.replicas, seed)
    dev = mean_field_deviation(res, sol.trajectory)
    theta = sol.aggregates.theta
    path = write_csv(out / f"finite_N{args.n}.csv", ["t", "theta_N", "eta_N", "theta", "deviation"],
                     zip(cfg.grid.times, res.theta, res.eta, theta, dev))
    write_manifest(out, cfg.replace(seed=seed), [path], {"N": args.n, "replicas": args.replicas})
    gap = float(np.max(np.abs(res.theta - theta)))
    print(f"N={args.n} replicas={args.replicas} seed={seed}: sup deviation {dev.max():.4e}, "
          f"sup |theta_N - theta| {gap:.4e} ({gap / max(theta[-1], 1e-6):.2%} of theta(T))")
    return code


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    out = _out_dir(args, cfg)
    try:
        idx = cfg.network.index_of(args.class_degree, args.type)
    except KeyError as exc:
        raise InvalidConfig(str(exc.args[0])) from None
    points = run_sweep(cfg, args.param, idx, args.values, out_dir=out)
    for p in points:
        flag = "" if p.converged else "  (not converged)"
        print(f"{args.param}={p.value:g}: theta(T)={p.theta_at_T:.5g} QoI(T)={p.qoi_at_T[idx]:.4g} "
              f"alpha(T)={p.alpha_at_T[idx]:.4g}{flag}")
    return EXIT_OK if all(p.converged for p in points) else EXIT_NOT_CONVERGED


def cmd_calibrate(args) -> int:
    cfg = load_config(args.config)
    try:
        res = calibrate_nu(cfg, args.targets)
    except CalibrationFailed as exc:
        print(f"calibration failed: {exc}", file=sys.stderr)
        return EXIT_CRITERIA
    print(f"nu = {res.value:.6g} (sse {res.sse:.3e}, {res.evaluations} evaluations)")
    print("errors per class: " + ", ".join(f"{e:+.4f}" for e in res.errors))
    return EXIT_OK


def cmd_reproduce(args) -> int:
    from .reproduce import mandatory_passed, reproduce

    verdicts, files = reproduce(args.out, nu=args.nu, kappa=args.kappa, seed=args.seed)
    for v in verdicts:
        print(v.line())
    print(f"wrote {len(files)} files to {args.out}")
    return EXIT_OK if mandatory_passed(verdicts) else EXIT_CRITERIA


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="seli-mfg", description="Misinformation mean-field game solver")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    def with_config(name, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("config", help="JSON scenario file")
        sp.add_argument("--out", help="output directory (default: output_dir from the config)")
        return sp

    with_config("solve", "compute the equilibrium and compare it with the baseline").set_defaults(fn=cmd_solve)
    with_config("baseline", "evaluate the always-accept population").set_defaults(fn=cmd_baseline)
    sp = with_config("simulate", "simulate a finite population under the equilibrium policy")
    sp.add_argument("--n", type=int, required=True, help="population size")
    sp.add_argument("--replicas", type=int, default=20)
    sp.add_argument("--seed", type=int, default=None)
    sp.set_defaults(fn=cmd_simulate)
    sp = with_config("sweep", "solve once per value of a class parameter")
    sp.add_argument("--param", choices=SWEEPABLE, required=True)
    sp.add_argument("--class", dest="class_degree", type=int, required=True, help="degree of the class")
    sp.add_argument("--type", type=int, default=0, help="type id of the class")
    sp.add_argument("--values", type=_floats, required=True)
    sp.set_defaults(fn=cmd_sweep)
    sp = sub.add_parser("calibrate", help="fit the shared recovery rate to baseline infected fractions")
    sp.add_argument("config")
    sp.add_argument("--targets", type=_floats, required=True)
    sp.set_defaults(fn=cmd_calibrate)
    sp = sub.add_parser("reproduce", help="run the full reference study and print the verdict table")
    sp.add_argument("--out", default="reproduction")
    sp.add_argument("--nu", type=float, default=None, help="skip calibration and use this recovery rate")
    sp.add_argument("--kappa", type=float, default=None, help="skip calibration and use this delay price")
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(fn=cmd_reproduce)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.fn(args)
    except (ParseError, InvalidConfig) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NotConverged as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    except SeliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
