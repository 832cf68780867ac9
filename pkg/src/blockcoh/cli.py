"""Command-line interface: ``blockcoh {measure,ordering,fuzz,simulate,batch,rerun}``.

Exit codes: 0 success, 1 validation error, 2 numerical failure, 3 battery
violation. Every command writes a JSON run manifest next to its output
(``<out>.manifest.json``), to ``--manifest`` if given, or to stderr when the
output goes to stdout.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import analysis as A
from . import dynamics as D
from . import measures as M
from .io import RunManifest, artifact_version, load_projectors, load_state, write_csv
from .linalg import ValidationError, random_state
from .search import OptimizationError, OptimizerBudget

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_VIOLATION = 0, 1, 2, 3
FULL_GRID_POINTS = 1_000_000
FULL_BATCH_N = 10_000
CLOSED_FORM_PAIR_MEASURES = ("c_alpha_1", "c_tsallis_T", "c_wy", "c_rel_entropy", "c_l1_tilde", "c_rob_lower")

log = logging.getLogger("blockcoh")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def _budget(args) -> OptimizerBudget:
    return OptimizerBudget(restarts=args.restarts, seed=args.seed)


def _params(args) -> M.MeasureParams:
    return M.MeasureParams(alpha=args.alpha, z=args.z, beta=args.beta, budget=_budget(args))


def _parse_grid(spec: str, full: bool) -> np.ndarray:
    if full:
        return A.default_grid(FULL_GRID_POINTS)
    if spec == "table":
        return A.table_grid()
    if ":" in spec:
        try:
            lo, hi, n = spec.split(":")
            return np.linspace(float(lo), float(hi), int(n))
        except ValueError as exc:
            raise ValidationError(f"bad grid spec {spec!r}; use N, 'table' or lo:hi:n") from exc
    try:
        return A.default_grid(int(spec))
    except ValueError as exc:
        raise ValidationError(f"bad grid spec {spec!r}; use N, 'table' or lo:hi:n") from exc


def _pair_measure(name: str, P, base: float):
    """Parse ``name`` or ``name:alpha`` into a closed-form two-argument measure."""
    base_name, _, arg = name.partition(":")
    if base_name not in CLOSED_FORM_PAIR_MEASURES:
        raise ValidationError(
            f"ordering verdicts use closed-form measures only ({', '.join(CLOSED_FORM_PAIR_MEASURES)}), got {name!r}"
        )
    alpha = float(arg) if arg else 0.5
    if base_name == "c_alpha_1":
        return A.alpha_measure(alpha)
    if base_name == "c_tsallis_T":
        return lambda rho, P: M.c_tsallis_T(rho, P, alpha)
    if base_name == "c_rel_entropy":
        return lambda rho, P: M.c_rel_entropy(rho, P, base)
    return lambda rho, P: getattr(M, base_name)(rho, P)


# ---------------------------------------------------------------------------
# Commands. Each returns (exit code, list of output paths).
# ---------------------------------------------------------------------------


def cmd_measure(args):
    rho = load_state(args.state)
    P = load_projectors(args.projectors, rho.dim)
    name = args.measure
    if name == "c_rel_entropy":
        report = M.c_rel_entropy(rho, P, args.base)
    elif name == "c_rob_lower":
        report = M.MeasureReport(M.c_rob_lower(rho, P))
    elif name in M.MEASURES:
        report = M.MEASURES[name](rho, P, _params(args))
    else:
        raise ValidationError(f"unknown measure {name!r}; choose from {sorted(M.MEASURES) + ['c_rob_lower']}")
    d = {"measure": name, **report.to_dict()}
    text = json.dumps(d, indent=1, sort_keys=True) + "\n"
    _emit_text(args.out, text)
    return EXIT_OK, _outs(args)


def cmd_ordering(args):
    if args.state2 is None:
        raise ValidationError("ordering needs --state and --state2")
    r1, r2 = load_state(args.state), load_state(args.state2)
    P = load_projectors(args.projectors, r1.dim)
    curve = A.dis_curve(r1, r2, P, _parse_grid(args.grid, args.full))
    rows = zip(curve.alphas, curve.c1, curve.c2, curve.values)
    zeros = (("zero", "alpha_star"), [(str(i), z) for i, z in enumerate(curve.zeros)])
    write_csv(args.out, ("alpha", "C1", "C2", "DIS"), rows, trailer=zeros)
    return EXIT_OK, _outs(args)


def cmd_fuzz(args):
    P = load_projectors(args.projectors)
    if args.battery:
        rng = np.random.default_rng(args.seed)
        states = [random_state(P.dim, "mixed", rng) for _ in range(args.trials)]
        states += [random_state(P.dim, "pure", rng) for _ in range(args.trials)]
        report = A.inequality_battery(states, P, _budget(args))
        write_csv(
            args.out,
            ("check", "checked", "violations", "worst_margin"),
            [(name, str(c), str(v), w) for name, c, v, w in report.rows()],
        )
        return (EXIT_OK if report.ok else EXIT_VIOLATION), _outs(args)
    if not args.measure or "," not in args.measure:
        raise ValidationError("fuzz needs --battery or --measure A,B")
    name_a, name_b = args.measure.split(",", 1)
    ma, mb = _pair_measure(name_a, P, args.base), _pair_measure(name_b, P, args.base)
    rng = np.random.default_rng(args.seed)
    rows = []
    reversals = 0
    for i in range(args.trials):
        rho = random_state(P.dim, args.kind, rng).matrix
        sigma = random_state(P.dim, args.kind, rng).matrix
        v = A.ordering_check(rho, sigma, ma, mb, P)
        reversals += not v.agree
        rows.append((str(i), v.a_rho, v.a_sigma, v.b_rho, v.b_sigma, "1" if v.agree else "0"))
    summary = (("trials", "reversals"), [(str(args.trials), str(reversals))])
    write_csv(args.out, ("trial", "A_rho", "A_sigma", "B_rho", "B_sigma", "agree"), rows, trailer=summary)
    return EXIT_OK, _outs(args)


def _sim_config(args, scenario=None) -> D.SimulationConfig:
    initial = load_state(args.state).matrix if args.state else args.initial
    return D.SimulationConfig(
        omega1=args.omega1,
        omega2=args.omega2,
        ks=args.ks,
        kt=args.kt,
        alpha=args.alpha,
        scenario=scenario or args.scenario,
        t_end=args.t_end,
        dt=args.dt,
        stride=args.stride,
        initial=initial,
    )


def cmd_simulate(args):
    cfg = _sim_config(args)
    try:
        ts = D.simulate(cfg)
    except D.SimulationError as exc:
        log.error("%s (last good t = %g)", exc, exc.last_good_t)
        return EXIT_NUMERICAL, []
    write_csv(args.out, D.COLUMNS, ts.table)
    return EXIT_OK, _outs(args)


def cmd_batch(args):
    cfg = _sim_config(args, scenario="C")
    n = FULL_BATCH_N if args.full else args.n
    forced = None
    if args.state or args.initial_forced:
        forced = [D.initial_state(cfg.initial)] * n
    res = D.batch_yield_experiment(n, cfg, args.seed, forced)
    rows = [(str(i), ys, yt, r, status) for i, ys, yt, r, status in res.rows]
    s = res.summary
    trailer = (
        ("n", "n_ok", "mean", "std", "min", "max"),
        [(str(s["n"]), str(s["n_ok"]), s["mean"], s["std"], s["min"], s["max"])],
    )
    write_csv(args.out, ("state", "YS", "YT", "ratio", "status"), rows, trailer=trailer)
    return EXIT_OK, _outs(args)


def _emit_text(out, text):
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _outs(args):
    return [] if args.out in (None, "-") else [str(args.out)]


COMMANDS = {
    "measure": cmd_measure,
    "ordering": cmd_ordering,
    "fuzz": cmd_fuzz,
    "simulate": cmd_simulate,
    "batch": cmd_batch,
}
_NOT_PARAMS = ("command", "out", "manifest", "verbose", "func")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=None, help="output path ('-' or omitted: stdout)")
    common.add_argument("--manifest", default=None, help="manifest path (default: <out>.manifest.json)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--projectors", default="st", help="'st', index partition like '0|1,2,3', or JSON file")
    common.add_argument("--alpha", type=float, default=0.5)
    common.add_argument("--verbose", "-v", action="store_true")

    opt = argparse.ArgumentParser(add_help=False)
    opt.add_argument("--z", type=float, default=1.0)
    opt.add_argument("--beta", type=float, default=0.5)
    opt.add_argument("--restarts", type=int, default=16)
    opt.add_argument("--base", type=float, default=2.0, help="log base for c_rel_entropy (2 = bits)")

    dyn = argparse.ArgumentParser(add_help=False)
    dyn.add_argument("--omega1", type=float, default=0.8)
    dyn.add_argument("--omega2", type=float, default=0.3)
    dyn.add_argument("--ks", type=float, default=0.2)
    dyn.add_argument("--kt", type=float, default=0.05)
    dyn.add_argument("--dt", type=float, default=1e-3)
    dyn.add_argument("--t-end", type=float, default=40.0)
    dyn.add_argument("--stride", type=int, default=100)
    dyn.add_argument("--initial", default="S", choices=sorted(D.NAMED_INITIAL_STATES))
    dyn.add_argument("--state", default=None, help="initial state file (overrides --initial)")

    p = _Parser(prog="blockcoh", description="Block-coherence measures and radical-pair dynamics.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("measure", parents=[common, opt], help="evaluate one measure on a state file")
    s.add_argument("--state", required=True, help="state file or bundled fixture name")
    s.add_argument("--measure", required=True)

    s = sub.add_parser("ordering", parents=[common], help="difference curve of C_{alpha,1} for two states")
    s.add_argument("--state", required=True)
    s.add_argument("--state2", required=True)
    s.add_argument("--grid", default=str(A.DEFAULT_GRID_POINTS), help="N points, 'table', or lo:hi:n")
    s.add_argument("--full", action="store_true", help=f"use {FULL_GRID_POINTS} grid points")

    s = sub.add_parser("fuzz", parents=[common, opt], help="ordering reversals or the inequality battery")
    s.add_argument(
        "--measure", default=None, help="pair 'A,B', e.g. c_l1_tilde,c_rel_entropy or c_alpha_1:0.1,c_alpha_1:0.9"
    )
    s.add_argument("--battery", action="store_true")
    s.add_argument("--kind", choices=("mixed", "pure"), default="mixed")
    s.add_argument("--trials", type=int, default=100)

    s = sub.add_parser("simulate", parents=[common, dyn], help="integrate the master equation")
    s.add_argument("--scenario", choices=sorted(D.SCENARIOS), default="C")

    s = sub.add_parser("batch", parents=[common, dyn], help="yield ratios for random pure initial states")
    s.add_argument("--n", type=int, default=100)
    s.add_argument("--full", action="store_true", help=f"simulate {FULL_BATCH_N} states")
    s.add_argument("--initial-forced", action="store_true", help="use --initial for every state instead of sampling")

    s = sub.add_parser("rerun", help="re-execute a run manifest")
    s.add_argument("manifest_path")
    s.add_argument("--out", default=None, help="override the recorded output path")
    s.add_argument("--manifest", default=None)
    s.add_argument("--verbose", "-v", action="store_true")
    return p


def _run(args) -> int:
    if args.command == "rerun":
        man = RunManifest.load(args.manifest_path)
        if man.command not in COMMANDS:
            raise ValidationError(f"manifest has unknown command {man.command!r}")
        out = args.out if args.out is not None else (man.outputs[0] if man.outputs else None)
        manifest_path = args.manifest
        args = argparse.Namespace(
            command=man.command, out=out, manifest=manifest_path, verbose=args.verbose, **man.params
        )
    if args.command == "fuzz" and args.trials < 1:
        raise ValidationError("--trials must be >= 1")
    if args.command == "batch" and args.n < 1:
        raise ValidationError("--n must be >= 1")
    code, outputs = COMMANDS[args.command](args)
    params = {k: v for k, v in sorted(vars(args).items()) if k not in _NOT_PARAMS}
    man = RunManifest(args.command, params, getattr(args, "seed", None), artifact_version(), outputs)
    if args.manifest:
        man.save(args.manifest)
    elif outputs:
        man.save(outputs[0] + ".manifest.json")
    else:
        sys.stderr.write(man.to_json() + "\n")
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # usage errors and --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return _run(args)
    except ValidationError as exc:
        sys.stderr.write(f"blockcoh: validation error: {exc}\n")
        return EXIT_VALIDATION
    except (OptimizationError, D.SimulationError, np.linalg.LinAlgError) as exc:
        sys.stderr.write(f"blockcoh: numerical failure: {exc}\n")
        return EXIT_NUMERICAL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
