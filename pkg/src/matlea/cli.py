"""Command-line harness.  Exit codes: 0 pass, 2 assertion failure, 1 usage or config error."""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import experiments as ex
from . import inequality as ineq
from .adversaries import anticoncentration_check, anticoncentration_max_k
from .config import ConfigError, ExperimentConfig, load_config, parse_config
from .matrix_io import dump_matrix

EXIT_PASS, EXIT_USAGE, EXIT_FAIL = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse exits 2 by default, which is reserved for assertion failures
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="JSON experiment config")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--out", type=Path, help="directory for summary, CSV and matrix dumps")
    p.add_argument("--csv", action="store_true", help="print CSV to stdout instead of the JSON summary")


def _out_dir(args) -> Path | None:
    if args.out is None:
        return None
    args.out.mkdir(parents=True, exist_ok=True)
    return args.out


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def _emit(args, summary: dict, csv_text: str | None, stem: str) -> None:
    out = _out_dir(args)
    if out is not None:
        (out / f"{stem}.json").write_text(json.dumps(_jsonable(summary), indent=2, sort_keys=True) + "\n")
        if csv_text is not None:
            (out / f"{stem}.csv").write_text(csv_text)
    if args.csv and csv_text is not None:
        sys.stdout.write(csv_text)
    else:
        print(json.dumps(_jsonable(summary), indent=2, sort_keys=True))


# ------------------------------------------------------------------ runs


def _run_config(args, defaults: dict, mode: str) -> ExperimentConfig:
    overrides = {
        "seed": args.seed, "T": args.T, "l": args.l, "learner": args.learner, "eta": args.eta,
    }
    if args.d is not None:
        overrides["d"] = args.d
    if args.n_qubits is not None:
        overrides["n_qubits"] = args.n_qubits
    if args.config is not None:
        cfg = load_config(args.config, **overrides)
    else:
        raw = dict(defaults)
        if "d" in overrides or "n_qubits" in overrides:
            raw.pop("d", None)
            raw.pop("n_qubits", None)
        cfg = parse_config(raw, **overrides)
    if mode == "quantum" and cfg.quantum is None:
        raise ConfigError("quantum-run needs a 'quantum' section")
    if mode == "lea" and cfg.adversary is None:
        raise ConfigError("lea-run needs an 'adversary' section")
    return cfg


def _check_run(res: ex.RunResult) -> list[str]:
    s = res.summary
    failures = []
    if s["final_regret"] > s["bound"]:
        failures.append(f"final regret {s['final_regret']:.6g} exceeds bound {s['bound']:.6g}")
    if s.get("invariants_ok") is False:
        failures.append(f"{s['invariant_violations']} runtime invariant violations")
    if s.get("comparator_max_excess", -math.inf) > 0:
        failures.append(f"a comparator's regret exceeds its bound by {s['comparator_max_excess']:.6g}")
    return failures


def _finish_run(args, res: ex.RunResult, stem: str) -> int:
    failures = _check_run(res)
    res.summary["passed"] = not failures
    res.summary["failures"] = failures
    if res.trace.comparator is not None and args.out is not None:
        dump_matrix(_out_dir(args) / f"{stem}_comparator.json", res.trace.comparator)
    _emit(args, res.summary, res.csv(), stem)
    for f in failures:
        print(f"FAIL: {f}", file=sys.stderr)
    return EXIT_FAIL if failures else EXIT_PASS


def cmd_lea_run(args) -> int:
    cfg = _run_config(args, {"d": 16, "T": 1024, "adversary": {"kind": "greedy_sign", "tie_break": "random"}}, "lea")
    return _finish_run(args, ex.run(cfg), "lea_run")


def cmd_quantum_run(args) -> int:
    if args.table:
        configs = ex.depolarization_sweep(seed=args.seed or 0) + ex.gibbs_sweep(seed=args.seed or 0)
        rows = ex.table(configs)
        text = ex.rows_csv(rows)
        failures = []
        dep = [r["final_regret"] for r in rows if r["state"] == "depolarized"]
        if any(b >= a for a, b in zip(dep, dep[1:])):
            failures.append("depolarization sweep: regret not decreasing in gamma")
        gib = [r["S_rel"] for r in rows if r["state"] == "gibbs"]
        if any(b <= a for a, b in zip(gib, gib[1:])):
            failures.append("Gibbs sweep: S_rel not increasing in beta")
        failures += [f"{r['scenario']}: regret above bound" for r in rows if r["final_regret"] > r["bound"]]
        out = _out_dir(args)
        if out is not None:
            (out / "table.csv").write_text(text)
        sys.stdout.write(text)
        for f in failures:
            print(f"FAIL: {f}", file=sys.stderr)
        return EXIT_FAIL if failures else EXIT_PASS
    cfg = _run_config(args, {"n_qubits": 4, "T": 1024, "quantum": {"observables": "random_pauli", "loss": "l1"},
                             "state": {"kind": "depolarized", "gamma": 0.3}}, "quantum")
    return _finish_run(args, ex.run(cfg), "quantum_run")


# ------------------------------------------------------------ inequality

PHIS = {
    "abs": lambda a: ineq.absolute(),
    "affine": lambda a: ineq.affine(2.0, -1.0),
    "x2": lambda a: ineq.monomial(2),
    "x4": lambda a: ineq.monomial(4),
    "exp": lambda a: ineq.exponential(a.rate),
    "exp_square": lambda a: ineq.exp_square_fn(a.t, 1.0, a.d),
    "erfi": lambda a: ineq.erfi_fn(a.t, 1.0, a.d),
}


def cmd_ineq_check(args) -> int:
    out = _out_dir(args)
    if args.preset == "appendix-a":
        if args.phi != "abs":
            raise UsageError("the appendix-a preset is defined for --phi abs")
        s = ineq.appendix_a_instance()
        verdict = "VIOLATED" if s.lhs > s.rhs + ineq.VIOLATION_TOL else "HOLDS"
        print(f"lhs={float(s.lhs)!r}")
        print(f"rhs={float(s.rhs)!r}")
        print(f"verdict {verdict}")
        if out is not None:
            for key in ("S", "G"):
                dump_matrix(out / f"appendix_a_{key}.json", ineq.APPENDIX_A[key], eps=ineq.APPENDIX_A["eps"])
        return EXIT_PASS if verdict == "VIOLATED" else EXIT_FAIL

    seed = 0 if args.seed is None else args.seed
    if args.suite == "interleaving":
        res = ineq.interleaving_suite(args.trials, seed)
        ok = res.min_normalized_gap >= -1e-9
        print(f"interleaving trials={res.trials} min_normalized_gap={res.min_normalized_gap!r} "
              f"worst={res.worst_sequence} verdict {'HOLDS' if ok else 'VIOLATED'}")
        return EXIT_PASS if ok else EXIT_FAIL
    if args.suite == "conjecture":
        failures = 0
        for d in range(2, args.d + 1):
            for rep in ineq.monomial_conjecture_search(args.k_max, args.trials, d, [seed, d], k_min=args.k_min):
                failures += len(rep.flagged)
                print(f"x^{2 * rep.k} d={d} trials={rep.trials} min_normalized_gap={rep.min_normalized_gap!r} "
                      f"flagged={len(rep.flagged)}")
                if out is not None:
                    for i, f in enumerate(rep.flagged):
                        dump_matrix(out / f"conjecture_k{rep.k}_d{d}_{i}_S.json", f["S"], gap=f["gap"])
                        dump_matrix(out / f"conjecture_k{rep.k}_d{d}_{i}_G.json", f["G"], gap=f["gap"])
        return EXIT_FAIL if failures else EXIT_PASS

    names = list(PHIS) if args.phi == "all" else [args.phi]
    status = EXIT_PASS
    for name in names:
        res = ineq.random_jensen_suite(PHIS[name](args), args.d, args.trials, seed)
        expect_violation = name == "abs"
        if expect_violation:
            ok = res.first_violation is not None
        else:
            ok = res.min_normalized_gap >= -1e-8
        verdict = "VIOLATED" if res.violations else "HOLDS"
        print(f"{res.phi} d={res.d} trials={res.trials} min_gap={res.min_gap!r} "
              f"min_normalized_gap={res.min_normalized_gap!r} violations={res.violations} "
              f"first_violation={res.first_violation} verdict {verdict}")
        if res.violations and out is not None:
            dump_matrix(out / f"{name}_worst_S.json", res.argmin_S, gap=res.min_gap)
            dump_matrix(out / f"{name}_worst_G.json", res.argmin_G, gap=res.min_gap, eps=res.eps)
        if not ok:
            status = EXIT_FAIL
    return status


# ------------------------------------------------------------- lower bound


def cmd_lower_bound(args) -> int:
    seed = 0 if args.seed is None else args.seed
    seeds = [seed + i for i in range(args.seeds)]
    rows = ex.lower_bound(args.d, args.T, args.r, seeds, learner=args.learner, learner_seeds=args.learner_seeds)
    header = ("r", "k", "payoff", "reference", "C_emp", "learner_regret")
    text = ex.rows_csv([{h: getattr(r, h) if getattr(r, h) is not None else "" for h in header} for r in rows], header)
    failures = [f"r={r.r}: C_emp={r.C_emp:.6g} > {args.c_max}" for r in rows if r.C_emp > args.c_max]
    if args.anticoncentration:
        k = anticoncentration_max_k(args.d)
        ac = anticoncentration_check(args.d, None, k, args.anticoncentration, seed)
        print(f"# anticoncentration d={args.d} k={k}: empirical={ac.empirical:.6g} bound={ac.bound:.6g} "
              f"{'PASS' if ac.passed else 'FAIL'}", file=sys.stderr)
        if not ac.passed:
            failures.append("anti-concentration check failed")
    out = _out_dir(args)
    if out is not None:
        (out / "lower_bound.csv").write_text(text)
    sys.stdout.write(text)
    for f in failures:
        print(f"FAIL: {f}", file=sys.stderr)
    return EXIT_FAIL if failures else EXIT_PASS


def cmd_bound_table(args) -> int:
    S_values = args.S if args.S else [0.0, math.log(args.d) / 2, math.log(args.d)]
    try:
        rows = ex.bound_table(args.T, args.d, args.l, S_values, eta=args.eta)
    except ValueError as e:
        raise UsageError(str(e)) from None
    header = tuple(rows[0])
    text = ex.rows_csv(rows, header)
    out = _out_dir(args)
    if out is not None:
        (out / "bound_table.csv").write_text(text)
    sys.stdout.write(text)
    return EXIT_PASS


def cmd_verify(args) -> int:
    from .verification import verify_all

    checks = verify_all()
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name}: {c.detail} ({c.seconds:.1f}s)")
    out = _out_dir(args)
    if out is not None:
        (out / "verify.json").write_text(json.dumps([c.__dict__ for c in checks], indent=2) + "\n")
    return EXIT_PASS if all(c.passed for c in checks) else EXIT_FAIL


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="matlea", description="Matrix expert-advice learners, inequality checks and quantum runs.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    for name, fn, helptext in (("lea-run", cmd_lea_run, "single matrix expert-advice run"),
                               ("quantum-run", cmd_quantum_run, "online state-learning scenario")):
        p = sub.add_parser(name, help=helptext)
        _common(p)
        p.add_argument("--d", type=int)
        p.add_argument("--n-qubits", dest="n_qubits", type=int)
        p.add_argument("--T", type=int)
        p.add_argument("--l", type=float)
        p.add_argument("--learner", choices=["erfi", "expsq", "mmwu_minimax", "mmwu_oracle", "mmwu_fixed"])
        p.add_argument("--eta", type=float)
        if name == "quantum-run":
            p.add_argument("--table", action="store_true", help="depolarization and Gibbs sweep table")
        p.set_defaults(func=fn)

    p = sub.add_parser("ineq-check", help="one-sided Jensen and interleaving suites")
    _common(p)
    p.add_argument("--phi", choices=[*PHIS, "all"], default="abs")
    p.add_argument("--preset", choices=["appendix-a"])
    p.add_argument("--suite", choices=["jensen", "interleaving", "conjecture"], default="jensen")
    p.add_argument("--d", type=int, default=4)
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--t", type=int, default=4, help="round index for exp_square/erfi")
    p.add_argument("--rate", type=float, default=0.5, help="rate for exp")
    p.add_argument("--k-min", dest="k_min", type=int, default=3)
    p.add_argument("--k-max", dest="k_max", type=int, default=5)
    p.set_defaults(func=cmd_ineq_check)

    p = sub.add_parser("lower-bound", help="uniform-diagonal adversary vs. top-k comparators")
    _common(p)
    p.add_argument("--d", type=int, default=64)
    p.add_argument("--T", type=int, default=8192)
    p.add_argument("--r", type=float, nargs="+", default=[1.0, 2.0, 4.0])
    p.add_argument("--seeds", type=int, default=50)
    p.add_argument("--c-max", dest="c_max", type=float, default=3.0)
    p.add_argument("--learner", choices=["erfi", "expsq", "mmwu_minimax"])
    p.add_argument("--learner-seeds", dest="learner_seeds", type=int, default=0)
    p.add_argument("--anticoncentration", type=int, default=0, metavar="TRIALS")
    p.set_defaults(func=cmd_lower_bound)

    p = sub.add_parser("bound-table", help="closed-form regret bounds")
    _common(p)
    p.add_argument("--T", type=int, nargs="+", default=[1024, 4096])
    p.add_argument("--d", type=int, default=64)
    p.add_argument("--l", type=float, default=1.0)
    p.add_argument("--S", type=float, nargs="+")
    p.add_argument("--eta", type=float)
    p.set_defaults(func=cmd_bound_table)

    p = sub.add_parser("verify", help="quick invariant suite")
    _common(p)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, UsageError) as exc:
        print(f"matlea: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
