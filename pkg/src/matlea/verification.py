"""Quick invariant suite behind ``matlea verify``."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import inequality as ineq
from .config import parse_config
from .experiments import run
from .potentials import erfi, exp_square, evaluate, gaussian_ensemble_decomposition, check_recursion, laplace_quadrature_expsq


@dataclass
class Check:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0


def _appendix_a() -> tuple[bool, str]:
    s = ineq.appendix_a_instance()
    ok = abs(s.lhs - 2 * math.sqrt(2)) <= 1e-10 and abs(s.rhs - 2.0) <= 1e-10 and s.lhs > s.rhs
    return ok, f"lhs={float(s.lhs):.12g} rhs={float(s.rhs):.12g}"


def _jensen() -> tuple[bool, str]:
    worst = np.inf
    for phi in (ineq.affine(2.0, -1.0), ineq.monomial(2), ineq.monomial(4), ineq.exponential(0.5),
                ineq.exponential(-0.5), ineq.exp_square_fn(4, 1.0, 3), ineq.erfi_fn(4, 1.0, 3)):
        res = ineq.random_jensen_suite(phi, d=4, trials=1000, seed=1)
        worst = min(worst, res.min_normalized_gap)
    abs_res = ineq.random_jensen_suite(ineq.absolute(), d=4, trials=1000, seed=1)
    ok = worst >= -1e-8 and abs_res.first_violation is not None
    return ok, f"min normalized gap {worst:.3g}; |x| violated at trial {abs_res.first_violation}"


def _quadrature() -> tuple[bool, str]:
    worst = 0.0
    for t in (1, 4, 16):
        p = exp_square(1.0, 4)
        for s in (-3.0, 0.0, 2.5, 6.0):
            ref = float(evaluate(p, s, t))
            worst = max(worst, abs(laplace_quadrature_expsq(p, s, t) - ref) / ref,
                        abs(gaussian_ensemble_decomposition(p, s, t) - ref) / ref)
    return worst <= 1e-8, f"max relative error {worst:.3g}"


def _recursion() -> tuple[bool, str]:
    grid = np.linspace(-20.0, 20.0, 1001)
    worst = min(check_recursion(p, t, grid) for p in (exp_square(1.0, 4), erfi(1.0, 4)) for t in range(1, 17))
    return worst >= -1e-10, f"min margin {worst:.3g}"


def _runs() -> tuple[bool, str]:
    notes = []
    ok = True
    for adv in ("uniform_diag", "greedy_sign", "random_pauli", "zero"):
        cfg = parse_config({"seed": 3, "d": 8, "T": 256, "learner": "erfi", "monitor": True, "random_comparators": 16,
                            "adversary": {"kind": adv, "tie_break": "random"}, "state": {"kind": "pure"}})
        s = run(cfg).summary
        good = s["invariants_ok"] and s["final_regret"] <= s["bound"] and s["comparator_max_excess"] <= 0
        if adv == "zero":
            good = good and s["final_regret"] == 0.0
        ok = ok and good
        notes.append(f"{adv}:{s['final_regret']:.3g}/{s['bound']:.3g}")
    return ok, " ".join(notes)


def _determinism() -> tuple[bool, str]:
    cfg = parse_config({"seed": 11, "d": 8, "T": 128, "learner": "mmwu_minimax",
                        "adversary": {"kind": "random_hermitian"}})
    same = run(cfg).csv() == run(cfg).csv()
    return same, "byte-identical" if same else "CSV differs between reruns"


CHECKS: list[tuple[str, Callable[[], tuple[bool, str]]]] = [
    ("appendix_a_counterexample", _appendix_a),
    ("one_sided_jensen", _jensen),
    ("laplace_and_ensemble_quadrature", _quadrature),
    ("potential_recursion", _recursion),
    ("runtime_invariants_and_bounds", _runs),
    ("determinism", _determinism),
]


def verify_all() -> list[Check]:
    out = []
    for name, fn in CHECKS:
        t0 = time.perf_counter()
        passed, detail = fn()
        out.append(Check(name, bool(passed), detail, time.perf_counter() - t0))
    return out
