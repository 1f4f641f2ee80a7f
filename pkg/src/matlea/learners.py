"""Matrix LEA learners: the potential method on Hermitian matrices, the
reduction to the spectraplex, and the MMWU baseline.

A learner is driven by alternating ``predict()`` and ``update(G)`` calls;
``lea_step`` / ``oco_step`` bundle the two.  ``PotentialLearner`` can check
the runtime invariants of its own analysis every round (see
``InvariantMonitor``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .hermitian import (
    EigenDecomposition,
    dagger,
    from_eig,
    inner,
    matrix_exp_normalized,
)
from .potentials import Family, PotentialSpec, discrete_derivative, evaluate

ZERO_EIG = 1e-14
NORM_SLACK = 1e-9


class ContractError(ValueError):
    """A caller broke a precondition that the regret guarantee relies on."""


class InvariantViolation(AssertionError):
    pass


def _op_norm(A: np.ndarray) -> float:
    w = np.linalg.eigvalsh(A)
    return float(max(-w[0], w[-1]))


def _diag_in_basis(V: np.ndarray, A: np.ndarray) -> np.ndarray:
    """Real diagonal of V^H A V."""
    return np.einsum("ji,jk,ki->i", V.conj(), A, V).real


# ---------------------------------------------------------------- unconstrained


@dataclass(frozen=True)
class LearnerState:
    S: np.ndarray
    t: int
    potential: PotentialSpec
    eig: EigenDecomposition  # of S

    @property
    def eps(self) -> float:
        return self.potential.eps

    @classmethod
    def initial(cls, potential: PotentialSpec) -> "LearnerState":
        d = potential.dim
        S = np.zeros((d, d), dtype=np.complex128)
        eig = EigenDecomposition(np.zeros(d), np.eye(d, dtype=np.complex128))
        return cls(S, 1, potential, eig)


def unconstrained_predict(state: LearnerState) -> tuple[np.ndarray, EigenDecomposition]:
    """X_t = (Phi_t(S_t + eps I) - Phi_t(S_t - eps I)) / (2 eps) and its eigendecomposition."""
    lam, V = state.eig
    x = np.asarray(discrete_derivative(state.potential, lam, state.t), dtype=float)
    # Phi_t convex => x is nondecreasing in lam, so the ascending order is kept
    order = np.argsort(x, kind="stable")
    eig = EigenDecomposition(x[order], V[:, order])
    return from_eig(eig.values, eig.vectors), eig


def unconstrained_update(state: LearnerState, G: np.ndarray, op_norm: float | None = None) -> LearnerState:
    if op_norm is None:
        op_norm = _op_norm(G)
    if op_norm > state.eps + NORM_SLACK * max(1.0, state.eps):
        raise ContractError(f"loss operator norm {op_norm:.6g} exceeds eps = {state.eps:.6g}")
    S = state.S - G
    S = 0.5 * (S + dagger(S))
    w, V = np.linalg.eigh(S)
    return LearnerState(S, state.t + 1, state.potential, EigenDecomposition(w, V))


# -------------------------------------------------------------------- reduction


@dataclass(frozen=True)
class ReductionContext:
    x_tilde: np.ndarray
    eig: EigenDecomposition
    X: np.ndarray
    U: np.ndarray | None
    round: int = 0


def reduce_predict(x_tilde: np.ndarray, eig: EigenDecomposition | None = None, round: int = 0):
    """Project an unconstrained prediction onto the spectraplex.

    Keeps the positive part of the spectrum and normalizes it to unit trace;
    falls back to I/d when no eigenvalue exceeds 1e-14.  ``U`` is the
    negative part normalized in Frobenius norm (absent when there is none).
    """
    if eig is None:
        w, V = np.linalg.eigh(x_tilde)
        eig = EigenDecomposition(w, V)
    lam, V = eig
    d = lam.shape[0]
    pos = np.maximum(lam, 0.0)
    total = float(pos.sum())
    if np.all(lam <= ZERO_EIG) or total <= 0.0:
        X = np.eye(d, dtype=np.complex128) / d
    else:
        X = from_eig(pos / total, V)
    neg = np.minimum(lam, 0.0)
    U = None
    if np.any(neg < 0.0):
        U = from_eig(neg / np.linalg.norm(neg), V)
    return X, ReductionContext(x_tilde, eig, X, U, round)


def surrogate_loss(G: np.ndarray, ctx: ReductionContext, round: int | None = None) -> np.ndarray:
    """G~ = Gbar - min(0, <Gbar, U>) U with Gbar = G - <G, X> I."""
    if round is not None and round != ctx.round:
        raise ContractError(f"reduction context is from round {ctx.round}, not {round}")
    d = G.shape[0]
    Gbar = G - inner(G, ctx.X) * np.eye(d)
    if ctx.U is None:
        return Gbar
    return Gbar - min(0.0, inner(Gbar, ctx.U)) * ctx.U


# --------------------------------------------------------------------- monitor


@dataclass
class InvariantMonitor:
    """Per-round runtime checks of the potential learner's analysis.

    Margins are reported normalized by their scale, so every check passes iff
    its minimum normalized margin is >= -tolerance.
    """

    samples: int = 32
    seed: int = 0
    strict: bool = False
    jensen_tol: float = 1e-8
    telescope_tol: float = 1e-6
    reduction_tol: float = 1e-9
    min_margin: dict = field(default_factory=dict)
    violations: list = field(default_factory=list)
    rounds: int = 0

    def __post_init__(self):
        self._rng = np.random.default_rng(self.seed)

    def record(self, name: str, t: int, margin: float, tol: float) -> None:
        prev = self.min_margin.get(name)
        if prev is None or margin < prev:
            self.min_margin[name] = float(margin)
        if margin < -tol:
            msg = f"{name} violated at round {t}: normalized margin {margin:.3e}"
            self.violations.append(msg)
            if self.strict:
                raise InvariantViolation(msg)

    @property
    def ok(self) -> bool:
        return not self.violations

    def random_comparators(self, d: int) -> list[np.ndarray]:
        out = []
        for _ in range(self.samples):
            r = int(self._rng.integers(1, min(d, 4) + 1))
            W = self._rng.standard_normal((d, r)) + 1j * self._rng.standard_normal((d, r))
            out.append(W)
        return out


# ------------------------------------------------------------------- learners


class Learner:
    """Common driver interface."""

    d: int
    l: float

    def predict(self) -> np.ndarray:  # pragma: no cover - interface
        raise NotImplementedError

    def update(self, G: np.ndarray) -> None:  # pragma: no cover - interface
        raise NotImplementedError

    def _check_loss(self, G: np.ndarray, bound: float | None = None) -> float:
        bound = self.l if bound is None else bound
        if G.shape != (self.d, self.d):
            raise ContractError(f"loss has shape {G.shape}, expected {(self.d, self.d)}")
        nrm = _op_norm(G)
        if nrm > bound + NORM_SLACK * max(1.0, bound):
            raise ContractError(f"loss operator norm {nrm:.6g} exceeds declared bound {bound:.6g}")
        return nrm


class PotentialLearner(Learner):
    """Potential method on Hermitian matrices behind the spectraplex reduction."""

    def __init__(self, d: int, l: float, family: str | Family = Family.ERFI, monitor: InvariantMonitor | None = None):
        if not l > 0:
            raise ContractError(f"loss bound l must be positive, got {l!r}")
        self.d = int(d)
        self.l = float(l)
        self.potential = PotentialSpec(Family(family), 2.0 * self.l, self.d)
        self.state = LearnerState.initial(self.potential)
        self.monitor = monitor
        self._ctx: ReductionContext | None = None
        self._boundary: float | None = None
        self._cum_inner = 0.0

    @property
    def t(self) -> int:
        return self.state.t

    def predict(self) -> np.ndarray:
        if self._ctx is None or self._ctx.round != self.state.t:
            x_tilde, eig = unconstrained_predict(self.state)
            _, self._ctx = reduce_predict(x_tilde, eig, round=self.state.t)
        return self._ctx.X

    def update(self, G: np.ndarray) -> None:
        G = np.asarray(G, dtype=np.complex128)
        g_norm = self._check_loss(G)
        self.predict()
        ctx = self._ctx
        G_tilde = surrogate_loss(G, ctx, round=self.state.t)
        gt_norm = _op_norm(G_tilde)
        old = self.state
        if self.monitor is not None:
            self._check_reduction(G, G_tilde, g_norm, gt_norm, ctx)
        self.state = unconstrained_update(old, G_tilde, op_norm=gt_norm)
        if self.monitor is not None:
            self._check_potential(old, G_tilde, ctx)
            self.monitor.rounds += 1

    # runtime invariants ----------------------------------------------------

    def _check_reduction(self, G, G_tilde, g_norm, gt_norm, ctx: ReductionContext) -> None:
        m, t = self.monitor, self.state.t
        m.record("reduction_opnorm", t, (2.0 * g_norm - gt_norm) / max(1.0, g_norm), m.reduction_tol)
        # <G, X_t - X> <= <G~, X~_t - X> for all X  <=>  <G,X_t> - <G~,X~_t> <= lambda_min(G - G~)
        lhs = inner(G, ctx.X) - float(np.dot(ctx.eig.values, _diag_in_basis(ctx.eig.vectors, G_tilde)))
        D = G - G_tilde
        scale = max(1.0, abs(lhs), float(np.max(np.abs(ctx.eig.values))) * gt_norm)
        lam_min = float(np.linalg.eigvalsh(D)[0])
        m.record("reduction_comparator", t, (lam_min - lhs) / scale, m.reduction_tol)
        worst = np.inf
        for W in m.random_comparators(self.d):
            val = float(np.trace(dagger(W) @ D @ W).real / np.sum(np.abs(W) ** 2))
            worst = min(worst, val - lhs)
        m.record("reduction_comparator_sampled", t, worst / scale, m.reduction_tol)

    def _check_potential(self, old: LearnerState, G_tilde, ctx: ReductionContext) -> None:
        m, t, p, eps = self.monitor, old.t, self.potential, self.potential.eps
        lam_old, V_old = old.eig
        g_diag = _diag_in_basis(V_old, G_tilde)
        phi_plus = np.asarray(evaluate(p, lam_old + eps, t))
        phi_minus = np.asarray(evaluate(p, lam_old - eps, t))
        rhs = float(np.sum((eps - g_diag) / (2 * eps) * phi_plus + (eps + g_diag) / (2 * eps) * phi_minus))
        lhs = float(np.sum(evaluate(p, self.state.eig.values, t)))  # tr Phi_t(S_{t+1})
        scale = max(1.0, abs(lhs), abs(rhs))
        m.record("jensen_step", t, (rhs - lhs) / scale, m.jensen_tol)

        # <G~_t, X~_t> in the eigenbasis shared by S_t and X~_t
        x = np.asarray(discrete_derivative(p, lam_old, t), dtype=float)
        step_inner = float(np.dot(x, g_diag))
        self._cum_inner += step_inner
        if t == 1:
            # tr Phi_1(-G~_1) with -G~_1 = S_2
            self._boundary = step_inner + lhs
            if p.family is Family.ERFI:
                cap = self.d * float(evaluate(p, eps, 1))
                m.record("erfi_boundary", t, (cap - lhs) / max(1.0, abs(cap)), m.jensen_tol)
        bound = self._boundary - lhs
        scale = max(1.0, abs(self._cum_inner), abs(self._boundary), abs(lhs))
        m.record("telescoping", t, (bound - self._cum_inner) / (t * scale), m.telescope_tol)


class EtaSchedule(str, Enum):
    MINIMAX = "minimax"
    ORACLE = "oracle"
    FIXED = "fixed"


class MMWULearner(Learner):
    """Matrix multiplicative weights, X_t proportional to exp(-eta_t sum_{i<t} G_i).

    Rates act on the normalized losses G / l: minimax eta_t = sqrt(log d / t),
    oracle eta_t = sqrt(S_rel / t), fixed eta_t = eta.
    """

    def __init__(self, d: int, l: float, schedule: str | EtaSchedule = EtaSchedule.MINIMAX,
                 eta: float | None = None, S_rel: float | None = None):
        if not l > 0:
            raise ContractError(f"loss bound l must be positive, got {l!r}")
        self.d, self.l = int(d), float(l)
        self.schedule = EtaSchedule(schedule)
        if self.schedule is EtaSchedule.FIXED and not (eta is not None and eta > 0):
            raise ContractError("fixed schedule needs eta > 0")
        if self.schedule is EtaSchedule.ORACLE and S_rel is None:
            raise ContractError("oracle schedule needs the comparator's S_rel")
        self.eta, self.S_rel = eta, S_rel
        self.t = 1
        self.cumulative = np.zeros((self.d, self.d), dtype=np.complex128)
        self.etas: list[float] = []  # rates on raw losses, one per round
        self.op_norms: list[float] = []
        self._X: np.ndarray | None = None

    def eta_t(self, t: int) -> float:
        if self.schedule is EtaSchedule.MINIMAX:
            base = math.sqrt(math.log(self.d) / t)
        elif self.schedule is EtaSchedule.ORACLE:
            base = math.sqrt(max(self.S_rel, 0.0) / t)
        else:
            base = self.eta
        return base / self.l

    def predict(self) -> np.ndarray:
        if self._X is None:
            eta = self.eta_t(self.t)
            self._X = mmwu_predict(self.cumulative, eta)
        return self._X

    def update(self, G: np.ndarray) -> None:
        G = np.asarray(G, dtype=np.complex128)
        nrm = self._check_loss(G)
        self.predict()
        self.etas.append(self.eta_t(self.t))
        self.op_norms.append(nrm)
        self.cumulative = self.cumulative + G
        self.t += 1
        self._X = None

    def bound_rhs(self, S_rel: float) -> float:
        """S/eta_T + (1/2) sum_t eta_t ||G_t||_op^2 over the rounds played so far."""
        if not self.etas:
            return 0.0
        eta_T = self.etas[-1]
        first = 0.0 if S_rel <= 0.0 else (math.inf if eta_T == 0.0 else S_rel / eta_T)
        return first + 0.5 * float(np.dot(self.etas, np.square(self.op_norms)))


def mmwu_predict(cumulative_loss: np.ndarray, eta_t: float) -> np.ndarray:
    if eta_t < 0:
        raise ContractError(f"eta_t must be nonnegative, got {eta_t!r}")
    d = cumulative_loss.shape[0]
    if eta_t == 0.0:
        return np.eye(d, dtype=np.complex128) / d
    return matrix_exp_normalized(-eta_t * cumulative_loss)


def lea_step(learner: Learner, G: np.ndarray):
    """Emit X_t, then feed the round's loss; returns (X_t, learner)."""
    X = learner.predict()
    learner.update(G)
    return X, learner


def oco_step(learner: Learner, grad: np.ndarray, L: float):
    """Linearized OCO step: the gradient at X_t is the round's loss matrix."""
    if L > learner.l * (1.0 + 1e-12):
        raise ContractError(f"gradient bound L={L} exceeds the learner's declared l={learner.l}")
    learner._check_loss(np.asarray(grad, dtype=np.complex128), bound=L)
    return lea_step(learner, grad)


def make_learner(kind: str, d: int, l: float, *, eta: float | None = None, S_rel: float | None = None,
                 monitor: InvariantMonitor | None = None) -> Learner:
    if kind in ("erfi", "expsq", "exp_square"):
        family = Family.ERFI if kind == "erfi" else Family.EXP_SQUARE
        return PotentialLearner(d, l, family, monitor=monitor)
    if kind.startswith("mmwu_"):
        return MMWULearner(d, l, kind[len("mmwu_"):], eta=eta, S_rel=S_rel)
    raise ValueError(f"unknown learner {kind!r}")


# ------------------------------------------------------------------ bookkeeping


@dataclass
class RegretTrace:
    """Per-round losses and cumulative regret against one fixed comparator."""

    comparator: np.ndarray | None = None
    t: list = field(default_factory=list)
    loss: list = field(default_factory=list)
    cum_regret: list = field(default_factory=list)
    bound: list = field(default_factory=list)
    cumulative_G: np.ndarray | None = None
    total_loss: float = 0.0

    def record(self, t: int, G: np.ndarray, X_t: np.ndarray, bound: float = float("nan")) -> None:
        loss = inner(G, X_t)
        self.total_loss += loss
        self.cumulative_G = G.copy() if self.cumulative_G is None else self.cumulative_G + G
        prev = self.cum_regret[-1] if self.cum_regret else 0.0
        step = loss - (inner(G, self.comparator) if self.comparator is not None else 0.0)
        self.t.append(t)
        self.loss.append(loss)
        self.cum_regret.append(prev + step)
        self.bound.append(bound)

    def regret_against(self, X: np.ndarray) -> float:
        """Final regret against any comparator, from the accumulated loss sum."""
        if self.cumulative_G is None:
            return 0.0
        return self.total_loss - inner(self.cumulative_G, X)
