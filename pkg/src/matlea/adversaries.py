"""Loss-sequence generators, lower-bound comparators and the order-statistic check."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .hermitian import from_eig, random_hermitian
from .quantum import random_pauli

SIGN_ZERO_TOL = 1e-13


class AdversaryKind(str, Enum):
    UNIFORM_DIAG = "uniform_diag"
    GREEDY_SIGN = "greedy_sign"
    RANDOM_PAULI = "random_pauli"
    RANDOM_HERMITIAN = "random_hermitian"
    ZERO = "zero"


@dataclass(frozen=True)
class AdversarySpec:
    kind: AdversaryKind
    l: float = 1.0
    seed: int = 0
    tie_break: str = "zero"  # greedy_sign on null directions of X_t - rho: "zero" or "random"

    def __post_init__(self):
        object.__setattr__(self, "kind", AdversaryKind(self.kind))
        if not self.l > 0:
            raise ValueError(f"loss scale l must be positive, got {self.l!r}")
        if self.tie_break not in ("zero", "random"):
            raise ValueError(f"tie_break must be 'zero' or 'random', got {self.tie_break!r}")


def spectral_sign(A: np.ndarray, tol: float = SIGN_ZERO_TOL, rng: np.random.Generator | None = None) -> np.ndarray:
    """sgn(A) through the spectrum.

    Eigenvalues with |lambda| <= tol * max(1, ||A||) get sign 0, or a random
    +-1 when ``rng`` is given.
    """
    w, V = np.linalg.eigh(A)
    cut = tol * max(1.0, float(np.max(np.abs(w))))
    null = np.abs(w) <= cut
    fill = rng.choice([-1.0, 1.0], size=w.shape[0]) if rng is not None else np.zeros_like(w)
    s = np.where(null, fill, np.sign(w))
    return from_eig(s, V)


class Adversary:
    """Stateful loss generator; one ``next_loss`` call per round."""

    def __init__(self, spec: AdversarySpec, d: int):
        self.spec = spec
        self.d = int(d)
        self.rng = np.random.default_rng(spec.seed)
        if spec.kind is AdversaryKind.RANDOM_PAULI:
            n = self.d.bit_length() - 1
            if (1 << n) != self.d:
                raise ValueError(f"random_pauli needs d to be a power of 2, got {d}")
            self.n = n

    def next_loss(self, X_t: np.ndarray, rho_truth: np.ndarray | None = None) -> np.ndarray:
        kind, l, d = self.spec.kind, self.spec.l, self.d
        if kind is AdversaryKind.UNIFORM_DIAG:
            return np.diag(self.rng.uniform(-l, l, size=d)).astype(np.complex128)
        if kind is AdversaryKind.GREEDY_SIGN:
            if rho_truth is None:
                raise ValueError("greedy_sign needs the true state")
            rng = self.rng if self.spec.tie_break == "random" else None
            return l * spectral_sign(X_t - rho_truth, rng=rng)
        if kind is AdversaryKind.RANDOM_PAULI:
            sign = 1.0 if self.rng.integers(0, 2) else -1.0
            return sign * l * random_pauli(self.n, self.rng).matrix()
        if kind is AdversaryKind.RANDOM_HERMITIAN:
            A = random_hermitian(d, self.rng)
            w = np.linalg.eigvalsh(A)
            return A * (l / max(-w[0], w[-1]))
        return np.zeros((d, d), dtype=np.complex128)


def next_loss(spec: AdversarySpec, X_t: np.ndarray, rho_truth: np.ndarray | None = None,
              adversary: Adversary | None = None) -> np.ndarray:
    """Functional form; pass ``adversary`` to keep the random stream across rounds."""
    if adversary is None:
        adversary = Adversary(spec, X_t.shape[0])
    return adversary.next_loss(X_t, rho_truth)


def topk_size(d: int, r: float) -> int:
    if not -1e-12 <= r <= math.log(d) + 1e-12:
        raise ValueError(f"r={r!r} outside [0, log d = {math.log(d)!r}]")
    # guard against d * exp(-log d) = 1 + ulp
    return max(1, min(d, math.ceil(d * math.exp(-r) - 1e-9)))


def topk_comparator(Y, r: float) -> np.ndarray:
    """Uniform mass on the k = ceil(d exp(-r)) largest entries of Y (diagonal comparator)."""
    Y = np.asarray(Y, dtype=float)
    d = Y.shape[0]
    k = topk_size(d, r)
    idx = np.argsort(-Y, kind="stable")[:k]
    diag = np.zeros(d)
    diag[idx] = 1.0 / k
    return np.diag(diag).astype(np.complex128)


def topk_eigen_comparator(Y: np.ndarray, r: float) -> np.ndarray:
    """Matrix analogue: uniform mass on the top-k eigenvectors of a Hermitian Y."""
    w, V = np.linalg.eigh(Y)
    d = w.shape[0]
    k = topk_size(d, r)
    vals = np.zeros(d)
    vals[d - k:] = 1.0 / k
    return from_eig(vals, V)


@dataclass(frozen=True)
class AnticoncentrationResult:
    empirical: float
    bound: float
    stderr: float
    coordinate_mean: float
    passed: bool


UNIFORM_SIGMA = math.sqrt(1.0 / 3.0)
UNIFORM_RHO = 0.25  # E|Z|^3 for Z ~ Uniform[-1, 1]


def anticoncentration_min_n(d: int) -> int:
    return math.ceil(UNIFORM_RHO**2 / UNIFORM_SIGMA**6 * (d + 1) ** 2)


def anticoncentration_max_k(d: int) -> int:
    return math.floor((d + 1) / (math.sqrt(2 * math.pi) * math.e**2) - 1)


def anticoncentration_bound(d: int, n: int, k: int) -> float:
    return UNIFORM_SIGMA * math.sqrt(n) * (math.sqrt(2 * math.log(d / (math.sqrt(2 * math.pi) * (k + 1)))) - 1)


def anticoncentration_check(d: int, n: int | None, k: int, trials: int, seed, chunk: int = 4) -> AnticoncentrationResult:
    """Monte-Carlo mean of the top-k average of d sums of n Uniform[-1, 1] draws."""
    if n is None:
        n = anticoncentration_min_n(d)
    if k < 1 or k > anticoncentration_max_k(d):
        raise ValueError(f"k={k} violates 1 <= k <= {anticoncentration_max_k(d)} for d={d}")
    if n < anticoncentration_min_n(d):
        raise ValueError(f"n={n} below the required {anticoncentration_min_n(d)} for d={d}")
    rng = np.random.default_rng(seed)
    tops = np.empty(trials)
    coord_sum = 0.0
    for start in range(0, trials, chunk):
        m = min(chunk, trials - start)
        Z = rng.uniform(-1.0, 1.0, size=(m, d, n)).sum(axis=2)
        coord_sum += float(Z.sum())
        tops[start:start + m] = np.sort(Z, axis=1)[:, d - k:].mean(axis=1)
    emp = float(tops.mean())
    se = float(tops.std(ddof=1) / math.sqrt(trials)) if trials > 1 else math.inf
    bound = anticoncentration_bound(d, n, k)
    coord_mean = coord_sum / (trials * d) / (UNIFORM_SIGMA * math.sqrt(n))
    return AnticoncentrationResult(emp, bound, se, coord_mean, emp >= bound - 3.0 * se)
