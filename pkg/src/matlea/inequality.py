"""Numerical laboratory for the one-sided Jensen trace inequality

    tr Phi(S + G) <= tr[ (eps I + G)/(2 eps) Phi(S + eps I) + (eps I - G)/(2 eps) Phi(S - eps I) ],
    ||G||_op <= eps,

and for the disentangling bound on interleaved products of S and G.
All routines broadcast over a leading batch axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import reduce

import numpy as np

from .hermitian import jacobi_eigh
from .potentials import Family, PotentialSpec, evaluate

VIOLATION_TOL = 1e-7


@dataclass(frozen=True)
class SpectralFunction:
    kind: str
    params: tuple = ()

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        k, p = self.kind, self.params
        if k == "abs":
            return np.abs(x)
        if k == "affine":
            return p[0] * x + p[1]
        if k == "monomial":
            return x ** p[0]
        if k == "exp":
            return np.exp(p[0] * x)
        if k in ("exp_square", "erfi"):
            t, eps, d = p
            fam = Family.EXP_SQUARE if k == "exp_square" else Family.ERFI
            return evaluate(PotentialSpec(fam, eps, d), x, t)
        raise ValueError(f"unknown spectral function {k!r}")

    @property
    def name(self) -> str:
        return self.kind if not self.params else f"{self.kind}{self.params}"


def absolute() -> SpectralFunction:
    return SpectralFunction("abs")


def affine(a: float, b: float) -> SpectralFunction:
    return SpectralFunction("affine", (float(a), float(b)))


def monomial(degree: int) -> SpectralFunction:
    if degree < 0:
        raise ValueError(f"degree must be >= 0, got {degree}")
    return SpectralFunction("monomial", (int(degree),))


def exponential(c: float) -> SpectralFunction:
    return SpectralFunction("exp", (float(c),))


def exp_square_fn(t: int, eps: float, d: int) -> SpectralFunction:
    return SpectralFunction("exp_square", (int(t), float(eps), int(d)))


def erfi_fn(t: int, eps: float, d: int) -> SpectralFunction:
    return SpectralFunction("erfi", (int(t), float(eps), int(d)))


def _diag_in_basis(V: np.ndarray, A: np.ndarray) -> np.ndarray:
    return np.einsum("...ji,...jk,...ki->...i", V.conj(), A, V).real


@dataclass(frozen=True)
class JensenSides:
    lhs: np.ndarray
    rhs: np.ndarray

    @property
    def gap(self):
        return self.rhs - self.lhs

    @property
    def scale(self):
        return np.maximum(1.0, np.maximum(np.abs(self.lhs), np.abs(self.rhs)))


def jensen_sides(phi: SpectralFunction, S: np.ndarray, G: np.ndarray, eps: float,
                 method: str = "lapack") -> JensenSides:
    """Both sides of the one-sided Jensen inequality (batched over leading axes)."""
    g = np.linalg.eigvalsh(G)
    g_norm = np.maximum(-g[..., 0], g[..., -1])
    if np.any(g_norm > eps * (1.0 + 1e-12)):
        raise ValueError(f"||G||_op = {float(np.max(g_norm)):.6g} exceeds eps = {eps}")
    if method == "jacobi":
        if S.ndim != 2:
            raise ValueError("jacobi method takes a single matrix")
        lam, V = jacobi_eigh(S, tol=1e-15)
        mu = jacobi_eigh(S + G, tol=1e-15).values
    else:
        lam, V = np.linalg.eigh(S)
        mu = np.linalg.eigvalsh(S + G)
    lhs = np.sum(phi(mu), axis=-1)
    gd = _diag_in_basis(V, G)
    rhs = np.sum((eps + gd) / (2 * eps) * phi(lam + eps) + (eps - gd) / (2 * eps) * phi(lam - eps), axis=-1)
    return JensenSides(lhs, rhs)


def jensen_gap(phi: SpectralFunction, S: np.ndarray, G: np.ndarray, eps: float):
    """RHS - LHS; negative values are violations."""
    gap = jensen_sides(phi, S, G, eps).gap
    return float(gap) if np.ndim(gap) == 0 else gap


def _batch_hermitian(rng: np.random.Generator, trials: int, d: int) -> np.ndarray:
    Z = (rng.standard_normal((trials, d, d)) + 1j * rng.standard_normal((trials, d, d))) / math.sqrt(2.0)
    return (Z + np.swapaxes(Z, -1, -2).conj()) / math.sqrt(2.0)


def sample_pairs(rng: np.random.Generator, trials: int, d: int, eps: float, s_scale: float | None = None):
    """S with standard complex Gaussian entries, G Gaussian rescaled to ||G||_op = u eps, u ~ U(0, 1]."""
    S = _batch_hermitian(rng, trials, d)
    if s_scale is not None:
        w = np.linalg.eigvalsh(S)
        S = S * (s_scale / np.maximum(np.maximum(-w[:, 0], w[:, -1]), 1e-300))[:, None, None]
    G = _batch_hermitian(rng, trials, d)
    w = np.linalg.eigvalsh(G)
    u = 1.0 - rng.uniform(0.0, 1.0, size=trials)  # (0, 1]
    G = G * (u * eps / np.maximum(-w[:, 0], w[:, -1]))[:, None, None]
    return S, G


@dataclass
class SuiteResult:
    phi: str
    d: int
    trials: int
    min_gap: float
    min_normalized_gap: float  # gap / max(1, |lhs|, |rhs|)
    argmin_S: np.ndarray
    argmin_G: np.ndarray
    eps: float
    violations: int  # normalized gap < -VIOLATION_TOL
    first_violation: int | None  # trial index of the first violation


def random_jensen_suite(phi: SpectralFunction, d: int, trials: int, seed, eps: float = 1.0,
                        batch: int = 5000, s_scale: float | None = None) -> SuiteResult:
    if not 1 <= d <= 16:
        raise ValueError(f"d={d} outside [1, 16]")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    best = None
    violations, first = 0, None
    for start in range(0, trials, batch):
        m = min(batch, trials - start)
        S, G = sample_pairs(rng, m, d, eps, s_scale)
        sides = jensen_sides(phi, S, G, eps)
        norm_gap = sides.gap / sides.scale
        bad = np.flatnonzero(norm_gap < -VIOLATION_TOL)
        violations += bad.size
        if first is None and bad.size:
            first = start + int(bad[0])
        i = int(np.argmin(norm_gap))
        if best is None or norm_gap[i] < best[1]:
            best = (float(sides.gap[i]), float(norm_gap[i]), S[i].copy(), G[i].copy())
    return SuiteResult(phi.name, d, trials, best[0], best[1], best[2], best[3], eps, violations, first)


APPENDIX_A = {
    "S": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "G": np.array([[1, 0], [0, -1]], dtype=np.complex128),
    "eps": 1.0,
}


def appendix_a_instance() -> JensenSides:
    return jensen_sides(absolute(), APPENDIX_A["S"], APPENDIX_A["G"], APPENDIX_A["eps"])


# ------------------------------------------------------- interleaved products


def _parse_sequence(sequence, psd: bool) -> tuple[str, int, int]:
    seq = "".join(sequence).upper()
    if not seq or any(c not in "SG" for c in seq):
        raise ValueError(f"sequence must be over {{S, G}}, got {sequence!r}")
    n_g = seq.count("G")
    if n_g == 0:
        raise ValueError("sequence needs at least one G")
    if not psd and (len(seq) % 2 or n_g % 2):
        raise ValueError(f"sequence {seq!r} must have even length and an even number of G")
    return seq, len(seq), n_g


def interleaving_bound_gap(sequence, S: np.ndarray, G: np.ndarray, psd: bool = False):
    """tr[S^(len - #G)] - |tr[X_0 X_1 ...]| for the given word over {S, G}.

    With ``psd=True`` the word may have any length and G-count (S, G PSD).
    Batched over leading axes.
    """
    seq, length, n_g = _parse_sequence(sequence, psd)
    g = np.linalg.eigvalsh(G)
    if np.any(np.maximum(-g[..., 0], g[..., -1]) > 1.0 + 1e-12):
        raise ValueError("||G||_op must be <= 1")
    mats = {"S": S, "G": G}
    prod = reduce(np.matmul, (mats[c] for c in seq))
    lhs = np.abs(np.trace(prod, axis1=-2, axis2=-1))
    rhs = np.sum(np.linalg.eigvalsh(S) ** (length - n_g), axis=-1)
    return rhs - lhs


def random_sequence(rng: np.random.Generator, k: int, l: int) -> str:
    letters = np.array(["S"] * (2 * k))
    letters[rng.choice(2 * k, size=2 * l, replace=False)] = "G"
    return "".join(letters)


@dataclass
class InterleavingResult:
    min_normalized_gap: float
    worst_sequence: str
    trials: int


def interleaving_suite(trials: int, seed, k_max: int = 4, d_max: int = 5, batch: int = 256) -> InterleavingResult:
    """Random words (k <= k_max, 0 < l <= k) on random (S, G) with ||G||_op <= 1."""
    rng = np.random.default_rng(seed)
    worst, worst_seq, done = np.inf, "", 0
    while done < trials:
        m = min(batch, trials - done)
        k = int(rng.integers(1, k_max + 1))
        l = int(rng.integers(1, k + 1))
        d = int(rng.integers(1, d_max + 1))
        seq = random_sequence(rng, k, l)
        S, G = sample_pairs(rng, m, d, 1.0)
        gap = interleaving_bound_gap(seq, S, G)
        scale = np.maximum(1.0, np.sum(np.abs(np.linalg.eigvalsh(S)) ** (2 * k - 2 * l), axis=-1))
        norm = gap / scale
        i = int(np.argmin(norm))
        if norm[i] < worst:
            worst, worst_seq = float(norm[i]), seq
        done += m
    return InterleavingResult(worst, worst_seq, trials)


# ---------------------------------------------------------- conjecture search


@dataclass
class ConjectureReport:
    k: int
    d: int
    trials: int
    min_normalized_gap: float
    flagged: list = field(default_factory=list)  # re-verified candidate (S, G) pairs


def monomial_conjecture_search(k_max: int, trials_per_k: int, d: int, seed, k_min: int = 1,
                               s_norm: float = 4.0, batch: int = 20000) -> list[ConjectureReport]:
    """Search for violations of the inequality with Phi(x) = x^(2k), eps = 1.

    S is rescaled to ||S||_op = s_norm.  Candidates below -1e-7 * scale are
    re-evaluated with the Jacobi eigensolver at tolerance 1e-15 and kept only
    if the violation persists.
    """
    if not 1 <= k_max <= 8:
        raise ValueError(f"k_max={k_max} outside [1, 8]")
    ss = np.random.SeedSequence(seed)
    reports = []
    for k, child in zip(range(k_min, k_max + 1), ss.spawn(k_max - k_min + 1)):
        rng = np.random.default_rng(child)
        phi = monomial(2 * k)
        worst = np.inf
        flagged = []
        for start in range(0, trials_per_k, batch):
            m = min(batch, trials_per_k - start)
            S, G = sample_pairs(rng, m, d, 1.0, s_scale=s_norm)
            sides = jensen_sides(phi, S, G, 1.0)
            norm = sides.gap / sides.scale
            worst = min(worst, float(norm.min()))
            for i in np.flatnonzero(norm < -VIOLATION_TOL):
                again = jensen_sides(phi, S[i], G[i], 1.0, method="jacobi")
                if again.gap / again.scale < -VIOLATION_TOL:
                    flagged.append({"S": S[i].copy(), "G": G[i].copy(), "gap": float(again.gap)})
        reports.append(ConjectureReport(k, d, trials_per_k, worst, flagged))
    return reports
