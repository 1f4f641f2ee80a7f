"""Quantum states, observables and losses for online state learning.

Qubit 0 is the most significant tensor factor (leftmost in kron order).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from itertools import combinations
from typing import Iterator

import numpy as np

from .hermitian import dagger, inner, matrix_exp_normalized

MAX_QUBITS = 10

_LETTERS = "IXYZ"


def _n_qubits(d: int) -> int:
    n = d.bit_length() - 1
    if d < 1 or (1 << n) != d:
        raise ValueError(f"dimension {d} is not a power of 2")
    return n


# ------------------------------------------------------------------- Paulis


@dataclass(frozen=True)
class PauliString:
    letters: str

    def __post_init__(self):
        if not self.letters or any(c not in _LETTERS for c in self.letters):
            raise ValueError(f"invalid Pauli string {self.letters!r}")

    @property
    def n(self) -> int:
        return len(self.letters)

    def masks(self) -> tuple[int, int, int]:
        """(x mask, z mask, number of Y letters)."""
        x = z = ny = 0
        for q, c in enumerate(self.letters):
            bit = 1 << (self.n - 1 - q)
            if c in "XY":
                x |= bit
            if c in "ZY":
                z |= bit
            ny += c == "Y"
        return x, z, ny

    def matrix(self) -> np.ndarray:
        # P|j> = i^{#Y} (-1)^{popcount(j & z)} |j ^ x>
        x, z, ny = self.masks()
        d = 1 << self.n
        j = np.arange(d)
        sign = 1 - 2 * (np.array([bin(v).count("1") for v in (j & z)]) & 1)
        M = np.zeros((d, d), dtype=np.complex128)
        M[j ^ x, j] = (1j**ny) * sign
        return M


def random_pauli(n: int, rng: np.random.Generator, include_identity: bool = True) -> PauliString:
    while True:
        idx = rng.integers(0, 4, size=n)
        if include_identity or np.any(idx):
            return PauliString("".join(_LETTERS[i] for i in idx))


# ------------------------------------------------------------------ channels


def depolarize_global(rho: np.ndarray, gamma: float) -> np.ndarray:
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"gamma={gamma!r} outside [0, 1]")
    d = rho.shape[0]
    return (1.0 - gamma) * rho + gamma * np.eye(d) / d


def depolarize_local(rho: np.ndarray, qubit: int, gamma: float) -> np.ndarray:
    """(1 - gamma) rho + gamma (I_2/2 at ``qubit``) tensor (partial trace over ``qubit``)."""
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"gamma={gamma!r} outside [0, 1]")
    n = _n_qubits(rho.shape[0])
    if not 0 <= qubit < n:
        raise ValueError(f"qubit {qubit} out of range for {n} qubits")
    T = rho.reshape((2,) * (2 * n))
    reduced = np.trace(T, axis1=qubit, axis2=qubit + n)  # remaining axes: n-1 rows, n-1 cols
    mixed = np.multiply.outer(np.eye(2) / 2.0, reduced)  # axes (q, q', rows..., cols...)
    # move q to position `qubit` among rows and q' to position `qubit` among cols
    order = list(range(2, 2 + 2 * (n - 1)))
    rows, cols = order[: n - 1], order[n - 1 :]
    rows.insert(qubit, 0)
    cols.insert(qubit, 1)
    mixed = np.transpose(mixed, rows + cols).reshape(rho.shape)
    return (1.0 - gamma) * rho + gamma * mixed


def depolarize_all(rho: np.ndarray, gamma: float) -> np.ndarray:
    n = _n_qubits(rho.shape[0])
    for q in range(n):
        rho = depolarize_local(rho, q, gamma)
    return rho


def haar_unitary(k: int, rng: np.random.Generator) -> np.ndarray:
    """Haar unitary via QR of a complex Ginibre matrix with phase-fixed R diagonal."""
    Z = (rng.standard_normal((k, k)) + 1j * rng.standard_normal((k, k))) / math.sqrt(2.0)
    Q, R = np.linalg.qr(Z)
    ph = np.diagonal(R) / np.abs(np.diagonal(R))
    return Q * ph[None, :]


def apply_two_qubit(rho: np.ndarray, U: np.ndarray, q1: int, q2: int) -> np.ndarray:
    """U rho U^H with the 4x4 ``U`` acting on qubits (q1, q2)."""
    n = _n_qubits(rho.shape[0])
    T = rho.reshape((2,) * (2 * n))
    U4 = U.reshape(2, 2, 2, 2)
    T = np.tensordot(U4, T, axes=([2, 3], [q1, q2]))  # new axes 0,1 replace q1,q2
    T = np.moveaxis(T, [0, 1], [q1, q2])
    T = np.tensordot(T, U4.conj(), axes=([n + q1, n + q2], [2, 3]))
    T = np.moveaxis(T, [2 * n - 2, 2 * n - 1], [n + q1, n + q2])
    return T.reshape(rho.shape)


def brickwork_pairs(n: int, layer: int) -> list[tuple[int, int]]:
    start = layer % 2
    return [(q, q + 1) for q in range(start, n - 1, 2)]


def noisy_circuit_state(n: int, D: int, gamma: float, seed) -> np.ndarray:
    """Brickwork Haar 2-qubit layers, each followed by local depolarization on every qubit."""
    if not 1 <= n <= MAX_QUBITS:
        raise ValueError(f"n={n} outside [1, {MAX_QUBITS}]")
    if D < 1:
        raise ValueError(f"depth must be >= 1, got {D}")
    rng = np.random.default_rng(seed)
    d = 1 << n
    rho = np.zeros((d, d), dtype=np.complex128)
    rho[0, 0] = 1.0
    for layer in range(D):
        for q1, q2 in brickwork_pairs(n, layer):
            rho = apply_two_qubit(rho, haar_unitary(4, rng), q1, q2)
        rho = depolarize_all(rho, gamma)
    return 0.5 * (rho + dagger(rho))


# -------------------------------------------------------------- random states


def haar_subsystem_state(d: int, d_prime: int, seed) -> np.ndarray:
    """Reduced state on the first factor (dim d) of a Haar random pure state of dim d'."""
    if d < 1 or d_prime % d:
        raise ValueError(f"d={d} must divide d'={d_prime}")
    rng = np.random.default_rng(seed)
    psi = rng.standard_normal(d_prime) + 1j * rng.standard_normal(d_prime)
    psi /= np.linalg.norm(psi)
    M = psi.reshape(d, d_prime // d)
    rho = M @ dagger(M)
    return 0.5 * (rho + dagger(rho))


_SIGMA = (
    np.array([[0, 1], [1, 0]], dtype=np.complex128),
    np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    np.array([[1, 0], [0, -1]], dtype=np.complex128),
)


def bloch_state(r) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if np.linalg.norm(r) > 1.0 + 1e-12:
        raise ValueError(f"Bloch vector {r.tolist()} has norm > 1")
    return 0.5 * (np.eye(2) + sum(ri * s for ri, s in zip(r, _SIGMA)))


def bloch_vector(sigma: np.ndarray) -> np.ndarray:
    return np.array([inner(s, sigma) for s in _SIGMA])


class BlochEnsemble(str, Enum):
    MIXED = "mixed"  # r = 0
    ZERO = "zero"  # |0>, r = e_z
    SPHERE = "sphere"  # uniform pure states
    BALL = "ball"  # uniform in the Bloch ball
    SHELL = "shell"  # uniform direction, fixed radius


def sample_bloch(ensemble: str | BlochEnsemble, size: int, rng: np.random.Generator, radius: float = 1.0) -> np.ndarray:
    ensemble = BlochEnsemble(ensemble)
    if ensemble is BlochEnsemble.MIXED:
        return np.zeros((size, 3))
    if ensemble is BlochEnsemble.ZERO:
        return np.tile([0.0, 0.0, 1.0], (size, 1))
    v = rng.standard_normal((size, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    if ensemble is BlochEnsemble.SPHERE:
        return v
    if ensemble is BlochEnsemble.BALL:
        return v * rng.uniform(0.0, 1.0, size=(size, 1)) ** (1.0 / 3.0)
    if not 0.0 <= radius <= 1.0:
        raise ValueError(f"radius {radius!r} outside [0, 1]")
    return v * radius


def random_product_state(n: int, ensemble: str | BlochEnsemble, seed, radius: float = 1.0):
    """Tensor product of n independent single-qubit states; returns (rho, Bloch vectors)."""
    if not 1 <= n <= MAX_QUBITS:
        raise ValueError(f"n={n} outside [1, {MAX_QUBITS}]")
    rng = np.random.default_rng(seed)
    rs = sample_bloch(ensemble, n, rng, radius)
    rho = np.ones((1, 1), dtype=np.complex128)
    for r in rs:
        rho = np.kron(rho, bloch_state(r))
    return rho, rs


def pauli_second_moment(samples) -> np.ndarray:
    """E[r r^T] from Bloch vectors (m, 3) or single-qubit states (m, 2, 2)."""
    samples = np.asarray(samples)
    if samples.ndim == 3:
        samples = np.array([bloch_vector(s) for s in samples])
    if samples.ndim != 2 or samples.shape[1] != 3:
        raise ValueError(f"expected (m, 3) Bloch vectors, got shape {samples.shape}")
    if np.any(np.linalg.norm(samples, axis=1) > 1.0 + 1e-12):
        raise ValueError("Bloch vector with norm > 1")
    return samples.T @ samples / samples.shape[0]


# --------------------------------------------------------------- Hamiltonians


def gibbs_state(H: np.ndarray, beta: float) -> np.ndarray:
    if not math.isfinite(beta) or beta < 0:
        raise ValueError(f"beta must be finite and >= 0, got {beta!r}")
    return matrix_exp_normalized(-beta * H)


@dataclass(frozen=True)
class HamiltonianSample:
    H: np.ndarray
    ensemble: str
    seed: int
    J: int | None = None


def sample_gue(d: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.standard_normal((d, d))
    g2 = rng.standard_normal((d, d))
    upper = np.triu((g + 1j * g2) / math.sqrt(2.0 * d), 1)
    return upper + dagger(upper) + np.diag(np.diagonal(g) / math.sqrt(d))


def sample_rsps(n: int, J: int, rng: np.random.Generator) -> np.ndarray:
    if J < 1:
        raise ValueError(f"J must be >= 1, got {J}")
    d = 1 << n
    H = np.zeros((d, d), dtype=np.complex128)
    for _ in range(J):
        H += (1.0 if rng.integers(0, 2) else -1.0) * random_pauli(n, rng).matrix()
    return H / math.sqrt(J)


def sample_hamiltonian(ensemble: str, seed: int, *, d: int | None = None, n: int | None = None,
                       J: int | None = None) -> HamiltonianSample:
    rng = np.random.default_rng(seed)
    if ensemble.lower() == "gue":
        if d is None:
            d = 1 << n
        if d > 1 << MAX_QUBITS:
            raise ValueError(f"d={d} too large")
        return HamiltonianSample(sample_gue(d, rng), "gue", seed)
    if ensemble.lower() == "rsps":
        if n is None or not 1 <= n <= MAX_QUBITS:
            raise ValueError(f"RSPS needs 1 <= n <= {MAX_QUBITS}")
        J = n**3 if J is None else J
        return HamiltonianSample(sample_rsps(n, J, rng), "rsps", seed, J)
    raise ValueError(f"unknown ensemble {ensemble!r}")


def _set_partitions(items: list) -> Iterator[list[list]]:
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for k in range(len(rest) + 1):
        for others in combinations(rest, k):
            block = [first, *others]
            remaining = [x for x in rest if x not in others]
            for tail in _set_partitions(remaining):
                yield [block, *tail]


def hamiltonian_cumulants(H: np.ndarray, k_max: int) -> list[float]:
    """Normalized cumulants kappa_1..kappa_kmax of the spectral distribution of H.

    Moments mu_k = tr(H^k)/d; cumulants by Moebius inversion over set partitions.
    """
    if not 1 <= k_max <= 8:
        raise ValueError(f"k_max={k_max} outside [1, 8]")
    lam = np.linalg.eigvalsh(H)
    mu = [1.0] + [float(np.mean(lam**k)) for k in range(1, k_max + 1)]
    out = []
    for k in range(1, k_max + 1):
        total = 0.0
        for part in _set_partitions(list(range(k))):
            b = len(part)
            total += math.factorial(b - 1) * (-1) ** (b - 1) * math.prod(mu[len(B)] for B in part)
        out.append(total)
    return out


# --------------------------------------------------------------------- losses


class LossKind(str, Enum):
    L1 = "l1"
    VIRTUAL_COOLING = "virtual_cooling"
    RENYI2 = "renyi2"

    def grad_bound(self, l: float) -> float:
        return {LossKind.L1: l, LossKind.VIRTUAL_COOLING: 2.0 * l, LossKind.RENYI2: 2.0 * l * l}[self]


def loss_value(kind: str | LossKind, O: np.ndarray, rho: np.ndarray, rho_truth: np.ndarray | None = None) -> float:
    kind = LossKind(kind)
    if kind is LossKind.L1:
        return abs(inner(O, rho) - inner(O, rho_truth))
    if kind is LossKind.VIRTUAL_COOLING:
        return float(np.trace(O @ rho @ rho).real)
    return float(np.trace(O @ rho @ O @ rho).real)


def loss_and_grad(kind: str | LossKind, O: np.ndarray, rho_t: np.ndarray, rho_truth: np.ndarray | None = None,
                  l: float | None = None, psd_tol: float = 1e-10) -> tuple[float, np.ndarray]:
    kind = LossKind(kind)
    if kind is LossKind.L1:
        if rho_truth is None:
            raise ValueError("l1 loss needs the true state")
        diff = inner(O, rho_t) - inner(O, rho_truth)
        sgn = 0.0 if diff == 0.0 else math.copysign(1.0, diff)
        loss, grad = abs(diff), sgn * O
    else:
        lam_min = float(np.linalg.eigvalsh(O)[0])
        if lam_min < -psd_tol:
            raise ValueError(f"observable must be PSD for {kind.value} (min eigenvalue {lam_min:.3e})")
        if kind is LossKind.VIRTUAL_COOLING:
            OR = O @ rho_t
            loss, grad = float(np.trace(OR @ rho_t).real), OR + dagger(OR)
        else:
            ORO = O @ rho_t @ O
            loss, grad = float(np.trace(ORO @ rho_t).real), 2.0 * ORO
        grad = 0.5 * (grad + dagger(grad))
    if l is not None:
        g = np.linalg.eigvalsh(grad)
        nrm = float(max(-g[0], g[-1]))
        cap = kind.grad_bound(l)
        if nrm > cap * (1.0 + 1e-9) + 1e-12:
            raise AssertionError(f"{kind.value} gradient norm {nrm:.6g} exceeds {cap:.6g}")
    return loss, grad

