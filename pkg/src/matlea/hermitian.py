"""Dense complex Hermitian linear algebra.

Matrices are plain ``numpy`` arrays of dtype ``complex128``.  ``hermitian`` and
``density_matrix`` validate and symmetrize; every other routine assumes its
inputs already went through one of them.  Most routines broadcast over leading
batch axes.
"""

from __future__ import annotations

from typing import Callable, NamedTuple, Sequence

import numpy as np

HERMITIAN_ATOL = 1e-12
DENSITY_TOL = 1e-10
ZERO_EIG = 1e-14


class HermitianError(ValueError):
    pass


class EigenConvergenceError(RuntimeError):
    def __init__(self, residual: float, rotations: int):
        super().__init__(
            f"Jacobi eigensolver did not converge after {rotations} rotations "
            f"(off-diagonal residual {residual:.3e})"
        )
        self.residual = residual
        self.rotations = rotations


class SpectralOverflowError(ArithmeticError):
    def __init__(self, eigenvalue: float):
        super().__init__(f"spectral function is not finite at eigenvalue {eigenvalue!r}")
        self.eigenvalue = eigenvalue


class EigenDecomposition(NamedTuple):
    values: np.ndarray  # ascending, real
    vectors: np.ndarray  # unitary, columns are eigenvectors

    def reconstruct(self) -> np.ndarray:
        return from_eig(self.values, self.vectors)


class Norms(NamedTuple):
    op: float
    trace: float
    frobenius: float


def dagger(A: np.ndarray) -> np.ndarray:
    return np.swapaxes(A, -1, -2).conj()


def hermitian(A, atol: float = HERMITIAN_ATOL) -> np.ndarray:
    """Validate ``A`` as Hermitian and return the exact symmetrization (A + A^H)/2."""
    A = np.asarray(A, dtype=np.complex128)
    if A.ndim < 2 or A.shape[-1] != A.shape[-2] or A.shape[-1] < 1:
        raise HermitianError(f"expected a square matrix, got shape {A.shape}")
    scale = max(1.0, float(np.max(np.abs(A)))) if A.size else 1.0
    asym = float(np.max(np.abs(A - dagger(A))))
    if asym > atol * scale:
        raise HermitianError(f"matrix is not Hermitian (max |A - A^H| = {asym:.3e})")
    return 0.5 * (A + dagger(A))


def density_matrix(X, tol: float = DENSITY_TOL) -> np.ndarray:
    """Validate ``X`` as a point of the spectraplex (PSD, unit trace)."""
    X = hermitian(X)
    tr = float(np.trace(X).real)
    if abs(tr - 1.0) > tol:
        raise HermitianError(f"trace is {tr!r}, expected 1")
    lam_min = float(np.linalg.eigvalsh(X)[0])
    if lam_min < -tol:
        raise HermitianError(f"not positive semidefinite (min eigenvalue {lam_min:.3e})")
    return X


def from_eig(values: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    M = (vectors * values[..., None, :]) @ dagger(vectors)
    return 0.5 * (M + dagger(M))


def jacobi_eigh(A: np.ndarray, tol: float = 1e-13, max_rotations: int | None = None) -> EigenDecomposition:
    """Cyclic complex Jacobi eigensolver.

    Each rotation first removes the phase of the pivot a_pq and then applies
    the real symmetric Jacobi rotation, so the pivot is annihilated exactly.
    Stops once the off-diagonal Frobenius mass is at most ``tol * ||A||_F``.
    """
    A = np.array(A, dtype=np.complex128)
    d = A.shape[0]
    V = np.eye(d, dtype=np.complex128)
    if max_rotations is None:
        max_rotations = 64 * d * d
    fro = float(np.linalg.norm(A))
    threshold = tol * fro
    rotations = 0

    def off_mass() -> float:
        return float(np.linalg.norm(A[~np.eye(d, dtype=bool)]))

    while True:
        off = off_mass()
        if off <= threshold or d == 1:
            break
        if rotations >= max_rotations:
            raise EigenConvergenceError(off, rotations)
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = A[p, q]
                r = abs(apq)
                if r == 0.0:
                    continue
                phase = apq / r
                app, aqq = A[p, p].real, A[q, q].real
                theta = (aqq - app) / (2.0 * r)
                t = np.copysign(1.0, theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                # W = diag(1, conj(phase)) @ [[c, s], [-s, c]]
                W = np.array([[c, s], [-s * np.conj(phase), c * np.conj(phase)]])
                idx = [p, q]
                A[:, idx] = A[:, idx] @ W
                A[idx, :] = W.conj().T @ A[idx, :]
                A[p, q] = A[q, p] = 0.0
                V[:, idx] = V[:, idx] @ W
                rotations += 1
    values = np.diag(A).real.copy()
    order = np.argsort(values, kind="stable")
    return EigenDecomposition(values[order], V[:, order])


def eig_hermitian(A: np.ndarray, method: str = "lapack", tol: float = 1e-13) -> EigenDecomposition:
    """Eigendecomposition with ascending eigenvalues.

    ``method="lapack"`` (default) batches over leading axes; ``"jacobi"`` is
    the self-contained cyclic Jacobi solver for a single matrix.
    """
    if method == "lapack":
        w, V = np.linalg.eigh(A)
        return EigenDecomposition(w, V)
    if method == "jacobi":
        return jacobi_eigh(A, tol=tol)
    raise ValueError(f"unknown eigensolver {method!r}")


def apply_spectral(
    A: np.ndarray,
    f: Callable[[np.ndarray], np.ndarray],
    eig: EigenDecomposition | None = None,
) -> np.ndarray:
    """Return V diag(f(lambda)) V^H."""
    if eig is None:
        eig = eig_hermitian(A)
    with np.errstate(over="ignore", invalid="ignore"):
        fv = np.asarray(f(eig.values), dtype=float)
    bad = ~np.isfinite(fv)
    if np.any(bad):
        raise SpectralOverflowError(float(eig.values[bad][0]))
    return from_eig(fv, eig.vectors)


def inner(A: np.ndarray, B: np.ndarray) -> float:
    """Frobenius inner product Re tr(AB) of two Hermitian matrices."""
    if A.shape != B.shape:
        raise HermitianError(f"dimension mismatch: {A.shape} vs {B.shape}")
    # tr(AB) = sum_ij A_ij B_ji
    val = np.sum(A * B.T)
    scale = 1.0 + float(np.linalg.norm(A) * np.linalg.norm(B))
    if abs(val.imag) > 1e-10 * scale:
        raise HermitianError(f"tr(AB) has imaginary part {val.imag:.3e}; inputs are not Hermitian")
    return float(val.real)


def norms(A: np.ndarray) -> Norms:
    lam = np.abs(np.linalg.eigvalsh(A))
    return Norms(float(lam.max()), float(lam.sum()), float(np.sqrt(np.sum(lam**2))))


def op_norm(A: np.ndarray) -> float:
    lam = np.linalg.eigvalsh(A)
    return float(max(-lam[0], lam[-1]))


def partial_trace(A: np.ndarray, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Trace out every subsystem not listed in ``keep`` (kept order follows ``dims``)."""
    dims = [int(x) for x in dims]
    n = len(dims)
    if int(np.prod(dims)) != A.shape[-1]:
        raise HermitianError(f"subsystem dims {dims} do not factor dimension {A.shape[-1]}")
    keep = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= n for k in keep):
        raise HermitianError(f"keep indices {keep} out of range for {n} subsystems")
    T = A.reshape(dims + dims)
    row = list(range(n))
    col = [i + n if i in keep else i for i in range(n)]
    out = [i for i in keep] + [i + n for i in keep]
    kd = int(np.prod([dims[i] for i in keep])) if keep else 1
    R = np.einsum(T, row + col, out).reshape(kd, kd)
    return 0.5 * (R + dagger(R))


def von_neumann_entropy(X: np.ndarray) -> float:
    lam = np.linalg.eigvalsh(X)
    lam = lam[lam > ZERO_EIG]
    return float(-np.sum(lam * np.log(lam)))


def relative_entropy_vs_mixed(X: np.ndarray) -> float:
    """S(X || I/d) = log d - S(X), clamped to [0, log d]."""
    d = X.shape[-1]
    val = np.log(d) - von_neumann_entropy(X)
    return float(min(max(val, 0.0), np.log(d)))


def matrix_exp_normalized(A: np.ndarray) -> np.ndarray:
    """exp(A) / tr exp(A) via a max-shifted spectrum."""
    w, V = np.linalg.eigh(A)
    e = np.exp(w - w[-1])
    return from_eig(e / e.sum(), V)


def random_hermitian(d: int, rng: np.random.Generator) -> np.ndarray:
    """Hermitian matrix whose entries are standard complex Gaussians (off-diagonal)."""
    Z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2.0)
    return 0.5 * (Z + Z.conj().T) * np.sqrt(2.0)


def random_density(d: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Random density matrix W W^H / tr(W W^H) with W a d x rank complex Gaussian."""
    if rank is None:
        rank = d
    W = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    X = W @ W.conj().T
    X = 0.5 * (X + X.conj().T)
    return X / np.trace(X).real
