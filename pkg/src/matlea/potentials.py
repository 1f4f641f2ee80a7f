"""Time-indexed potential functions and their one-dimensional checks."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.integrate import simpson

from .special import two_x_dawson_minus_one

EXP_ARG_MAX = 700.0


class Family(str, Enum):
    EXPONENTIAL = "exponential"
    EXP_SQUARE = "exp_square"
    ERFI = "erfi"
    COSH = "cosh"


class PotentialRangeError(ArithmeticError):
    def __init__(self, s: float, t: int, arg: float):
        super().__init__(f"potential overflows at s={s!r}, t={t}: exponent {arg:.1f} > {EXP_ARG_MAX}")
        self.s = s
        self.t = t


@dataclass(frozen=True)
class PotentialSpec:
    family: Family
    eps: float
    dim: int
    rate: float | None = None  # eta for exponential
    z: float | None = None  # learning-rate scalar for cosh

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        if not self.eps > 0:
            raise ValueError(f"eps must be positive, got {self.eps!r}")
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim!r}")
        if self.family is Family.EXPONENTIAL and not (self.rate is not None and self.rate > 0):
            raise ValueError("exponential potential needs rate > 0")
        if self.family is Family.COSH and not (self.z is not None and self.z >= 0):
            raise ValueError("cosh potential needs z >= 0")

    def __call__(self, s, t: int):
        return evaluate(self, s, t)

    def with_eps(self, eps: float) -> "PotentialSpec":
        return PotentialSpec(self.family, eps, self.dim, self.rate, self.z)


def exp_square(eps: float, dim: int) -> PotentialSpec:
    return PotentialSpec(Family.EXP_SQUARE, eps, dim)


def erfi(eps: float, dim: int) -> PotentialSpec:
    return PotentialSpec(Family.ERFI, eps, dim)


def cosh(eps: float, dim: int, z: float) -> PotentialSpec:
    return PotentialSpec(Family.COSH, eps, dim, z=z)


def exponential(rate: float, eps: float = 1.0, dim: int = 1) -> PotentialSpec:
    return PotentialSpec(Family.EXPONENTIAL, eps, dim, rate=rate)


def _check_exponent(arg: np.ndarray, s: np.ndarray, t: int) -> None:
    if np.any(arg > EXP_ARG_MAX):
        i = int(np.argmax(arg))
        raise PotentialRangeError(float(s.flat[i]), t, float(arg.flat[i]))


def evaluate(p: PotentialSpec, s, t: int):
    """Phi_t(s); vectorized over ``s``."""
    if t < 1:
        raise ValueError(f"time index must be >= 1, got {t}")
    s_arr = np.asarray(s, dtype=float)
    eps, d = p.eps, p.dim
    rt = math.sqrt(t)
    if p.family is Family.EXPONENTIAL:
        arg = p.rate * s_arr
        _check_exponent(arg, s_arr, t)
        out = np.exp(arg)
    elif p.family is Family.COSH:
        arg = p.z * np.abs(s_arr) / (eps * rt)
        _check_exponent(arg, s_arr, t)
        out = eps / (d * rt) * np.cosh(arg)
    else:
        arg = s_arr * s_arr / (2.0 * eps * eps * t)
        _check_exponent(arg, s_arr, t)
        if p.family is Family.EXP_SQUARE:
            out = eps / (d * rt) * np.exp(arg)
        else:
            # (sqrt(2) s / d) F(a) - (eps sqrt(t) / d) e^{a^2} with F(a) = e^{a^2} D(a)
            a = s_arr / (eps * math.sqrt(2.0 * t))
            out = eps * rt / d * np.exp(arg) * two_x_dawson_minus_one(a)
    return float(out) if out.ndim == 0 else out


def discrete_derivative(p: PotentialSpec, s, t: int):
    """(Phi_t(s + eps) - Phi_t(s - eps)) / (2 eps)."""
    s = np.asarray(s, dtype=float)
    return (evaluate(p, s + p.eps, t) - evaluate(p, s - p.eps, t)) / (2.0 * p.eps)


def check_recursion(p: PotentialSpec, t: int, s_grid) -> float:
    """min over the grid of Phi_t(s) - (Phi_{t+1}(s+eps) + Phi_{t+1}(s-eps)) / 2."""
    s = np.asarray(s_grid, dtype=float)
    if s.size == 0:
        raise ValueError("s_grid must be nonempty")
    margin = evaluate(p, s, t) - 0.5 * (evaluate(p, s + p.eps, t + 1) + evaluate(p, s - p.eps, t + 1))
    return float(np.min(margin))


def _simpson(f, lo: float, hi: float, points: int = 4001) -> float:
    z = np.linspace(lo, hi, points)
    return float(simpson(f(z), x=z))


def laplace_quadrature_expsq(p: PotentialSpec, s: float, t: int, width: float = 12.0) -> float:
    """int mu(z) exp(-z s) dz with mu(z) = eps^2 / (sqrt(2 pi) d) exp(-eps^2 t z^2 / 2).

    The integrand is a Gaussian in z centred at -s / (eps^2 t) with standard
    deviation 1 / (eps sqrt t); the window is +-``width`` deviations around it.
    """
    eps, d = p.eps, p.dim
    evaluate(exp_square(eps, d), s, t)  # range check
    sigma = 1.0 / (eps * math.sqrt(t))
    center = -s / (eps * eps * t)
    c = eps * eps / (math.sqrt(2.0 * math.pi) * d)
    return _simpson(lambda z: c * np.exp(-0.5 * eps * eps * t * z * z - z * s), center - width * sigma, center + width * sigma)


def gaussian_ensemble_decomposition(p: PotentialSpec, s: float, t: int, width: float = 12.0) -> float:
    """int_0^inf phi(z) Phi_t^cosh(s; z) dz, phi(z) = sqrt(2/pi) exp(-z^2/2).

    The integrand peaks near z = |s| / (eps sqrt t), so the window is
    [0, width + |s| / (eps sqrt t)].
    """
    eps, d = p.eps, p.dim
    evaluate(exp_square(eps, d), s, t)
    b = abs(s) / (eps * math.sqrt(t))
    c = eps / (d * math.sqrt(t)) * math.sqrt(2.0 / math.pi)
    # phi(z) cosh(b z) = (e^{-(z-b)^2/2} + e^{-(z+b)^2/2}) e^{b^2/2} / 2, overflow-free
    def f(z):
        return c * 0.5 * (np.exp(-0.5 * (z - b) ** 2 + 0.5 * b * b) + np.exp(-0.5 * (z + b) ** 2 + 0.5 * b * b))

    return _simpson(f, 0.0, width + b)


class BoundKind(str, Enum):
    ERFI_MAIN = "erfi_main"
    EXPSQ = "expsq"
    MMWU_ORACLE = "mmwu_oracle"
    MMWU_MINIMAX = "mmwu_minimax"
    MMWU_FIXED = "mmwu_fixed"


def _eta_sum(T: int) -> float:
    return float(np.sum(1.0 / np.sqrt(np.arange(1, T + 1))))


def regret_bound(kind, T: int, l: float, d: int, S_rel: float, eta: float | None = None) -> float:
    """Closed-form regret bounds for losses with operator norm at most ``l``.

    MMWU variants use learning rates on the normalized losses G / l, so the
    standard bound S/eta_T + (1/2) sum eta_t scales linearly in ``l``.
    """
    kind = BoundKind(kind)
    if T < 1 or not l > 0 or d < 1:
        raise ValueError(f"need T >= 1, l > 0, d >= 1 (got T={T}, l={l}, d={d})")
    log_d = math.log(d)
    if not (-1e-12 <= S_rel <= log_d + 1e-12):
        raise ValueError(f"S_rel={S_rel!r} outside [0, log d = {log_d!r}]")
    S = min(max(S_rel, 0.0), log_d)
    if kind is BoundKind.ERFI_MAIN:
        return l * math.sqrt(T) * (math.sqrt(8.0 * S) + 6.0 + 2.0 * math.sqrt(2.0))
    if kind is BoundKind.EXPSQ:
        return (
            2.0 * math.sqrt(2.0) * l * math.sqrt(T * S)
            + 4.0 * math.sqrt(2.0) * l * math.sqrt(T * math.log(T))
            + 2.0 * math.sqrt(math.e) * l
        )
    if kind is BoundKind.MMWU_MINIMAX:
        # eta_t = sqrt(log d / t), evaluated at the worst-case comparator S = log d
        if d == 1:
            return 0.0
        root = math.sqrt(T * log_d)
        return l * root * (1.0 + math.sqrt(log_d) * _eta_sum(T) / (2.0 * root))
    if kind is BoundKind.MMWU_ORACLE:
        # eta_t = sqrt(S / t)
        return l * (math.sqrt(T * S) + 0.5 * math.sqrt(S) * _eta_sum(T))
    if eta is None or not eta > 0:
        raise ValueError("mmwu_fixed needs eta > 0")
    return l * (S / eta + 0.5 * eta * T)


def mmwu_bound_rhs(S_rel: float, etas, op_norms) -> float:
    """S / eta_T + (1/2) sum_t eta_t ||G_t||_op^2 for rates applied to raw losses."""
    etas = np.asarray(etas, dtype=float)
    op_norms = np.asarray(op_norms, dtype=float)
    return float(S_rel / etas[-1] + 0.5 * np.sum(etas * op_norms**2))
