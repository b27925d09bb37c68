"""Dense real symmetric matrices: spectra, matrix functions, Loewner order.

Symmetric matrices are plain ``float64`` numpy arrays that went through
:func:`as_sym`.  Every function here is pure; inputs are never modified.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Union

import numpy as np
import scipy.linalg

from .errors import DomainError, InvalidInputError, MatrixOverflowError

__all__ = [
    "PsdTolerance",
    "Spectrum",
    "apply_spectral_function",
    "as_sym",
    "congruence",
    "general_exp",
    "is_pd",
    "is_psd",
    "loewner_geq",
    "max_eig",
    "min_eig",
    "op_norm",
    "similarity_power_trace",
    "spectral_decompose",
    "sym_abs",
    "sym_exp",
    "sym_log",
    "sym_pow",
    "sym_sqrt",
    "trace",
]


@dataclass(frozen=True)
class PsdTolerance:
    """Relative eigenvalue slack for deciding ``M >= 0``.

    ``M`` counts as positive semidefinite when
    ``min_eig(M) >= -rel_eps * max(1, ||M||)``.
    """

    rel_eps: float = 1e-9

    def __post_init__(self):
        if not (self.rel_eps >= 0 and np.isfinite(self.rel_eps)):
            raise InvalidInputError(f"rel_eps must be finite and >= 0, got {self.rel_eps}")

    def threshold(self, m: np.ndarray) -> float:
        return -self.rel_eps * max(1.0, op_norm(m))

    def threshold_from_eigs(self, w: np.ndarray) -> float:
        """Same as :meth:`threshold` given the ascending eigenvalues of a symmetric ``m``."""
        return -self.rel_eps * max(1.0, abs(w[0]), abs(w[-1]))


DEFAULT_TOL = PsdTolerance()


class Spectrum(NamedTuple):
    """Eigenvalues in nondecreasing order and the matching orthonormal basis."""

    eigenvalues: np.ndarray
    basis: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.basis * self.eigenvalues) @ self.basis.T


def _as_square(m) -> np.ndarray:
    a = np.array(m, dtype=np.float64)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise InvalidInputError(f"expected a non-empty square matrix, got shape {a.shape}")
    # a finite sum rules out inf/nan entries; fall back to the full scan otherwise
    if not math.isfinite(a.sum()) and not np.isfinite(a).all():
        raise InvalidInputError("matrix has non-finite entries")
    return a


def as_sym(m) -> np.ndarray:
    """Return ``(m + m.T) / 2`` as a fresh float64 array.

    Scalars are promoted to 1x1 matrices.  Raises InvalidInputError for
    non-square, empty or non-finite input.
    """
    if type(m) is np.ndarray and m.dtype == np.float64 and m.ndim == 2 and m.shape[0] == m.shape[1] > 0:
        # fast path for the common case; the sum check catches inf and nan
        if not math.isfinite(m.sum()) and not np.isfinite(m).all():
            raise InvalidInputError("matrix has non-finite entries")
        return 0.5 * (m + m.T)
    a = _as_square(m)
    return 0.5 * (a + a.T)


def _check_same_dim(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise InvalidInputError(f"dimension mismatch: {a.shape} vs {b.shape}")


def spectral_decompose(m) -> Spectrum:
    """Orthogonal diagonalization ``m = U diag(w) U^T`` with ``w`` ascending."""
    a = as_sym(m)
    w, u = np.linalg.eigh(a)
    return Spectrum(w, u)


def eigvals(m) -> np.ndarray:
    return np.linalg.eigvalsh(as_sym(m))


def min_eig(m) -> float:
    return float(eigvals(m)[0])


def max_eig(m) -> float:
    return float(eigvals(m)[-1])


def trace(m) -> float:
    return float(np.trace(_as_square(m)))


def op_norm(m) -> float:
    """Largest singular value; works for non-symmetric input too."""
    a = _as_square(m)
    if np.array_equal(a, a.T):
        return float(np.max(np.abs(np.linalg.eigvalsh(a))))
    return float(np.linalg.norm(a, 2))


SpectralFn = Union[str, tuple]


def _resolve_function(f: SpectralFn) -> tuple[str, Callable[[np.ndarray], np.ndarray], float | None]:
    if isinstance(f, tuple):
        if len(f) != 2 or f[0] != "pow":
            raise InvalidInputError(f"unknown spectral function {f!r}")
        r = float(f[1])
        return "pow", (lambda w: np.power(w, r)), r
    table = {
        "exp": np.exp,
        "log": np.log,
        "abs": np.abs,
        "sqrt": np.sqrt,
    }
    if f not in table:
        raise InvalidInputError(f"unknown spectral function {f!r}")
    return f, table[f], None


def apply_spectral_function(m, f: SpectralFn, tol: PsdTolerance = DEFAULT_TOL) -> np.ndarray:
    """Compute ``U f(diag(w)) U^T`` for symmetric ``m``.

    ``f`` is one of ``"exp"``, ``"log"``, ``"abs"``, ``"sqrt"`` or a tuple
    ``("pow", r)``.  Eigenvalues within the PSD tolerance of zero are clipped
    to zero before ``sqrt`` and non-negative fractional powers; ``log`` and
    negative powers need strictly positive eigenvalues.
    """
    name, fn, r = _resolve_function(f)
    a = as_sym(m)
    w, u = np.linalg.eigh(a)
    floor = tol.threshold_from_eigs(w)
    if name == "log" or (name == "pow" and r < 0):
        if w[0] <= 0:
            raise DomainError(f"{name} needs a positive definite matrix; smallest eigenvalue is {w[0]!r}")
    elif name == "sqrt" or (name == "pow" and r != int(r)):
        if w[0] < floor:
            raise DomainError(f"{name} needs a positive semidefinite matrix; smallest eigenvalue is {w[0]!r}")
        w = np.maximum(w, 0.0)
    with np.errstate(over="ignore"):
        fw = fn(w)
    if not np.all(np.isfinite(fw)):
        raise MatrixOverflowError(f"{name} of eigenvalues {w!r} is not finite")
    out = (u * fw) @ u.T
    return 0.5 * (out + out.T)


def sym_exp(m) -> np.ndarray:
    return apply_spectral_function(m, "exp")


def sym_log(m) -> np.ndarray:
    return apply_spectral_function(m, "log")


def sym_abs(m) -> np.ndarray:
    return apply_spectral_function(m, "abs")


def sym_sqrt(m) -> np.ndarray:
    return apply_spectral_function(m, "sqrt")


def sym_pow(m, r: float) -> np.ndarray:
    return apply_spectral_function(m, ("pow", r))


def general_exp(m) -> np.ndarray:
    """Matrix exponential of an arbitrary square matrix.

    Uses scaling and squaring around a Pade approximant (SciPy's ``expm``).
    Needed for ``T X T'`` with ``T != T'``, which is not symmetric.
    """
    a = _as_square(m)
    with np.errstate(over="ignore", invalid="ignore"):
        out = scipy.linalg.expm(a)
    if not np.all(np.isfinite(out)):
        raise MatrixOverflowError("matrix exponential overflowed")
    return out


def is_psd(m, tol: PsdTolerance = DEFAULT_TOL) -> bool:
    w = np.linalg.eigvalsh(as_sym(m))
    return bool(w[0] >= tol.threshold_from_eigs(w))


def is_pd(m, tol: PsdTolerance = DEFAULT_TOL) -> bool:
    """Strict version of :func:`is_psd`: smallest eigenvalue above the slack."""
    w = np.linalg.eigvalsh(as_sym(m))
    return bool(w[0] > -tol.threshold_from_eigs(w))


def loewner_geq(a, b, tol: PsdTolerance = DEFAULT_TOL) -> bool:
    """``a >= b`` in the Loewner order, i.e. ``a - b`` is PSD up to ``tol``."""
    a = as_sym(a)
    b = as_sym(b)
    _check_same_dim(a, b)
    w = np.linalg.eigvalsh(a - b)
    return bool(w[0] >= tol.threshold_from_eigs(w))


def congruence(c, m) -> np.ndarray:
    """``c m c`` for symmetric ``c``, re-symmetrized."""
    out = c @ as_sym(m) @ c
    return 0.5 * (out + out.T)


def require_pd(a, name: str = "A", tol: PsdTolerance = DEFAULT_TOL) -> np.ndarray:
    a = as_sym(a)
    if not is_pd(a, tol):
        raise DomainError(f"{name} must be positive definite; smallest eigenvalue is {min_eig(a)!r}")
    return a


def require_psd(a, name: str = "X", tol: PsdTolerance = DEFAULT_TOL) -> np.ndarray:
    a = as_sym(a)
    if not is_psd(a, tol):
        raise DomainError(f"{name} must be positive semidefinite; smallest eigenvalue is {min_eig(a)!r}")
    return a


def similarity_power_trace(b, a, p: float) -> float:
    """``tr((B A^{-1})^p)`` for PSD ``B``, PD ``A`` and ``p >= 1``.

    ``B A^{-1}`` is similar to the PSD matrix ``A^{-1/2} B A^{-1/2}``; the
    power is taken through that representative, which agrees with the
    repeated product for integer ``p``.
    """
    if not p >= 1:
        raise DomainError(f"p must be >= 1, got {p}")
    a = require_pd(a)
    b = require_psd(b, "B")
    _check_same_dim(a, b)
    w = np.linalg.eigvalsh(congruence(sym_pow(a, -0.5), b))
    return float(np.sum(np.power(np.maximum(w, 0.0), p)))
