"""Closed-form right-hand sides of the minimum-eigenvalue tail bounds.

Every public ``*_bound`` returns a :class:`BoundResult`.  Expectations over a
:class:`~matconc.samplers.DiscreteMatrixDist` are exact atom sums.  Values
above one are returned as they are (vacuous, never clamped).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .errors import DomainError, EvaluationError, InvalidInputError
from .samplers import DiscreteMatrixDist, exact_mean
from .symmat import (
    as_sym,
    congruence,
    general_exp,
    max_eig,
    op_norm,
    require_pd,
    require_psd,
    similarity_power_trace,
    sym_abs,
    sym_pow,
)

__all__ = [
    "BoundResult",
    "ThetaGrid",
    "ThetaOptimum",
    "anti_order_reference",
    "azuma_bound",
    "bernstein_bounded_bound",
    "bernstein_subexp_bound",
    "chebyshev_bound",
    "chernoff_bound",
    "chernoff_kl_bound",
    "eb_threshold",
    "g_eb",
    "h_bennett",
    "hoeffding_bound",
    "kl_div",
    "laplace_bound",
    "markov_bound",
    "master_bound",
    "optimize_theta",
]


@dataclass(frozen=True)
class BoundResult:
    value: float
    theorem_id: str
    theta_star: float | None = None
    sigma_sq: float | None = None
    notes: str = ""

    def __post_init__(self):
        if not self.value >= 0:
            raise EvaluationError(f"{self.theorem_id}: bound value {self.value!r} is not >= 0")
        if self.theta_star is not None and not self.theta_star > 0:
            raise EvaluationError(f"{self.theorem_id}: theta_star {self.theta_star!r} is not > 0")

    def to_record(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ThetaGrid:
    """Log-spaced scan over ``theta > 0`` followed by golden-section refinement."""

    log10_min: float = -4.0
    log10_max: float = 4.0
    points: int = 200
    refine_iters: int = 60

    def __post_init__(self):
        if not self.log10_min < self.log10_max:
            raise InvalidInputError("log10_min must be below log10_max")
        if self.points < 2:
            raise InvalidInputError("grid needs at least two points")

    def thetas(self) -> np.ndarray:
        return np.logspace(self.log10_min, self.log10_max, self.points)


class ThetaOptimum(NamedTuple):
    theta: float
    value: float
    at_boundary: bool


def _safe_eval(objective, theta: float) -> float:
    try:
        with np.errstate(all="ignore"):
            v = float(objective(theta))
    except (ArithmeticError, ValueError, np.linalg.LinAlgError):
        return math.nan
    return v if math.isfinite(v) else math.nan


_INVPHI = (math.sqrt(5) - 1) / 2


def optimize_theta(objective: Callable[[float], float], grid: ThetaGrid = ThetaGrid()) -> ThetaOptimum:
    """Minimize ``objective`` over ``theta > 0``.

    Scans the log grid, then runs golden-section search in ``log theta`` on
    the bracket around the best grid point.  The returned value never exceeds
    the best raw grid value.  Grid points where the objective is not finite
    are skipped; a minimizer on either end of the grid sets ``at_boundary``.
    """
    thetas = grid.thetas()
    vals = np.array([_safe_eval(objective, th) for th in thetas])
    finite = np.isfinite(vals)
    if not finite.any():
        raise EvaluationError("objective is not finite anywhere on the theta grid")
    idx = int(np.nanargmin(np.where(finite, vals, np.inf)))
    best_theta, best_val = float(thetas[idx]), float(vals[idx])
    finite_idx = np.flatnonzero(finite)
    at_boundary = idx in (finite_idx[0], finite_idx[-1])
    if not at_boundary:
        lo, hi = math.log(thetas[idx - 1]), math.log(thetas[idx + 1])
        c, d = hi - _INVPHI * (hi - lo), lo + _INVPHI * (hi - lo)
        fc, fd = _safe_eval(objective, math.exp(c)), _safe_eval(objective, math.exp(d))
        for _ in range(grid.refine_iters):
            # nan compares False, which pushes the search away from it
            if fc <= fd or math.isnan(fd):
                hi, d, fd = d, c, fc
                c = hi - _INVPHI * (hi - lo)
                fc = _safe_eval(objective, math.exp(c))
            else:
                lo, c, fc = c, d, fd
                d = lo + _INVPHI * (hi - lo)
                fd = _safe_eval(objective, math.exp(d))
        for x, fx in ((c, fc), (d, fd)):
            if math.isfinite(fx) and fx < best_val:
                best_theta, best_val = math.exp(x), fx
    return ThetaOptimum(best_theta, best_val, bool(at_boundary))


def _boundary_note(opt: ThetaOptimum) -> str:
    return "infimum at theta-grid boundary" if opt.at_boundary else ""


# ---------------------------------------------------------------------------
# Markov / Chebyshev


def markov_bound(mean_x, a) -> BoundResult:
    """``tr(E[X] A^{-1}) / d``, evaluated as ``tr(A^{-1/2} E[X] A^{-1/2}) / d``."""
    mean_x = require_psd(mean_x, "E X")
    a = require_pd(a)
    if mean_x.shape != a.shape:
        raise InvalidInputError(f"dimension mismatch: {mean_x.shape} vs {a.shape}")
    d = a.shape[0]
    value = float(np.trace(congruence(sym_pow(a, -0.5), mean_x))) / d
    return BoundResult(max(value, 0.0), "markov")


def anti_order_reference(bound: BoundResult, d: int) -> float:
    """The prior anti-order right-hand side, which carries an extra factor ``d``."""
    return d * bound.value


def chebyshev_bound(dist: DiscreteMatrixDist, a, *, p: float | None = None, q: float | None = None) -> BoundResult:
    """Chebyshev-type bound on ``P(|X - EX| >= A)``.

    Pass exactly one of ``p >= 1`` (power mode,
    ``E tr((|X-EX| A^{-1})^p) / d``) or ``0 < q <= 1`` (root mode,
    ``tr(E[|X-EX|^q] A^{-q}) / d``).
    """
    if (p is None) == (q is None):
        raise InvalidInputError("give exactly one of p or q")
    a = require_pd(a)
    d = a.shape[0]
    mean = exact_mean(dist)
    devs = [sym_abs(v - mean) for v in dist.values]
    if p is not None:
        if not p >= 1:
            raise DomainError(f"p must be >= 1, got {p}")
        total = sum(w * similarity_power_trace(dev, a, p) for w, dev in zip(dist.probs, devs))
        return BoundResult(max(float(total) / d, 0.0), "chebyshev_p", notes=f"p={p}")
    if not 0 < q <= 1:
        raise DomainError(f"q must lie in (0, 1], got {q}")
    moment = as_sym(sum(w * sym_pow(dev, q) for w, dev in zip(dist.probs, devs)))
    value = float(np.trace(congruence(sym_pow(a, -q / 2), moment))) / d
    return BoundResult(max(value, 0.0), "chebyshev_q", notes=f"q={q}")


# ---------------------------------------------------------------------------
# Chernoff


def chernoff_bound(dist: DiscreteMatrixDist, a, t_conj, t_conj2=None, n: int = 1) -> BoundResult:
    """``||E exp(T (X - A) T')||^n`` for ``P(sum_i X_i >= n A)``.

    ``T'`` defaults to ``T``.  The norm is the largest singular value, since the
    exponent is not symmetric when ``T != T'``.
    """
    if n < 1:
        raise InvalidInputError(f"n must be >= 1, got {n}")
    a = as_sym(a)
    t1 = require_psd(t_conj, "T")
    t2 = t1 if t_conj2 is None else require_psd(t_conj2, "T'")
    mgf = sum(p * general_exp(t1 @ (v - a) @ t2) for p, v in zip(dist.probs, dist.values))
    base = float(np.linalg.norm(mgf, 2))
    return BoundResult(base**n, "chernoff", notes=f"n={n}")


def kl_div(x: float, y: float) -> float:
    """Bernoulli relative entropy ``D(x || y)`` with ``0 log 0 = 0``."""
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"x must lie in [0, 1], got {x}")
    if not 0.0 < y < 1.0:
        raise DomainError(f"y must lie in (0, 1), got {y}")
    out = 0.0
    if x > 0:
        out += x * (math.log(x) - math.log(y))
    if x < 1:
        out += (1 - x) * (math.log1p(-x) - math.log1p(-y))
    return max(out, 0.0)


def chernoff_kl_bound(n: int, a: float, m: float) -> BoundResult:
    """``exp(-n D(a || m))`` for iid ``0 <= X <= I`` with ``E X <= mI`` and ``A >= aI``."""
    if n < 1:
        raise InvalidInputError(f"n must be >= 1, got {n}")
    if not (0.0 <= m <= a <= 1.0) or not 0.0 < m < 1.0:
        raise DomainError(f"need 0 < m < 1 and m <= a <= 1, got m={m}, a={a}")
    return BoundResult(math.exp(-n * kl_div(a, m)), "chernoff_kl", notes=f"n={n} a={a} m={m}")


# ---------------------------------------------------------------------------
# Laplace transform method


def laplace_bound(
    tr_mgf: Callable[[float], float],
    t: float,
    d: int,
    grid: ThetaGrid = ThetaGrid(),
    *,
    log_scale: bool = False,
) -> BoundResult:
    """``(1/d) inf_theta exp(-theta t) E tr exp(theta Y)``.

    ``tr_mgf(theta)`` returns ``E tr exp(theta Y)``, or its logarithm when
    ``log_scale`` is set (use that for exact distributions; it stays finite
    for large ``theta``).
    """
    if log_scale:
        def objective(theta):
            return math.exp(tr_mgf(theta) - theta * t) / d
    else:
        def objective(theta):
            return math.exp(-theta * t) * tr_mgf(theta) / d
    opt = optimize_theta(objective, grid)
    return BoundResult(opt.value, "laplace", theta_star=opt.theta, notes=_boundary_note(opt))


def master_bound(
    cgf_sum: Callable[[float], np.ndarray],
    t: float,
    d: int,
    grid: ThetaGrid = ThetaGrid(),
) -> BoundResult:
    """``(1/d) inf_theta exp(-theta t) tr exp(sum_k log E exp(theta X_k))``.

    ``cgf_sum(theta)`` returns the symmetric matrix ``sum_k log E exp(theta X_k)``.
    """
    def objective(theta):
        w = np.linalg.eigvalsh(as_sym(cgf_sum(theta)))
        return float(np.sum(np.exp(w - theta * t))) / d

    opt = optimize_theta(objective, grid)
    return BoundResult(opt.value, "master", theta_star=opt.theta, notes=_boundary_note(opt))


# ---------------------------------------------------------------------------
# Bernstein, Azuma, Hoeffding


def h_bennett(x: float) -> float:
    """``(1 + x) log(1 + x) - x``."""
    if not x >= 0:
        raise DomainError(f"h is defined for x >= 0, got {x}")
    return (1 + x) * math.log1p(x) - x


def _check_sigma_sq(sigma_sq: float) -> None:
    if not sigma_sq > 0:
        raise DomainError(f"sigma^2 must be > 0, got {sigma_sq}")


def bernstein_bounded_bound(sigma_sq: float, r: float, t: float) -> tuple[BoundResult, BoundResult]:
    """Bounded-case Bernstein: ``(h-form, simplified form)``; the first is never larger."""
    _check_sigma_sq(sigma_sq)
    if not r > 0:
        raise DomainError(f"R must be > 0, got {r}")
    if not t >= 0:
        raise DomainError(f"t must be >= 0, got {t}")
    h_form = math.exp(-sigma_sq / r**2 * h_bennett(r * t / sigma_sq))
    simple = math.exp(-0.5 * t**2 / (sigma_sq + r * t / 3))
    return (
        BoundResult(h_form, "bernstein_bounded_h", sigma_sq=sigma_sq, notes=f"R={r}"),
        BoundResult(simple, "bernstein_bounded", sigma_sq=sigma_sq, notes=f"R={r}"),
    )


def bernstein_subexp_bound(sigma_sq: float, r: float, t: float) -> BoundResult:
    """``exp(-(t^2/2) / (sigma^2 + R t))``; ``R = 0`` gives the sub-Gaussian limit."""
    _check_sigma_sq(sigma_sq)
    if not r >= 0:
        raise DomainError(f"R must be >= 0, got {r}")
    if not t >= 0:
        raise DomainError(f"t must be >= 0, got {t}")
    return BoundResult(math.exp(-0.5 * t**2 / (sigma_sq + r * t)), "bernstein_subexp", sigma_sq=sigma_sq, notes=f"R={r}")


def azuma_bound(sigma_sq: float, t: float, theorem_id: str = "azuma") -> BoundResult:
    """``exp(-t^2 / (8 sigma^2))``; also the McDiarmid bound with ``theorem_id="mcdiarmid"``."""
    _check_sigma_sq(sigma_sq)
    if not t >= 0:
        raise DomainError(f"t must be >= 0, got {t}")
    return BoundResult(math.exp(-(t**2) / (8 * sigma_sq)), theorem_id, sigma_sq=sigma_sq)


def hoeffding_bound(v_mats: Sequence, n: int, t: float) -> BoundResult:
    """``exp(-n t^2 / (2 sigma^2))`` with ``sigma^2 = ||mean(V_i)||``.

    When ``sigma^2 = 0`` the matrices are almost surely zero and the bound is
    its limit: 1 at ``t = 0``, 0 for ``t > 0``.
    """
    if len(v_mats) != n or n < 1:
        raise InvalidInputError(f"expected {n} parameter matrices, got {len(v_mats)}")
    if not t >= 0:
        raise DomainError(f"t must be >= 0, got {t}")
    mats = [require_psd(v, "V") for v in v_mats]
    sigma_sq = op_norm(sum(mats) / n)
    if sigma_sq == 0:
        return BoundResult(1.0 if t == 0 else 0.0, "hoeffding", sigma_sq=0.0, notes="degenerate sigma^2 = 0")
    return BoundResult(math.exp(-n * t**2 / (2 * sigma_sq)), "hoeffding", sigma_sq=sigma_sq)


# ---------------------------------------------------------------------------
# empirical Bernstein


def g_eb(x: float) -> float:
    """``-log(1 - x) - x`` on ``[0, 1)``."""
    if not 0.0 <= x < 1.0:
        raise DomainError(f"g is defined on [0, 1), got {x}")
    return -math.log1p(-x) - x


def eb_threshold(gammas: Sequence[float], quad_sum, alpha: float, randomizer_u: float | None = None) -> float:
    """``(log(u / alpha) + lambda_max(quad_sum)) / sum(gammas)``, ``u = 1`` unless randomized."""
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    gsum = float(np.sum(gammas))
    if not gsum > 0:
        raise DomainError("sum of gammas must be > 0")
    u = 1.0 if randomizer_u is None else float(randomizer_u)
    if not u > 0:
        raise DomainError(f"randomizer must be > 0, got {u}")
    return (math.log(u / alpha) + max_eig(quad_sum)) / gsum
