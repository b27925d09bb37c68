"""Adapted matrix sequences, trace-exponential supermartingales and the
Loewner-order events the inequalities talk about."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .bounds import eb_threshold, g_eb
from .errors import DomainError, EvaluationError, InvalidInputError
from .symmat import (
    DEFAULT_TOL,
    PsdTolerance,
    as_sym,
    congruence,
    loewner_geq,
    max_eig,
    min_eig,
    require_pd,
    require_psd,
    sym_abs,
    sym_exp,
    sym_pow,
    sym_sqrt,
)

__all__ = [
    "EBState",
    "ProcessPath",
    "ProcessStep",
    "StoppingRule",
    "doob_maximal_event",
    "eb_crossed",
    "eb_crossing_event",
    "eb_states",
    "eb_trace",
    "generic_supermartingale_L",
    "partial_sum_min_eig_event",
    "randomized_event",
    "randomized_event_fn",
    "stopping_index",
    "ville_stopped_event",
]

EB_SLACK = 1e-9


@dataclass(frozen=True, eq=False)
class ProcessStep:
    x: np.ndarray
    m: np.ndarray
    x_hat: np.ndarray | None = None
    gamma: float | None = None


@dataclass(frozen=True, eq=False)
class ProcessPath:
    """A realized adapted sequence with conditional means, predictions and tuning."""

    steps: tuple
    dim: int

    def __post_init__(self):
        steps = []
        for i, s in enumerate(self.steps):
            x, m = as_sym(s.x), as_sym(s.m)
            x_hat = None if s.x_hat is None else as_sym(s.x_hat)
            for mat in (x, m) + ((x_hat,) if x_hat is not None else ()):
                if mat.shape != (self.dim, self.dim):
                    raise InvalidInputError(f"step {i}: matrix of shape {mat.shape}, expected dim {self.dim}")
            if s.gamma is not None and not 0.0 < s.gamma < 1.0:
                raise DomainError(f"step {i}: gamma={s.gamma} outside (0, 1)")
            if x_hat is not None and min_eig(x - x_hat) < -1.0 - EB_SLACK:
                raise DomainError(f"step {i}: lambda_min(X - X_hat) = {min_eig(x - x_hat)} < -1")
            steps.append(ProcessStep(x, m, x_hat, None if s.gamma is None else float(s.gamma)))
        object.__setattr__(self, "steps", tuple(steps))

    def __len__(self) -> int:
        return len(self.steps)

    def prefix(self, n: int) -> "ProcessPath":
        return ProcessPath(self.steps[:n], self.dim)

    def to_records(self) -> list[dict]:
        return [
            {
                "x": s.x.tolist(),
                "m": s.m.tolist(),
                "x_hat": None if s.x_hat is None else s.x_hat.tolist(),
                "gamma": s.gamma,
            }
            for s in self.steps
        ]


@dataclass(frozen=True, eq=False)
class EBState:
    z_sum: np.ndarray
    quad_sum: np.ndarray
    gamma_sum: float
    n: int


def eb_states(path: ProcessPath) -> list[EBState]:
    """Running sums ``(sum gamma_i (X_i - M_i), sum g(gamma_i) (X_i - X_hat_i)^2, sum gamma_i)`` for ``n = 1..N``."""
    d = path.dim
    z = np.zeros((d, d))
    quad = np.zeros((d, d))
    gsum = 0.0
    out = []
    for i, s in enumerate(path.steps):
        if s.x_hat is None or s.gamma is None:
            raise InvalidInputError(f"step {i} lacks x_hat or gamma")
        r = s.x - s.x_hat
        z = z + s.gamma * (s.x - s.m)
        quad = quad + g_eb(s.gamma) * (r @ r)
        gsum += s.gamma
        out.append(EBState(0.5 * (z + z.T), 0.5 * (quad + quad.T), gsum, i + 1))
    return out


def eb_trace(path: ProcessPath) -> list[tuple[float, EBState]]:
    """``L_n = tr exp(sum gamma_i (X_i - M_i) - sum g(gamma_i) (X_i - X_hat_i)^2)`` for ``n = 0..N``.

    ``L_0 = d``.
    """
    d = path.dim
    out = [(float(d), EBState(np.zeros((d, d)), np.zeros((d, d)), 0.0, 0))]
    for state in eb_states(path):
        out.append((float(np.trace(sym_exp(state.z_sum - state.quad_sum))), state))
    return out


def generic_supermartingale_L(z_list: Sequence, c_list: Sequence, c_prime_list: Sequence) -> float:
    """``tr exp(sum Z_i - sum (C_i + C'_i))``.

    Also checks the pointwise lower bound
    ``L >= d exp(lambda_min(sum Z) - lambda_max(sum (C + C')))``; a violation
    beyond 1e-9 relative means a bug and raises EvaluationError.
    """
    if not (len(z_list) == len(c_list) == len(c_prime_list)):
        raise InvalidInputError("Z, C and C' lists differ in length")
    if not z_list:
        raise InvalidInputError("need at least one term; the empty process is L_0 = d")
    zs = [as_sym(z) for z in z_list]
    cs = [as_sym(c) + as_sym(cp) for c, cp in zip(c_list, c_prime_list)]
    if len({m.shape for m in zs + cs}) != 1:
        raise InvalidInputError("dimension mismatch among Z, C, C'")
    d = zs[0].shape[0]
    z_sum, c_sum = sum(zs), sum(cs)
    L = float(np.trace(sym_exp(z_sum - c_sum)))
    lower = d * np.exp(min_eig(z_sum) - max_eig(c_sum))
    if L < lower * (1 - 1e-9):
        raise EvaluationError(f"trace-exponential lower bound violated: L={L}, bound={lower}")
    return L


# ---------------------------------------------------------------------------
# maximal and stopped events


def doob_maximal_event(path: Sequence, a, horizon: int, tol: PsdTolerance = DEFAULT_TOL) -> bool:
    """``exists n <= N: Y_n >= A`` over ``path = [Y_1, Y_2, ...]``."""
    if horizon > len(path):
        raise InvalidInputError(f"horizon {horizon} exceeds path length {len(path)}")
    a = as_sym(a)
    return any(loewner_geq(y, a, tol) for y in path[:horizon])


@dataclass(frozen=True)
class StoppingRule:
    """How the stopping time ``tau`` is chosen along ``[Y_1, ..., Y_N]``.

    ``fixed``: ``tau = horizon``.
    ``first_hit``: first ``n <= horizon`` with ``Y_n >= A`` (the deterministic
    threshold), else ``horizon``.
    ``predicate``: first ``n <= horizon`` with ``predicate(n, Y_n)``, else ``horizon``.
    """

    kind: str = "first_hit"
    horizon: int = 1000
    predicate: Callable | None = None

    def __post_init__(self):
        if self.kind not in {"fixed", "first_hit", "predicate"}:
            raise InvalidInputError(f"unknown stopping rule {self.kind!r}")
        if self.horizon < 1:
            raise InvalidInputError("horizon must be >= 1")
        if self.kind == "predicate" and self.predicate is None:
            raise InvalidInputError("predicate rule needs a predicate")


def stopping_index(path: Sequence, rule: StoppingRule, a=None, tol: PsdTolerance = DEFAULT_TOL) -> int:
    """1-based ``tau`` for ``path = [Y_1, ...]``; never looks past step ``tau``."""
    if rule.horizon > len(path):
        raise InvalidInputError(f"horizon {rule.horizon} exceeds path length {len(path)}")
    if rule.kind == "fixed":
        return rule.horizon
    for n in range(1, rule.horizon + 1):
        y = path[n - 1]
        hit = loewner_geq(y, a, tol) if rule.kind == "first_hit" else rule.predicate(n, y)
        if hit:
            return n
    return rule.horizon


def _conjugated_threshold(a: np.ndarray, u) -> np.ndarray:
    return congruence(sym_sqrt(a), require_psd(u, "U"))


def ville_stopped_event(path: Sequence, rule: StoppingRule, a, u_conjugate=None, tol: PsdTolerance = DEFAULT_TOL) -> bool:
    """``Y_tau >= A`` or, with ``U`` given, ``Y_tau >= A^{1/2} U A^{1/2}``.

    ``tau`` never depends on ``U``.  With the ``first_hit`` rule and no ``U``
    this is the capped maximal event ``exists n <= horizon: Y_n >= A``.
    """
    a = require_pd(a)
    tau = stopping_index(path, rule, a, tol)
    thr = a if u_conjugate is None else _conjugated_threshold(a, u_conjugate)
    return loewner_geq(path[tau - 1], thr, tol)


def randomized_event_fn(
    a,
    form: str,
    *,
    q: float = 1.0,
    gamma: float = 1.0,
    beta: float = 1.0,
    ex=None,
    tol: PsdTolerance = DEFAULT_TOL,
) -> Callable[[np.ndarray, np.ndarray], bool]:
    """Validate the fixed inputs once and return ``event(x, u)``; see :func:`randomized_event`."""
    if form == "markov":
        root = sym_sqrt(require_pd(a))

        def event(x, u):
            return loewner_geq(x, congruence(root, require_psd(u, "U")), tol)

    elif form == "chebyshev_q":
        if not 0 < q <= 1:
            raise DomainError(f"q must lie in (0, 1], got {q}")
        if ex is None:
            raise InvalidInputError("chebyshev_q needs ex = E X")
        root, center = sym_pow(require_pd(a), q / 2), as_sym(ex)

        def event(x, u):
            inner = congruence(root, require_psd(u, "U"))
            return loewner_geq(sym_abs(as_sym(x) - center), sym_pow(inner, 1 / q), tol)

    elif form == "chernoff":
        half = sym_exp(0.5 * gamma * as_sym(a))

        def event(x, u):
            return loewner_geq(sym_exp(gamma * as_sym(x)), congruence(half, require_psd(u, "U")), tol)

    elif form == "hoeffding":
        if not beta > 0:
            raise DomainError(f"beta must be > 0, got {beta}")
        if ex is None:
            raise InvalidInputError("hoeffding needs ex = M")
        center = as_sym(ex)

        def event(x, u):
            return loewner_geq(sym_exp(gamma * (as_sym(x) - center)), beta * require_psd(u, "U"), tol)

    else:
        raise InvalidInputError(f"unknown randomized form {form!r}")
    return event


def randomized_event(
    x,
    a,
    u,
    form: str,
    *,
    q: float = 1.0,
    gamma: float = 1.0,
    beta: float = 1.0,
    ex=None,
    tol: PsdTolerance = DEFAULT_TOL,
) -> bool:
    """Evaluate one of the randomized Loewner events.

    ``markov``        ``X >= A^{1/2} U A^{1/2}``
    ``chebyshev_q``   ``|X - EX| >= (A^{q/2} U A^{q/2})^{1/q}``
    ``chernoff``      ``exp(gamma X) >= exp(gamma A / 2) U exp(gamma A / 2)``
    ``hoeffding``     ``exp(gamma (X - EX)) >= beta U`` (``X`` is the sample mean, ``a`` unused)
    """
    return randomized_event_fn(a, form, q=q, gamma=gamma, beta=beta, ex=ex, tol=tol)(x, u)


def partial_sum_min_eig_event(xs: Sequence, t: float, scale: float = 1.0, rel_tol: float = 1e-9) -> bool:
    """``lambda_min(scale * sum_k X_k) >= t`` with a small inclusive slack."""
    if len(xs) == 0:
        raise InvalidInputError("need at least one matrix")
    mats = [as_sym(x) for x in xs]
    if len({m.shape for m in mats}) != 1:
        raise InvalidInputError("dimension mismatch in partial sum")
    return min_eig(scale * sum(mats)) >= t - rel_tol * max(1.0, abs(t))


def eb_crossed(state: EBState, alpha: float, randomizer_u: float | None = None) -> bool:
    """``lambda_min(z_sum) / gamma_sum >= eb_threshold`` at one state, with 1e-12 relative slack."""
    thr = eb_threshold([state.gamma_sum], state.quad_sum, alpha, randomizer_u)
    return min_eig(state.z_sum) / state.gamma_sum >= thr - 1e-12 * max(1.0, abs(thr))


def eb_crossing_event(
    path: ProcessPath,
    alpha: float,
    rule: StoppingRule | None = None,
    randomizer_u: float | None = None,
) -> bool:
    """The empirical-Bernstein event at a stopping time ``tau``.

    Event: ``lambda_min(sum_{i<=tau} gamma_i (X_i - M_i)) / sum gamma_i`` is at
    least :func:`~matconc.bounds.eb_threshold`.  The default rule stops at the
    first ``n`` where the non-randomized event holds (capped at the path
    length), so ``tau`` does not depend on the randomizer.
    """
    states = eb_states(path)
    if not states:
        raise InvalidInputError("empty path")
    rule = rule or StoppingRule("first_hit", len(path))
    if rule.kind == "fixed":
        tau = rule.horizon
    elif rule.kind == "first_hit":
        tau = next((n for n in range(1, rule.horizon + 1) if eb_crossed(states[n - 1], alpha)), rule.horizon)
    else:
        tau = stopping_index(states, rule)
    return eb_crossed(states[tau - 1], alpha, randomizer_u)
