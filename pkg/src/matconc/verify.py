"""Monte Carlo and exact checks of bound-versus-probability claims.

Trials are keyed by index and draw from their own substream, and counts are
merged by summation, so any worker count gives identical results.
"""

from __future__ import annotations

import math
import multiprocessing
from dataclasses import asdict, dataclass
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import stats

from .bounds import BoundResult
from .errors import InvalidInputError, OracleCapError
from .samplers import DEFAULT_ENUM_CAP, DiscreteMatrixDist, SeedSpec, enumerate_product_support

__all__ = [
    "EmpiricalEstimate",
    "VerificationVerdict",
    "check_bound_holds",
    "clopper_pearson",
    "conditional_supermartingale_check",
    "enumerate_exact_probability",
    "estimate_event_curve",
    "estimate_event_probability",
    "exact_expectation",
]

BLOCK_SIZE = 2048
EXACT_SLACK = 1e-9


@dataclass(frozen=True)
class EmpiricalEstimate:
    trials: int
    successes: int
    p_hat: float
    ci_low: float
    ci_high: float
    level: float = 0.99

    @property
    def std_error(self) -> float:
        return math.sqrt(self.p_hat * (1 - self.p_hat) / self.trials)

    def to_record(self) -> dict:
        return asdict(self)


def clopper_pearson(successes: int, trials: int, level: float = 0.99) -> tuple[float, float]:
    """Exact two-sided binomial interval by tail inversion."""
    if trials < 1 or not 0 <= successes <= trials:
        raise InvalidInputError(f"bad counts: {successes}/{trials}")
    if not 0 < level < 1:
        raise InvalidInputError(f"level must lie in (0, 1), got {level}")
    alpha = 1 - level
    lo = 0.0 if successes == 0 else float(stats.beta.ppf(alpha / 2, successes, trials - successes + 1))
    hi = 1.0 if successes == trials else float(stats.beta.ppf(1 - alpha / 2, successes + 1, trials - successes))
    return lo, hi


def make_estimate(successes: int, trials: int, level: float = 0.99) -> EmpiricalEstimate:
    lo, hi = clopper_pearson(successes, trials, level)
    p_hat = successes / trials
    return EmpiricalEstimate(trials, successes, p_hat, min(lo, p_hat), max(hi, p_hat), level)


# ---------------------------------------------------------------------------
# trial fan-out

_ACTIVE_TASK = None


def _count_block(bounds: tuple[int, int]) -> np.ndarray:
    event, seed = _ACTIVE_TASK
    start, stop = bounds
    total = None
    for k in range(start, stop):
        hit = np.atleast_1d(np.asarray(event(seed.substream(k)), dtype=np.int64))
        total = hit if total is None else total + hit
    return total


def _count_successes(event: Callable, trials: int, seed: SeedSpec, workers: int) -> np.ndarray:
    global _ACTIVE_TASK
    if trials < 1:
        raise InvalidInputError(f"trials must be >= 1, got {trials}")
    blocks = [(s, min(s + BLOCK_SIZE, trials)) for s in range(0, trials, BLOCK_SIZE)]
    previous = _ACTIVE_TASK
    _ACTIVE_TASK = (event, seed)
    try:
        if workers <= 1 or len(blocks) == 1:
            parts = [_count_block(b) for b in blocks]
        else:
            # fork hands the (possibly unpicklable) event to the children
            ctx = multiprocessing.get_context("fork")
            with ctx.Pool(min(workers, len(blocks))) as pool:
                parts = pool.map(_count_block, blocks)
    finally:
        _ACTIVE_TASK = previous
    return np.sum(parts, axis=0)


def estimate_event_probability(
    event: Callable[[np.random.Generator], bool],
    trials: int,
    seed: SeedSpec,
    level: float = 0.99,
    workers: int = 1,
) -> EmpiricalEstimate:
    """Monte Carlo estimate of ``P(event)`` with an exact binomial interval.

    ``event`` receives the substream of one trial and returns a bool.
    """
    counts = _count_successes(event, trials, seed, workers)
    return make_estimate(int(counts[0]), trials, level)


def estimate_event_curve(
    event: Callable[[np.random.Generator], Sequence[bool]],
    trials: int,
    seed: SeedSpec,
    level: float = 0.99,
    workers: int = 1,
) -> list[EmpiricalEstimate]:
    """Like :func:`estimate_event_probability` for a vector of nested events
    (e.g. one per threshold) evaluated on the same draw."""
    counts = _count_successes(event, trials, seed, workers)
    return [make_estimate(int(c), trials, level) for c in counts]


# ---------------------------------------------------------------------------
# exact oracle


def exact_expectation(support: Iterable[tuple[float, object]], fn: Callable) -> float:
    """``sum_i p_i fn(outcome_i)`` over an enumerated support."""
    return float(sum(p * fn(o) for p, o in support))


def enumerate_exact_probability(
    dist: DiscreteMatrixDist,
    n: int,
    event: Callable[[list], bool],
    cap: int = DEFAULT_ENUM_CAP,
) -> float:
    """Exact ``P(event(X_1..X_n))`` for iid draws from ``dist``."""
    return exact_expectation(enumerate_product_support(dist, n, cap), lambda xs: float(bool(event(xs))))


# ---------------------------------------------------------------------------
# verdicts


@dataclass(frozen=True)
class VerificationVerdict:
    bound: BoundResult
    status: str
    margin: float
    exact_prob: float | None = None
    estimate: EmpiricalEstimate | None = None

    @property
    def prob(self) -> float:
        return self.exact_prob if self.exact_prob is not None else self.estimate.p_hat

    def to_record(self) -> dict:
        return {
            "status": self.status,
            "margin": self.margin,
            "bound": self.bound.to_record(),
            "exact_prob": self.exact_prob,
            "estimate": None if self.estimate is None else self.estimate.to_record(),
        }


def check_bound_holds(prob: EmpiricalEstimate | float, bound: BoundResult) -> VerificationVerdict:
    """Compare a probability with an upper bound.

    Exact probabilities violate when they exceed the bound by more than
    1e-9.  Estimates violate only when the whole interval lies above the
    bound (``ci_low > bound``); they are ``tight`` when ``|p_hat - bound|``
    is within ``max(2 SE, 1e-9)``.
    """
    b = bound.value
    if isinstance(prob, EmpiricalEstimate):
        margin = max(2 * prob.std_error, EXACT_SLACK)
        if prob.ci_low > b:
            status = "violation"
        elif abs(prob.p_hat - b) <= margin:
            status = "tight"
        else:
            status = "pass"
        return VerificationVerdict(bound, status, margin, estimate=prob)
    p = float(prob)
    margin = EXACT_SLACK
    if p > b + margin:
        status = "violation"
    elif abs(p - b) <= margin:
        status = "tight"
    else:
        status = "pass"
    return VerificationVerdict(bound, status, margin, exact_prob=p)


# ---------------------------------------------------------------------------
# supermartingale property on finite trees


def conditional_supermartingale_check(
    branches: Callable[[tuple], Sequence[tuple[float, object]]],
    depth: int,
    L: Callable[[tuple], float],
    max_depth: int = 6,
    max_branching: int = 4,
) -> float:
    """Largest conditional drift ``E[L(h + (x,)) | h] - L(h)`` over all internal nodes.

    ``branches(h)`` lists ``(prob, x)`` children of history ``h``; a
    supermartingale gives a result ``<= 0`` up to rounding.
    """
    if depth > max_depth:
        raise OracleCapError(f"tree depth {depth} exceeds cap {max_depth}")
    worst = -math.inf

    def visit(history: tuple) -> None:
        nonlocal worst
        if len(history) == depth:
            return
        kids = list(branches(history))
        if len(kids) > max_branching:
            raise OracleCapError(f"node with {len(kids)} children exceeds cap {max_branching}")
        total = sum(p for p, _ in kids)
        if abs(total - 1) > 1e-12:
            raise InvalidInputError(f"children probabilities sum to {total}")
        drift = sum(p * L(history + (x,)) for p, x in kids) - L(history)
        worst = max(worst, drift)
        for _, x in kids:
            visit(history + (x,))

    visit(())
    return worst if depth > 0 else 0.0
