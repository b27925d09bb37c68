"""Matrix distribution families with exact means, MGFs and enumerable supports.

Every family here satisfies the hypotheses of the inequality it feeds by
construction, so verification never relies on estimated quantities.
Randomness comes from counter-based per-trial substreams (:class:`SeedSpec`).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np
from scipy.special import logsumexp

from .errors import DomainError, InvalidInputError, OracleCapError
from .symmat import (
    as_sym,
    is_psd,
    max_eig,
    op_norm,
    require_pd,
    require_psd,
    sym_exp,
    sym_log,
)

__all__ = [
    "DEFAULT_ENUM_CAP",
    "DiscreteMatrixDist",
    "IidEBSequence",
    "McDiarmidFamily",
    "MultiplicativeProcess",
    "RademacherSequence",
    "SeedSpec",
    "SubGaussianFactorDist",
    "SuperUniformSpec",
    "bounded_iid_dist",
    "enumerate_independent_support",
    "enumerate_product_support",
    "exact_cgf",
    "exact_mean",
    "exact_mgf",
    "log_trace_mgf",
    "mcdiarmid_function_family",
    "psd_super_or_submartingale",
    "rademacher_sequence",
    "sample_super_uniform",
    "tight_example_dist",
]

DEFAULT_ENUM_CAP = 2**16
_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class SeedSpec:
    """Master seed plus stream id; trial ``k`` gets its own Philox counter block.

    The substream for ``(master_seed, stream_id, k)`` depends on nothing else,
    so results do not depend on how trials are scheduled across workers.
    """

    master_seed: int
    stream_id: int = 0

    def substream(self, k: int) -> np.random.Generator:
        key = np.array([self.master_seed & _MASK64, self.stream_id & _MASK64], dtype=np.uint64)
        counter = np.array([0, 0, k & _MASK64, 0], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key, counter=counter))


def draw_indices(rng: np.random.Generator, probs: np.ndarray, size=None):
    """Categorical draws by inverting the cumulative distribution (one uniform per draw)."""
    cum = np.cumsum(probs)
    idx = np.searchsorted(cum, rng.random(size), side="right")
    return np.minimum(idx, len(probs) - 1)


# ---------------------------------------------------------------------------
# finite distributions


@dataclass(frozen=True, eq=False)
class DiscreteMatrixDist:
    """Finitely supported distribution over ``d x d`` symmetric matrices."""

    probs: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=np.float64).reshape(-1)
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim == 2 and len(probs) == 1:
            values = values[None]
        if values.ndim != 3 or values.shape[0] != probs.shape[0] or values.shape[1] != values.shape[2]:
            raise InvalidInputError(f"atoms must be (n, d, d) with n probabilities; got {values.shape} and {probs.shape}")
        if len(probs) == 0:
            raise InvalidInputError("distribution needs at least one atom")
        if np.any(~np.isfinite(probs)) or np.any(probs <= 0):
            raise InvalidInputError("atom probabilities must be positive")
        if abs(probs.sum() - 1.0) > 1e-12:
            raise InvalidInputError(f"atom probabilities sum to {probs.sum()!r}, not 1")
        values = np.stack([as_sym(v) for v in values])
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_atoms(cls, atoms: Sequence[tuple[float, object]]) -> "DiscreteMatrixDist":
        """Build from ``[(prob, matrix), ...]``; zero-probability atoms are dropped."""
        kept = [(float(p), as_sym(v)) for p, v in atoms if p != 0]
        if not kept:
            raise InvalidInputError("no atoms with positive probability")
        return cls(np.array([p for p, _ in kept]), np.stack([v for _, v in kept]))

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def atoms(self) -> list[tuple[float, np.ndarray]]:
        return list(zip(self.probs.tolist(), self.values))

    def __len__(self) -> int:
        return len(self.probs)

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return self.values[draw_indices(rng, self.probs)]

    def map(self, fn) -> "DiscreteMatrixDist":
        """Push the distribution forward through a matrix-valued ``fn``."""
        return DiscreteMatrixDist(self.probs, np.stack([fn(v) for v in self.values]))

    def to_dict(self) -> dict:
        return {"probs": self.probs.tolist(), "values": self.values.tolist()}


def exact_mean(dist: DiscreteMatrixDist) -> np.ndarray:
    return as_sym(np.einsum("i,ijk->jk", dist.probs, dist.values))


def exact_mgf(dist: DiscreteMatrixDist, theta: float) -> np.ndarray:
    """``E exp(theta X)`` as an atom-weighted sum."""
    return as_sym(sum(p * sym_exp(theta * v) for p, v in zip(dist.probs, dist.values)))


def exact_cgf(dist: DiscreteMatrixDist, theta: float) -> np.ndarray:
    """``log E exp(theta X)``, shifted by the top exponent to avoid overflow."""
    shift = max(max_eig(theta * v) for v in dist.values)
    eye = np.eye(dist.dim)
    mgf = sum(p * sym_exp(theta * v - shift * eye) for p, v in zip(dist.probs, dist.values))
    return sym_log(mgf) + shift * eye


def log_trace_mgf(dist: DiscreteMatrixDist, theta: float) -> float:
    """``log E tr exp(theta X)`` via log-sum-exp over atom eigenvalues."""
    w = np.linalg.eigvalsh(theta * dist.values)
    b = np.broadcast_to(dist.probs[:, None], w.shape)
    return float(logsumexp(w, b=b))


def tight_example_dist(a, p: float) -> DiscreteMatrixDist:
    """``X = A`` with probability ``p``, else ``0``; makes the Markov bound an equality."""
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"p must lie in [0, 1], got {p}")
    a = require_pd(a)
    return DiscreteMatrixDist.from_atoms([(p, a), (1.0 - p, np.zeros_like(a))])


def bounded_iid_dist(d: int, m: float) -> DiscreteMatrixDist:
    """``X = I`` with probability ``m``, else ``0``; so ``0 <= X <= I`` and ``E X = mI``."""
    if not 0.0 < m < 1.0:
        raise DomainError(f"m must lie in (0, 1), got {m}")
    return DiscreteMatrixDist(np.array([m, 1.0 - m]), np.stack([np.eye(d), np.zeros((d, d))]))


def enumerate_independent_support(
    dists: Sequence[DiscreteMatrixDist], cap: int = DEFAULT_ENUM_CAP
) -> Iterator[tuple[float, list[np.ndarray]]]:
    """Yield ``(prob, [X_1, ..., X_n])`` over the product support of independent draws."""
    count = math.prod(len(d) for d in dists)
    if count > cap:
        raise OracleCapError(f"product support has {count} sequences, cap is {cap}")
    return _walk_product(list(dists))


def _walk_product(dists):
    for combo in itertools.product(*(range(len(d)) for d in dists)):
        prob = 1.0
        mats = []
        for dist, i in zip(dists, combo):
            prob *= dist.probs[i]
            mats.append(dist.values[i])
        yield prob, mats


def enumerate_product_support(
    dist: DiscreteMatrixDist, n: int, cap: int = DEFAULT_ENUM_CAP
) -> Iterator[tuple[float, list[np.ndarray]]]:
    """All ``len(dist)**n`` iid sequences with their product weights."""
    if n < 1:
        raise InvalidInputError(f"n must be >= 1, got {n}")
    return enumerate_independent_support([dist] * n, cap)


# ---------------------------------------------------------------------------
# sub-Gaussian family


@dataclass(frozen=True, eq=False)
class SubGaussianFactorDist:
    """``X = g B`` with ``g`` standard normal.

    ``E exp(l X) = exp(l^2 B^2 / 2)``, so ``X`` is sub-Gaussian with parameter
    ``V = B^2`` and the defining inequality is an equality.
    """

    b: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "b", as_sym(self.b))

    @property
    def v(self) -> np.ndarray:
        return as_sym(self.b @ self.b)

    @property
    def dim(self) -> int:
        return self.b.shape[0]

    def mgf(self, lam: float) -> np.ndarray:
        return sym_exp(0.5 * lam**2 * self.v)

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return rng.standard_normal() * self.b


# ---------------------------------------------------------------------------
# martingale difference families


@dataclass(frozen=True, eq=False)
class RademacherSequence:
    """``X_k = eps_k A_k`` with iid random signs.

    ``E[X_k | past] = 0`` and ``X_k^2 = A_k^2`` on every draw.
    """

    a_mats: tuple

    def __post_init__(self):
        mats = tuple(as_sym(a) for a in self.a_mats)
        if not mats:
            raise InvalidInputError("need at least one coefficient matrix")
        if len({m.shape for m in mats}) != 1:
            raise InvalidInputError("coefficient matrices differ in dimension")
        object.__setattr__(self, "a_mats", mats)

    @property
    def dim(self) -> int:
        return self.a_mats[0].shape[0]

    @property
    def n(self) -> int:
        return len(self.a_mats)

    @property
    def sigma_sq(self) -> float:
        """``||sum_k A_k^2||`` (equals ``||sum_k E X_k^2||`` here)."""
        return op_norm(sum(a @ a for a in self.a_mats))

    @property
    def r_bound(self) -> float:
        """Almost-sure bound on ``lambda_max(X_k)``: the largest ``||A_k||``."""
        return max(op_norm(a) for a in self.a_mats)

    def step_dist(self, k: int) -> DiscreteMatrixDist:
        a = self.a_mats[k]
        if not np.any(a):
            return DiscreteMatrixDist(np.array([1.0]), a[None])
        return DiscreteMatrixDist(np.array([0.5, 0.5]), np.stack([a, -a]))

    def signs(self, rng: np.random.Generator) -> np.ndarray:
        return rng.integers(0, 2, size=self.n) * 2.0 - 1.0

    def sample(self, rng: np.random.Generator) -> list[np.ndarray]:
        return [s * a for s, a in zip(self.signs(rng), self.a_mats)]

    def sample_sum(self, rng: np.random.Generator) -> np.ndarray:
        return np.einsum("k,kij->ij", self.signs(rng), np.stack(self.a_mats))

    def conditional_mean(self, k: int, history=None) -> np.ndarray:
        return np.zeros_like(self.a_mats[k])

    def support(self, cap: int = DEFAULT_ENUM_CAP):
        return enumerate_independent_support([self.step_dist(k) for k in range(self.n)], cap)


def rademacher_sequence(a_mats) -> RademacherSequence:
    return RademacherSequence(tuple(a_mats))


@dataclass(frozen=True, eq=False)
class McDiarmidFamily:
    """``H(z) = sum_k z_k B_k`` with independent signs ``z_k``.

    Changing coordinate ``k`` moves ``H`` by ``+-2 B_k``, so the difference
    matrices are ``A_k = 2 B_k``; ``E H = 0``.
    """

    b_mats: tuple

    def __post_init__(self):
        mats = tuple(as_sym(b) for b in self.b_mats)
        if not mats:
            raise InvalidInputError("need at least one coefficient matrix")
        object.__setattr__(self, "b_mats", mats)

    @property
    def dim(self) -> int:
        return self.b_mats[0].shape[0]

    @property
    def a_mats(self) -> list[np.ndarray]:
        return [2.0 * b for b in self.b_mats]

    @property
    def sigma_sq(self) -> float:
        return op_norm(sum(a @ a for a in self.a_mats))

    @property
    def mean(self) -> np.ndarray:
        return np.zeros_like(self.b_mats[0])

    def H(self, z) -> np.ndarray:
        return np.einsum("k,kij->ij", np.asarray(z, dtype=np.float64), np.stack(self.b_mats))

    def sample_z(self, rng: np.random.Generator) -> np.ndarray:
        return rng.integers(0, 2, size=len(self.b_mats)) * 2.0 - 1.0

    def support(self, cap: int = DEFAULT_ENUM_CAP) -> Iterator[tuple[float, np.ndarray]]:
        n = len(self.b_mats)
        if 2**n > cap:
            raise OracleCapError(f"sign support has {2**n} patterns, cap is {cap}")
        for z in itertools.product((-1.0, 1.0), repeat=n):
            yield 0.5**n, np.array(z)


def mcdiarmid_function_family(b_mats) -> McDiarmidFamily:
    return McDiarmidFamily(tuple(b_mats))


@dataclass(frozen=True, eq=False)
class MultiplicativeProcess:
    """``Y_n = (w_1 ... w_n) B`` with iid positive factors, ``Y_0 = B``.

    With ``mu = E w`` the process is a submartingale for ``mu >= 1`` and a
    supermartingale for ``mu <= 1``; ``E Y_n = mu^n B``.
    """

    b: np.ndarray
    factors: np.ndarray
    factor_probs: np.ndarray
    n_max: int

    @property
    def dim(self) -> int:
        return self.b.shape[0]

    @property
    def mu(self) -> float:
        return float(self.factors @ self.factor_probs)

    def mean_at(self, n: int) -> np.ndarray:
        return self.mu**n * self.b

    def sample(self, rng: np.random.Generator, n: int | None = None) -> list[np.ndarray]:
        """``[Y_1, ..., Y_n]``."""
        n = self.n_max if n is None else n
        w = self.factors[draw_indices(rng, self.factor_probs, n)]
        return [c * self.b for c in np.cumprod(w)]

    def paths(self, n: int | None = None, cap: int = DEFAULT_ENUM_CAP) -> Iterator[tuple[float, list[np.ndarray]]]:
        """Exact enumeration of ``[Y_1, ..., Y_n]`` with probabilities."""
        n = self.n_max if n is None else n
        count = len(self.factors) ** n
        if count > cap:
            raise OracleCapError(f"path support has {count} leaves, cap is {cap}")
        for combo in itertools.product(range(len(self.factors)), repeat=n):
            idx = list(combo)
            prob = float(np.prod(self.factor_probs[idx]))
            yield prob, [c * self.b for c in np.cumprod(self.factors[idx])]


def psd_super_or_submartingale(b, factors, factor_probs, n_max: int, kind: str = "martingale") -> MultiplicativeProcess:
    """Multiplicative PSD process; ``kind`` in {"sub", "super", "martingale"} is checked against ``E w``."""
    b = require_psd(b, "B")
    factors = np.asarray(factors, dtype=np.float64)
    factor_probs = np.asarray(factor_probs, dtype=np.float64)
    if factors.shape != factor_probs.shape or factors.ndim != 1 or len(factors) == 0:
        raise InvalidInputError("factors and factor_probs must be equal-length 1-d arrays")
    if np.any(factors <= 0):
        raise DomainError("factors must be positive")
    if np.any(factor_probs <= 0) or abs(factor_probs.sum() - 1) > 1e-12:
        raise InvalidInputError("factor_probs must be positive and sum to 1")
    if n_max < 1:
        raise InvalidInputError("n_max must be >= 1")
    mu = float(factors @ factor_probs)
    ok = {
        "sub": mu >= 1 - 1e-12,
        "super": mu <= 1 + 1e-12,
        "martingale": abs(mu - 1) <= 1e-12,
    }
    if kind not in ok:
        raise InvalidInputError(f"unknown process kind {kind!r}")
    if not ok[kind]:
        raise DomainError(f"factor mean {mu} does not give a {kind}martingale")
    return MultiplicativeProcess(b, factors, factor_probs, int(n_max))


# ---------------------------------------------------------------------------
# super-uniform randomizers


@dataclass(frozen=True)
class SuperUniformSpec:
    """How to draw a super-uniform PSD matrix ``U``.

    kind:
        ``"scalar"``: ``u I`` with ``u`` uniform on (0, 1].
        ``"diagonal_plus_psd"``: ``diag(u + s_i) + Y`` with ``u`` uniform,
        ``s_i`` uniform on [0, spread] and ``Y`` a fixed PSD matrix; the
        smallest diagonal entry is stochastically larger than ``u``.
        ``"identity"``: ``I``.
    """

    kind: str
    dim: int
    spread: float = 1.0
    y: tuple | None = None

    def __post_init__(self):
        if self.kind not in {"scalar", "diagonal_plus_psd", "identity"}:
            raise InvalidInputError(f"unknown super-uniform kind {self.kind!r}")
        if self.dim < 1:
            raise InvalidInputError("dim must be >= 1")
        if self.y is not None:
            y = require_psd(self.y, "Y")
            if y.shape[0] != self.dim:
                raise InvalidInputError("Y has the wrong dimension")


def _uniform_open_left(rng: np.random.Generator) -> float:
    return 1.0 - rng.random()


def sample_super_uniform(spec: SuperUniformSpec, rng: np.random.Generator) -> np.ndarray:
    d = spec.dim
    if spec.kind == "identity":
        return np.eye(d)
    u = _uniform_open_left(rng)
    if spec.kind == "scalar":
        return u * np.eye(d)
    out = np.diag(u + spec.spread * rng.random(d))
    if spec.y is not None:
        out = out + as_sym(spec.y)
    return out


def check_bounded_iid(dist: DiscreteMatrixDist) -> bool:
    """``0 <= X <= I`` on every atom."""
    eye = np.eye(dist.dim)
    return all(is_psd(v) and is_psd(eye - v) for v in dist.values)


# ---------------------------------------------------------------------------
# empirical-Bernstein sequences


@dataclass(frozen=True, eq=False)
class IidEBSequence:
    """iid ``X_n`` from a distribution on ``[0, I]`` with running-mean predictions.

    ``M_n = E X``, ``X_hat_1 = x_hat0`` (default ``I/2``) and ``X_hat_n`` is the
    average of ``X_1..X_{n-1}``; both stay in ``[0, I]`` so
    ``lambda_min(X_n - X_hat_n) >= -1``.  ``gammas`` is a constant or one value
    per step.
    """

    dist: DiscreteMatrixDist
    gammas: tuple
    horizon: int
    x_hat0: np.ndarray | None = None

    def __post_init__(self):
        if not check_bounded_iid(self.dist):
            raise DomainError("EB sequence atoms must satisfy 0 <= X <= I")
        g = np.atleast_1d(np.asarray(self.gammas, dtype=np.float64))
        if len(g) == 1:
            g = np.repeat(g, self.horizon)
        if len(g) != self.horizon or np.any(g <= 0) or np.any(g >= 1):
            raise DomainError("need one gamma in (0, 1) per step")
        object.__setattr__(self, "gammas", tuple(g.tolist()))
        x0 = 0.5 * np.eye(self.dist.dim) if self.x_hat0 is None else as_sym(self.x_hat0)
        object.__setattr__(self, "x_hat0", x0)

    @property
    def dim(self) -> int:
        return self.dist.dim

    def path_from(self, xs):
        from .processes import ProcessPath, ProcessStep

        mean = exact_mean(self.dist)
        steps = []
        running = np.zeros((self.dim, self.dim))
        for i, x in enumerate(xs):
            x_hat = self.x_hat0 if i == 0 else running / i
            steps.append(ProcessStep(x, mean, x_hat, self.gammas[i]))
            running = running + x
        return ProcessPath(tuple(steps), self.dim)

    def sample(self, rng: np.random.Generator):
        idx = draw_indices(rng, self.dist.probs, self.horizon)
        return self.path_from(self.dist.values[idx])

    def paths(self, cap: int = DEFAULT_ENUM_CAP):
        for prob, xs in enumerate_product_support(self.dist, self.horizon, cap):
            yield prob, self.path_from(xs)
