"""Randomized checks of the matrix facts the proofs lean on.

Each property draws ``instances`` random cases and reports the worst signed
residual; a residual above the tolerance (relative, 1e-8 by default) is a
violation.  ``chebyshev_remark_traces`` is informational and always passes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bounds import chebyshev_bound
from .samplers import DiscreteMatrixDist, SeedSpec, enumerate_independent_support, exact_cgf, exact_mean
from .symmat import (
    as_sym,
    min_eig,
    similarity_power_trace,
    sym_abs,
    sym_exp,
    sym_pow,
)

__all__ = ["PROPERTIES", "PropertyReport", "property_run"]


@dataclass
class PropertyReport:
    name: str
    instances: int
    violations: int
    worst_residual: float
    tolerance: float
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def to_record(self) -> dict:
        return {
            "name": self.name,
            "instances": self.instances,
            "violations": self.violations,
            "worst_residual": self.worst_residual,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "details": self.details,
        }


def _rand_sym(rng, d, scale=1.0):
    g = rng.standard_normal((d, d))
    return scale * (g + g.T) / 2


def _rand_psd(rng, d, rank=None):
    g = rng.standard_normal((d, rank or d))
    return as_sym(g @ g.T / d)


def _golden_thompson(rng):
    d = int(rng.integers(1, 7))
    a, b = _rand_sym(rng, d), _rand_sym(rng, d)
    lhs = np.trace(sym_exp(a + b))
    rhs = np.trace(sym_exp(a) @ sym_exp(b))
    return (lhs - rhs) / max(1.0, abs(rhs))


def _min_eig_exp_identity(rng):
    d = int(rng.integers(1, 9))
    y = _rand_sym(rng, d)
    theta = float(rng.uniform(0.01, 1.0))
    ey = sym_exp(theta * y)
    target = np.exp(theta * min_eig(y))
    identity_err = abs(min_eig(ey) - target) / target
    # second claim: e^{theta lambda_min} <= tr(e^{theta Y}) / d
    trace_gap = (target - np.trace(ey) / d) / target
    return max(identity_err, trace_gap)


def _comparable_pair(rng, d):
    a = _rand_sym(rng, d)
    return a, a + _rand_psd(rng, d, rank=int(rng.integers(1, d + 1)))


def _trace_monotone(rng):
    d = int(rng.integers(1, 7))
    a, b = _comparable_pair(rng, d)
    ta, tb = np.trace(sym_exp(a)), np.trace(sym_exp(b))
    return (ta - tb) / max(1.0, tb)


def _operator_monotone_q(rng):
    d = int(rng.integers(1, 7))
    a = _rand_psd(rng, d)
    b = a + _rand_psd(rng, d, rank=int(rng.integers(1, d + 1)))
    q = float(rng.uniform(0.05, 1.0))
    bq, aq = sym_pow(b, q), sym_pow(a, q)
    return -min_eig(bq - aq) / max(1.0, np.max(np.abs(np.linalg.eigvalsh(bq))))


def _random_dist(rng, d, n_atoms):
    probs = rng.dirichlet(np.ones(n_atoms))
    return DiscreteMatrixDist(probs, np.stack([_rand_sym(rng, d) for _ in range(n_atoms)]))


def _cgf_subadditivity(rng):
    d = int(rng.integers(1, 4))
    dists = [_random_dist(rng, d, int(rng.integers(1, 4))) for _ in range(int(rng.integers(1, 4)))]
    worst = -np.inf
    for theta in (-2.0, -1.0, -0.5, 0.5, 1.0, 2.0):
        lhs = sum(p * np.trace(sym_exp(theta * sum(xs))) for p, xs in enumerate_independent_support(dists))
        rhs = np.trace(sym_exp(sum(exact_cgf(dist, theta) for dist in dists)))
        worst = max(worst, (lhs - rhs) / max(1.0, rhs))
    return worst


def _similarity_trace_consistency(rng):
    d = int(rng.integers(1, 7))
    b = _rand_psd(rng, d)
    a = _rand_psd(rng, d) + 0.1 * np.eye(d)
    p = int(rng.integers(1, 5))
    direct = np.trace(np.linalg.matrix_power(b @ np.linalg.inv(a), p))
    via = similarity_power_trace(b, a, p)
    return abs(direct - via) / max(1.0, abs(direct))


PROPERTIES = {
    "golden_thompson": _golden_thompson,
    "min_eig_exp_identity": _min_eig_exp_identity,
    "trace_monotone": _trace_monotone,
    "operator_monotone_q": _operator_monotone_q,
    "cgf_subadditivity": _cgf_subadditivity,
    "similarity_trace_consistency": _similarity_trace_consistency,
}

# stream ids keep each property's draws independent of the others
_STREAMS = {name: i + 1 for i, name in enumerate(sorted(PROPERTIES))}


def remark_example() -> tuple[DiscreteMatrixDist, np.ndarray]:
    """Two diagonal atoms and the diagonal ``A`` used to discuss the two Chebyshev traces."""
    dist = DiscreteMatrixDist(
        np.array([0.8, 0.2]),
        np.stack([np.diag([-2.0, 1.0]), np.diag([1.0, -10.0])]),
    )
    return dist, np.diag([1.0, 0.5])


def chebyshev_remark_traces(dist: DiscreteMatrixDist, a) -> dict:
    """``tr E[(|X-EX| A^{-1})^2]`` and ``tr(E[(X-EX)^2] A^{-2})`` by separate routes."""
    d = dist.dim
    via_similarity = chebyshev_bound(dist, a, p=2).value * d
    mean = exact_mean(dist)
    a_inv = np.linalg.inv(as_sym(a))
    product = sum(p * np.trace((sym_abs(v - mean) @ a_inv) @ (sym_abs(v - mean) @ a_inv)) for p, v in zip(dist.probs, dist.values))
    second = sum(p * (v - mean) @ (v - mean) for p, v in zip(dist.probs, dist.values))
    variance_form = float(np.trace(second @ a_inv @ a_inv))
    return {
        "power_form_similarity": float(via_similarity),
        "power_form_product": float(product),
        "variance_form": variance_form,
        "equal": bool(abs(product - variance_form) <= 1e-9 * max(1.0, abs(variance_form))),
    }


def property_run(name: str, instances: int = 1000, seed: int = 0, tolerance: float = 1e-8) -> PropertyReport:
    if name == "chebyshev_remark_traces":
        dist, a = remark_example()
        traces = chebyshev_remark_traces(dist, a)
        return PropertyReport(name, 1, 0, 0.0, tolerance, traces)
    if name not in PROPERTIES:
        raise KeyError(f"unknown property {name!r}; choose from {sorted(PROPERTIES) + ['chebyshev_remark_traces']}")
    check = PROPERTIES[name]
    spec = SeedSpec(seed, _STREAMS[name])
    residuals = np.array([check(spec.substream(k)) for k in range(instances)])
    violations = int(np.sum(residuals > tolerance))
    return PropertyReport(name, instances, violations, float(residuals.max()), tolerance)


ALL_PROPERTIES = sorted(PROPERTIES) + ["chebyshev_remark_traces"]
