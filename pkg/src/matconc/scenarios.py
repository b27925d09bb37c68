"""One verification scenario per inequality, built from an :class:`ExperimentConfig`.

A scenario turns a config into a :class:`Plan`: the bound(s), an optional
exact oracle (enumeration over a finite support) and an optional Monte Carlo
event.  :func:`run_scenario` executes the plan in one of three modes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import bounds as B
from .config import ExperimentConfig
from .errors import ConfigError, MatconcError, OracleCapError
from .processes import (
    StoppingRule,
    eb_crossed,
    eb_crossing_event,
    eb_states,
    partial_sum_min_eig_event,
    randomized_event_fn,
    stopping_index,
    ville_stopped_event,
)
from .samplers import (
    DiscreteMatrixDist,
    IidEBSequence,
    SeedSpec,
    SubGaussianFactorDist,
    SuperUniformSpec,
    bounded_iid_dist,
    enumerate_independent_support,
    enumerate_product_support,
    exact_cgf,
    exact_mean,
    exact_mgf,
    log_trace_mgf,
    mcdiarmid_function_family,
    psd_super_or_submartingale,
    rademacher_sequence,
    sample_super_uniform,
    tight_example_dist,
)
from .symmat import (
    as_sym,
    congruence,
    loewner_geq,
    max_eig,
    min_eig,
    require_pd,
    sym_abs,
    sym_exp,
    sym_pow,
)
from .verify import EmpiricalEstimate, estimate_event_probability, exact_expectation

__all__ = ["Outcome", "Plan", "SCENARIOS", "run_scenario", "validate_config"]


@dataclass
class Plan:
    bounds: list
    anti_order_factor: float | None = None
    exact: Callable[[], float] | None = None
    exact_bounds: Callable[[], list] | None = None
    sample: Callable[[np.random.Generator], bool] | None = None
    notes: dict = field(default_factory=dict)


@dataclass
class Outcome:
    bounds: list
    exact_prob: float | None = None
    estimate: EmpiricalEstimate | None = None
    anti_order_reference: float | None = None
    notes: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Scenario:
    name: str
    distribution_kinds: tuple
    matrices: tuple
    params: tuple
    build: Callable[[ExperimentConfig], Plan]


# ---------------------------------------------------------------------------
# config accessors


def _param(cfg: ExperimentConfig, name: str, default=None):
    if name in cfg.params:
        value = cfg.params[name]
    elif default is not None:
        return default
    else:
        raise ConfigError(f"{cfg.scenario}: missing params.{name}")
    if isinstance(value, bool) or not isinstance(value, (int, float, str)):
        raise ConfigError(f"{cfg.scenario}: params.{name} must be a scalar, got {value!r}")
    return value


def _float(cfg, name, default=None) -> float:
    v = _param(cfg, name, default)
    if isinstance(v, str):
        raise ConfigError(f"{cfg.scenario}: params.{name} must be a number")
    return float(v)


def _int(cfg, name, default=None) -> int:
    v = _param(cfg, name, default)
    if not isinstance(v, int):
        raise ConfigError(f"{cfg.scenario}: params.{name} must be an integer")
    return v


def _matrix(cfg: ExperimentConfig, name: str, value=None) -> np.ndarray:
    raw = cfg.matrices.get(name) if value is None else value
    if raw is None:
        raise ConfigError(f"{cfg.scenario}: missing matrices.{name}")
    try:
        m = np.array(raw, dtype=np.float64)
    except (TypeError, ValueError):
        raise ConfigError(f"{cfg.scenario}: matrices.{name} is not a numeric matrix") from None
    if m.shape != (cfg.dim, cfg.dim):
        raise ConfigError(f"{cfg.scenario}: matrices.{name} has shape {m.shape}, expected ({cfg.dim}, {cfg.dim})")
    if not np.allclose(m, m.T, rtol=0, atol=1e-12 * max(1.0, float(np.max(np.abs(m))))):
        raise ConfigError(f"{cfg.scenario}: matrices.{name} is not symmetric")
    return as_sym(m)


def _matrix_list(cfg: ExperimentConfig, name: str) -> list[np.ndarray]:
    raw = cfg.matrices.get(name)
    if raw is None:
        raise ConfigError(f"{cfg.scenario}: missing matrices.{name}")
    if not isinstance(raw, list) or not raw:
        raise ConfigError(f"{cfg.scenario}: matrices.{name} must be a non-empty list of matrices")
    return [_matrix(cfg, f"{name}[{i}]", value=m) for i, m in enumerate(raw)]


def _atoms(cfg: ExperimentConfig, spec: dict, where: str = "distribution") -> DiscreteMatrixDist:
    if "probs" not in spec or "values" not in spec:
        raise ConfigError(f"{cfg.scenario}: {where} needs 'probs' and 'values'")
    values = [_matrix(cfg, f"{where}.values[{i}]", value=v) for i, v in enumerate(spec["values"])]
    try:
        return DiscreteMatrixDist(np.array(spec["probs"], dtype=np.float64), np.stack(values))
    except MatconcError as exc:
        raise ConfigError(f"{cfg.scenario}: {where}: {exc}") from None


def _dist(cfg: ExperimentConfig) -> DiscreteMatrixDist:
    kind = cfg.distribution.get("kind")
    if kind == "atoms":
        return _atoms(cfg, cfg.distribution)
    if kind == "tight_example":
        if "p" not in cfg.distribution:
            raise ConfigError(f"{cfg.scenario}: distribution.p missing")
        return tight_example_dist(_matrix(cfg, "A"), float(cfg.distribution["p"]))
    if kind == "bounded_iid":
        if "m" not in cfg.distribution:
            raise ConfigError(f"{cfg.scenario}: distribution.m missing")
        return bounded_iid_dist(cfg.dim, float(cfg.distribution["m"]))
    raise ConfigError(f"{cfg.scenario}: unsupported distribution.kind {kind!r}")


def _super_uniform(cfg: ExperimentConfig) -> SuperUniformSpec:
    kind = _param(cfg, "u_kind", "scalar")
    y = cfg.matrices.get("U_Y")
    return SuperUniformSpec(
        kind,
        cfg.dim,
        _float(cfg, "u_spread", 1.0),
        None if y is None else tuple(map(tuple, _matrix(cfg, "U_Y").tolist())),
    )


def _scalar_u(spec: SuperUniformSpec) -> bool:
    return spec.kind in {"scalar", "identity"}


def _clip01(x: float) -> float:
    return min(max(x, 0.0), 1.0)


def _p_scalar_u_below(level: float, spec: SuperUniformSpec) -> float:
    """``P(u <= level)`` for the scalar randomizer kinds (u uniform or u = 1)."""
    if spec.kind == "identity":
        return 1.0 if level >= 1.0 - 1e-9 else 0.0
    return _clip01(level)


# ---------------------------------------------------------------------------
# plans


def _plan_markov(cfg):
    dist, a = _dist(cfg), require_pd(_matrix(cfg, "A"))
    bound = B.markov_bound(exact_mean(dist), a)
    return Plan(
        [bound],
        anti_order_factor=cfg.dim,
        exact=lambda: exact_expectation(zip(dist.probs, dist.values), lambda x: float(loewner_geq(x, a))),
        sample=lambda rng: loewner_geq(dist.sample(rng), a),
    )


def _plan_chebyshev(cfg):
    dist, a = _dist(cfg), require_pd(_matrix(cfg, "A"))
    if ("p" in cfg.params) == ("q" in cfg.params):
        raise ConfigError("chebyshev: give exactly one of params.p or params.q")
    if "p" in cfg.params:
        bound = B.chebyshev_bound(dist, a, p=_float(cfg, "p"))
    else:
        bound = B.chebyshev_bound(dist, a, q=_float(cfg, "q"))
    mean = exact_mean(dist)

    def event(x):
        return loewner_geq(sym_abs(x - mean), a)

    return Plan(
        [bound],
        exact=lambda: exact_expectation(zip(dist.probs, dist.values), lambda x: float(event(x))),
        sample=lambda rng: event(dist.sample(rng)),
    )


def _plan_chernoff(cfg):
    dist, a, n = _dist(cfg), _matrix(cfg, "A"), _int(cfg, "n")
    if "T" in cfg.matrices:
        t1 = _matrix(cfg, "T")
        t2 = _matrix(cfg, "T2") if "T2" in cfg.matrices else t1
    else:
        t1 = t2 = math.sqrt(_float(cfg, "t_conj")) * np.eye(cfg.dim)
    bound = B.chernoff_bound(dist, a, t1, t2, n)

    def event(xs):
        return loewner_geq(sum(xs), n * a)

    return Plan(
        [bound],
        anti_order_factor=cfg.dim,
        exact=lambda: exact_expectation(enumerate_product_support(dist, n), lambda xs: float(event(xs))),
        sample=lambda rng: event([dist.sample(rng) for _ in range(n)]),
    )


def _plan_chernoff_kl(cfg):
    if cfg.distribution.get("kind") != "bounded_iid":
        raise ConfigError("chernoff_kl: distribution.kind must be 'bounded_iid'")
    dist = _dist(cfg)
    m = float(cfg.distribution["m"])
    a_level, n = _float(cfg, "a"), _int(cfg, "n")
    a = a_level * np.eye(cfg.dim)
    bound = B.chernoff_kl_bound(n, a_level, m)

    def event(xs):
        return loewner_geq(sum(xs), n * a)

    return Plan(
        [bound],
        anti_order_factor=cfg.dim,
        exact=lambda: exact_expectation(enumerate_product_support(dist, n), lambda xs: float(event(xs))),
        sample=lambda rng: event([dist.sample(rng) for _ in range(n)]),
    )


def _plan_laplace(cfg):
    dist, t = _dist(cfg), _float(cfg, "t")
    bound = B.laplace_bound(lambda th: log_trace_mgf(dist, th), t, cfg.dim, log_scale=True)

    def event(y):
        return partial_sum_min_eig_event([y], t)

    return Plan(
        [bound],
        anti_order_factor=cfg.dim,
        exact=lambda: exact_expectation(zip(dist.probs, dist.values), lambda y: float(event(y))),
        sample=lambda rng: event(dist.sample(rng)),
    )


def _components(cfg) -> list[DiscreteMatrixDist]:
    comps = cfg.distribution.get("components")
    if not isinstance(comps, list) or not comps:
        raise ConfigError(f"{cfg.scenario}: distribution.components must be a non-empty list")
    return [_atoms(cfg, c, f"distribution.components[{i}]") for i, c in enumerate(comps)]


def _plan_master(cfg):
    dists, t = _components(cfg), _float(cfg, "t")
    bound = B.master_bound(lambda th: sum(exact_cgf(dd, th) for dd in dists), t, cfg.dim)

    def event(xs):
        return partial_sum_min_eig_event(xs, t)

    return Plan(
        [bound],
        anti_order_factor=cfg.dim,
        exact=lambda: exact_expectation(enumerate_independent_support(dists), lambda xs: float(event(xs))),
        sample=lambda rng: event([dd.sample(rng) for dd in dists]),
    )


def _rademacher_plan(cfg, bound_list, anti_factor=None, mats_name="A_k"):
    seq = rademacher_sequence(_matrix_list(cfg, mats_name))
    t = _float(cfg, "t")

    def event(xs):
        return partial_sum_min_eig_event(xs, t)

    return seq, Plan(
        bound_list(seq, t),
        anti_order_factor=anti_factor,
        exact=lambda: exact_expectation(seq.support(), lambda xs: float(event(xs))),
        sample=lambda rng: partial_sum_min_eig_event([seq.sample_sum(rng)], t),
    )


def _plan_bernstein_bounded(cfg):
    def bound_list(seq, t):
        return list(B.bernstein_bounded_bound(seq.sigma_sq, seq.r_bound, t))

    return _rademacher_plan(cfg, bound_list)[1]


def _plan_bernstein_subexp(cfg):
    return _rademacher_plan(cfg, lambda seq, t: [B.bernstein_subexp_bound(seq.sigma_sq, seq.r_bound, t)])[1]


def _plan_azuma(cfg):
    return _rademacher_plan(cfg, lambda seq, t: [B.azuma_bound(seq.sigma_sq, t)], anti_factor=cfg.dim)[1]


def _plan_mcdiarmid(cfg):
    fam = mcdiarmid_function_family(_matrix_list(cfg, "B_k"))
    t = _float(cfg, "t")
    bound = B.azuma_bound(fam.sigma_sq, t, theorem_id="mcdiarmid")

    def event(z):
        return partial_sum_min_eig_event([fam.H(z) - fam.mean], t)

    return Plan(
        [bound],
        anti_order_factor=cfg.dim,
        exact=lambda: exact_expectation(fam.support(), lambda z: float(event(z))),
        sample=lambda rng: event(fam.sample_z(rng)),
    )


def _plan_hoeffding(cfg):
    fams = [SubGaussianFactorDist(b) for b in _matrix_list(cfg, "B_k")]
    n, t = len(fams), _float(cfg, "t")
    bound = B.hoeffding_bound([f.v for f in fams], n, t)

    def sample(rng):
        return partial_sum_min_eig_event([f.sample(rng) for f in fams], t, scale=1.0 / n)

    # the cited comparison bounds the operator norm, two-sided: factor 2d
    return Plan([bound], anti_order_factor=2 * cfg.dim, sample=sample)


def _process(cfg, kind):
    if cfg.distribution.get("kind") != "multiplicative":
        raise ConfigError(f"{cfg.scenario}: distribution.kind must be 'multiplicative'")
    for key in ("factors", "probs"):
        if key not in cfg.distribution:
            raise ConfigError(f"{cfg.scenario}: distribution.{key} missing")
    try:
        return psd_super_or_submartingale(
            _matrix(cfg, "B"), cfg.distribution["factors"], cfg.distribution["probs"], _int(cfg, "horizon"), kind
        )
    except MatconcError as exc:
        raise ConfigError(f"{cfg.scenario}: {exc}") from None


def _plan_doob(cfg):
    proc = _process(cfg, "sub")
    a = require_pd(_matrix(cfg, "A"))
    n = proc.n_max
    a_inv_half = sym_pow(a, -0.5)

    def hit(path):
        return any(loewner_geq(y, a) for y in path)

    def intermediate():
        # (1/d) tr(E[Y_N 1{hit}] A^{-1})
        value = exact_expectation(
            proc.paths(), lambda path: float(np.trace(congruence(a_inv_half, path[-1]))) if hit(path) else 0.0
        )
        return [B.BoundResult(max(value / cfg.dim, 0.0), "doob_indicator")]

    return Plan(
        [B.BoundResult(B.markov_bound(proc.mean_at(n), a).value, "doob")],
        anti_order_factor=cfg.dim,
        exact=lambda: exact_expectation(proc.paths(), lambda path: float(hit(path))),
        exact_bounds=intermediate,
        sample=lambda rng: hit(proc.sample(rng)),
    )


def _plan_ville(cfg):
    proc = _process(cfg, "super")
    a = require_pd(_matrix(cfg, "A"))

    def hit(path):
        return any(loewner_geq(y, a) for y in path)

    return Plan(
        [B.BoundResult(B.markov_bound(proc.b, a).value, "ville")],
        anti_order_factor=cfg.dim,
        exact=lambda: exact_expectation(proc.paths(), lambda path: float(hit(path))),
        sample=lambda rng: hit(proc.sample(rng)),
        notes={"horizon_cap": proc.n_max},
    )


def _eb_sequence(cfg) -> IidEBSequence:
    if cfg.distribution.get("kind") != "iid_eb":
        raise ConfigError(f"{cfg.scenario}: distribution.kind must be 'iid_eb'")
    dist = _atoms(cfg, cfg.distribution)
    x0 = _matrix(cfg, "X_hat0") if "X_hat0" in cfg.matrices else None
    try:
        return IidEBSequence(dist, (_float(cfg, "gamma"),), _int(cfg, "horizon"), x0)
    except MatconcError as exc:
        raise ConfigError(f"{cfg.scenario}: {exc}") from None


def _alpha(cfg) -> float:
    alpha = _float(cfg, "alpha")
    if not 0 < alpha < 1:
        raise ConfigError(f"{cfg.scenario}: params.alpha must lie in (0, 1)")
    return alpha


def _plan_eb(cfg):
    seq, alpha = _eb_sequence(cfg), _alpha(cfg)
    return Plan(
        [B.BoundResult(alpha, "eb")],
        exact=lambda: exact_expectation(seq.paths(), lambda path: float(eb_crossing_event(path, alpha))),
        sample=lambda rng: eb_crossing_event(seq.sample(rng), alpha),
    )


# --- randomized variants -----------------------------------------------------


def _plan_randomized_markov(cfg):
    dist, a, uspec = _dist(cfg), require_pd(_matrix(cfg, "A")), _super_uniform(cfg)
    a_inv_half = sym_pow(a, -0.5)

    def exact():
        if not _scalar_u(uspec):
            raise OracleCapError("exact oracle needs a scalar randomizer")
        return exact_expectation(
            zip(dist.probs, dist.values), lambda x: _p_scalar_u_below(min_eig(congruence(a_inv_half, x)), uspec)
        )

    event = randomized_event_fn(a, "markov")
    return Plan(
        [B.BoundResult(B.markov_bound(exact_mean(dist), a).value, "randomized_markov")],
        anti_order_factor=cfg.dim,
        exact=exact,
        sample=lambda rng: event(dist.sample(rng), sample_super_uniform(uspec, rng)),
    )


def _plan_randomized_chebyshev(cfg):
    dist, a, uspec = _dist(cfg), require_pd(_matrix(cfg, "A")), _super_uniform(cfg)
    q = _float(cfg, "q")
    bound = B.chebyshev_bound(dist, a, q=q)
    mean = exact_mean(dist)
    a_inv_half = sym_pow(a, -0.5)

    def exact():
        # threshold (A^{q/2} u A^{q/2})^{1/q} = u^{1/q} A for scalar u
        if not _scalar_u(uspec):
            raise OracleCapError("exact oracle needs a scalar randomizer")

        def prob(x):
            lam = max(min_eig(congruence(a_inv_half, sym_abs(x - mean))), 0.0)
            return _p_scalar_u_below(lam**q, uspec)

        return exact_expectation(zip(dist.probs, dist.values), prob)

    event = randomized_event_fn(a, "chebyshev_q", q=q, ex=mean)
    return Plan(
        [B.BoundResult(bound.value, "randomized_chebyshev", notes=bound.notes)],
        exact=exact,
        sample=lambda rng: event(dist.sample(rng), sample_super_uniform(uspec, rng)),
    )


def _plan_randomized_chernoff(cfg):
    dist, a, uspec = _dist(cfg), _matrix(cfg, "A"), _super_uniform(cfg)
    gamma = _float(cfg, "gamma")
    e_ga = sym_exp(gamma * a)
    bound = B.markov_bound(exact_mgf(dist, gamma), e_ga)
    neg_half = sym_exp(-0.5 * gamma * a)

    def exact():
        if not _scalar_u(uspec):
            raise OracleCapError("exact oracle needs a scalar randomizer")
        return exact_expectation(
            zip(dist.probs, dist.values),
            lambda x: _p_scalar_u_below(min_eig(congruence(neg_half, sym_exp(gamma * x))), uspec),
        )

    event = randomized_event_fn(a, "chernoff", gamma=gamma)
    return Plan(
        [B.BoundResult(bound.value, "randomized_chernoff")],
        exact=exact,
        sample=lambda rng: event(dist.sample(rng), sample_super_uniform(uspec, rng)),
    )


def _plan_randomized_chernoff_hoeffding(cfg):
    dist, uspec = _dist(cfg), _super_uniform(cfg)
    n, gamma, beta = _int(cfg, "n"), _float(cfg, "gamma"), _float(cfg, "beta")
    if not (gamma > 0 and beta > 0):
        raise ConfigError("randomized_chernoff_hoeffding: gamma and beta must be > 0")
    mean = exact_mean(dist)
    centered = dist.map(lambda v: v - mean)
    log_g = exact_cgf(centered, gamma / n)
    w = np.linalg.eigvalsh(n * log_g)
    value = float(np.sum(np.exp(w))) / (beta * cfg.dim)

    def xbar(xs):
        return sum(xs) / n

    def exact():
        if not _scalar_u(uspec):
            raise OracleCapError("exact oracle needs a scalar randomizer")
        return exact_expectation(
            enumerate_product_support(dist, n),
            lambda xs: _p_scalar_u_below(math.exp(gamma * min_eig(xbar(xs) - mean)) / beta, uspec),
        )

    event = randomized_event_fn(None, "hoeffding", gamma=gamma, beta=beta, ex=mean)
    return Plan(
        [B.BoundResult(value, "randomized_chernoff_hoeffding")],
        exact=exact,
        sample=lambda rng: event(xbar([dist.sample(rng) for _ in range(n)]), sample_super_uniform(uspec, rng)),
    )


def _plan_randomized_ville(cfg):
    proc = _process(cfg, "super")
    a, uspec = require_pd(_matrix(cfg, "A")), _super_uniform(cfg)
    a_inv_half = sym_pow(a, -0.5)
    rule = StoppingRule("first_hit", proc.n_max)

    def exact():
        if not _scalar_u(uspec):
            raise OracleCapError("exact oracle needs a scalar randomizer")

        def prob(path):
            y_tau = path[stopping_index(path, rule, a) - 1]
            return _p_scalar_u_below(min_eig(congruence(a_inv_half, y_tau)), uspec)

        return exact_expectation(proc.paths(), prob)

    def sample(rng):
        path = proc.sample(rng)
        return ville_stopped_event(path, rule, a, sample_super_uniform(uspec, rng))

    return Plan(
        [B.BoundResult(B.markov_bound(proc.b, a).value, "randomized_ville")],
        anti_order_factor=cfg.dim,
        exact=exact,
        sample=sample,
        notes={"stopping_rule": "first_hit", "horizon_cap": proc.n_max},
    )


def _plan_randomized_eb(cfg):
    seq, alpha, uspec = _eb_sequence(cfg), _alpha(cfg), _super_uniform(cfg)
    if not _scalar_u(uspec):
        raise ConfigError("randomized_eb: the randomizer must be a scalar (u_kind 'scalar' or 'identity')")

    def exact():
        def prob(path):
            states = eb_states(path)
            tau = next(
                (i for i, s in enumerate(states, 1) if eb_crossed(s, alpha)),
                len(states),
            )
            s = states[tau - 1]
            # event  <=>  u <= alpha * exp(lambda_min(z) - lambda_max(quad))
            log_level = math.log(alpha) + min_eig(s.z_sum) - max_eig(s.quad_sum)
            return _p_scalar_u_below(math.exp(min(log_level, 0.0)), uspec)

        return exact_expectation(seq.paths(), prob)

    def sample(rng):
        path = seq.sample(rng)
        u = float(sample_super_uniform(uspec, rng)[0, 0])
        return eb_crossing_event(path, alpha, randomizer_u=u)

    return Plan([B.BoundResult(alpha, "randomized_eb")], exact=exact, sample=sample)


SCENARIOS: dict[str, Scenario] = {
    s.name: s
    for s in [
        Scenario("markov", ("atoms", "tight_example"), ("A",), (), _plan_markov),
        Scenario("chebyshev", ("atoms", "tight_example"), ("A",), (), _plan_chebyshev),
        Scenario("chernoff", ("atoms", "bounded_iid", "tight_example"), ("A",), ("n",), _plan_chernoff),
        Scenario("chernoff_kl", ("bounded_iid",), (), ("a", "n"), _plan_chernoff_kl),
        Scenario("laplace", ("atoms",), (), ("t",), _plan_laplace),
        Scenario("master", ("independent",), (), ("t",), _plan_master),
        Scenario("bernstein_bounded", ("rademacher",), ("A_k",), ("t",), _plan_bernstein_bounded),
        Scenario("bernstein_subexp", ("rademacher",), ("A_k",), ("t",), _plan_bernstein_subexp),
        Scenario("azuma", ("rademacher",), ("A_k",), ("t",), _plan_azuma),
        Scenario("mcdiarmid", ("sign_function",), ("B_k",), ("t",), _plan_mcdiarmid),
        Scenario("hoeffding", ("gaussian_factor",), ("B_k",), ("t",), _plan_hoeffding),
        Scenario("doob", ("multiplicative",), ("A", "B"), ("horizon",), _plan_doob),
        Scenario("ville", ("multiplicative",), ("A", "B"), ("horizon",), _plan_ville),
        Scenario("eb", ("iid_eb",), (), ("gamma", "horizon", "alpha"), _plan_eb),
        Scenario("randomized_markov", ("atoms", "tight_example"), ("A",), (), _plan_randomized_markov),
        Scenario("randomized_chebyshev", ("atoms", "tight_example"), ("A",), ("q",), _plan_randomized_chebyshev),
        Scenario("randomized_chernoff", ("atoms", "bounded_iid", "tight_example"), ("A",), ("gamma",), _plan_randomized_chernoff),
        Scenario(
            "randomized_chernoff_hoeffding",
            ("atoms", "bounded_iid"),
            (),
            ("n", "gamma", "beta"),
            _plan_randomized_chernoff_hoeffding,
        ),
        Scenario("randomized_ville", ("multiplicative",), ("A", "B"), ("horizon",), _plan_randomized_ville),
        Scenario("randomized_eb", ("iid_eb",), (), ("gamma", "horizon", "alpha"), _plan_randomized_eb),
    ]
}

# stable per-scenario stream ids
STREAM_IDS = {name: i + 1 for i, name in enumerate(SCENARIOS)}


def validate_config(cfg: ExperimentConfig) -> Scenario:
    """Check scenario-required fields before any computation; returns the scenario."""
    cfg.validate_basic()
    if cfg.scenario not in SCENARIOS:
        raise ConfigError(f"unknown scenario {cfg.scenario!r}; choose from {sorted(SCENARIOS)}")
    sc = SCENARIOS[cfg.scenario]
    kind = cfg.distribution.get("kind")
    if kind not in sc.distribution_kinds:
        raise ConfigError(f"{sc.name}: distribution.kind must be one of {list(sc.distribution_kinds)}, got {kind!r}")
    for name in sc.matrices:
        if name not in cfg.matrices:
            raise ConfigError(f"{sc.name}: missing matrices.{name}")
    for name in sc.params:
        if name not in cfg.params:
            raise ConfigError(f"{sc.name}: missing params.{name}")
    return sc


MODES = ("bound", "enumerate", "verify")


def run_scenario(cfg: ExperimentConfig, mode: str = "verify", workers: int = 1) -> Outcome:
    """Evaluate bounds, then (by mode) the exact oracle and the Monte Carlo estimate.

    ``verify`` skips the exact oracle silently when the support exceeds the
    enumeration cap; ``enumerate`` treats that as an error.
    """
    if mode not in MODES:
        raise ConfigError(f"unknown mode {mode!r}")
    sc = validate_config(cfg)
    try:
        plan = sc.build(cfg)
    except ConfigError:
        raise
    except MatconcError as exc:
        raise type(exc)(f"{sc.name}: {exc}") from None
    out = Outcome(list(plan.bounds), notes=dict(plan.notes))
    if plan.anti_order_factor is not None:
        out.anti_order_reference = plan.anti_order_factor * plan.bounds[0].value
        out.notes["anti_order_factor"] = plan.anti_order_factor
    if mode in ("enumerate", "verify") and plan.exact is not None:
        try:
            out.exact_prob = plan.exact()
            if plan.exact_bounds is not None:
                out.bounds.extend(plan.exact_bounds())
        except OracleCapError as exc:
            if mode == "enumerate":
                raise OracleCapError(f"{sc.name}: {exc}") from None
            out.notes["exact_skipped"] = str(exc)
    elif mode == "enumerate":
        raise OracleCapError(f"{sc.name}: no exact oracle for this scenario")
    if mode == "verify" and cfg.trials > 0 and plan.sample is not None:
        seed = SeedSpec(cfg.effective_seed, STREAM_IDS[sc.name])
        out.estimate = estimate_event_probability(plan.sample, cfg.trials, seed, cfg.ci_level, workers)
    return out
