import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from matconc.bounds import g_eb
from matconc.errors import DomainError, InvalidInputError
from matconc.processes import (
    ProcessPath,
    ProcessStep,
    StoppingRule,
    doob_maximal_event,
    eb_crossing_event,
    eb_states,
    eb_trace,
    generic_supermartingale_L,
    partial_sum_min_eig_event,
    randomized_event,
    stopping_index,
    ville_stopped_event,
)
from matconc.samplers import psd_super_or_submartingale, rademacher_sequence
from matconc.symmat import congruence, loewner_geq, min_eig, sym_abs, sym_exp, sym_sqrt
from matconc.verify import conditional_supermartingale_check
from matgen import rand_pd, rand_psd, rand_sym


def step(x, m=0.0, x_hat=0.0, gamma=0.5, d=1):
    eye = np.eye(d)
    as_m = lambda v: v * eye if np.isscalar(v) else np.asarray(v, dtype=float)  # noqa: E731
    return ProcessStep(as_m(x), as_m(m), as_m(x_hat), gamma)


class TestProcessPath:
    def test_rejects_gamma_outside_unit_interval(self):
        for g in (0.0, 1.0, 1.5):
            with pytest.raises(DomainError):
                ProcessPath((step(0.5, gamma=g),), 1)

    def test_rejects_large_negative_residual(self):
        with pytest.raises(DomainError):
            ProcessPath((step(0.0, x_hat=1.0 + 1e-6),), 1)
        ProcessPath((step(0.0, x_hat=1.0),), 1)

    def test_rejects_dimension_mismatch(self):
        with pytest.raises(InvalidInputError):
            ProcessPath((step(0.5, d=2),), 1)

    def test_prefix_and_records(self):
        path = ProcessPath((step(0.5), step(0.2)), 1)
        assert len(path.prefix(1)) == 1
        rec = path.to_records()
        assert rec[1]["x"] == [[0.2]] and rec[0]["gamma"] == 0.5


class TestEBTrace:
    def test_empty(self):
        out = eb_trace(ProcessPath((), 3))
        assert len(out) == 1 and out[0][0] == 3.0

    def test_all_equal_gives_d(self):
        x = np.diag([0.3, 0.7])
        path = ProcessPath((ProcessStep(x, x, x, 0.4),), 2)
        assert eb_trace(path)[1][0] == pytest.approx(2.0)

    def test_scalar_step(self):
        path = ProcessPath((step(1.0, m=0.0, x_hat=0.0, gamma=0.5),), 1)
        value = eb_trace(path)[1][0]
        assert value == pytest.approx(math.exp(0.5 - g_eb(0.5)))
        assert value == pytest.approx(1.35914, abs=5e-6)

    def test_missing_prediction(self):
        path = ProcessPath((ProcessStep(np.eye(1), np.eye(1)),), 1)
        with pytest.raises(InvalidInputError):
            eb_trace(path)

    def test_states_match_trace(self):
        path = ProcessPath((step(0.9, 0.5, 0.5, 0.3), step(0.1, 0.5, 0.9, 0.6)), 1)
        states = eb_states(path)
        assert [s.n for s in states] == [1, 2]
        assert states[-1].gamma_sum == pytest.approx(0.9)
        assert eb_trace(path)[2][1].z_sum == pytest.approx(states[1].z_sum)


class TestGenericL:
    def test_all_zero(self):
        z = [np.zeros((3, 3))]
        assert generic_supermartingale_L(z, z, z) == pytest.approx(3.0)

    def test_scalar_reduction(self):
        z = [np.array([[0.4]]), np.array([[-0.1]])]
        c = [np.array([[0.2]]), np.array([[0.1]])]
        cp = [np.array([[0.05]]), np.array([[0.0]])]
        assert generic_supermartingale_L(z, c, cp) == pytest.approx(math.exp(0.3 - 0.35))

    def test_diag_example(self):
        zero = [np.zeros((2, 2))]
        value = generic_supermartingale_L([np.diag([1.0, -1.0])], zero, zero)
        assert value == pytest.approx(math.e + 1 / math.e)
        assert value == pytest.approx(3.08616, abs=5e-6)
        assert value >= 2 * math.exp(-1)

    def test_lower_bound_random(self):
        rng = np.random.default_rng(0)
        for _ in range(300):
            d, n = int(rng.integers(1, 5)), int(rng.integers(1, 4))
            zs = [rand_sym(rng, d) for _ in range(n)]
            cs = [rand_psd(rng, d) for _ in range(n)]
            cps = [rand_psd(rng, d) for _ in range(n)]
            generic_supermartingale_L(zs, cs, cps)

    def test_length_mismatch(self):
        with pytest.raises(InvalidInputError):
            generic_supermartingale_L([np.eye(2)], [], [])


class TestMaximalEvents:
    def test_doob_examples(self):
        a = rand_pd(np.random.default_rng(1), 2)
        assert doob_maximal_event([a], a, 1)
        assert not doob_maximal_event([np.zeros((2, 2))] * 3, a, 3)
        with pytest.raises(InvalidInputError):
            doob_maximal_event([a], a, 2)

    def test_doob_two_step_scalar_enumeration(self):
        proc = psd_super_or_submartingale(np.eye(1), [0.8, 1.6], [0.5, 0.5], 2, "sub")
        a = np.array([[1.2]])
        exact = sum(p for p, path in proc.paths() if doob_maximal_event(path, a, 2))
        # leaves: 1.6 (hit), 0.8 -> 0.64 or 1.28 (hit)
        assert exact == pytest.approx(0.5 + 0.25)

    @given(st.lists(st.floats(0, 3), min_size=2, max_size=8), st.floats(0.1, 3))
    def test_monotone_in_horizon(self, scalars, level):
        path = [np.array([[s]]) for s in scalars]
        a = np.array([[level]])
        for n in range(1, len(path)):
            if doob_maximal_event(path, a, n):
                assert doob_maximal_event(path, a, n + 1)

    def test_stopping_rules(self):
        a = np.eye(1)
        path = [np.array([[v]]) for v in (0.2, 1.3, 0.1, 2.0)]
        assert stopping_index(path, StoppingRule("first_hit", 4), a) == 2
        assert stopping_index(path, StoppingRule("fixed", 3), a) == 3
        never = [np.zeros((1, 1))] * 4
        assert stopping_index(never, StoppingRule("first_hit", 4), a) == 4
        rule = StoppingRule("predicate", 4, predicate=lambda n, y: n >= 3)
        assert stopping_index(path, rule) == 3
        with pytest.raises(InvalidInputError):
            StoppingRule("sometime")
        with pytest.raises(InvalidInputError):
            StoppingRule("predicate", 3)

    def test_ville(self):
        a = rand_pd(np.random.default_rng(2), 2)
        assert ville_stopped_event([a] * 3, StoppingRule("first_hit", 3), a)
        path = [0.5 * a, 1.2 * a, 0.1 * a]
        rule = StoppingRule("first_hit", 3)
        assert ville_stopped_event(path, rule, a, np.eye(2)) == ville_stopped_event(path, rule, a)
        # U = 1.1 I makes the threshold 1.1 A; Y_tau = 1.2 A still clears it
        assert ville_stopped_event(path, rule, a, 1.1 * np.eye(2))
        assert not ville_stopped_event(path, rule, a, 1.3 * np.eye(2))

    def test_ville_scalar_geometric_enumeration(self):
        proc = psd_super_or_submartingale(np.eye(1), [0.5, 1.4], [0.5, 0.5], 3, "super")
        a = np.array([[1.5]])
        rule = StoppingRule("first_hit", 3)
        exact = sum(p for p, path in proc.paths() if ville_stopped_event(path, rule, a))
        # hits only via 1.4 then 1.96: probability 1/4
        assert exact == pytest.approx(0.25)


class TestRandomizedEvents:
    def test_identity_u_matches_deterministic(self):
        rng = np.random.default_rng(3)
        for _ in range(1000):
            d = int(rng.integers(1, 4))
            x, a, ex = rand_sym(rng, d, 2.0), rand_pd(rng, d), rand_sym(rng, d)
            eye = np.eye(d)
            assert randomized_event(x, a, eye, "markov") == loewner_geq(x, a)
            q = float(rng.choice([0.5, 1.0]))
            assert randomized_event(x, a, eye, "chebyshev_q", q=q, ex=ex) == loewner_geq(sym_abs(x - ex), a)
            g = float(rng.uniform(0.2, 1.5))
            assert randomized_event(x, a, eye, "chernoff", gamma=g) == loewner_geq(sym_exp(g * x), sym_exp(g * a))
            b = float(rng.uniform(0.5, 2.0))
            margin = g * min_eig(x - ex) - math.log(b)
            if abs(margin) > 1e-6:
                assert randomized_event(x, None, eye, "hoeffding", gamma=g, beta=b, ex=ex) == (margin > 0)

    def test_scalar_markov(self):
        assert randomized_event(np.array([[4.0]]), np.eye(1), np.array([[2.0]]), "markov")
        assert not randomized_event(np.array([[4.0]]), np.eye(1), np.array([[5.0]]), "markov")

    def test_chebyshev_q_one_collapse(self):
        rng = np.random.default_rng(4)
        for _ in range(100):
            x, a, u = rand_sym(rng, 2), rand_pd(rng, 2), rand_psd(rng, 2)
            ex = np.zeros((2, 2))
            direct = loewner_geq(sym_abs(x), congruence(sym_sqrt(a), u))
            assert randomized_event(x, a, u, "chebyshev_q", q=1.0, ex=ex) == direct

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            randomized_event(np.eye(2), np.eye(2), np.eye(2), "chebyshev_q", q=1.5, ex=np.zeros((2, 2)))
        with pytest.raises(DomainError):
            randomized_event(np.eye(2), None, np.eye(2), "hoeffding", beta=0.0, ex=np.zeros((2, 2)))
        with pytest.raises(DomainError):
            randomized_event(np.eye(2), np.eye(2), -np.eye(2), "markov")
        with pytest.raises(InvalidInputError):
            randomized_event(np.eye(2), np.eye(2), np.eye(2), "bogus")


class TestPartialSum:
    def test_examples(self):
        assert partial_sum_min_eig_event([np.zeros((2, 2))], 0.0)
        assert not partial_sum_min_eig_event([np.diag([2.0, 0.5])], 1.0)
        assert partial_sum_min_eig_event([np.diag([2.0, 0.5])] * 2, 1.0)
        assert partial_sum_min_eig_event([np.diag([2.0, 0.5])] * 2, 2.0, scale=0.5) is False
        with pytest.raises(InvalidInputError):
            partial_sum_min_eig_event([], 0.0)

    def test_binomial_tail(self):
        seq = rademacher_sequence([np.eye(1)] * 6)
        prob = sum(p for p, xs in seq.support() if partial_sum_min_eig_event(xs, 2.0))
        expected = sum(math.comb(6, k) for k in range(6 + 1) if 2 * k - 6 >= 2) / 64
        assert prob == pytest.approx(expected)


class TestEBSupermartingale:
    def test_scalar_symmetric_increments(self):
        # X_hat = M = 0 and X = +-1: drift is cosh(g) exp(-g(g)) - 1 times L, which is <= 0
        def branches(history):
            return [(0.5, 1.0), (0.5, -1.0)]

        def L(history):
            z = sum(0.5 * x for x in history)
            quad = sum(g_eb(0.5) * x * x for x in history)
            return math.exp(z - quad)

        assert conditional_supermartingale_check(branches, 2, L) <= 0.0

    def test_random_matrix_trees(self):
        rng = np.random.default_rng(5)
        for _ in range(40):
            atoms = [rand_psd(rng, 2) for _ in range(2)]
            atoms = [a / max(1.0, np.linalg.norm(a, 2)) for a in atoms]
            probs = rng.dirichlet(np.ones(2))
            mean = probs[0] * atoms[0] + probs[1] * atoms[1]
            gamma = float(rng.choice([0.2, 0.5]))

            def branches(history, atoms=atoms, probs=probs):
                return [(probs[0], 0), (probs[1], 1)]

            def L(history, atoms=atoms, mean=mean, gamma=gamma):
                steps = []
                for i, k in enumerate(history):
                    prev = [atoms[j] for j in history[:i]]
                    x_hat = sum(prev) / i if i else 0.5 * np.eye(2)
                    steps.append(ProcessStep(atoms[k], mean, x_hat, gamma))
                return eb_trace(ProcessPath(tuple(steps), 2))[-1][0]

            assert conditional_supermartingale_check(branches, 3, L) <= 1e-9

    def test_crossing_event_randomizer(self):
        path = ProcessPath(tuple(step(1.0, 0.0, 0.0, 0.5) for _ in range(3)), 1)
        # large u makes the event harder, small u easier
        assert eb_crossing_event(path, 0.5, randomizer_u=1e-6)
        assert not eb_crossing_event(path, 0.5, randomizer_u=1e6)
        assert eb_crossing_event(path, 0.5) == eb_crossing_event(path, 0.5, randomizer_u=1.0)
