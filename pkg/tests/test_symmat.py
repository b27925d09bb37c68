import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from matconc.errors import DomainError, InvalidInputError, MatrixOverflowError
from matconc.symmat import (
    PsdTolerance,
    apply_spectral_function,
    as_sym,
    general_exp,
    is_pd,
    is_psd,
    loewner_geq,
    max_eig,
    min_eig,
    op_norm,
    require_pd,
    similarity_power_trace,
    spectral_decompose,
    sym_abs,
    sym_exp,
    sym_log,
    sym_pow,
    sym_sqrt,
    trace,
)
from matgen import rand_pd, rand_psd, rand_sym


def sym_matrices(max_d=6, bound=10.0):
    return st.integers(1, max_d).flatmap(
        lambda d: arrays(np.float64, (d, d), elements=st.floats(-bound, bound, allow_nan=False)).map(
            lambda m: (m + m.T) / 2
        )
    )


class TestSpectralDecompose:
    def test_identity(self):
        spec = spectral_decompose(np.eye(3))
        np.testing.assert_allclose(spec.eigenvalues, [1, 1, 1])
        np.testing.assert_allclose(spec.basis @ spec.basis.T, np.eye(3), atol=1e-12)

    def test_diagonal(self):
        spec = spectral_decompose(np.diag([-2.0, 5.0]))
        np.testing.assert_allclose(spec.eigenvalues, [-2, 5])
        np.testing.assert_allclose(np.abs(spec.basis), np.eye(2), atol=1e-12)

    def test_two_by_two_hand_solution(self):
        # characteristic polynomial (2 - x)^2 - 1 = 0
        spec = spectral_decompose([[2.0, 1.0], [1.0, 2.0]])
        np.testing.assert_allclose(spec.eigenvalues, [1.0, 3.0], atol=1e-12)
        v_low, v_high = spec.basis[:, 0], spec.basis[:, 1]
        assert abs(abs(v_low @ np.array([1, -1]) / math.sqrt(2)) - 1) < 1e-12
        assert abs(abs(v_high @ np.array([1, 1]) / math.sqrt(2)) - 1) < 1e-12

    def test_non_finite_rejected(self):
        with pytest.raises(InvalidInputError):
            spectral_decompose([[np.nan, 0.0], [0.0, 1.0]])
        with pytest.raises(InvalidInputError):
            as_sym(np.array([[np.inf, 0.0], [0.0, 1.0]]))

    def test_non_square_rejected(self):
        with pytest.raises(InvalidInputError):
            as_sym(np.zeros((2, 3)))
        with pytest.raises(InvalidInputError):
            as_sym(np.zeros((0, 0)))

    def test_scalar_promoted(self):
        assert as_sym(3.0).shape == (1, 1)

    def test_reconstruction_random(self):
        rng = np.random.default_rng(1)
        for _ in range(1000):
            d = int(rng.integers(1, 9))
            m = rand_sym(rng, d, scale=2.0)
            err = np.linalg.norm(spectral_decompose(m).reconstruct() - m, 2)
            assert err <= 1e-9 * max(1.0, op_norm(m))

    def test_deterministic(self):
        m = rand_sym(np.random.default_rng(3), 5)
        a, b = spectral_decompose(m), spectral_decompose(m.copy())
        assert np.array_equal(a.eigenvalues, b.eigenvalues)
        assert np.array_equal(a.basis, b.basis)

    @given(sym_matrices())
    def test_eigenvalues_sorted_and_basis_orthogonal(self, m):
        spec = spectral_decompose(m)
        assert np.all(np.diff(spec.eigenvalues) >= 0)
        d = m.shape[0]
        np.testing.assert_allclose(spec.basis.T @ spec.basis, np.eye(d), atol=1e-10)


class TestSpectralFunctions:
    def test_abs_diagonal(self):
        np.testing.assert_allclose(sym_abs(np.diag([-3.0, 2.0])), np.diag([3.0, 2.0]))

    def test_exp_zero(self):
        np.testing.assert_allclose(sym_exp(np.zeros((3, 3))), np.eye(3))

    def test_log_exp_inverse(self):
        m = np.array([[2.0, 1.0], [1.0, 2.0]])
        np.testing.assert_allclose(sym_log(sym_exp(m)), m, atol=1e-9)

    def test_exp_log_inversion_random_pd(self):
        rng = np.random.default_rng(2)
        for _ in range(200):
            a = rand_pd(rng, int(rng.integers(1, 9)))
            back = sym_exp(sym_log(a))
            assert np.linalg.norm(back - a, 2) <= 1e-8 * np.linalg.norm(a, 2)

    def test_log_of_singular_names_eigenvalue(self):
        with pytest.raises(DomainError, match="smallest eigenvalue"):
            sym_log(np.diag([1.0, 0.0]))

    def test_fractional_power_of_indefinite(self):
        with pytest.raises(DomainError, match="-1"):
            sym_pow(np.diag([1.0, -1.0]), 0.5)

    def test_negative_power_needs_pd(self):
        with pytest.raises(DomainError):
            sym_pow(np.diag([1.0, 0.0]), -0.5)

    def test_integer_power_of_indefinite_allowed(self):
        np.testing.assert_allclose(sym_pow(np.diag([2.0, -3.0]), 2), np.diag([4.0, 9.0]))

    def test_sqrt_clips_roundoff(self):
        np.testing.assert_allclose(sym_sqrt(np.diag([4.0, -1e-14])), np.diag([2.0, 0.0]))

    def test_exp_overflow(self):
        with pytest.raises(MatrixOverflowError):
            sym_exp(np.diag([1000.0, 0.0]))

    def test_unknown_function(self):
        with pytest.raises(InvalidInputError):
            apply_spectral_function(np.eye(2), "sin")

    @given(sym_matrices(bound=3.0))
    def test_result_symmetric(self, m):
        for f in ("exp", "abs"):
            out = apply_spectral_function(m, f)
            assert np.array_equal(out, out.T)

    @given(sym_matrices(bound=3.0))
    def test_sqrt_squares_back(self, m):
        p = m @ m
        r = sym_sqrt(p)
        np.testing.assert_allclose(r @ r, p, atol=1e-8 * max(1.0, np.abs(p).max()))


class TestGeneralExp:
    def test_zero(self):
        np.testing.assert_allclose(general_exp(np.zeros((2, 2))), np.eye(2))

    def test_diagonal(self):
        np.testing.assert_allclose(general_exp(np.diag([1.0, 2.0])), np.diag([math.e, math.e**2]))

    def test_nilpotent_series_is_exact(self):
        n = np.array([[0.0, 1.0], [0.0, 0.0]])
        np.testing.assert_allclose(general_exp(n), np.eye(2) + n, atol=1e-15)

    def test_matches_spectral_exp_on_symmetric(self):
        rng = np.random.default_rng(4)
        for _ in range(100):
            m = rand_sym(rng, int(rng.integers(1, 7)))
            a, b = general_exp(m), sym_exp(m)
            assert np.linalg.norm(a - b, 2) <= 1e-9 * np.linalg.norm(b, 2)

    def test_overflow(self):
        with pytest.raises(MatrixOverflowError):
            general_exp(np.array([[800.0, 1.0], [0.0, 800.0]]))


class TestOrder:
    def test_examples(self):
        assert loewner_geq(np.eye(2), np.zeros((2, 2)))
        assert not loewner_geq(np.diag([1.0, -1.0]), np.zeros((2, 2)))
        assert loewner_geq(np.diag([2.0, 3.0]), np.diag([1.0, 1.0]))

    def test_dimension_mismatch(self):
        with pytest.raises(InvalidInputError):
            loewner_geq(np.eye(2), np.eye(3))

    def test_tolerance_is_relative(self):
        big = np.diag([1e6, -1e-4])
        assert is_psd(big)
        assert not is_psd(big, PsdTolerance(1e-12))
        assert not is_psd(np.diag([1.0, -1e-8]))

    def test_reflexive(self):
        m = rand_sym(np.random.default_rng(5), 4)
        assert loewner_geq(m, m)

    @given(sym_matrices(max_d=4, bound=5.0))
    def test_adding_psd_goes_up(self, m):
        rng = np.random.default_rng(abs(hash(m.tobytes())) % 2**32)
        p = rand_psd(rng, m.shape[0])
        assert loewner_geq(m + p, m)

    def test_pd_checks(self):
        assert is_pd(np.eye(2))
        assert not is_pd(np.diag([1.0, 0.0]))
        with pytest.raises(DomainError):
            require_pd(np.diag([1.0, 0.0]))

    def test_negative_tolerance_rejected(self):
        with pytest.raises(InvalidInputError):
            PsdTolerance(-1.0)


class TestScalars:
    def test_examples(self):
        assert op_norm(np.diag([-3.0, 2.0])) == 3.0
        assert min_eig(np.eye(2)) == 1.0
        assert trace(np.diag([1.0, 2.0, 3.0])) == 6.0
        assert max_eig(np.diag([-1.0, 4.0])) == 4.0

    def test_op_norm_non_symmetric(self):
        m = np.array([[0.0, 2.0], [0.0, 0.0]])
        assert op_norm(m) == pytest.approx(2.0)


class TestSimilarityPowerTrace:
    def test_identity_similarity(self):
        a = rand_pd(np.random.default_rng(6), 3)
        assert similarity_power_trace(a, a, 2.5) == pytest.approx(3.0)

    def test_commuting_diagonal(self):
        assert similarity_power_trace(np.diag([4.0, 9.0]), np.eye(2), 2) == pytest.approx(97.0)

    def test_explicit_product(self):
        b = np.array([[2.0, 1.0], [1.0, 2.0]])
        a = np.diag([1.0, 4.0])
        a_inv = np.linalg.inv(a)
        expected = np.trace(b @ a_inv @ b @ a_inv)
        assert similarity_power_trace(b, a, 2) == pytest.approx(expected, rel=1e-12)

    def test_integer_powers_match_repeated_product(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            d = int(rng.integers(1, 6))
            b, a = rand_psd(rng, d), rand_pd(rng, d)
            p = int(rng.integers(1, 5))
            direct = np.trace(np.linalg.matrix_power(b @ np.linalg.inv(a), p))
            assert similarity_power_trace(b, a, p) == pytest.approx(direct, rel=1e-8)

    def test_rejects_p_below_one(self):
        with pytest.raises(DomainError):
            similarity_power_trace(np.eye(2), np.eye(2), 0.5)

    def test_rejects_singular_a(self):
        with pytest.raises(DomainError):
            similarity_power_trace(np.eye(2), np.diag([1.0, 0.0]), 2)


class TestMinEigExp:
    def test_identity_and_trace_bound(self):
        rng = np.random.default_rng(8)
        for _ in range(500):
            d = int(rng.integers(1, 9))
            y = rand_sym(rng, d)
            theta = float(rng.uniform(0.01, 1.0))
            e = sym_exp(theta * y)
            target = math.exp(theta * min_eig(y))
            assert abs(min_eig(e) - target) <= 1e-9 * target
            assert target <= np.trace(e) / d * (1 + 1e-12)
