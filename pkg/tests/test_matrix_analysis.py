import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import all_subsets, random_params
from nsdpp.errors import CapabilityError, ConfigurationError
from nsdpp.kernel import assemble_L
from nsdpp.matrix_analysis import (check_sign_pattern, classify, cofactor_det, decompose_sym_skew,
                                   is_irreducible, principal_minors)


class TestDecompose:
    def test_symmetric(self):
        S, A = decompose_sym_skew(np.array([[1.0, 2.0], [2.0, 3.0]]))
        np.testing.assert_array_equal(A, 0.0)

    def test_pure_skew(self):
        X = np.array([[0.0, 1.0], [-1.0, 0.0]])
        S, A = decompose_sym_skew(X)
        np.testing.assert_array_equal(S, 0.0)
        np.testing.assert_array_equal(A, X)

    def test_random_reconstruction(self, rng):
        X = rng.standard_normal((6, 6))
        S, A = decompose_sym_skew(X)
        np.testing.assert_allclose(S + A, X, rtol=0, atol=4e-16)
        np.testing.assert_array_equal(A.T, -A)
        np.testing.assert_array_equal(S.T, S)

    def test_non_square(self):
        with pytest.raises(ConfigurationError):
            decompose_sym_skew(np.ones((2, 3)))


class TestClassify:
    def test_identity(self):
        r = classify(np.eye(3))
        assert r.is_P and r.is_P0 and r.symmetric_part_psd and r.witness_subset is None

    def test_pure_skew(self):
        minors = principal_minors(np.array([[0.0, 1.0], [-1.0, 0.0]]))
        assert minors == {(0,): 0.0, (1,): 0.0, (0, 1): 1.0}
        r = classify(np.array([[0.0, 1.0], [-1.0, 0.0]]))
        assert r.is_P0 and not r.is_P

    def test_witness(self):
        r = classify(np.array([[1.0, 2.0], [2.0, 1.0]]))
        assert not r.is_P0
        assert r.witness_subset == (0, 1)
        assert r.min_principal_minor == pytest.approx(-3.0)

    def test_diag_plus_skew_is_p0(self, rng):
        for _ in range(20):
            A = rng.standard_normal((6, 6))
            r = classify(np.diag(rng.uniform(0, 2, 6)) + A - A.T)
            assert r.is_P0

    def test_report_invariants(self, rng):
        for _ in range(200):
            X = rng.standard_normal((4, 4))
            r = classify(X)
            assert not r.is_P or r.is_P0
            assert not r.symmetric_part_psd or r.is_P0
            assert (r.witness_subset is None) == r.is_P0
            if r.witness_subset is not None:
                J = list(r.witness_subset)
                assert np.linalg.det(X[np.ix_(J, J)]) == pytest.approx(r.min_principal_minor)

    def test_size_cap(self):
        with pytest.raises(CapabilityError):
            classify(np.eye(17))

    def test_assembled_kernels_are_p0(self, rng):
        for _ in range(200):
            M = int(rng.integers(1, 9))
            L = assemble_L(random_params(rng, M, int(rng.integers(1, M + 1)),
                                        int(rng.integers(0, M + 1)))).entries
            assert classify(L).is_P0


class TestCofactorOracle:
    def test_matches_lu_minors(self, rng):
        for M in range(1, 6):
            X = rng.standard_normal((M, M))
            minors = principal_minors(X)
            for J in all_subsets(M)[1:]:
                assert minors[J] == pytest.approx(cofactor_det(X[np.ix_(J, J)]), abs=1e-12)

    def test_known(self):
        assert cofactor_det(np.array([[2.0, 0, 1], [1, 3, 2], [1, 1, 2]])) == pytest.approx(6.0)
        assert cofactor_det(np.zeros((0, 0))) == 1.0


class TestSignPattern:
    def test_symmetric(self, rng):
        X = rng.standard_normal((4, 4))
        eps = check_sign_pattern(X + X.T)
        off = ~np.eye(4, dtype=bool)
        assert np.all(eps[off] == 1)

    def test_diag_plus_skew(self, rng):
        A = rng.standard_normal((4, 4))
        eps = check_sign_pattern(np.eye(4) + A - A.T)
        assert np.all(eps[~np.eye(4, dtype=bool)] == -1)

    def test_not_signed(self):
        assert check_sign_pattern(np.array([[1.0, 2.0], [3.0, 1.0]])) is None

    def test_zero_pairs_unconstrained(self):
        eps = check_sign_pattern(np.array([[1.0, 0.0, 2.0], [0.0, 1.0, 0.0], [-2.0, 0.0, 1.0]]))
        np.testing.assert_array_equal(eps, [[0, 0, -1], [0, 0, 0], [-1, 0, 0]])


class TestIrreducible:
    def test_block_diagonal(self):
        L = np.zeros((4, 4))
        L[:2, :2] = 1.0
        L[2:, 2:] = 1.0
        assert not is_irreducible(L)

    def test_triangular_not_strongly_connected(self):
        assert not is_irreducible(np.array([[1.0, 1.0], [0.0, 1.0]]))

    def test_tridiagonal(self):
        assert is_irreducible(np.array([[1.0, 0.5, 0.0], [0.5, 1.0, 0.5], [0.0, 0.5, 1.0]]))

    def test_permuted_blocks(self, rng):
        L = np.zeros((5, 5))
        L[np.ix_([0, 3], [0, 3])] = 1.0
        L[np.ix_([1, 2, 4], [1, 2, 4])] = 1.0
        assert not is_irreducible(L)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_psd_symmetric_part_implies_p0(M, seed):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((M, M))
    A = rng.standard_normal((M, M))
    assert classify(X @ X.T + A - A.T).is_P0
