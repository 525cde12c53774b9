"""Exact/float linear algebra: rank, determinant, RREF factorization, I/O."""

import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nnmix.exactla import (DimensionError, Matrix, RankExcessError, determinant,
                           format_matrix, matrix_rank, parse_matrix,
                           rank_factorize, rref)

from conftest import CURVE_BASE, random_rational_matrix, uab_rows


def minor_rank(M: Matrix) -> int:
    """Brute-force rank oracle: the largest k with a nonzero k-by-k minor."""
    m, n = M.shape
    best = 0
    for k in range(1, min(m, n) + 1):
        found = False
        for rows in itertools.combinations(range(m), k):
            for cols in itertools.combinations(range(n), k):
                sub = Matrix.exact([[M.entries[i][j] for j in cols] for i in rows])
                if determinant(sub) != 0:
                    found = True
                    break
            if found:
                break
        if found:
            best = k
    return best


class TestRank:
    def test_all_ones_is_rank_one(self):
        assert matrix_rank(Matrix.exact([[1] * 4] * 4)) == 1

    def test_identity(self):
        assert matrix_rank(Matrix.identity(3)) == 3

    def test_symmetric_zero_one_pattern_is_rank_three(self):
        M = Matrix.exact(uab_rows(1, 0))
        assert matrix_rank(M) == 3
        assert minor_rank(M) == 3

    def test_minor_oracle_agrees_on_random_matrices(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            M = random_rational_matrix(rng, 4, 5)
            assert matrix_rank(M) == minor_rank(M)

    def test_invariant_under_permutation_and_transpose(self):
        rng = np.random.default_rng(6)
        for _ in range(10):
            M = random_rational_matrix(rng, 4, 4)
            r = matrix_rank(M)
            perm = rng.permutation(4)
            MP = Matrix.exact([[M.entries[i][j] for j in perm] for i in perm])
            assert matrix_rank(MP) == r
            assert matrix_rank(M.transpose()) == r

    def test_float_backend_svd_tolerance(self):
        # a numerically rank-1 matrix with 1e-12 noise
        base = np.outer([1.0, 2.0, 3.0], [4.0, 5.0, 6.0])
        noisy = base + 1e-12 * np.arange(9).reshape(3, 3)
        assert matrix_rank(Matrix.from_floats(noisy.tolist())) == 1
        assert matrix_rank(Matrix.from_floats(noisy.tolist()), tol=1e-15) == 2

    def test_empty_matrix_rejected(self):
        with pytest.raises(DimensionError):
            Matrix.exact([])


class TestDeterminant:
    def test_curve_base_matrix_is_singular(self):
        assert determinant(Matrix.exact(CURVE_BASE)) == 0

    def test_identity(self):
        assert determinant(Matrix.identity(4)) == 1

    def test_repeated_row(self):
        assert determinant(Matrix.exact([[1, 2], [1, 2]])) == 0

    def test_multiplicativity(self):
        rng = np.random.default_rng(7)
        for _ in range(10):
            A = random_rational_matrix(rng, 3, 3)
            B = random_rational_matrix(rng, 3, 3)
            assert determinant(A @ B) == determinant(A) * determinant(B)

    def test_non_square_rejected(self):
        with pytest.raises(DimensionError):
            determinant(Matrix.exact([[1, 2, 3], [4, 5, 6]]))


class TestRankFactorize:
    def test_rank_one_product(self):
        P = Matrix.exact([[2 * c for c in (1, 2, 3, 4)],
                          [3 * c for c in (1, 2, 3, 4)],
                          [5 * c for c in (1, 2, 3, 4)],
                          [7 * c for c in (1, 2, 3, 4)]])
        A, B = rank_factorize(P, 3)
        assert A @ B == P
        nonzero_cols = [k for k in range(3) if any(A.entries[i][k] != 0 for i in range(4))]
        assert len(nonzero_cols) == 1

    def test_exact_reconstruction(self):
        P = Matrix.exact(uab_rows(1, 0))
        A, B = rank_factorize(P, 3)
        assert A.shape == (4, 3) and B.shape == (3, 4)
        assert A @ B == P

    def test_identity_selects_pivot_columns(self):
        I3 = Matrix.identity(3)
        A, B = rank_factorize(I3, 3)
        assert A @ B == I3

    def test_rank_excess_error(self):
        with pytest.raises(RankExcessError):
            rank_factorize(Matrix.identity(4), 3)

    @given(st.integers(0, 2**31 - 1))
    @settings(max_examples=25, deadline=None)
    def test_reconstruction_for_random_low_rank_products(self, seed):
        rng = np.random.default_rng(seed)
        r = int(rng.integers(1, 4))
        A0 = random_rational_matrix(rng, 5, r)
        B0 = random_rational_matrix(rng, r, 4)
        P = A0 @ B0
        A, B = rank_factorize(P, 3)
        assert A @ B == P

    def test_float_reconstruction_close(self):
        rng = np.random.default_rng(8)
        P = np.asarray(rng.uniform(size=(4, 3)) @ rng.uniform(size=(3, 5)))
        A, B = rank_factorize(Matrix.from_floats(P.tolist()), 3)
        err = np.max(np.abs(A.to_numpy() @ B.to_numpy() - P))
        assert err < 1e-10 * np.max(np.abs(P))


class TestTextFormat:
    def test_exact_round_trip(self):
        M = Matrix.exact([[Fraction(1, 3), 2], [Fraction(-5, 7), 0]])
        assert parse_matrix(format_matrix(M)) == M

    def test_float_round_trip_is_bit_identical(self):
        M = Matrix.from_floats([[0.1, 1e-17], [3.5, -2.25]])
        again = parse_matrix(format_matrix(M))
        assert again.backend == "float"
        assert all(x == y for r1, r2 in zip(M.entries, again.entries)
                   for x, y in zip(r1, r2))

    def test_mixed_tokens_promote_file_to_float(self):
        M = parse_matrix("1,2.5\n3,4\n")
        assert M.backend == "float"

    def test_parse_error_reports_line(self):
        with pytest.raises(ValueError, match="line 2"):
            parse_matrix("1,2\nx,4\n")

    def test_ragged_rows_rejected(self):
        with pytest.raises(ValueError, match="ragged"):
            parse_matrix("1,2\n3\n")


def test_rref_pivots_deterministic():
    M = Matrix.exact([[0, 1, 2], [0, 2, 4], [1, 0, 1]])
    R, pivots = rref(M)
    assert pivots == (0, 1)
    assert R.entries[0][0] == 1 and R.entries[1][1] == 1


def test_promotion_round_trip():
    M = Matrix.from_floats([[0.5, 0.25], [0.125, 1.0]])
    E = M.as_exact()
    assert E.backend == "exact"
    assert E.entries[0][0] == Fraction(1, 2)
    assert np.allclose(E.as_float().to_numpy(), M.to_numpy())


def test_nonfinite_entries_rejected():
    with pytest.raises(ValueError):
        Matrix.from_floats([[float("nan")]])
    with pytest.raises(ValueError):
        Matrix.from_floats([[float("inf")]])
