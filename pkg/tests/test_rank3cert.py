"""Bracket evaluators, membership certification, factorization, polygons."""

from fractions import Fraction

import numpy as np
import pytest

from nnmix.exactla import Matrix, matrix_rank
from nnmix.rank3cert import (DomainError, GeometryError, NotInModelError,
                             all_witnesses, bracket3, meet_join,
                             membership_from_factors, nested_polygons,
                             nnrank3_membership, nonneg_rank3_factorize,
                             six_three, _cross, _det3)

from conftest import (NICE_P, random_rational_matrix, rect_rows,
                      uab_normalized)


def _rand_frac(rng, lo=-9, hi=9, den=7):
    return Fraction(int(rng.integers(lo, hi + 1)), int(rng.integers(1, den + 1)))


def _rand_config(rng, m=4, n=4):
    A = [[_rand_frac(rng) for _ in range(3)] for _ in range(m)]
    B = [[_rand_frac(rng) for _ in range(n)] for _ in range(3)]
    return A, B


def twotwo_expansion(ai, aj, bi, bk):
    """The bilinear bracket written out as its twelve monomials."""
    a1, a2, a3 = ai
    c1, c2, c3 = aj
    p1, p2, p3 = bi
    q1, q2, q3 = bk
    return (a1 * c2 * p1 * q2 - a1 * c2 * q1 * p2
            + a1 * c3 * p1 * q3 - a1 * c3 * q1 * p3
            - a2 * c1 * p1 * q2 + a2 * c1 * q1 * p2
            + a2 * c3 * p2 * q3 - a2 * c3 * q2 * p3
            - a3 * c1 * p1 * q3 + a3 * c1 * q1 * p3
            - a3 * c2 * p2 * q3 + a3 * c2 * q2 * p3)


class TestBracket3:
    def test_identity_rows(self):
        assert bracket3(Matrix.identity(3), 0, 1, 2) == 1

    def test_duplicate_row_content_vanishes(self):
        A = Matrix.exact([[1, 2, 3], [4, 5, 6], [1, 2, 3]])
        assert bracket3(A, 0, 1, 2) == 0

    def test_concurrent_lines_vanish(self):
        A = Matrix.exact([[1, 0, 2], [0, 1, 3], [1, 1, 5]])  # row2 = row0 + row1
        assert bracket3(A, 0, 1, 2) == 0

    def test_repeated_indices_rejected(self):
        with pytest.raises(IndexError):
            bracket3(Matrix.identity(3), 0, 0, 1)


class TestMeetJoin:
    def test_equals_twelve_term_expansion(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            A, B = _rand_config(rng)
            i, j = 0, 2
            ip, kp = 1, 3
            cols = [tuple(row[c] for row in B) for c in range(4)]
            expected = twotwo_expansion(tuple(A[i]), tuple(A[j]), cols[ip], cols[kp])
            assert meet_join(A, B, i, j, ip, kp) == expected

    def test_repeated_point_vanishes(self):
        rng = np.random.default_rng(12)
        A, B = _rand_config(rng)
        for row in B:
            row[3] = row[1]
        assert meet_join(A, B, 0, 1, 1, 3) == 0

    def test_parallel_lines_vanish(self):
        rng = np.random.default_rng(13)
        A, B = _rand_config(rng)
        A[1] = list(A[0])
        assert meet_join(A, B, 0, 1, 0, 2) == 0


class TestSixThree:
    def test_point_on_constructed_chord_vanishes(self):
        rng = np.random.default_rng(14)
        for _ in range(10):
            A, B = _rand_config(rng)
            rows = [tuple(r) for r in A]
            cols = [tuple(row[c] for row in B) for c in range(4)]
            v = _cross(rows[0], rows[1])
            p1 = _cross(_cross(v, cols[0]), rows[2])
            p2 = _cross(_cross(v, cols[1]), rows[3])
            lam = Fraction(2, 5)
            chord_point = tuple(lam * x + (1 - lam) * y for x, y in zip(p1, p2))
            for row, value in zip(B, chord_point):
                row[3] = value
            assert six_three(A, B, 0, 1, 2, 3, 0, 1, 3) == 0

    def test_expansion_has_330_monomials(self, symbolic_oracle):
        sympy, expr, symbols = symbolic_oracle
        poly = sympy.Poly(expr, *symbols)
        assert len(poly.terms()) == 330

    def test_matches_symbolic_expansion_at_random_points(self, symbolic_oracle):
        sympy, expr, symbols = symbolic_oracle
        rng = np.random.default_rng(15)
        for _ in range(50):
            A, B = _rand_config(rng)
            values = [x for row in A for x in row] + [x for row in B for x in row]
            subs = {s: sympy.Rational(v.numerator, v.denominator)
                    for s, v in zip(symbols, values)}
            expected = expr.xreplace(subs)
            got = six_three(A, B, 0, 1, 2, 3, 0, 1, 3)
            assert sympy.Rational(got.numerator, got.denominator) == expected


class TestMembership:
    def test_gap_example_is_out(self):
        assert nnrank3_membership(uab_normalized(1, 0)).verdict == "out"

    def test_threshold_family(self):
        assert nnrank3_membership(uab_normalized(100, 41)).verdict == "out"
        dec = nnrank3_membership(uab_normalized(100, 42))
        assert dec.verdict == "in" and dec.witness is not None

    def test_rectangle_family(self):
        inside = Matrix.exact(rect_rows(Fraction(1, 4), Fraction(1, 4)))
        outside = Matrix.exact(rect_rows(Fraction(1, 2), Fraction(1, 2)))
        assert nnrank3_membership(inside).verdict == "in"
        assert nnrank3_membership(outside).verdict == "out"

    def test_rank_one_positive(self):
        P = Matrix.exact([[i * j for j in (1, 2, 3, 4)] for i in (1, 2, 3, 5)])
        dec = nnrank3_membership(P)
        assert dec.verdict == "rank_deficient_in" and dec.rank == 1

    def test_rank_four_is_out_with_certificate(self):
        dec = nnrank3_membership(Matrix.identity(4))
        assert dec.verdict == "out" and dec.rank == 4

    def test_negative_entries_rejected(self):
        with pytest.raises(DomainError):
            nnrank3_membership(Matrix.exact([[1, -1], [0, 1]]))

    def test_zero_rows_and_columns_do_not_change_verdict(self):
        base = uab_normalized(1, 0)
        padded = [[0] * 6] + [[0] + list(r) + [0] for r in base.entries]
        assert nnrank3_membership(Matrix.exact(padded)).verdict == "out"
        base_in = uab_normalized(100, 42)
        padded = [[0] + list(r) + [0] for r in base_in.entries]
        dec = nnrank3_membership(Matrix.exact(padded))
        assert dec.verdict == "in"
        assert dec.witness.iprime != 0  # indices refer to the padded matrix

    def test_thin_matrices_are_members(self):
        rng = np.random.default_rng(16)
        P = random_rational_matrix(rng, 3, 6)
        while matrix_rank(P) < 3:
            P = random_rational_matrix(rng, 3, 6)
        dec = nnrank3_membership(P)
        assert dec.verdict == "in"

    def test_random_products_are_members(self):
        rng = np.random.default_rng(17)
        for _ in range(50):
            A = Matrix.exact([[int(rng.integers(0, 10)) for _ in range(3)]
                              for _ in range(4)])
            B = Matrix.exact([[int(rng.integers(0, 10)) for _ in range(5)]
                              for _ in range(3)])
            assert bool(nnrank3_membership(A @ B))

    def test_factorization_invariance(self):
        rng = np.random.default_rng(18)
        for _ in range(20):
            A = random_rational_matrix(rng, 4, 3, num_range=6)
            B = random_rational_matrix(rng, 3, 4, num_range=6)
            P = A @ B
            if matrix_rank(P) != 3 or not P.is_nonnegative():
                continue
            verdict = nnrank3_membership(P).verdict
            while True:
                G = random_rational_matrix(rng, 3, 3, num_range=4)
                from nnmix.exactla import determinant
                if determinant(G) != 0:
                    break
            Ginv = _inv(G)
            assert membership_from_factors(A @ G, Ginv @ B).verdict == verdict

    def test_transpose_and_scale_invariance(self):
        cases = [uab_normalized(1, 0), uab_normalized(100, 42),
                 Matrix.exact(rect_rows(Fraction(1, 4), Fraction(1, 4))),
                 Matrix.exact(NICE_P)]
        for P in cases:
            v = nnrank3_membership(P).verdict
            assert nnrank3_membership(P.transpose()).verdict == v
            assert nnrank3_membership(P.scale(Fraction(7, 3))).verdict == v

    def test_float_backend_flags_marginal_near_zero(self):
        P = uab_normalized(100, 42).as_float()
        dec = nnrank3_membership(P)
        assert dec.verdict == "in"
        assert dec.backend == "float"

    def test_numpy_float_arrays_route_to_float_backend(self):
        P = uab_normalized(100, 42).to_numpy()
        dec = nnrank3_membership(P)
        assert dec.backend == "float"
        assert dec.verdict == "in"

    def test_integer_lists_route_to_exact_backend(self):
        dec = nnrank3_membership([[1, 1], [1, 1]])
        assert dec.backend == "exact"
        assert dec.verdict == "rank_deficient_in"


def _inv(G: Matrix) -> Matrix:
    rows = [list(r) for r in G.entries]
    det = _det3(*[tuple(r) for r in rows])
    cof = [[(rows[(r + 1) % 3][(c + 1) % 3] * rows[(r + 2) % 3][(c + 2) % 3]
             - rows[(r + 1) % 3][(c + 2) % 3] * rows[(r + 2) % 3][(c + 1) % 3])
            for c in range(3)] for r in range(3)]
    return Matrix.exact([[cof[c][r] / det for c in range(3)] for r in range(3)])


class TestFactorize:
    def test_round_trip_on_members(self):
        cases = [uab_normalized(100, 42),
                 Matrix.exact(NICE_P).scale(Fraction(1, 116)),
                 Matrix.exact(rect_rows(Fraction(1, 3), Fraction(1, 2))).scale(Fraction(1, 16))]
        for P in cases:
            A, B = nonneg_rank3_factorize(P)
            assert A.is_nonnegative() and B.is_nonnegative()
            assert A @ B == P

    def test_low_rank_inputs(self):
        rank1 = Matrix.exact([[2, 4], [1, 2], [3, 6]])
        A, B = nonneg_rank3_factorize(rank1)
        assert A @ B == rank1 and A.is_nonnegative() and B.is_nonnegative()
        rank2 = Matrix.exact([[1, 0, 1, 2], [0, 1, 1, 1], [1, 1, 2, 3], [2, 1, 3, 5]])
        A, B = nonneg_rank3_factorize(rank2)
        assert A @ B == rank2 and A.is_nonnegative() and B.is_nonnegative()

    def test_zero_rows_columns_reinserted(self):
        P = Matrix.exact([[1, 0, 2], [0, 0, 0], [2, 0, 4]])
        A, B = nonneg_rank3_factorize(P)
        assert A @ B == P

    def test_zero_matrix(self):
        P = Matrix.zeros(3, 3)
        A, B = nonneg_rank3_factorize(P)
        assert A @ B == P

    def test_refuses_non_members(self):
        with pytest.raises(NotInModelError):
            nonneg_rank3_factorize(uab_normalized(1, 0))
        with pytest.raises(NotInModelError):
            nonneg_rank3_factorize(Matrix.identity(4))

    def test_refuses_float_backend(self):
        with pytest.raises(DomainError):
            nonneg_rank3_factorize(uab_normalized(100, 42).as_float())

    def test_random_soundness_loop(self):
        rng = np.random.default_rng(19)
        for _ in range(25):
            A0 = Matrix.exact([[int(rng.integers(0, 8)) for _ in range(3)]
                               for _ in range(4)])
            B0 = Matrix.exact([[int(rng.integers(0, 8)) for _ in range(4)]
                               for _ in range(3)])
            P = A0 @ B0
            A, B = nonneg_rank3_factorize(P)
            assert A @ B == P
            assert A.is_nonnegative() and B.is_nonnegative()


class TestNestedPolygons:
    def test_rectangle_family_gives_square_and_rectangle(self):
        P = Matrix.exact(rect_rows(Fraction(1, 4), Fraction(1, 4)))
        np_ = nested_polygons(P)
        ambient = {tuple(v) for v in np_.outer_ambient}
        half = Fraction(1, 2)
        assert ambient == {(half, half, 0, 0), (0, half, half, 0),
                           (0, 0, half, half), (half, 0, 0, half)}
        assert len(np_.inner) == 4

    def test_inner_polygon_equal_to_outer_for_vertex_columns(self):
        half = Fraction(1, 2)
        cols = [(half, half, 0, 0), (0, half, half, 0),
                (0, 0, half, half), (half, 0, 0, half)]
        P = Matrix.exact([[cols[j][i] for j in range(4)] for i in range(4)])
        np_ = nested_polygons(P)
        assert set(np_.inner) == set(np_.outer)

    def test_inner_contained_in_outer(self):
        rng = np.random.default_rng(20)
        count = 0
        while count < 10:
            A = random_rational_matrix(rng, 4, 3, num_range=5)
            B = random_rational_matrix(rng, 3, 5, num_range=5)
            P = A @ B
            if matrix_rank(P) != 3 or any(all(x == 0 for x in P.col(j))
                                          for j in range(P.cols)):
                continue
            count += 1
            np_ = nested_polygons(P)
            hull = np_.outer
            # each inner point must be inside the outer cycle (cross products
            # against every directed edge share a sign)
            for q in np_.inner:
                for t in range(len(hull)):
                    p0, p1 = hull[t], hull[(t + 1) % len(hull)]
                    cr = ((p1[0] - p0[0]) * (q[1] - p0[1])
                          - (p1[1] - p0[1]) * (q[0] - p0[0]))
                    assert cr >= 0

    def test_rank_requirement(self):
        with pytest.raises(GeometryError):
            nested_polygons(Matrix.exact([[1, 2], [2, 4]]))

    def test_zero_column_rejected(self):
        with pytest.raises(GeometryError):
            nested_polygons(Matrix.exact([[1, 0, 0], [0, 0, 1], [1, 0, 2]]))


def test_verdict_invariant_under_positive_diagonal_scaling():
    """Scaling rows and columns by positive rationals preserves nonnegative
    rank, so scrambled threshold-family matrices must keep their verdicts."""
    rng = np.random.default_rng(123)
    for _ in range(50):
        b = int(rng.integers(0, 100))
        want = b * b + 200 * b - 10000 >= 0
        rows = [[100, 100, b, b], [100, b, 100, b],
                [b, 100, b, 100], [b, b, 100, 100]]
        d1 = [Fraction(int(rng.integers(1, 50)), int(rng.integers(1, 10)))
              for _ in range(4)]
        d2 = [Fraction(int(rng.integers(1, 50)), int(rng.integers(1, 10)))
              for _ in range(4)]
        P = Matrix.exact([[d1[i] * rows[i][j] * d2[j] for j in range(4)]
                          for i in range(4)])
        assert bool(nnrank3_membership(P)) == want, b


def test_degenerate_inputs_do_not_crash():
    """Tie-heavy and duplicated-structure matrices exercise the zero-sign
    paths; verdicts must stay coherent with exact factorization."""
    rng = np.random.default_rng(321)
    for _ in range(60):
        vals = [Fraction(int(rng.integers(0, 3))) for _ in range(6)]
        m = int(rng.integers(3, 6))
        n = int(rng.integers(3, 6))
        P = Matrix.exact([[vals[int(rng.integers(0, 6))] for _ in range(n)]
                          for _ in range(m)])
        if not any(x != 0 for row in P.entries for x in row):
            continue
        dec = nnrank3_membership(P)
        if dec.verdict in ("in", "rank_deficient_in"):
            A, B = nonneg_rank3_factorize(P)
            assert A @ B == P
        else:
            assert dec.rank > 3 or min(P.rows, P.cols) >= 4


def test_all_witnesses_reports_contacts_on_planted_products():
    P = Matrix.exact(NICE_P)
    dec, records = all_witnesses(P)
    assert dec.verdict == "in"
    assert records and all(rec.touches for rec in records)


def test_decision_serialization():
    dec = nnrank3_membership(uab_normalized(100, 42))
    payload = dec.as_dict()
    assert payload["schema"] == "1"
    assert payload["verdict"] == "in"
    assert set(payload["witness"]) == {"i", "j", "iprime", "jprime", "swapped"}
