import random
from fractions import Fraction

import pytest
import sympy
from hypothesis import given, settings, strategies as st

from mwcoh.arith import (
    INFINITY, QQ, Echelon, Matrix, PrecisionExhausted, Qp, matrix_rank,
    rational_valuation, solve_linear, valuation,
)

K = Qp(5, 10)


def test_valuation_examples():
    assert valuation(K(50)) == 2
    assert valuation(K(0)) == INFINITY
    assert valuation(K(3)) == 0
    assert rational_valuation(Fraction(3, 25), 5) == -2


def test_zero_at_precision_is_falsy():
    assert not K(5 ** 10)
    assert K(5 ** 9)


def test_balanced_and_rational_display():
    assert str(K(Fraction(1, 2))) == "1/2"
    assert str(K(-7)) == "-7"
    assert str(K(Fraction(3, 25))) == "3@v-2"
    assert K(Fraction(-2, 3)).as_rational() == Fraction(-2, 3)


def test_precision_tracking_through_division():
    a = K(5)
    b = K(1) / a
    assert b.val == -1
    assert (b * a) == K(1)
    c = K(25) / K(5)
    assert c == K(5)
    assert c.prec <= 10


def test_solve_identity():
    sol = solve_linear(Matrix.identity(2), [1, 2])
    assert sol.solution == [1, 2]
    assert sol.kernel == []


def test_kernel_of_row():
    sol = solve_linear(Matrix([[1, 1]]), [0])
    assert len(sol.kernel) == 1
    k = sol.kernel[0]
    assert k[0] == -k[1] and k[0] != 0


def test_inconsistent_system():
    sol = solve_linear(Matrix([[1, 1], [1, 1]]), [0, 1])
    assert sol.solution is None


def test_random_square_solve_by_substitution():
    rng = random.Random(7)
    for _ in range(10):
        A = [[rng.randint(-5, 5) for _ in range(4)] for _ in range(4)]
        b = [rng.randint(-5, 5) for _ in range(4)]
        sol = solve_linear(Matrix(A), b)
        if sol.solution is None:
            assert sympy.Matrix(A).rank() < 4
            continue
        for i in range(4):
            assert sum(Fraction(A[i][j]) * sol.solution[j] for j in range(4)) == b[i]


def test_padic_solve_reports_loss():
    A = Matrix([[5, 0], [0, 1]], K)
    sol = solve_linear(A, [K(1), K(2)])
    assert sol.solution[0] * K(5) == K(1)
    assert sol.precision_loss >= 1


def test_pivot_beyond_remaining_precision_raises():
    L = Qp(5, 3)
    ech = Echelon()
    ech.loss = 2  # as if earlier pivots had consumed two digits
    with pytest.raises(PrecisionExhausted):
        ech.add({0: L(25)})


small = st.integers(min_value=-50, max_value=50)


@given(st.lists(st.lists(small, min_size=4, max_size=4), min_size=3, max_size=5))
@settings(max_examples=60, deadline=None)
def test_rank_matches_sympy(rows):
    assert matrix_rank(Matrix(rows)) == sympy.Matrix(rows).rank()


@given(st.lists(st.lists(small, min_size=3, max_size=3), min_size=2, max_size=4))
@settings(max_examples=60, deadline=None)
def test_kernel_vectors_are_annihilated(rows):
    A = Matrix(rows)
    sol = solve_linear(A)
    assert len(sol.kernel) == 3 - sympy.Matrix(rows).rank()
    for k in sol.kernel:
        for row in rows:
            assert sum(Fraction(a) * b for a, b in zip(row, k)) == 0


fracs = st.fractions(min_value=-100, max_value=100, max_denominator=50).filter(lambda q: q.denominator % 5)


@given(fracs, fracs, fracs)
@settings(max_examples=100, deadline=None)
def test_padic_ring_axioms(a, b, c):
    x, y, z = K(a), K(b), K(c)
    assert (x + y) + z == x + (y + z)
    assert x * (y + z) == x * y + x * z
    assert x * y == y * x
    assert (x - y) + y == x


@given(fracs, fracs)
@settings(max_examples=100, deadline=None)
def test_padic_matches_rational_arithmetic(a, b):
    assert K(a) * K(b) == K(a * b)
    assert K(a) + K(b) == K(a + b)
    if b:
        assert K(a) / K(b) == K(a / b)


def test_rationals_are_plain_fractions():
    assert QQ(Fraction(1, 3)) + QQ(2) == Fraction(7, 3)
    assert QQ.valuation(QQ(0), 5) == INFINITY
