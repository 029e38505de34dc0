import random
from fractions import Fraction
from math import comb, factorial

import pytest
from hypothesis import given, settings, strategies as st

from mwcoh.arith import PrecisionExhausted, Qp
from mwcoh.dagalg import AffineSpace, Torus, normal_form
from mwcoh.diffcalc import (
    Connection, OrderExceedsJet, compose_operators, connection_from_stratification, constant_connection,
    cocycle_check, curvature, divided_operator, kummer_connection, operator_action, taylor_stratification,
    trivial_connection,
)

T = Torus(1)
A = AffineSpace(1)
A2 = AffineSpace(2)


def fbinom(a, k):
    """Generalized binomial ``a(a-1)..(a-k+1)/k!`` for rational ``a``."""
    out = Fraction(1)
    for i in range(k):
        out *= Fraction(a) - i
    return out / factorial(k)


def non_integrable():
    return Connection(A2, 2, [[[0, 1], [0, 0]], [[0, 0], [1, 0]]])


@pytest.mark.parametrize("a", [Fraction(1, 2), Fraction(-1, 3), 1, 2])
def test_kummer_taylor_coefficients_are_binomials(a):
    eps = taylor_stratification(kummer_connection(T, a), 5)
    # nabla^k(e) = a(a-1)..(a-k+1) x^-k e
    for k in range(6):
        expected = normal_form({(-k,): fbinom(a, k)}, T, check=False)
        assert eps.coeff((k,))[0][0] == expected


def test_exponential_connection_gives_inverse_factorials():
    conn = constant_connection(A, [[1]])
    eps = taylor_stratification(conn, 6)
    for k in range(7):
        assert eps.coeff((k,))[0][0] == A.const(Fraction(1, factorial(k)))


def test_cocycle_and_roundtrip_for_kummer():
    conn = kummer_connection(T, Fraction(1, 2))
    eps = taylor_stratification(conn, 4)
    assert eps.is_normalized()
    assert cocycle_check(eps)
    assert connection_from_stratification(eps) == conn


def test_curvature_of_non_integrable_example():
    conn = non_integrable()
    K = curvature(conn)[(0, 1)]
    assert K == [[A2.one, A2.zero], [A2.zero, -A2.one]]
    assert not conn.is_integrable()


def test_non_integrable_fails_at_degree_two():
    rep = cocycle_check(taylor_stratification(non_integrable(), 3))
    assert not rep.passed
    assert rep.failing_degree == 2


def test_integrable_two_variable_connection_passes():
    conn = Connection(A2, 1, [[[normal_form("x2", A2)]], [[normal_form("x1", A2)]]])
    assert conn.is_integrable()
    assert cocycle_check(taylor_stratification(conn, 3))


def test_padic_factorial_exhausts_precision():
    P = AffineSpace(1, Qp(5, 1))
    with pytest.raises(PrecisionExhausted):
        taylor_stratification(trivial_connection(P), 5)


def test_divided_operators_compose_with_binomial():
    for i in range(4):
        for j in range(4):
            lhs = compose_operators(divided_operator(A, (i,)), divided_operator(A, (j,)))
            rhs = divided_operator(A, (i + j,), comb(i + j, i))
            assert lhs == rhs


def test_composition_matches_application_on_monomials():
    x = normal_form("x", A)
    D = divided_operator(A, (2,), x)
    E = divided_operator(A, (1,), x * x)
    DE = compose_operators(D, E)
    for m in range(7):
        f = normal_form({(m,): 1}, A)
        assert DE(f) == D(E(f))


def test_operator_action_on_kummer():
    a = Fraction(3, 7)
    conn = kummer_connection(T, a)
    eps = taylor_stratification(conn, 3)
    one = [T.one]
    assert operator_action(divided_operator(T, (1,)), one, eps)[0] == normal_form({(-1,): a}, T)
    assert operator_action(divided_operator(T, (2,)), one, eps)[0] == normal_form({(-2,): a * (a - 1) / 2}, T)
    with pytest.raises(OrderExceedsJet):
        operator_action(divided_operator(T, (4,)), one, eps)


def _random_connection(pres, rank, rng, degree=3):
    lo = -degree if pres.kind == "Torus" else 0
    mats = [[[normal_form({(rng.randint(lo, degree),): rng.randint(-4, 4) for _ in range(2)}, pres, check=False)
              for _ in range(rank)] for _ in range(rank)]]
    return Connection(pres, rank, mats)


@given(st.integers(0, 10 ** 6), st.integers(1, 3), st.booleans())
@settings(max_examples=15, deadline=None)
def test_random_curves_connections_satisfy_cocycle(seed, rank, torus):
    rng = random.Random(seed)
    conn = _random_connection(T if torus else A, rank, rng)
    eps = taylor_stratification(conn, 3)
    assert cocycle_check(eps)
    assert connection_from_stratification(eps) == conn


def test_truncation_keeps_low_terms():
    eps = taylor_stratification(kummer_connection(T, 2), 4)
    low = eps.truncate(2)
    assert low.order == 2
    assert set(low.terms) == {(0,), (1,), (2,)}
