from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from mwcoh.arith import Qp
from mwcoh.dagalg import (
    AffineSpace, CertificateViolation, HyperellipticAffine, LocalizedLine, MonicCover,
    NotInvertible, PresentationError, Torus, inverse, normal_form, partial_derivative, tightest_certificate,
)

H = HyperellipticAffine([0, -1, 0, 1])
T = Torus(1)
A = AffineSpace(1)


def test_y_cubed_reduces_by_the_curve_equation():
    x, y = H.gen(0), H.y
    assert y ** 3 == (x ** 3 - x) * y
    assert normal_form("y^3", H) == normal_form("x^3*y - x*y", H)


def test_derivative_of_y_is_chain_rule():
    x, y = H.gen(0), H.y
    dy = partial_derivative(y)
    # 2 y dy = f'
    assert dy * y * H.const(2) == H.const(3) * x ** 2 - H.one


def test_laurent_cancellation():
    assert normal_form("x**-1*(x**2+x)", T) == normal_form("x + 1", T)
    assert T.gen(0) * inverse(T.gen(0)) == T.one


def test_slope_one_half_certificate():
    K = Qp(5, 10)
    A5 = AffineSpace(1, K)
    e = normal_form({(2 * k,): 5 ** k for k in range(6)}, A5)
    assert e.cert == (2, 0)


def test_certificate_offsets_add_under_products():
    K = Qp(5, 10)
    A5 = AffineSpace(1, K)
    a = normal_form("1+5*x", A5)
    b = normal_form("1-5*x", A5)
    prod = a * b
    assert prod == normal_form("1-25*x^2", A5)
    assert prod.cert[1] <= a.cert[1] + b.cert[1]


def test_schoolbook_product_oracle():
    # independent dense polynomial multiplication
    p, q = [1, 2, 0, -3], [4, 0, 5]
    dense = [0] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        for j, b in enumerate(q):
            dense[i + j] += a * b
    prod = normal_form({(i,): c for i, c in enumerate(p)}, A) * normal_form({(j,): c for j, c in enumerate(q)}, A)
    assert prod.coeffs == {(k,): Fraction(c) for k, c in enumerate(dense) if c}


def test_simple_derivatives():
    assert partial_derivative(normal_form("x^3", A)) == normal_form("3*x^2", A)
    assert partial_derivative(normal_form("x^-1", T)) == normal_form("-x^-2", T)


def test_zero_is_additive_identity():
    a = normal_form("x^2 - 3", A)
    assert a + A.zero == a


def test_localized_line_digits():
    L = LocalizedLine([0, -1, 1])
    f = normal_form({(2, 0): 1, (1, 0): -1}, L)
    assert f * inverse(f) == L.one
    # x^3 / f reduces to polynomial part plus proper fraction
    e = normal_form({(3, 1): 1}, L)
    assert all(k[0] < 2 or k[1] == 0 for k in e.coeffs)


def test_hyperelliptic_rejects_bad_curves():
    with pytest.raises(PresentationError):
        HyperellipticAffine([0, 0, 0, 1])  # x^3 is not squarefree
    with pytest.raises(PresentationError):
        HyperellipticAffine([0, 1, 1])


def test_cover_inverse_and_derivative():
    B = MonicCover(T, [-T.gen(0), 0, 1])
    y = B.y
    assert y * inverse(y) == B.one
    assert partial_derivative(y) * B.lift(T.gen(0)) * B.const(2) == y


def test_non_etale_cover_rejected():
    with pytest.raises(PresentationError):
        MonicCover(A, [-A.gen(0), 0, 1])


def test_non_unit_inverse_raises():
    with pytest.raises(NotInvertible):
        inverse(normal_form("1 + x", A))


def test_certificate_violation_detected():
    K = Qp(5, 4)
    A5 = AffineSpace(1, K)
    # unit coefficients up to degree 40 need offset ceil(40 / 8) = 5 > 4 digits
    with pytest.raises(CertificateViolation):
        normal_form({(k,): 1 for k in range(41)}, A5)
    assert normal_form({(k,): 1 for k in range(41)}, A5, check=False).cert == (8, 5)


exps = st.dictionaries(st.integers(-4, 4), st.integers(-9, 9), max_size=4)


@given(exps, exps, exps)
@settings(max_examples=50, deadline=None)
def test_torus_ring_axioms(a, b, c):
    x, y, z = (normal_form({(k,): v for k, v in d.items()}, T) for d in (a, b, c))
    assert (x * y) * z == x * (y * z)
    assert x * (y + z) == x * y + x * z
    assert x * y == y * x


hyp_terms = st.dictionaries(st.tuples(st.integers(0, 3), st.integers(0, 1), st.integers(0, 1)),
                            st.integers(-5, 5), max_size=3)


@given(hyp_terms, hyp_terms)
@settings(max_examples=40, deadline=None)
def test_hyperelliptic_leibniz(a, b):
    x, y = normal_form(dict(a), H, check=False), normal_form(dict(b), H, check=False)
    assert partial_derivative(x * y) == partial_derivative(x) * y + x * partial_derivative(y)


@given(hyp_terms, hyp_terms, hyp_terms)
@settings(max_examples=30, deadline=None)
def test_hyperelliptic_associativity(a, b, c):
    x, y, z = (normal_form(dict(d), H, check=False) for d in (a, b, c))
    assert (x * y) * z == x * (y * z)


def test_tightest_certificate_is_valid():
    K = Qp(5, 12)
    A5 = AffineSpace(1, K)
    coeffs = {(k,): K(5 ** (k // 3)) for k in range(12)}
    n, c = tightest_certificate(A5, coeffs)
    for (k,), v in coeffs.items():
        assert v.val >= -(-k // n) - c
