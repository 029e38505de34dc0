import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from mwcoh.arith import QQ, Qp
from mwcoh.dagalg import AffineSpace, HyperellipticAffine, LocalizedLine, Torus, normal_form
from mwcoh.derham import (
    DeRhamForm, NotStabilized, TowerElement, TruncationLevel, cohomology, cohomology_with_support,
    dr_differential, poincare_homotopy_check, random_tower_element, reduce_form,
)
from mwcoh.diffcalc import Connection, kummer_connection, trivial_connection

A = AffineSpace(1)
T = Torus(1)


def test_affine_line_trivial():
    res = cohomology(trivial_connection(A))
    assert res.dims == [1, 0]
    assert "heuristic" in res.note


def test_torus_trivial_has_dlog_class():
    res = cohomology(trivial_connection(T))
    assert res.dims == [1, 1]
    assert res.basis_labels(1) == ["dx/x"]


@pytest.mark.parametrize("domain", [QQ, Qp(5, 20)])
def test_half_kummer_has_no_cohomology(domain):
    T5 = Torus(1, domain, 5 if domain is not QQ else None)
    assert cohomology(kummer_connection(T5, Fraction(1, 2))).dims == [0, 0]


def test_integer_kummer_is_gauge_trivial():
    res = cohomology(kummer_connection(T, 1))
    assert res.dims == [1, 1]
    h0 = [b for b in res.basis if b.degree == 0][0]
    assert h0.coeffs[0] == normal_form("x^-1", T)


def test_two_dimensional_torus_by_kunneth():
    assert cohomology(trivial_connection(Torus(2))).dims == [1, 2, 1]
    assert cohomology(trivial_connection(AffineSpace(2))).dims == [1, 0, 0]


def test_localized_line_counts_punctures():
    L = LocalizedLine([0, -1, 0, 1])
    assert cohomology(trivial_connection(L)).dims == [1, 3]


def test_differential_of_horizontal_section_vanishes():
    conn = kummer_connection(T, 1)
    s = DeRhamForm(T, 0, [normal_form("x^-1", T)])
    assert dr_differential(s, conn).is_zero()


def test_reduce_polynomial_form_is_exact():
    form = DeRhamForm(A, 1, [normal_form("x^3", A)])
    red = reduce_form(form, trivial_connection(A))
    assert red.reduced.is_zero()
    assert red.exact.coeffs[0] == normal_form({(4,): Fraction(1, 4)}, A)


def test_hyperelliptic_reduction_by_hand():
    # modulo d(x^2 y) and d(y): x^4 dx/y ~ 5/7 x^2 dx/y ~ 5/21 dx/y
    K = Qp(5, 20)
    H = HyperellipticAffine([0, -1, 0, 1], K, 5)
    form = DeRhamForm(H, 1, [normal_form({(4, 0, 0): 1}, H)])
    red = reduce_form(form, trivial_connection(H))
    assert str(red.reduced) == "5/21 dx/y"


def test_window_form_is_already_reduced():
    H = HyperellipticAffine([0, -1, 0, 1], Qp(5, 20), 5)
    form = DeRhamForm(H, 1, [normal_form({(1, 0, 0): 1}, H)])
    red = reduce_form(form, trivial_connection(H))
    assert red.reduced == form
    assert not any(red.exact.coeffs)


def test_support_at_origin():
    res = cohomology_with_support(trivial_connection(A), [0, 1])
    assert res.dims == [0, 0, 1]
    assert res.euler_consistent


def test_support_at_two_points():
    assert cohomology_with_support(trivial_connection(A), [0, -1, 1]).dims == [0, 0, 2]


def test_not_stabilized_carries_table():
    H = HyperellipticAffine([0, -1, 0, 1])
    with pytest.raises(NotStabilized) as err:
        cohomology(trivial_connection(H), TruncationLevel(), levels=[4, 5])
    assert len(err.value.table) == 2


def test_rank_two_upper_triangular():
    x = normal_form("x", A)
    conn = Connection(A, 2, [[[x, x * x + A.one], [A.zero, A.const(2)]]])
    assert cohomology(conn).dims == [0, 1]


@pytest.mark.parametrize("domain", [QQ, Qp(5, 20)])
def test_homotopy_identities(domain):
    rng = random.Random(3)
    for _ in range(5):
        rep = poincare_homotopy_check(random_tower_element(domain, rng))
        assert rep, rep.results
        assert rep.summary() == "3/3 identities pass"


@given(st.lists(st.dictionaries(st.integers(0, 6), st.integers(-9, 9), max_size=4), min_size=1, max_size=4))
@settings(max_examples=40, deadline=None)
def test_homotopy_on_arbitrary_families(levels):
    comps = [{r: (QQ(v),) for r, v in c.items() if v} for c in levels]
    assert poincare_homotopy_check(TowerElement(QQ, 1, comps))
