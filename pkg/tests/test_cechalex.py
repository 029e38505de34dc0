from fractions import Fraction

import pytest

from mwcoh.cechalex import (
    CocycleViolation, JetComplex, build_jet_cech, compare_with_derham, h0_strat, jet_cohomology,
)
from mwcoh.dagalg import AffineSpace, Torus, normal_form
from mwcoh.derham import TruncationLevel, UnsupportedConnection, cohomology
from mwcoh.diffcalc import Connection, kummer_connection, taylor_stratification, trivial_connection

A = AffineSpace(1)
T = Torus(1)


@pytest.mark.parametrize("conn", [trivial_connection(A), kummer_connection(T, Fraction(1, 2)),
                                  kummer_connection(T, 1)])
def test_differential_squares_to_zero(conn):
    cx = build_jet_cech(taylor_stratification(conn, 3), k_max=2)
    assert cx.check_dd(level=3)


def test_coface_merges_blocks_binomially():
    cx = JetComplex(taylor_stratification(trivial_connection(A), 3))
    out = cx.coface(1, 1, (0, (0,), (2,)))
    assert out == {(0, (0,), (0, 2)): 1, (0, (0,), (1, 1)): 2, (0, (0,), (2, 0)): 1}


def test_torus_jets_match_derham():
    conn = trivial_connection(T)
    dr = cohomology(conn)
    assert jet_cohomology(conn, 3).dims == dr.dims == [1, 1]


def test_comparison_report_for_kummer():
    rep = compare_with_derham(kummer_connection(T, Fraction(1, 2)))
    assert rep
    assert rep.lines()[-1] == "degree 1: equal"


def test_h0_of_stratification():
    assert h0_strat(taylor_stratification(kummer_connection(T, 1), 3)).dim == 1
    assert h0_strat(taylor_stratification(kummer_connection(T, Fraction(1, 2)), 3)).dim == 0
    res = h0_strat(taylor_stratification(trivial_connection(A), 2))
    assert res.dim == 1 and res.basis[0][0] == A.one


def test_non_integrable_stratification_rejected():
    A2 = AffineSpace(2)
    conn = Connection(A2, 2, [[[0, 1], [0, 0]], [[0, 0], [1, 0]]])
    with pytest.raises(CocycleViolation) as err:
        build_jet_cech(taylor_stratification(conn, 3))
    assert err.value.degree == 2


def test_jet_degree_one_needs_second_degree():
    with pytest.raises(ValueError):
        jet_cohomology(trivial_connection(A), 3, TruncationLevel(k_max=1))


def test_jet_complex_is_one_variable_only():
    with pytest.raises(UnsupportedConnection):
        JetComplex(taylor_stratification(trivial_connection(Torus(2)), 2))


def test_rank_two_comparison():
    x = normal_form("x", A)
    conn = Connection(A, 2, [[[x, x * x + A.one], [A.zero, A.const(2)]]])
    rep = compare_with_derham(conn, orders=(3,))
    assert rep and rep.derham == [0, 1]
