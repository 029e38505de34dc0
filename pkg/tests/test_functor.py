from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from mwcoh.arith import QQ, Qp
from mwcoh.dagalg import FringeElement, normal_form
from mwcoh.derham import cohomology
from mwcoh.diffcalc import kummer_connection, trivial_connection
from mwcoh.functor import (
    GroupAction, GroupOrderNotInvertible, NotEtale, kummer_map, kummer_residues, pullback_module,
    pushforward_finite, quadratic_as_torus, quadratic_cover, trace_splitting,
)

K5 = Qp(5, 20)


def test_quadratic_pushforward_splits_into_kummer_summands():
    phi, _ = quadratic_cover(K5, 5)
    push = pushforward_finite(trivial_connection(phi.target), phi)
    assert kummer_residues(push) == [0, Fraction(1, 2)]


def test_pushforward_preserves_cohomology():
    phi, _ = quadratic_cover(K5, 5)
    triv = trivial_connection(phi.target)
    down = cohomology(pushforward_finite(triv, phi)).dims
    up = cohomology(quadratic_as_torus(triv)).dims
    assert down == up == [1, 1]


def test_trace_idempotent_recovers_trivial_module():
    phi, action = quadratic_cover(K5, 5)
    base = trivial_connection(phi.source)
    split = trace_splitting(base, action)
    assert split.is_idempotent()
    assert split.commutes()
    assert split.trace == phi.source.one
    assert split.image == base


def _negate_t(b):
    return FringeElement(b.pres, {k: (-v if k[0] % 2 else v) for k, v in b.coeffs.items()})


def test_group_order_divisible_by_p_is_refused():
    phi = kummer_map(2, Qp(2, 10), 2)
    action = GroupAction(phi, [lambda b: b, _negate_t], ["id", "t->-t"])
    with pytest.raises(GroupOrderNotInvertible):
        trace_splitting(trivial_connection(phi.source), action)


def test_pullback_along_square_doubles_exponent():
    phi = kummer_map(2, QQ)
    up = pullback_module(kummer_connection(phi.source, Fraction(1, 2)), phi)
    assert kummer_residues(up) == [1]
    assert cohomology(up).dims == [1, 1]


def test_kummer_pushforward_residues():
    phi = kummer_map(3, QQ)
    push = pushforward_finite(trivial_connection(phi.target), phi)
    assert kummer_residues(push) == [0, Fraction(1, 3), Fraction(2, 3)]


def test_non_etale_maps_are_refused():
    with pytest.raises(NotEtale):
        phi = kummer_map(2, QQ, base="AffineSpace")
        pushforward_finite(trivial_connection(phi.target), phi)
    with pytest.raises(NotEtale):
        phi = kummer_map(5, K5, 5)
        pushforward_finite(trivial_connection(phi.target), phi)


@given(st.integers(1, 4), st.fractions(min_value=-2, max_value=2, max_denominator=6))
@settings(max_examples=20, deadline=None)
def test_pullback_scales_kummer_exponent(m, a):
    phi = kummer_map(m, QQ)
    up = pullback_module(kummer_connection(phi.source, a), phi)
    assert kummer_residues(up) == [m * a]


@given(st.integers(1, 4), st.fractions(min_value=-2, max_value=2, max_denominator=6))
@settings(max_examples=20, deadline=None)
def test_pushforward_residues_are_shifted_fractions(m, a):
    phi = kummer_map(m, QQ)
    push = pushforward_finite(kummer_connection(phi.target, a), phi)
    assert kummer_residues(push) == [(a + e) / m for e in range(m)]


def test_witness_coordinates_roundtrip():
    phi = kummer_map(3, QQ)
    w = phi.witness
    b = normal_form({(7,): 1, (-2,): 2}, phi.target)
    assert w.embed(w.coords(b)) == b
