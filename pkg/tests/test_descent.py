import random
from fractions import Fraction

import pytest
import sympy
from hypothesis import given, settings, strategies as st

from mwcoh.arith import QQ, Qp
from mwcoh.descent import (
    CocycleFailed, DescentDatum, FiniteAlgebra, amitsur_complex, canonical_datum, check_cocycle, descend,
    constant_tower, mittag_leffler_check, multiplication_tower, random_surjective_tower, roos_complex,
    roundtrip_check, swap_branch_datum, zero_tower,
)
from mwcoh.diffcalc import trivial_connection
from mwcoh.functor import kummer_residues, quadratic_cover

K5 = Qp(5, 20)


def dense_cokernel(tower):
    """``lim^1`` as target dimension minus the sympy rank of the dense Roos matrix."""
    D = tower.depth
    offsets = [sum(tower.dims[:n]) for n in range(D + 2)]
    rows, cols = offsets[D], offsets[D + 1]
    M = sympy.zeros(rows, cols)
    for n in range(D + 1):
        for i in range(tower.dims[n]):
            c = offsets[n] + i
            if n < D:
                M[offsets[n] + i, c] += 1
            if n > 0:
                for r in range(tower.dims[n - 1]):
                    M[offsets[n - 1] + r, c] -= sympy.Rational(tower.maps[n - 1][r][i])
    return rows - M.rank()


@pytest.mark.parametrize("alg", [FiniteAlgebra.split(2), FiniteAlgebra.split(3)])
def test_split_amitsur_is_exact(alg):
    rep = amitsur_complex(alg, module_rank=2, length=3)
    assert rep.dims == [2, 0, 0]
    assert rep.exact_in([1, 2])


def test_quadratic_cover_amitsur():
    phi, _ = quadratic_cover(K5, 5)
    rep = amitsur_complex(FiniteAlgebra.from_ring_map(phi))
    assert rep.dims == [1, 0, 0]


def test_canonical_datum_descends_to_itself():
    phi, _ = quadratic_cover(K5, 5)
    D = canonical_datum(phi, 2, trivial_connection(phi.source, 2))
    assert check_cocycle(D)
    out = descend(D)
    assert out.rank == 2 and out.base_extension_ok
    assert out.connection == trivial_connection(phi.source, 2)


def test_swap_datum_is_kummer_twist():
    phi, _ = quadratic_cover(QQ)
    out = descend(swap_branch_datum(phi))
    assert out.rank == 1
    D = swap_branch_datum(phi)
    D.connection = trivial_connection(phi.target)
    assert kummer_residues(descend(D).connection) == [Fraction(1, 2)]


def test_broken_gluing_fails_cocycle():
    phi, _ = quadratic_cover(QQ)
    D = DescentDatum(phi, 1, [[{(1, 0): QQ(1)}]])
    assert not check_cocycle(D)
    with pytest.raises(CocycleFailed):
        descend(D)


def test_rank_zero_datum():
    phi, _ = quadratic_cover(QQ)
    assert descend(canonical_datum(phi, 0)).rank == 0


@pytest.mark.parametrize("domain", [QQ, K5])
def test_random_roundtrips(domain):
    phi, _ = quadratic_cover(domain, 5 if domain is K5 else None)
    rng = random.Random(11)
    for r in (1, 2, 3):
        assert roundtrip_check(phi, r, rng)


def test_constant_and_zero_towers():
    rep = roos_complex(constant_tower(3, 6))
    assert (rep.lim, rep.lim1) == (3, 0)
    rep = roos_complex(zero_tower(2, 6))
    assert (rep.lim, rep.lim1) == (0, 0)


@pytest.mark.parametrize("depth", range(4, 9))
def test_multiplication_tower_against_dense_rank(depth):
    tower = multiplication_tower(depth)
    assert roos_complex(tower).lim1 == dense_cokernel(tower)
    assert mittag_leffler_check(tower)


def test_fixed_size_multiplication_tower_is_not_mittag_leffler():
    # images t^k M shrink by one at every step up to the cap
    assert not mittag_leffler_check(multiplication_tower(6, size=6))
    assert mittag_leffler_check(multiplication_tower(6, size=2))


@given(st.integers(0, 10 ** 6), st.integers(2, 7))
@settings(max_examples=30, deadline=None)
def test_surjective_towers_have_no_lim1(seed, depth):
    tower = random_surjective_tower(depth, random.Random(seed))
    assert mittag_leffler_check(tower)
    rep = roos_complex(tower)
    assert rep.lim1 == 0 == dense_cokernel(tower)
