"""Descent of finite free modules along finite free ring maps, and Roos complexes.

Tensor powers ``B^(x)k`` over ``A`` are handled through the module basis of
``B`` over ``A``: an element is a dict from basis-index tuples to
``A``-coefficients, multiplied through the structure constants.
"""

from dataclasses import dataclass, field
from itertools import combinations, product
import random

from .arith import Echelon, Matrix, QQ
from .dagalg import NotInvertible, inverse, is_unit, partial_derivative, ring_det
from .diffcalc import Connection, mat_add, mat_mul


class NotFaithfullyFlat(ValueError):
    pass


class CocycleFailed(ValueError):
    pass


class RankDeficient(ArithmeticError):
    pass


# -- finite algebras and tensor powers ------------------------------------------

@dataclass
class FiniteAlgebra:
    """``B`` free of rank ``n`` over ``A`` with structure constants ``mult[i][j][k]``.

    ``A`` is either a presentation (coefficients are its elements) or a bare
    coefficient field (coefficients are field elements).
    """

    base: object
    mult: list
    unit: list
    labels: list = None

    @property
    def n(self):
        return len(self.unit)

    @property
    def scalar_zero(self):
        return self.base.zero

    @classmethod
    def from_ring_map(cls, phi):
        w = phi.witness
        if w is None:
            raise ValueError("ring map has no finiteness witness")
        return cls(phi.source, w.mult, w.unit_vector(), list(w.labels))

    @classmethod
    def split(cls, k, domain=QQ):
        """``domain^k`` with componentwise product (``A = domain``)."""
        one, zero = domain.one, domain.zero
        mult = [[[one if (i == j == c) else zero for c in range(k)] for j in range(k)] for i in range(k)]
        return cls(domain, mult, [one] * k, ["e%d" % (i + 1) for i in range(k)])

    def tensor_mul(self, u, v):
        out = {}
        for I, a in u.items():
            for J, b in v.items():
                ab = a * b
                parts = [[(c, m) for c, m in enumerate(self.mult[i][j]) if m] for i, j in zip(I, J)]
                for combo in product(*parts):
                    key = tuple(c for c, _ in combo)
                    coef = ab
                    for _, m in combo:
                        coef = coef * m
                    out[key] = out.get(key, self.scalar_zero) + coef
        return {k: a for k, a in out.items() if a}

    def insert_unit(self, u, pos):
        """Coface: insert ``1`` as a new tensor factor at ``pos``."""
        out = {}
        for I, a in u.items():
            for c, e in enumerate(self.unit):
                if e:
                    key = I[:pos] + (c,) + I[pos:]
                    out[key] = out.get(key, self.scalar_zero) + a * e
        return {k: a for k, a in out.items() if a}


# -- Amitsur complex ----------------------------------------------------------

@dataclass
class AmitsurReport:
    dims: list
    kernel_dims: list
    image_dims: list
    h0_basis: list = field(default_factory=list)

    def exact_in(self, degrees):
        return all(self.dims[k] == 0 for k in degrees)


def _constant(a):
    """Constant value of an ``A``-element (or a field element itself)."""
    if not hasattr(a, "coeffs"):
        return a
    if not a.coeffs:
        return a.pres.domain.zero
    if set(a.coeffs) != {(0,) * a.pres.nexp}:
        raise ValueError("Amitsur coface with non-constant entries")
    return a.coeffs[(0,) * a.pres.nexp]


def amitsur_complex(alg, module_rank=1, length=3):
    """``M(x)B -> M(x)B(x)B -> ..`` for free ``M = A^s``; cohomology dims over ``A``.

    The cofaces only involve the unit vector of ``B``; with constant unit
    coordinates (true for every monomial basis starting at ``1``) the complex
    is ``A`` tensored with a complex over the coefficient field, so its ranks
    over ``A`` are computed exactly on the field level.
    """
    if alg.n == 0:
        raise NotFaithfullyFlat("B has rank 0 over A")
    if length < 2:
        raise ValueError("length must be at least 2")
    unit = [_constant(u) for u in alg.unit]
    field_ = getattr(alg.base, "domain", alg.base)
    s, n = module_rank, alg.n

    def basis(k):
        return [(j,) + I for I in product(range(n), repeat=k + 1) for j in range(s)]

    def d(k, key):
        # degree k has k + 1 tensor factors; cofaces insert the unit at 0..k+1
        j, I = key[0], key[1:]
        out = {}
        for pos in range(k + 2):
            sign = 1 if pos % 2 == 0 else -1
            for c, e in enumerate(unit):
                if e:
                    t = (j,) + I[:pos] + (c,) + I[pos:]
                    out[t] = out.get(t, field_.zero) + (e if sign > 0 else -e)
        return {t: a for t, a in out.items() if a}

    ranks = []
    kernels = []
    h0_basis = []
    for k in range(length + 1):
        ech = Echelon()
        ker = 0
        for key in basis(k):
            v = dict(d(k, key))
            v[("__src", key)] = field_.one
            before = ech.rank
            rem = ech.add(v, is_tag=lambda c: c[0] == "__src")
            if ech.rank == before:
                ker += 1
                if k == 0:
                    h0_basis.append(rem)
        ranks.append(len(basis(k)) - ker)
        kernels.append(ker)
    # H^k = ker d_k / im d_(k-1); H^0 is the copy of M cut out by the two unit maps
    dims = [kernels[k] - (ranks[k - 1] if k else 0) for k in range(length)]
    return AmitsurReport(dims, kernels[:length], ranks[:length], h0_basis)


# -- descent data -----------------------------------------------------------------

def _p(alg, u, positions, total):
    """Pull a ``B(x)B`` element into ``B^(x)total`` with factors at ``positions``."""
    out = u
    missing = [k for k in range(total) if k not in positions]
    for pos in missing:
        out = alg.insert_unit(out, pos)
    return out


def _mat_tensor_mul(alg, X, Y):
    r = len(X)
    return [[_tsum(alg, [alg.tensor_mul(X[i][k], Y[k][j]) for k in range(r)]) for j in range(r)] for i in range(r)]


def _tsum(alg, items):
    out = {}
    for u in items:
        for k, a in u.items():
            out[k] = out.get(k, alg.scalar_zero) + a
    return {k: a for k, a in out.items() if a}


def _teq(alg, u, v):
    return not _tsum(alg, [u, {k: -a for k, a in v.items()}])


@dataclass
class CocycleResult:
    passed: bool
    offending: tuple = None

    def __bool__(self):
        return self.passed


@dataclass
class DescentDatum:
    """Gluing ``Phi`` (r x r over ``B(x)B``) of ``M = B^r``, optional connection on ``M``."""

    phi: object
    rank: int
    Phi: list
    connection: Connection = None

    def __post_init__(self):
        self.alg = FiniteAlgebra.from_ring_map(self.phi)
        if len(self.Phi) != self.rank or any(len(row) != self.rank for row in self.Phi):
            raise ValueError("gluing matrix must be %dx%d" % (self.rank, self.rank))

    def coords(self, b):
        return self.phi.witness.coords(b)

    def left(self, b):
        """``b (x) 1``."""
        return _p(self.alg, {(c,): a for c, a in enumerate(self.coords(b)) if a}, [0], 2)

    def right(self, b):
        """``1 (x) b``."""
        return _p(self.alg, {(c,): a for c, a in enumerate(self.coords(b)) if a}, [1], 2)


def canonical_datum(phi, rank, connection=None):
    """Identity gluing of ``M0 (x) B`` for ``M0 = A^rank``."""
    alg = FiniteAlgebra.from_ring_map(phi)
    one = _p(alg, {(c,): a for c, a in enumerate(alg.unit) if a}, [0], 2)
    Phi = [[one if i == j else {} for j in range(rank)] for i in range(rank)]
    conn = None
    if connection is not None:
        conn = Connection(phi.target, rank, [_scale_mat([[phi(a) for a in row] for row in connection.matrices[0]],
                                                        _dx_scale(phi))])
    return DescentDatum(phi, rank, Phi, conn)


def transported_datum(phi, g, connection=None):
    """Datum of ``M0 (x) B`` in the basis ``m = e g``: ``Phi = p1(g^-1) p2(g)``."""
    B = phi.target
    r = len(g)
    ginv = _matrix_inverse(B, g)
    tmp = DescentDatum(phi, r, [[{} for _ in range(r)] for _ in range(r)])
    L = [[tmp.left(a) for a in row] for row in ginv]
    R = [[tmp.right(a) for a in row] for row in g]
    Phi = _mat_tensor_mul(tmp.alg, L, R)
    conn = None
    if connection is not None:
        # module connection of M0, written in the basis m = e g
        N = connection.matrices[0]
        NB = [[phi(a) for a in row] for row in N]
        dg = [[partial_derivative(a, 0) * _dx_scale(phi) for a in row] for row in g]
        conn = Connection(B, r, [mat_mul(ginv, mat_add(dg, mat_mul(_scale_mat(NB, _dx_scale(phi)), g)))])
    return DescentDatum(phi, r, Phi, conn)


def _dx_scale(phi):
    """``dx_A / dx_B`` expressed in ``B``."""
    return partial_derivative(phi.images[0], 0)


def _scale_mat(M, c):
    return [[a * c for a in row] for row in M]


def _matrix_inverse(R, M):
    """Inverse of a square matrix over a presentation with unit determinant (adjugate)."""
    r = len(M)
    if r == 0:
        return []
    det = ring_det(M, R.one)
    dinv = inverse(det)
    out = [[R.zero] * r for _ in range(r)]
    for i in range(r):
        for j in range(r):
            minor = [row[:j] + row[j + 1:] for k, row in enumerate(M) if k != i]
            c = ring_det(minor, R.one) if minor else R.one
            out[j][i] = (c if (i + j) % 2 == 0 else -c) * dinv
    return out


def check_cocycle(D):
    """``p13(Phi) = p12(Phi) p23(Phi)`` entrywise in ``B(x)B(x)B``."""
    alg, r = D.alg, D.rank
    P12 = [[_p(alg, a, [0, 1], 3) for a in row] for row in D.Phi]
    P23 = [[_p(alg, a, [1, 2], 3) for a in row] for row in D.Phi]
    P13 = [[_p(alg, a, [0, 2], 3) for a in row] for row in D.Phi]
    prod = _mat_tensor_mul(alg, P12, P23)
    for i in range(r):
        for j in range(r):
            diff = _tsum(alg, [prod[i][j], {k: -a for k, a in P13[i][j].items()}])
            if diff:
                key = min(diff, key=repr)
                return CocycleResult(False, (i, j, key))
    return CocycleResult(True)


@dataclass
class Descended:
    rank: int
    basis: list
    connection: Connection = None
    base_extension_ok: bool = True
    iso: list = None

    @property
    def module_rank(self):
        return self.rank


def descent_projector(D, s):
    """``(id (x) rho)(Phi (1 (x) s))`` for ``s`` in ``B^r``, ``rho`` the first coordinate."""
    alg, r = D.alg, D.rank
    B = D.phi.target
    vec = [D.right(c) for c in s]
    img = [_tsum(alg, [alg.tensor_mul(D.Phi[i][j], vec[j]) for j in range(r)]) for i in range(r)]
    witness = D.phi.witness
    out = []
    for u in img:
        coords = [alg.base.zero] * alg.n
        for (a, b), c in u.items():
            if b == 0:
                coords[a] = coords[a] + c
        out.append(witness.embed(coords))
    return out


def descend(D, check=True):
    """Module over ``A`` whose base extension is ``M`` compatibly with ``Phi``."""
    if check:
        res = check_cocycle(D)
        if not res:
            raise CocycleFailed("cocycle identity fails at %s" % (res.offending,))
    r = D.rank
    if r == 0:
        return Descended(0, [], Connection(D.phi.source, 0, [[]]) if D.connection else None)
    B = D.phi.target
    w = D.phi.witness
    cands = []
    for j in range(r):
        for b in w.basis:
            s = [B.zero] * r
            s[j] = b
            cands.append(descent_projector(D, s))
    for combo in combinations(range(len(cands)), r):
        V = [[cands[c][i] for c in combo] for i in range(r)]
        try:
            det = ring_det(V, B.one)
            if not det or not is_unit(det):
                continue
        except NotInvertible:
            continue
        break
    else:
        raise RankDeficient("no %d descended sections span M over B" % r)
    alg = D.alg
    L = [[D.left(a) for a in row] for row in V]
    R = [[D.right(a) for a in row] for row in V]
    ok = all(_teq(alg, x, y) for rx, ry in zip(_mat_tensor_mul(alg, D.Phi, R), L) for x, y in zip(rx, ry))
    conn = None
    if D.connection is not None:
        Vinv = _matrix_inverse(B, V)
        N = D.connection.matrices[0]
        dV = [[partial_derivative(a, 0) for a in row] for row in V]
        NB = mat_mul(Vinv, mat_add(dV, mat_mul(N, V)))
        conn = Connection(D.phi.source, r, [[[_to_base(D.phi, a) for a in row] for row in NB]])
    return Descended(r, V, conn, ok)


def _to_base(phi, b):
    """``B``-element lying in the image of ``A``, as an ``A``-element (in ``A``-coordinates)."""
    w = phi.witness
    coords = w.coords(b)
    unit = w.unit_vector()
    if any(c for c in coords[1:]) or not unit[0] == phi.source.one:
        raise ArithmeticError("descended connection does not have base coefficients")
    return coords[0]


def swap_branch_datum(phi):
    """Rank-one datum on ``B = A[y]/(y^2 - x)`` gluing by ``(y (x) y)/x``."""
    A = phi.source
    x_inv = inverse(A.gen(0))
    return DescentDatum(phi, 1, [[{(1, 1): x_inv}]])


def random_unitriangular(B, r, rng, bound=3):
    """Upper unitriangular ``r x r`` matrix over ``B`` with small random entries."""
    w_basis = [B.one, B.y] if B.kind == "MonicCover" else [B.one, B.gen(0)]
    g = [[B.one if i == j else B.zero for j in range(r)] for i in range(r)]
    for i in range(r):
        for j in range(i + 1, r):
            g[i][j] = sum((B.const(rng.randint(-bound, bound)) * b for b in w_basis), B.zero)
    return g


def roundtrip_check(phi, r, rng, with_connection=True):
    """Descend a transported canonical datum; compare with the module it came from."""
    A, B = phi.source, phi.target
    g = random_unitriangular(B, r, rng)
    conn0 = None
    if with_connection:
        N = [[A.const(rng.randint(-3, 3)) * A.gen(0) ** rng.randint(-1, 1) if rng.random() < 0.5 else A.zero
              for _ in range(r)] for _ in range(r)]
        conn0 = Connection(A, r, [N])
    D = transported_datum(phi, g, conn0)
    if not check_cocycle(D):
        return False
    out = descend(D, check=False)
    # explicit isomorphism M0 -> descended: coordinates g V must lie in A with unit determinant
    Q = mat_mul(g, out.basis)
    try:
        Qa = [[_to_base(phi, a) for a in row] for row in Q]
    except ArithmeticError:
        return False
    if not is_unit(ring_det(Qa, A.one)):
        return False
    if conn0 is not None:
        Qinv = _matrix_inverse(A, Qa)
        dQ = [[partial_derivative(a, 0) for a in row] for row in Qa]
        gauge = mat_mul(Qinv, mat_add(dQ, mat_mul(conn0.matrices[0], Qa)))
        if any(a != b for ra, rb in zip(gauge, out.connection.matrices[0]) for a, b in zip(ra, rb)):
            return False
    return out.base_extension_ok


# -- towers and the Roos complex -----------------------------------------------------

@dataclass
class Tower:
    """Spaces ``M_0 .. M_D`` (dimensions) with maps ``f_n: M_(n+1) -> M_n`` (dense matrices)."""

    dims: list
    maps: list
    domain: object = QQ

    def __post_init__(self):
        if len(self.maps) != len(self.dims) - 1:
            raise ValueError("need one transition map per consecutive pair")
        for n, f in enumerate(self.maps):
            if len(f) != self.dims[n] or any(len(row) != self.dims[n + 1] for row in f):
                raise ValueError("map %d has the wrong shape" % n)
        self.maps = [[[self.domain(a) for a in row] for row in f] for f in self.maps]

    @property
    def depth(self):
        return len(self.dims) - 1

    def image_dims(self, n):
        """Dimensions of the images of ``M_(n+k)`` in ``M_n`` for ``k = 0 .. depth - n``."""
        out = []
        cur = Matrix.identity(self.dims[n], self.domain)
        out.append(self.dims[n])
        for k in range(n, self.depth):
            cur = cur @ Matrix(self.maps[k], self.domain, self.dims[k + 1])
            out.append(_rank_rows(cur.entries))
        return out


def _rank_rows(rows):
    ech = Echelon()
    for j in range(len(rows[0]) if rows else 0):
        ech.add({i: rows[i][j] for i in range(len(rows)) if rows[i][j]})
    return ech.rank


def constant_tower(dim, depth, domain=QQ):
    I = [[1 if i == j else 0 for j in range(dim)] for i in range(dim)]
    return Tower([dim] * (depth + 1), [I] * depth, domain)


def zero_tower(dim, depth, domain=QQ):
    Z = [[0] * dim for _ in range(dim)]
    return Tower([dim] * (depth + 1), [Z] * depth, domain)


def projection_tower(depth, domain=QQ):
    """``M_n = domain^(n+1)`` with coordinate projections (surjective)."""
    maps = [[[1 if i == j else 0 for j in range(n + 2)] for i in range(n + 1)] for n in range(depth)]
    return Tower([n + 1 for n in range(depth + 1)], maps, domain)


def multiplication_tower(depth, size=None, domain=QQ):
    """``M_n = domain[t]/t^s`` with multiplication by ``t`` (``s = n`` unless ``size`` is fixed)."""
    dims = [size if size is not None else n for n in range(depth + 1)]
    maps = []
    for n in range(depth):
        # basis t^0..t^(d-1); t * t^i = t^(i+1) reduced into M_n
        maps.append([[1 if i == j + 1 else 0 for j in range(dims[n + 1])] for i in range(dims[n])])
    return Tower(dims, maps, domain)


@dataclass
class RoosReport:
    lim: int
    lim1: int
    depth: int
    rank_d: int
    level: int


def roos_matrix(tower):
    """Sparse columns of ``d(s)_n = s_n - f_n(s_(n+1))`` from ``prod_(n<=D)`` to ``prod_(n<D)``."""
    cols = []
    one = tower.domain.one
    for n in range(tower.depth + 1):
        for i in range(tower.dims[n]):
            col = {}
            if n < tower.depth:
                col[(n, i)] = one
            if n > 0:
                for r in range(tower.dims[n - 1]):
                    a = tower.maps[n - 1][r][i]
                    if a:
                        col[(n - 1, r)] = col.get((n - 1, r), 0) - a
            cols.append(((n, i), {k: v for k, v in col.items() if v}))
    return cols


def roos_complex(tower):
    """``lim`` and ``lim^1`` of the Roos complex at the depth cap.

    ``lim^1`` is the cokernel of ``d``.  ``lim`` is measured on the lower half
    of the tower: the dimension of the image of the compatible families of
    full length in ``prod_(n <= depth // 2) M_n``.
    """
    if tower.depth < 2:
        raise ValueError("Roos complex needs depth >= 2")
    cols = roos_matrix(tower)
    target = sum(tower.dims[:tower.depth])
    level = tower.depth // 2
    ech = Echelon()
    kernel = []
    for key, col in cols:
        v = dict(col)
        v[("__src", key)] = tower.domain.one
        before = ech.rank
        rem = ech.add(v, is_tag=lambda c: c[0] == "__src")
        if ech.rank == before:
            kernel.append(rem)
    low = Echelon()
    for kv in kernel:
        low.add({c[1]: a for c, a in kv.items() if c[1][0] <= level})
    return RoosReport(low.rank, target - ech.rank, tower.depth, ech.rank, level)


def mittag_leffler_check(tower):
    """Images of ``M_(n+k)`` in ``M_n`` stabilize before the cap, for every ``n < (depth + 1) // 2``."""
    for n in range((tower.depth + 1) // 2):
        dims = tower.image_dims(n)
        if len(dims) < 2 or dims[-1] != dims[-2]:
            return False
    return True


def random_surjective_tower(depth, rng=None, domain=QQ, max_dim=4):
    rng = rng or random.Random(0)
    dims = sorted(rng.randint(1, max_dim) for _ in range(depth + 1))
    maps = []
    for n in range(depth):
        a, b = dims[n], dims[n + 1]
        # [I | random] has full row rank
        f = [[int(i == j) if j < a else rng.randint(-2, 2) for j in range(b)] for i in range(a)]
        maps.append(f)
    return Tower(dims, maps, domain)
