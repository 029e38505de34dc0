"""Pullback, finite pushforward and trace splitting of modules with connection."""

from dataclasses import dataclass, field

from .arith import Echelon, Matrix, solve_linear
from .dagalg import (
    AffineSpace, FringeElement, MonicCover, NotInvertible, PresentationError, Torus,
    inverse, partial_derivative,
)
from .diffcalc import Connection, mat_add, mat_is_zero, mat_mul, mat_scale, mat_sub


class NotEtale(ValueError):
    pass


class GroupOrderNotInvertible(ArithmeticError):
    pass


class MissingWitness(ValueError):
    pass


@dataclass
class FiniteWitness:
    """``B`` as a free ``A``-module: basis elements of ``B`` and a coordinate map.

    ``coords(b)`` returns the ``A``-coordinates of ``b`` in ``basis`` and
    ``embed`` inverts it; ``mult[i][j]`` holds the coordinates of
    ``basis[i] * basis[j]``.
    """

    basis: list
    coords: object
    embed: object
    labels: list
    etale: bool = True
    mult: list = field(default=None, repr=False)

    def __post_init__(self):
        if self.mult is None:
            self.mult = [[self.coords(a * b) for b in self.basis] for a in self.basis]

    @property
    def degree(self):
        return len(self.basis)

    def unit_vector(self):
        return self.coords(self.basis[0].pres.one)

    def check_associativity(self, A):
        """Spot check ``(b_i b_j) b_k = b_i (b_j b_k)`` through the tables."""
        n = self.degree
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    left = [sum((self.mult[i][j][a] * self.mult[a][k][c] for a in range(n)), A.zero)
                            for c in range(n)]
                    right = [sum((self.mult[j][k][a] * self.mult[i][a][c] for a in range(n)), A.zero)
                             for c in range(n)]
                    if any(l != r for l, r in zip(left, right)):
                        return False
        return True


class RingMap:
    """``phi: A -> B`` given by the images of the coordinates of ``A``."""

    def __init__(self, source, target, images, witness=None):
        self.source = source
        self.target = target
        self.images = [im if isinstance(im, FringeElement) else target.const(im) for im in images]
        self.witness = witness
        if source.kind not in ("AffineSpace", "Torus"):
            raise PresentationError("ring maps are supported out of AffineSpace(n) and Torus(n)")
        if len(self.images) != source.nvars:
            raise ValueError("need one image per coordinate of the source")
        if source.kind == "Torus":
            for im in self.images:
                try:
                    inverse(im)
                except NotInvertible:
                    raise PresentationError("image %s of a torus coordinate is not a unit" % im)
        self._inv = [inverse(im) if source.kind == "Torus" else None for im in self.images]

    def __call__(self, a):
        if a.pres != self.source:
            raise ValueError("element does not live on the source presentation")
        out = self.target.zero
        for k, v in a.coeffs.items():
            term = self.target.const(v)
            for i, e in enumerate(k):
                base = self.images[i] if e >= 0 else self._inv[i]
                term = term * base ** abs(e) if e else term
            out = out + term
        return out

    def matrix(self, M):
        return [[self(a) for a in row] for row in M]


def _cover_witness(phi_target):
    B = phi_target
    basis = [B.y ** e if e else B.one for e in range(B.deg_m)]
    return basis, B.coefficient_poly, ["y^%d" % e if e else "1" for e in range(B.deg_m)]


def cover_map(B):
    """Inclusion of the base into a ``MonicCover`` with the power basis of ``y``."""
    if B.kind != "MonicCover":
        raise PresentationError("cover_map needs a MonicCover")
    A = B.base
    basis, coords, labels = _cover_witness(B)
    w = FiniteWitness(basis, coords, B.from_coefficient_poly, labels, etale=True)
    return RingMap(A, B, [B.lift(A.gen(i)) for i in range(A.nvars)], w)


def quadratic_cover(domain, prime=None, c=1):
    """``B = Torus(1)[y]/(y^2 - c x)`` with the inclusion map and the sign involution."""
    A = Torus(1, domain, prime)
    B = MonicCover(A, [-(A.gen(0) * A.const(c)), A.zero, A.one])
    phi = cover_map(B)
    return phi, GroupAction(phi, [lambda b: b, lambda b: _flip_y(b)], ["id", "y->-y"])


def _flip_y(b):
    return FringeElement(b.pres, {k: (-v if k[-1] % 2 else v) for k, v in b.coeffs.items()})


def kummer_map(m, domain, prime=None, base="Torus"):
    """``x -> t^m`` between one-variable tori (or affine lines), with basis ``1, t, .., t^(m-1)``."""
    if m < 1:
        raise ValueError("Kummer degree must be positive")
    maker = Torus if base == "Torus" else AffineSpace
    A = maker(1, domain, prime)
    B = maker(1, domain, prime)
    t = B.gen(0)
    basis = [t ** e if e else B.one for e in range(m)]

    def coords(b):
        parts = [dict() for _ in range(m)]
        for (k,), v in b.coeffs.items():
            parts[k % m][((k - k % m) // m,)] = v
        return [FringeElement(A, d) for d in parts]

    def embed(vec):
        out = {}
        for r, a in enumerate(vec):
            for (k,), v in a.coeffs.items():
                out[(k * m + r,)] = v
        return FringeElement(B, out)

    p = domain.prime if domain.prime is not None else prime
    etale = base == "Torus" and (p is None or m % p != 0)
    w = FiniteWitness(basis, coords, embed, ["t^%d" % e if e else "1" for e in range(m)], etale=etale)
    return RingMap(A, B, [t ** m], w)


@dataclass
class GroupAction:
    """Automorphisms of ``B`` over ``A`` (callables on ``B``-elements)."""

    phi: RingMap
    maps: list
    names: list

    def __post_init__(self):
        B = self.phi.target
        probe = [b for b in (self.phi.witness.basis if self.phi.witness else [])] + [B.one]
        if not any(all(g(b) == b for b in probe) for g in self.maps):
            raise ValueError("group action lacks the identity")
        for g in self.maps:
            for h in self.maps:
                comp = [g(h(b)) for b in probe]
                if not any(all(c == k(b) for c, b in zip(comp, probe)) for k in self.maps):
                    raise ValueError("group action not closed under composition")
        for g in self.maps:
            for im in self.phi.images:
                if g(im) != im:
                    raise ValueError("group element moves the image of the base")

    @property
    def order(self):
        return len(self.maps)


# -- operations ------------------------------------------------------------------

def pullback_module(conn, phi):
    """``N^B_j = sum_i phi(N^A_i) * d(phi(x_i))/dx_j``."""
    if conn.pres != phi.source:
        raise ValueError("connection does not live on the source of the map")
    B = phi.target
    r = conn.rank
    mats = []
    for j in range(B.dim):
        N = [[B.zero for _ in range(r)] for _ in range(r)]
        for i, Ni in enumerate(conn.matrices):
            dphi = partial_derivative(phi.images[i], j)
            if not dphi:
                continue
            N = mat_add(N, mat_scale(phi.matrix(Ni), dphi))
        mats.append(N)
    out = Connection(B, r, mats)
    if B.dim > 1 and conn.is_integrable() and not out.is_integrable():
        raise ArithmeticError("pullback lost integrability")
    return out


def pushforward_finite(conn, phi):
    """Restriction of scalars along a finite free étale map, in the basis ``b_e e_j``."""
    w = phi.witness
    if w is None:
        raise MissingWitness("pushforward needs a finiteness witness")
    if not w.etale:
        raise NotEtale("cover is not etale at the working precision")
    if conn.pres != phi.target:
        raise ValueError("connection does not live on the target of the map")
    A, B = phi.source, phi.target
    if A.dim != 1:
        raise PresentationError("pushforward implemented for one-variable bases")
    n, r = w.degree, conn.rank
    # x_A = phi(x) in B; d/dx_A = (1 / phi(x)') d/dx_B
    scale = inverse(partial_derivative(phi.images[0], 0))
    N = [[A.zero for _ in range(n * r)] for _ in range(n * r)]
    for e, b in enumerate(w.basis):
        db = partial_derivative(b, 0)
        for j in range(r):
            col = [conn.matrices[0][jj][j] * b for jj in range(r)]
            col[j] = col[j] + db
            for jj in range(r):
                for ee, a in enumerate(w.coords(col[jj] * scale)):
                    N[ee * r + jj][e * r + j] = a
    return Connection(A, n * r, [N])


def kummer_residues(conn):
    """Exponents ``a_i`` when the connection is diagonal with entries ``a_i dx/x``; else ``None``."""
    pres = conn.pres
    if pres.kind != "Torus" or pres.nvars != 1:
        return None
    N = conn.matrices[0]
    out = []
    for i, row in enumerate(N):
        for j, a in enumerate(row):
            if i != j and a:
                return None
        a = row[i]
        if any(k != (-1,) for k in a.coeffs):
            return None
        out.append(a.coeffs.get((-1,), pres.domain.zero))
    return out


@dataclass
class TraceSplitting:
    idempotent: list
    image: Connection
    pushforward: Connection
    trace: object

    def is_idempotent(self):
        e = self.idempotent
        return mat_is_zero(mat_sub(mat_mul(e, e), e))

    def commutes(self):
        """``e`` is horizontal: ``de + [N, e] = 0``."""
        e = self.idempotent
        N = self.pushforward.matrices[0]
        de = [[partial_derivative(a, 0) for a in row] for row in e]
        return mat_is_zero(mat_add(de, mat_sub(mat_mul(N, e), mat_mul(e, N))))


def group_matrix(phi, g, r):
    """Matrix of ``g`` on ``B^r`` in the ``A``-basis ``b_e e_j``."""
    w = phi.witness
    A = phi.source
    n = w.degree
    M = [[A.zero for _ in range(n * r)] for _ in range(n * r)]
    for e, b in enumerate(w.basis):
        for ee, a in enumerate(w.coords(g(b))):
            for j in range(r):
                M[ee * r + j][e * r + j] = a
    return M


def trace_splitting(conn, action):
    """Averaging idempotent exhibiting ``conn`` as a direct factor of ``f_* f^* conn``."""
    phi = action.phi
    A = phi.source
    dom = A.domain
    p = dom.prime if dom.prime is not None else A.prime
    if p is not None and action.order % p == 0:
        raise GroupOrderNotInvertible("group order %d is divisible by p = %d" % (action.order, p))
    push = pushforward_finite(pullback_module(conn, phi), phi)
    r = conn.rank
    size = push.rank
    e = [[A.zero for _ in range(size)] for _ in range(size)]
    for g in action.maps:
        e = mat_add(e, group_matrix(phi, g, r))
    e = mat_scale(e, A.const(1 / dom(action.order)))
    trace = sum((e[i][i] for i in range(size)), A.zero)
    image = _image_connection(e, push)
    return TraceSplitting(e, image, push, trace)


def _image_connection(e, push):
    """Connection induced on the image of a constant idempotent."""
    A = push.pres
    dom = A.domain
    origin = (0,) * A.nexp
    if any(k != origin for row in e for a in row for k in a.coeffs):
        raise ValueError("image recovery needs an idempotent with constant entries")
    const = [[a.coeffs.get(origin, dom.zero) for a in row] for row in e]
    size = push.rank
    ech = Echelon()
    cols = []
    for j in range(size):
        before = ech.rank
        ech.add({i: const[i][j] for i in range(size) if const[i][j]})
        if ech.rank > before:
            cols.append(j)
    # left inverse L of the column basis P: solve P^T L^T = I
    Pt = Matrix([[const[i][j] for i in range(size)] for j in cols], dom, size)
    L = []
    for i in range(len(cols)):
        sol = solve_linear(Pt, [dom.one if k == i else dom.zero for k in range(len(cols))]).solution
        L.append([A.const(c) for c in sol])
    P = [[e[i][j] for j in cols] for i in range(size)]
    dP = [[partial_derivative(a, 0) for a in row] for row in P]
    return Connection(A, len(cols), [mat_mul(L, mat_add(dP, mat_mul(push.matrices[0], P)))])


def quadratic_as_torus(conn):
    """Transport a connection on ``Torus(1)[y]/(y^2 - x)`` to the ``t``-torus via ``y -> t``.

    ``d/dx = (1 / 2t) d/dt`` so the matrix is multiplied by ``2t``.
    """
    B = conn.pres
    if B.kind != "MonicCover" or B.base.kind != "Torus" or B.deg_m != 2:
        raise PresentationError("expected a quadratic cover of Torus(1)")
    if B.m[1] or B.m[0] != -B.base.gen(0):
        raise PresentationError("only y^2 = x is identified with a torus")
    T = Torus(1, B.domain, B.prime)
    two_t = T.const(2) * T.gen(0)

    def move(b):
        return FringeElement(T, {(2 * k[0] + k[1],): v for k, v in b.coeffs.items()})

    return Connection(T, conn.rank, [[[move(a) * two_t for a in row] for row in conn.matrices[0]]])
