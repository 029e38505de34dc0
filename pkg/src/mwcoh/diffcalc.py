"""Connections, Taylor stratifications and divided-power differential operators.

Conventions used throughout the package:

* a connection is ``nabla(s) = ds + sum_i N_i s dx_i``, so ``nabla_i = d/dx_i + N_i``;
* a stratification ``eps`` maps the second pullback to the first one; its
  Taylor matrix is ``eps(xi) = sum_k (1/k!) nabla^k xi^k`` with
  ``nabla^k = nabla_1^{k_1} ... nabla_d^{k_d}`` acting on basis columns;
* ``xi_i`` is the difference of the two pullbacks of ``x_i``.
"""

from dataclasses import dataclass
from itertools import product
from math import comb, factorial

from .arith import PrecisionExhausted
from .dagalg import FringeElement, normal_form, partial_derivative


class OrderExceedsJet(ValueError):
    pass


# -- small matrix helpers over a presentation ---------------------------------

def mat_zero(pres, r, c=None):
    return [[pres.zero for _ in range(r if c is None else c)] for _ in range(r)]


def mat_identity(pres, r):
    return [[pres.one if i == j else pres.zero for j in range(r)] for i in range(r)]


def mat_add(A, B):
    return [[a + b for a, b in zip(ra, rb)] for ra, rb in zip(A, B)]


def mat_sub(A, B):
    return [[a - b for a, b in zip(ra, rb)] for ra, rb in zip(A, B)]


def mat_scale(A, c):
    return [[a * c for a in row] for row in A]


def mat_mul(A, B):
    n, m = len(A), len(B[0]) if B else 0
    out = []
    for i in range(n):
        row = []
        for j in range(m):
            acc = None
            for k in range(len(B)):
                if A[i][k] and B[k][j]:
                    t = A[i][k] * B[k][j]
                    acc = t if acc is None else acc + t
            row.append(acc if acc is not None else A[i][0].pres.zero)
        out.append(row)
    return out


def mat_vec(A, v):
    return [sum((a * x for a, x in zip(row, v) if a and x), row[0].pres.zero) for row in A]


def mat_map(A, fn):
    return [[fn(a) for a in row] for row in A]


def mat_is_zero(A):
    return all(not a for row in A for a in row)


def mat_eq(A, B):
    return mat_is_zero(mat_sub(A, B))


def _as_element(pres, a):
    if isinstance(a, FringeElement):
        return a
    if isinstance(a, (str, dict)):
        return normal_form(a, pres, check=False)
    return pres.const(a)


# -- multi-index helpers -----------------------------------------------------

def multi_indices(dim, n):
    """All multi-indices of length ``dim`` and total degree <= n, by degree."""
    out = [k for k in product(range(n + 1), repeat=dim) if sum(k) <= n]
    return sorted(out, key=lambda k: (sum(k), tuple(-e for e in k)))


def mfact(k):
    out = 1
    for e in k:
        out *= factorial(e)
    return out


def mbinom(k, a):
    out = 1
    for e, f in zip(k, a):
        out *= comb(e, f)
    return out


def madd(a, b):
    return tuple(x + y for x, y in zip(a, b))


def msub(a, b):
    return tuple(x - y for x, y in zip(a, b))


def mleq(a, b):
    return all(x <= y for x, y in zip(a, b))


def divided_derivative(g, k):
    """``partial^[k] g = partial^k g / k!``."""
    out = g
    for i, e in enumerate(k):
        for _ in range(e):
            out = partial_derivative(out, i)
    f = mfact(k)
    return out if f == 1 else out * (1 / g.pres.domain(f))


class _DividedCache:
    """Memoised divided derivatives of one element."""

    def __init__(self, g):
        self.g = g
        self.raw = {(0,) * g.pres.dim: g}

    def _raw(self, k):
        if k not in self.raw:
            i = next(i for i, e in enumerate(k) if e)
            prev = list(k)
            prev[i] -= 1
            self.raw[k] = partial_derivative(self._raw(tuple(prev)), i)
        return self.raw[k]

    def __call__(self, k):
        self._raw(k)
        f = mfact(k)
        v = self.raw[k]
        return v if f == 1 else v * (1 / self.g.pres.domain(f))


# -- connections -------------------------------------------------------------

@dataclass
class Connection:
    """``nabla = d + sum_i N_i dx_i`` on the free module of rank ``rank``."""

    pres: object
    rank: int
    matrices: list

    def __post_init__(self):
        if self.rank < 0:
            raise ValueError("rank must be non-negative")
        if len(self.matrices) != self.pres.dim:
            raise ValueError("need one matrix per coordinate (%d)" % self.pres.dim)
        self.matrices = [[[_as_element(self.pres, a) for a in row] for row in N] for N in self.matrices]
        for N in self.matrices:
            if len(N) != self.rank or any(len(row) != self.rank for row in N):
                raise ValueError("connection matrices must be %dx%d" % (self.rank, self.rank))

    def apply(self, i, s):
        """``nabla_i`` on a vector of elements."""
        N = self.matrices[i]
        return [partial_derivative(sj, i) + sum((N[j][l] * s[l] for l in range(self.rank) if N[j][l] and s[l]),
                                                self.pres.zero)
                for j, sj in enumerate(s)]

    def __eq__(self, other):
        return (isinstance(other, Connection) and self.pres == other.pres and self.rank == other.rank
                and all(mat_eq(a, b) for a, b in zip(self.matrices, other.matrices)))

    def is_integrable(self):
        return all(mat_is_zero(K) for K in curvature(self).values())


def trivial_connection(pres, rank=1):
    return Connection(pres, rank, [mat_zero(pres, rank) for _ in range(pres.dim)])


def kummer_connection(pres, a):
    """Rank one ``d + a dx/x`` on ``Torus(1)``."""
    if pres.kind != "Torus" or pres.nvars != 1:
        raise ValueError("Kummer connections live on Torus(1)")
    return Connection(pres, 1, [[[normal_form({(-1,): a}, pres, check=False)]]])


def constant_connection(pres, M):
    return Connection(pres, len(M), [[[pres.const(a) for a in row] for row in M]])


def curvature(conn):
    """``K_ij = d_i N_j - d_j N_i + N_i N_j - N_j N_i`` for ``i < j``."""
    out = {}
    d = conn.pres.dim
    Ns = conn.matrices
    for i in range(d):
        for j in range(i + 1, d):
            K = mat_sub(mat_map(Ns[j], lambda a: partial_derivative(a, i)),
                        mat_map(Ns[i], lambda a: partial_derivative(a, j)))
            K = mat_add(K, mat_sub(mat_mul(Ns[i], Ns[j]), mat_mul(Ns[j], Ns[i])))
            out[(i, j)] = K
    return out


# -- stratifications ----------------------------------------------------------

@dataclass
class Stratification:
    """Taylor matrix ``eps_n``: multi-index ``k`` -> coefficient matrix of ``xi^k``."""

    pres: object
    rank: int
    order: int
    terms: dict

    def coeff(self, k):
        return self.terms.get(tuple(k)) or mat_zero(self.pres, self.rank)

    def truncate(self, n):
        return Stratification(self.pres, self.rank, n, {k: v for k, v in self.terms.items() if sum(k) <= n})

    def is_normalized(self):
        return mat_eq(self.coeff((0,) * self.pres.dim), mat_identity(self.pres, self.rank))


def identity_stratification(pres, rank, n):
    return Stratification(pres, rank, n, {(0,) * pres.dim: mat_identity(pres, rank)})


def iterated_nabla(conn, n):
    """``{k: nabla^k applied to every basis column}`` for ``|k| <= n`` (column lists)."""
    r, dim, pres = conn.rank, conn.pres.dim, conn.pres
    cols = {(0,) * dim: [[pres.one if i == j else pres.zero for i in range(r)] for j in range(r)]}
    for k in multi_indices(dim, n)[1:]:
        i = next(i for i, e in enumerate(k) if e)
        prev = list(k)
        prev[i] -= 1
        cols[k] = [conn.apply(i, c) for c in cols[tuple(prev)]]
    return cols


def taylor_stratification(conn, n):
    """Stratification ``eps_n(s) = sum_{|k|<=n} nabla^k(s) xi^k / k!``."""
    pres, r = conn.pres, conn.rank
    dom = pres.domain
    if dom.precision is not None:
        for m in range(2, n + 1):
            if dom.valuation(dom(factorial(m))) >= dom.precision:
                raise PrecisionExhausted("division by %d! exhausts precision %d" % (m, dom.precision))
    terms = {}
    for k, cols in iterated_nabla(conn, n).items():
        inv = 1 / dom(mfact(k))
        terms[k] = [[cols[j][i] * inv for j in range(r)] for i in range(r)]
    return Stratification(pres, r, n, terms)


def connection_from_stratification(eps):
    """Connection whose ``N_i`` is the ``xi_i`` coefficient of ``eps``."""
    if eps.order < 1:
        raise ValueError("need jet order >= 1")
    dim = eps.pres.dim
    mats = []
    for i in range(dim):
        k = tuple(1 if t == i else 0 for t in range(dim))
        mats.append(eps.coeff(k))
    return Connection(eps.pres, eps.rank, mats)


@dataclass
class CocycleReport:
    passed: bool
    order: int
    failing_degree: int = None
    failing_index: tuple = None

    def __bool__(self):
        return self.passed


def cocycle_check(eps):
    """Check ``eps(xi' + xi'') = eps(xi') * tau_{xi'}(eps)(xi'')`` through ``eps.order``.

    ``tau_{xi'}`` Taylor-expands matrix entries in ``xi'``.  Returns the
    lowest total degree where the two sides differ, if any.
    """
    pres, r, n = eps.pres, eps.rank, eps.order
    dim = pres.dim
    idx = multi_indices(dim, n)
    caches = {}

    def ddiv(k, i, j, a):
        key = (k, i, j)
        if key not in caches:
            caches[key] = _DividedCache(eps.coeff(k)[i][j])
        return caches[key](a)

    for total in range(n + 1):
        for a in idx:
            for b in idx:
                if sum(a) + sum(b) != total:
                    continue
                lhs = mat_scale(eps.coeff(madd(a, b)), mbinom(madd(a, b), a))
                rhs = mat_zero(pres, r)
                for a1 in idx:
                    if not mleq(a1, a):
                        continue
                    a2 = msub(a, a1)
                    left = eps.coeff(a1)
                    if mat_is_zero(left):
                        continue
                    right = [[ddiv(b, i, j, a2) for j in range(r)] for i in range(r)]
                    rhs = mat_add(rhs, mat_mul(left, right))
                if not mat_eq(lhs, rhs):
                    return CocycleReport(False, n, total, (a, b))
    return CocycleReport(True, n)


# -- differential operators ------------------------------------------------

@dataclass
class DividedPowerOperator:
    """``sum_k a_k partial^[k]`` with coefficients in the dagger algebra."""

    pres: object
    table: dict

    def __post_init__(self):
        self.table = {tuple(k): _as_element(self.pres, a) for k, a in self.table.items()}
        self.table = {k: a for k, a in self.table.items() if a}

    @property
    def order(self):
        return max((sum(k) for k in self.table), default=0)

    def __call__(self, g):
        cache = _DividedCache(g)
        return sum((a * cache(k) for k, a in self.table.items()), self.pres.zero)

    def __eq__(self, other):
        keys = set(self.table) | set(other.table)
        z = self.pres.zero
        return all(self.table.get(k, z) == other.table.get(k, z) for k in keys)


def divided_operator(pres, k, coeff=1):
    return DividedPowerOperator(pres, {tuple(k): coeff})


def identity_operator(pres):
    return DividedPowerOperator(pres, {(0,) * pres.dim: 1})


def compose_operators(D, E):
    """The operator ``f -> D(E(f))``."""
    pres = D.pres
    if E.pres != pres:
        raise ValueError("operators over different presentations")
    out = {}
    for l, b in E.table.items():
        cache = _DividedCache(b)
        for k, a in D.table.items():
            for j in product(*(range(e + 1) for e in k)):
                c = a * cache(msub(k, j))
                if not c:
                    continue
                key = madd(j, l)
                c = c * mbinom(key, j)
                out[key] = out[key] + c if key in out else c
    return DividedPowerOperator(pres, out)


def operator_action(D, s, eps):
    """Action of ``D`` on a module element ``s`` through the Taylor matrix."""
    if D.order > eps.order:
        raise OrderExceedsJet("operator order %d exceeds jet order %d" % (D.order, eps.order))
    pres, r = eps.pres, eps.rank
    s = [_as_element(pres, c) for c in s]
    caches = [_DividedCache(c) for c in s]
    out = [pres.zero for _ in range(r)]
    for k, a in D.table.items():
        for l in product(*(range(e + 1) for e in k)):
            m = msub(k, l)
            em = eps.coeff(m)
            for j in range(r):
                dl = caches[j](l)
                if not dl:
                    continue
                for i in range(r):
                    if em[i][j]:
                        out[i] = out[i] + a * dl * em[i][j]
    return out
