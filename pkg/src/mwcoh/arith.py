"""Coefficient arithmetic and exact linear algebra.

Two coefficient kinds are supported: python ``Fraction`` (the field ``QQ``)
and :class:`PAdic`, p-adic numbers stored in capped absolute precision.
Both support ``+ - * /``, unary minus and truthiness (``bool(x)`` is False
exactly when ``x`` is zero, at precision for p-adics), which is all the
linear algebra below relies on.
"""

from dataclasses import dataclass
from fractions import Fraction
import math

INFINITY = math.inf


class PrecisionExhausted(ArithmeticError):
    """Raised when a p-adic computation has no precision left."""


def _vp_int(n, p):
    if n == 0:
        return INFINITY
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def rational_valuation(q, p):
    """p-adic valuation of a rational number (``INFINITY`` for zero)."""
    q = Fraction(q)
    if q == 0:
        return INFINITY
    return _vp_int(q.numerator, p) - _vp_int(q.denominator, p)


class PAdic:
    """``p**val * unit + O(p**prec)`` with ``prec`` capped at ``cap``.

    ``unit`` is coprime to ``p`` and reduced modulo ``p**(prec - val)``.
    Zero at precision ``prec`` has ``val = INFINITY`` and ``unit = 0``.
    Values are immutable.
    """

    __slots__ = ("p", "cap", "val", "unit", "prec")

    def __init__(self, p, cap, val, unit, prec):
        prec = min(prec, cap)
        if unit == 0 or val >= prec:
            val, unit = INFINITY, 0
        else:
            while unit % p == 0:
                unit //= p
                val += 1
            if val >= prec:
                val, unit = INFINITY, 0
            else:
                unit %= p ** (prec - val)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "cap", cap)
        object.__setattr__(self, "val", val)
        object.__setattr__(self, "unit", unit)
        object.__setattr__(self, "prec", prec)

    def __setattr__(self, name, value):
        raise AttributeError("PAdic values are immutable")

    @classmethod
    def from_rational(cls, q, p, cap):
        q = Fraction(q)
        if q == 0:
            return cls(p, cap, INFINITY, 0, cap)
        num, den = q.numerator, q.denominator
        vn, vd = _vp_int(num, p), _vp_int(den, p)
        num //= p ** vn
        den //= p ** vd
        val = vn - vd
        if val >= cap:
            return cls(p, cap, INFINITY, 0, cap)
        mod = p ** (cap - val)
        return cls(p, cap, val, num * pow(den, -1, mod) % mod, cap)

    # -- helpers ---------------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, PAdic):
            if other.p != self.p:
                raise ValueError("mixing p-adic numbers for different primes")
            return other
        if isinstance(other, (int, Fraction)):
            return PAdic.from_rational(other, self.p, self.cap)
        return NotImplemented

    def is_zero(self):
        return self.val == INFINITY

    def __bool__(self):
        return self.val != INFINITY

    @property
    def precision_loss(self):
        return self.cap - self.prec

    def lift(self):
        """Rational representative ``p**val * unit``."""
        if not self:
            return Fraction(0)
        return Fraction(self.p) ** self.val * self.unit

    # -- arithmetic ------------------------------------------------------
    def __neg__(self):
        if not self:
            return self
        return PAdic(self.p, self.cap, self.val, -self.unit, self.prec)

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        prec = min(self.prec, other.prec)
        if not self:
            return PAdic(self.p, self.cap, other.val, other.unit, prec) if other else PAdic(self.p, self.cap, INFINITY, 0, prec)
        if not other:
            return PAdic(self.p, self.cap, self.val, self.unit, prec)
        m = min(self.val, other.val)
        u = self.unit * self.p ** (self.val - m) + other.unit * self.p ** (other.val - m)
        return PAdic(self.p, self.cap, m, u, prec)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        prec = min(self.prec + other.val, other.prec + self.val)
        if not self and not other:
            prec = self.prec + other.prec
        if not self or not other:
            return PAdic(self.p, self.cap, INFINITY, 0, prec)
        return PAdic(self.p, self.cap, self.val + other.val, self.unit * other.unit, prec)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if not other:
            raise PrecisionExhausted("division by a p-adic zero at precision %d" % other.prec)
        if not self:
            return PAdic(self.p, self.cap, INFINITY, 0, self.prec - other.val)
        rel = min(self.prec - self.val, other.prec - other.val)
        val = self.val - other.val
        mod = self.p ** rel
        u = self.unit * pow(other.unit, -1, mod)
        return PAdic(self.p, self.cap, val, u, val + rel)

    def __rtruediv__(self, other):
        return self._coerce(other) / self

    def __pow__(self, k):
        out = PAdic.from_rational(1, self.p, self.cap)
        base = self
        if k < 0:
            base, k = out / self, -k
        for _ in range(k):
            out = out * base
        return out

    def __eq__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return not (self - other)

    __hash__ = None

    def __repr__(self):
        if not self:
            return "O(%d^%d)" % (self.p, self.prec)
        return "%d*%d^%d + O(%d^%d)" % (self.unit, self.p, self.val, self.p, self.prec)

    def as_rational(self):
        """Small rational congruent to this number at its precision, or ``None``."""
        if not self:
            return Fraction(0)
        q = _reconstruct(self.unit, self.p ** (self.prec - self.val))
        if q is None:
            return None
        return q * Fraction(self.p) ** self.val

    def __str__(self):
        if not self:
            return "0"
        q = _reconstruct(self.unit, self.p ** (self.prec - self.val))
        if q is not None:
            shift = self.p ** abs(self.val)
            if self.val >= 0:
                q = q * shift
                return str(q)
            return "%s@v%d" % (q, self.val)
        mod = self.p ** (self.prec - self.val)
        u = self.unit - mod if self.unit > mod // 2 else self.unit
        if self.val >= 0:
            return "%d" % (u * self.p ** self.val)
        return "%d@v%d" % (u, self.val)


def _reconstruct(u, mod):
    """Rational ``a/b`` with ``a = u b mod mod`` and ``|a|, b <= sqrt(mod/2)``."""
    bound = math.isqrt(mod // 2)
    r0, r1, t0, t1 = mod, u % mod, 0, 1
    while r1 > bound:
        q = r0 // r1
        r0, r1, t0, t1 = r1, r0 - q * r1, t1, t0 - q * t1
    if t1 == 0 or abs(t1) > bound or math.gcd(r1, abs(t1)) != 1:
        return None
    return Fraction(r1 if t1 > 0 else -r1, abs(t1))


def valuation(x, p=None):
    """Valuation of a p-adic number, or of a rational at the prime ``p``.

    Returns ``INFINITY`` for elements indistinguishable from zero.
    """
    if isinstance(x, PAdic):
        return x.val
    if p is None:
        return 0 if x else INFINITY
    return rational_valuation(x, p)


# -- coefficient domains -----------------------------------------------------

@dataclass(frozen=True)
class RationalField:
    name: str = "QQ"

    prime = None
    precision = None

    def __call__(self, x):
        if isinstance(x, PAdic):
            return x.lift()
        return Fraction(x)

    @property
    def zero(self):
        return Fraction(0)

    @property
    def one(self):
        return Fraction(1)

    def valuation(self, x, p=None):
        return valuation(x, p)

    def loss(self, x):
        return 0

    def __str__(self):
        return "QQ"


@dataclass(frozen=True)
class PAdicField:
    """The field of p-adic numbers at absolute precision cap ``precision``."""

    prime: int
    precision: int

    def __post_init__(self):
        if self.prime < 2 or self.precision < 1:
            raise ValueError("need prime >= 2 and precision >= 1")

    def __call__(self, x):
        if isinstance(x, PAdic):
            if x.p != self.prime:
                raise ValueError("wrong prime")
            if x.cap == self.precision:
                return x
            return PAdic(self.prime, self.precision, x.val, x.unit, x.prec)
        return PAdic.from_rational(x, self.prime, self.precision)

    @property
    def zero(self):
        return self(0)

    @property
    def one(self):
        return self(1)

    def valuation(self, x, p=None):
        return valuation(self(x))

    def loss(self, x):
        return x.precision_loss

    def __str__(self):
        return "Qp(%d, %d)" % (self.prime, self.precision)


QQ = RationalField()


def Qp(p, N):
    return PAdicField(p, N)


# -- matrices and linear algebra --------------------------------------------

class Matrix:
    """Dense rectangular matrix over one coefficient domain."""

    def __init__(self, entries, domain=QQ, cols=None):
        self.domain = domain
        self.entries = [[domain(a) for a in row] for row in entries]
        self.rows = len(self.entries)
        self.cols = len(self.entries[0]) if self.entries else (cols or 0)
        if any(len(r) != self.cols for r in self.entries):
            raise ValueError("ragged matrix")

    @classmethod
    def identity(cls, n, domain=QQ):
        return cls([[1 if i == j else 0 for j in range(n)] for i in range(n)], domain, n)

    @classmethod
    def zeros(cls, r, c, domain=QQ):
        return cls([[0] * c for _ in range(r)], domain, c)

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]

    def column(self, j):
        return [row[j] for row in self.entries]

    def columns(self):
        return [self.column(j) for j in range(self.cols)]

    def __matmul__(self, other):
        if self.cols != other.rows:
            raise ValueError("shape mismatch")
        zero = self.domain.zero
        out = []
        for row in self.entries:
            new = []
            for j in range(other.cols):
                acc = zero
                for k, a in enumerate(row):
                    if a:
                        acc = acc + a * other.entries[k][j]
                new.append(acc)
            out.append(new)
        return Matrix(out, self.domain, other.cols)

    def __add__(self, other):
        return Matrix([[a + b for a, b in zip(r, s)] for r, s in zip(self.entries, other.entries)], self.domain, self.cols)

    def __sub__(self, other):
        return Matrix([[a - b for a, b in zip(r, s)] for r, s in zip(self.entries, other.entries)], self.domain, self.cols)

    def __eq__(self, other):
        return (self.rows, self.cols) == (other.rows, other.cols) and all(
            a == b for r, s in zip(self.entries, other.entries) for a, b in zip(r, s))

    __hash__ = None

    def is_zero(self):
        return not any(a for row in self.entries for a in row)

    def __repr__(self):
        return "Matrix(%r)" % (self.entries,)


def _pivot_score(x):
    if isinstance(x, PAdic):
        return (x.val, -x.prec)
    return (0, x.numerator.bit_length() + x.denominator.bit_length())


class Echelon:
    """Incremental reduced echelon form of sparse vectors.

    Vectors are dicts ``column -> value``.  Columns listed in ``tags`` are
    bookkeeping coordinates and never become pivots; they let callers
    recover linear combinations (kernels, particular solutions).
    Pivots are chosen by minimal valuation for p-adic entries.
    """

    def __init__(self, cap=None):
        self.pivots = {}
        self.cap = cap
        self.loss = 0

    def __len__(self):
        return len(self.pivots)

    @property
    def rank(self):
        return len(self.pivots)

    def reduce(self, vec):
        v = {k: a for k, a in vec.items() if a}
        for c in [c for c in v if c in self.pivots]:
            f = v.get(c)
            if not f:
                continue
            for k, a in self.pivots[c].items():
                nv = v.get(k, 0) - f * a
                if nv:
                    v[k] = nv
                else:
                    v.pop(k, None)
            v.pop(c, None)
        return v

    def add(self, vec, is_tag=None):
        """Insert a vector; returns the reduced remainder (empty if dependent)."""
        v = self.reduce(vec)
        cand = [(c, a) for c, a in v.items() if not (is_tag and is_tag(c))]
        if not cand:
            return v
        c, piv = min(cand, key=lambda ca: (_pivot_score(ca[1]), repr(ca[0])))
        if isinstance(piv, PAdic):
            remaining = piv.cap - self.loss
            if piv.val > remaining:
                raise PrecisionExhausted("pivot valuation %d exceeds remaining precision %d" % (piv.val, remaining))
        row = {}
        for k, a in v.items():
            q = a / piv
            if q:
                row[k] = q
        if isinstance(piv, PAdic):
            self.loss = max([self.loss] + [a.precision_loss for a in row.values()])
        for pc, prow in self.pivots.items():
            f = prow.get(c)
            if f:
                for k, a in row.items():
                    nv = prow.get(k, 0) - f * a
                    if nv:
                        prow[k] = nv
                    else:
                        prow.pop(k, None)
                prow.pop(c, None)
        self.pivots[c] = row
        return {}


@dataclass
class LinearSolution:
    solution: list
    kernel: list
    precision_loss: int = 0


def _tag(c):
    return isinstance(c, tuple) and len(c) == 2 and c[0] == "__tag"


def kernel_and_solution(columns, nrows, rhs=None, domain=QQ):
    """Kernel basis of the map with the given columns, and a preimage of ``rhs``.

    ``columns`` is a list of sparse dict vectors (row index -> value).
    """
    ech = Echelon()
    kernel = []
    for j, col in enumerate(columns):
        vec = dict(col)
        vec[("__tag", j)] = domain.one
        rem = ech.add(vec, is_tag=_tag)
        if rem:
            kernel.append(rem)
    sol = None
    if rhs is not None:
        rem = ech.reduce(rhs)
        if not any(not _tag(k) for k in rem):
            sol = [domain.zero] * len(columns)
            for k, a in rem.items():
                sol[k[1]] = -a
    kvecs = []
    for kv in kernel:
        vec = [domain.zero] * len(columns)
        for k, a in kv.items():
            vec[k[1]] = a
        kvecs.append(vec)
    return sol, kvecs, ech.loss


def solve_linear(A, b=None):
    """Solve ``A x = b`` exactly (rationals) or with tracked precision (p-adics).

    Returns a :class:`LinearSolution` whose ``solution`` is a particular
    solution (``None`` when the system is inconsistent) and whose ``kernel``
    is a basis of ``ker A``.  ``b`` may be a Matrix with one column or a list.
    """
    domain = A.domain
    cols = [{i: a for i, a in enumerate(col) if a} for col in A.columns()]
    rhs = None
    if b is not None:
        bl = b.column(0) if isinstance(b, Matrix) else [domain(x) for x in b]
        if len(bl) != A.rows:
            raise ValueError("row count mismatch between A and b")
        rhs = {i: a for i, a in enumerate(bl) if a}
    sol, ker, loss = kernel_and_solution(cols, A.rows, rhs, domain)
    for row in A.entries:
        for a in row:
            if isinstance(a, PAdic):
                loss = max(loss, a.precision_loss)
    return LinearSolution(sol, ker, loss)


def rank(vectors):
    """Rank of a list of sparse dict vectors."""
    ech = Echelon()
    for v in vectors:
        ech.add(v)
    return ech.rank


def matrix_rank(A):
    return rank([{j: a for j, a in enumerate(row) if a} for row in A.entries])
