"""Presented dagger algebras and their truncated ("fringe") elements.

Elements are finite tables ``exponent tuple -> coefficient`` in a normal
form fixed by the presentation, together with an overconvergence
certificate ``(n, c)``: every stored coefficient ``a_k`` satisfies
``v(a_k) >= ceil(|k| / n) - c``.

Raw monomials multiply by adding exponent tuples for every kind:

* ``AffineSpace(n)``  ``(k_1, ..., k_n)``, ``k_i >= 0``
* ``Torus(n)``        ``(k_1, ..., k_n)`` Laurent
* ``LocalizedLine``   ``(i, j)`` meaning ``x**i / f**j``
* ``Hyperelliptic``   ``(i, j, e)`` meaning ``x**i * y**e / f**j`` with ``y**2 = f``
* ``MonicCover``      base exponent followed by the power of ``y``

Normal forms: for the localized kinds ``j >= 1`` forces ``i < deg f``;
hyperelliptic ``e`` is 0 or 1; cover ``y``-degree is below ``deg m``.
"""

from dataclasses import dataclass, field
from fractions import Fraction
import math

from .arith import INFINITY, QQ, PAdic, valuation


class CertificateViolation(ValueError):
    """Coefficients decay slower than every admissible slope."""


class NotInvertible(ArithmeticError):
    pass


class PresentationError(ValueError):
    pass


# -- dense univariate polynomials (low degree first) -----------------------

def _strip(p):
    p = list(p)
    while p and not p[-1]:
        p.pop()
    return p


def poly_add(a, b):
    n = max(len(a), len(b))
    return _strip([(a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0) for i in range(n)])


def poly_mul(a, b):
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] = out[i + j] + x * y
    return _strip(out)


def poly_divmod(a, b):
    a = _strip(a)
    b = _strip(b)
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    q = [0] * max(len(a) - len(b) + 1, 0)
    r = list(a)
    lc = b[-1]
    while len(r) >= len(b) and r:
        c = r[-1] / lc
        s = len(r) - len(b)
        q[s] = c
        for i, y in enumerate(b):
            r[s + i] = r[s + i] - c * y
        r.pop()
        r = _strip(r)
    return _strip(q), r


def poly_deriv(a):
    return _strip([i * a[i] for i in range(1, len(a))])


def poly_resultant(a, b, domain):
    """Resultant over a field by the Euclidean algorithm."""
    a, b = _strip(a), _strip(b)
    res = domain.one
    while True:
        da, db = len(a) - 1, len(b) - 1
        if db < 0:
            return domain.zero
        if db == 0:
            return res * b[0] ** da
        _, r = poly_divmod(a, b)
        dr = len(r) - 1
        if dr < 0:
            return domain.zero
        if (da * db) % 2:
            res = -res
        res = res * b[-1] ** (da - dr)
        a, b = b, r


def poly_discriminant(f, domain):
    f = [domain(c) for c in f]
    d = len(f) - 1
    r = poly_resultant(f, poly_deriv(f), domain)
    sign = -1 if (d * (d - 1) // 2) % 2 else 1
    return sign * r / f[-1]


def _coeff_valuation(x, prime):
    if isinstance(x, PAdic):
        return x.val
    if prime is None:
        return 0 if x else INFINITY
    return valuation(x, prime)


# -- presentations ---------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Presentation:
    """A smooth affine presentation from a fixed menu of kinds."""

    kind: str
    nvars: int = 1
    f: tuple = ()
    base: "Presentation" = None
    m: tuple = ()
    domain: object = QQ
    prime: int = None
    fringe_cap: int = 8
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    # structural equality; PAdic coefficients are not hashable
    def __eq__(self, other):
        if not isinstance(other, Presentation):
            return NotImplemented
        return (self.kind == other.kind and self.nvars == other.nvars
                and self.domain == other.domain
                and len(self.f) == len(other.f) and all(a == b for a, b in zip(self.f, other.f))
                and self.base == other.base
                and len(self.m) == len(other.m) and all(a == b for a, b in zip(self.m, other.m)))

    __hash__ = None

    @property
    def cert_prime(self):
        return self.domain.prime if self.domain.prime is not None else self.prime

    @property
    def dim(self):
        if self.kind in ("AffineSpace", "Torus"):
            return self.nvars
        if self.kind == "MonicCover":
            return self.base.dim
        return 1

    @property
    def nexp(self):
        """Length of exponent tuples."""
        return {"AffineSpace": self.nvars, "Torus": self.nvars, "LocalizedLine": 2,
                "HyperellipticAffine": 3}.get(self.kind) or self.base.nexp + 1

    @property
    def deg_f(self):
        return len(self.f) - 1

    @property
    def deg_m(self):
        return len(self.m) - 1

    def variables(self):
        if self.kind in ("AffineSpace", "Torus"):
            return ["x"] if self.nvars == 1 else ["x%d" % (i + 1) for i in range(self.nvars)]
        if self.kind == "LocalizedLine":
            return ["x"]
        if self.kind == "HyperellipticAffine":
            return ["x", "y"]
        return self.base.variables() + ["y"]

    def describe(self):
        if self.kind in ("AffineSpace", "Torus"):
            return "%s(%d) over %s" % (self.kind, self.nvars, self.domain)
        if self.kind in ("LocalizedLine", "HyperellipticAffine"):
            return "%s(f=%s) over %s" % (self.kind, format_poly(self.f), self.domain)
        return "MonicCover(%s, m=%s)" % (self.base.describe(), " + ".join(
            "(%s)*y^%d" % (c, i) for i, c in enumerate(self.m) if c))

    def size(self, k):
        """Total (absolute) exponent size used by the certificate."""
        if self.kind == "AffineSpace":
            return sum(k)
        if self.kind == "Torus":
            return sum(abs(e) for e in k)
        if self.kind == "LocalizedLine":
            return k[0] + k[1] * self.deg_f
        if self.kind == "HyperellipticAffine":
            return k[0] + k[1] * self.deg_f + k[2] * ((self.deg_f + 1) // 2)
        return self.base.size(k[:-1]) + k[-1]

    # -- constructors of elements --------------------------------------
    def element(self, raw, degree_bound=None, check=False):
        return normal_form(raw, self, degree_bound=degree_bound, check=check)

    def const(self, c):
        c = self.domain(c)
        return FringeElement(self, {(0,) * self.nexp: c} if c else {})

    @property
    def zero(self):
        return FringeElement(self, {})

    @property
    def one(self):
        return self.const(1)

    def gen(self, i=0):
        """The ``i``-th coordinate (``x_i``), or ``y`` for covers/curves when ``i`` is the last."""
        k = [0] * self.nexp
        if self.kind in ("AffineSpace", "Torus"):
            k[i] = 1
        elif self.kind == "LocalizedLine":
            k[0] = 1
        elif self.kind == "HyperellipticAffine":
            k[0 if i == 0 else 2] = 1
        else:
            if i == len(self.variables()) - 1:
                k[-1] = 1
            else:
                return self.lift(self.base.gen(i))
        return FringeElement(self, {tuple(k): self.domain.one})

    @property
    def y(self):
        if self.kind not in ("HyperellipticAffine", "MonicCover"):
            raise PresentationError("%s has no y" % self.kind)
        return self.gen(len(self.variables()) - 1)

    def lift(self, a):
        """Include an element of the base into a cover."""
        if self.kind != "MonicCover":
            raise PresentationError("lift only applies to covers")
        return FringeElement(self, {k + (0,): v for k, v in a.coeffs.items()})

    def coefficient_poly(self, a):
        """Cover element as a list of base elements (coefficients of ``y**e``)."""
        parts = [self.base.zero for _ in range(self.deg_m)]
        buckets = {}
        for k, v in a.coeffs.items():
            buckets.setdefault(k[-1], {})[k[:-1]] = v
        for e, d in buckets.items():
            parts[e] = FringeElement(self.base, d)
        return parts

    def from_coefficient_poly(self, parts):
        out = {}
        for e, b in enumerate(parts):
            for k, v in b.coeffs.items():
                out[k + (e,)] = v
        return FringeElement(self, out)


def _check_unit(c, domain, prime, what):
    if not c:
        raise PresentationError("%s vanishes" % what)
    v = _coeff_valuation(c, domain.prime if domain.prime is not None else prime)
    if v != 0 and (domain.prime is not None or prime is not None):
        raise PresentationError("%s is not a unit at the working precision (valuation %s)" % (what, v))


def AffineSpace(n=1, domain=QQ, prime=None, fringe_cap=8):
    return Presentation("AffineSpace", n, domain=domain, prime=prime, fringe_cap=fringe_cap)


def Torus(n=1, domain=QQ, prime=None, fringe_cap=8):
    return Presentation("Torus", n, domain=domain, prime=prime, fringe_cap=fringe_cap)


def LocalizedLine(f, domain=QQ, prime=None, fringe_cap=8):
    f = tuple(_strip([domain(c) for c in f]))
    if not f:
        raise PresentationError("LocalizedLine needs a nonzero f")
    return Presentation("LocalizedLine", 1, f=f, domain=domain, prime=prime, fringe_cap=fringe_cap)


def HyperellipticAffine(f, domain=QQ, prime=None, fringe_cap=8):
    f = tuple(_strip([domain(c) for c in f]))
    if len(f) - 1 < 3:
        raise PresentationError("hyperelliptic f must have degree >= 3")
    _check_unit(f[-1], domain, prime, "leading coefficient of f")
    disc = poly_discriminant(list(f), domain)
    if not disc:
        raise PresentationError("f is not squarefree")
    _check_unit(disc, domain, prime, "discriminant of f")
    return Presentation("HyperellipticAffine", 1, f=f, domain=domain, prime=prime, fringe_cap=fringe_cap)


def MonicCover(base, m):
    """``base[y] / (m(y))`` for a monic ``m`` with base-element coefficients (low first)."""
    if base.kind not in ("AffineSpace", "Torus") or base.nvars != 1:
        raise PresentationError("covers are supported over AffineSpace(1) and Torus(1)")
    m = [c if isinstance(c, FringeElement) else base.const(c) for c in m]
    while m and not m[-1]:
        m.pop()
    if len(m) < 2 or m[-1] != base.one:
        raise PresentationError("m must be monic of degree >= 1")
    pres = Presentation("MonicCover", base.nvars, base=base, m=tuple(m), domain=base.domain,
                        prime=base.prime, fringe_cap=base.fringe_cap)
    disc = cover_discriminant(pres)
    if not is_unit(disc):
        raise PresentationError("cover is not etale: discriminant %s is not a unit" % disc)
    return pres


# -- elements ----------------------------------------------------------------

class FringeElement:
    """Truncated dagger-algebra element with an overconvergence certificate."""

    __slots__ = ("pres", "coeffs", "_cert", "_verified", "degree_bound", "tail_dropped")

    def __init__(self, pres, coeffs, cert=None, degree_bound=None, tail_dropped=False, verified=False):
        self.pres = pres
        self.coeffs = coeffs
        self.degree_bound = degree_bound
        self.tail_dropped = tail_dropped
        self._cert = cert
        self._verified = verified

    @property
    def cert(self):
        """``(fringe level n, offset c)``; rule-derived values are re-checked on first access."""
        if self._cert is None:
            self._cert = tightest_certificate(self.pres, self.coeffs)
        elif not self._verified and not certificate_holds(self.pres, self.coeffs, self._cert):
            self._cert = tightest_certificate(self.pres, self.coeffs)
        self._verified = True
        return self._cert

    # -- basic protocol ------------------------------------------------
    def __bool__(self):
        return bool(self.coeffs)

    def is_zero(self):
        return not self.coeffs

    def __eq__(self, other):
        if isinstance(other, (int, Fraction, PAdic)):
            other = self.pres.const(other)
        if not isinstance(other, FringeElement):
            return NotImplemented
        return not (self - other).coeffs

    __hash__ = None

    def __repr__(self):
        return "FringeElement(%s)" % self

    def __str__(self):
        return format_element(self)

    def terms(self):
        return sorted(self.coeffs.items())

    def constant(self):
        return self.coeffs.get((0,) * self.pres.nexp, self.pres.domain.zero)

    def is_constant(self):
        z = (0,) * self.pres.nexp
        return all(k == z for k in self.coeffs)

    def max_size(self):
        return max((self.pres.size(k) for k in self.coeffs), default=0)

    def _wrap(self, coeffs, cert=None, other=None):
        bound = self.degree_bound
        dropped = self.tail_dropped
        if other is not None:
            dropped = dropped or other.tail_dropped
            if other.degree_bound is not None:
                bound = other.degree_bound if bound is None else min(bound, other.degree_bound)
        if bound is not None:
            big = [k for k in coeffs if self.pres.size(k) > bound]
            if big:
                dropped = True
                for k in big:
                    del coeffs[k]
        return FringeElement(self.pres, coeffs, cert, bound, dropped)

    def _coerce(self, other):
        if isinstance(other, FringeElement):
            if other.pres is not self.pres and other.pres != self.pres:
                raise PresentationError("elements of different presentations")
            return other
        if isinstance(other, (int, Fraction, PAdic)):
            return self.pres.const(other)
        return None

    # -- ring operations -------------------------------------------------
    def __add__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        out = dict(self.coeffs)
        for k, v in other.coeffs.items():
            nv = out.get(k, 0) + v
            if nv:
                out[k] = nv
            else:
                out.pop(k, None)
        return self._wrap(out, _combine(self, other, max), other)

    __radd__ = __add__

    def __neg__(self):
        return FringeElement(self.pres, {k: -v for k, v in self.coeffs.items()}, self._cert,
                             self.degree_bound, self.tail_dropped, self._verified)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction, PAdic)):
            c = self.pres.domain(other)
            out = {}
            for k, v in self.coeffs.items():
                w = v * c
                if w:
                    out[k] = w
            return self._wrap(out, None)
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        raw = {}
        for k1, v1 in self.coeffs.items():
            for k2, v2 in other.coeffs.items():
                k = tuple(a + b for a, b in zip(k1, k2))
                w = raw.get(k, 0) + v1 * v2
                if w:
                    raw[k] = w
                else:
                    raw.pop(k, None)
        coeffs = _normalize(self.pres, raw)
        return self._wrap(coeffs, _combine(self, other, lambda a, b: a + b), other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction, PAdic)):
            return self * (1 / self.pres.domain(other))
        return self * inverse(other)

    def __pow__(self, k):
        if k < 0:
            return inverse(self) ** (-k)
        out = self.pres.one
        for _ in range(k):
            out = out * self
        return out

    def partial(self, i=0):
        return partial_derivative(self, i)

    def precision_loss(self):
        return max((self.pres.domain.loss(v) for v in self.coeffs.values()), default=0)


# -- certificates --------------------------------------------------------

def _combine(a, b, offset_rule):
    """Rule-based certificate of a sum or product; None when an operand has none yet."""
    if a._cert is None or b._cert is None:
        return None
    return (max(a._cert[0], b._cert[0]), offset_rule(a._cert[1], b._cert[1]))


def _offset(pres, coeffs, n):
    prime = pres.cert_prime
    c = -INFINITY
    for k, v in coeffs.items():
        val = _coeff_valuation(v, prime)
        if val == INFINITY:
            continue
        c = max(c, -(-pres.size(k) // n) - val)
    return 0 if c == -INFINITY else int(c)


def tightest_certificate(pres, coeffs):
    """Smallest fringe level attaining the least offset available below the cap."""
    cap = pres.fringe_cap
    best = _offset(pres, coeffs, cap)
    for n in range(1, cap + 1):
        if _offset(pres, coeffs, n) <= best:
            return (n, best)
    return (cap, best)


def certificate_holds(pres, coeffs, cert):
    n, c = cert
    return _offset(pres, coeffs, n) <= c


def check_certificate(a):
    """Full re-scan of ``a`` against its stored certificate."""
    return certificate_holds(a.pres, a.coeffs, a.cert)


# -- normal forms ------------------------------------------------------------

def _localized_normalize(f, by_j):
    """``{j: poly}`` meaning ``sum poly_j / f**j`` -> normal form with ``deg < deg f`` for j >= 1."""
    out = {}
    js = sorted(by_j, reverse=True)
    pending = {j: _strip(p) for j, p in by_j.items()}
    for j in range(max(js, default=0), 0, -1):
        p = pending.pop(j, [])
        if not p:
            continue
        q, r = poly_divmod(p, list(f))
        if r:
            out[j] = r
        if q:
            pending[j - 1] = poly_add(pending.get(j - 1, []), q)
    if pending.get(0):
        out[0] = pending[0]
    return out


def _normalize(pres, raw):
    kind = pres.kind
    if kind == "AffineSpace":
        for k in raw:
            if min(k, default=0) < 0:
                raise PresentationError("negative exponent %r in AffineSpace" % (k,))
        return {k: v for k, v in raw.items() if v}
    if kind == "Torus":
        return {k: v for k, v in raw.items() if v}
    if kind == "LocalizedLine":
        by_j = {}
        for (i, j), v in raw.items():
            if not v:
                continue
            if i < 0:
                raise PresentationError("x is not inverted in LocalizedLine")
            if j < 0:
                # x**i * f**|j|
                p = [0] * i + [1]
                for _ in range(-j):
                    p = poly_mul(p, list(pres.f))
                by_j[0] = poly_add(by_j.get(0, []), [c * v for c in p])
                continue
            p = by_j.get(j, [])
            p = list(p) + [0] * max(0, i + 1 - len(p))
            p[i] = p[i] + v
            by_j[j] = p
        out = {}
        for j, p in _localized_normalize(pres.f, by_j).items():
            for i, c in enumerate(p):
                if c:
                    out[(i, j)] = c
        return out
    if kind == "HyperellipticAffine":
        parts = {0: {}, 1: {}}
        for (i, j, e), v in raw.items():
            if not v:
                continue
            eps = e % 2
            j2 = j - (e - eps) // 2
            parts[eps][(i, j2)] = parts[eps].get((i, j2), 0) + v
        loc = pres._cache.get("loc")
        if loc is None:
            loc = pres._cache["loc"] = Presentation("LocalizedLine", 1, f=pres.f, domain=pres.domain)
        out = {}
        for eps, r in parts.items():
            for (i, j), c in _normalize(loc, r).items():
                out[(i, j, eps)] = c
        return out
    # MonicCover
    base = pres.base
    by_e = {}
    for k, v in raw.items():
        if not v:
            continue
        if k[-1] < 0:
            raise PresentationError("y is not inverted in a cover presentation")
        d = by_e.setdefault(k[-1], {})
        d[k[:-1]] = d.get(k[:-1], 0) + v
    elems = {e: FringeElement(base, _normalize(base, d)) for e, d in by_e.items()}
    dm = pres.deg_m
    for e in sorted(elems, reverse=True):
        if e < dm:
            break
        c = elems.pop(e)
        for t in range(dm):
            if pres.m[t]:
                elems[e - dm + t] = elems.get(e - dm + t, base.zero) - c * pres.m[t]
    out = {}
    for e, b in elems.items():
        for k, v in b.coeffs.items():
            out[k + (e,)] = v
    return out


def _parse_expression(expr, pres):
    import sympy

    names = pres.variables()
    syms = sympy.symbols(names)
    e = sympy.expand(sympy.sympify(expr, locals=dict(zip(names, syms))))
    raw = {}
    for term in sympy.Add.make_args(e):
        coeff, rest = term.as_coeff_Mul()
        powers = rest.as_powers_dict() if rest != 1 else {}
        exps = [0] * len(names)
        for s, p in powers.items():
            if s not in syms or not p.is_integer:
                raise PresentationError("expression %r uses unknown factor %s" % (expr, s))
            exps[syms.index(s)] += int(p)
        c = Fraction(int(sympy.fraction(coeff)[0]), int(sympy.fraction(coeff)[1]))
        if pres.kind == "HyperellipticAffine":
            key = (exps[0], 0, exps[1])
        elif pres.kind == "LocalizedLine":
            key = (exps[0], 0)
        elif pres.kind == "MonicCover":
            key = tuple(exps)
        else:
            key = tuple(exps)
        raw[key] = raw.get(key, 0) + pres.domain(c)
    if pres.kind == "Torus" or (pres.kind == "MonicCover" and pres.base.kind == "Torus"):
        return raw
    for key in raw:
        if pres.kind == "HyperellipticAffine":
            if key[0] < 0:
                raise PresentationError("x is not inverted")
        elif min(key[:len(key) if pres.kind != "MonicCover" else -1], default=0) < 0:
            raise PresentationError("negative exponent in %s" % pres.kind)
    return raw


def normal_form(e, pres, degree_bound=None, check=True):
    """Rewrite a raw expression into the presentation's normal form.

    ``e`` is a mapping raw exponent tuple -> coefficient, an existing
    element, or a string in the presentation's variables.  With ``check``
    the certificate is required to have offset at most the working
    precision (p-adic coefficients only).
    """
    if isinstance(e, FringeElement):
        raw = dict(e.coeffs)
        degree_bound = e.degree_bound if degree_bound is None else degree_bound
    elif isinstance(e, str):
        raw = _parse_expression(e, pres)
    else:
        raw = {tuple(k): pres.domain(v) for k, v in e.items()}
    coeffs = _normalize(pres, raw)
    dropped = False
    if degree_bound is not None:
        big = [k for k in coeffs if pres.size(k) > degree_bound]
        dropped = bool(big)
        for k in big:
            del coeffs[k]
    cert = tightest_certificate(pres, coeffs)
    limit = pres.domain.precision
    if check and limit is not None and cert[1] > limit:
        raise CertificateViolation(
            "offset %d exceeds precision %d at every fringe level <= %d" % (cert[1], limit, pres.fringe_cap))
    return FringeElement(pres, coeffs, cert, degree_bound, dropped)


# -- derivations -------------------------------------------------------------

def _dy(pres):
    """``dy/dx`` in a cover, via ``m(y) = 0``: ``-(dm/dx)(y) / m'(y)``."""
    if "dy" not in pres._cache:
        y = pres.y
        dm_dx = pres.zero
        mprime = pres.zero
        ypow = pres.one
        for t, c in enumerate(pres.m):
            dm_dx = dm_dx + pres.lift(partial_derivative(c, 0)) * ypow
            if t + 1 < len(pres.m):
                mprime = mprime + pres.lift(pres.m[t + 1]) * (t + 1) * ypow
            ypow = ypow * y
        pres._cache["dy"] = -dm_dx * inverse(mprime)
    return pres._cache["dy"]


def partial_derivative(a, i=0):
    """Coordinate derivative ``d/dx_i``, acting on ``y`` by the chain rule."""
    pres = a.pres
    kind = pres.kind
    raw = {}

    def put(k, v):
        if v:
            w = raw.get(k, 0) + v
            if w:
                raw[k] = w
            else:
                raw.pop(k, None)

    if kind in ("AffineSpace", "Torus"):
        for k, v in a.coeffs.items():
            if k[i]:
                kk = list(k)
                kk[i] -= 1
                put(tuple(kk), v * k[i])
        coeffs = _normalize(pres, raw)
    elif kind in ("LocalizedLine", "HyperellipticAffine"):
        if i != 0:
            raise PresentationError("only d/dx is exposed on curves")
        fp = poly_deriv(list(pres.f))
        for k, v in a.coeffs.items():
            ii, j = k[0], k[1]
            rest = k[2:]
            if ii:
                put((ii - 1, j) + rest, v * ii)
            factor = -j + (Fraction(rest[0], 2) if rest else 0)
            if factor:
                for t, c in enumerate(fp):
                    put((ii + t, j + 1) + rest, v * c * factor)
        coeffs = _normalize(pres, raw)
    else:
        parts = pres.coefficient_poly(a)
        out = pres.zero
        dy = _dy(pres)
        y = pres.y
        ypow = pres.one
        for e, b in enumerate(parts):
            if b:
                out = out + pres.lift(partial_derivative(b, i)) * ypow
                if e:
                    out = out + pres.lift(b) * (ypow_prev * dy) * e
            ypow_prev = ypow
            ypow = ypow * y
        coeffs = out.coeffs
    if a._cert is None:
        return a._wrap(dict(coeffs), None)
    n, c = a._cert
    prime = pres.cert_prime
    d = a.degree_bound if a.degree_bound is not None else max(a.max_size(), 1)
    c += math.ceil(math.log(d, prime)) if prime and d > 1 else 0
    return a._wrap(dict(coeffs), (n, c))


# -- units -------------------------------------------------------------------

def _mul_matrix(pres, u):
    """Matrix over the base of multiplication by ``u`` in the basis ``1, y, ...``."""
    d = pres.deg_m
    cols = []
    yk = pres.one
    for k in range(d):
        cols.append(pres.coefficient_poly(u * yk))
        yk = yk * pres.y
    return [[cols[j][i] for j in range(d)] for i in range(d)]


def ring_det(M, one):
    n = len(M)
    if n == 0:
        return one
    if n == 1:
        return M[0][0]
    total = None
    for j in range(n):
        if not M[0][j]:
            continue
        minor = [row[:j] + row[j + 1:] for row in M[1:]]
        term = M[0][j] * ring_det(minor, one)
        if j % 2:
            term = -term
        total = term if total is None else total + term
    return total if total is not None else one * 0


def cover_norm(u):
    pres = u.pres
    return ring_det(_mul_matrix(pres, u), pres.base.one)


def cover_discriminant(pres):
    mprime = pres.zero
    ypow = pres.one
    for t in range(1, len(pres.m)):
        mprime = mprime + pres.lift(pres.m[t]) * t * ypow
        ypow = ypow * pres.y
    return cover_norm(mprime)


def is_unit(a):
    try:
        inverse(a, strict=True)
        return True
    except NotInvertible:
        return False


def inverse(a, strict=False):
    """Inverse of a unit.  ``strict`` additionally requires unit constants (valuation 0)."""
    pres = a.pres
    kind = pres.kind

    def const_inv(c):
        if not c:
            raise NotInvertible("zero is not invertible")
        if strict and _coeff_valuation(c, pres.cert_prime) not in (0, INFINITY) and pres.cert_prime:
            raise NotInvertible("constant %s is not a unit" % c)
        return 1 / c

    if kind == "MonicCover":
        M = _mul_matrix(pres, a)
        d = len(M)
        det = ring_det(M, pres.base.one)
        dinv = inverse(det, strict)
        # first column of the adjugate gives coordinates of det * a^{-1}
        coords = []
        for i in range(d):
            minor = [row[:i] + row[i + 1:] for r, row in enumerate(M) if r != 0]
            c = ring_det(minor, pres.base.one)
            coords.append(c if i % 2 == 0 else -c)
        inv = pres.from_coefficient_poly([c * dinv for c in coords])
        return inv
    if len(a.coeffs) == 1:
        (k, c), = a.coeffs.items()
        ok = {"AffineSpace": all(e == 0 for e in k), "Torus": True,
              "LocalizedLine": k[0] == 0, "HyperellipticAffine": k[0] == 0}[kind]
        if ok:
            raw = {tuple(-e for e in k): const_inv(c)}
            return FringeElement(pres, _normalize(pres, raw))
    if kind in ("LocalizedLine", "HyperellipticAffine"):
        # polynomial part equal to c * f**k
        if all(k[1] == 0 and (len(k) == 2 or k[2] == 0) for k in a.coeffs):
            p = [0] * (max(k[0] for k in a.coeffs) + 1)
            for k, v in a.coeffs.items():
                p[k[0]] = v
            p = _strip(p)
            power = 0
            while len(p) > 1:
                q, r = poly_divmod(p, list(pres.f))
                if r:
                    raise NotInvertible("%s is not a unit" % a)
                p, power = q, power + 1
            key = (0, power) if kind == "LocalizedLine" else (0, power, 0)
            return FringeElement(pres, {key: const_inv(p[0])})
    raise NotInvertible("%s is not a recognised unit" % a)


# -- formatting --------------------------------------------------------------

def format_poly(f, var="x"):
    terms = []
    for i, c in enumerate(f):
        if c:
            terms.append(_mono(c, "%s^%d" % (var, i) if i > 1 else (var if i == 1 else "")))
    return " + ".join(reversed(terms)) or "0"


def _mono(c, m):
    if not m:
        return str(c)
    if c == 1:
        return m
    if c == -1:
        return "-" + m
    return "%s*%s" % (c, m)


def format_monomial(pres, k):
    kind = pres.kind
    parts = []
    if kind in ("AffineSpace", "Torus"):
        for v, e in zip(pres.variables(), k):
            if e:
                parts.append(v if e == 1 else "%s^%d" % (v, e))
    elif kind in ("LocalizedLine", "HyperellipticAffine"):
        if k[0]:
            parts.append("x" if k[0] == 1 else "x^%d" % k[0])
        if len(k) == 3 and k[2]:
            parts.append("y")
        if k[1]:
            parts.append("f^-%d" % k[1])
    else:
        inner = format_monomial(pres.base, k[:-1])
        if inner:
            parts.append(inner)
        if k[-1]:
            parts.append("y" if k[-1] == 1 else "y^%d" % k[-1])
    return "*".join(parts)


def format_element(a):
    if not a.coeffs:
        return "0"
    return " + ".join(_mono(v, format_monomial(a.pres, k)) for k, v in sorted(a.coeffs.items(), reverse=True))
