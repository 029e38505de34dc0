"""De Rham cohomology of modules with connection on the supported curves.

Cohomology is computed on truncated modules: sources are the module
monomials of size at most ``level + margin`` and ``H^1`` is measured on the
forms of size at most ``level``.  Dimensions are reported once two
consecutive levels agree.  That agreement is a heuristic signal (labelled as
such in every result), not a proof that the truncated dimensions are final.

``H^1`` representatives are taken from a finite window of monomial forms
(``x^i dx``, ``dx/x``, ``x^i dx/y``, ``x^i dx/f`` ...).  When the window
does not span the truncated cokernel (a resonance), it is enlarged.
"""

from dataclasses import dataclass, field
import random

from .arith import Echelon, PAdic, PrecisionExhausted
from .dagalg import FringeElement, normal_form, partial_derivative
from .diffcalc import Connection


class NotStabilized(RuntimeError):
    def __init__(self, message, table=None):
        super().__init__(message)
        self.table = table or []


class ResonanceError(RuntimeError):
    def __init__(self, message, window=None):
        super().__init__(message)
        self.window = window


class UnsupportedConnection(ValueError):
    pass


@dataclass
class TruncationLevel:
    """Finite surrogate for the limit over strict neighbourhoods."""

    d: int = 16
    N: int = 20
    n: int = 3
    n_jet: int = 4
    k_max: int = 2
    step: int = 4
    max_levels: int = 4
    window_cap: int = 6

    def __post_init__(self):
        for name in ("d", "N", "n", "n_jet", "k_max", "step", "max_levels"):
            if getattr(self, name) <= 0:
                raise ValueError("truncation parameter %s must be positive" % name)


@dataclass
class DeRhamForm:
    """Degree 0 (a module element) or degree 1 (coefficients of ``label``)."""

    pres: object
    degree: int
    coeffs: list
    label: str = ""

    def __post_init__(self):
        if self.degree not in (0, 1):
            raise ValueError("forms of degree 0 or 1 only")
        if self.degree == 1 and not self.label:
            self.label = form_label(self.pres)

    def __str__(self):
        parts = []
        for j, c in enumerate(self.coeffs):
            if not c:
                continue
            e = "e%d" % (j + 1) if len(self.coeffs) > 1 else ""
            body = str(c)
            if self.degree == 1:
                body = render_form_term(c, self.label)
            parts.append(body + ("*" + e if e else ""))
        return " + ".join(parts) or "0"

    def __eq__(self, other):
        return (self.degree == other.degree and len(self.coeffs) == len(other.coeffs)
                and all(a == b for a, b in zip(self.coeffs, other.coeffs)))

    def is_zero(self):
        return not any(self.coeffs)


def form_label(pres):
    return "dx/y" if pres.kind == "HyperellipticAffine" else "dx"


def render_form_term(c, label):
    """Render ``c * label`` readably: ``dx/x``, ``x dx/y``, ``a*x^2 dx``."""
    if len(c.coeffs) == 1:
        (k, v), = c.coeffs.items()
        pres = c.pres
        if pres.kind == "Torus" and pres.nvars == 1 and k == (-1,) and v == 1:
            return "dx/x"
        if pres.kind == "HyperellipticAffine" and k[1] == 0 and k[2] == 0 and v == 1:
            return "dx/y" if k[0] == 0 else ("x dx/y" if k[0] == 1 else "x^%d dx/y" % k[0])
        if pres.kind == "HyperellipticAffine" and k[1] == 1 and k[2] == 1 and v == 1:
            return "dx/f" if k[0] == 0 else ("x dx/f" if k[0] == 1 else "x^%d dx/f" % k[0])
        if pres.kind == "LocalizedLine" and k[1] == 1 and v == 1:
            return "dx/f" if k[0] == 0 else ("x dx/f" if k[0] == 1 else "x^%d dx/f" % k[0])
        if v == 1 and not any(k):
            return label
    s = str(c)
    return "(%s) %s" % (s, label) if " + " in s else "%s %s" % (s, label)


@dataclass
class CohomologyResult:
    dims: list
    basis: list
    stabilization: list
    precision_loss: int = 0
    window: list = field(default_factory=list)
    note: str = "dimensions agree at consecutive truncation levels (stabilization heuristic)"

    def basis_labels(self, degree=1):
        return [str(b) for b in self.basis if getattr(b, "degree", degree) == degree]


@dataclass
class SupportResult:
    dims: list
    restriction_ranks: tuple
    ambient: CohomologyResult = None
    open_part: CohomologyResult = None

    @property
    def connecting_rank(self):
        """Rank of ``H^0(U) -> H^1_Z`` in the long exact sequence."""
        return self.open_part.dims[0] - self.restriction_ranks[0]

    def euler_consistent(self):
        h, u, z = self.ambient.dims, self.open_part.dims, self.dims
        chi = lambda v: sum((-1) ** i * x for i, x in enumerate(v))
        return chi(z) == chi(h) - chi(u)


# -- truncated boxes ---------------------------------------------------------

def module_box(pres, level):
    """Normal-form monomials of size <= level (sorted)."""
    kind = pres.kind
    if kind == "AffineSpace" and pres.nvars == 1:
        return [(i,) for i in range(level + 1)]
    if kind == "Torus" and pres.nvars == 1:
        return [(i,) for i in range(-level, level + 1)]
    if kind == "LocalizedLine":
        df = pres.deg_f
        out = [(i, 0) for i in range(level + 1)]
        if df > 0:
            out += [(i, j) for j in range(1, level // df + 1) for i in range(df) if i + j * df <= level]
        return sorted(out)
    if kind == "HyperellipticAffine":
        df = pres.deg_f
        out = []
        for e in (0, 1):
            for j in range(0, level // df + 1):
                top = level if j == 0 else df - 1
                for i in range(top + 1):
                    k = (i, j, e)
                    if pres.size(k) <= level:
                        out.append(k)
        return sorted(out)
    raise UnsupportedConnection("no one-variable truncation for %s" % pres.describe())


def _entry_span(conn):
    """(min, max) exponent data of connection entries, per presentation kind."""
    lo, hi, jmax, e0 = 0, -1, 0, 0
    for N in conn.matrices:
        for row in N:
            for a in row:
                for k in a.coeffs:
                    if conn.pres.kind in ("AffineSpace", "Torus"):
                        lo, hi = min(lo, k[0]), max(hi, k[0])
                    else:
                        jmax = max(jmax, k[1])
                        if k[1] == 0:
                            e0 = max(e0, k[0] + 1)
    return lo, hi, jmax, e0


def default_window(conn):
    """Window of monomial forms from which H^1 representatives are chosen."""
    pres, r = conn.pres, conn.rank
    lo, hi, jmax, e0 = _entry_span(conn)
    if pres.kind == "AffineSpace":
        mons = [(i,) for i in range(max(hi, 0))]
    elif pres.kind == "Torus":
        mons = [(i,) for i in range(min(lo + 1, -1), max(hi - 1, -1) + 1)]
    elif pres.kind == "LocalizedLine":
        df = pres.deg_f
        mons = [(i, j) for j in range(1, max(jmax, 1) + 1) for i in range(df)] if df else []
        mons += [(i, 0) for i in range(max(e0 - 1, 0))]
    else:
        df = pres.deg_f
        mons = [(i, 0, 0) for i in range(df - 1)] + [(i, 1, 1) for i in range(df)]
        mons += [(i, j, 1) for j in range(2, jmax + 1) for i in range(df)]
    return [(c, k) for k in mons for c in range(r)]


def enlarge_window(conn, window):
    pres, r = conn.pres, conn.rank
    mons = sorted({k for _, k in window})
    if pres.kind == "AffineSpace":
        top = max((k[0] for k in mons), default=-1)
        new = mons + [(top + 1,)]
    elif pres.kind == "Torus":
        if mons:
            new = mons + [(mons[0][0] - 1,), (mons[-1][0] + 1,)]
        else:
            new = [(-1,)]
    elif pres.kind == "LocalizedLine":
        df = pres.deg_f
        jtop = max((k[1] for k in mons), default=0)
        itop = max((k[0] for k in mons if k[1] == 0), default=-1)
        new = mons + [(i, jtop + 1) for i in range(df)] + [(itop + 1, 0)]
    else:
        df = pres.deg_f
        jtop = max((k[1] for k in mons if k[2] == 1), default=0)
        itop = max((k[0] for k in mons if k[1] == 0 and k[2] == 0), default=-1)
        new = mons + [(i, jtop + 1, 1) for i in range(df)] + [(itop + 1, 0, 0)]
        new += [(i, 1, 0) for i in range(df)] if jtop >= 1 else []
    new = sorted(set(new))
    return [(c, k) for k in new for c in range(r)]


class DeRhamSystem:
    """Sparse matrices of ``nabla`` restricted to truncation boxes (one variable)."""

    def __init__(self, conn):
        if conn.pres.dim != 1:
            raise UnsupportedConnection("one-variable engine called on dimension %d" % conn.pres.dim)
        self.conn = conn
        self.pres = conn.pres
        self._cols = {}
        self._ymul = self.pres.y if self.pres.kind == "HyperellipticAffine" else None

    def form_vector(self, coeffs):
        """Sparse vector of a list of coefficient elements (keys ``(component, monomial)``)."""
        out = {}
        for j, c in enumerate(coeffs):
            for k, v in c.coeffs.items():
                out[(j, k)] = v
        return out

    def nabla_coeffs(self, s):
        """``nabla(s)`` as coefficients of the basis form (``dx`` or ``dx/y``)."""
        v = self.conn.apply(0, s)
        if self._ymul is not None:
            v = [c * self._ymul for c in v]
        return v

    def column(self, j, k):
        key = (j, k)
        if key not in self._cols:
            s = [self.pres.zero] * self.conn.rank
            s[j] = FringeElement(self.pres, {k: self.pres.domain.one})
            self._cols[key] = self.form_vector(self.nabla_coeffs(s))
        return self._cols[key]

    def sources(self, level):
        return [(j, k) for k in module_box(self.pres, level) for j in range(self.conn.rank)]

    def image_echelon(self, level, with_tags=False):
        ech = Echelon()
        kernel = []
        for idx, (j, k) in enumerate(self.sources(level)):
            v = dict(self.column(j, k))
            if with_tags:
                v[("__src", (j, k))] = self.pres.domain.one
            rem = ech.add(v, is_tag=_is_src)
            if with_tags and rem:
                kernel.append(rem)
        return ech, kernel


def _is_src(c):
    return isinstance(c, tuple) and len(c) == 2 and c[0] == "__src"


def _margin(conn):
    lo, hi, jmax, e0 = _entry_span(conn)
    pres = conn.pres
    spread = max(abs(lo), abs(hi), 1)
    if pres.kind in ("LocalizedLine", "HyperellipticAffine"):
        spread = max(spread, (jmax + 2) * pres.deg_f + e0)
    return spread + 2


def _loss(ech):
    return ech.loss


def truncated_dims(system, level, window=None):
    """``(h0, h1)`` of the truncated complex plus quotient-basis choice from ``window``."""
    conn, pres = system.conn, system.pres
    margin = _margin(conn)
    target = set(system.sources(level))
    big = system.sources(level + margin)
    ech = Echelon()
    outside = Echelon()
    kernel_ech = Echelon()
    kernel = []
    for (j, k) in big:
        v = system.column(j, k)
        ech.add(v)
        outside.add({c: a for c, a in v.items() if c not in target})
    for (j, k) in system.sources(level):
        v = dict(system.column(j, k))
        v[("__src", (j, k))] = pres.domain.one
        rem = kernel_ech.add(v, is_tag=_is_src)
        if rem:
            kernel.append({c[1]: a for c, a in rem.items()})
    h1 = len(target) + outside.rank - ech.rank
    chosen = []
    if window is not None:
        for w in window:
            before = ech.rank
            ech.add({w: pres.domain.one})
            if ech.rank > before:
                chosen.append(w)
    loss = max(ech.loss, outside.loss, kernel_ech.loss)
    return len(kernel), h1, kernel, chosen, loss


def _vector_to_form(pres, rank, vec, degree):
    coeffs = [dict() for _ in range(rank)]
    for (j, k), a in vec.items():
        coeffs[j][k] = a
    return DeRhamForm(pres, degree, [FringeElement(pres, c) for c in coeffs])


def _levels(t):
    return [t.d + i * t.step for i in range(t.max_levels + 1)]


def cohomology(conn, t=None, levels=None):
    """Cohomology dimensions and representatives of ``nabla``, with a stabilization table."""
    t = t or TruncationLevel()
    if conn.pres.dim != 1:
        return _kunneth_cohomology(conn, t, levels)
    system = DeRhamSystem(conn)
    levels = list(levels) if levels else _levels(t)
    window = default_window(conn)
    table = []
    loss = 0
    for idx, level in enumerate(levels):
        h0, h1, kernel, chosen, lo = truncated_dims(system, level)
        loss = max(loss, lo)
        table.append((level, [h0, h1]))
        if idx > 0 and table[-1][1] == table[-2][1]:
            break
    else:
        raise NotStabilized("dimensions did not stabilize over levels %s" % levels, table)
    level = table[-1][0]
    enlargements = 0
    while True:
        h0, h1, kernel, chosen, lo = truncated_dims(system, level, window)
        if len(chosen) == h1:
            break
        enlargements += 1
        if enlargements > t.window_cap:
            raise ResonanceError("window does not span H^1 after %d enlargements" % t.window_cap, window)
        window = enlarge_window(conn, window)
    basis = [_vector_to_form(conn.pres, conn.rank, kv, 0) for kv in kernel]
    basis += [_vector_to_form(conn.pres, conn.rank, {w: conn.pres.domain.one}, 1) for w in chosen]
    return CohomologyResult([h0, h1], basis, table[-2:] if len(table) >= 2 else table,
                            max(loss, lo), window)


def dr_differential(form, conn):
    """``nabla`` on a degree-0 form."""
    if form.degree != 0:
        raise ValueError("dr_differential takes degree-0 forms")
    pres = conn.pres
    if pres.dim != 1:
        raise UnsupportedConnection("de Rham forms are exposed for curves only")
    system = DeRhamSystem(conn)
    return DeRhamForm(pres, 1, system.nabla_coeffs(form.coeffs))


@dataclass
class ReducedForm:
    reduced: DeRhamForm
    exact: DeRhamForm
    window: list
    precision_loss: int = 0


def reduce_form(form, conn, window=None, t=None):
    """Write ``form = reduced + nabla(exact)`` with ``reduced`` in the window span."""
    if form.degree != 1:
        raise ValueError("reduce_form takes degree-1 forms")
    t = t or TruncationLevel()
    pres = conn.pres
    system = DeRhamSystem(conn)
    vec = system.form_vector(form.coeffs)
    top = max((pres.size(k) for (_, k) in vec), default=0)
    window = window or default_window(conn)
    level = max(top, t.d)
    for attempt in range(t.window_cap + 1):
        margin = _margin(conn)
        ech = Echelon()
        for (j, k) in system.sources(level + margin):
            v = dict(system.column(j, k))
            v[("__src", (j, k))] = pres.domain.one
            ech.add(v, is_tag=_is_src)
        chosen = []
        for w in window:
            v = {w: pres.domain.one, ("__win", w): pres.domain.one}
            before = ech.rank
            ech.add(v, is_tag=lambda c: _is_src(c) or c[0] == "__win")
            if ech.rank > before:
                chosen.append(w)
        rem = ech.reduce(vec)
        if all(_is_src(c) or c[0] == "__win" for c in rem):
            src = {c[1]: -a for c, a in rem.items() if _is_src(c)}
            win = {c[1]: -a for c, a in rem.items() if c[0] == "__win"}
            reduced = _vector_to_form(pres, conn.rank, win, 1)
            exact = _vector_to_form(pres, conn.rank, src, 0)
            check = DeRhamForm(pres, 1, [a + b for a, b in zip(reduced.coeffs, system.nabla_coeffs(exact.coeffs))])
            if not check == form:
                raise ArithmeticError("reduction failed to reconstruct the form")
            return ReducedForm(reduced, exact, window, ech.loss)
        window = enlarge_window(conn, window)
        level += t.step
    raise ResonanceError("form not reducible into the window after %d enlargements" % t.window_cap, window)


# -- several variables: split connections only ----------------------------------

def _split_factors(conn):
    from .dagalg import AffineSpace, Torus

    pres = conn.pres
    if pres.kind not in ("AffineSpace", "Torus"):
        raise UnsupportedConnection("no cohomology engine for %s" % pres.describe())
    maker = AffineSpace if pres.kind == "AffineSpace" else Torus
    line = maker(1, pres.domain, pres.prime)
    factors = []
    for j in range(conn.rank):
        row = []
        for i, N in enumerate(conn.matrices):
            for a in range(conn.rank):
                if a != j and (N[j][a] or N[a][j]):
                    raise UnsupportedConnection("only split (diagonal, separated) connections in several variables")
            entry = N[j][j]
            raw = {}
            for k, v in entry.coeffs.items():
                if any(e for t, e in enumerate(k) if t != i):
                    raise UnsupportedConnection("entry of N_%d depends on other variables" % (i + 1))
                raw[(k[i],)] = v
            row.append(Connection(line, 1, [[[normal_form(raw, line, check=False)]]]))
        factors.append(row)
    return factors


def _kunneth_cohomology(conn, t, levels):
    dim = conn.pres.dim
    total = [0] * (dim + 1)
    table = []
    basis = []
    loss = 0
    for row in _split_factors(conn):
        poly = [1]
        labels = [("", 0)]
        for i, c in enumerate(row):
            res = cohomology(c, t, levels)
            loss = max(loss, res.precision_loss)
            table.append(res.stabilization)
            new = [0] * (len(poly) + 1)
            for a, x in enumerate(poly):
                for b, y in enumerate(res.dims):
                    new[a + b] += x * y
            poly = new
            var = "x%d" % (i + 1)
            reps = [(str(f).replace("x", var), f.degree) for f in res.basis]
            labels = [(" * ".join(s for s in (l, r) if s and s != "1") or "1", d + e)
                      for l, d in labels for r, e in reps]
        basis += labels
        for a, x in enumerate(poly[:dim + 1]):
            total[a] += x
    return CohomologyResult(total, basis, table[-1] if table else [], loss)


# -- cohomology with support -------------------------------------------------

def cohomology_with_support(conn, f, t=None):
    """``H^*_Z`` for ``Z = {f = 0}`` on the affine line via the open/closed sequence."""
    from .dagalg import LocalizedLine

    pres = conn.pres
    if pres.kind != "AffineSpace" or pres.nvars != 1:
        raise UnsupportedConnection("support computations need a connection on AffineSpace(1)")
    t = t or TruncationLevel()
    f = [pres.domain(c) for c in f]
    while f and not f[-1]:
        f.pop()
    U = LocalizedLine(f, pres.domain, pres.prime)

    def restrict(a):
        return FringeElement(U, {(k[0], 0): v for k, v in a.coeffs.items()})

    conn_u = Connection(U, conn.rank, [[[restrict(a) for a in row] for row in conn.matrices[0]]])
    amb = cohomology(conn, t)
    opn = cohomology(conn_u, t)
    # restriction on H^0: rank of the restricted horizontal sections
    sys_u = DeRhamSystem(conn_u)
    r0 = Echelon()
    for b in amb.basis:
        if b.degree == 0:
            r0.add(sys_u.form_vector([restrict(c) for c in b.coeffs]))
    # restriction on H^1: coordinates of restricted classes in the open window basis
    r1 = Echelon()
    win = [w for w in opn.window]
    for b in amb.basis:
        if b.degree == 1:
            form = DeRhamForm(U, 1, [restrict(c) for c in b.coeffs])
            red = reduce_form(form, conn_u, win, t)
            r1.add(sys_u.form_vector(red.reduced.coeffs))
    h0, h1 = amb.dims
    u0, u1 = opn.dims
    k0, k1 = r0.rank, r1.rank
    dims = [h0 - k0, (u0 - k0) + (h1 - k1), u1 - k1]
    return SupportResult(dims, (k0, k1), amb, opn)


# -- Poincare homotopy on a tower of disc algebras ------------------------------

class TowerElement:
    """Family ``(s_0, ..., s_K)`` of ``M``-valued polynomials in ``t``, constant after ``K``.

    Each ``s_k`` is a dict ``power -> tuple`` of coordinates in ``M = domain^m``.
    """

    def __init__(self, domain, m, comps):
        self.domain = domain
        self.m = m
        self.comps = [{r: tuple(v) for r, v in c.items() if any(v)} for c in comps]

    def comp(self, k):
        return self.comps[min(k, len(self.comps) - 1)]

    def map(self, fn):
        return TowerElement(self.domain, self.m, [fn(c) for c in self.comps])

    def __add__(self, other):
        n = max(len(self.comps), len(other.comps))
        return TowerElement(self.domain, self.m, [_padd(self.comp(k), other.comp(k)) for k in range(n)])

    def __neg__(self):
        return self.map(lambda c: {r: tuple(-x for x in v) for r, v in c.items()})

    def __sub__(self, other):
        return self + (-other)

    def __eq__(self, other):
        diff = self - other
        return not any(diff.comps)

    def shift(self):
        """Restriction from the next level: ``(s_1, s_2, ...)``."""
        return TowerElement(self.domain, self.m, [self.comp(k + 1) for k in range(len(self.comps))])


def _padd(a, b):
    out = dict(a)
    for r, v in b.items():
        w = tuple(x + y for x, y in zip(out.get(r, (0,) * len(v)), v))
        out[r] = w
    return {r: v for r, v in out.items() if any(v)}


def _integrate(c, domain):
    return {r + 1: tuple(x / domain(r + 1) for x in v) for r, v in c.items()}


def _differentiate(c, domain):
    return {r - 1: tuple(x * r for x in v) for r, v in c.items() if r > 0}


def integral(s):
    """Integration ``t^r -> t^(r+1)/(r+1)``, landing one level down."""
    return s.shift().map(lambda c: _integrate(c, s.domain))


def disc_derivative(s):
    return s.map(lambda c: _differentiate(c, s.domain))


def tower_difference(s):
    """``(d s)_k = s_{k+1} - s_k``."""
    return s.shift() - s


def section_of_evaluation(s):
    """``i o p`` one level down: constant family with value ``s_{k+1}(0)``."""
    return s.shift().map(lambda c: {0: c[0]} if 0 in c else {})


@dataclass
class HomotopyReport:
    results: dict
    precision_loss: int = 0

    @property
    def passed(self):
        return sum(self.results.values())

    def __bool__(self):
        return all(self.results.values())

    def summary(self):
        return "%d/%d identities pass" % (self.passed, len(self.results))


def poincare_homotopy_check(s):
    """Check ``d I - I d = 0``, ``D I - I D = i p`` and ``D I = Id + d`` on ``s``."""
    I, D, d, ip = integral, disc_derivative, tower_difference, section_of_evaluation
    res = {
        "d*int - int*d = 0": (d(I(s)) - I(d(s))) == TowerElement(s.domain, s.m, [{}]),
        "D*int - int*D = i*p": (D(I(s)) - I(D(s))) == ip(s),
        "D*int = Id + d": D(I(s)) == s + d(s),
    }
    loss = 0
    for c in I(s).comps:
        for v in c.values():
            for x in v:
                if isinstance(x, PAdic):
                    loss = max(loss, x.precision_loss)
    return HomotopyReport(res, loss)


def random_tower_element(domain, rng=None, m=2, levels=4, degree=8, bound=50):
    rng = rng or random.Random(0)
    comps = []
    for _ in range(levels):
        comps.append({r: tuple(domain(rng.randint(-bound, bound)) for _ in range(m)) for r in range(degree + 1)})
    return TowerElement(domain, m, comps)
