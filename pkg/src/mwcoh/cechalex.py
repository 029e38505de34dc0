"""Jet Cech-Alexander complex of a module with integrable connection.

Degree ``k`` of the complex consists of module-valued jets in ``k`` blocks
of variables ``xi^1 .. xi^k`` (one block per extra factor of the self
product), truncated at total jet degree ``n``.  The coface omitting the
first point transports through the Taylor map ``m -> sum nabla^[a](m) xi^a``;
the inner cofaces merge adjacent blocks and the last one drops a block.

Module coefficients live in the same truncation boxes as the de Rham engine,
so the comparison between the two complexes is at equal truncation.
"""

from dataclasses import dataclass
from math import comb

from .arith import Echelon
from .dagalg import FringeElement
from .derham import (
    NotStabilized, TruncationLevel, UnsupportedConnection, cohomology, module_box, _margin, _levels,
)
from .diffcalc import cocycle_check, divided_operator, operator_action, taylor_stratification


def _jets(k, n):
    """All jet exponents ``(b_1, .., b_k)`` with total degree <= n."""
    if k == 0:
        return [()]
    out = []
    for head in range(n + 1):
        out += [(head,) + rest for rest in _jets(k - 1, n - head)]
    return out


class CocycleViolation(ArithmeticError):
    def __init__(self, message, degree=None):
        super().__init__(message)
        self.degree = degree


class JetComplex:
    """Sparse differentials of the truncated cosimplicial jet complex (curves only).

    The Taylor transport ``m -> sum_a nabla^[a](m) xi^a`` is read off the
    stratification through the divided-power operators ``d^[a]``.
    """

    def __init__(self, eps, k_max=2, n=None):
        n = eps.order if n is None else n
        if eps.pres.dim != 1:
            raise UnsupportedConnection("jet complex implemented for one-variable presentations")
        if n < 1 or n > eps.order:
            raise ValueError("jet order must lie in 1..%d" % eps.order)
        if k_max < 1:
            raise ValueError("simplicial depth must be positive")
        self.eps = eps
        self.pres = eps.pres
        self.rank = eps.rank
        self.n = n
        self.k_max = k_max
        self._ops = [divided_operator(self.pres, (a,)) for a in range(n + 1)]
        self._taylor = {}

    def taylor(self, j, mon):
        """``[nabla^[a](x^mon e_j) for a = 0..n]`` as sparse vectors."""
        key = (j, mon)
        if key not in self._taylor:
            pres = self.pres
            s = [pres.zero] * self.rank
            s[j] = FringeElement(pres, {mon: pres.domain.one})
            out = [{(j, mon): pres.domain.one}]
            for D in self._ops[1:]:
                img = operator_action(D, s, self.eps)
                out.append({(i, k): v for i, c in enumerate(img) for k, v in c.coeffs.items()})
            self._taylor[key] = out
        return self._taylor[key]

    def basis(self, k, level):
        return [(j, mon, beta) for mon in module_box(self.pres, level)
                for j in range(self.rank) for beta in _jets(k, self.n)]

    def coface(self, i, k, elem):
        """``delta^i`` of the basis element ``x^mon e_j xi^beta`` in degree ``k``."""
        j, mon, beta = elem
        n = self.n
        out = {}
        if i == 0:
            rest = n - sum(beta)
            for a, vec in enumerate(self.taylor(j, mon)[:rest + 1]):
                for (jj, mm), v in vec.items():
                    key = (jj, mm, (a,) + beta)
                    out[key] = out.get(key, 0) + v
        elif i <= k:
            b = beta[i - 1]
            for c in range(b + 1):
                key = (j, mon, beta[:i - 1] + (c, b - c) + beta[i:])
                out[key] = self.pres.domain(comb(b, c))
        else:
            out[(j, mon, beta + (0,))] = self.pres.domain.one
        return out

    def differential(self, k, elem):
        out = {}
        for i in range(k + 2):
            sign = 1 if i % 2 == 0 else -1
            for key, v in self.coface(i, k, elem).items():
                nv = out.get(key, 0) + (v if sign > 0 else -v)
                if nv:
                    out[key] = nv
                else:
                    out.pop(key, None)
        return out

    def check_dd(self, level=4):
        """``d^(k+1) d^k = 0`` on every basis element of the level box, ``k < k_max``."""
        for k in range(self.k_max):
            for e in self.basis(k, level):
                out = {}
                for key, v in self.differential(k, e).items():
                    for key2, w in self.differential(k + 1, key).items():
                        out[key2] = out.get(key2, 0) + v * w
                if any(out.values()):
                    raise CocycleViolation("d o d does not vanish in degree %d" % k, k)
        return True

    def truncated_dims(self, level, margin):
        """``(h0, h1)`` with cocycles in the level box and coboundaries from a wider box."""
        one = self.pres.domain.one
        kern0 = Echelon()
        h0 = 0
        for e in self.basis(0, level):
            v = dict(self.differential(0, e))
            v[("__src", e)] = one
            before = kern0.rank
            kern0.add(v, is_tag=_is_src)
            h0 += kern0.rank == before
        target = self.basis(1, level)
        tset = set(target)
        z = Echelon()
        zdim = 0
        for e in target:
            v = dict(self.differential(1, e))
            v[("__src", e)] = one
            before = z.rank
            z.add(v, is_tag=_is_src)
            zdim += z.rank == before
        full, outside = Echelon(), Echelon()
        for e in self.basis(0, level + margin):
            v = self.differential(0, e)
            full.add(v)
            outside.add({c: a for c, a in v.items() if c not in tset})
        loss = max(kern0.loss, z.loss, full.loss, outside.loss)
        return h0, zdim - (full.rank - outside.rank), loss


def _is_src(c):
    return isinstance(c, tuple) and len(c) == 2 and c[0] == "__src"


@dataclass
class JetCohomology:
    dims: list
    n: int
    stabilization: list
    precision_loss: int = 0


def build_jet_cech(eps, k_max=2, n=None, check_level=4):
    """Jet complex of a stratification after checking its cocycle condition and ``d o d = 0``."""
    rep = cocycle_check(eps)
    if not rep.passed:
        raise CocycleViolation("stratification fails the cocycle identity at degree %d" % rep.failing_degree,
                               rep.failing_degree)
    cx = JetComplex(eps, k_max, n)
    cx.check_dd(check_level)
    return cx


def jet_cohomology(conn, n=3, t=None, levels=None):
    """Degree 0 and 1 cohomology of the jet complex at jet order ``n``."""
    t = t or TruncationLevel()
    if t.k_max < 2:
        raise ValueError("degree-1 cohomology needs the complex through degree 2 (k_max >= 2)")
    cx = JetComplex(taylor_stratification(conn, n), t.k_max, n)
    margin = _margin(conn) + n
    levels = list(levels) if levels else _levels(t)
    table = []
    loss = 0
    for idx, level in enumerate(levels):
        h0, h1, lo = cx.truncated_dims(level, margin)
        loss = max(loss, lo)
        table.append((level, [h0, h1]))
        if idx > 0 and table[-1][1] == table[-2][1]:
            return JetCohomology([h0, h1], n, table[-2:], loss)
    raise NotStabilized("jet cohomology did not stabilize over levels %s" % levels, table)


@dataclass
class H0Strat:
    dim: int
    basis: list
    stable_from: int

    def __int__(self):
        return self.dim


def _h0_at(eps, n, level):
    pres, r = eps.pres, eps.rank
    ops = [divided_operator(pres, (a,)) for a in range(1, n + 1)]
    one = pres.domain.one
    ech = Echelon()
    basis = []
    for mon in module_box(pres, level):
        for j in range(r):
            s = [pres.zero] * r
            s[j] = FringeElement(pres, {mon: one})
            v = {("__src", (j, mon)): one}
            for a, D in enumerate(ops):
                for i, c in enumerate(operator_action(D, s, eps)):
                    for k, x in c.coeffs.items():
                        v[(a, i, k)] = x
            before = ech.rank
            rem = ech.add(v, is_tag=_is_src)
            if ech.rank == before:
                basis.append(rem)
    return basis


def h0_strat(eps, n=None, level=16):
    """Horizontal sections seen by the stratification: kernel of ``eps_n p2 - p1`` on the box."""
    n = eps.order if n is None else n
    if eps.pres.dim != 1:
        raise UnsupportedConnection("h0_strat implemented for one-variable presentations")
    dims = [len(_h0_at(eps, m, level)) for m in range(1, n + 1)]
    basis = _h0_at(eps, n, level)
    stable = n
    while stable > 1 and dims[stable - 2] == dims[-1]:
        stable -= 1
    out = []
    for kv in basis:
        coeffs = [dict() for _ in range(eps.rank)]
        for c, a in kv.items():
            j, mon = c[1]
            coeffs[j][mon] = a
        out.append([FringeElement(eps.pres, c) for c in coeffs])
    return H0Strat(len(basis), out, stable)


@dataclass
class ComparisonReport:
    derham: list
    jets: dict

    @property
    def agree(self):
        return {deg: all(j.dims[deg] == self.derham[deg] for j in self.jets.values()) for deg in (0, 1)}

    def __bool__(self):
        return all(self.agree.values())

    def lines(self):
        out = ["de Rham: %s" % self.derham]
        for n, j in sorted(self.jets.items()):
            out.append("jets n=%d: %s" % (n, j.dims))
        out += ["degree %d: %s" % (d, "equal" if ok else "DIFFER") for d, ok in sorted(self.agree.items())]
        return out


def compare_with_derham(conn, orders=(3, 4), t=None):
    """Compare jet and de Rham cohomology in degrees 0 and 1 at equal truncation."""
    t = t or TruncationLevel()
    dr = cohomology(conn, t)
    levels = [lvl for lvl, _ in dr.stabilization]
    jets = {n: jet_cohomology(conn, n, t, levels) for n in orders}
    return ComparisonReport(dr.dims, jets)
