"""Command-line front end: declarative job files in, reports out.

Job file grammar (UTF-8)::

    # comment
    [job]
    command = cohomology          # see COMMANDS
    output = report.txt           # optional

    [presentation]
    kind = Torus                  # AffineSpace | Torus | LocalizedLine | HyperellipticAffine
    n = 1
    f = -1:1 1:3                  # polynomial terms coef:exp
    coefficients = 5              # a prime, or "rational"
    precision = 20

    [connection]
    kind = matrix                 # trivial | kummer | matrix
    rank = 2
    N1 = 1:1, 1:0 1:2; 0, 2       # entries split by ",", rows by ";"

    [truncation]
    d = 16
    N = 20
    n = 3
    n_jet = 4
    k_max = 2

Scalars are ``num``, ``num/den`` or ``num@vN`` (meaning ``num * p^N``).
An entry is either whitespace-separated terms ``coef:e1[:e2..]`` (raw
exponents of the presentation) or a polynomial expression such as
``1/2*x^-1``.  Several ``[job]`` blocks may share one file.

Reports list the inputs, dimensions, basis representatives, stabilization
table, precision loss and one pass/fail line per check.  ``--format machine``
emits the same ``[section]`` / ``key = value`` grammar.
"""

import argparse
import os
import random
import re
import sys
from dataclasses import dataclass, field
from fractions import Fraction

from .arith import QQ, PAdicField, PrecisionExhausted
from .dagalg import (
    AffineSpace, CertificateViolation, HyperellipticAffine, LocalizedLine, PresentationError, Torus,
    format_element, normal_form,
)
from .derham import (
    NotStabilized, ResonanceError, TruncationLevel, UnsupportedConnection, cohomology,
    cohomology_with_support, poincare_homotopy_check, random_tower_element,
)
from .diffcalc import Connection, cocycle_check, kummer_connection, taylor_stratification, trivial_connection

COMMANDS = ("cohomology", "support", "jets", "compare", "pushforward", "pullback",
            "descend", "amitsur", "roos", "homotopy")

EXIT_PASS, EXIT_FAIL, EXIT_INPUT, EXIT_UNSTABLE = 0, 1, 2, 3

TRUNCATION_KEYS = ("d", "N", "n", "n_jet", "k_max")


class ParseError(ValueError):
    def __init__(self, message, line=None, col=None):
        loc = "line %d, column %d: " % (line, col) if line is not None else ""
        super().__init__(loc + message)
        self.line = line
        self.col = col


@dataclass
class Value:
    text: str
    line: int
    col: int

    def fail(self, message):
        raise ParseError(message, self.line, self.col)

    def integer(self):
        try:
            return int(self.text)
        except ValueError:
            self.fail("expected an integer, got %r" % self.text)


@dataclass
class Section:
    name: str
    line: int
    values: dict = field(default_factory=dict)

    def get(self, key, default=None):
        return self.values.get(key, default)

    def require(self, key):
        if key not in self.values:
            raise ParseError("section [%s] needs key %r" % (self.name, key), self.line, 1)
        return self.values[key]


@dataclass
class JobSpec:
    command: str
    sections: dict
    line: int
    output: str = None

    def section(self, name, required=True):
        if name not in self.sections:
            if required:
                raise ParseError("job %s needs a [%s] section" % (self.command, name), self.line, 1)
            return Section(name, self.line)
        return self.sections[name]


_SECTION = re.compile(r"^\[([A-Za-z_][A-Za-z0-9_]*)\]$")
_KEY = re.compile(r"^[A-Za-z_][A-Za-z0-9_.]*$")


def parse_jobs(text):
    """Split a job file into :class:`JobSpec` objects (one per ``[job]`` block)."""
    jobs = []
    current = None
    section = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        indent = len(line) - len(line.lstrip())
        body = line.strip()
        if body.startswith("["):
            m = _SECTION.match(body)
            if not m:
                raise ParseError("malformed section header %r" % body, lineno, indent + 1)
            name = m.group(1)
            if name == "job":
                current = {"job": Section("job", lineno)}
                jobs.append(current)
            elif current is None:
                raise ParseError("section [%s] before any [job]" % name, lineno, indent + 1)
            elif name in current:
                raise ParseError("duplicate section [%s]" % name, lineno, indent + 1)
            else:
                current[name] = Section(name, lineno)
            section = current[name]
            continue
        if section is None:
            raise ParseError("key outside of a section", lineno, indent + 1)
        if "=" not in body:
            raise ParseError("expected 'key = value'", lineno, indent + 1)
        key, _, value = body.partition("=")
        key = key.strip()
        if not _KEY.match(key):
            raise ParseError("invalid key %r" % key, lineno, indent + 1)
        if key in section.values:
            raise ParseError("duplicate key %r" % key, lineno, indent + 1)
        vcol = line.index("=") + 2 + (len(value) - len(value.lstrip()))
        section.values[key] = Value(value.strip(), lineno, vcol)
    out = []
    for secs in jobs:
        job = secs["job"]
        cmd = job.require("command")
        if cmd.text not in COMMANDS:
            cmd.fail("unknown command %r (expected one of %s)" % (cmd.text, ", ".join(COMMANDS)))
        output = job.get("output")
        out.append(JobSpec(cmd.text, secs, job.line, output.text if output else None))
    if not out:
        raise ParseError("no [job] section found", 1, 1)
    return out


# -- descriptors -------------------------------------------------------------------

_SCALAR = re.compile(r"^([+-]?\d+)(?:/(\d+))?(?:@v([+-]?\d+))?$")


def parse_scalar(value, domain, text=None):
    text = value.text if text is None else text
    m = _SCALAR.match(text)
    if not m:
        value.fail("malformed scalar %r (expected num, num/den or num@vN)" % text)
    num, den, shift = m.group(1), m.group(2), m.group(3)
    if den is not None and int(den) == 0:
        value.fail("zero denominator in %r" % text)
    q = Fraction(int(num), int(den or 1))
    if shift is not None:
        if domain.prime is None:
            value.fail("valuation tokens need p-adic coefficients")
        q *= Fraction(domain.prime) ** int(shift)
    return domain(q)


def parse_domain(sec):
    coeff = sec.get("coefficients")
    if coeff is None or coeff.text == "rational":
        return QQ
    p = coeff.integer()
    if p < 2 or any(p % q == 0 for q in range(2, int(p ** 0.5) + 1)):
        coeff.fail("coefficients must be a prime or 'rational'")
    prec = sec.get("precision")
    N = prec.integer() if prec else int(os.environ.get("MWCOH_PRECISION", "20"))
    if N < 1:
        (prec or coeff).fail("precision must be positive")
    return PAdicField(p, N)


def parse_poly(value, domain):
    coeffs = {}
    for tok in value.text.split():
        c, _, e = tok.partition(":")
        if e and not re.match(r"^\d+$", e):
            value.fail("malformed exponent in term %r" % tok)
        coeffs[int(e or 0)] = coeffs.get(int(e or 0), domain.zero) + parse_scalar(value, domain, c)
    if not coeffs:
        value.fail("empty polynomial")
    out = [domain.zero] * (max(coeffs) + 1)
    for e, c in coeffs.items():
        out[e] = c
    return out


def build_presentation(sec):
    domain = parse_domain(sec)
    kind = sec.require("kind")
    try:
        if kind.text in ("AffineSpace", "Torus"):
            n = sec.get("n")
            n = n.integer() if n else 1
            if n < 1:
                sec.get("n").fail("n must be positive")
            return (AffineSpace if kind.text == "AffineSpace" else Torus)(n, domain)
        if kind.text in ("LocalizedLine", "HyperellipticAffine"):
            f = parse_poly(sec.require("f"), domain)
            return (LocalizedLine if kind.text == "LocalizedLine" else HyperellipticAffine)(f, domain)
    except PresentationError as exc:
        kind.fail("unsupported presentation: %s" % exc)
    kind.fail("unsupported presentation kind %r" % kind.text)


def parse_entry(value, text, pres):
    text = text.strip()
    if not text:
        value.fail("empty matrix entry")
    if ":" in text or _SCALAR.match(text):
        raw = {}
        for tok in text.split():
            parts = tok.split(":")
            c = parse_scalar(value, pres.domain, parts[0])
            exps = parts[1:] or ["0"]
            if not all(re.match(r"^[+-]?\d+$", e) for e in exps):
                value.fail("malformed exponent in term %r" % tok)
            exps = [int(e) for e in exps] + [0] * (pres.nexp - len(exps))
            if len(exps) != pres.nexp:
                value.fail("term %r has too many exponents" % tok)
            raw[tuple(exps)] = raw.get(tuple(exps), pres.domain.zero) + c
        return normal_form(raw, pres, check=False)
    try:
        return normal_form(text, pres, check=False)
    except (PresentationError, ValueError, TypeError, SyntaxError) as exc:
        value.fail("cannot parse entry %r: %s" % (text, exc))
    except Exception as exc:  # sympy raises its own tokenizer errors
        value.fail("cannot parse entry %r: %s" % (text, exc))


def parse_matrix(value, pres, rank):
    rows = [r for r in value.text.split(";")]
    if len(rows) != rank:
        value.fail("expected %d rows, got %d" % (rank, len(rows)))
    out = []
    for r in rows:
        entries = r.split(",")
        if len(entries) != rank:
            value.fail("expected %d entries per row, got %d" % (rank, len(entries)))
        out.append([parse_entry(value, e, pres) for e in entries])
    return out


def build_connection(sec, pres):
    kind = sec.get("kind")
    kind = kind.text if kind else "matrix"
    rank = sec.get("rank")
    rank = rank.integer() if rank else 1
    if rank < 0:
        sec.get("rank").fail("rank must be non-negative")
    if kind == "trivial":
        return trivial_connection(pres, rank)
    if kind == "kummer":
        if pres.kind != "Torus" or pres.nvars != 1:
            sec.require("kind").fail("kummer connections need Torus(1)")
        return kummer_connection(pres, parse_scalar(sec.require("a"), pres.domain))
    if kind != "matrix":
        sec.require("kind").fail("unknown connection kind %r" % kind)
    mats = [parse_matrix(sec.require("N%d" % (i + 1)), pres, rank) for i in range(pres.dim)]
    return Connection(pres, rank, mats)


def build_truncation(job, sweep=None):
    sec = job.section("truncation", required=False)
    t = TruncationLevel()
    if sec.values:
        for key in TRUNCATION_KEYS:
            sec.require(key)
        extra = set(sec.values) - set(TRUNCATION_KEYS) - {"step", "max_levels"}
        if extra:
            v = sec.values[sorted(extra)[0]]
            v.fail("unknown truncation key %r" % sorted(extra)[0])
        kw = {k: v.integer() for k, v in sec.values.items()}
        try:
            t = TruncationLevel(**kw)
        except ValueError as exc:
            raise ParseError(str(exc), sec.line, 1)
    levels = sweep or None
    return t, levels


# -- reports ------------------------------------------------------------------------

@dataclass
class Report:
    command: str
    inputs: list = field(default_factory=list)
    results: list = field(default_factory=list)
    checks: list = field(default_factory=list)
    status: int = EXIT_PASS

    def result(self, key, value):
        self.results.append((key, value))

    def check(self, name, ok):
        self.checks.append((name, bool(ok)))
        if not ok and self.status == EXIT_PASS:
            self.status = EXIT_FAIL

    def render(self, fmt="table"):
        status = {EXIT_PASS: "pass", EXIT_FAIL: "fail", EXIT_INPUT: "input-error",
                  EXIT_UNSTABLE: "not-stabilized"}[self.status]
        if fmt == "machine":
            lines = ["[report]", "command = %s" % self.command, "status = %s" % status, "[inputs]"]
            lines += ["%s = %s" % kv for kv in self.inputs]
            lines.append("[result]")
            lines += ["%s = %s" % kv for kv in self.results]
            lines.append("[checks]")
            lines += ["%s = %s" % (n, "pass" if ok else "fail") for n, ok in self.checks]
            return "\n".join(lines) + "\n"
        width = max([len(k) for k, _ in self.inputs + self.results] + [8])
        lines = ["== %s ==" % self.command, "inputs:"]
        lines += ["  %-*s  %s" % (width, k, v) for k, v in self.inputs]
        lines.append("results:")
        lines += ["  %-*s  %s" % (width, k, v) for k, v in self.results]
        lines.append("checks:")
        lines += ["  [%s] %s" % ("PASS" if ok else "FAIL", n) for n, ok in self.checks]
        lines.append("status: %s" % status)
        return "\n".join(lines) + "\n"


def _dims(v):
    return " ".join(str(x) for x in v)


def _echo(job, report):
    for name, sec in job.sections.items():
        for k, v in sec.values.items():
            report.inputs.append(("%s.%s" % (name, k), v.text))


def _cohomology_lines(report, res):
    report.result("dims", _dims(res.dims))
    seen = {}
    for b in res.basis:
        label, deg = b if isinstance(b, tuple) else (str(b), b.degree)
        seen[deg] = seen.get(deg, 0) + 1
        report.result("basis.H%d.%d" % (deg, seen[deg]), label)
    for entry in res.stabilization:
        if isinstance(entry, tuple):
            report.result("stabilization.level%d" % entry[0], _dims(entry[1]))
    report.result("precision_loss", res.precision_loss)
    report.result("note", res.note)


# -- commands -------------------------------------------------------------------------

def _cmd_cohomology(job, report, t, levels, rng):
    pres = build_presentation(job.section("presentation"))
    conn = build_connection(job.section("connection"), pres)
    res = cohomology(conn, t, levels)
    _cohomology_lines(report, res)
    report.check("stabilized at consecutive levels", True)
    if pres.dim > 1:
        report.check("integrable", conn.is_integrable())


def _cmd_support(job, report, t, levels, rng):
    pres = build_presentation(job.section("presentation"))
    conn = build_connection(job.section("connection"), pres)
    f = parse_poly(job.section("support").require("f"), pres.domain)
    res = cohomology_with_support(conn, f, t)
    report.result("dims", _dims(res.dims))
    report.result("ambient_dims", _dims(res.ambient.dims))
    report.result("open_dims", _dims(res.open_part.dims))
    report.result("restriction_ranks", _dims(res.restriction_ranks))
    report.check("euler characteristic additive", res.euler_consistent())


def _cmd_jets(job, report, t, levels, rng):
    from .cechalex import h0_strat, jet_cohomology

    pres = build_presentation(job.section("presentation"))
    conn = build_connection(job.section("connection"), pres)
    jc = jet_cohomology(conn, t.n, t, levels)
    report.result("jet_order", t.n)
    report.result("dims", _dims(jc.dims))
    for lvl, dims in jc.stabilization:
        report.result("stabilization.level%d" % lvl, _dims(dims))
    eps = taylor_stratification(conn, t.n)
    rep = cocycle_check(eps)
    report.check("stratification cocycle", rep.passed)
    report.check("h0 from stratification equals jet h0", h0_strat(eps, t.n).dim == jc.dims[0])


def _cmd_compare(job, report, t, levels, rng):
    from .cechalex import compare_with_derham

    pres = build_presentation(job.section("presentation"))
    conn = build_connection(job.section("connection"), pres)
    rep = compare_with_derham(conn, (t.n, t.n_jet), t)
    report.result("derham_dims", _dims(rep.derham))
    for n, j in sorted(rep.jets.items()):
        report.result("jet_dims.n%d" % n, _dims(j.dims))
    for deg, ok in sorted(rep.agree.items()):
        report.check("degree %d agrees" % deg, ok)


def _build_cover(job):
    from .functor import kummer_map, quadratic_cover

    sec = job.section("cover")
    domain = parse_domain(sec)
    kind = sec.require("kind")
    if kind.text == "quadratic":
        return "quadratic", quadratic_cover(domain)
    if kind.text == "kummer":
        m = sec.require("m").integer()
        if m < 1:
            sec.require("m").fail("m must be positive")
        return "kummer", (kummer_map(m, domain), None)
    kind.fail("unknown cover kind %r (quadratic or kummer)" % kind.text)


def _cmd_pushforward(job, report, t, levels, rng):
    from .functor import kummer_residues, pushforward_finite, quadratic_as_torus

    kind, (phi, action) = _build_cover(job)
    conn = build_connection(job.section("connection"), phi.target)
    push = pushforward_finite(conn, phi)
    report.result("rank", push.rank)
    res = kummer_residues(push)
    if res is not None:
        report.result("kummer_summands", " ".join(str(a) for a in res))
    up = cohomology(quadratic_as_torus(conn) if kind == "quadratic" else conn, t, levels)
    down = cohomology(push, t, levels)
    report.result("upstairs_dims", _dims(up.dims))
    report.result("pushforward_dims", _dims(down.dims))
    report.check("rank multiplicativity", push.rank == conn.rank * phi.witness.degree)
    report.check("cohomology invariance", up.dims == down.dims)


def _cmd_pullback(job, report, t, levels, rng):
    from .functor import pullback_module

    kind, (phi, action) = _build_cover(job)
    if kind != "kummer":
        job.section("cover").require("kind").fail("pullback jobs use a kummer cover")
    conn = build_connection(job.section("connection"), phi.source)
    pb = pullback_module(conn, phi)
    for i, row in enumerate(pb.matrices[0]):
        report.result("N.row%d" % (i + 1), ", ".join(format_element(a) for a in row))
    res = cohomology(pb, t, levels)
    report.result("dims", _dims(res.dims))
    report.check("integrable", pb.is_integrable())


def _cmd_descend(job, report, t, levels, rng):
    from .descent import (canonical_datum, check_cocycle, descend, roundtrip_check, swap_branch_datum)

    kind, (phi, action) = _build_cover(job)
    if kind != "quadratic":
        job.section("cover").require("kind").fail("descend jobs use the quadratic cover")
    sec = job.section("datum")
    dkind = sec.require("kind")
    if dkind.text == "random":
        count = sec.get("count")
        count = count.integer() if count else 10
        ok = [roundtrip_check(phi, rng.randint(1, 3), rng) for _ in range(count)]
        report.result("roundtrips", "%d/%d" % (sum(ok), count))
        report.check("descend after canonical datum is the identity", all(ok))
        return
    if dkind.text == "canonical":
        rank = sec.get("rank")
        D = canonical_datum(phi, rank.integer() if rank else 1, None)
    elif dkind.text == "swap":
        D = swap_branch_datum(phi)
    else:
        dkind.fail("unknown datum kind %r (canonical, swap or random)" % dkind.text)
    D.connection = trivial_connection(phi.target, D.rank)
    coc = check_cocycle(D)
    report.check("cocycle identity", coc.passed)
    if not coc.passed:
        report.result("offending", str(coc.offending))
        return
    out = descend(D, check=False)
    report.result("rank", out.rank)
    for j in range(out.rank):
        report.result("section.%d" % (j + 1), ", ".join(format_element(a) for a in (r[j] for r in out.basis)))
    if out.connection is not None:
        for i, row in enumerate(out.connection.matrices[0]):
            report.result("N.row%d" % (i + 1), ", ".join(format_element(a) for a in row))
    report.check("base extension recovers M", out.base_extension_ok)


def _cmd_amitsur(job, report, t, levels, rng):
    from .descent import FiniteAlgebra, amitsur_complex

    sec = job.section("cover")
    kind = sec.require("kind")
    length = sec.get("length")
    length = length.integer() if length else 3
    if kind.text == "split":
        k = sec.require("k").integer()
        alg = FiniteAlgebra.split(k, parse_domain(sec))
    else:
        _, (phi, _) = _build_cover(job)
        alg = FiniteAlgebra.from_ring_map(phi)
    rank = sec.get("module_rank")
    rank = rank.integer() if rank else 1
    rep = amitsur_complex(alg, rank, length)
    report.result("dims", _dims(rep.dims))
    report.check("H0 has the rank of M", rep.dims[0] == rank)
    report.check("exact in degrees 1..%d" % (length - 1), rep.exact_in(range(1, length)))


def _cmd_roos(job, report, t, levels, rng):
    from . import descent

    sec = job.section("tower")
    kind = sec.require("kind")
    depth = sec.require("depth").integer()
    dim = sec.get("dim")
    dim = dim.integer() if dim else 1
    makers = {
        "constant": lambda: descent.constant_tower(dim, depth),
        "zero": lambda: descent.zero_tower(dim, depth),
        "multiplication": lambda: descent.multiplication_tower(depth),
        "projection": lambda: descent.projection_tower(depth),
        "surjective": lambda: descent.random_surjective_tower(depth, rng),
    }
    if kind.text not in makers:
        kind.fail("unknown tower kind %r" % kind.text)
    if depth < 2:
        sec.require("depth").fail("depth must be at least 2")
    tower = makers[kind.text]()
    rep = descent.roos_complex(tower)
    ml = descent.mittag_leffler_check(tower)
    report.result("lim", rep.lim)
    report.result("lim1", rep.lim1)
    report.result("mittag_leffler", "yes" if ml else "no")
    report.check("Mittag-Leffler implies lim1 = 0", (not ml) or rep.lim1 == 0)


def _cmd_homotopy(job, report, t, levels, rng):
    sec = job.section("homotopy", required=False)
    domain = parse_domain(sec)
    degree = sec.get("degree")
    degree = degree.integer() if degree else 8
    count = sec.get("count")
    count = count.integer() if count else 1
    totals = {}
    loss = 0
    for _ in range(count):
        rep = poincare_homotopy_check(random_tower_element(domain, rng, degree=degree))
        loss = max(loss, rep.precision_loss)
        for name, ok in rep.results.items():
            totals[name] = totals.get(name, True) and ok
    passed = sum(totals.values())
    report.result("samples", count)
    report.result("summary", "%d/%d identities pass" % (passed, len(totals)))
    report.result("precision_loss", loss)
    for name, ok in totals.items():
        report.check(name, ok)


DISPATCH = {name: globals()["_cmd_" + name] for name in COMMANDS}


def run_job(job, seed=0, sweep=None):
    """Run one job; returns a :class:`Report` with its exit status."""
    report = Report(job.command)
    _echo(job, report)
    rng = random.Random(seed)
    try:
        t, levels = build_truncation(job, sweep)
        DISPATCH[job.command](job, report, t, levels, rng)
    except ParseError as exc:
        report.result("error", str(exc))
        report.status = EXIT_INPUT
    except NotStabilized as exc:
        report.result("error", "not stabilized: %s" % exc)
        for lvl, dims in exc.table:
            report.result("stabilization.level%d" % lvl, _dims(dims))
        report.status = EXIT_UNSTABLE
    except (PresentationError, UnsupportedConnection, CertificateViolation) as exc:
        report.result("error", "%s: %s" % (type(exc).__name__, exc))
        report.status = EXIT_INPUT
    except (PrecisionExhausted, ResonanceError, ArithmeticError, ValueError) as exc:
        report.result("error", "%s in %s job: %s" % (type(exc).__name__, job.command, exc))
        report.status = EXIT_FAIL
    return report


def _sweep(text):
    try:
        levels = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError("truncation sweep must be comma-separated integers")
    if len(levels) < 2 or any(l <= 0 for l in levels):
        raise argparse.ArgumentTypeError("truncation sweep needs at least two positive levels")
    return levels


def build_parser():
    ap = argparse.ArgumentParser(prog="mwcoh", description="Overconvergent de Rham cohomology jobs.")
    ap.add_argument("--job", required=True, help="job file")
    ap.add_argument("--seed", type=int, default=0, help="random seed for randomized checks")
    ap.add_argument("--truncation-sweep", type=_sweep, default=None, metavar="D1,D2,...",
                    help="explicit truncation levels to compare")
    ap.add_argument("--format", choices=("table", "machine"), default="table")
    ap.add_argument("--quiet", action="store_true", help="suppress stdout")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        with open(args.job, encoding="utf-8") as fh:
            text = fh.read()
        jobs = parse_jobs(text)
    except (OSError, UnicodeDecodeError) as exc:
        print("mwcoh: cannot read job file: %s" % exc, file=sys.stderr)
        return EXIT_INPUT
    except ParseError as exc:
        print("mwcoh: parse error: %s" % exc, file=sys.stderr)
        return EXIT_INPUT
    status = EXIT_PASS
    base = os.path.dirname(os.path.abspath(args.job))
    for job in jobs:
        report = run_job(job, args.seed, args.truncation_sweep)
        text = report.render(args.format)
        if job.output:
            with open(os.path.join(base, job.output), "w", encoding="utf-8") as fh:
                fh.write(text)
        if not args.quiet:
            sys.stdout.write(text)
        status = max(status, report.status)
    return status


if __name__ == "__main__":
    sys.exit(main())
