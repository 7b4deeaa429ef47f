"""Coordinate charts mixing real coordinates and complex conjugate pairs,
with vector fields, differential forms and exterior calculus over Expr
coefficients.

Coefficients of forms and fields are stored against the Wirtinger frame
{d/dz, d/dzbar, d/dt} and the dual coframe {dz, dzbar, dt}; real frames are
derived views.
"""

from __future__ import annotations

from . import expr as ex
from .expr import Expr, Sampler, conjugate, sym, wirtinger


class ChartError(Exception):
    pass


class Chart:
    """Ordered coordinates, each real or a complex conjugate pair."""

    def __init__(self, entries, guards=(), name=""):
        """entries: sequence of ("real", name) or ("pair", name)."""
        self.name = name
        self.entries = tuple((str(kind), str(nm)) for kind, nm in entries)
        seen = set()
        for kind, nm in self.entries:
            if kind not in ("real", "pair"):
                raise ChartError("bad coordinate kind %r" % kind)
            if nm in seen:
                raise ChartError("duplicate coordinate %r" % nm)
            seen.add(nm)
        self.real_syms = frozenset(nm for kind, nm in self.entries if kind == "real")
        dirs = []
        for kind, nm in self.entries:
            if kind == "real":
                dirs.append((nm, False))
            else:
                dirs.append((nm, False))
                dirs.append((nm, True))
        self.directions = tuple(dirs)
        self.dir_index = {d: i for i, d in enumerate(dirs)}
        self.dim = len(dirs)
        self.guards = tuple(self.resolve(g) for g in guards)
        self.sample_coords = tuple(
            (nm, "real" if kind == "real" else "complex") for kind, nm in self.entries)

    def __repr__(self):
        return "Chart(%s)" % ", ".join(
            nm if kind == "real" else nm + "~" for kind, nm in self.entries)

    def __eq__(self, other):
        return isinstance(other, Chart) and self.entries == other.entries

    def __hash__(self):
        return hash(self.entries)

    # ------------------------------------------------------------- expressions
    def resolve(self, e):
        """Bind an Expr to this chart: real symbols lose their bar."""
        if isinstance(e, str):
            e = ex.parse(e)
        e = ex._as_expr(e)
        return ex.unbar(e, self.real_syms)

    def conj(self, e):
        return conjugate(self.resolve(e), self.real_syms)

    def diff(self, e, direction):
        nm, bar = direction
        return wirtinger(self.resolve(e), nm, bar=bar, real_syms=self.real_syms)

    def check_symbols(self, e):
        names = {nm for kind, nm in self.entries}
        extra = self.resolve(e).free_symbols() - names
        if extra:
            raise ChartError("symbols %s not declared on %r" % (sorted(extra), self))

    # ---------------------------------------------------------------- sampling
    def points(self, sampler, guards=(), k=None):
        return sampler.points(self.sample_coords,
                              tuple(self.guards) + tuple(self.resolve(g) for g in guards),
                              k=k)

    def is_zero(self, e, sampler, guards=(), tol_abs=ex.TOL_ABS, tol_rel=ex.TOL_REL):
        return ex.is_zero(self.resolve(e), sampler, self.sample_coords,
                          tuple(self.guards) + tuple(self.resolve(g) for g in guards),
                          tol_abs=tol_abs, tol_rel=tol_rel)

    # -------------------------------------------------------------- primitives
    def dx(self, nm, bar=False):
        d = (nm, bool(bar))
        if d not in self.dir_index:
            raise ChartError("no direction %r on %r" % (d, self))
        return DiffForm(self, 1, {(self.dir_index[d],): ex.ONE})

    def ddx(self, nm, bar=False):
        """Frame vector field d/d(nm) (or d/d(nm-bar))."""
        d = (nm, bool(bar))
        if d not in self.dir_index:
            raise ChartError("no direction %r on %r" % (d, self))
        return VectorField(self, {self.dir_index[d]: ex.ONE})

    def d_of(self, e):
        """Exterior derivative of a scalar Expr as a 1-form."""
        e = self.resolve(e)
        terms = {}
        for i, d in enumerate(self.directions):
            c = self.diff(e, d)
            if not ex._is_zero_const(c):
                terms[(i,)] = c
        return DiffForm(self, 1, terms)

    def zero_form(self, degree):
        return DiffForm(self, degree, {})

    def form(self, pairs, degree=None):
        """Build a form from {(direction tuples): Expr} with directions as
        (name, bar) pairs."""
        terms = {}
        deg = degree
        for dirs, coef in pairs.items():
            idx = tuple(self.dir_index[d] for d in dirs)
            if deg is None:
                deg = len(idx)
            s, idx = _sort_index(idx)
            if s == 0:
                continue
            coef = self.resolve(coef)
            terms[idx] = ex.add(terms.get(idx, ex.ZERO), ex.mul(ex.const(s), coef))
        f = DiffForm(self, deg if deg is not None else 1, terms)
        return f

    def field(self, pairs):
        comps = {}
        for d, coef in pairs.items():
            comps[self.dir_index[d]] = self.resolve(coef)
        return VectorField(self, comps)

    def basepoint_assignment(self, assign):
        """assign: name -> complex/number; real coordinates validated real."""
        p = {}
        for kind, nm in self.entries:
            if nm not in assign:
                raise ChartError("basepoint missing coordinate %r" % nm)
            v = complex(assign[nm])
            if kind == "real" and abs(v.imag) > 1e-12:
                raise ChartError("real coordinate %r given complex value" % nm)
            p[nm] = v
        return p


def _sort_index(idx):
    """Sort a multi-index, returning (sign, tuple); sign 0 on repeats."""
    idx = list(idx)
    sign = 1
    for i in range(len(idx)):
        for j in range(len(idx) - 1 - i):
            if idx[j] > idx[j + 1]:
                idx[j], idx[j + 1] = idx[j + 1], idx[j]
                sign = -sign
            elif idx[j] == idx[j + 1]:
                return 0, ()
    return sign, tuple(idx)


class DiffForm:
    """Exterior form with Expr coefficients on strictly increasing
    multi-indices over the chart's coframe."""

    __slots__ = ("chart", "degree", "terms")

    def __init__(self, chart, degree, terms):
        self.chart = chart
        self.degree = int(degree)
        clean = {}
        for idx, coef in terms.items():
            if len(idx) != self.degree:
                raise ChartError("multi-index %r has wrong degree" % (idx,))
            if list(idx) != sorted(idx) or len(set(idx)) != len(idx):
                raise ChartError("multi-index %r not strictly increasing" % (idx,))
            if not ex._is_zero_const(coef):
                clean[idx] = coef
        self.terms = clean

    def __repr__(self):
        if not self.terms:
            return "0"
        dirs = self.chart.directions
        bits = []
        for idx in sorted(self.terms):
            names = "^".join(
                "d(%s)" % (nm if not bar else "conj(%s)" % nm)
                for nm, bar in (dirs[i] for i in idx))
            bits.append("(%s) %s" % (self.terms[idx], names or "1"))
        return " + ".join(bits)

    def _samechart(self, other):
        if self.chart != other.chart:
            raise ChartError("chart mismatch")

    def __add__(self, other):
        self._samechart(other)
        if self.degree != other.degree:
            raise ChartError("degree mismatch in form addition")
        terms = dict(self.terms)
        for idx, c in other.terms.items():
            terms[idx] = ex.add(terms.get(idx, ex.ZERO), c)
        return DiffForm(self.chart, self.degree, terms)

    def __sub__(self, other):
        return self + other.scale(ex.MINUS_ONE)

    def __neg__(self):
        return self.scale(ex.MINUS_ONE)

    def scale(self, e):
        e = self.chart.resolve(e)
        return DiffForm(self.chart, self.degree,
                        {idx: ex.mul(e, c) for idx, c in self.terms.items()})

    def __mul__(self, e):
        return self.scale(e)

    def __rmul__(self, e):
        return self.scale(e)

    def wedge(self, other):
        self._samechart(other)
        out = {}
        deg = self.degree + other.degree
        for ia, ca in self.terms.items():
            for ib, cb in other.terms.items():
                s, idx = _sort_index(ia + ib)
                if s == 0:
                    continue
                c = ex.mul(ex.const(s), ca, cb)
                out[idx] = ex.add(out.get(idx, ex.ZERO), c)
        return DiffForm(self.chart, deg, out)

    def d(self):
        ch = self.chart
        out = {}
        for idx, coef in self.terms.items():
            for i, dd in enumerate(ch.directions):
                dc = ch.diff(coef, dd)
                if ex._is_zero_const(dc):
                    continue
                s, nidx = _sort_index((i,) + idx)
                if s == 0:
                    continue
                out[nidx] = ex.add(out.get(nidx, ex.ZERO),
                                   ex.mul(ex.const(s), dc))
        return DiffForm(ch, self.degree + 1, out)

    def conj(self):
        """Conjugate form: conjugate coefficients, swap dz and dzbar."""
        ch = self.chart
        out = {}
        for idx, coef in self.terms.items():
            nidx = []
            for i in idx:
                nm, bar = ch.directions[i]
                if nm in ch.real_syms:
                    nidx.append(i)
                else:
                    nidx.append(ch.dir_index[(nm, not bar)])
            s, nidx = _sort_index(tuple(nidx))
            c = ex.mul(ex.const(s), ch.conj(coef))
            out[nidx] = ex.add(out.get(nidx, ex.ZERO), c)
        return DiffForm(ch, self.degree, out)

    def interior(self, X):
        """Interior product X -| self."""
        if X.chart != self.chart:
            raise ChartError("chart mismatch")
        if self.degree == 0:
            raise ChartError("interior product with a 0-form")
        out = {}
        for idx, coef in self.terms.items():
            for pos, i in enumerate(idx):
                xc = X.comps.get(i)
                if xc is None:
                    continue
                nidx = idx[:pos] + idx[pos + 1:]
                sgn = -1 if pos % 2 else 1
                c = ex.mul(ex.const(sgn), xc, coef)
                out[nidx] = ex.add(out.get(nidx, ex.ZERO), c)
        return DiffForm(self.chart, self.degree - 1, out)

    def eval_on(self, *fields):
        """Evaluate a k-form on k vector fields, returning an Expr."""
        f = self
        for X in fields:
            f = f.interior(X)
        if f.degree != 0:
            raise ChartError("wrong number of field arguments")
        return f.terms.get((), ex.ZERO)

    def coeff_vector(self):
        """Dense coefficient list over the canonical multi-index order."""
        idxs = _index_order(self.chart.dim, self.degree)
        return [self.terms.get(i, ex.ZERO) for i in idxs]

    def is_zero(self, sampler, guards=(), tol_abs=ex.TOL_ABS, tol_rel=ex.TOL_REL):
        for coef in self.terms.values():
            cert = self.chart.is_zero(coef, sampler, guards, tol_abs, tol_rel)
            if not cert:
                return cert
        return ex.ZeroCertificate(True, sampler.seed, [], [], 0.0)

    def normalized(self):
        return DiffForm(self.chart, self.degree,
                        {i: ex.normalize(c) for i, c in self.terms.items()})


def _index_order(dim, degree):
    from itertools import combinations
    return list(combinations(range(dim), degree))


class VectorField:
    """Derivation with Expr coefficients against the Wirtinger frame."""

    __slots__ = ("chart", "comps")

    def __init__(self, chart, comps):
        self.chart = chart
        self.comps = {i: c for i, c in comps.items() if not ex._is_zero_const(c)}

    def __repr__(self):
        if not self.comps:
            return "0"
        bits = []
        for i in sorted(self.comps):
            nm, bar = self.chart.directions[i]
            d = "d/d(%s)" % (nm if not bar else "conj(%s)" % nm)
            bits.append("(%s) %s" % (self.comps[i], d))
        return " + ".join(bits)

    def _samechart(self, other):
        if self.chart != other.chart:
            raise ChartError("chart mismatch")

    def __add__(self, other):
        self._samechart(other)
        comps = dict(self.comps)
        for i, c in other.comps.items():
            comps[i] = ex.add(comps.get(i, ex.ZERO), c)
        return VectorField(self.chart, comps)

    def __sub__(self, other):
        return self + other.scale(ex.MINUS_ONE)

    def __neg__(self):
        return self.scale(ex.MINUS_ONE)

    def scale(self, e):
        e = self.chart.resolve(e)
        return VectorField(self.chart,
                           {i: ex.mul(e, c) for i, c in self.comps.items()})

    def __mul__(self, e):
        return self.scale(e)

    def __rmul__(self, e):
        return self.scale(e)

    def apply(self, f):
        """Directional derivative X(f) of a scalar Expr."""
        ch = self.chart
        out = ex.ZERO
        for i, c in self.comps.items():
            out = ex.add(out, ex.mul(c, ch.diff(f, ch.directions[i])))
        return out

    def conj(self):
        ch = self.chart
        comps = {}
        for i, c in self.comps.items():
            nm, bar = ch.directions[i]
            j = i if nm in ch.real_syms else ch.dir_index[(nm, not bar)]
            comps[j] = ex.add(comps.get(j, ex.ZERO), ch.conj(c))
        return VectorField(ch, comps)

    def coeff_vector(self):
        return [self.comps.get(i, ex.ZERO) for i in range(self.chart.dim)]

    def eval_at(self, point):
        return [ex.evaluate(c, point) for c in self.coeff_vector()]


def wedge(a, b):
    return a.wedge(b)


def exterior_derivative(a):
    return a.d()


def lie_bracket(X, Y):
    X._samechart(Y)
    ch = X.chart
    comps = {}
    for i in set(X.comps) | set(Y.comps):
        c = ex.add(X.apply(Y.comps.get(i, ex.ZERO)),
                   ex.neg(Y.apply(X.comps.get(i, ex.ZERO))))
        comps[i] = c
    return VectorField(ch, comps)


def interior_product(X, a):
    return a.interior(X)


def lie_derivative(X, a):
    if a.degree == 0:
        return DiffForm(a.chart, 0, {(): X.apply(a.terms.get((), ex.ZERO))})
    return a.interior(X).d() + a.d().interior(X)


def pairing(a, X):
    if a.degree != 1:
        raise ChartError("pairing expects a 1-form")
    return a.eval_on(X)


class CoordinateMap:
    """Map between charts given by one source Expr per target coordinate."""

    def __init__(self, source, target, exprs, name=""):
        self.source = source
        self.target = target
        self.name = name
        self.exprs = {}
        for kind, nm in target.entries:
            if nm not in exprs:
                raise ChartError("map missing target coordinate %r" % nm)
            self.exprs[nm] = source.resolve(exprs[nm])

    def __repr__(self):
        return "CoordinateMap(%s)" % (self.name or "?")

    def subs_map(self):
        return dict(self.exprs)

    def pullback_expr(self, e):
        e = self.target.resolve(e)
        return ex.subs(e, self.subs_map(), real_syms=self.source.real_syms)

    def pullback(self, a):
        """Pullback of a DiffForm on the target chart."""
        if a.chart != self.target:
            raise ChartError("form lives on the wrong chart for this map")
        src = self.source
        out = src.zero_form(a.degree) if a.degree else DiffForm(
            src, 0, {(): self.pullback_expr(a.terms.get((), ex.ZERO))})
        if a.degree == 0:
            return out
        # pullbacks of the target coframe
        pulled = []
        for nm, bar in self.target.directions:
            f = self.exprs[nm]
            if bar:
                f = src.conj(f)
            pulled.append(src.d_of(f))
        for idx, coef in a.terms.items():
            term = DiffForm(src, 0, {(): self.pullback_expr(coef)})
            block = None
            for i in idx:
                block = pulled[i] if block is None else block.wedge(pulled[i])
            out = out + block.scale(term.terms.get((), ex.ZERO)) if block is not None else out
        return out

    def compose(self, inner):
        """self o inner : inner.source -> self.target."""
        if inner.target != self.source:
            raise ChartError("charts do not chain for composition")
        exprs = {nm: inner.pullback_expr(e) for nm, e in self.exprs.items()}
        return CoordinateMap(inner.source, self.target, exprs,
                             name="%s.%s" % (self.name, inner.name))

    def push_point(self, point):
        """Image of a source point (dict) as a target point."""
        out = {}
        for kind, nm in self.target.entries:
            out[nm] = ex.evaluate(self.exprs[nm], point)
        return out
