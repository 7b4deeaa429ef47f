"""Minimal symbolic kernel: expression trees over complex coordinates.

Expressions are immutable and normalized at construction time (flattened
sums/products, rational constants combined, syntactic common factors in
quotients cancelled).  Conjugation is pushed down to symbol leaves, so a
normalized tree contains no conj nodes, only a `bar` flag on symbols.
Equality testing is probabilistic: evaluate at random points and compare
against a scale-aware tolerance.
"""

from __future__ import annotations

import cmath
import math
import random
from fractions import Fraction

SINGULAR_EPS = 1e-13
GUARD_EPS = 1e-4


class ExprError(Exception):
    pass


class ParseError(ExprError):
    def __init__(self, message, offset):
        super().__init__("%s (at offset %d)" % (message, offset))
        self.offset = offset


class SingularPointError(ExprError):
    """Evaluation hit a pole, a log/sqrt of ~0, or a tiny denominator."""


class DomainTooThinError(ExprError):
    """Too many consecutive sample points rejected by the guards."""


def _frac(x):
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    raise TypeError("expected int or Fraction, got %r" % (x,))


# exact complex rationals as (re, im) Fraction pairs
def _cadd(a, b):
    return (a[0] + b[0], a[1] + b[1])


def _cmul(a, b):
    return (a[0] * b[0] - a[1] * b[1], a[0] * b[1] + a[1] * b[0])


def _cinv(a):
    n = a[0] * a[0] + a[1] * a[1]
    if n == 0:
        raise ZeroDivisionError("division by exact zero constant")
    return (a[0] / n, -a[1] / n)


_FN_NAMES = ("exp", "ln", "sin", "cos", "tan", "sqrt")


class Expr:
    """Immutable expression node.  Use the module constructors, not __init__."""

    __slots__ = ("kind", "data", "_key", "_hash")

    def __init__(self, kind, data):
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "_key", None)
        object.__setattr__(self, "_hash", None)

    def __setattr__(self, *a):
        raise AttributeError("Expr is immutable")

    def key(self):
        k = self._key
        if k is None:
            k = _make_key(self)
            object.__setattr__(self, "_key", k)
        return k

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, Expr):
            return False
        if hash(self) != hash(other):
            return False
        return self.key() == other.key()

    def __hash__(self):
        h = self._hash
        if h is None:
            k, d = self.kind, self.data
            if k in ("const", "sym"):
                h = hash((k, d[0], d[1]))
            elif k in ("add", "mul"):
                h = hash((k,) + tuple(hash(c) for c in d))
            elif k == "div":
                h = hash((k, hash(d[0]), hash(d[1])))
            elif k == "pow":
                h = hash((k, hash(d[0]), d[1]))
            else:
                h = hash((k, hash(d)))
            object.__setattr__(self, "_hash", h)
        return h

    def __repr__(self):
        return "Expr(%s)" % to_str(self)

    def __str__(self):
        return to_str(self)

    # operator sugar; ints and Fractions are promoted
    def __add__(self, other):
        return add(self, _as_expr(other))

    def __radd__(self, other):
        return add(_as_expr(other), self)

    def __sub__(self, other):
        return add(self, neg(_as_expr(other)))

    def __rsub__(self, other):
        return add(_as_expr(other), neg(self))

    def __mul__(self, other):
        return mul(self, _as_expr(other))

    def __rmul__(self, other):
        return mul(_as_expr(other), self)

    def __truediv__(self, other):
        return div(self, _as_expr(other))

    def __rtruediv__(self, other):
        return div(_as_expr(other), self)

    def __pow__(self, n):
        return pow_(self, n)

    def __neg__(self):
        return neg(self)

    def is_const(self):
        return self.kind == "const"

    def const_value(self):
        re, im = self.data
        return complex(float(re), float(im))

    def free_symbols(self):
        out = set()
        _collect_syms(self, out)
        return out


def size(e):
    """Node count of an expression tree (cheap complexity measure)."""
    if e.kind in ("const", "sym"):
        return 1
    if e.kind == "pow":
        return 1 + size(e.data[0])
    return 1 + sum(size(a) for a in e.data if isinstance(a, Expr))


def _collect_syms(e, out):
    if e.kind == "sym":
        out.add(e.data[0])
    elif e.kind == "const":
        pass
    elif e.kind in ("add", "mul"):
        for c in e.data:
            _collect_syms(c, out)
    elif e.kind == "div":
        _collect_syms(e.data[0], out)
        _collect_syms(e.data[1], out)
    elif e.kind == "pow":
        _collect_syms(e.data[0], out)
    else:
        _collect_syms(e.data, out)


_KIND_RANK = {
    "const": 0,
    "sym": 1,
    "pow": 2,
    "mul": 3,
    "div": 4,
    "add": 5,
    "exp": 6,
    "ln": 7,
    "sin": 8,
    "cos": 9,
    "tan": 10,
    "sqrt": 11,
}


def _make_key(e):
    r = _KIND_RANK[e.kind]
    if e.kind == "const":
        return (r, e.data[0], e.data[1])
    if e.kind == "sym":
        return (r, e.data[0], e.data[1])
    if e.kind in ("add", "mul"):
        return (r, tuple(c.key() for c in e.data))
    if e.kind == "div":
        return (r, e.data[0].key(), e.data[1].key())
    if e.kind == "pow":
        return (r, e.data[0].key(), e.data[1])
    return (r, e.data.key())


# ---------------------------------------------------------------- constructors

def const(re, im=0):
    return Expr("const", (_frac(re), _frac(im)))


ZERO = const(0)
ONE = const(1)
I = const(0, 1)
MINUS_ONE = const(-1)


def _as_expr(x):
    if isinstance(x, Expr):
        return x
    if isinstance(x, (int, Fraction)):
        return const(x)
    if isinstance(x, complex):
        if x.imag == 0 and x.real == int(x.real):
            return const(int(x.real))
        raise TypeError("only exact constants may be promoted; got %r" % (x,))
    raise TypeError("cannot promote %r to Expr" % (x,))


def sym(name, bar=False):
    return Expr("sym", (name, bool(bar)))


def _is_zero_const(e):
    return e.kind == "const" and e.data[0] == 0 and e.data[1] == 0


def _is_one_const(e):
    return e.kind == "const" and e.data[0] == 1 and e.data[1] == 0


def _term_parts(e):
    """Split e into (complex-rational coefficient, core-or-None)."""
    if e.kind == "const":
        return e.data, None
    if e.kind == "mul" and e.data[0].kind == "const":
        rest = e.data[1:]
        core = rest[0] if len(rest) == 1 else Expr("mul", rest)
        return e.data[0].data, core
    return (Fraction(1), Fraction(0)), e


def add(*args):
    terms = []
    for a in args:
        a = _as_expr(a)
        if a.kind == "add":
            terms.extend(a.data)
        elif not _is_zero_const(a):
            terms.append(a)
    coeffs = {}
    cval = (Fraction(0), Fraction(0))
    for t in terms:
        cf, core = _term_parts(t)
        if core is None:
            cval = _cadd(cval, cf)
            continue
        coeffs[core] = _cadd(coeffs.get(core, (Fraction(0), Fraction(0))), cf)
    out = []
    for core in sorted(coeffs, key=Expr.key):
        cf = coeffs[core]
        if cf == (0, 0):
            continue
        out.append(_scale(core, cf))
    if cval != (0, 0):
        out.insert(0, Expr("const", cval))
    if not out:
        return ZERO
    if len(out) == 1:
        return out[0]
    return Expr("add", tuple(out))


def _scale(core, cf):
    if cf == (1, 0):
        return core
    return mul(Expr("const", cf), core)


def neg(e):
    return mul(MINUS_ONE, _as_expr(e))


def _mul_factors(e):
    """Yield (base, int exponent) factors of a non-const, non-div expression."""
    if e.kind == "mul":
        for c in e.data:
            yield from _mul_factors(c)
    elif e.kind == "pow":
        yield (e.data[0], e.data[1])
    else:
        yield (e, 1)


def mul(*args):
    num, den = [], []
    cval = (Fraction(1), Fraction(0))
    stack = [_as_expr(a) for a in args]
    while stack:
        a = stack.pop(0)
        if a.kind == "const":
            cval = _cmul(cval, a.data)
        elif a.kind == "mul":
            stack[0:0] = list(a.data)
        elif a.kind == "div":
            stack.insert(0, a.data[0])
            den.append(a.data[1])
        else:
            num.append(a)
    if cval == (0, 0):
        return ZERO
    if den:
        n = _mul_core(num, cval)
        d = _mul_core(den, (Fraction(1), Fraction(0)))
        return div(n, d)
    return _mul_core(num, cval)


def _mul_core(factors, cval):
    powers = {}
    for f in factors:
        for b, n in _mul_factors(f):
            if b.kind == "const":
                cv = b.data
                for _ in range(abs(n)):
                    cval = _cmul(cval, cv if n > 0 else _cinv(cv))
                continue
            powers[b] = powers.get(b, 0) + n
    out = []
    neg_out = []
    for b in sorted(powers, key=Expr.key):
        n = powers[b]
        if n == 0:
            continue
        if n > 0:
            out.append(b if n == 1 else Expr("pow", (b, n)))
        else:
            neg_out.append(b if n == -1 else Expr("pow", (b, -n)))
    if cval == (0, 0):
        return ZERO
    cnode = None if cval == (1, 0) else Expr("const", cval)
    if not out and cnode is None:
        numerator = ONE
    elif not out:
        numerator = cnode
    else:
        parts = ([cnode] if cnode is not None else []) + out
        numerator = parts[0] if len(parts) == 1 else Expr("mul", tuple(parts))
    if neg_out:
        d = neg_out[0] if len(neg_out) == 1 else Expr("mul", tuple(neg_out))
        return Expr("div", (numerator, d))
    return numerator


def div(num, den):
    num = _as_expr(num)
    den = _as_expr(den)
    if _is_zero_const(den):
        raise ZeroDivisionError("literal zero denominator")
    if den.kind == "const":
        return mul(Expr("const", _cinv(den.data)), num)
    if _is_zero_const(num):
        return ZERO
    # unfold nested quotients: (a/b)/(c/d) = (a*d)/(b*c)
    if num.kind == "div" or den.kind == "div":
        n_n, n_d = (num.data if num.kind == "div" else (num, ONE))
        d_n, d_d = (den.data if den.kind == "div" else (den, ONE))
        return div(mul(n_n, d_d), mul(n_d, d_n))
    ncf, nfac = _factor_map(num)
    dcf, dfac = _factor_map(den)
    # cancel common syntactic factors
    for k in list(nfac):
        if k in dfac:
            m = min(nfac[k][1], dfac[k][1])
            nfac[k] = (nfac[k][0], nfac[k][1] - m)
            dfac[k] = (dfac[k][0], dfac[k][1] - m)
    cf = _cmul(ncf, _cinv(dcf))
    n = _rebuild(cf, nfac)
    d = _rebuild((Fraction(1), Fraction(0)), dfac)
    if d.kind == "const":
        return mul(Expr("const", _cinv(d.data)), n)
    return Expr("div", (n, d))


def _factor_map(e):
    cf = (Fraction(1), Fraction(0))
    fac = {}
    for b, n in _mul_factors(e):
        if b.kind == "const":
            for _ in range(abs(n)):
                cf = _cmul(cf, b.data if n > 0 else _cinv(b.data))
            continue
        if b in fac:
            fac[b] = (b, fac[b][1] + n)
        else:
            fac[b] = (b, n)
    return cf, fac


def _rebuild(cf, fac):
    parts = []
    for k in sorted(fac, key=Expr.key):
        b, n = fac[k]
        if n == 0:
            continue
        parts.append(b if n == 1 else Expr("pow", (b, n)))
    cnode = None if cf == (1, 0) else Expr("const", cf)
    if not parts:
        return cnode if cnode is not None else ONE
    if cnode is not None:
        parts.insert(0, cnode)
    return parts[0] if len(parts) == 1 else Expr("mul", tuple(parts))


def pow_(base, n):
    base = _as_expr(base)
    if not isinstance(n, int):
        raise TypeError("only integer powers are supported")
    if n == 0:
        return ONE
    if n == 1:
        return base
    if n < 0:
        return div(ONE, pow_(base, -n))
    if base.kind == "const":
        v = (Fraction(1), Fraction(0))
        for _ in range(n):
            v = _cmul(v, base.data)
        return Expr("const", v)
    if base.kind == "pow":
        return pow_(base.data[0], base.data[1] * n)
    if base.kind in ("mul", "div"):
        if base.kind == "mul":
            return mul(*[pow_(c, n) for c in base.data])
        return div(pow_(base.data[0], n), pow_(base.data[1], n))
    return Expr("pow", (base, n))


def fn(name, arg):
    arg = _as_expr(arg)
    if name not in _FN_NAMES:
        raise ValueError("unknown function %r" % name)
    if arg.kind == "const":
        re, im = arg.data
        if name == "exp" and (re, im) == (0, 0):
            return ONE
        if name == "ln" and (re, im) == (1, 0):
            return ZERO
        if name in ("sin", "tan") and (re, im) == (0, 0):
            return ZERO
        if name == "cos" and (re, im) == (0, 0):
            return ONE
        if name == "sqrt" and im == 0 and re >= 0:
            r = Fraction(math.isqrt(re.numerator)), Fraction(math.isqrt(re.denominator))
            if r[0] * r[0] == re.numerator and r[1] * r[1] == re.denominator:
                return Expr("const", (r[0] / r[1], Fraction(0)))
    return Expr(name, arg)


def exp_(a):
    return fn("exp", a)


def ln_(a):
    return fn("ln", a)


def sin_(a):
    return fn("sin", a)


def cos_(a):
    return fn("cos", a)


def tan_(a):
    return fn("tan", a)


def sqrt_(a):
    return fn("sqrt", a)


def conjugate(e, real_syms=frozenset()):
    """Structural conjugate; real_syms are left unbarred.

    conj is pushed through all node kinds (valid on principal branches away
    from cuts; sample domains keep clear of the cuts).
    """
    return _conjugate(_as_expr(e), real_syms, {})


def _conjugate(e, real_syms, memo):
    r = memo.get(id(e))
    if r is not None:
        return r
    k = e.kind
    if k == "const":
        r = e if e.data[1] == 0 else Expr("const", (e.data[0], -e.data[1]))
    elif k == "sym":
        name, bar = e.data
        if name in real_syms:
            r = e if not bar else Expr("sym", (name, False))
        else:
            r = Expr("sym", (name, not bar))
    elif k in ("add", "mul"):
        kids = [_conjugate(c, real_syms, memo) for c in e.data]
        if all(a is b for a, b in zip(kids, e.data)):
            r = e
        else:
            r = add(*kids) if k == "add" else mul(*kids)
    elif k == "div":
        a = _conjugate(e.data[0], real_syms, memo)
        b = _conjugate(e.data[1], real_syms, memo)
        r = e if (a is e.data[0] and b is e.data[1]) else div(a, b)
    elif k == "pow":
        b = _conjugate(e.data[0], real_syms, memo)
        r = e if b is e.data[0] else pow_(b, e.data[1])
    else:
        c = _conjugate(e.data, real_syms, memo)
        r = e if c is e.data else fn(k, c)
    memo[id(e)] = r
    return r


def normalize(e):
    """Rebuild through the smart constructors (idempotent by construction)."""
    e = _as_expr(e)
    if e.kind in ("const", "sym"):
        return e
    if e.kind == "add":
        return add(*[normalize(c) for c in e.data])
    if e.kind == "mul":
        return mul(*[normalize(c) for c in e.data])
    if e.kind == "div":
        return div(normalize(e.data[0]), normalize(e.data[1]))
    if e.kind == "pow":
        return pow_(normalize(e.data[0]), e.data[1])
    return fn(e.kind, normalize(e.data))


def subs(e, mapping, real_syms=frozenset()):
    """Substitute symbols.  mapping: name -> Expr/number.

    Barred leaves receive the conjugate of the replacement.  Entries keyed
    by ('bar', name) override the replacement of barred leaves directly,
    which is how polarization freezes z-bar independently of z.
    """
    return _subs(_as_expr(e), mapping, real_syms, {})


def _subs(e, mapping, real_syms, memo):
    r = memo.get(id(e))
    if r is not None:
        return r
    k = e.kind
    if k == "const":
        r = e
    elif k == "sym":
        name, bar = e.data
        if bar and ("bar", name) in mapping:
            r = _as_expr(mapping[("bar", name)])
        elif name in mapping:
            rep = _as_expr(mapping[name])
            r = conjugate(rep, real_syms) if bar else rep
        else:
            r = e
    elif k in ("add", "mul"):
        kids = [_subs(c, mapping, real_syms, memo) for c in e.data]
        if all(a is b for a, b in zip(kids, e.data)):
            r = e
        else:
            r = add(*kids) if k == "add" else mul(*kids)
    elif k == "div":
        a = _subs(e.data[0], mapping, real_syms, memo)
        b = _subs(e.data[1], mapping, real_syms, memo)
        r = e if (a is e.data[0] and b is e.data[1]) else div(a, b)
    elif k == "pow":
        b = _subs(e.data[0], mapping, real_syms, memo)
        r = e if b is e.data[0] else pow_(b, e.data[1])
    else:
        c = _subs(e.data, mapping, real_syms, memo)
        r = e if c is e.data else fn(k, c)
    memo[id(e)] = r
    return r


def unbar(e, real_syms):
    """Clear the bar flag on symbols declared real (chart binding step)."""
    return subs(e, {("bar", name): sym(name) for name in real_syms})


# -------------------------------------------------------------------- printing

# precedence levels: add=1, mul/div=2, unary-ish=3, pow=4, atom=5
def to_str(e):
    return _pstr(e, 0)


def _const_str(data, prec):
    re, im = data
    if im == 0:
        s = str(re)
        need = prec >= 2 and (re < 0 or re.denominator != 1)
        return "(%s)" % s if need else s
    if re == 0:
        if im == 1:
            return "i"
        if im == -1:
            s = "-i"
        else:
            s = "%s*i" % im
        return "(%s)" % s if prec >= 2 else s
    s = "%s+%s*i" % (re, im) if im > 0 else "%s-%s*i" % (re, -im)
    return "(%s)" % s


def _pstr(e, prec):
    if e.kind == "const":
        return _const_str(e.data, prec)
    if e.kind == "sym":
        name, bar = e.data
        return "conj(%s)" % name if bar else name
    if e.kind == "add":
        parts = []
        for idx, c in enumerate(e.data):
            s = _pstr(c, 1)
            if idx and not s.startswith("-"):
                parts.append("+")
            parts.append(s)
        s = "".join(parts)
        return "(%s)" % s if prec > 1 else s
    if e.kind == "mul":
        parts = [_pstr(c, 2) for c in e.data]
        # a leading -1 prints as a prefix minus
        if e.data[0].kind == "const" and e.data[0].data == (Fraction(-1), Fraction(0)):
            s = "-" + "*".join(parts[1:])
        else:
            s = "*".join(parts)
        return "(%s)" % s if prec > 2 else s
    if e.kind == "div":
        s = "%s/%s" % (_pstr(e.data[0], 3), _pstr(e.data[1], 3))
        return "(%s)" % s if prec > 2 else s
    if e.kind == "pow":
        return "%s^%d" % (_pstr(e.data[0], 4), e.data[1])
    if e.kind == "ln":
        return "ln(%s)" % _pstr(e.data, 0)
    return "%s(%s)" % (e.kind, _pstr(e.data, 0))


# --------------------------------------------------------------------- parsing

_TOKEN_CHARS = set("+-*/^()~,")


def _tokenize(text):
    toks = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch in _TOKEN_CHARS:
            toks.append((ch, ch, i))
            i += 1
            continue
        if ch.isdigit() or (ch == "." and i + 1 < n and text[i + 1].isdigit()):
            j = i
            seen_dot = False
            while j < n and (text[j].isdigit() or (text[j] == "." and not seen_dot)):
                if text[j] == ".":
                    seen_dot = True
                j += 1
            toks.append(("num", text[i:j], i))
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            toks.append(("ident", text[i:j], i))
            i = j
            continue
        raise ParseError("unexpected character %r" % ch, i)
    toks.append(("end", "", n))
    return toks


class _Parser:
    def __init__(self, text):
        self.text = text
        self.toks = _tokenize(text)
        self.pos = 0

    def peek(self):
        return self.toks[self.pos]

    def take(self, kind=None):
        t = self.toks[self.pos]
        if kind is not None and t[0] != kind:
            raise ParseError("expected %s, got %r" % (kind, t[1] or "end of input"), t[2])
        self.pos += 1
        return t

    def parse_expr(self):
        # leading unary minus accepted (liberal extension of the grammar)
        if self.peek()[0] == "-":
            self.take()
            e = neg(self.parse_term())
        else:
            e = self.parse_term()
        while self.peek()[0] in ("+", "-"):
            op = self.take()[0]
            t = self.parse_term()
            e = add(e, t) if op == "+" else add(e, neg(t))
        return e

    def parse_term(self):
        e = self.parse_factor()
        while self.peek()[0] in ("*", "/"):
            op = self.take()[0]
            f = self.parse_factor()
            e = mul(e, f) if op == "*" else div(e, f)
        return e

    def parse_factor(self):
        e = self.parse_base()
        while self.peek()[0] == "~":
            self.take()
            e = conjugate(e)
        if self.peek()[0] == "^":
            self.take()
            negate = False
            if self.peek()[0] == "-":
                self.take()
                negate = True
            t = self.take("num")
            if "." in t[1]:
                raise ParseError("exponent must be an integer", t[2])
            n = int(t[1])
            e = pow_(e, -n if negate else n)
            while self.peek()[0] == "~":
                self.take()
                e = conjugate(e)
        return e

    def parse_base(self):
        t = self.peek()
        if t[0] == "num":
            self.take()
            if "." in t[1]:
                return const(Fraction(t[1]))
            return const(int(t[1]))
        if t[0] == "ident":
            self.take()
            name = t[1]
            if name == "i" and self.peek()[0] != "(":
                return I
            if self.peek()[0] == "(":
                self.take()
                arg = self.parse_expr()
                self.take(")")
                if name == "conj":
                    return conjugate(arg)
                if name in _FN_NAMES:
                    return fn(name, arg)
                raise ParseError("unknown function %r" % name, t[2])
            return sym(name)
        if t[0] == "(":
            self.take()
            e = self.parse_expr()
            self.take(")")
            return e
        raise ParseError("unexpected token %r" % (t[1] or "end of input"), t[2])


def parse(text):
    p = _Parser(text)
    e = p.parse_expr()
    t = p.peek()
    if t[0] != "end":
        raise ParseError("trailing input %r" % t[1], t[2])
    return e


# -------------------------------------------------------------- differentiation

def wirtinger(e, v, bar=False, real_syms=frozenset()):
    """Wirtinger derivative of e with respect to v (or v-bar when bar=True).

    The conjugate partner of a pair symbol is an independent constant; for
    symbols declared real the barred leaf differentiates like the symbol.
    """
    return _wirt(_as_expr(e), v, bar, real_syms, {})


def _wirt(e, v, bar, real_syms, memo):
    r = memo.get(id(e))
    if r is not None:
        return r
    r = _wirt_core(e, v, bar, real_syms, memo)
    memo[id(e)] = r
    return r


def _wirt_core(e, v, bar, real_syms, memo):
    if e.kind == "const":
        return ZERO
    if e.kind == "sym":
        name, b = e.data
        if name != v:
            return ZERO
        if name in real_syms:
            return ONE
        return ONE if b == bar else ZERO
    if e.kind == "add":
        return add(*[_wirt(c, v, bar, real_syms, memo) for c in e.data])
    if e.kind == "mul":
        terms = []
        cs = e.data
        for i in range(len(cs)):
            d = _wirt(cs[i], v, bar, real_syms, memo)
            if _is_zero_const(d):
                continue
            terms.append(mul(*(cs[:i] + (d,) + cs[i + 1:])))
        return add(*terms)
    if e.kind == "div":
        a, b2 = e.data
        da = _wirt(a, v, bar, real_syms, memo)
        db = _wirt(b2, v, bar, real_syms, memo)
        return div(add(mul(da, b2), neg(mul(a, db))), pow_(b2, 2))
    if e.kind == "pow":
        b2, n = e.data
        return mul(const(n), pow_(b2, n - 1), _wirt(b2, v, bar, real_syms, memo))
    arg = e.data
    darg = _wirt(arg, v, bar, real_syms, memo)
    if _is_zero_const(darg):
        return ZERO
    if e.kind == "exp":
        return mul(e, darg)
    if e.kind == "ln":
        return div(darg, arg)
    if e.kind == "sin":
        return mul(cos_(arg), darg)
    if e.kind == "cos":
        return neg(mul(sin_(arg), darg))
    if e.kind == "tan":
        return mul(add(ONE, pow_(tan_(arg), 2)), darg)
    if e.kind == "sqrt":
        return div(darg, mul(const(2), sqrt_(arg)))
    raise ExprError("cannot differentiate %s" % e.kind)


# ------------------------------------------------------------------- evaluation

def evaluate(e, point, _scale=None):
    """Evaluate at a PointAssignment-like mapping name -> complex.

    Raises SingularPointError near poles and branch points.  When _scale is
    a one-element list, the largest intermediate magnitude is accumulated
    into it (used for scale-aware zero testing).
    """
    return _eval(e, point, _scale, {})


def _track(val, _scale):
    if _scale is not None:
        a = abs(val)
        if a > _scale[0]:
            _scale[0] = a
    return val


def _eval(e, point, _scale, memo):
    r = memo.get(id(e))
    if r is not None:
        return r
    r = _eval_core(e, point, _scale, memo)
    memo[id(e)] = r
    return r


def _eval_core(e, point, _scale, memo):
    k = e.kind
    if k == "const":
        return _track(complex(float(e.data[0]), float(e.data[1])), _scale)
    if k == "sym":
        name, bar = e.data
        try:
            val = complex(point[name])
        except KeyError:
            raise ExprError("symbol %r not assigned" % name) from None
        return _track(val.conjugate() if bar else val, _scale)
    if k == "add":
        return _track(sum(_eval(c, point, _scale, memo) for c in e.data), _scale)
    if k == "mul":
        v = 1 + 0j
        for c in e.data:
            v *= _eval(c, point, _scale, memo)
        return _track(v, _scale)
    if k == "div":
        num = _eval(e.data[0], point, _scale, memo)
        den = _eval(e.data[1], point, _scale, memo)
        if abs(den) < SINGULAR_EPS:
            raise SingularPointError("denominator ~ 0")
        return _track(num / den, _scale)
    if k == "pow":
        return _track(_eval(e.data[0], point, _scale, memo) ** e.data[1], _scale)
    arg = _eval(e.data, point, _scale, memo)
    if k == "exp":
        v = cmath.exp(arg)
    elif k == "ln":
        if abs(arg) < SINGULAR_EPS:
            raise SingularPointError("ln of ~ 0")
        v = cmath.log(arg)
    elif k == "sin":
        v = cmath.sin(arg)
    elif k == "cos":
        v = cmath.cos(arg)
    elif k == "tan":
        c = cmath.cos(arg)
        if abs(c) < SINGULAR_EPS:
            raise SingularPointError("tan pole")
        v = cmath.sin(arg) / c
    elif k == "sqrt":
        if abs(arg) < SINGULAR_EPS:
            raise SingularPointError("sqrt of ~ 0")
        v = cmath.sqrt(arg)
    else:
        raise ExprError("cannot evaluate %s" % k)
    return _track(v, _scale)


# --------------------------------------------------------------------- sampling

class Sampler:
    """Deterministic sample-point generator for a coordinate list.

    coords: sequence of (name, kind) with kind in {"real", "complex"}.
    guards: Exprs that must stay bounded away from zero at sample points.
    """

    def __init__(self, seed=42, k=8, r_min=0.3, r_max=1.7):
        self.seed = int(seed)
        self.k = int(k)
        self.r_min = float(r_min)
        self.r_max = float(r_max)

    def fork(self, i):
        return Sampler(self.seed + 1000003 * (i + 1), self.k, self.r_min, self.r_max)

    def _rational(self, rng, lo, hi):
        d = rng.randint(1, 32)
        a = math.ceil(lo * d)
        b = math.floor(hi * d)
        if a > b:
            a = b = max(1, round((lo + hi) / 2 * d))
        n = rng.randint(a, b)
        return Fraction(n, d)

    def _real_value(self, rng):
        q = self._rational(rng, self.r_min, self.r_max)
        if rng.random() < 0.5:
            q = -q
        return float(q)

    def _complex_value(self, rng):
        for _ in range(200):
            re = self._rational(rng, -self.r_max, self.r_max)
            im = self._rational(rng, -self.r_max, self.r_max)
            r = math.hypot(float(re), float(im))
            if self.r_min <= r <= self.r_max:
                return complex(float(re), float(im))
        return complex(1.0, 0.5)

    def _rational_sym(self, rng, lo, hi):
        # symmetric window [-hi,-lo] u [lo,hi]
        q = self._rational(rng, lo, hi)
        return -q if rng.random() < 0.5 else q

    def points(self, coords, guards=(), k=None, basepoint=None):
        """Emit k accepted points (dicts name -> complex)."""
        rng = random.Random(self.seed)
        k = self.k if k is None else k
        out = []
        rejected = 0
        while len(out) < k:
            p = {}
            for name, kind in coords:
                if kind == "real":
                    p[name] = complex(self._real_value(rng), 0.0)
                else:
                    p[name] = self._complex_value(rng)
            ok = True
            for g in guards:
                try:
                    if abs(evaluate(g, p)) <= GUARD_EPS:
                        ok = False
                        break
                except SingularPointError:
                    ok = False
                    break
                except ExprError:
                    # guard mentions symbols outside this chart: skip it
                    continue
            if ok:
                out.append(p)
                rejected = 0
            else:
                rejected += 1
                if rejected > 5000:
                    raise DomainTooThinError(
                        "more than 5000 consecutive samples rejected by guards")
        return out


class ZeroCertificate:
    def __init__(self, verdict, seed, points, values, scale):
        self.verdict = bool(verdict)
        self.seed = seed
        self.points = points
        self.values = values
        self.scale = scale

    def __bool__(self):
        return self.verdict

    def __repr__(self):
        return "ZeroCertificate(%s, seed=%s, max|v|=%.3g, scale=%.3g)" % (
            self.verdict, self.seed,
            max((abs(v) for v in self.values), default=0.0), self.scale)


TOL_ABS = 1e-9
TOL_REL = 1e-9


def is_zero(e, sampler, coords, guards=(), tol_abs=TOL_ABS, tol_rel=TOL_REL):
    """Probabilistic zero test with certificate.

    True iff |e| < tol_abs + tol_rel*scale at all sample points, where scale
    is the largest intermediate magnitude seen while evaluating e there.
    Points where evaluation is singular are resampled (handled by guards and
    by skipping, up to the sampler's rejection budget).
    """
    e = _as_expr(e)
    if e.kind == "const":
        v = e.const_value()
        return ZeroCertificate(abs(v) < tol_abs, sampler.seed, [], [v], 1.0)
    pts = sampler.points(coords, guards)
    vals = []
    verdict = True
    max_scale = 0.0
    used = []
    extra = sampler.points(coords, guards, k=max(2 * sampler.k, 16))
    pool = pts + [p for p in extra if p not in pts]
    for p in pool:
        if len(vals) >= sampler.k:
            break
        cell = [0.0]
        try:
            v = evaluate(e, p, cell)
        except SingularPointError:
            continue
        vals.append(v)
        used.append(p)
        max_scale = max(max_scale, cell[0])
        if abs(v) >= tol_abs + tol_rel * cell[0]:
            verdict = False
    if not vals:
        raise DomainTooThinError("every sample point was singular for the expression")
    return ZeroCertificate(verdict, sampler.seed, used, vals, max_scale)


def rationalize(x, max_den=64, tol=1e-6):
    """Nearest rational with bounded denominator, or None if not within tol."""
    f = Fraction(x).limit_denominator(max_den)
    if abs(float(f) - x) < tol:
        return f
    return None


def rationalize_complex(v, max_den=64, tol=1e-6):
    re = rationalize(v.real, max_den, tol)
    im = rationalize(v.imag, max_den, tol)
    if re is None or im is None:
        return None
    return const(re, im)
