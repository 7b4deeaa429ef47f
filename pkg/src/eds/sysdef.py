"""Line-oriented ``.eds`` system-definition files.

A file is split into sections introduced by ``[coords]``, ``[guards]``,
``[forms]``, ``[fields]``, ``[dplus]``, ``[coframe]``, ``[group]``,
``[action]`` and ``[expect]``.  Entries are separated by newlines or
semicolons; ``#`` starts a comment.  Scalar expressions use the expr
grammar; 1-forms additionally use ``d(x)`` / ``d(x~)`` factors and vector
fields use ``V(x)`` / ``V(x~)``, linearly.
"""
from __future__ import annotations

import re

from . import expr as ex
from .chart import Chart
from .extension import GroupAction, LieGroupModel
from .vessiot import CoframeSet, StructureConstants

_SECTIONS = ("coords", "guards", "forms", "fields", "dplus", "coframe",
             "group", "action", "expect")


class SysDefError(ValueError):
    pass


def _strip_comment(line):
    out = []
    for ch in line:
        if ch == "#":
            break
        out.append(ch)
    return "".join(out)


def _split_sections(text):
    """Return ({section: [lines]}, preamble lines)."""
    sections = {}
    pre = []
    cur = None
    for raw in text.splitlines():
        line = _strip_comment(raw).strip()
        if not line:
            continue
        m = re.fullmatch(r"\[(\w+)\]", line)
        if m:
            nm = m.group(1)
            if nm not in _SECTIONS:
                raise SysDefError("unknown section [%s]" % nm)
            cur = sections.setdefault(nm, [])
            continue
        if cur is None:
            pre.append(line)
        else:
            cur.append(line)
    return sections, pre


def _items(lines):
    """Split section lines on semicolons into bare entries."""
    out = []
    for line in lines:
        for part in line.split(";"):
            part = part.strip()
            if part:
                out.append(part)
    return out


_PLACEHOLDER = "_sd%d"


def _parse_linear(ch, text, head):
    """Parse ``text`` as a combination linear in ``head(x)`` / ``head(x~)``
    factors.  Returns ({(name, bar): Expr}, scalar remainder Expr)."""
    dirs = []

    def repl(m):
        nm, bar = m.group(1), m.group(2) == "~"
        if (nm, bar) not in ch.dir_index:
            raise SysDefError("%s(%s%s): not a coordinate direction"
                              % (head, nm, "~" if bar else ""))
        dirs.append((nm, bar))
        return _PLACEHOLDER % (len(dirs) - 1)

    pat = re.escape(head) + r"\(\s*([A-Za-z_]\w*)\s*(~?)\s*\)"
    s = re.sub(pat, repl, text)
    try:
        e = ex.parse(s)
    except ex.ParseError as err:
        raise SysDefError("cannot parse %r: %s" % (text, err))
    coeffs = {}
    for i, d in enumerate(dirs):
        c = ex.wirtinger(e, _PLACEHOLDER % i, real_syms=ch.real_syms)
        if any(v.startswith("_sd") for v in c.free_symbols()):
            raise SysDefError("entry not linear in %s(...): %r" % (head, text))
        if d in coeffs:
            c = ex.add(coeffs[d], c)
        coeffs[d] = c
    rest = ex.normalize(ex.subs(e, {_PLACEHOLDER % i: ex.ZERO
                                    for i in range(len(dirs))},
                                real_syms=ch.real_syms))
    return coeffs, rest


def parse_form(ch, text, env=None):
    """Parse a 1-form written with ``d(x)`` factors; bare names may refer to
    previously defined forms in ``env``."""
    env = env or {}
    if text in env:
        return env[text]
    coeffs, rest = _parse_linear(ch, text, "d")
    if not ch.is_zero(rest, _scratch_sampler(ch)):
        raise SysDefError("1-form has a scalar part: %r" % text)
    return ch.form({(d,): c for d, c in coeffs.items()}, degree=1)


def parse_field(ch, text, env=None):
    """Parse a vector field written with ``V(x)`` factors; bare names may
    refer to previously defined fields in ``env``."""
    env = env or {}
    if text in env:
        return env[text]
    coeffs, rest = _parse_linear(ch, text, "V")
    if not ch.is_zero(rest, _scratch_sampler(ch)):
        raise SysDefError("vector field has a scalar part: %r" % text)
    return ch.field(coeffs)


def _scratch_sampler(ch):
    return ex.Sampler(seed=7, k=4)


def _parse_assign(item):
    if "=" not in item:
        raise SysDefError("expected name = value, got %r" % item)
    nm, val = item.split("=", 1)
    return nm.strip(), val.strip()


def _parse_bracket_line(n, val):
    """``[i,j] = a*Z1 + b*Z2`` -> ((i-1, j-1), {k-1: Fraction})."""
    m = re.fullmatch(r"\[\s*(\d+)\s*,\s*(\d+)\s*\]\s*=\s*(.*)", val)
    if not m:
        raise SysDefError("bad bracket line %r" % val)
    i, j = int(m.group(1)) - 1, int(m.group(2)) - 1
    if not (0 <= i < n and 0 <= j < n):
        raise SysDefError("bracket indices out of range in %r" % val)
    rhs = m.group(3).strip()
    comps = {}
    if rhs not in ("0", ""):
        e = ex.parse(rhs)
        for k in range(n):
            c = ex.wirtinger(e, "Z%d" % (k + 1))
            if any(v.startswith("Z") for v in c.free_symbols()):
                raise SysDefError("bracket RHS not linear: %r" % val)
            if not c.is_const():
                raise SysDefError("bracket coefficient not constant: %r"
                                  % val)
            v = c.const_value()
            q = ex.rationalize(v.real) if abs(v.imag) < 1e-9 else None
            if q is None:
                raise SysDefError("bracket coefficient not rational: %r"
                                  % val)
            if q != 0:
                comps[k] = q
        rem = ex.normalize(ex.subs(e, {"Z%d" % (k + 1): ex.ZERO
                                       for k in range(n)}))
        if not (rem.is_const() and abs(rem.const_value()) < 1e-12):
            raise SysDefError("bracket RHS has non-Z part: %r" % val)
    return (i, j), comps


class SystemDefinition:
    """Parsed ``.eds`` file: chart, named forms/fields and the designated
    D+ / coframe / group / action blocks."""

    def __init__(self, name, chart, forms, fields, dplus, coframe, group,
                 action, expect):
        self.name = name
        self.chart = chart
        self.forms = forms
        self.fields = fields
        self.dplus = dplus
        self.coframe = coframe
        self.group = group
        self.action = action
        self.expect = expect

    @classmethod
    def parse(cls, text, name=""):
        sections, pre = _split_sections(text)
        for line in pre:
            k, v = _parse_assign(line)
            if k == "system":
                name = v
            else:
                raise SysDefError("unexpected line before sections: %r"
                                  % line)
        if "coords" not in sections:
            raise SysDefError("missing [coords] section")
        entries = []
        for item in _items(sections["coords"]):
            parts = item.split()
            if len(parts) != 2 or parts[0] not in ("real", "pair", "complex"):
                raise SysDefError("bad coordinate declaration %r" % item)
            kind = "pair" if parts[0] == "complex" else parts[0]
            entries.append((kind, parts[1]))
        guards = []
        ch = Chart(entries, name=name)
        for item in _items(sections.get("guards", [])):
            guards.append(ch.resolve(item))
        ch = Chart(entries, guards=guards, name=name)

        forms = {}
        for item in _items(sections.get("forms", [])):
            nm, val = _parse_assign(item)
            forms[nm] = parse_form(ch, val, forms)
        fields = {}
        for item in _items(sections.get("fields", [])):
            nm, val = _parse_assign(item)
            fields[nm] = parse_field(ch, val, fields)
        dplus = [parse_field(ch, item, fields)
                 for item in _items(sections.get("dplus", []))] or None
        coframe = cls._parse_coframe(ch, sections.get("coframe"), forms,
                                     guards)
        group = cls._parse_group(sections.get("group"))
        action = cls._parse_action(ch, sections.get("action"), group, fields)
        expect = {}
        for item in _items(sections.get("expect", [])):
            nm, val = _parse_assign(item)
            expect[nm] = val
        return cls(name, ch, forms, fields, dplus, coframe, group, action,
                   expect)

    @classmethod
    def load(cls, path):
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
        stem = re.sub(r"\.eds$", "", path.rsplit("/", 1)[-1])
        return cls.parse(text, name=stem)

    @staticmethod
    def _parse_coframe(ch, lines, forms, guards):
        if lines is None:
            return None
        theta, eta, sigma, bp = [], [], [], None
        for item in _items(lines):
            if ":" not in item:
                raise SysDefError("bad coframe line %r" % item)
            key, val = item.split(":", 1)
            key, val = key.strip(), val.strip()
            if key in ("theta", "eta", "sigma"):
                dst = {"theta": theta, "eta": eta, "sigma": sigma}[key]
                for piece in val.split(","):
                    piece = piece.strip()
                    if piece:
                        dst.append(parse_form(ch, piece, forms))
            elif key == "basepoint":
                assign = {}
                for piece in val.split(","):
                    nm, v = _parse_assign(piece)
                    e = ex.normalize(ex.parse(v))
                    if not e.is_const():
                        raise SysDefError("basepoint value not constant: %r"
                                          % piece)
                    assign[nm] = e.const_value()
                bp = ch.basepoint_assignment(assign)
            else:
                raise SysDefError("bad coframe key %r" % key)
        if not theta and not eta and not sigma:
            raise SysDefError("[coframe] section is empty")
        return CoframeSet(ch, theta, eta, sigma, basepoint=bp, guards=guards)

    @staticmethod
    def _parse_group(lines):
        if lines is None:
            return None
        coords, gguards, brackets = [], [], {}
        mu_texts = {"mu_L": [], "mu_R": []}
        flat = []
        for line in lines:
            if ":" not in line:
                raise SysDefError("bad group line %r" % line)
            key, val = line.split(":", 1)
            for piece in val.split(";"):
                if piece.strip():
                    flat.append((key.strip(), piece.strip()))
        for key, val in flat:
            if key == "coords":
                coords = [p.strip() for p in val.split(",") if p.strip()]
            elif key == "guards":
                gguards.extend(p.strip() for p in val.split(",")
                               if p.strip())
            elif key == "bracket":
                if not coords:
                    raise SysDefError("bracket before coords in [group]")
                ij, comps = _parse_bracket_line(len(coords), val)
                brackets[ij] = comps
            elif key in mu_texts:
                mu_texts[key].append(val)
            else:
                raise SysDefError("bad group key %r" % key)
        if not coords:
            raise SysDefError("[group] needs a coords line")
        gch = Chart([("pair", nm) for nm in coords], guards=gguards,
                    name="G")
        C = StructureConstants.from_brackets(len(coords), brackets)
        mu = {}
        for key, texts in mu_texts.items():
            if len(texts) != len(coords):
                raise SysDefError("[group] needs %d %s entries, got %d"
                                  % (len(coords), key, len(texts)))
            mu[key] = [parse_form(gch, t) for t in texts]
        return LieGroupModel(gch, C, mu["mu_L"], mu["mu_R"])

    @staticmethod
    def _parse_action(ch, lines, group, fields):
        if lines is None:
            return None
        if group is None:
            raise SysDefError("[action] requires a [group] section")
        gens = [None] * group.C.n
        for item in _items(lines):
            nm, val = _parse_assign(item)
            m = re.fullmatch(r"Z(\d+)", nm)
            if not m or not (1 <= int(m.group(1)) <= group.C.n):
                raise SysDefError("action generators must be Z1..Z%d, "
                                  "got %r" % (group.C.n, nm))
            gens[int(m.group(1)) - 1] = parse_field(ch, val, fields)
        if any(g is None for g in gens):
            raise SysDefError("[action] must define every generator")
        return GroupAction(group, ch, gens)


# ------------------------------------------------------------------ export

def _expr_str(e):
    return ex.to_str(ex.normalize(e))


def form_to_text(ch, f):
    """Render a 1-form as an expr string with d(x) factors."""
    if f.degree != 1:
        raise SysDefError("can only export 1-forms")
    parts = []
    for idx, coef in sorted(f.terms.items()):
        nm, bar = ch.directions[idx[0]]
        c = _expr_str(coef)
        d = "d(%s%s)" % (nm, "~" if bar else "")
        parts.append(d if c == "1" else "(%s)*%s" % (c, d))
    return " + ".join(parts) if parts else "0*d(%s)" % ch.directions[0][0]


def field_to_text(ch, X):
    parts = []
    for idx, coef in sorted(X.comps.items()):
        nm, bar = ch.directions[idx]
        c = _expr_str(coef)
        v = "V(%s%s)" % (nm, "~" if bar else "")
        parts.append(v if c == "1" else "(%s)*%s" % (c, v))
    return " + ".join(parts) if parts else "0*V(%s)" % ch.directions[0][0]
