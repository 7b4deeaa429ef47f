"""Elliptic decomposable systems: ellipticity and decomposability checks,
Darboux integrability with rank bookkeeping, Darboux-invariant verification,
the conformal symbol of a planar second-order PDE, and the singular system
with its normality test."""

from __future__ import annotations

from collections import Counter

import numpy as np

from . import expr as ex
from . import linalg as la
from .expr import SingularPointError
from .flags import (FlagError, SubBundleModel, annihilator, bracket_flag,
                    terminal_derived)


class EllipticityError(Exception):
    """An ellipticity clause failed; the message names the clause and a
    witness."""


def _realified_generators(Dplus):
    """Real frame (A_k, B_k) with the k-th D+ generator equal to A_k + i B_k."""
    half = ex.const(ex.Fraction(1, 2))
    mhalf_i = ex.const(ex.Fraction(0), ex.Fraction(-1, 2))
    pairs = []
    for g in Dplus.generators:
        gb = g.conj()
        A = (g + gb).scale(half)
        B = (g - gb).scale(mhalf_i)
        pairs.append((A, B))
    return pairs


class EllipticStructure:
    """Certified elliptic structure (I, D, J) presented through D+.

    Fields: chart, I (1-form bundle), D (real distribution), Dplus/Dminus,
    V = (D-)^perp, and the J action table on the real frame of D."""

    def __init__(self, chart, I, D, Dplus, Dminus, V, j_pairs, checks):
        self.chart = chart
        self.I = I
        self.D = D
        self.Dplus = Dplus
        self.Dminus = Dminus
        self.V = V
        self.j_pairs = j_pairs  # list of (A_k, B_k); J(A) = -B, J(B) = A
        self.checks = dict(checks)

    @property
    def d(self):
        return self.Dplus.rank

    @property
    def m(self):
        return self.chart.dim

    def __repr__(self):
        return "EllipticStructure(m=%d, d=%d)" % (self.m, self.d)


def check_elliptic(Dplus, sampler, I=None):
    """Certify that D+ presents an elliptic distribution.

    Verifies: [i] rank D = 2 rank D+ (D+ and its conjugate independent, so
    D has even rank and J is well-defined with J^2 = -Id); [ii] D is
    bracket-generating; [iii] J well-defined on the real frame; [iv]
    [D+, D-] contained in D (x) C.  Returns an EllipticStructure."""
    ch = Dplus.chart
    S = sampler
    Dminus = SubBundleModel(ch, "fields", [g.conj() for g in Dplus.generators],
                            S, Dplus.guards, name="D-")
    checks = {}
    d = Dplus.rank
    # [i]/[iii]: D+ (+) conj(D+) has rank 2d, so J (= +i on D+, -i on D-) is
    # well-defined and squares to -Id on the real frame
    joint = la.certified_rank(Dplus.rows() + Dminus.rows(), ch, S, Dplus.guards)
    checks["even_rank"] = checks["j_well_defined"] = (joint == 2 * d)
    if joint != 2 * d:
        raise EllipticityError(
            "clause [i]: D+ meets its conjugate (rank of D+ + conj(D+) is %d,"
            " expected %d)" % (joint, 2 * d))
    j_pairs = _realified_generators(Dplus)
    real_gens = [f for pair in j_pairs for f in pair]
    D = SubBundleModel(ch, "fields", real_gens, S, Dplus.guards, name="D")
    # [ii]: bracket-generating
    term, rep = bracket_flag(D, S)
    checks["bracket_generating"] = (term.rank == ch.dim)
    if term.rank != ch.dim:
        raise EllipticityError(
            "clause [ii]: D is not bracket-generating (flag %s stalls at rank"
            " %d < %d)" % (rep.table, term.rank, ch.dim))
    # [iv]: [D+, D-] contained in D (x) C
    from .chart import lie_bracket
    DC_rows = Dplus.rows() + Dminus.rows()
    for a, X in enumerate(Dplus.generators):
        for b, Y in enumerate(Dminus.generators):
            br = lie_bracket(X, Y)
            if not la.membership([br.coeff_vector()], DC_rows, ch, S,
                                 Dplus.guards):
                checks["mixed_bracket"] = False
                raise EllipticityError(
                    "clause [iv]: [D+_%d, D-_%d] is not a section of D (x) C"
                    % (a + 1, b + 1))
    checks["mixed_bracket"] = True
    if I is None:
        I = annihilator(D, S)
    V = annihilator(Dminus, S)
    return EllipticStructure(ch, I, D, Dplus, Dminus, V, j_pairs, checks)


def check_decomposable(I, ES, sampler, two_forms=None):
    """True iff each 2-form generator's pure Lambda^2(V)-part lies back in the
    span of the generators modulo the algebraic ideal of the 1-forms.

    two_forms defaults to the exterior derivatives of the generators of I.
    Forms modulo the ideal of I are represented by their values on the frame
    (X_a) of D+ followed by (conj X_a) of D-; the Lambda^2(V)-part keeps
    exactly the values on unbarred pairs."""
    if two_forms is None:
        two_forms = [th.d() for th in I.generators]
    ch = ES.chart
    frame = list(ES.Dplus.generators) + list(ES.Dminus.generators)
    d = ES.Dplus.rank
    pairs = [(a, b) for a in range(len(frame)) for b in range(a + 1, len(frame))]
    rows, proj = [], []
    for om in two_forms:
        vals = [om.eval_on(frame[a], frame[b]) for a, b in pairs]
        rows.append(vals)
        proj.append([v if (a < d and b < d) else ex.ZERO
                     for v, (a, b) in zip(vals, pairs)])
    proj = [p for p in proj if any(not ex._is_zero_const(c) for c in p)]
    if not proj:
        return True
    return la.membership(proj, rows, ch, sampler, ES.Dplus.guards)


class DIReport:
    """Darboux-integrability report: clause booleans, ranks and
    classification."""

    def __init__(self, elliptic_checks, decomposable, darboux, m, d, q,
                 v_test, d_test, numeta_ok, invariants=()):
        self.elliptic_checks = dict(elliptic_checks)
        self.decomposable = decomposable
        self.darboux_integrable = darboux
        self.m = m
        self.d = d
        self.q = q
        self.n = m - 2 * q
        self.v_test = v_test
        self.d_test = d_test
        self.numeta_ok = numeta_ok
        self.invariants = list(invariants)
        minimal = darboux and q == d
        maximal = darboux and m % 2 == 0 and q == m // 2
        if minimal and maximal:
            self.classification = "minimal and maximal"
        elif minimal:
            self.classification = "minimal"
        elif maximal:
            self.classification = "maximal"
        else:
            self.classification = "neither minimal nor maximal"
        if darboux and not (d <= q <= m // 2):
            raise FlagError("rank bounds violated: d=%d, q=%d, m=%d"
                            % (d, q, m))

    def as_dict(self):
        return {
            "elliptic": all(self.elliptic_checks.values()),
            "decomposable": self.decomposable,
            "darboux_integrable": self.darboux_integrable,
            "m": self.m, "d": self.d, "q": self.q, "n": self.n,
            "classification": self.classification,
        }

    def __repr__(self):
        return ("DIReport(DI=%s, m=%d, d=%d, q=%d, %s)"
                % (self.darboux_integrable, self.m, self.d, self.q,
                   self.classification))


def check_darboux(ES, sampler, decomposable=None):
    """Darboux-integrability report for a certified elliptic structure.

    Runs the dual tests V^(inf) + conj(V) = T*M (x) C and
    D+^(inf) /\\ D- = 0 independently; they must agree."""
    ch = ES.chart
    S = sampler
    m, d = ES.m, ES.d
    Vinf, vrep = terminal_derived(ES.V, S)
    q = Vinf.rank
    Vbar = SubBundleModel(ch, "forms", [g.conj() for g in ES.V.generators], S,
                          ES.V.guards, name="conj(V)")
    joint_v = la.certified_rank(Vinf.rows() + Vbar.rows(), ch, S, ES.V.guards)
    v_test = (joint_v == m)
    Dp_inf, drep = bracket_flag(ES.Dplus, S)
    joint_d = la.certified_rank(Dp_inf.rows() + ES.Dminus.rows(), ch, S,
                                ES.Dplus.guards)
    d_test = (joint_d == Dp_inf.rank + d)
    if v_test != d_test:
        raise FlagError(
            "internal consistency: V-test says %s but D-test says %s"
            % (v_test, d_test))
    # rank(conj(V) /\ V^(inf)) = q - d whenever DI holds
    inter = (m - d) + q - joint_v
    numeta_ok = (inter == q - d) if v_test else True
    if decomposable is None and ES.I is not None:
        decomposable = check_decomposable(ES.I, ES, S)
    return DIReport(ES.checks, decomposable, v_test and d_test, m, d, q,
                    v_test, d_test, numeta_ok)


def verify_darboux_invariant(f, ES, sampler):
    """True iff X(f) vanishes for every generator X of D-."""
    f = ES.chart.resolve(f)
    guards = ES.Dminus.guards
    for X in ES.Dminus.generators:
        if not ES.chart.is_zero(X.apply(f), sampler, guards):
            return False
    return True


def conformal_symbol(I, sampler, n_points=3):
    """Classification of the conformal symbol of a rank-3 Pfaffian system on
    a 7-dimensional chart: 'elliptic', 'hyperbolic' or 'degenerate'.

    The symbol <phi, psi> Vol = d phi ^ d psi ^ theta0 ^ theta1 ^ theta2 is
    computed on the generator basis against the wedge of all chart
    differentials; only the rank and relative eigenvalue signs are used, so
    the conformal factor (possibly complex for charts with complex pairs) is
    normalized away pointwise."""
    ch = I.chart
    if I.rank != 3 or ch.dim != 7:
        raise FlagError("conformal_symbol expects a rank-3 system on a "
                        "7-dimensional chart")
    thetas = list(I.generators)
    top = ch.dx(*ch.directions[0])
    for nm, bar in ch.directions[1:]:
        top = top.wedge(ch.dx(nm, bar))
    [(top_idx, top_coef)] = list(top.terms.items())
    wedge3 = thetas[0].wedge(thetas[1]).wedge(thetas[2])
    G = [[None] * 3 for _ in range(3)]
    for i in range(3):
        dthi = thetas[i].d()
        for j in range(i, 3):
            w = dthi.wedge(thetas[j].d()).wedge(wedge3)
            coef = w.terms.get(top_idx, ex.ZERO)
            G[i][j] = G[j][i] = ex.div(coef, top_coef)
    pts = la._valid_points(ch, sampler, ch.guards, G, n_points)
    verdicts = []
    for p in pts:
        g = np.array([[ex.evaluate(G[i][j], p) for j in range(3)]
                      for i in range(3)])
        scale = np.abs(g).max()
        if scale < 1e-12:
            verdicts.append("degenerate")
            continue
        # normalize the conformal (possibly complex) factor away
        idx = np.unravel_index(np.argmax(np.abs(g)), g.shape)
        gn = g / g[idx]
        if np.abs(gn.imag).max() > 1e-6:
            verdicts.append("degenerate")
            continue
        w = np.linalg.eigvalsh(gn.real)
        big = [v for v in w if abs(v) > 1e-7 * max(abs(w).max(), 1.0)]
        if len(big) != 2:
            verdicts.append("degenerate")
        elif big[0] * big[1] > 0:
            verdicts.append("elliptic")
        else:
            verdicts.append("hyperbolic")
    value, n = Counter(verdicts).most_common(1)[0]
    if n <= len(verdicts) // 2:
        raise la.RankInstabilityError("conformal symbol unstable: %s"
                                      % verdicts, witnesses=verdicts)
    return value


def singular_system_generators(ES, cf):
    """Generators of the singular system V: 1-forms theta^i, eta^r,
    conj(eta^r), sigma^u and 2-forms d(conj eta^r), Abar-part of d theta^i.

    cf must be a 1-adapted coframe set (duck-typed: .theta, .eta, .sigma)."""
    one_forms = (list(cf.theta) + list(cf.eta)
                 + [e.conj() for e in cf.eta] + list(cf.sigma))
    two_forms = [e.conj().d() for e in cf.eta]
    two_forms += _abar_parts(ES, cf)
    return one_forms, two_forms


def _abar_parts(ES, cf, sampler=None):
    """The pure conj(pi)-wedge-conj(pi) part of each d theta^i, extracted
    against the dual frame of the full adapted coframe."""
    from .chart import DiffForm
    from .flags import dual_frame
    ch = ES.chart
    sampler = sampler or ex.Sampler(seed=42)
    pis = list(cf.eta) + list(cf.sigma)
    pibars = [f.conj() for f in pis]
    coframe = list(cf.theta) + pis + pibars
    Z = dual_frame(coframe, ch, sampler, ch.guards)
    n = len(cf.theta)
    q = len(pis)
    Zbar = Z[n + q:]
    out = []
    for th in cf.theta:
        dth = th.d()
        proj = DiffForm(ch, 2, {})
        for a in range(q):
            for b in range(a + 1, q):
                coef = dth.eval_on(Zbar[a], Zbar[b])
                proj = proj + pibars[a].wedge(pibars[b]).scale(coef)
        out.append(proj.normalized())
    return out


def is_normal(ES, cf, sampler):
    """True iff the singular system is Pfaffian: every 2-form generator is
    congruent, modulo the algebraic ideal of the 1-form generators, to a
    combination of the derivatives d theta^i, d eta^r, d conj(eta^r)."""
    ch = ES.chart
    one_forms, two_forms = singular_system_generators(ES, cf)
    W = annihilator(SubBundleModel(ch, "forms", one_forms, sampler, ch.guards,
                                   name="V1"), sampler)
    frame = W.generators
    pairs = [(a, b) for a in range(len(frame)) for b in range(a + 1, len(frame))]
    if not pairs:
        return True
    span_forms = ([th.d() for th in cf.theta] + [e.d() for e in cf.eta]
                  + [e.conj().d() for e in cf.eta])
    span_rows = [[om.eval_on(frame[a], frame[b]) for a, b in pairs]
                 for om in span_forms]
    test_rows = [[om.eval_on(frame[a], frame[b]) for a, b in pairs]
                 for om in two_forms]
    test_rows = [r for r in test_rows
                 if any(not ex._is_zero_const(c) for c in r)]
    if not test_rows:
        return True
    return la.membership(test_rows, span_rows, ch, sampler, ch.guards)
