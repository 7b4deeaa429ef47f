"""Lie-group models on coordinate charts, group actions by holomorphic
vector fields, the integrable-extension construction on slice x K product
charts, quotient-diagram verification on explicit coordinate maps, and
solution-formula / PDE residual checks."""

from __future__ import annotations

import re
from fractions import Fraction

from . import expr as ex
from . import linalg as la
from .chart import (Chart, CoordinateMap, DiffForm, VectorField, lie_bracket,
                    lie_derivative, pairing)
from .flags import SubBundleModel, _field_from_vector, terminal_derived


class ExtensionError(Exception):
    pass


class CheckReport:
    """Named boolean certificates with optional witnesses."""

    def __init__(self, name, checks, witnesses=None, extra=None):
        self.name = name
        self.checks = dict(checks)
        self.witnesses = dict(witnesses or {})
        self.extra = dict(extra or {})

    @property
    def passed(self):
        return all(self.checks.values())

    def failures(self):
        return [k for k, v in self.checks.items() if not v]

    def __repr__(self):
        return "CheckReport(%s, passed=%s, failures=%s)" % (
            self.name or "?", self.passed, self.failures())


# ------------------------------------------------------------- chart plumbing

def product_chart(a, b, guards=(), name=""):
    """Chart on the product, coordinates of `a` followed by those of `b`."""
    return Chart(a.entries + b.entries,
                 guards=tuple(a.guards) + tuple(b.guards) + tuple(guards),
                 name=name or "%sx%s" % (a.name or "?", b.name or "?"))


def doubled_chart(chart, suffixes=("_a", "_b"), guards=()):
    """Two renamed copies of a chart on one product (for multiplication
    maps); the chart's guards are imposed on both copies."""
    sa, sb = suffixes
    entries = ([(k, nm + sa) for k, nm in chart.entries]
               + [(k, nm + sb) for k, nm in chart.entries])
    ren = []
    for s in suffixes:
        mapping = {nm: ex.sym(nm + s) for _, nm in chart.entries}
        ren.extend(ex.subs(g, mapping) for g in chart.guards)
    return Chart(entries, guards=tuple(ren) + tuple(guards),
                 name="%s^2" % (chart.name or "?"))


def transplant_form(f, target):
    """The same named-coordinate form on a larger chart."""
    terms = {}
    dirs = f.chart.directions
    for idx, c in f.terms.items():
        terms[tuple(dirs[i] for i in idx)] = c
    return target.form(terms, degree=f.degree)


def transplant_field(X, target):
    dirs = X.chart.directions
    return target.field({dirs[i]: c for i, c in X.comps.items()})


def restrict_to_slice(form, slice_chart, frozen):
    """Pull a form back along the slice inclusion: differentials of frozen
    coordinates drop, coefficients are evaluated at the frozen values."""
    src = form.chart
    mapping = {}
    for nm, val in frozen.items():
        v = complex(val)
        mapping[nm] = ex.const(Fraction(v.real), Fraction(v.imag))
    keep = {nm for _, nm in slice_chart.entries}
    terms = {}
    for idx, c in form.terms.items():
        dirs = [src.directions[i] for i in idx]
        if any(nm not in keep for nm, _ in dirs):
            continue
        cc = ex.subs(c, mapping, src.real_syms)
        slice_chart.check_symbols(cc)
        terms[tuple(dirs)] = cc
    return slice_chart.form(terms, degree=form.degree)


def _holomorphy_failures(forms, chart, sampler):
    """(gen, direction) witnesses of dzbar-terms or zbar-dependence."""
    bad = []
    for gi, g in enumerate(forms):
        for idx, c in g.terms.items():
            for i in idx:
                nm, bar = chart.directions[i]
                if bar or nm in chart.real_syms:
                    bad.append((gi, "term d(%s)" % (
                        "conj(%s)" % nm if bar else nm)))
            for kind, nm in chart.entries:
                if kind != "pair":
                    continue
                dc = chart.diff(c, (nm, True))
                if ex._is_zero_const(dc):
                    continue
                if not chart.is_zero(dc, sampler):
                    bad.append((gi, "coefficient depends on conj(%s)" % nm))
    return bad


def two_form_in_ideal(omega2, one_forms, chart, sampler, guards=()):
    """True iff the 2-form vanishes on the annihilator of the 1-forms,
    i.e. lies in the algebraic ideal they generate."""
    rows = [t.coeff_vector() for t in one_forms]
    vecs = la.symbolic_nullspace(rows, chart, sampler, guards)
    fields = [_field_from_vector(chart, v) for v in vecs]
    for a in range(len(fields)):
        for b in range(a + 1, len(fields)):
            val = omega2.eval_on(fields[a], fields[b])
            if not chart.is_zero(val, sampler, guards):
                return False
    return True


# ------------------------------------------------------------ Lie group model

class LieGroupModel:
    """Complex Lie group in a coordinate patch: structure constants C of the
    left-invariant basis, left/right-invariant (1,0)-forms mu_L/mu_R, the
    change-of-basis matrix Lambda with mu_L = Lambda mu_R (computed from the
    forms when not supplied), and an optional multiplication map on a
    doubled chart."""

    def __init__(self, chart, C, mu_L, mu_R, Lam=None, multiplication=None,
                 name=""):
        self.chart = chart
        self.C = C
        self.n = C.n
        self.name = name
        if any(kind != "pair" for kind, _ in chart.entries):
            raise ExtensionError("group chart coordinates must be complex")
        if len(chart.entries) != self.n:
            raise ExtensionError(
                "group chart has %d coordinates for a %d-dimensional algebra"
                % (len(chart.entries), self.n))
        if len(mu_L) != self.n or len(mu_R) != self.n:
            raise ExtensionError("need %d left and right invariant forms"
                                 % self.n)
        self.mu_L = list(mu_L)
        self.mu_R = list(mu_R)
        self._Lam = ([[chart.resolve(c) for c in row] for row in Lam]
                     if Lam is not None else None)
        self.multiplication = multiplication
        self._cache = {}

    def __repr__(self):
        return "LieGroupModel(%s, n=%d)" % (self.name or "?", self.n)

    def coeff_matrix(self, mus):
        """Rows of dc-components: mus[i] = sum_k M[i][k] dc_k."""
        return [[pairing(mus[i], self.chart.ddx(nm))
                 for _, nm in self.chart.entries] for i in range(self.n)]

    def Lambda(self, sampler):
        if self._Lam is not None:
            return self._Lam
        if "Lam" not in self._cache:
            ML = self.coeff_matrix(self.mu_L)
            MR = self.coeff_matrix(self.mu_R)
            MRinv = la.symbolic_inverse(MR, self.chart, sampler)
            self._cache["Lam"] = la.matmul(ML, MRinv)
        return self._cache["Lam"]

    def Omega(self, sampler):
        if "Om" not in self._cache:
            self._cache["Om"] = la.symbolic_inverse(
                self.Lambda(sampler), self.chart, sampler)
        return self._cache["Om"]

    def _dual_fields(self, mus, sampler, key):
        if key not in self._cache:
            M = self.coeff_matrix(mus)
            Minv = la.symbolic_inverse(M, self.chart, sampler)
            self._cache[key] = [
                self.chart.field({
                    (nm, False): Minv[k][j]
                    for k, (_, nm) in enumerate(self.chart.entries)})
                for j in range(self.n)]
        return self._cache[key]

    def left_fields(self, sampler):
        """Holomorphic left-invariant fields Z^L dual to mu_L; they generate
        right multiplication."""
        return self._dual_fields(self.mu_L, sampler, "ZL")

    def right_fields(self, sampler):
        """Holomorphic right-invariant fields Z^R dual to mu_R; they
        generate left multiplication."""
        return self._dual_fields(self.mu_R, sampler, "ZR")


def abelian_group_model(names, name="abelian"):
    """The additive group C^n with mu = dc and Lambda = Id."""
    from .vessiot import StructureConstants
    ch = Chart([("pair", nm) for nm in names], name=name)
    n = len(ch.entries)
    C = StructureConstants.from_brackets(n, {})
    mus = [ch.dx(nm) for _, nm in ch.entries]
    Lam = la.identity_matrix(n)
    return LieGroupModel(ch, C, mus, list(mus), Lam, name=name)


def verify_group_model(G, sampler):
    """Certify the Maurer-Cartan equations for mu_L and mu_R, holomorphy,
    mu_L = Lambda mu_R, the cocycle Lambda(ab) = Lambda(b) Lambda(a) (when a
    multiplication map is attached) and d Omega = Omega C mu_L."""
    ch = G.chart
    n = G.n
    C = G.C.C
    checks, wit = {}, {}

    def form_zero(f):
        return all(ch.is_zero(c, sampler) for c in f.terms.values())

    ok = True
    for i in range(n):
        resid = G.mu_L[i].d()
        for j in range(n):
            for k in range(j + 1, n):
                if C[i][j][k]:
                    resid = resid + G.mu_L[j].wedge(G.mu_L[k]).scale(
                        ex.const(C[i][j][k]))
        if not form_zero(resid):
            ok = False
            wit.setdefault("mu_L_maurer_cartan", []).append(i)
    checks["mu_L_maurer_cartan"] = ok

    ok = True
    for i in range(n):
        resid = G.mu_R[i].d()
        for j in range(n):
            for k in range(j + 1, n):
                if C[i][j][k]:
                    resid = resid - G.mu_R[j].wedge(G.mu_R[k]).scale(
                        ex.const(C[i][j][k]))
        if not form_zero(resid):
            ok = False
            wit.setdefault("mu_R_maurer_cartan", []).append(i)
    checks["mu_R_maurer_cartan"] = ok

    bad = _holomorphy_failures(G.mu_L + G.mu_R, ch, sampler)
    checks["mu_holomorphic"] = not bad
    if bad:
        wit["mu_holomorphic"] = bad

    Lam = G.Lambda(sampler)
    ok = True
    for i in range(n):
        resid = G.mu_L[i]
        for j in range(n):
            resid = resid - G.mu_R[j].scale(Lam[i][j])
        if not form_zero(resid):
            ok = False
            wit.setdefault("left_right_relation", []).append(i)
    checks["left_right_relation"] = ok

    Om = G.Omega(sampler)
    ok = True
    for i in range(n):
        for j in range(n):
            resid = ch.d_of(Om[i][j])
            for k in range(n):
                for l in range(n):
                    if C[k][l][j]:
                        resid = resid - G.mu_L[l].scale(
                            ex.mul(Om[i][k], ex.const(C[k][l][j])))
            if not form_zero(resid):
                ok = False
                wit.setdefault("dOmega", []).append((i, j))
    checks["dOmega"] = ok

    if G.multiplication is not None:
        mult = G.multiplication
        src = mult.source
        half = len(ch.entries)
        sa = src.entries[0][1][len(ch.entries[0][1]):]
        sb = src.entries[half][1][len(ch.entries[0][1]):]

        def ren(e, s):
            return ex.subs(e, {nm: ex.sym(nm + s) for _, nm in ch.entries})

        Lam_ab = [[mult.pullback_expr(Lam[i][j]) for j in range(n)]
                  for i in range(n)]
        Lam_a = [[ren(Lam[i][j], sa) for j in range(n)] for i in range(n)]
        Lam_b = [[ren(Lam[i][j], sb) for j in range(n)] for i in range(n)]
        prod = la.matmul(Lam_b, Lam_a)
        ok = True
        for i in range(n):
            for j in range(n):
                d = ex.add(Lam_ab[i][j], ex.neg(prod[i][j]))
                if not src.is_zero(d, sampler):
                    ok = False
                    wit.setdefault("cocycle", []).append((i, j))
        checks["cocycle"] = ok

    return CheckReport("group_model(%s)" % (G.name or "?"), checks, wit)


# --------------------------------------------------------------- group action

class GroupAction:
    """Infinitesimal action on a chart by holomorphic generators Z_i with
    [Z_i, Z_j] = C^k_ij Z_k; `model` is a LieGroupModel or bare
    StructureConstants."""

    def __init__(self, model, chart, generators, name=""):
        self.model = model
        self.C = model.C if isinstance(model, LieGroupModel) else model
        self.chart = chart
        self.Z = list(generators)
        self.name = name
        if len(self.Z) != self.C.n:
            raise ExtensionError("action needs %d generators" % self.C.n)

    def real_generators(self):
        return [Z + Z.conj() for Z in self.Z]

    def __repr__(self):
        return "GroupAction(%s, n=%d)" % (self.name or "?", len(self.Z))


def verify_action(A, sampler, guards=()):
    """Certify the bracket relations of the generators, their commutation
    with the conjugate generators, and holomorphy."""
    ch = A.chart
    n = len(A.Z)
    C = A.C.C
    checks, wit = {}, {}

    def field_zero(X):
        return all(ch.is_zero(c, sampler, guards) for c in X.comps.values())

    ok = True
    for i in range(n):
        for j in range(i + 1, n):
            resid = lie_bracket(A.Z[i], A.Z[j])
            for k in range(n):
                if C[k][i][j]:
                    resid = resid - A.Z[k].scale(ex.const(C[k][i][j]))
            if not field_zero(resid):
                ok = False
                wit.setdefault("brackets", []).append((i, j))
    checks["brackets"] = ok

    ok = True
    for i in range(n):
        for j in range(n):
            if not field_zero(lie_bracket(A.Z[i], A.Z[j].conj())):
                ok = False
                wit.setdefault("conjugate_brackets", []).append((i, j))
    checks["conjugate_brackets"] = ok

    bad = []
    for gi, Z in enumerate(A.Z):
        for i, c in Z.comps.items():
            nm, bar = ch.directions[i]
            if bar or nm in ch.real_syms:
                bad.append((gi, "component d/d(%s)" % nm))
        for c in Z.comps.values():
            for kind, nm in ch.entries:
                if kind != "pair":
                    continue
                dc = ch.diff(c, (nm, True))
                if not ex._is_zero_const(dc) and not ch.is_zero(dc, sampler, guards):
                    bad.append((gi, "coefficient depends on conj(%s)" % nm))
    checks["holomorphic"] = not bad
    if bad:
        wit["holomorphic"] = bad

    return CheckReport("action(%s)" % (A.name or "?"), checks, wit)


def _action_fields(A, real):
    fields = A.Z if isinstance(A, GroupAction) else list(A)
    return [Z + Z.conj() for Z in fields] if real else list(fields)


def verify_symmetry(A, H, sampler, real=False):
    """Certify L_Z theta in span(H) for every generator Z and generator
    theta of the sub-bundle H; real=True uses Z + conj(Z)."""
    fields = _action_fields(A, real)
    span = H.rows()
    wit = []
    for i, Z in enumerate(fields):
        for j, g in enumerate(H.generators):
            lg = lie_derivative(Z, g)
            if not la.membership([lg.coeff_vector()], span, H.chart, sampler,
                                 H.guards):
                wit.append((i, j))
    return CheckReport("symmetry", {"lie_derivatives_in_span": not wit},
                       {"lie_derivatives_in_span": wit} if wit else None)


def check_transversality(A, H, sampler, guards=(), real=False):
    """True iff the matrix theta^j(Z_i) has full column rank (no nonzero
    combination of the generators annihilates every generator of H)."""
    fields = _action_fields(A, real)
    rows = [[pairing(g, Z) for Z in fields] for g in H.generators]
    r = la.certified_rank(rows, H.chart, sampler,
                          tuple(H.guards) + tuple(guards))
    return r == len(fields)


def verify_invariant(f, A, sampler, mode="G", guards=()):
    """True iff f is annihilated by every (Z_i + conj Z_i) (mode 'G') or by
    every Z_i (mode 'K')."""
    if mode not in ("G", "K"):
        raise ExtensionError("mode must be 'G' or 'K'")
    ch = A.chart if isinstance(A, GroupAction) else _action_fields(A, False)[0].chart
    fields = _action_fields(A, mode == "G")
    f = ch.resolve(f)
    return all(bool(ch.is_zero(Z.apply(f), sampler, guards)) for Z in fields)


# ----------------------------------------------------------- jet prolongation

def total_derivative(chart, z, derivs):
    """D_z = d/dz + sum derivs[nm] d/d(nm) on a holomorphic jet chart."""
    pairs = {(z, False): ex.ONE}
    for nm, e in derivs.items():
        pairs[(nm, False)] = chart.resolve(e)
    return chart.field(pairs)


def prolong_contact_vf(Z, z, chain, derivs):
    """Prolong a contact vector field along a jet chain.

    chain: fiber coordinate names (w, w_z, w_zz, ...) in order; derivs maps
    each coordinate to its total z-derivative (chain successors, plus any
    constrained slots like l -> k_zz^2).  Components for chain[1:] are
    recomputed by phi_{j+1} = D_z phi_j - (d chain[j]/dz) D_z zeta."""
    ch = Z.chart
    Dz = total_derivative(ch, z, derivs)
    zi = ch.dir_index[(z, False)]
    zeta = Z.comps.get(zi, ex.ZERO)
    dzeta = Dz.apply(zeta)
    comps = dict(Z.comps)
    phi = Z.comps.get(ch.dir_index[(chain[0], False)], ex.ZERO)
    for j in range(len(chain) - 1):
        wnext = ch.resolve(derivs[chain[j]])
        phi = ex.normalize(ex.add(Dz.apply(phi),
                                  ex.neg(ex.mul(wnext, dzeta))))
        comps[ch.dir_index[(chain[j + 1], False)]] = phi
    return VectorField(ch, comps)


# ------------------------------------------------------- integrable extension

class ExtensionReport:
    """The extension H-hat on slice x K with its certificates."""

    def __init__(self, H, taus, etas, chart, group, gamma, checks,
                 witnesses=None, extra=None):
        self.H = H
        self.taus = taus
        self.etas = etas
        self.chart = chart
        self.group = group
        self.gamma = gamma
        self.checks = dict(checks)
        self.witnesses = dict(witnesses or {})
        self.extra = dict(extra or {})

    @property
    def passed(self):
        return all(self.checks.values())

    def failures(self):
        return [k for k, v in self.checks.items() if not v]

    def __repr__(self):
        return "ExtensionReport(rank=%d, passed=%s, failures=%s)" % (
            self.H.rank, self.passed, self.failures())


def build_extension_from_data(G, slice_chart, psis, etas, sampler,
                              gamma=None, thetas=None, guards=(), name=""):
    """Assemble H-hat = span{mu_R^j - psi^j, eta^r} on slice x K and certify
    holomorphy, right-K-invariance, transversality of the left-invariant
    fields, H-hat^(inf) = 0, d tau = A-tilde mod tau, and (when gamma is
    supplied as a dict of target-coordinate expressions) the pullback
    identity gamma* theta^i = tau^i - B^i_j conj(tau^j) with B = Omega
    conj(Lambda)."""
    n = G.n
    if len(psis) != n:
        raise ExtensionError("need one psi per group dimension")
    pch = product_chart(slice_chart, G.chart, guards, name and name + "xK")
    taus = [transplant_form(G.mu_R[j], pch) - transplant_form(psis[j], pch)
            for j in range(n)]
    eta_p = [transplant_form(e, pch) for e in etas]
    gens = taus + eta_p
    H = SubBundleModel(pch, "forms", gens, sampler,
                       name="Hhat(%s)" % (name or G.name or "?"))
    checks, wit, extra = {}, {}, {}

    bad = _holomorphy_failures(gens, pch, sampler)
    checks["holomorphic"] = not bad
    if bad:
        wit["holomorphic"] = bad

    ZLs = [transplant_field(Z, pch) for Z in G.left_fields(sampler)]
    sym = verify_symmetry(ZLs, H, sampler)
    checks["right_invariance"] = sym.passed
    if not sym.passed:
        wit["right_invariance"] = sym.witnesses

    Tm = [[pairing(taus[j], ZLs[i]) for j in range(n)] for i in range(n)]
    checks["transversality"] = (
        la.certified_rank(Tm, pch, sampler) == n)
    Om = G.Omega(sampler)
    ok = True
    for i in range(n):
        for j in range(n):
            d = ex.add(Tm[i][j], ex.neg(pch.resolve(Om[j][i])))
            if not pch.is_zero(d, sampler):
                ok = False
                wit.setdefault("transversality_matrix_is_Omega", []).append((i, j))
    checks["transversality_matrix_is_Omega"] = ok

    Hterm, flag = terminal_derived(H, sampler)
    checks["terminal_derived_zero"] = Hterm.rank == 0
    extra["derived_ranks"] = flag.table

    C = G.C.C
    psis_p = [transplant_form(p, pch) for p in psis]
    ok = True
    for i in range(n):
        atilde = psis_p[i].d().scale(ex.MINUS_ONE)
        for j in range(n):
            for k in range(j + 1, n):
                if C[i][j][k]:
                    atilde = atilde + psis_p[j].wedge(psis_p[k]).scale(
                        ex.const(C[i][j][k]))
        resid = taus[i].d() - atilde
        if not two_form_in_ideal(resid, taus, pch, sampler):
            ok = False
            wit.setdefault("dtau_mod_tau", []).append(i)
    checks["dtau_mod_tau"] = ok

    gmap = None
    if gamma is not None:
        if thetas is None:
            raise ExtensionError("gamma check needs the theta forms")
        target = thetas[0].chart
        gmap = CoordinateMap(pch, target, gamma, name="gamma")
        Lam = G.Lambda(sampler)
        B = la.matmul(Om, la.mat_conj(Lam, G.chart))
        ok = True
        for i in range(n):
            resid = gmap.pullback(thetas[i]) - taus[i]
            for j in range(n):
                resid = resid + taus[j].conj().scale(pch.resolve(B[i][j]))
            for c in resid.terms.values():
                if not pch.is_zero(c, sampler):
                    ok = False
                    wit.setdefault("gamma_pullback_theta", []).append(i)
                    break
        checks["gamma_pullback_theta"] = ok

    return ExtensionReport(H, taus, eta_p, pch, G, gmap, checks, wit, extra)


def build_extension(cf, G, R, S, sampler, slice_names, gamma=None, guards=()):
    """Build the extension from a verified Vessiot coframe: psi = S pi and
    theta-hat = R theta are restricted to the slice through the basepoint
    cut out by freezing the non-invariant coordinates."""
    ch = cf.chart
    if cf.basepoint is None:
        raise ExtensionError("the coframe needs a basepoint to cut a slice")
    R = [[ch.resolve(c) for c in row] for row in R]
    S = [[ch.resolve(c) for c in row] for row in S]
    pis = cf.pis
    psis = []
    for i in range(cf.n):
        f = ch.zero_form(1)
        for a in range(cf.q):
            f = f + pis[a].scale(S[i][a])
        psis.append(f.normalized())
    thetas = []
    for i in range(cf.n):
        f = ch.zero_form(1)
        for j in range(cf.n):
            f = f + cf.theta[j].scale(R[i][j])
        thetas.append(f.normalized())
    keep = set(slice_names)
    entries = [e for e in ch.entries if e[1] in keep]
    frozen = {nm: cf.basepoint[nm] for _, nm in ch.entries if nm not in keep}
    sguards = [g for g in cf.all_guards() if g.free_symbols() <= keep]
    sch = Chart(entries, guards=sguards,
                name="slice(%s)" % (cf.name or "?"))
    psis_s = [restrict_to_slice(p, sch, frozen) for p in psis]
    etas_s = [restrict_to_slice(e, sch, frozen) for e in cf.eta]
    return build_extension_from_data(G, sch, psis_s, etas_s, sampler,
                                     gamma=gamma, thetas=thetas,
                                     guards=guards, name=cf.name)


def verify_pullback_omega(report, omegas, sampler):
    """Certify gamma* omega^j = Omega^j_i (mu_L^i - conj(mu_L^i))."""
    if report.gamma is None:
        raise ExtensionError("the extension was built without a gamma map")
    G, pch = report.group, report.chart
    Om = G.Omega(sampler)
    for j in range(G.n):
        rhs = pch.zero_form(1)
        for i in range(G.n):
            ml = transplant_form(G.mu_L[i], pch)
            rhs = rhs + (ml - ml.conj()).scale(pch.resolve(Om[j][i]))
        resid = report.gamma.pullback(omegas[j]) - rhs
        for c in resid.terms.values():
            if not pch.is_zero(c, sampler):
                return False
    return True


# ------------------------------------------------------------ quotient diagram

def verify_quotient_diagram(pi_G, Psi, Phi_inv, q_G, Hhat_gens, source_system,
                            quotient_gens, sampler, guards=()):
    """Certify the commutative square Phi_inv o pi_G = q_G o Psi, that
    Psi* H-hat spans the source holomorphic system, and that the quotient
    1-form generators pull back into the source system's complexification."""
    checks, wit = {}, {}
    src = pi_G.source
    lhs = Phi_inv.compose(pi_G)
    rhs = q_G.compose(Psi)
    ok = True
    for _, nm in lhs.target.entries:
        d = ex.add(lhs.exprs[nm], ex.neg(rhs.exprs[nm]))
        if not src.is_zero(d, sampler, guards):
            ok = False
            wit.setdefault("square_commutes", []).append(nm)
    checks["square_commutes"] = ok

    pulled = [Psi.pullback(g) for g in Hhat_gens]
    checks["psi_pullback_spans_source"] = la.span_equal(
        [p.coeff_vector() for p in pulled],
        source_system.rows(), src, sampler,
        tuple(source_system.guards) + tuple(guards))

    span = source_system.rows() + [g.conj().coeff_vector()
                                   for g in source_system.generators]
    ok = True
    for gi, g in enumerate(quotient_gens):
        pg = pi_G.pullback(g)
        if not la.membership([pg.coeff_vector()], span, src, sampler,
                             tuple(source_system.guards) + tuple(guards)):
            ok = False
            wit.setdefault("quotient_pulls_into_E", []).append(gi)
    checks["quotient_pulls_into_E"] = ok

    return CheckReport("quotient_diagram", checks, wit)


# ------------------------------------------------- PDE models and solutions

def _parse_jet_suffix(s):
    a = b = 0
    i = 0
    while i < len(s):
        if s.startswith("zb", i):
            b += 1
            i += 2
        elif s[i] == "z":
            a += 1
            i += 1
        else:
            return None
    return a, b


class PDEModel:
    """PDE residuals written in jet symbols u, u_z, u_zb, u_zzb, ... over a
    single complex independent variable, plus solution-formula slots in
    holomorphic placeholders f, f1, f2, ..., g, g1, ..."""

    def __init__(self, name, unknowns, residuals, formulas=None,
                 domain_guards=(), real=True, z="z"):
        self.name = name
        self.unknowns = list(unknowns)
        self.z = z
        self.zchart = Chart([("pair", z)], name=name)
        self.residuals = [ex._as_expr(ex.parse(r) if isinstance(r, str) else r)
                          for r in residuals]
        self.formulas = {
            k: ex._as_expr(ex.parse(v) if isinstance(v, str) else v)
            for k, v in (formulas or {}).items()}
        self.domain_guards = [
            ex._as_expr(ex.parse(g) if isinstance(g, str) else g)
            for g in domain_guards]
        self.real = bool(real)
        for e in self.residuals:
            for s in e.free_symbols():
                if s != z and self._jet(s) is None:
                    raise ExtensionError("stray symbol %r in residual" % s)

    def _jet(self, name):
        """(base, n_z, n_zbar) for a jet symbol, else None."""
        if name in self.unknowns:
            return name, 0, 0
        if "_" not in name:
            return None
        base, _, suf = name.rpartition("_")
        if base not in self.unknowns:
            return None
        ab = _parse_jet_suffix(suf)
        if ab is None:
            return None
        return base, ab[0], ab[1]

    def jet_symbols(self):
        out = {}
        for e in self.residuals:
            for s in e.free_symbols():
                j = self._jet(s)
                if j is not None:
                    out[s] = j
        return out

    def __repr__(self):
        return "PDEModel(%s, unknowns=%s)" % (self.name, self.unknowns)


def verify_residual_real(P, sampler):
    """For real PDEs: each residual equals its jet-level conjugate, where
    conjugation swaps the z and zbar derivative counts."""
    jets = P.jet_symbols()
    mapping = {}
    for nm, (base, a, b) in jets.items():
        partner = base if (b, a) == (0, 0) else (
            "%s_%s" % (base, "z" * b + "zb" * a))
        mapping[("bar", nm)] = ex.sym(partner)
    coords = [(P.z, "complex")] + [(nm, "complex") for nm in sorted(jets)]
    for r in P.residuals:
        flipped = ex.subs(ex.conjugate(r), mapping)
        d = ex.add(r, ex.neg(flipped))
        if not ex.is_zero(d, sampler, coords):
            return False
    return True


_PLACEHOLDER = re.compile(r"^([a-z])([0-9]*)$")


def bind_placeholders(e, sample, z="z"):
    """Substitute holomorphic sample data: f -> F(z), f1 -> F'(z), ..."""
    e = ex._as_expr(e)
    mapping = {}
    for s in e.free_symbols():
        m = _PLACEHOLDER.match(s)
        if not m or m.group(1) not in sample or s == z:
            continue
        F = ex._as_expr(sample[m.group(1)])
        for _ in range(int(m.group(2) or 0)):
            F = ex.wirtinger(F, z)
        mapping[s] = F
    return ex.subs(e, mapping)


def bound_solution(P, sample):
    """Solution expressions u(z, zbar) for every unknown, then the full jet
    substitution map for the residuals."""
    sols = {u: bind_placeholders(P.formulas[u], sample, P.z)
            for u in P.unknowns}
    mapping = {}
    for nm, (base, a, b) in P.jet_symbols().items():
        F = sols[base]
        for _ in range(a):
            F = ex.wirtinger(F, P.z)
        for _ in range(b):
            F = ex.wirtinger(F, P.z, bar=True)
        mapping[nm] = F
    return sols, mapping


def holomorphic_samples():
    """The fixed test family: rational-coefficient polynomials of degree at
    most 4, and Moebius maps."""
    mk = ex.parse
    return [
        ("z", mk("z")),
        ("z^2", mk("z^2")),
        ("cubic", mk("z^3/3 - z")),
        ("quartic", mk("z^4/4 + z^2/2 + 1")),
        ("affine", mk("z/2 + 2")),
        ("mobius", mk("(z-1)/(z+1)")),
        ("mobius2", mk("(2*z+1)/(z-3)")),
        ("inv", mk("1/(z+2)")),
    ]


class SolutionReport:
    """Per-sample residual outcomes: 'pass', 'fail' or 'skipped'."""

    def __init__(self, name, entries, seed):
        self.name = name
        self.entries = list(entries)
        self.seed = seed

    @property
    def passed(self):
        active = [s for _, s, _ in self.entries if s != "skipped"]
        return bool(active) and all(s == "pass" for s in active)

    def skipped(self):
        return [(l, note) for l, s, note in self.entries if s == "skipped"]

    def failures(self):
        return [l for l, s, _ in self.entries if s == "fail"]

    def __repr__(self):
        return "SolutionReport(%s, passed=%s, skipped=%d, failed=%s)" % (
            self.name, self.passed, len(self.skipped()), self.failures())


def verify_solution_formula(P, samples, sampler):
    """Substitute each holomorphic sample into the solution formulas and
    certify that every PDE residual vanishes; samples outside the formula
    domain are skipped with a note, and all-skipped raises."""
    entries = []
    for label, sample in samples:
        if not isinstance(sample, dict):
            sample = {"f": sample}
        _, jetmap = bound_solution(P, sample)
        guards = [bind_placeholders(g, sample, P.z)
                  for g in P.domain_guards]
        note = None
        for g in guards:
            try:
                if ex._is_zero_const(g) or P.zchart.is_zero(g, sampler):
                    note = "domain guard vanishes identically"
                    break
            except ex.DomainTooThinError:
                note = "domain guard everywhere singular"
                break
        if note:
            entries.append((label, "skipped", note))
            continue
        status = "pass"
        for r in P.residuals:
            rr = ex.subs(r, jetmap)
            try:
                if not P.zchart.is_zero(rr, sampler, guards):
                    status = "fail"
            except ex.DomainTooThinError:
                status = "skipped"
                note = "no sample point satisfies the domain guards"
                break
        entries.append((label, status, note))
    rep = SolutionReport(P.name, entries, sampler.seed)
    if entries and all(s == "skipped" for _, s, _ in entries):
        raise ExtensionError(
            "every holomorphic sample fell outside the domain of %r"
            % P.name)
    return rep


def verify_restricted_holomorphy(xi, P, samples, sampler):
    """True iff d(xi o solution)/d zbar vanishes for every in-domain
    sample, i.e. the Darboux invariant restricts holomorphically."""
    xi = ex._as_expr(ex.parse(xi) if isinstance(xi, str) else xi)
    checked = 0
    for label, sample in samples:
        if not isinstance(sample, dict):
            sample = {"f": sample}
        _, jetmap = bound_solution(P, sample)
        guards = [bind_placeholders(g, sample, P.z) for g in P.domain_guards]
        try:
            if any(ex._is_zero_const(g) or P.zchart.is_zero(g, sampler)
                   for g in guards):
                continue
            val = ex.subs(xi, jetmap)
            dbar = ex.wirtinger(val, P.z, bar=True)
            if not P.zchart.is_zero(dbar, sampler, guards):
                return False
            checked += 1
        except ex.DomainTooThinError:
            continue
    if not checked:
        raise ExtensionError("no holomorphic sample was in the domain")
    return True


def schwarzian(F, z="z"):
    """f'''/f' - (3/2)(f''/f')^2."""
    f1 = ex.wirtinger(F, z)
    f2 = ex.wirtinger(f1, z)
    f3 = ex.wirtinger(f2, z)
    return ex.add(ex.div(f3, f1),
                  ex.mul(ex.const(Fraction(-3, 2)),
                         ex.pow_(ex.div(f2, f1), 2)))


def verify_schwarzian(samples, sampler, z="z"):
    """Substituting u_minus = ln(4 f' conj(f')/(1+|f|^2)^2) into the Darboux
    invariant u_zz - u_z^2/2 yields the Schwarzian derivative of f."""
    zchart = Chart([("pair", z)])
    for label, F in samples:
        F = ex._as_expr(F)
        f1 = ex.wirtinger(F, z)
        if ex._is_zero_const(f1):
            continue
        u = ex.ln_(ex.div(ex.mul(ex.const(4), f1, ex.conjugate(f1)),
                          ex.pow_(ex.add(ex.ONE,
                                         ex.mul(F, ex.conjugate(F))), 2)))
        uz = ex.wirtinger(u, z)
        uzz = ex.wirtinger(uz, z)
        xi = ex.add(uzz, ex.mul(ex.const(Fraction(-1, 2)), ex.pow_(uz, 2)))
        d = ex.add(xi, ex.neg(schwarzian(F, z)))
        if not zchart.is_zero(d, sampler, [f1]):
            return False
    return True
