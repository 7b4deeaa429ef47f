"""Sub-bundles of TM (x) C and T*M (x) C presented by symbolic generators:
annihilators, derived flags, terminal systems, Cauchy characteristics and
singular integral-element tests, with sampled-rank certification."""

from __future__ import annotations

import random

import numpy as np

from . import expr as ex
from . import linalg as la
from .chart import DiffForm, VectorField, lie_bracket
from .expr import SingularPointError
from .linalg import RankInstabilityError


class FlagError(Exception):
    pass


def _coeff_rows(gens):
    return [g.coeff_vector() for g in gens]


def _form_from_vector(chart, vec):
    return DiffForm(chart, 1, {(i,): c for i, c in enumerate(vec)
                               if not ex._is_zero_const(c)})


def _field_from_vector(chart, vec):
    return VectorField(chart, {i: c for i, c in enumerate(vec)
                               if not ex._is_zero_const(c)})


class SubBundleModel:
    """Constant-rank sub-bundle presented by independent generators."""

    def __init__(self, chart, variance, generators, sampler, guards=(),
                 name="", reduce=False):
        if variance not in ("forms", "fields"):
            raise FlagError("variance must be 'forms' or 'fields'")
        self.chart = chart
        self.variance = variance
        self.guards = tuple(guards)
        self.name = name
        gens = list(generators)
        if reduce:
            gens = self._greedy_reduce(gens, sampler)
        self.generators = tuple(gens)
        rows = _coeff_rows(self.generators)
        self.rank = la.certified_rank(rows, chart, sampler, self.guards)
        if self.rank != len(self.generators):
            raise RankInstabilityError(
                "generators of %r dependent: %d generators, rank %d"
                % (name or variance, len(self.generators), self.rank))

    def _greedy_reduce(self, gens, sampler):
        keep = []
        pts = None
        for g in gens:
            rows = _coeff_rows(keep + [g])
            if pts is None:
                pts = la._valid_points(self.chart, sampler, self.guards, rows, 3)
            try:
                r = max(la.numeric_rank(la.eval_rows(rows, p)) for p in pts)
            except SingularPointError:
                pts = la._valid_points(self.chart, sampler, self.guards, rows, 3)
                r = max(la.numeric_rank(la.eval_rows(rows, p)) for p in pts)
            if r == len(keep) + 1:
                keep.append(g)
        return keep

    def __repr__(self):
        return "SubBundleModel(%s, %s, rank %d)" % (
            self.name or "?", self.variance, self.rank)

    def rows(self):
        return _coeff_rows(self.generators)

    def conj(self):
        gens = [g.conj() for g in self.generators]
        return SubBundleModel(self.chart, self.variance, gens,
                              _default_sampler(), self.guards,
                              name="conj(%s)" % self.name)

    def with_sampler(self, sampler):
        return SubBundleModel(self.chart, self.variance, list(self.generators),
                              sampler, self.guards, name=self.name)

    def contains(self, gens, sampler):
        rows = _coeff_rows(gens if isinstance(gens, (list, tuple)) else [gens])
        return la.membership(rows, self.rows(), self.chart, sampler, self.guards)

    def span_equals(self, other, sampler):
        return la.span_equal(self.rows(), other.rows(), self.chart, sampler,
                             self.guards + tuple(other.guards))

    def is_conjugation_stable(self, sampler):
        return la.span_equal(self.rows(), _coeff_rows([g.conj() for g in self.generators]),
                             self.chart, sampler, self.guards)


def _default_sampler():
    return ex.Sampler(seed=42)


class FlagReport:
    """Rank sequence of a derived/bracket flag, ending in its stable value."""

    def __init__(self, ranks, stages, increasing):
        self.ranks = list(ranks)
        self.stages = list(stages)
        self.increasing = increasing
        if len(self.ranks) >= 2 and self.ranks[-1] != self.ranks[-2]:
            raise FlagError("flag did not stabilize: %s" % self.ranks)
        pairs = zip(self.ranks, self.ranks[1:])
        for a, b in pairs:
            if increasing and b < a or (not increasing and b > a):
                raise FlagError("flag ranks not monotone: %s" % self.ranks)

    @property
    def table(self):
        """Ranks with the trailing stabilization duplicate removed."""
        if len(self.ranks) >= 2 and self.ranks[-1] == self.ranks[-2]:
            return self.ranks[:-1]
        return list(self.ranks)

    @property
    def stabilization_index(self):
        return len(self.table) - 1

    @property
    def terminal(self):
        return self.stages[-1]

    def __repr__(self):
        return "FlagReport(ranks=%s)" % self.ranks


def dual_frame(forms, chart, sampler, guards=()):
    """Vector fields Z_k with form_j(Z_k) = delta_jk, for a full coframe."""
    if len(forms) != chart.dim:
        raise FlagError("dual_frame needs a full coframe (%d forms, dim %d)"
                        % (len(forms), chart.dim))
    M = [f.coeff_vector() for f in forms]
    Minv = la.symbolic_inverse(M, chart, sampler, guards)
    return [_field_from_vector(chart, [Minv[j][k] for j in range(chart.dim)])
            for k in range(chart.dim)]


def annihilator(S, sampler):
    """Annihilator sub-bundle with Expr generators (symbolic elimination)."""
    vecs = la.symbolic_nullspace(S.rows(), S.chart, sampler, S.guards)
    if S.variance == "forms":
        gens = [_field_from_vector(S.chart, v) for v in vecs]
        variance = "fields"
    else:
        gens = [_form_from_vector(S.chart, v) for v in vecs]
        variance = "forms"
    out = SubBundleModel(S.chart, variance, gens, sampler, S.guards,
                         name="ann(%s)" % S.name)
    if out.rank != S.chart.dim - S.rank:
        raise RankInstabilityError("annihilator rank %d != %d - %d"
                                   % (out.rank, S.chart.dim, S.rank))
    return out


def derived_system(I, sampler):
    """First derived system of a bundle of 1-forms.

    Solves the left-kernel of theta -> [d theta mod I] symbolically; the
    quotient is represented by evaluation against a frame of ann(I)."""
    if I.variance != "forms":
        raise FlagError("derived_system expects 1-forms")
    if I.rank == 0:
        return I
    D = annihilator(I, sampler)
    frame = D.generators
    pairs = [(a, b) for a in range(len(frame)) for b in range(a + 1, len(frame))]
    M = []
    for th in I.generators:
        dth = th.d()
        M.append([dth.eval_on(frame[a], frame[b]) for a, b in pairs])
    if not pairs:
        coeff_rows = [[ex.ONE if i == j else ex.ZERO for j in range(I.rank)]
                      for i in range(I.rank)]
    else:
        coeff_rows = la.left_nullspace(M, I.chart, sampler, I.guards)
    gens = []
    for crow in coeff_rows:
        vec = [ex.ZERO] * I.chart.dim
        for ci, th in zip(crow, I.generators):
            if ex._is_zero_const(ci):
                continue
            tv = th.coeff_vector()
            vec = [ex.add(v, ex.mul(ci, t)) for v, t in zip(vec, tv)]
        gens.append(_form_from_vector(I.chart, la.simplify_vector(vec)))
    return SubBundleModel(I.chart, "forms", gens, sampler, I.guards,
                          name="%s'" % I.name, reduce=True)


def terminal_derived(I, sampler, max_steps=12):
    """Iterate derived_system to stabilization; returns (bundle, FlagReport)."""
    ranks = [I.rank]
    stages = [I]
    cur = I
    for _ in range(max_steps):
        nxt = derived_system(cur, sampler)
        ranks.append(nxt.rank)
        stages.append(nxt)
        if nxt.rank == cur.rank:
            return nxt, FlagReport(ranks, stages, increasing=False)
        cur = nxt
    raise FlagError("derived flag did not stabilize in %d steps" % max_steps)


def bracket_flag(D, sampler, max_steps=12):
    """Iterated bracket flag D, D + [D,D], ...; returns (bundle, FlagReport)."""
    if D.variance != "fields":
        raise FlagError("bracket_flag expects vector fields")
    ranks = [D.rank]
    stages = [D]
    cur = D
    for _ in range(max_steps):
        gens = list(cur.generators)
        new = list(gens)
        for i in range(len(gens)):
            for j in range(i + 1, len(gens)):
                new.append(lie_bracket(gens[i], gens[j]))
        nxt = SubBundleModel(D.chart, "fields", new, sampler, D.guards,
                             name="%s^(k)" % D.name, reduce=True)
        ranks.append(nxt.rank)
        stages.append(nxt)
        if nxt.rank == cur.rank:
            return nxt, FlagReport(ranks, stages, increasing=True)
        cur = nxt
    raise FlagError("bracket flag did not stabilize in %d steps" % max_steps)


def cauchy_characteristics(M, D, I, sampler):
    """Char(I (x) C, dM) = {X in D (x) C : X -| dM contained in I (x) C}."""
    if M.variance != "forms" or I.variance != "forms" or D.variance != "fields":
        raise FlagError("cauchy_characteristics expects (forms, fields, forms)")
    frame = D.generators
    dual = annihilator(I, sampler).generators  # frame of ann(I) = D
    rows = []
    for phi in M.generators:
        dphi = phi.d()
        for Y in dual:
            rows.append([dphi.eval_on(X, Y) for X in frame])
    vecs = la.symbolic_nullspace(rows, M.chart, sampler,
                                 tuple(M.guards) + tuple(D.guards))
    gens = []
    for v in vecs:
        X = VectorField(M.chart, {})
        for c, B in zip(v, frame):
            X = X + B.scale(c)
        gens.append(X)
    return SubBundleModel(M.chart, "fields", gens, sampler, D.guards,
                          name="Char(%s)" % M.name, reduce=True)


def is_singular_integral_element(xcomps, I, point, sampler, two_forms=None,
                                 n_probe=24):
    """True iff the polar equations of the direction X drop rank below the
    generic rank over random integral directions at the point.

    xcomps: numeric coefficient vector of X against the chart frame.
    two_forms: 2-form generators; defaults to d of the 1-form generators.
    """
    ch = I.chart
    x = np.asarray(xcomps, dtype=complex)
    theta_rows = la.eval_rows(I.rows(), point)
    for row in theta_rows:
        if abs(row @ x) > 1e-8 * max(1.0, np.abs(row).max() * np.abs(x).max()):
            raise FlagError("X is not an integral direction of I at the point")
    if two_forms is None:
        two_forms = [th.d() for th in I.generators]
    # numeric matrices Q with (X -| Omega)_nu = X^mu Q_{mu nu}
    Qs = []
    m = ch.dim
    for om in two_forms:
        Q = np.zeros((m, m), dtype=complex)
        for (a, b), coef in om.terms.items():
            v = ex.evaluate(coef, point)
            Q[a, b] += v
            Q[b, a] -= v
        Qs.append(Q)

    def polar_rank(vec):
        rows = [r for r in theta_rows] + [vec @ Q for Q in Qs]
        return la.numeric_rank(np.array(rows))

    # generic rank over random directions annihilated by I at the point
    ns = _numeric_nullspace(theta_rows, m)
    rng = random.Random(sampler.seed)
    generic = 0
    for _ in range(n_probe):
        c = np.array([complex(rng.gauss(0, 1), rng.gauss(0, 1))
                      for _ in range(ns.shape[1])])
        generic = max(generic, polar_rank(ns @ c))
    return polar_rank(x) < generic


def _numeric_nullspace(rows, m):
    if len(rows) == 0:
        return np.eye(m, dtype=complex)
    a = np.array(rows, dtype=complex)
    u, s, vh = np.linalg.svd(a)
    tol = la.RANK_TOL * (s[0] if len(s) else 1.0)
    r = int(np.sum(s > tol))
    return vh[r:].conj().T
