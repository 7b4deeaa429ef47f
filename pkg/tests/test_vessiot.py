from fractions import Fraction

import pytest

from eds import expr as ex
from eds.chart import Chart
from eds.expr import Sampler, const, parse
from eds.vessiot import (
    AlgebraInvariants, CoframeSet, StructureConstants, VessiotError,
    adapt_imaginary_at_point, algebra_invariants, algebras_isomorphic_lowdim,
    build_omega, polarize_normalize, solve_S_semisimple, thetas_imaginary_at,
    verify_one_adapted, verify_vessiot,
)

from test_flags import laplace_chart

S = Sampler(seed=42)


def laplace_coframe():
    ch = laplace_chart()
    th0 = ch.form({(("u", False),): 1, (("x1", False),): "-u1",
                   (("x2", False),): "-u2"})
    th1 = ch.form({(("u1", False),): 1, (("x1", False),): "-u11",
                   (("x2", False),): "-u12"})
    th2 = ch.form({(("u2", False),): 1, (("x1", False),): "-u12",
                   (("x2", False),): "u11"})
    eta = th1 - th2.scale(const(0, 1))
    sig1 = ch.d_of(parse("x1+i*x2"))
    sig2 = ch.d_of(parse("u11-i*u12"))
    return CoframeSet(ch, [th0], [eta], [sig1, sig2], name="laplace")


def ben2_chart():
    return Chart([("pair", "z"), ("pair", "W"), ("pair", "xi")],
                 guards=[parse("W")])


def ben2_coframe(ch=None):
    ch = ch or ben2_chart()
    inv_W = parse("1/W")
    th1 = ch.form({(("W", False),): inv_W,
                   (("W", True),): ch.conj(parse("-1/W")),
                   (("z", False),): "-xi",
                   (("z", True),): ch.conj(parse("xi"))})
    th2_raw = ch.form({
        (("W", True),): ex.div(const(2), ex.mul(parse("W"),
                                                ch.conj(parse("W")))),
        (("z", False),): -1,
        (("z", True),): ex.div(ex.neg(ex.add(ch.conj(parse("W")),
                                             ch.conj(parse("2*xi")))),
                               parse("W")),
    })
    th2 = th2_raw - th1.scale(const(0, 1))
    sig1 = ch.dx("z")
    sig2 = ch.dx("xi")
    bp = ch.basepoint_assignment({"z": 0, "xi": 0, "W": 1j})
    return CoframeSet(ch, [th1, th2], [], [sig1, sig2], basepoint=bp,
                      name="ben2")


_ben2_cache = {}


def ben2_verified():
    """ben2 coframe plus its Vessiot report, computed once per session."""
    if not _ben2_cache:
        cf = ben2_coframe()
        _ben2_cache["cf"] = cf
        _ben2_cache["rep"] = verify_vessiot(cf, S)
    return _ben2_cache["cf"], _ben2_cache["rep"]


class TestOneAdapted:
    def test_laplace(self):
        cf = laplace_coframe()
        rep = verify_one_adapted(cf, S)
        assert rep.passed, rep.failures()

    def test_laplace_with_elliptic_preconditions(self):
        from eds.elliptic import check_elliptic
        from test_flags import laplace_Dplus
        cf = laplace_coframe()
        ES = check_elliptic(laplace_Dplus(cf.chart), S)
        rep = verify_one_adapted(cf, S, ES)
        assert rep.passed, rep.failures()
        assert rep.checks["pis_span_Vinf"]
        assert rep.checks["thetas_span_I"]

    def test_broken_sigma_not_closed(self):
        ch = laplace_chart()
        cf = laplace_coframe()
        bad = CoframeSet(ch, cf.theta, cf.eta,
                         [cf.sigma[0],
                          cf.sigma[1] + ch.form({(("x1", False),): "u12"})])
        rep = verify_one_adapted(bad, S)
        assert not rep.checks["dsigma_zero"]

    def test_size_mismatch(self):
        ch = laplace_chart()
        with pytest.raises(VessiotError):
            CoframeSet(ch, [], [], [ch.dx("x1")])


class TestVessiotBen2:
    def test_structure_constants_and_P(self):
        cf, rep = ben2_verified()
        assert rep.passed, rep.failures()
        assert rep.C.entries() == {(2, 1, 2): Fraction(-1)}
        ch = cf.chart
        # P = [[-1, 0], [i + (2 - i conj(W))/W, conj(W)/W]]
        Wb = ch.conj(parse("W"))
        expect = [
            [const(-1), ex.ZERO],
            [ex.add(const(0, 1),
                    ex.div(ex.add(const(2), ex.mul(const(0, -1), Wb)),
                           parse("W"))),
             ex.div(Wb, parse("W"))],
        ]
        for i in range(2):
            for j in range(2):
                assert ch.is_zero(ex.add(rep.P[i][j], ex.neg(expect[i][j])),
                                  S, ch.guards)

    def test_omegas(self):
        cf, rep = ben2_verified()
        R = [[1, 0], [0, 1]]
        Ssol = [["xi", 0], ["1-i*xi", 0]]
        omegas, checks = build_omega(cf, R, Ssol, rep.C, S, P=rep.P)
        assert all(checks.values()), checks
        ch = cf.chart
        om1 = ch.form({(("W", False),): "1/W",
                       (("W", True),): ch.conj(parse("-1/W"))})
        om2 = ch.form({(("W", True),): ex.div(
            const(2), ex.mul(parse("W"), ch.conj(parse("W"))))})
        om2 = om2 - om1.scale(const(0, 1))
        for got, want in zip(omegas, [om1, om2]):
            for c in (got - want).terms.values():
                assert ch.is_zero(c, S, ch.guards)

    def test_imaginary_and_polarize_trivial(self):
        cf = ben2_coframe()
        assert thetas_imaginary_at(cf.theta, cf.chart, cf.basepoint)
        # for this coframe the polarized K(z) is already the identity
        cf2, Kinv = polarize_normalize(cf, S, ["z", "xi"])
        for i in range(2):
            for j in range(2):
                want = ex.ONE if i == j else ex.ZERO
                assert cf.chart.is_zero(ex.add(Kinv[i][j], ex.neg(want)),
                                        S, cf.chart.guards)
        assert verify_vessiot(cf2, S).passed

    def test_solvable_rejected_by_semisimple_solver(self):
        cf, rep = ben2_verified()
        with pytest.raises(VessiotError) as ei:
            solve_S_semisimple(cf, S, report=rep)
        assert "degenerate" in str(ei.value)

    def test_theta_mix_preserves_invariants(self):
        cf, rep = ben2_verified()
        Q = [[1, 1], [0, 1]]
        mixed = [cf.theta[0] + cf.theta[1], cf.theta[1]]
        cf2 = cf.replace_theta(mixed, name="ben2-mixed")
        rep2 = verify_vessiot(cf2, S)
        assert rep2.passed, rep2.failures()
        a1, a2 = algebra_invariants(rep.C), algebra_invariants(rep2.C)
        assert a1 == a2
        assert algebras_isomorphic_lowdim(rep.C, rep2.C) == "yes"


def sl2():
    return StructureConstants.from_brackets(3, {
        (0, 1): {1: 2}, (0, 2): {2: -2}, (1, 2): {0: 1}})


def su2():
    return StructureConstants.from_brackets(3, {
        (0, 1): {2: 1}, (1, 2): {0: 1}, (2, 0): {1: 1}})


def heisenberg():
    return StructureConstants.from_brackets(3, {(0, 1): {2: 1}})


class TestAlgebra:
    def test_killing_signatures(self):
        assert AlgebraInvariants(sl2()).killing_signature == (2, 1, 0)
        assert AlgebraInvariants(su2()).killing_signature == (0, 3, 0)

    def test_sl2_su2_not_isomorphic(self):
        assert algebras_isomorphic_lowdim(sl2(), su2()) == "no"

    def test_semisimple_flags(self):
        a = AlgebraInvariants(sl2())
        assert a.semisimple and not a.solvable and not a.abelian

    def test_abelian(self):
        C0 = StructureConstants.from_brackets(2, {})
        a = AlgebraInvariants(C0)
        assert a.abelian and a.solvable and not a.semisimple
        assert algebras_isomorphic_lowdim(C0,
                                          StructureConstants.from_brackets(
                                              2, {})) == "yes"

    def test_heisenberg_recognized(self):
        h = heisenberg()
        a = AlgebraInvariants(h)
        assert a.killing_signature == (0, 0, 3)
        assert a.center_dim == 1
        assert algebras_isomorphic_lowdim(h, heisenberg()) == "yes"
        assert algebras_isomorphic_lowdim(h, sl2()) == "no"

    def test_solvable_3d_undecided(self):
        # two non-nilpotent solvable algebras: invariants alone can't decide
        r1 = StructureConstants.from_brackets(3, {(0, 1): {1: 1},
                                                  (0, 2): {2: 1}})
        assert algebras_isomorphic_lowdim(r1, r1) == "undecided"

    def test_jacobi_enforced(self):
        with pytest.raises(VessiotError):
            StructureConstants.from_brackets(3, {
                (0, 1): {2: 1}, (0, 2): {1: 1}, (1, 2): {1: 1}})

    def test_dimension_mismatch(self):
        assert algebras_isomorphic_lowdim(
            sl2(), StructureConstants.from_brackets(2, {})) == "no"


class TestImaginaryAdaptation:
    def test_real_line(self):
        ch = Chart([("real", "t")])
        cf = CoframeSet(ch, [ch.dx("t")], [], [],
                        basepoint=ch.basepoint_assignment({"t": 0.5}))
        assert not thetas_imaginary_at(cf.theta, ch, cf.basepoint)
        cf2, K = adapt_imaginary_at_point(cf, S)
        assert thetas_imaginary_at(cf2.theta, ch, cf2.basepoint)

    def test_already_imaginary_is_identity(self):
        cf = ben2_coframe()
        cf2, K = adapt_imaginary_at_point(cf, S)
        assert cf2 is cf
