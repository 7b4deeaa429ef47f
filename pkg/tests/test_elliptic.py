from types import SimpleNamespace

import pytest

from eds import expr as ex
from eds.chart import Chart
from eds.elliptic import (
    DIReport, EllipticityError, check_darboux, check_decomposable,
    check_elliptic, conformal_symbol, is_normal, singular_system_generators,
    verify_darboux_invariant,
)
from eds.expr import Sampler, const, parse
from eds.flags import SubBundleModel

from test_flags import laplace_chart, laplace_D_fields, laplace_Dplus, laplace_I

S = Sampler(seed=42)


def ben_chart():
    return Chart([("real", "x"), ("real", "y"), ("real", "u"), ("real", "v"),
                  ("real", "u1"), ("real", "v1")],
                 guards=[parse("u^2+v^2")])


def ben_Dplus(ch, fix=True):
    Dx = ch.field({("x", False): 1, ("u", False): "u1", ("v", False): "v1"})
    Dy = ch.field({("y", False): 1, ("u", False): "-v1",
                   ("v", False): "u1-u^2-v^2"})
    X1 = Dx - Dy.scale(const(0, 1))
    if fix:
        X1 = X1 + ch.ddx("u1").scale(parse("2*(u*u1+v*v1)"))
    X2 = ch.ddx("u1") - ch.ddx("v1").scale(const(0, 1))
    return SubBundleModel(ch, "fields", [X1, X2], S, ch.guards, name="D+")


class TestCheckElliptic:
    def test_laplace(self):
        ch = laplace_chart()
        ES = check_elliptic(laplace_Dplus(ch), S)
        assert ES.m == 7 and ES.d == 2
        assert all(ES.checks.values())
        assert ES.V.rank == 5
        assert ES.I.rank == 3

    def test_benexample1(self):
        ES = check_elliptic(ben_Dplus(ben_chart()), S)
        assert ES.m == 6 and ES.d == 2
        assert all(ES.checks.values())

    def test_broken_mixed_bracket(self):
        # dropping the 2(u u1 + v v1) d/du1 correction breaks [D+,D-] in D
        with pytest.raises(EllipticityError) as ei:
            check_elliptic(ben_Dplus(ben_chart(), fix=False), S)
        assert "[iv]" in str(ei.value)

    def test_conjugate_overlap_rejected(self):
        ch = Chart([("pair", "z"), ("real", "t")])
        X = ch.ddx("t")  # real field: D+ meets conj(D+)
        Dp = SubBundleModel(ch, "fields", [X], S, name="D+")
        with pytest.raises(EllipticityError) as ei:
            check_elliptic(Dp, S)
        assert "[i]" in str(ei.value)


class TestDecomposable:
    def test_laplace(self):
        ch = laplace_chart()
        ES = check_elliptic(laplace_Dplus(ch), S)
        assert check_decomposable(ES.I, ES, S)

    def test_synthetic_mixed_generator(self):
        ch = Chart([("pair", "z1"), ("pair", "z2")])
        Dp = SubBundleModel(ch, "fields", [ch.ddx("z1"), ch.ddx("z2")], S)
        ES = check_elliptic(Dp, S)
        om = ch.dx("z1").wedge(ch.dx("z2"))
        mixed = om + om.conj()
        assert not check_decomposable(ES.I, ES, S, two_forms=[mixed])
        assert check_decomposable(ES.I, ES, S, two_forms=[om])


class TestCheckDarboux:
    def test_laplace(self):
        ch = laplace_chart()
        ES = check_elliptic(laplace_Dplus(ch), S)
        rep = check_darboux(ES, S)
        assert rep.darboux_integrable
        assert (rep.m, rep.d, rep.q, rep.n) == (7, 2, 3, 1)
        assert rep.classification == "neither minimal nor maximal"
        assert rep.v_test and rep.d_test and rep.numeta_ok
        assert rep.decomposable
        d = rep.as_dict()
        assert d["darboux_integrable"] and d["q"] == 3

    def test_benexample1_minimal(self):
        ES = check_elliptic(ben_Dplus(ben_chart()), S)
        rep = check_darboux(ES, S)
        assert rep.darboux_integrable
        assert (rep.d, rep.q) == (2, 2)
        assert rep.classification == "minimal"

    def test_conjugation_symmetry(self):
        # swapping D+ and D- flips J but yields the same DI verdict and ranks
        ch = laplace_chart()
        Dp = laplace_Dplus(ch)
        Dm = SubBundleModel(ch, "fields", [g.conj() for g in Dp.generators],
                            S, name="D-")
        r1 = check_darboux(check_elliptic(Dp, S), S)
        r2 = check_darboux(check_elliptic(Dm, S), S)
        assert r1.as_dict() == r2.as_dict()

    def test_not_darboux(self):
        # Helmholtz-type PDE (u11 + u22 = u) is elliptic but not Darboux
        # integrable; D+ obtained honestly as Cauchy characteristics
        from eds.flags import annihilator, cauchy_characteristics
        ch = laplace_chart()
        th0 = ch.form({(("u", False),): 1, (("x1", False),): "-u1",
                       (("x2", False),): "-u2"})
        th1 = ch.form({(("u1", False),): 1, (("x1", False),): "-u11",
                       (("x2", False),): "-u12"})
        th2 = ch.form({(("u2", False),): 1, (("x1", False),): "-u12",
                       (("x2", False),): "u11-u"})
        I = SubBundleModel(ch, "forms", [th0, th1, th2], S, name="I")
        D = annihilator(I, S)
        M = SubBundleModel(ch, "forms",
                           [th0, th1 + th2.scale(const(0, 1))], S, name="M")
        C = cauchy_characteristics(M, D, I, S)
        D1 = ch.field({("x1", False): 1, ("u", False): "u1",
                       ("u1", False): "u11", ("u2", False): "u12"})
        D2 = ch.field({("x2", False): 1, ("u", False): "u2",
                       ("u1", False): "u12", ("u2", False): "u-u11"})
        X1 = D1 - D2.scale(const(0, 1)) + ch.ddx("u11").scale(parse("u1"))
        X2 = ch.ddx("u11") + ch.ddx("u12").scale(const(0, 1))
        Dp = SubBundleModel(ch, "fields", [X1, X2], S, name="D+")
        assert C.span_equals(Dp, S)
        ES = check_elliptic(Dp, S)
        rep = check_darboux(ES, S)
        assert not rep.darboux_integrable


class TestDarbouxInvariant:
    def test_ben_invariants(self):
        ES = check_elliptic(ben_Dplus(ben_chart()), S)
        assert verify_darboux_invariant(parse("x+i*y"), ES, S)
        assert verify_darboux_invariant(parse("(u1+i*v1)/(u+i*v)-u"), ES, S)
        assert not verify_darboux_invariant(parse("u"), ES, S)

    def test_laplace_invariants(self):
        ch = laplace_chart()
        ES = check_elliptic(laplace_Dplus(ch), S)
        for f in ("x1+i*x2", "u1-i*u2", "u11-i*u12"):
            assert verify_darboux_invariant(parse(f), ES, S)
        assert not verify_darboux_invariant(parse("u"), ES, S)


def pde_chart_I(sign):
    """Planar PDE chart with u22 eliminated: u22 = sign * u11 (sign=-1:
    Laplace, +1: wave) or u22 = 0 (sign=0, degenerate)."""
    ch = laplace_chart()
    th0 = ch.form({(("u", False),): 1, (("x1", False),): "-u1",
                   (("x2", False),): "-u2"})
    th1 = ch.form({(("u1", False),): 1, (("x1", False),): "-u11",
                   (("x2", False),): "-u12"})
    th2 = ch.form({(("u2", False),): 1, (("x1", False),): "-u12",
                   (("x2", False),): "%d*u11" % -sign})
    return ch, SubBundleModel(ch, "forms", [th0, th1, th2], S, name="I")


class TestConformalSymbol:
    def test_laplace_elliptic(self):
        _, I = pde_chart_I(-1)
        assert conformal_symbol(I, S) == "elliptic"

    def test_wave_hyperbolic(self):
        _, I = pde_chart_I(1)
        assert conformal_symbol(I, S) == "hyperbolic"

    def test_degenerate(self):
        _, I = pde_chart_I(0)
        assert conformal_symbol(I, S) == "degenerate"


def laplace_adapted_coframe(ch):
    th0 = ch.form({(("u", False),): 1, (("x1", False),): "-u1",
                   (("x2", False),): "-u2"})
    th1 = ch.form({(("u1", False),): 1, (("x1", False),): "-u11",
                   (("x2", False),): "-u12"})
    th2 = ch.form({(("u2", False),): 1, (("x1", False),): "-u12",
                   (("x2", False),): "u11"})
    eta = th1 - th2.scale(const(0, 1))  # d(u1-iu2) - (u11-iu12) dz
    sig1 = ch.d_of(parse("x1+i*x2"))
    sig2 = ch.d_of(parse("u11-i*u12"))
    return SimpleNamespace(theta=[th0], eta=[eta], sigma=[sig1, sig2],
                           chart=ch)


class TestSingularSystem:
    def test_laplace_generators_and_normal(self):
        ch = laplace_chart()
        ES = check_elliptic(laplace_Dplus(ch), S)
        cf = laplace_adapted_coframe(ch)
        ones, twos = singular_system_generators(ES, cf)
        assert len(ones) == 5 and len(twos) == 2
        # the 1-form part spans V
        got = SubBundleModel(ch, "forms", ones, S, name="V1")
        assert got.span_equals(ES.V, S)
        assert is_normal(ES, cf, S)
