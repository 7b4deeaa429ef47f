import numpy as np
import pytest

from eds import expr as ex
from eds.chart import Chart, lie_bracket
from eds.expr import Sampler, const, parse
from eds.flags import (
    FlagError, SubBundleModel, annihilator, bracket_flag,
    cauchy_characteristics, derived_system, is_singular_integral_element,
    terminal_derived,
)
from eds.linalg import RankInstabilityError

S = Sampler(seed=42)


def laplace_chart():
    return Chart([("real", "x1"), ("real", "x2"), ("real", "u"),
                  ("real", "u1"), ("real", "u2"), ("real", "u11"),
                  ("real", "u12")])


def laplace_I(ch, sampler=S):
    th0 = ch.form({(("u", False),): 1, (("x1", False),): "-u1",
                   (("x2", False),): "-u2"})
    th1 = ch.form({(("u1", False),): 1, (("x1", False),): "-u11",
                   (("x2", False),): "-u12"})
    th2 = ch.form({(("u2", False),): 1, (("x1", False),): "-u12",
                   (("x2", False),): "u11"})
    return SubBundleModel(ch, "forms", [th0, th1, th2], sampler, name="I")


def laplace_D_fields(ch):
    D1 = ch.field({("x1", False): 1, ("u", False): "u1",
                   ("u1", False): "u11", ("u2", False): "u12"})
    D2 = ch.field({("x2", False): 1, ("u", False): "u2",
                   ("u1", False): "u12", ("u2", False): "-u11"})
    return D1, D2


def laplace_Dplus(ch, sampler=S):
    D1, D2 = laplace_D_fields(ch)
    X1 = D1 - D2.scale(const(0, 1))
    X2 = ch.ddx("u11") + ch.ddx("u12").scale(const(0, 1))
    return SubBundleModel(ch, "fields", [X1, X2], sampler, name="D+")


class TestAnnihilator:
    def test_ann_dz(self):
        ch = Chart([("pair", "z")])
        Iz = SubBundleModel(ch, "forms", [ch.dx("z")], S, name="{dz}")
        A = annihilator(Iz, S)
        assert A.rank == 1
        [X] = A.generators
        assert list(X.comps) == [ch.dir_index[("z", True)]]

    def test_laplace_ann_is_D(self):
        ch = laplace_chart()
        I = laplace_I(ch)
        D = annihilator(I, S)
        assert D.rank == 4
        D1, D2 = laplace_D_fields(ch)
        expect = SubBundleModel(ch, "fields",
                                [D1, D2, ch.ddx("u11"), ch.ddx("u12")], S)
        assert D.span_equals(expect, S)

    def test_involution(self):
        ch = laplace_chart()
        I = laplace_I(ch)
        assert annihilator(annihilator(I, S), S).span_equals(I, S)

    def test_benexample1_V(self):
        # ann(D-) has rank 4; terminal derived has rank 2
        ch = Chart([("real", "x"), ("real", "y"), ("real", "u"), ("real", "v"),
                    ("real", "u1"), ("real", "v1")],
                   guards=[parse("u^2+v^2")])
        Dx = ch.field({("x", False): 1, ("u", False): "u1", ("v", False): "v1"})
        Dy = ch.field({("y", False): 1, ("u", False): "-v1",
                       ("v", False): "u1-u^2-v^2"})
        Xp1 = Dx - Dy.scale(const(0, 1)) + ch.ddx("u1").scale(parse("2*(u*u1+v*v1)"))
        Xp2 = ch.ddx("u1") - ch.ddx("v1").scale(const(0, 1))
        Dminus = SubBundleModel(ch, "fields", [Xp1.conj(), Xp2.conj()], S, name="D-")
        V = annihilator(Dminus, S)
        assert V.rank == 4
        Vinf, rep = terminal_derived(V, S)
        assert Vinf.rank == 2
        # invariants: z and xi = (u1+i v1)/(u+i v) - u
        dz = ch.d_of(parse("x+i*y"))
        dxi = ch.d_of(parse("(u1+i*v1)/(u+i*v)-u"))
        expect = SubBundleModel(ch, "forms", [dz, dxi], S)
        assert Vinf.span_equals(expect, S)

    def test_dependent_generators_rejected(self):
        ch = Chart([("pair", "z")])
        with pytest.raises(RankInstabilityError):
            SubBundleModel(ch, "forms", [ch.dx("z"), ch.dx("z").scale(2)], S)


class TestDerived:
    def test_frobenius_fixed(self):
        ch = Chart([("pair", "z1"), ("pair", "z2"), ("pair", "z3")])
        I = SubBundleModel(ch, "forms", [ch.dx("z1"), ch.dx("z2")], S)
        I1 = derived_system(I, S)
        assert I1.span_equals(I, S)

    def test_laplace_flag(self):
        ch = laplace_chart()
        I = laplace_I(ch)
        term, rep = terminal_derived(I, S)
        assert rep.table == [3, 1, 0]
        assert term.rank == 0

    def test_derived_contained(self):
        ch = laplace_chart()
        I = laplace_I(ch)
        I1 = derived_system(I, S)
        assert I.contains(list(I1.generators), S)

    def test_laplace_Vinf(self):
        ch = laplace_chart()
        Dp = laplace_Dplus(ch)
        Dm = SubBundleModel(ch, "fields", [g.conj() for g in Dp.generators], S)
        V = annihilator(Dm, S)
        assert V.rank == 5
        Vinf, rep = terminal_derived(V, S)
        assert Vinf.rank == 3
        # spanned by d(x1+i x2), d(u1-i u2), d(u11-i u12)
        expect = SubBundleModel(ch, "forms", [
            ch.d_of(parse("x1+i*x2")), ch.d_of(parse("u1-i*u2")),
            ch.d_of(parse("u11-i*u12"))], S)
        assert Vinf.span_equals(expect, S)


class TestBracketFlag:
    def test_laplace_D_flag(self):
        ch = laplace_chart()
        I = laplace_I(ch)
        D = annihilator(I, S)
        term, rep = bracket_flag(D, S)
        assert rep.table == [4, 6, 7]
        assert term.rank == ch.dim

    def test_laplace_Dplus_flag(self):
        ch = laplace_chart()
        Dp = laplace_Dplus(ch)
        term, rep = bracket_flag(Dp, S)
        assert term.rank == 4
        assert rep.table == [2, 3, 4]

    def test_seed_independence(self):
        ch = laplace_chart()
        for seed in (1, 7, 123):
            I = laplace_I(ch, Sampler(seed=seed))
            term, rep = terminal_derived(I, Sampler(seed=seed))
            assert rep.table == [3, 1, 0]


class TestCauchy:
    def test_frobenius_full(self):
        ch = Chart([("pair", "z1"), ("pair", "z2")])
        I = SubBundleModel(ch, "forms", [ch.dx("z1")], S)
        D = annihilator(I, S)
        C = cauchy_characteristics(I, D, I, S)
        assert C.span_equals(D, S)

    def _laplace_M(self, ch, conj=False):
        I = laplace_I(ch)
        th0, th1, th2 = I.generators
        beta = (th1 + th2.scale(const(0, 1))) if not conj else \
            (th1 - th2.scale(const(0, 1)))
        return I, SubBundleModel(ch, "forms", [th0, beta], S, name="M")

    def test_introE1_char(self):
        # M = {theta0, theta1 + i theta2}: Char(I (x) C, dM) is one of the
        # singular half-distributions (the paper's D-minus up to orientation)
        ch = laplace_chart()
        I, M = self._laplace_M(ch)
        Dp = laplace_Dplus(ch)
        D1, D2 = laplace_D_fields(ch)
        D = SubBundleModel(ch, "fields", [D1, D2, ch.ddx("u11"), ch.ddx("u12")], S)
        C = cauchy_characteristics(M, D, I, S)
        assert C.rank == 2
        assert C.span_equals(Dp, S)

    def test_conjugate_symmetry(self):
        ch = laplace_chart()
        I, Mbar = self._laplace_M(ch, conj=True)
        Dp = laplace_Dplus(ch)
        Dm = SubBundleModel(ch, "fields", [g.conj() for g in Dp.generators], S)
        D1, D2 = laplace_D_fields(ch)
        D = SubBundleModel(ch, "fields", [D1, D2, ch.ddx("u11"), ch.ddx("u12")], S)
        C = cauchy_characteristics(Mbar, D, I, S)
        assert C.span_equals(Dm, S)


class TestSingularIE:
    def _setup(self):
        ch = laplace_chart()
        I = laplace_I(ch)
        pt = ch.points(S, k=1)[0]
        return ch, I, pt

    def test_dplus_direction_singular(self):
        ch, I, pt = self._setup()
        Dp = laplace_Dplus(ch)
        x = np.array(Dp.generators[0].eval_at(pt))
        assert is_singular_integral_element(x, I, pt, S)

    def test_generic_real_not_singular(self):
        ch, I, pt = self._setup()
        D1, D2 = laplace_D_fields(ch)
        x = (np.array(D1.eval_at(pt)) + 0.7 * np.array(D2.eval_at(pt))
             + 0.3 * np.array(ch.ddx("u11").eval_at(pt)))
        assert not is_singular_integral_element(x, I, pt, S)

    def test_xi_violating_combination(self):
        # xi1 X1 + xi2 X2bar mixes D+ and D- and is not singular
        ch, I, pt = self._setup()
        Dp = laplace_Dplus(ch)
        x = (np.array(Dp.generators[0].eval_at(pt))
             + 0.5 * np.array(Dp.generators[1].conj().eval_at(pt)))
        assert not is_singular_integral_element(x, I, pt, S)

    def test_non_integral_direction_rejected(self):
        ch, I, pt = self._setup()
        x = np.zeros(ch.dim, dtype=complex)
        x[ch.dir_index[("u", False)]] = 1.0
        with pytest.raises(FlagError):
            is_singular_integral_element(x, I, pt, S)
