import random

import pytest

from eds import expr as ex
from eds.chart import (
    Chart, ChartError, CoordinateMap, exterior_derivative, interior_product,
    lie_bracket, lie_derivative, pairing, wedge,
)
from eds.expr import Sampler, const, parse, sym

S = Sampler(seed=42)


@pytest.fixture
def zw():
    return Chart([("pair", "z"), ("pair", "w")])


@pytest.fixture
def ben():
    # 6-dim chart of the W_zbar = |W|^2/2 example, real coordinates
    return Chart([("real", "x"), ("real", "y"), ("real", "u"), ("real", "v"),
                  ("real", "u1"), ("real", "v1")])


class TestWedge:
    def test_dz_dz(self, zw):
        dz = zw.dx("z")
        assert not (dz.wedge(dz)).terms

    def test_graded_commutativity(self, zw):
        a = zw.d_of(parse("z*w"))
        b = zw.d_of(parse("w^2+conj(z)"))
        ab = a.wedge(b)
        ba = b.wedge(a)
        assert (ab + ba).is_zero(S)

    def test_repeated_factor(self, zw):
        w1 = zw.dx("z")
        w2 = zw.dx("w")
        assert not w1.wedge(w2).wedge(w1).terms

    def test_single_term(self, zw):
        f = zw.dx("z").wedge(zw.dx("w"))
        assert len(f.terms) == 1


class TestExteriorDerivative:
    def test_ddz(self, zw):
        assert not zw.dx("z").d().terms

    def test_contact_form(self):
        ch = Chart([("real", "x1"), ("real", "x2"), ("real", "u"),
                    ("real", "u1"), ("real", "u2")])
        th = ch.d_of("u") - ch.dx("u1").scale(0) - \
            ch.form({(("x1", False),): "u1", (("x2", False),): "u2"})
        dth = th.d()
        expect = -ch.d_of("u1").wedge(ch.dx("x1")) - ch.d_of("u2").wedge(ch.dx("x2"))
        assert (dth - expect).is_zero(S)

    def test_goursat_beta0_oracle(self):
        ch = Chart([("real", "u"), ("pair", "z"), ("pair", "p")],
                   guards=[parse("1-p*conj(p)"), parse("(1-p^2)*(1-conj(p)^2)")])
        a = parse("2*p/(1-p^2)")
        beta0 = ch.d_of("u") - ch.dx("z").scale(a) - ch.dx("z", bar=True).scale(ch.conj(a))
        d1 = beta0.d()
        # independent term-by-term oracle: d(beta0) = -da^dz - d(abar)^dzbar
        d2 = -(ch.d_of(a).wedge(ch.dx("z"))) - (ch.d_of(ch.conj(a)).wedge(ch.dx("z", True)))
        assert (d1 - d2).is_zero(S)

    def test_d_squared_scalar(self, zw):
        f = zw.d_of(parse("exp(z)*conj(w)+z^3/(1+w*conj(w))"))
        assert f.d().is_zero(S)

    def test_leibniz(self, zw):
        a = zw.d_of(parse("z*conj(z)"))
        b = zw.dx("w").scale(parse("exp(w)"))
        lhs = a.wedge(b).d()
        rhs = a.d().wedge(b) - a.wedge(b.d())  # |a| = 1
        assert (lhs - rhs).is_zero(S)


class TestLieBracket:
    def test_frame_commute(self, zw):
        assert not lie_bracket(zw.ddx("z"), zw.ddx("z", True)).comps

    def test_ben_displayed_bracket(self, ben):
        # [Dx - i Dy + 2(u u1 + v v1) d/du1, d/du1 + i d/dv1] = -2(u+iv) d/du1
        Dx = ben.field({("x", False): 1, ("u", False): "u1",
                        ("u1", False): "r_dummy"})
        # build the actual fields of the example instead
        Dx = ben.field({("x", False): 1, ("u", False): "u1", ("v", False): "v1"})
        Dy = ben.field({("y", False): 1, ("u", False): "-v1",
                        ("v", False): "u1-u^2-v^2"})
        X = Dx - Dy.scale(const(0, 1)) + ben.ddx("u1").scale(parse("2*(u*u1+v*v1)"))
        Y = ben.ddx("u1") + ben.ddx("v1").scale(const(0, 1))
        br = lie_bracket(X, Y)
        expect = ben.ddx("u1").scale(parse("-2*(u+i*v)"))
        diff = br - expect
        for c in diff.comps.values():
            assert ben.is_zero(c, S)

    def test_jacobi(self, zw):
        X = zw.field({("z", False): "w", ("w", False): "z*w"})
        Y = zw.field({("w", False): "exp(z)"})
        Z = zw.field({("z", False): "conj(z)", ("z", True): "z"})
        J = lie_bracket(X, lie_bracket(Y, Z)) + lie_bracket(Y, lie_bracket(Z, X)) \
            + lie_bracket(Z, lie_bracket(X, Y))
        for c in J.comps.values():
            assert zw.is_zero(c, S)


class TestInteriorLie:
    def test_iota_dz(self, zw):
        assert pairing(zw.dx("z"), zw.ddx("z")) == ex.ONE

    def test_cartan_formula(self, zw):
        X = zw.field({("z", False): "w^2", ("w", True): "conj(z)"})
        a = zw.d_of(parse("z*w")).wedge(zw.dx("w", True))
        lhs = lie_derivative(X, a)
        rhs = interior_product(X, a.d()) + interior_product(X, a).d()
        assert (lhs - rhs).is_zero(S)

    def test_pairing_conj(self, zw):
        a = zw.dx("z").scale(parse("w+i"))
        X = zw.field({("z", False): "conj(w)", ("z", True): "z^2"})
        lhs = pairing(a.conj(), X.conj())
        rhs = zw.conj(pairing(a, X))
        assert zw.is_zero(lhs - rhs, S)


class TestPullback:
    def test_jet_identity(self):
        # pullback of dw0 - w1 dz under w0 = z^3, w1 = 3z^2 vanishes
        tgt = Chart([("pair", "z"), ("pair", "w0"), ("pair", "w1")])
        src = Chart([("pair", "z")])
        F = CoordinateMap(src, tgt, {"z": "z", "w0": "z^3", "w1": "3*z^2"})
        form = tgt.d_of("w0") - tgt.dx("z").scale("w1")
        assert F.pullback(form).is_zero(S)

    def test_commutes_with_d(self, zw):
        tgt = Chart([("pair", "a"), ("pair", "b")])
        F = CoordinateMap(zw, tgt, {"a": "z*w", "b": "z+conj(z)*0+w^2"})
        form = tgt.dx("a").scale(parse("b*conj(a)"))
        lhs = F.pullback(form.d())
        rhs = F.pullback(form).d()
        assert (lhs - rhs).is_zero(S)

    def test_functoriality(self, zw):
        mid = Chart([("pair", "a")])
        tgt = Chart([("pair", "b")])
        G = CoordinateMap(zw, mid, {"a": "z*w"})
        F = CoordinateMap(mid, tgt, {"b": "a^2+1"})
        FG = F.compose(G)
        form = tgt.d_of(parse("b*conj(b)"))
        assert (FG.pullback(form) - G.pullback(F.pullback(form))).is_zero(S)

    def test_chart_mismatch(self, zw):
        other = Chart([("pair", "q")])
        with pytest.raises(ChartError):
            zw.dx("z").wedge(other.dx("q"))


class TestConjAndReal:
    def test_form_conj_swaps(self, zw):
        f = zw.dx("z")
        g = f.conj()
        assert list(g.terms) == [(zw.dir_index[("z", True)],)]

    def test_real_coordinate_resolve(self):
        ch = Chart([("real", "t"), ("pair", "z")])
        assert ch.resolve(parse("conj(t)+t")) == 2 * sym("t")

    def test_field_conj_real(self):
        ch = Chart([("real", "t"), ("pair", "z")])
        X = ch.field({("t", False): "i*t", ("z", False): "z"})
        Xc = X.conj()
        assert Xc.comps[ch.dir_index[("t", False)]] == parse("-i*t")
        assert Xc.comps[ch.dir_index[("z", True)]] == parse("conj(z)")


def test_d_squared_fuzz_small():
    ch = Chart([("real", "t"), ("pair", "z"), ("pair", "w")])
    rng = random.Random(9)
    pool = ["t", "z", "conj(w)", "z*w", "exp(z)", "1/(2+t^2)", "sin(t)",
            "z^2*conj(z)", "t*w"]
    for _ in range(20):
        deg_parts = rng.sample(["t", "z", "w"], k=rng.randint(1, 2))
        f = None
        for nm in deg_parts:
            base = ch.dx(nm, bar=rng.random() < 0.3 and nm != "t")
            f = base if f is None else f.wedge(base)
        f = f.scale(ex.parse(rng.choice(pool)))
        assert f.d().d().is_zero(S)
