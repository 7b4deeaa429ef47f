import math
import random

import pytest

from eds.expr import (
    DomainTooThinError, ParseError, Sampler, SingularPointError,
    add, conjugate, const, div, evaluate, exp_, fn, is_zero, ln_, mul, neg,
    normalize, parse, pow_, rationalize, sin_, sqrt_, subs, sym, to_str,
    wirtinger,
)

Z = sym("z")
ZB = sym("z", bar=True)
W = sym("w")


def ev(e, **pt):
    return evaluate(e, pt)


class TestParse:
    def test_product_eval(self):
        e = parse("z*conj(z)")
        assert abs(ev(e, z=1 + 2j) - 5) < 1e-14

    def test_liouville_shape(self):
        e = parse("ln(4*w1*conj(w1)/(1+w0*conj(w0))^2)")
        assert e.kind == "ln"
        v = ev(e, w1=2 + 0j, w0=1j)
        assert abs(v - math.log(16 / 4)) < 1e-12

    def test_syntax_error_offset(self):
        with pytest.raises(ParseError) as ei:
            parse("(")
        assert ei.value.offset == 1

    def test_trailing_garbage(self):
        with pytest.raises(ParseError):
            parse("z )")

    def test_tilde_postfix(self):
        assert parse("z~") == conjugate(Z)
        assert parse("z~~") == Z

    def test_unknown_function(self):
        with pytest.raises(ParseError):
            parse("foo(z)")

    def test_numbers(self):
        assert ev(parse("3/4"), ) == 0.75
        assert ev(parse("2.5")) == 2.5
        assert ev(parse("i*i")) == -1

    def test_integer_power_only(self):
        with pytest.raises(ParseError):
            parse("z^2.5")

    def test_roundtrip(self):
        samples = [
            "z*conj(z)", "1/(z-conj(z))", "exp(z)*sin(w)-3/4*z^3",
            "ln(4*w1*conj(w1)/(1+w0*conj(w0))^2)", "-z+i*w",
            "sqrt(z)/(1+tan(w))", "(z+w)^5/(z-w)",
        ]
        for s in samples:
            e = parse(s)
            assert parse(to_str(e)) == e, s


class TestNormalize:
    def test_idempotent(self):
        e = parse("(z+w)*(z-w)+w*w - z*z/(1+0*w)")
        assert normalize(e) == e

    def test_collect_terms(self):
        assert Z + Z == 2 * Z
        assert Z - Z == const(0)
        assert Z * Z == pow_(Z, 2)
        assert (Z * W) / W == Z

    def test_conj_involution(self):
        e = parse("exp(z)*w+1/(z-3*i)")
        assert conjugate(conjugate(e)) == e

    def test_conj_const(self):
        assert conjugate(const(2, 3)) == const(2, -3)

    def test_conj_real_syms(self):
        assert conjugate(sym("t"), real_syms={"t"}) == sym("t")

    def test_pow_distributes(self):
        assert pow_(Z * W, 2) == pow_(Z, 2) * pow_(W, 2)
        assert pow_(Z, -2) == div(const(1), pow_(Z, 2))

    def test_div_cancel(self):
        e = div(Z * W * W, W * sym("u"))
        assert e == div(Z * W, sym("u"))


class TestWirtinger:
    def test_product_rule(self):
        assert wirtinger(Z * ZB, "z") == ZB

    def test_conj_independent(self):
        assert wirtinger(ZB, "z") == const(0)
        assert wirtinger(ZB, "z", bar=True) == const(1)

    def test_laplacian_liouville(self):
        # u = ln(1/(Im z)^2) = -2 ln y; Delta u = 4 d_z d_zbar u = 2 e^u at z=i
        im_z = div(Z - ZB, const(0, 2))
        u = ln_(div(const(1), pow_(im_z, 2)))
        lap = 4 * wirtinger(wirtinger(u, "z"), "z", bar=True)
        assert abs(ev(lap, z=1j) - 2.0) < 1e-12

    def test_chain_rules_vs_complex_step(self):
        e = parse("exp(z)*sin(w)+sqrt(3+z)*tan(w/4)+ln(2+z^2)/(1+w*w)")
        rng = random.Random(0)
        for _ in range(5):
            pt = {"z": complex(rng.uniform(0.3, 1), rng.uniform(0.1, 1)),
                  "w": complex(rng.uniform(0.3, 1), rng.uniform(0.1, 1))}
            d = ev(wirtinger(e, "z"), **pt)
            h = 1e-7
            fd = (evaluate(e, {**pt, "z": pt["z"] + h}) -
                  evaluate(e, {**pt, "z": pt["z"] - h})) / (2 * h)
            assert abs(d - fd) < 1e-6 * max(1.0, abs(d))


class TestEvaluate:
    def test_exp_ln_inverse(self):
        assert abs(ev(exp_(ln_(W)), w=3 - 1j) - (3 - 1j)) < 1e-14

    def test_singular_division(self):
        e = div(const(1), Z - ZB)
        with pytest.raises(SingularPointError):
            ev(e, z=2 + 0j)

    def test_ben_invariant_point(self):
        # (u1 + i v1)/(u + i v) - u at u=1,v=1,u1=2,v1=0  ->  -i
        e = parse("(u1+i*v1)/(u+i*v) - u")
        v = ev(e, u=1, v=1, u1=2, v1=0)
        assert abs(v - (-1j)) < 1e-14

    def test_missing_symbol(self):
        with pytest.raises(Exception):
            ev(Z + W, z=1)


COORDS_Z = [("z", "complex")]


class TestIsZero:
    def test_algebraic_identity(self):
        # z*conj(z) - (Re z)^2 - (Im z)^2 == 0
        re = div(Z + ZB, const(2))
        im = div(Z - ZB, const(0, 2))
        e = Z * ZB - re * re - im * im
        s = Sampler(seed=42)
        assert is_zero(e, s, COORDS_Z)

    def test_nonzero(self):
        s = Sampler(seed=42)
        assert not is_zero(Z * ZB - Z, s, COORDS_Z)

    def test_seed_deterministic(self):
        s1 = Sampler(seed=7)
        s2 = Sampler(seed=7)
        e = parse("exp(z)-1")
        c1 = is_zero(e, s1, COORDS_Z)
        c2 = is_zero(e, s2, COORDS_Z)
        assert c1.values == c2.values and c1.points == c2.points

    def test_monotone_in_tolerance(self):
        e = parse("z*1/100000000000 ")  # 1e-11 * z
        s = Sampler(seed=3)
        loose = is_zero(e, s, COORDS_Z, tol_abs=1e-7, tol_rel=1e-7)
        tight = is_zero(e, s, COORDS_Z, tol_abs=1e-15, tol_rel=1e-15)
        assert bool(loose) and not bool(tight)

    def test_restricted_holomorphy_ben(self):
        # xi = W1/W - W/2 with W = i f'/Im f, W1 = dW/dz (total), f = z^2:
        # d/dzbar of xi must vanish.
        f = pow_(Z, 2)
        fp = wirtinger(f, "z")
        imf = div(f - conjugate(f), const(0, 2))
        Wx = div(mul(const(0, 1), fp), imf)
        W1 = wirtinger(Wx, "z")
        xi = div(W1, Wx) - div(Wx, const(2))
        dbar = wirtinger(xi, "z", bar=True)
        s = Sampler(seed=42)
        guards = [imf, fp]
        assert is_zero(dbar, s, COORDS_Z, guards=guards)

    def test_domain_too_thin(self):
        s = Sampler(seed=1)
        with pytest.raises(DomainTooThinError):
            s.points(COORDS_Z, guards=[const(0)])

    def test_guards_respected(self):
        s = Sampler(seed=5)
        pts = s.points([("u", "real"), ("z", "complex")], guards=[sym("u") - 1])
        for p in pts:
            assert abs(p["u"] - 1) > 1e-4
            assert p["u"].imag == 0
            assert 0.3 <= abs(p["z"]) <= 1.7


class TestSubs:
    def test_subs_conjugates(self):
        e = Z * ZB
        out = subs(e, {"z": W + 1})
        assert out == (W + 1) * conjugate(W + 1)

    def test_bar_override(self):
        # freeze zbar independently of z (polarization)
        out = subs(Z + ZB, {("bar", "z"): const(5)})
        assert out == Z + 5

    def test_rationalize(self):
        assert rationalize(0.5) == 0.5
        assert rationalize(1 / 3) == rationalize(0.3333333333333)
        assert rationalize(math.pi) is None
