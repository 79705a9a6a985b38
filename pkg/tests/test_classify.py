from fractions import Fraction

import pytest
import sympy
from hypothesis import given
from hypothesis import strategies as st

from desing.classify import (BRANCHES, SING_CODIM, Kind, check_factors, classify, discriminant_test,
                             match_catalog, poly_sqrt, split_homogeneous)
from desing.invariant import INV_DPP, INV_PP, BirthTable, inv_of, parse_value
from desing.marked import Chart, Divisor
from desing.polyring import Poly, parse_poly

V = ("x", "y", "z")
W = ("w", "x", "y", "z")


def P(text, names=V):
    return parse_poly(text, names)


def kind_of(text, names=V, **kw):
    return classify(P(text, names), names, **kw)


# the lemma suite

def test_pinch_point():
    c = kind_of("z^2+x*y^2")
    assert c.kind is Kind.PP and c.name == "pp"
    assert inv_of(P("z^2+x*y^2"), Chart("c", 0, V)).value == INV_PP


def test_degenerate_pinch_point():
    c = kind_of("z^2+(y+2*x^2)*(y-x^2)^2")
    assert c.kind is Kind.DPP and c.name == "dpp"
    assert inv_of(P("z^2+(y+2*x^2)*(y-x^2)^2"), Chart("c", 0, V)).value == INV_DPP


def test_isolated_singularity_is_inconclusive():
    c = kind_of("z^2+y^3+x^3")
    assert c.kind is Kind.INCONCLUSIVE
    assert c.reason == SING_CODIM


def test_rewritten_pinch_point_forms():
    assert kind_of("z^2+(y+2*x)*(y-x)^2").kind is Kind.PP
    assert kind_of("z^2+(y+x)^2*(y-2*x)").kind is Kind.PP


@pytest.mark.parametrize("text", ["z^2+x*y^2", "z^2+(y+2*x^2)*(y-x^2)^2", "z^2+(y+x)^2*(y-2*x)"])
def test_witness_reexpands_to_same_kind(text):
    c = kind_of(text)
    w = P(c.witness)
    again = classify(w, V)
    assert again.kind is c.kind
    assert inv_of(w, Chart("c", 0, V)).value == inv_of(P(text), Chart("c", 0, V)).value


# normal crossings

@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_coordinate_hyperplanes(k):
    names = tuple(f"x{i}" for i in range(1, k + 1))
    c = classify(P("*".join(names), names), names)
    if k == 1:
        assert c.kind is Kind.SMOOTH
    else:
        assert (c.kind, c.k, c.split) == (Kind.NC, k, True)


def test_factored_hint():
    hint = [P("x"), P("y"), P("z")]
    c = classify(P("x*y*z"), V, hint=hint)
    assert c.name == "nc3" and c.witness
    bad = [P("x"), P("y")]
    assert classify(P("x*y*z"), V, hint=bad).name == "nc3"


def test_fermat_cubic_is_inconclusive():
    c = kind_of("x^3+y^3+z^3")
    assert c.kind is Kind.INCONCLUSIVE and c.reason == BRANCHES


def test_split_flag_over_the_rationals():
    assert kind_of("z^2+y^2").split is False
    assert kind_of("z^2-y^2").split is True
    assert kind_of("x*y").split is True


def test_split_homogeneous():
    f = P("(x+y)*(x-y)*z")
    factors = split_homogeneous(f, 3)
    assert factors is not None and len(factors) == 3
    assert check_factors(f, factors) is not None
    assert split_homogeneous(P("x^3+y^3+z^3"), 3) is None
    assert split_homogeneous(P("x*y+z^3"), 2) is None


def test_check_factors():
    assert check_factors(P("x*y"), [P("x"), P("y")]) is not None
    assert check_factors(P("x*y"), [P("x"), P("x")]) is None
    assert check_factors(P("x*(x+y^2)"), [P("x"), P("x+y^2")]) is None


# catalog

@pytest.mark.parametrize("text,kind", [
    ("x*(z^2+w*y^2)", Kind.PROD),
    ("z^3+w*y^3+w^2*x^3-3*w*x*y*z", Kind.CP3),
    ("z^2+y*(w*y+x^2)^2", Kind.EXC),
])
def test_catalog(text, kind):
    c = kind_of(text, W)
    assert c.kind is kind and c.name == kind.value
    assert c.witness


def test_exceptional_singularity_from_blowup():
    assert kind_of("z^2+x^4*y+2*u*x^2*y^2+u^2*y^3", ("u", "x", "y", "z")).kind is Kind.EXC


def test_catalog_scaled():
    assert match_catalog(P("3*x*(z^2+w*y^2)", W), W).kind is Kind.PROD
    assert match_catalog(P("x*(z^2+2*w*y^2)", W), W) is None


PERMUTED = ["z^2+x*y^2", "z^2+(y+2*x^2)*(y-x^2)^2", "x*y*z", "z^2+y^3+x^3", "x^3+y^3+z^3"]


@given(st.sampled_from(PERMUTED), st.permutations(range(3)))
def test_permutation_invariance(text, perm):
    f = P(text)
    g = f.substitute([Poly.var(3, perm[i]) for i in range(3)])
    assert classify(g, V).kind is classify(f, V).kind


@given(st.sampled_from(["x*(z^2+w*y^2)", "z^3+w*y^3+w^2*x^3-3*w*x*y*z", "z^2+y*(w*y+x^2)^2"]),
       st.permutations(range(4)))
def test_catalog_permutation_invariance(text, perm):
    f = P(text, W)
    g = f.substitute([Poly.var(4, perm[i]) for i in range(4)])
    assert classify(g, W).kind is classify(f, W).kind


# smooth, monomial and inconclusive

def test_smooth_cases():
    assert kind_of("x+y").kind is Kind.SMOOTH
    c = kind_of("1+x")
    assert c.kind is Kind.SMOOTH and "not on" in c.reason


def test_monomial_case_from_record():
    chart = Chart("c", 2, V, (Divisor(1, P("x"), 1), Divisor(2, P("y"), 2)))
    births = BirthTable(0).extended(INV_PP, 1).extended(parse_value("(2,0,1,1,1,0,inf)"), 2)
    rec = inv_of(P("z^2+x*y"), chart, births)
    assert classify(P("z^2+x*y"), V, rec).kind is Kind.MONOMIAL


def test_nonlinear_contact_is_inconclusive():
    m = [[-1, -2, -1, 0], [-2, -1, -1, 2], [0, 2, -2, 2], [0, 0, 1, 1]]
    images = [sum((Poly.var(4, j).scale(m[i][j]) for j in range(4)), Poly.zero(4)) for i in range(4)]
    c = classify(P("x*(z^2+w*y^2)", W).substitute(images), W)
    assert c.kind is Kind.INCONCLUSIVE
    assert "nonlinear" in c.reason


# symbolic helpers

def _sympy_poly(expr):
    return P(str(sympy.expand(expr)).replace("**", "^"))


@pytest.mark.parametrize("power", [1, 2])
def test_discriminant_identity_examples(power):
    # oracle: expand (y - A)^2 (y + 2A) with sympy and read off B and C
    y, x = sympy.symbols("y x")
    a = x ** power
    cubic = sympy.Poly(sympy.expand((y - a) ** 2 * (y + 2 * a)), y)
    B = _sympy_poly(cubic.coeff_monomial(y))
    C = _sympy_poly(cubic.coeff_monomial(1))
    zero, A = discriminant_test(B, C)
    assert zero and A == _sympy_poly(a)


def test_discriminant_nonzero():
    assert discriminant_test(Poly.zero(3), P("x^3")) == (False, None)
    assert discriminant_test(P("x"), P("x^2"))[0] is False


def test_discriminant_trivial():
    zero, A = discriminant_test(Poly.zero(3), Poly.zero(3))
    assert zero and A == Poly.zero(3)


def test_poly_sqrt():
    kappa, g = poly_sqrt(P("4*x^2+4*x*y+y^2"))
    assert g * g.scale(kappa) == P("4*x^2+4*x*y+y^2")
    assert poly_sqrt(P("x")) is None
    assert poly_sqrt(P("x^2+y^2")) is None
    kappa, g = poly_sqrt(P("-3*x^4"))
    assert (kappa, g) == (Fraction(-3), P("x^2"))
