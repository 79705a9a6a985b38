from fractions import Fraction

import pytest
from hypothesis import given

from desing.classify import Kind, classify
from desing.invariant import INV_PP, ZERO, BirthTable, compute_inv, iota, parse_value
from desing.marked import Chart, Divisor, MarkedIdeal
from desing.polyring import parse_poly
from desing.resolve import (DEFAULT_BUDGET, BudgetExceeded, CenterError, History, ResolveError,
                            blow_up, check_center, clean, evaluate, minimal_subset, root_node,
                            run_algorithm, select_center)
from strategies import nonzero_q, small_q

V = ("x", "y", "z")
U = ("u", "x", "y", "z")


def P(text, names=V):
    return parse_poly(text, names)


def v(text):
    return parse_value(text)


C0 = Chart("c", 0, V)


def exc_chart(year=1):
    return Chart("c", year, V, (Divisor(1, P("x"), year),))


def start(f, chart=C0, birth=None):
    h = History()
    node = h.add(root_node(f, chart, birth))
    evaluate(node)
    return h, node


# blow-ups

def test_pinch_point_x_chart_keeps_its_form():
    h, node = start(P("z^2+x*y^2"))
    children = blow_up(h, node, (0, 1, 2))
    x = next(c for c in children if c.id == "c.x")
    assert x.strict == P("z^2+x*y^2")
    assert [(d.label, d.poly, d.birth_year) for d in x.chart.divisors] == [(1, P("x"), 1)]
    assert x.total == P("x^2*z^2+x^3*y^2")


@pytest.mark.parametrize("alpha", [2, 3, 4, 5])
def test_codim_two_center_lowers_alpha(alpha):
    h, node = start(P(f"z^2+x^{alpha}*y^2"), exc_chart())
    children = blow_up(h, node, (0, 2), normalize=False)
    x = next(c for c in children if c.id == "c.x")
    assert x.strict == P(f"z^2+x^{alpha - 2}*y^2")


def test_exceptional_singularity_from_u_chart():
    f = P("z^2+u*y*(y+x^2)^2", U)
    h = History()
    node = h.add(root_node(f, Chart("c", 0, U)))
    children = blow_up(h, node, (0, 2, 3), normalize=False)
    u = next(c for c in children if c.id == "c.u")
    assert u.strict == P("z^2+y*(u*y+x^2)^2", U)
    assert u.strict == P("z^2+x^4*y+2*u*x^2*y^2+u^2*y^3", U)
    assert u.classification is None


def test_transforms_relation_per_step():
    h = run_algorithm(P("z^2+x^3*y^2"), C0, "paper")
    for _, child, _ in h.edges():
        # total = divisor monomial * strict, and the controlled transform sits in between
        mono = child.total.divmod_exact(child.strict)
        assert mono is not None and len(mono) == 1
        assert child.total.divmod_exact(child.controlled) is not None
        assert child.controlled.divmod_exact(child.strict) is not None


CUBIC = P("z^2+x*y^2+x^3")
_h, _node = start(CUBIC)
CUBIC_CHARTS = {k.id: k for k in blow_up(_h, _node, (0, 1, 2))}


@given(nonzero_q, nonzero_q, small_q)
def test_overlapping_charts_agree(a, b, c):
    # the point (a, b, c) of the x-chart is (1/b, a*b, c/b) in the y-chart
    f, kids = CUBIC, CUBIC_CHARTS
    sx = kids["c.x"].strict.evaluate((a, b, c))
    sy = kids["c.y"].strict.evaluate((1 / b, a * b, c / b))
    d = f.ord()
    assert sx * a ** d == sy * (a * b) ** d


def test_center_must_lie_in_max_order_locus():
    with pytest.raises(CenterError):
        check_center(C0, P("z^2+x*y^2"), (0, 1))
    check_center(C0, P("z^2+x*y^2"), (1, 2))


def test_center_avoids_protected_points():
    with pytest.raises(CenterError):
        check_center(C0, P("z^2+x*y^2"), (1, 2), protected=[(Fraction(3), Fraction(0), Fraction(0))])
    check_center(C0, P("z^2+x*y^2"), (1, 2), protected=[(Fraction(3), Fraction(1), Fraction(0))])


def test_noncoordinate_divisor_rejected():
    chart = Chart("c", 1, V, (Divisor(1, P("x+y^2"), 1),))
    with pytest.raises(CenterError):
        check_center(chart, P("z^2"), (2,))


# centers

def test_select_center_pinch_point_is_origin():
    _, node = start(P("z^2+x*y^2"))
    assert select_center(node) == ((2, 1, 0), "")


def test_select_center_year_two_charts():
    h = run_algorithm(P("z^2+x*y^2"), C0, "paper")
    assert h.node("c.x.x").record.value == v("(2,0,1,0,inf)")
    assert select_center(h.node("c.x.x"))[0] == (2, 1)
    assert h.node("c.x.y").record.value == v("(2,0,0)")
    assert sorted(select_center(h.node("c.x.y"))[0]) == [0, 1, 2]


def test_minimal_subset():
    assert minimal_subset({1: Fraction(1, 2), 2: Fraction(1, 2)}) == (1, 2)
    assert minimal_subset({1: Fraction(3, 2), 2: Fraction(1, 2)}) == (1,)
    assert minimal_subset({1: Fraction(1, 3), 2: Fraction(1, 3)}) is None
    assert minimal_subset({2: 1, 1: 1}) == (1,)


# cleaning

@pytest.mark.parametrize("alpha", range(2, 8))
def test_cleaning_ladder(alpha):
    h, node = start(P(f"z^2+x^{alpha}*y^2"), exc_chart())
    out = clean(h, node, 1)
    assert len(h.steps) == alpha // 2
    done = [n for n in out if n.cleaned]
    assert len(done) == 1
    expected = "z^2+y^2" if alpha % 2 == 0 else "z^2+x*y^2"
    assert done[0].strict == P(expected)
    assert done[0].note == "cleaned at level 1"
    kind = Kind.NC if alpha % 2 == 0 else Kind.PP
    assert classify(done[0].strict, V, done[0].record).kind is kind
    assert all(n.id.endswith(".z") for n in out if not n.cleaned)


def test_cleaning_reduces_exponent_sum():
    h, node = start(P("z^2+x^7*y^2"), exc_chart())
    clean(h, node, 1)
    assert [s.label for s in h.steps] == ["(z=x=0)"] * 3
    path = h.path("c.x.x.x")
    sums = [sum(n.record.residual_exponents[1].values()) for n in path]
    assert sums == sorted(sums, reverse=True) and len(set(sums)) == len(sums)


def test_clean_level_out_of_range():
    h, node = start(P("z^2+x*y^2"))
    with pytest.raises(ResolveError):
        clean(h, node, 5)


# drivers

def test_default_driver_route():
    h = run_algorithm(P("z^2+x^3*y^2"), C0, "paper")
    path = ["c", "c.x", "c.x.x", "c.x.x.y"]
    values = [str(h.node(n).record.value) for n in path]
    assert values == ["(2,0,5/2,0,1,0,inf)", "(2,0,1,1,1,0,inf)", "(2,0,1,0,inf)", "(2,0,0)"]
    totals = [h.node(n).total for n in path[1:]]
    assert totals == [P("x^2*(z^2+x^3*y^2)"), P("x^4*(z^2+x^3*y^2)"), P("x^4*y^2*(z^2+x^3)")]
    assert [s.label for s in h.steps[:3]] == ["{0}", "{0}", "(z=y=0)"]


def test_clean_driver_route():
    h = run_algorithm(P("z^2+x^3*y^2"), C0, "clean")
    leaf = h.node("c.x.x.x")
    assert leaf.total == P("x^6*(z^2+x*y^2)")
    assert leaf.classification.name == "pp"
    step = h.steps[2]
    assert (step.node, step.label, step.kind) == ("c.x.x", "(z=x=0)", "clean")


def test_full_resolution_of_pinch_point():
    h = run_algorithm(P("z^2+x*y^2"), C0, "paper")
    assert len(h.steps) <= DEFAULT_BUDGET
    assert all(n.strict.ord() <= 1 for n in h.leaves())
    assert not h.violations


def test_budget_exceeded_keeps_history():
    with pytest.raises(BudgetExceeded) as info:
        run_algorithm(P("z^2+x^3*y^2"), C0, "paper", budget=2)
    assert len(info.value.history.steps) == 2


def test_until_threshold_stops_early():
    h = run_algorithm(P("z^2+x^3*y^2"), C0, "paper", until=iota(2))
    assert all(n.record is None or n.record.value <= iota(2) for n in h.leaves())
    assert len(h.steps) < len(run_algorithm(P("z^2+x^3*y^2"), C0, "paper").steps)


def test_unknown_driver():
    with pytest.raises(ResolveError):
        run_algorithm(P("z^2+x*y^2"), C0, "nope")


def test_jobs_do_not_change_the_history():
    a = run_algorithm(P("z^2+x^3*y^2"), C0, "paper", jobs=1)
    b = run_algorithm(P("z^2+x^3*y^2"), C0, "paper", jobs=4)
    assert list(a.nodes) == list(b.nodes)
    assert [(s.node, s.center) for s in a.steps] == [(s.node, s.center) for s in b.steps]
    assert [n.record and n.record.value for n in a.nodes.values()] == \
        [n.record and n.record.value for n in b.nodes.values()]


@pytest.mark.parametrize("text", ["z^2+x^3*y^2", "z^2+x^5*y^2"])
def test_min3_reaches_minimal_singularities(text):
    h = run_algorithm(P(text), C0, "min3")
    allowed = {Kind.SMOOTH, Kind.PP, Kind.MONOMIAL}
    for leaf in h.leaves():
        cls = leaf.classification
        assert cls.kind in allowed or (cls.kind is Kind.NC and cls.k == 2)
    assert not h.violations


def test_protected_points_are_never_blown_up():
    pt = (Fraction(0), Fraction(1), Fraction(0))
    h = run_algorithm(P("z^2+x*y^2"), C0, "paper", protected=[pt])
    for step in h.steps:
        node = h.node(step.node)
        for p in node.protected:
            assert not all(p[i] == 0 for i in step.center)


def test_ncp_special_blow_up():
    chart = Chart("c", 1, U, (Divisor(1, P("u", U), 1),))
    h = run_algorithm(P("z^2+u*(y+x)^2*(y-2*x)", U), chart, "ncp",
                      birth=BirthTable(1, fallback=(0, 0, 0)))
    assert h.steps[0].kind == "special"
    leaf = h.node("c.u.u")
    assert leaf.strict == P("z^2+(y+x)^2*(y-2*x)", U)
    assert leaf.classification.kind is Kind.PP
    assert not h.violations


def test_ncp_protects_pinch_point():
    h = run_algorithm(P("z^2+x*y^2"), C0, "ncp")
    assert not h.steps
    assert h.root.classification.kind is Kind.PP


# semicontinuity

def _histories():
    yield run_algorithm(P("z^2+x*y^2"), C0, "paper")
    yield run_algorithm(P("z^2+x^3*y^2"), C0, "paper")
    yield run_algorithm(P("z^2+x^3*y^2"), C0, "clean")
    for alpha in range(2, 8):
        h, node = start(P(f"z^2+x^{alpha}*y^2"), exc_chart())
        clean(h, node, 1)
        yield h


def child_value(parent, child):
    """Invariant of the child with the birth table inherited from the parent."""
    birth = parent.birth.extended(parent.record.value, child.year)
    return compute_inv(MarkedIdeal(child.chart, (child.controlled,), 1), birth).value


def test_infinitesimal_semicontinuity_on_every_edge():
    edges = 0
    for h in _histories():
        for parent, child, _ in h.edges():
            if child.singular():
                assert child_value(parent, child) <= parent.record.value
                edges += 1
    assert edges > 20


def test_default_driver_strictly_decreases():
    # in the monomial case the value stays and the monomial shrinks instead
    h = run_algorithm(P("z^2+x^3*y^2"), C0, "paper")
    for parent, child, _ in h.edges():
        if not child.singular():
            continue
        if parent.record.value.tail is ZERO:
            assert child.record.value <= parent.record.value
        else:
            assert child.record.value < parent.record.value


def test_root_birth_defaults():
    node = root_node(P("z^2+x*y^2"), exc_chart(2))
    assert node.birth == BirthTable(year=2, fallback=(0,))
    assert node.strict == P("z^2+x*y^2")
    node = root_node(P("x^2*(z^2+x*y^2)"), exc_chart(2))
    assert node.strict == P("z^2+x*y^2")
    assert node.total == P("x^2*(z^2+x*y^2)")


def test_inv_pp_constant_matches():
    assert INV_PP == v("(2,0,3/2,0,1,0,inf)")
