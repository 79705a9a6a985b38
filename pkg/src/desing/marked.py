"""Charts, exceptional divisors and the calculus of marked ideals.

A marked ideal is a list of generators on a smooth subspace ``N`` of a chart
together with a marking ``d``.  Sums of marked ideals are kept as
:class:`WeightedSum` objects and never expanded except by the ``expand``
oracle; every order computation goes through the ratio ``ord / d``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from itertools import combinations_with_replacement
from math import lcm
from typing import Iterable, Sequence

from .polyring import INF, Poly, product


class MarkedError(ValueError):
    """Violated precondition in the marked-ideal calculus."""


class AdmissibilityError(MarkedError):
    """A blow-up center is not admissible for the object being transformed."""


@dataclass(frozen=True)
class Divisor:
    """An exceptional divisor component with its position and year of birth."""

    label: int
    poly: Poly
    birth_year: int

    def __post_init__(self):
        if self.poly.is_zero() or self.poly.is_constant():
            raise MarkedError(f"divisor {self.label} must be a nonzero non-unit")

    def through_origin(self) -> bool:
        return self.poly.constant_term() == 0


@dataclass(frozen=True)
class Lineage:
    """How a chart was produced from its parent by a blow-up or a coordinate change."""

    parent: str
    center: tuple
    chart_var: int | None
    images: tuple


@dataclass(frozen=True)
class Chart:
    """Affine coordinates with an ordered registry of exceptional divisors."""

    id: str
    year: int
    variables: tuple
    divisors: tuple = ()
    lineage: Lineage | None = None

    def __post_init__(self):
        labels = [h.label for h in self.divisors]
        if len(set(labels)) != len(labels):
            raise MarkedError("divisor labels must be unique within a chart")
        for h in self.divisors:
            if h.poly.arity != self.arity:
                raise MarkedError("divisor arity does not match chart")
            if h.birth_year > self.year:
                raise MarkedError(f"divisor {h.label} born after the chart year")

    @property
    def arity(self) -> int:
        return len(self.variables)

    def divisor(self, label: int) -> Divisor:
        for h in self.divisors:
            if h.label == label:
                return h
        raise KeyError(label)

    def labels(self) -> tuple:
        return tuple(h.label for h in self.divisors)

    def fmt(self, p: Poly) -> str:
        return p.format(self.variables)

    def var(self, i: int) -> Poly:
        return Poly.var(self.arity, i)

    def next_label(self) -> int:
        return max((h.label for h in self.divisors), default=0) + 1

    def with_coordinates(self, images: Sequence[Poly], new_id: str | None = None) -> "Chart":
        """Same chart after the substitution ``x_i -> images[i]`` of coordinates."""
        divs = tuple(replace(h, poly=h.poly.substitute(images)) for h in self.divisors)
        lineage = Lineage(self.id, (), None, tuple(images))
        return Chart(new_id or self.id, self.year, self.variables, divs, lineage)

    def blow_up(self, center: Sequence[int], chart_var: int, new_id: str):
        """The ``x_j``-chart of the blow-up with center ``x_i = 0, i in center``.

        Returns ``(chart, images)``; the new exceptional divisor ``x_j = 0`` is
        appended last with birth year ``year + 1``.
        """
        center = tuple(center)
        if chart_var not in center:
            raise MarkedError("chart variable must belong to the center")
        if len(set(center)) != len(center) or not center:
            raise MarkedError("center must be a nonempty set of variables")
        images = blowup_images(self.arity, center, chart_var)
        exc = Poly.var(self.arity, chart_var)
        divs = []
        for h in self.divisors:
            pulled = h.poly.substitute(images)
            stripped = pulled.divide_power(exc, pulled.ord_along(exc))
            if not stripped.is_constant():
                divs.append(replace(h, poly=stripped.monic()))
        divs.append(Divisor(self.next_label(), exc, self.year + 1))
        lineage = Lineage(self.id, center, chart_var, images)
        return Chart(new_id, self.year + 1, self.variables, tuple(divs), lineage), images


def blowup_images(arity: int, center: Sequence[int], chart_var: int) -> tuple:
    """Chart substitution: ``x_k -> x_j * x_k`` for center variables ``k != j``."""
    xj = Poly.var(arity, chart_var)
    return tuple(Poly.var(arity, k) * xj if (k in center and k != chart_var) else Poly.var(arity, k)
                 for k in range(arity))


def _pivot(g: Poly):
    """Variable ``i`` such that ``g = c*x_i + h`` with ``h`` free of ``x_i``, or None."""
    lin = g.linear_part()
    for i in reversed(range(g.arity)):
        unit = tuple(1 if k == i else 0 for k in range(g.arity))
        if lin[i] and all(e == unit for e in g.terms if e[i]):
            return i, lin[i]
    return None


def reduce_generators(gens: Iterable[Poly]) -> tuple:
    """Drop zeros and duplicates, scale to monic form, sort deterministically."""
    seen = {}
    for g in gens:
        if g.is_zero():
            continue
        g = g.monic()
        seen[g] = None
    return tuple(sorted(seen, key=Poly.sort_key))


@dataclass(frozen=True)
class MarkedIdeal:
    """Generators on ``N`` (the zero set of ``chain``) with marking ``d``.

    ``blocks`` holds the divisor label sets already counted as old; they are
    excluded from monomial parts.  An empty generator tuple is the zero ideal.
    """

    chart: Chart
    generators: tuple
    d: int
    chain: tuple = ()
    blocks: tuple = ()

    def __post_init__(self):
        if not isinstance(self.d, int) or self.d < 1:
            raise MarkedError(f"marking must be a positive integer, got {self.d}")
        object.__setattr__(self, "generators", reduce_generators(self.generators))
        seen = set()
        for b in self.blocks:
            if seen & set(b):
                raise MarkedError("boundary blocks must be disjoint")
            seen |= set(b)
        for g in self.generators:
            if g.arity != self.chart.arity:
                raise MarkedError("generator arity does not match chart")
            if self.eliminated() & g.variables():
                raise MarkedError("generators must not involve eliminated chain variables")

    def eliminated(self) -> set:
        return {eliminated_variable(c) for c in self.chain}

    def is_zero(self) -> bool:
        return not self.generators

    def ord(self):
        return min((g.ord() for g in self.generators), default=INF)

    def restrict(self, p: Poly) -> Poly:
        """Restriction of an ambient polynomial to ``N``."""
        for c in self.chain:
            p = restrict_to_hypersurface(p, c)
        return p

    def with_generators(self, gens, d=None) -> "MarkedIdeal":
        return replace(self, generators=tuple(gens), d=self.d if d is None else d)

    def fmt(self) -> str:
        return format_marked(self.generators, self.d, self.chart)

    def __str__(self):
        return self.fmt()


def eliminated_variable(c: Poly) -> int:
    piv = _pivot(c)
    if piv is None:
        raise MarkedError("chain polynomials must have the form c*x_i + h(other variables)")
    return piv[0]


def restrict_to_hypersurface(p: Poly, c: Poly) -> Poly:
    """Substitute the graph ``c = 0`` (solved for its pivot variable) into ``p``."""
    piv = _pivot(c)
    if piv is None:
        raise MarkedError("chain polynomials must have the form c*x_i + h(other variables)")
    i, coeff = piv
    xi = Poly.var(c.arity, i)
    h = c - xi.scale(coeff)
    images = [Poly.var(c.arity, k) for k in range(c.arity)]
    images[i] = h.scale(-1 / coeff)
    return p.substitute(images)


def format_marked(generators, d, chart: Chart) -> str:
    if not generators:
        return "0"
    return f"({', '.join(format_factored(g, chart) for g in generators)},{d})"


def format_factored(p: Poly, chart: Chart, divisors: Iterable[Divisor] | None = None) -> str:
    """Print ``p`` with powers of coordinate divisors pulled out in front.

    Only divisors given by a single coordinate are factored; with no divisor
    list, every coordinate variable is a candidate.
    """
    if p.is_zero():
        return "0"
    names = chart.variables
    if divisors is None:
        candidates = [Poly.var(chart.arity, i) for i in range(chart.arity)]
    else:
        candidates = [h.poly for h in divisors]
    prefix = []
    rest = p
    for h in candidates:
        if len(h) != 1 or h.total_degree() != 1:
            continue
        m = rest.ord_along(h)
        if m:
            rest = rest.divide_power(h, m)
            name = names[h.variables().pop()]
            prefix.append((names.index(name), name if m == 1 else f"{name}^{m}"))
    if not prefix:
        return p.format(names)
    prefix.sort()
    mono = "*".join(s for _, s in prefix)
    if rest.is_constant():
        c = rest.constant_term()
        return mono if c == 1 else f"{rest.format(names)}*{mono}"
    if len(rest) == 1:
        return f"{mono}*{rest.format(names)}"
    return f"{mono}*({rest.format(names)})"


@dataclass(frozen=True)
class WeightedSum:
    """A formal sum of marked ideals sharing chart, chain and blocks.

    Summands are kept in insertion order (left fold); an empty sum is the
    distinguished zero marker.
    """

    summands: tuple = field(default=())

    def __post_init__(self):
        out = []
        for s in self.summands:
            if s.is_zero() or s in out:
                continue
            out.append(s)
        object.__setattr__(self, "summands", tuple(out))
        if out:
            ctx = _context(out[0])
            for s in out[1:]:
                if _context(s) != ctx:
                    raise MarkedError("summands must share chart, chain and blocks")

    def is_zero(self) -> bool:
        return not self.summands

    @property
    def chart(self) -> Chart:
        return self.summands[0].chart

    @property
    def chain(self) -> tuple:
        return self.summands[0].chain

    @property
    def blocks(self) -> tuple:
        return self.summands[0].blocks

    def ratio(self):
        """Minimum of ``ord / d`` over summands (``INF`` for the zero sum)."""
        return min((Fraction(s.ord()) / s.d if s.ord() is not INF else INF for s in self.summands),
                   default=INF)

    def fmt(self) -> str:
        if self.is_zero():
            return "0"
        return "+".join(s.fmt() for s in self.summands)

    def __str__(self):
        return self.fmt()


def _context(m: MarkedIdeal):
    return (m.chart, m.chain, m.blocks)


def as_sum(x) -> WeightedSum:
    if isinstance(x, WeightedSum):
        return x
    return WeightedSum((x,))


def add(a, b) -> WeightedSum:
    """Formal sum; association is a left fold over summands."""
    a, b = as_sum(a), as_sum(b)
    if not a.is_zero() and not b.is_zero() and _context(a.summands[0]) != _context(b.summands[0]):
        raise MarkedError("summands must share chart, chain and blocks")
    return WeightedSum(a.summands + b.summands)


def ideal_power(gens: Sequence[Poly], k: int, arity: int) -> tuple:
    if k == 1:
        return tuple(gens)
    return tuple(product(c, arity) for c in combinations_with_replacement(gens, k))


def expand(w) -> MarkedIdeal:
    """Literal ``(I^{l/d} + J^{l/e}, l)``; a test oracle for small markings."""
    w = as_sum(w)
    if w.is_zero():
        raise MarkedError("cannot expand the zero marker")
    l = lcm(*(s.d for s in w.summands))
    arity = w.chart.arity
    gens = []
    for s in w.summands:
        gens.extend(ideal_power(s.generators, l // s.d, arity))
    return replace(w.summands[0], generators=tuple(gens), d=l)


def cosupp_contains_origin(m) -> bool:
    """Whether the origin lies in the cosupport (order at least the marking)."""
    for s in as_sum(m).summands:
        if any(g.ord() < s.d for g in s.generators):
            return False
    return True


def cosupp_contains(m, point: Sequence) -> bool:
    """Cosupport membership at an arbitrary rational point of the chart."""
    for s in as_sum(m).summands:
        for g in s.generators:
            if s.restrict(g).translate(point).ord() < s.d:
                return False
    return True


def _active_polys(m: MarkedIdeal, active: Iterable[int]) -> list:
    out = []
    for label in sorted(active):
        h = m.restrict(m.chart.divisor(label).poly)
        if h.is_zero() or h.is_constant() or h.constant_term() != 0:
            continue
        out.append((label, h))
    return out


def monomial_residual_split(m: MarkedIdeal, active: Iterable[int]):
    """Factor generators as ``monomial * residual`` along the active divisors.

    Returns ``(exponents, residual)`` where ``exponents`` maps divisor labels to
    the largest power dividing every generator.
    """
    if m.is_zero():
        raise MarkedError("the zero ideal has no monomial part")
    exps = {}
    gens = list(m.generators)
    for label, h in _active_polys(m, active):
        e = min(g.ord_along(h) for g in gens)
        if e:
            gens = [g.divide_power(h, e) for g in gens]
        exps[label] = e
    return exps, m.with_generators(gens)


def monomial_part(w, active: Iterable[int]) -> dict:
    """Normalized exponents ``min_i a_{H,i} / d_i`` of the monomial part of a sum."""
    w = as_sum(w)
    active = list(active)
    mu: dict = {}
    for s in w.summands:
        exps, _ = monomial_residual_split(s, active)
        for label, e in exps.items():
            r = Fraction(e, s.d)
            mu[label] = min(mu.get(label, r), r)
    return mu


def residual_multiplicity(w, active: Iterable[int] = ()):
    """``ord R / d`` with ``R`` the residual factor; ``INF`` for the zero ideal."""
    w = as_sum(w)
    if w.is_zero():
        return INF
    mu = monomial_part(w, active)
    base = w.ratio()
    s0 = w.summands[0]
    polys = dict(_active_polys(s0, mu))
    return base - sum((mu[label] * polys[label].ord() for label in mu), Fraction(0))


def _divide_summand(s: MarkedIdeal, mu: dict, polys: dict) -> MarkedIdeal:
    k = 1
    for r in mu.values():
        k = lcm(k, (r * s.d).denominator)
    gens = ideal_power(s.generators, k, s.chart.arity)
    mono = product((polys[label] ** int(r * s.d * k) for label, r in mu.items()), s.chart.arity)
    return s.with_generators([g // mono for g in gens], s.d * k)


def _remark(s: MarkedIdeal, factor: Fraction) -> MarkedIdeal:
    """Multiply the marking by a rational factor, powering generators if needed."""
    target = s.d * factor
    k = target.denominator
    gens = ideal_power(s.generators, k, s.chart.arity)
    return s.with_generators(gens, int(target * k))


def residual(w, active: Iterable[int]):
    """The residual sum ``R`` together with the normalized monomial exponents."""
    w = as_sum(w)
    mu = {k: v for k, v in monomial_part(w, active).items() if v}
    polys = dict(_active_polys(w.summands[0], mu))
    return WeightedSum(tuple(_divide_summand(s, mu, polys) for s in w.summands)), mu


def companion(m, active: Iterable[int] = ()):
    """Companion ideal: ``(R, ord R)`` plus ``(M, d - ord R)`` when ``ord R < d``.

    Requires the origin in the cosupport.  Raises when the residual is a unit,
    which is the monomial case.
    """
    w = as_sum(m)
    if w.is_zero():
        raise MarkedError("companion of the zero ideal")
    if not cosupp_contains_origin(w):
        raise MarkedError("origin is not in the cosupport")
    r_sum, mu = residual(w, active)
    nu = residual_multiplicity(w, active)
    if nu == 0:
        raise MarkedError("residual part is a unit (monomial case)")
    summands = [_remark(s, nu) for s in r_sum.summands]
    if nu < 1:
        s0 = w.summands[0]
        polys = dict(_active_polys(s0, mu))
        if len(w.summands) == 1:
            c = s0.d
        else:
            c = 1
            for r in list(mu.values()) + [1 - nu]:
                c = lcm(c, Fraction(r).denominator)
        mono = product((polys[label] ** int(r * c) for label, r in mu.items()), s0.chart.arity)
        summands.append(replace(s0, generators=(mono,), d=int((1 - nu) * c)))
    return WeightedSum(tuple(summands))


def derivative_ideal(m: MarkedIdeal) -> MarkedIdeal:
    """Generators together with all first partials in the variables of ``N``."""
    if m.d < 2:
        raise MarkedError("derivative ideal needs marking at least 2")
    free = [i for i in range(m.chart.arity) if i not in m.eliminated()]
    gens = list(m.generators)
    for g in m.generators:
        gens.extend(g.partial(i) for i in free)
    return m.with_generators(gens, m.d - 1)


def coefficient_ideal(m, z_index: int) -> WeightedSum:
    """Sum of ``(d^j I / dz^j |_{z=0}, d - j)`` for ``j < d`` on the hypersurface ``z = 0``.

    ``z_index`` must be a coordinate of order one on ``N``.  Zero summands are
    dropped; an all-zero result is the empty (zero) sum.
    """
    w = as_sum(m)
    if w.is_zero():
        return w
    if z_index in w.summands[0].eliminated():
        raise MarkedError("maximal contact variable already eliminated")
    zpoly = Poly.var(w.chart.arity, z_index)
    out = []
    for s in w.summands:
        for j in range(s.d):
            gens = []
            for g in s.generators:
                dg = g
                for _ in range(j):
                    dg = dg.partial(z_index)
                gens.append(dg.set_zero([z_index]))
            gens = [g for g in gens if g]
            if gens:
                out.append(replace(s, generators=tuple(gens), d=s.d - j, chain=s.chain + (zpoly,)))
    return WeightedSum(tuple(out))


def add_boundary(c, block: Iterable[int], like: MarkedIdeal | None = None) -> WeightedSum:
    """Append ``(H|_N, 1)`` for each divisor ``H`` of the block."""
    w = as_sum(c)
    block = sorted(block)
    if not block:
        return w
    ref = like if w.is_zero() else w.summands[0]
    if ref is None:
        raise MarkedError("boundary on the zero sum needs a reference context")
    extra = []
    for label in block:
        h = ref.chart.divisor(label)
        if not h.through_origin():
            raise MarkedError(f"divisor {label} does not pass through the origin")
        extra.append(replace(ref, generators=(ref.restrict(h.poly),), d=1))
    return WeightedSum(w.summands + tuple(extra))


def with_blocks(w, blocks: tuple) -> WeightedSum:
    w = as_sum(w)
    return WeightedSum(tuple(replace(s, blocks=blocks) for s in w.summands))


# transforms under a blow-up chart

def _pullback_exc(p: Poly, images, chart_var: int):
    pulled = p.substitute(images)
    exc = Poly.var(p.arity, chart_var)
    return pulled, exc


def total_transform(p: Poly, center: Sequence[int], chart_var: int) -> Poly:
    return p.substitute(blowup_images(p.arity, center, chart_var))


def strict_transform(p: Poly, center: Sequence[int], chart_var: int) -> Poly:
    pulled, exc = _pullback_exc(p, blowup_images(p.arity, center, chart_var), chart_var)
    if pulled.is_zero():
        return pulled
    return pulled.divide_power(exc, pulled.ord_along(exc))


def controlled_poly(p: Poly, center: Sequence[int], chart_var: int, d: int) -> Poly:
    if p.ord_in(center) < d:
        raise AdmissibilityError("center is not contained in the cosupport")
    pulled, exc = _pullback_exc(p, blowup_images(p.arity, center, chart_var), chart_var)
    q = pulled.divmod_exact(exc ** d)
    if q is None:
        raise AdmissibilityError("controlled transform is not an exact division")
    return q


def controlled_transform(m, center: Sequence[int], chart_var: int, new_chart: Chart | None = None):
    """Pull back through the chart substitution and divide by ``exc^d`` exactly."""
    center = tuple(center)
    w = as_sum(m)
    if w.is_zero():
        return w
    ref = w.summands[0]
    if new_chart is None:
        new_chart, _ = ref.chart.blow_up(center, chart_var, f"{ref.chart.id}.{ref.chart.variables[chart_var]}")
    chain = tuple(strict_transform(c, center, chart_var).monic() for c in ref.chain)
    out = []
    for s in w.summands:
        gens = [controlled_poly(g, center, chart_var, s.d) for g in s.generators]
        out.append(MarkedIdeal(new_chart, tuple(gens), s.d, chain, s.blocks))
    return out[0] if isinstance(m, MarkedIdeal) else WeightedSum(tuple(out))
