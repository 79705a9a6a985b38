"""The desingularization invariant at the origin of a chart.

``compute_inv`` walks down a chain of maximal contact hypersurfaces.  At each
level it splits off the monomial part in the new exceptional divisors, records
the residual multiplicity ``nu`` and the count ``s`` of old divisors, passes to
the companion ideal and then to its coefficient ideal plus boundary.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from fractions import Fraction
from functools import total_ordering
from itertools import combinations_with_replacement
from typing import Sequence

from .marked import (
    Chart,
    MarkedIdeal,
    WeightedSum,
    add_boundary,
    as_sum,
    coefficient_ideal,
    companion,
    cosupp_contains_origin,
    monomial_part,
    residual_multiplicity,
    with_blocks,
)
from .polyring import INF, ParseError, Poly

HALF = "HALF"
ZERO = "ZERO"


class InvariantError(ValueError):
    """The invariant cannot be computed for this input."""


class NormalizationError(InvariantError):
    """No maximal contact element can be turned into a coordinate by a polynomial change."""


# working degrees for a power-series maximal contact; the value must agree at both
SERIES_PRECISIONS = (8, 11)


@total_ordering
@dataclass(frozen=True)
class InvariantValue:
    """A value ``(nu_1, s_1, ..., nu_q, s_q, tail)`` or one of its truncations.

    ``entries`` holds the numbers in order; ``tail`` is ``INF``, ``ZERO``,
    ``HALF`` (entries end with a ``nu``) or ``None`` (entries end with an ``s``).
    """

    entries: tuple
    tail: object = None

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(Fraction(e) for e in self.entries))
        odd = len(self.entries) % 2 == 1
        if self.tail is HALF and not odd:
            raise InvariantError("a half truncation ends with a residual multiplicity")
        if self.tail is not HALF and odd:
            raise InvariantError("entries must come in (nu, s) pairs")

    def sequence(self) -> tuple:
        """The lexicographic key: entries followed by the tail sentinel if any."""
        if self.tail is INF:
            return self.entries + (INF,)
        if self.tail is ZERO:
            return self.entries + (Fraction(0),)
        return self.entries

    @property
    def pairs(self) -> list:
        e = self.entries
        return [(e[i], int(e[i + 1])) for i in range(0, len(e) - 1, 2)]

    def __eq__(self, other):
        if not isinstance(other, InvariantValue):
            return NotImplemented
        return self.sequence() == other.sequence() and (self.tail is HALF) == (other.tail is HALF)

    def __hash__(self):
        return hash(self.sequence())

    def __lt__(self, other):
        if not isinstance(other, InvariantValue):
            return NotImplemented
        return compare(self, other) < 0

    def __str__(self):
        parts = [_fmt(e) for e in self.entries]
        if self.tail is INF:
            parts.append("inf")
        elif self.tail is ZERO:
            parts.append("0")
        return "(" + ",".join(parts) + ")"

    __repr__ = __str__


def _fmt(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def compare(a: InvariantValue, b: InvariantValue) -> int:
    """Lexicographic comparison; returns -1, 0 or 1."""
    sa, sb = a.sequence(), b.sequence()
    for x, y in zip(sa, sb):
        if x == y:
            continue
        return -1 if x < y else 1
    if len(sa) == len(sb):
        return 0
    return -1 if len(sa) < len(sb) else 1


_VALUE = re.compile(r"^\(\s*([^()]*)\s*\)$")


def parse_value(text: str) -> InvariantValue:
    """Parse ``(2,0,3/2,0,1,0,inf)`` and its truncations."""
    m = _VALUE.match(text.strip())
    if not m:
        raise ParseError(f"bad invariant value {text!r}")
    items = [t.strip() for t in m.group(1).split(",") if t.strip()]
    if not items:
        raise ParseError("empty invariant value")
    if items[-1].lower() in ("inf", "infinity", "∞"):
        return InvariantValue(tuple(_q(t) for t in items[:-1]), INF)
    nums = tuple(_q(t) for t in items)
    if len(nums) % 2 == 1:
        if nums[-1] == 0:
            return InvariantValue(nums[:-1], ZERO)
        return InvariantValue(nums, HALF)
    return InvariantValue(nums, None)


def _q(t: str) -> Fraction:
    try:
        return Fraction(t)
    except ValueError as exc:
        raise ParseError(f"bad number {t!r} in invariant value") from exc


def iota(k: int) -> InvariantValue:
    """The value of ``k`` normal crossing hyperplanes in year zero."""
    return InvariantValue((k, 0) + (1, 0) * (k - 1), INF)


INV_PP = InvariantValue((2, 0, Fraction(3, 2), 0, 1, 0), INF)
INV_DPP = InvariantValue((2, 0, Fraction(3, 2), 0, 2, 0), INF)


@dataclass(frozen=True)
class BirthTable:
    """Years of birth of truncated values along the history of a point.

    ``past`` lists ``(year, value)`` for the images of the point in earlier
    years, oldest first.  ``fallback`` gives birth years per level when no past
    is recorded.  ``restart = (p, year)`` makes ``year`` count as year zero for
    every level above ``p``.
    """

    year: int = 0
    past: tuple = ()
    fallback: tuple = ()
    restart: tuple | None = None

    def birth_of(self, prefix: Sequence, level: int) -> int:
        prefix = tuple(Fraction(x) for x in prefix)
        floor = None
        if self.restart is not None and level > self.restart[0]:
            floor = self.restart[1]
        if not self.past and self.fallback:
            year = self.fallback[level - 1] if level <= len(self.fallback) else self.year
            return max(min(year, self.year), floor or 0)
        birth = self.year
        for year, value in reversed(self.past):
            if floor is not None and year < floor:
                break
            seq = value.sequence()
            if len(seq) >= len(prefix) and seq[:len(prefix)] == prefix:
                birth = year
            else:
                break
        else:
            # the value goes back to the first recorded year; the fallback may date it earlier
            if level <= len(self.fallback):
                birth = min(birth, max(self.fallback[level - 1], floor or 0))
        return birth

    def extended(self, value: InvariantValue, year: int) -> "BirthTable":
        """Table for a point of the next year whose parent had ``value``."""
        return replace(self, year=year, past=self.past + ((self.year, value),))

    def restarted(self, level: int, year: int) -> "BirthTable":
        return replace(self, year=year, restart=(level, year))


@dataclass(frozen=True)
class Row:
    """One line of the per-level table: ``I^i``, ``J^i``, chain and old block."""

    codim: int
    marked: WeightedSum
    companion: WeightedSum | None
    chain: tuple
    block: tuple


@dataclass(frozen=True)
class InvRecord:
    """Value plus the data produced while computing it.

    ``chain`` holds the maximal contact coordinates (variable indices) in the
    normalized coordinates; ``change`` maps chart coordinates to them
    (``f_normalized = f.substitute(change)``).  An ``approximate`` record used
    a power-series maximal contact: its value is reliable but ``change`` and
    ``hypersurface`` are truncated and ``inverse`` is empty.
    """

    value: InvariantValue
    chain: tuple
    blocks: tuple
    residual_exponents: tuple
    markings: tuple
    rows: tuple
    chart: Chart
    change: tuple
    inverse: tuple
    hypersurface: Poly
    approximate: bool = False

    def truncate(self, level) -> InvariantValue:
        return truncate(self.value, level)

    def identity_change(self) -> bool:
        return all(im == Poly.var(len(self.change), i) for i, im in enumerate(self.change))

    def chain_original(self) -> tuple:
        """Chain hypersurfaces expressed in the original chart coordinates."""
        return tuple(Poly.var(self.chart.arity, i).substitute(self.inverse) for i in self.chain)


def truncate(value: InvariantValue, level) -> InvariantValue:
    """``inv_k`` for integer ``k`` and ``inv_{k+1/2}`` for half-integers.

    Levels past the end of a complete value return the value itself.
    """
    level = Fraction(level)
    n = level * 2
    if n.denominator != 1 or n < 1:
        raise InvariantError(f"bad truncation level {level}")
    n = int(n)
    if n > len(value.entries):
        if value.tail in (INF, ZERO):
            return value
        raise InvariantError(f"level {level} exceeds the computed length of {value}")
    return InvariantValue(value.entries[:n], HALF if n % 2 else None)


def identity_images(arity: int) -> tuple:
    return tuple(Poly.var(arity, i) for i in range(arity))


def compose(first: Sequence[Poly], then: Sequence[Poly], upto: int | None = None) -> tuple:
    """Images of ``f -> f.substitute(first).substitute(then)`` as one substitution."""
    return tuple(im.substitute(then, upto) for im in first)


def _solve_for(cand: Poly, i: int):
    """Write ``cand = A*(x_i + g)`` with ``A`` a unit and ``g`` free of ``x_i``.

    Returns the normalized element ``x_i + g`` or None when ``cand`` is not of
    that form with polynomial ``g``.
    """
    if cand.degree_in(i) != 1:
        return None
    xi = Poly.var(cand.arity, i)
    lin_terms, rest = {}, {}
    for e, c in cand.items():
        if e[i]:
            lin_terms[tuple(k - (j == i) for j, k in enumerate(e))] = c
        else:
            rest[e] = c
    a = Poly(cand.arity, lin_terms)
    if a.constant_term() == 0:
        return None
    g = Poly(cand.arity, rest).divmod_exact(a)
    if g is None:
        return None
    return xi + g


def _derivatives(g: Poly, free: Sequence[int], order: int):
    """All ``order``-th partial derivatives as ``(multi-index, poly)``, memoized."""
    cache = {(): g}

    def get(idx):
        if idx not in cache:
            cache[idx] = get(idx[:-1]).partial(idx[-1])
        return cache[idx]

    for idx in combinations_with_replacement(sorted(free), order):
        yield idx, get(idx)


def maximal_contact_candidates(j) -> list:
    """Order-one elements of the top derivative ideals of maximal-order summands.

    Each entry is ``(key, pivot, z)`` with ``z = x_pivot + g`` normalized; the
    list is sorted by the selection rule, best first.
    """
    w = as_sum(j)
    out = []
    for si, s in enumerate(w.summands):
        if s.ord() != s.d:
            continue
        free = [i for i in range(s.chart.arity) if i not in s.eliminated()]
        for gi, g in enumerate(s.generators):
            for idx, der in _derivatives(g, free, s.d - 1):
                if der.ord() != 1:
                    continue
                for pivot in sorted(free, reverse=True):
                    z = _solve_for(der, pivot)
                    if z is None:
                        continue
                    pure = all(k == pivot for k in idx)
                    key = (-pivot, si, not pure, gi, idx, der.sort_key())
                    out.append((key, pivot, z))
                    break
    out.sort(key=lambda t: t[0])
    return out


def series_contact(j, upto: int):
    """Maximal contact approximated by a graph ``x_p - phi`` with ``deg phi <= upto``.

    Takes the best order-one top derivative of a maximal-order summand and
    solves it for the highest free variable with a nonzero linear coefficient
    as a power series, truncated at degree ``upto``.
    """
    w = as_sum(j)
    best = None
    for si, s in enumerate(w.summands):
        if s.ord() != s.d:
            continue
        free = [i for i in range(s.chart.arity) if i not in s.eliminated()]
        for gi, g in enumerate(s.generators):
            for idx, der in _derivatives(g, free, s.d - 1):
                if der.ord() != 1:
                    continue
                lin = der.homogeneous_part(1)
                pivot = next((p for p in sorted(free, reverse=True)
                              if lin.coefficient(_unit_exps(der.arity, p))), None)
                if pivot is None:
                    continue
                key = (-pivot, si, gi, idx, der.sort_key())
                if best is None or key < best[0]:
                    best = (key, pivot, der)
    if best is None:
        raise NormalizationError("no order-one derivative in the top derivative ideal")
    _, p, der = best
    arity = der.arity
    xp = Poly.var(arity, p)
    c = der.coefficient(_unit_exps(arity, p))
    rest = (der - xp.scale(c)).scale(-1 / c)
    # x_p = rest(x_p, x'), iterated; each pass fixes one more degree
    phi = Poly.zero(arity)
    images = list(identity_images(arity))
    for _ in range(upto):
        images[p] = phi
        nxt = rest.substitute(images, upto)
        if nxt == phi:
            break
        phi = nxt
    return p, xp - phi


def _unit_exps(arity: int, i: int) -> tuple:
    return tuple(int(k == i) for k in range(arity))


def find_maximal_contact(j):
    """Choose a maximal contact hypersurface for a marked ideal of maximal order.

    Returns ``(pivot, z)`` where ``z`` is an order-one polynomial from the
    ``(d-1)``-st derivative ideal that can be made the coordinate ``x_pivot``.
    """
    cands = maximal_contact_candidates(j)
    if cands and cands[0][2].total_degree() == 1:
        _, pivot, z = cands[0]
        return pivot, z
    # a linear element keeps later levels free of nonlinear coordinate changes
    lin = linear_contact(j)
    if lin is not None:
        return lin
    if not cands:
        raise NormalizationError("no order-one derivative solvable for a coordinate")
    _, pivot, z = cands[0]
    return pivot, z


def _nullspace(rows: list, ncols: int) -> list:
    """Basis of ``{v : row . v = 0 for every row}`` over the rationals."""
    mat = [list(r) for r in rows]
    pivots, r = [], 0
    for c in range(ncols):
        k = next((i for i in range(r, len(mat)) if mat[i][c] != 0), None)
        if k is None:
            continue
        mat[r], mat[k] = mat[k], mat[r]
        inv = 1 / mat[r][c]
        mat[r] = [x * inv for x in mat[r]]
        for i in range(len(mat)):
            if i != r and mat[i][c] != 0:
                f = mat[i][c]
                mat[i] = [a - f * b for a, b in zip(mat[i], mat[r])]
        pivots.append(c)
        r += 1
    basis = []
    for c in (c for c in range(ncols) if c not in pivots):
        v = [Fraction(0)] * ncols
        v[c] = Fraction(1)
        for i, pc in enumerate(pivots):
            v[pc] = -mat[i][c]
        basis.append(v)
    return basis


def linear_contact(j):
    """A linear form in the span of the top derivatives, as ``(pivot, z)``.

    Used when no single derivative is a graph over a coordinate, which happens
    after a general linear change of coordinates.  Returns None if the span
    holds no nonzero linear form.
    """
    w = as_sum(j)
    ders = []
    for s in w.summands:
        if s.ord() != s.d:
            continue
        free = [i for i in range(s.chart.arity) if i not in s.eliminated()]
        for g in s.generators:
            ders.extend(der for _, der in _derivatives(g, free, s.d - 1) if not der.is_zero())
    if not ders:
        return None
    arity = ders[0].arity
    monos = sorted({e for d in ders for e, _ in d.items()})
    nonlinear = [e for e in monos if sum(e) != 1]
    rows = [[d.coefficient(e) for d in ders] for e in nonlinear]
    for v in _nullspace(rows, len(ders)):
        z = Poly.zero(arity)
        for c, d in zip(v, ders):
            if c:
                z = z + d.scale(c)
        if z.is_zero():
            continue
        for pivot in reversed(range(arity)):
            zn = _solve_for(z, pivot)
            if zn is not None:
                return pivot, zn
    return None


def normalize_to_coordinate(m, z: Poly, pivot: int | None = None, shear: bool = True,
                            upto: int | None = None):
    """Coordinate change making ``z = 0`` the hyperplane ``x_pivot = 0``.

    Applies ``x_p -> x_p - g`` where ``z = unit*(x_p + g)``, then (optionally) the
    shift removing the ``x_p^{d-1}`` coefficient of the first generator of a
    maximal-order summand when it is a polynomial of degree exactly ``d`` in
    ``x_p`` with constant leading coefficient.  With ``upto`` everything is
    computed modulo terms of total degree above ``upto``.  Returns ``(m', images)``.
    """
    w = as_sum(m)
    arity = w.chart.arity
    order = [pivot] if pivot is not None else list(reversed(range(arity)))
    for p in order:
        zn = _solve_for(z, p)
        if zn is not None:
            pivot = p
            break
    else:
        raise NormalizationError("maximal contact element is not a graph over a coordinate")
    xp = Poly.var(arity, pivot)
    images = list(identity_images(arity))
    images[pivot] = xp + xp - zn
    images = tuple(images)
    w2 = apply_change(w, images, upto)
    if shear:
        top = next((s for s in w2.summands if s.ord() == s.d), None)
        if top is not None:
            sh = _tschirnhaus(top.generators[0], pivot, top.d)
            if sh is not None:
                w2 = apply_change(w2, sh, upto)
                images = compose(images, sh, upto)
    out = w2.summands[0] if isinstance(m, MarkedIdeal) and len(w2.summands) == 1 else w2
    return out, images


def _coefficients_in(g: Poly, p: int) -> dict:
    out: dict = {}
    for e, c in g.items():
        k = e[p]
        rest = list(e)
        rest[p] = 0
        out.setdefault(k, {})[tuple(rest)] = c
    return {k: Poly(g.arity, t) for k, t in out.items()}


def _tschirnhaus(g: Poly, p: int, d: int):
    coeffs = _coefficients_in(g, p)
    if max(coeffs) != d or d < 2:
        return None
    lead = coeffs[d]
    if not lead.is_constant():
        return None
    sub = coeffs.get(d - 1)
    if sub is None or sub.is_zero():
        return None
    images = list(identity_images(g.arity))
    images[p] = Poly.var(g.arity, p) - sub.scale(1 / (d * lead.constant_term()))
    return tuple(images)


def apply_change(w, images, upto: int | None = None) -> WeightedSum:
    """Rewrite every summand (and the chart's divisors) in new coordinates.

    With ``upto`` generators are kept modulo terms of degree above ``upto``;
    summands whose generators all vanish there are dropped.
    """
    w = as_sum(w)
    if w.is_zero():
        return w
    chart = w.chart.with_coordinates(images)
    out = []
    for s in w.summands:
        gens = tuple(g for g in (g.substitute(images, upto) for g in s.generators) if g)
        if gens:
            out.append(MarkedIdeal(chart, gens, s.d, s.chain, s.blocks))
    return WeightedSum(tuple(out))


def truncate_sum(w, upto: int | None) -> WeightedSum:
    """Drop terms of degree above ``upto`` and the summands left empty."""
    w = as_sum(w)
    if upto is None or w.is_zero():
        return w
    out = []
    for s in w.summands:
        gens = tuple(g for g in (g.truncate(upto) for g in s.generators) if g)
        if gens:
            out.append(replace(s, generators=gens))
    return WeightedSum(tuple(out))


def inverse_change(images: Sequence[Poly]) -> tuple:
    """Inverse of a triangular change built from steps ``x_p -> x_p - h``."""
    arity = len(images)
    # each step only moves its pivot; invert by fixed-point substitution
    inv = list(identity_images(arity))
    for _ in range(arity + 1):
        nxt = []
        for i in range(arity):
            delta = images[i] - Poly.var(arity, i)
            nxt.append(Poly.var(arity, i) - delta.substitute(inv))
        if nxt == inv:
            break
        inv = nxt
    if any(images[i].substitute(inv) != Poly.var(arity, i) for i in range(arity)):
        raise NormalizationError("coordinate change is not invertible by substitution")
    return tuple(inv)


def _through_origin_labels(chart: Chart) -> list:
    return [h.label for h in chart.divisors if h.through_origin()]


def compute_inv(h: MarkedIdeal, birth: BirthTable | None = None,
                contact_choice: int | None = None) -> InvRecord:
    """Invariant at the origin of ``h``'s chart for the hypersurface ``(f, 1)``.

    ``h`` is the hypersurface marked ideal (usually the controlled transform,
    marking one); exceptional monomials are split off automatically.  Without
    a birth table, ``inv_1`` dates from year zero and deeper levels from the
    chart year.  ``contact_choice`` forces the given entry of
    ``maximal_contact_candidates`` as the first maximal contact.
    """
    if birth is None:
        birth = BirthTable(year=h.chart.year, fallback=(0,))
    if h.chain or h.blocks:
        raise InvariantError("compute_inv expects an ambient marked ideal")
    if h.is_zero():
        raise InvariantError("the zero ideal has no invariant")
    if not cosupp_contains_origin(h):
        raise InvariantError("origin is not in the cosupport")
    try:
        return _compute(h, birth, None, contact_choice)
    except _NeedsSeries:
        pass
    records = [_compute(h, birth, upto, contact_choice) for upto in SERIES_PRECISIONS]
    if len({r.value for r in records}) != 1:
        raise NormalizationError("power-series maximal contact did not stabilize")
    return records[-1]


class _NeedsSeries(Exception):
    pass


def _compute(h: MarkedIdeal, birth: BirthTable, upto: int | None, choice: int | None) -> InvRecord:
    arity = h.chart.arity
    images = identity_images(arity)
    cur: WeightedSum = as_sum(h)
    entries: list = []
    blocks: list = []
    chain: list = []
    rows: list = []
    mus: list = []
    marks: list = []
    while True:
        level = len(blocks)
        if cur.is_zero():
            rows.append(Row(level, cur, None, tuple(chain), ()))
            tail = INF
            break
        chart = cur.chart
        used = set().union(*blocks) if blocks else set()
        active = [lab for lab in _through_origin_labels(chart) if lab not in used]
        mu = monomial_part(cur, active)
        mus.append({k: v for k, v in mu.items() if v})
        marks.append(cur.summands[0].d)
        nu = residual_multiplicity(cur, active)
        if nu == 0:
            rows.append(Row(level, cur, None, tuple(chain), ()))
            tail = ZERO
            break
        entries.append(nu)
        year = birth.birth_of(entries, level + 1)
        block = tuple(sorted(lab for lab in active if chart.divisor(lab).birth_year <= year))
        entries.append(len(block))
        blocks.append(frozenset(block))
        jj = companion(cur, active)
        try:
            if choice is not None and level == 0:
                cands = maximal_contact_candidates(jj)
                if not 0 <= choice < len(cands):
                    raise InvariantError(f"no maximal contact candidate number {choice}")
                _, pivot, z = cands[choice]
            else:
                pivot, z = find_maximal_contact(jj)
        except NormalizationError:
            if upto is None:
                raise _NeedsSeries from None
            pivot, z = series_contact(jj, upto)
        jj, change = normalize_to_coordinate(jj, z, pivot, upto=upto)
        jj = as_sum(jj)
        images = compose(images, change, upto)
        zpoly = Poly.var(arity, pivot)
        chain.append(pivot)
        marked_now = apply_change(cur, change, upto)
        rows.append(Row(level, marked_now, jj, tuple(chain), block))
        nxt = coefficient_ideal(jj, pivot)
        ctx = replace(jj.summands[0], generators=(), chain=jj.summands[0].chain + (zpoly,))
        nxt = add_boundary(nxt, block, like=ctx)
        cur = truncate_sum(with_blocks(nxt, tuple(tuple(sorted(b)) for b in blocks)), upto)
    identity = all(im == Poly.var(arity, i) for i, im in enumerate(images))
    approximate = upto is not None
    return InvRecord(
        value=InvariantValue(tuple(entries), tail),
        chain=tuple(chain),
        blocks=tuple(tuple(sorted(b)) for b in blocks),
        residual_exponents=tuple(mus),
        markings=tuple(marks),
        rows=tuple(rows),
        chart=h.chart if identity else h.chart.with_coordinates(images),
        change=images,
        inverse=() if approximate else inverse_change(images),
        hypersurface=h.generators[0].substitute(images, upto),
        approximate=approximate,
    )


def inv_of(f: Poly, chart: Chart, birth: BirthTable | None = None) -> InvRecord:
    """Convenience wrapper for a single hypersurface equation marked one."""
    return compute_inv(MarkedIdeal(chart, (f,), 1), birth)
