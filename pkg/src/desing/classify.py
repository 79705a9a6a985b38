"""Recognition of the minimal-singularity catalog at a chart origin.

Every definite answer carries a witness that is re-expanded and compared with
the input exactly; anything that cannot be certified is reported as
inconclusive with a short machine-readable reason.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from itertools import permutations, product as cartesian
from math import isqrt
from typing import Sequence

from .invariant import INV_DPP, INV_PP, ZERO, InvRecord, InvariantError, inv_of, iota
from .marked import Chart
from .polyring import Poly, PolyError, parse_poly, product


class Kind(Enum):
    SMOOTH = "smooth"
    NC = "nc"
    PP = "pp"
    DPP = "dpp"
    PROD = "prod"
    CP3 = "cp3"
    EXC = "exc"
    MONOMIAL = "monomial"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class Classification:
    """Outcome of :func:`classify`.

    ``k`` is the branch count for normal crossings, ``split`` tells whether the
    branches are defined over the rationals (``None`` when unknown), and
    ``witness`` is the verified normal form as text.
    """

    kind: Kind
    k: int | None = None
    reason: str | None = None
    witness: str | None = None
    split: bool | None = None

    @property
    def name(self) -> str:
        if self.kind is Kind.NC:
            return f"nc{self.k}"
        return self.kind.value

    def __str__(self):
        out = self.name
        if self.reason:
            out += f" ({self.reason})"
        return out


SING_CODIM = "Sing codim > 2"
BRANCHES = "branch count unresolved"

# normal forms in the variables (w, x, y, z)
_CATALOG = {
    Kind.PROD: "x*(z^2+w*y^2)",
    Kind.CP3: "z^3+w*y^3+w^2*x^3-3*w*x*y*z",
    Kind.EXC: "z^2+y*(w*y+x^2)^2",
}


def _rational_sqrt(q: Fraction) -> Fraction | None:
    if q < 0:
        return None
    n, d = isqrt(q.numerator), isqrt(q.denominator)
    if n * n == q.numerator and d * d == q.denominator:
        return Fraction(n, d)
    return None


def poly_sqrt(p: Poly):
    """Return ``(kappa, g)`` with ``p = kappa * g**2`` and ``g`` monic-led, or None."""
    if p.is_zero():
        return None
    le, lc = p.leading()
    if any(e % 2 for e in le):
        return None
    q = p.scale(1 / lc)
    half = tuple(e // 2 for e in le)
    g = Poly.monomial(half)
    rest = q - g * g
    steps = 0
    while not rest.is_zero():
        steps += 1
        if steps > 10_000:
            return None
        e, c = rest.leading()
        te = tuple(a - b for a, b in zip(e, half))
        if any(t < 0 for t in te) or (sum(te), te) >= (sum(half), half):
            return None
        g = g + Poly.monomial(te, c / 2)
        rest = q - g * g
    return lc, g


def discriminant_test(B: Poly, C: Poly):
    """Check ``4B^3 + 27C^2 = 0`` and extract ``A`` with ``B = -3A^2, C = 2A^3``.

    Returns ``(identically_zero, A)``; ``A`` is None when the identity holds
    but no polynomial ``A`` exists.
    """
    disc = B * B * B * 4 + C * C * 27
    if not disc.is_zero():
        return False, None
    if B.is_zero():
        return True, Poly.zero(B.arity)
    A = (C * -3).divmod_exact(B * 2)
    if A is None or B != A * A * -3 or C != A * A * A * 2:
        return True, None
    return True, A


def _coefficients(g: Poly, p: int) -> dict:
    out: dict = {}
    for e, c in g.items():
        rest = list(e)
        k = rest[p]
        rest[p] = 0
        out.setdefault(k, {})[tuple(rest)] = c
    return {k: Poly(g.arity, t) for k, t in out.items()}


def _linear_independent(rows: list) -> bool:
    m = [list(map(Fraction, r)) for r in rows]
    rank = 0
    cols = len(m[0]) if m else 0
    for col in range(cols):
        piv = next((i for i in range(rank, len(m)) if m[i][col]), None)
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        for i in range(len(m)):
            if i != rank and m[i][col]:
                f = m[i][col] / m[rank][col]
                m[i] = [a - f * b for a, b in zip(m[i], m[rank])]
        rank += 1
    return rank == len(rows)


def check_factors(f: Poly, factors: Sequence[Poly]):
    """Verify a claimed normal crossings factorization; return the constant or None."""
    if not factors:
        return None
    prod = product(factors, f.arity)
    if prod.is_zero():
        return None
    ratio = f.first_coefficient() / prod.first_coefficient()
    if prod.scale(ratio) != f:
        return None
    if any(h.ord() != 1 for h in factors):
        return None
    if not _linear_independent([h.linear_part() for h in factors]):
        return None
    return ratio


def _rational_roots(coeffs: dict) -> list:
    """Distinct rational roots of a univariate polynomial given as ``{degree: coeff}``."""
    coeffs = {k: Fraction(c) for k, c in coeffs.items() if c}
    if not coeffs:
        return []
    roots = []
    low = min(coeffs)
    if low > 0:
        roots.append(Fraction(0))
        coeffs = {k - low: c for k, c in coeffs.items()}
    den = 1
    for c in coeffs.values():
        den = den * c.denominator // _gcd(den, c.denominator)
    ints = {k: int(c * den) for k, c in coeffs.items()}
    a0, an = abs(ints[0]), abs(ints[max(ints)])
    for p in _divisors(a0):
        for q in _divisors(an):
            for r in (Fraction(p, q), Fraction(-p, q)):
                if r not in roots and sum(c * r ** k for k, c in ints.items()) == 0:
                    roots.append(r)
    return roots


def _gcd(a, b):
    while b:
        a, b = b, a % b
    return a


def _divisors(n: int) -> list:
    n = abs(n)
    small = [d for d in range(1, isqrt(n) + 1) if n % d == 0]
    return sorted(set(small + [n // d for d in small]))


def _shear_for_pivot(f: Poly, p: int, k: int):
    """Linear shear ``x_j -> x_j + t_j x_p`` making the ``x_p^k`` coefficient nonzero."""
    n = f.arity
    others = [j for j in range(n) if j != p]
    top = tuple(k if i == p else 0 for i in range(n))
    for bound in range(0, 4):
        for ts in cartesian(range(bound + 1), repeat=len(others)):
            if max(ts, default=0) != bound and bound:
                continue
            images = [Poly.var(n, i) for i in range(n)]
            for j, t in zip(others, ts):
                images[j] = Poly.var(n, j) + Poly.var(n, p).scale(t)
            g = f.substitute(images)
            if g.coefficient(top):
                return g, images
    return None


def split_homogeneous(f: Poly, k: int):
    """Factor a degree-``k`` form into rational linear factors, or return None."""
    if f.homogeneous_part(k) != f:
        return None
    n = f.arity
    p = n - 1
    sheared = _shear_for_pivot(f, p, k)
    if sheared is None:
        return None
    g, images = sheared
    others = [j for j in range(n) if j != p]
    root_sets = []
    for j in others:
        uni: dict = {}
        for e, c in g.items():
            if all(e[i] == 0 for i in others if i != j):
                uni[e[p]] = uni.get(e[p], 0) + c
        root_sets.append(_rational_roots(uni) or [Fraction(0)])
    factors = []
    rest = g
    xp = Poly.var(n, p)
    for ts in cartesian(*root_sets):
        lin = xp - sum((Poly.var(n, j).scale(t) for j, t in zip(others, ts)), Poly.zero(n))
        q = rest.divmod_exact(lin)
        while q is not None:
            factors.append(lin)
            rest = q
            q = rest.divmod_exact(lin)
    if len(factors) != k or not rest.is_constant():
        return None
    inverse = [Poly.var(n, i) for i in range(n)]
    for j in others:
        inverse[j] = Poly.var(n, j) - (images[j] - Poly.var(n, j))
    return [h.substitute(inverse) for h in factors]


def _fmt_factors(factors, names) -> str:
    return "*".join(f"({h.format(names)})" if len(h) > 1 else h.format(names) for h in factors)


def _normal_crossings(f: Poly, k: int, rec: InvRecord, names) -> Classification:
    if k == 2:
        return _nc2(f, rec, names)
    factors = split_homogeneous(f, k)
    if factors is not None and check_factors(f, factors) is not None:
        return Classification(Kind.NC, k=k, witness=_fmt_factors(factors, names), split=True)
    return Classification(Kind.INCONCLUSIVE, reason=BRANCHES)


def _nc2(f: Poly, rec: InvRecord, names) -> Classification:
    g = rec.hypersurface
    z = rec.chain[0]
    prepared = _square_form(g, z)
    if prepared is None:
        sheared = _shear_for_pivot(f, z, 2)
        if sheared is not None:
            h, _ = sheared
            rec2 = inv_of(h, Chart("nc2", 0, tuple(names)))
            prepared = _square_form(rec2.hypersurface, rec2.chain[0])
    if prepared is None:
        return Classification(Kind.INCONCLUSIVE, reason=BRANCHES)
    c, b = prepared
    root = poly_sqrt(b)
    if root is None or root[1].ord() != 1:
        return Classification(Kind.INCONCLUSIVE, reason=BRANCHES)
    kappa, m = root
    split = _rational_sqrt(-kappa / c) is not None
    zname = names[z]
    witness = f"{_fmt_q(c)}{zname}^2+{_fmt_q(kappa)}({m.format(names)})^2"
    return Classification(Kind.NC, k=2, witness=witness, split=split)


def _fmt_q(q: Fraction) -> str:
    if q == 1:
        return ""
    return f"({q})*"


def _square_form(g: Poly, z: int):
    """Write ``g = c*z^2 + b`` with constant ``c`` and ``b`` free of ``z``."""
    co = _coefficients(g, z)
    if set(co) - {0, 2} or 2 not in co or not co[2].is_constant():
        return None
    b = co.get(0, Poly.zero(g.arity))
    return co[2].constant_term(), b


def _prepare_cubic(b: Poly, y: int):
    """Bring ``b`` to ``c3*(y^3 + B*y + C)`` with ``B, C`` free of ``y``.

    Uses a linear shear when ``b`` is not yet cubic in ``y`` and then removes
    the ``y^2`` term by translating ``y``.  Returns ``(c3, B, C)`` or None.
    """
    if b.is_zero():
        return None
    co = _coefficients(b, y)
    if max(co) != 3 or not co[3].is_constant():
        sheared = _shear_for_pivot(b, y, 3)
        if sheared is None:
            return None
        b = sheared[0]
        co = _coefficients(b, y)
        if max(co) != 3 or not co[3].is_constant():
            return None
    c3 = co[3].constant_term()
    zero = Poly.zero(b.arity)
    shift = co.get(2, zero).scale(Fraction(1, 3) / c3)
    images = [Poly.var(b.arity, i) for i in range(b.arity)]
    images[y] = images[y] - shift
    co = _coefficients(b.substitute(images), y)
    if 2 in co and not co[2].is_zero():
        return None
    return c3, co.get(1, zero).scale(1 / c3), co.get(0, zero).scale(1 / c3)


def lemma_pp(f: Poly, rec: InvRecord, names) -> Classification:
    """Pinch point recognition through ``z^2 + y^3 + B(x)y + C(x)``."""
    g = rec.hypersurface
    if len(rec.chain) < 2:
        return Classification(Kind.INCONCLUSIVE, reason="preparation failed")
    z, y = rec.chain[0], rec.chain[1]
    sq = _square_form(g, z)
    if sq is None:
        return Classification(Kind.INCONCLUSIVE, reason="preparation failed")
    _, b = sq
    cubic = _prepare_cubic(b, y)
    if cubic is None:
        return Classification(Kind.INCONCLUSIVE, reason="preparation failed")
    c3, B, C = cubic
    vanishes, A = discriminant_test(B, C)
    if not vanishes:
        return Classification(Kind.INCONCLUSIVE, reason=SING_CODIM)
    if A is None:
        return Classification(Kind.INCONCLUSIVE, reason="A not rational")
    yv = Poly.var(g.arity, y)
    left, right = yv - A, yv + A.scale(2)
    if not (left * left * right - yv ** 3 - B * yv - C).is_zero():
        return Classification(Kind.INCONCLUSIVE, reason="witness mismatch")
    witness = f"{names[z]}^2+({left.format(names)})^2*({right.format(names)})"
    if A.ord() == 1 and rec.value == INV_PP:
        return Classification(Kind.PP, witness=witness)
    root = poly_sqrt(A) if not A.is_zero() else None
    if root is not None and root[1].ord() == 1 and rec.value == INV_DPP:
        return Classification(Kind.DPP, witness=witness)
    return Classification(Kind.INCONCLUSIVE, reason="A not of catalog form")


def match_catalog(f: Poly, names) -> Classification | None:
    """Syntactic match with prod, cp3 or exc up to variable permutation and scaling."""
    if f.arity != 4:
        return None
    base = ("w", "x", "y", "z")
    for kind, text in _CATALOG.items():
        nf = parse_poly(text, base)
        for perm in permutations(range(4)):
            images = [Poly.var(4, perm[i]) for i in range(4)]
            cand = nf.substitute(images)
            ratio = f.first_coefficient() / cand.first_coefficient()
            if cand.scale(ratio) == f:
                renamed = [names[perm[i]] for i in range(4)]
                return Classification(kind, witness=nf.format(renamed))
    return None


def classify(f: Poly, names: Sequence[str], record: InvRecord | None = None,
             hint: Sequence[Poly] | None = None) -> Classification:
    """Classify the hypersurface ``f = 0`` at the origin.

    The catalog invariant is the year-zero value of ``f`` alone; ``record``
    (the invariant with history) is only consulted for the monomial case.
    """
    names = tuple(names)
    if f.is_zero():
        return Classification(Kind.INCONCLUSIVE, reason="zero equation")
    o = f.ord()
    if o == 0:
        return Classification(Kind.SMOOTH, reason="origin not on hypersurface")
    if o == 1:
        return Classification(Kind.SMOOTH)
    if hint:
        if check_factors(f, hint) is not None:
            return Classification(Kind.NC, k=len(hint), witness=_fmt_factors(hint, names), split=True)
    found = match_catalog(f, names)
    if found is not None:
        return found
    try:
        rec = inv_of(f, Chart("classify", 0, names))
    except (InvariantError, PolyError) as exc:
        return Classification(Kind.INCONCLUSIVE, reason=f"invariant failed: {exc}")
    k = int(rec.value.entries[0])
    if rec.approximate:
        reason = f"needs a nonlinear coordinate change, inv {rec.value}"
        return Classification(Kind.INCONCLUSIVE, reason=reason)
    if rec.value == iota(k):
        return _normal_crossings(f, k, rec, names)
    if rec.value in (INV_PP, INV_DPP):
        return lemma_pp(f, rec, names)
    if record is not None and record.value.tail is ZERO:
        return Classification(Kind.MONOMIAL, reason=f"inv {record.value}")
    return Classification(Kind.INCONCLUSIVE, reason=f"not in catalog, inv {rec.value}")
