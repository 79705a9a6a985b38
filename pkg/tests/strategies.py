"""Shared hypothesis strategies for small exact polynomials."""

from fractions import Fraction

from hypothesis import strategies as st

from desing.polyring import Poly

small_q = st.builds(Fraction, st.integers(-5, 5), st.integers(1, 4))
nonzero_q = small_q.filter(lambda q: q != 0)


def exponents(arity, max_deg=3):
    return st.tuples(*[st.integers(0, max_deg) for _ in range(arity)])


def polys(arity=3, max_terms=4, max_deg=3):
    return st.dictionaries(exponents(arity, max_deg), small_q, max_size=max_terms).map(
        lambda d: Poly(arity, d))


def points(arity=3):
    return st.tuples(*[small_q for _ in range(arity)])
