from collections import Counter
from fractions import Fraction
from math import comb, factorial

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from renorm import fields_hopf as fh


def brute_vev(p):
    """Sum over perfect matchings of labelled legs with no leg paired to its own vertex."""
    legs = [v + 1 for v, k in enumerate(p) for _ in range(k)]
    out = Counter()

    def rec(rest, props):
        if not rest:
            out[tuple(sorted(props))] += 1
            return
        first, tail = rest[0], rest[1:]
        for j, other in enumerate(tail):
            if other != first:
                rec(tail[:j] + tail[j + 1 :], props + [(min(first, other), max(first, other))])

    rec(legs, [])
    return {k: Fraction(v) for k, v in out.items()}


exponents = st.lists(st.integers(0, 4), min_size=1, max_size=4)


def test_phi_squared_vev():
    assert str(fh.vev([2, 2])) == "2*D(1,2)^2"


@pytest.mark.parametrize("k,l", [(k, l) for k in range(5) for l in range(5)])
def test_power_pairing_rule(k, l):
    a = fh.FieldMonomial.from_dict({1: k})
    b = fh.FieldMonomial.from_dict({2: l})
    expected = {((1, 2),) * k: Fraction(factorial(k))} if k == l else {}
    assert dict(fh.laplace(a, b).terms) == expected


def test_phi_cubed_star_coefficients():
    a = fh.FieldPoly.monomial({1: 3})
    b = fh.FieldPoly.monomial({2: 3})
    product = fh.star(a, b)
    coeffs = {m.degree: amp for m, amp in product.terms.items()}
    # j contractions: comb(3, j)^2 * j!
    for j in range(4):
        assert coeffs[6 - 2 * j].terms == {((1, 2),) * j: Fraction(comb(3, j) ** 2 * factorial(j))}


@settings(max_examples=60, deadline=None)
@given(exponents)
def test_three_vev_paths_match_brute_force(p):
    expected = brute_vev(p)
    for route in (fh.vev_by_star_chain, fh.vev_by_graphs, fh.vev_by_contraction):
        assert dict(route(p).terms) == expected


@settings(max_examples=60, deadline=None)
@given(exponents)
def test_contraction_count_is_total_mass(p):
    assert fh.contraction_count(p) == sum(brute_vev(p).values())


def test_odd_total_degree_has_zero_vev():
    assert fh.vev([1, 2]).is_zero()


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 3), min_size=1, max_size=3), st.lists(st.integers(0, 3), min_size=1, max_size=3), st.lists(st.integers(0, 3), min_size=1, max_size=3))
def test_star_is_associative(p, q, r):
    a = fh.FieldPoly.monomial({i + 1: e for i, e in enumerate(p) if e})
    b = fh.FieldPoly.monomial({i + 11: e for i, e in enumerate(q) if e})
    c = fh.FieldPoly.monomial({i + 21: e for i, e in enumerate(r) if e})
    assert fh.star(fh.star(a, b), c) == fh.star(a, fh.star(b, c))


@settings(max_examples=60, deadline=None)
@given(st.dictionaries(st.integers(1, 4), st.integers(1, 3), min_size=1, max_size=3))
def test_coproduct_counit(exps):
    m = fh.FieldMonomial.from_dict(exps)
    left = Counter()
    right = Counter()
    for a, b, c in fh.coproduct(m).terms:
        if a.is_unit():
            right[b] += c
        if b.is_unit():
            left[a] += c
    assert left == Counter({m: 1}) and right == Counter({m: 1})


def test_coproduct_mass_is_power_of_two():
    m = fh.FieldMonomial.from_dict({1: 2, 2: 3})
    assert fh.coproduct(m).total_mass() == 2**5


def test_star_rejects_shared_labels():
    a = fh.FieldPoly.monomial({1: 1})
    with pytest.raises(fh.LabelOverlapError):
        fh.star(a, a)


def test_amplitude_evaluation():
    amp = fh.vev([2, 2])
    cfg = {1: (0.0, 0.0), 2: (1.0, 0.0)}
    assert fh.eval_amplitude(amp, cfg, lambda x, y: 3.0) == pytest.approx(18.0)


def test_coincident_points_raise():
    with pytest.raises(fh.SingularConfigurationError):
        fh.eval_amplitude(fh.vev([1, 1]), {1: (0.0, 0.0), 2: (0.0, 0.0)}, lambda x, y: 1.0)


def test_json_round_trip():
    poly = fh.star(fh.FieldPoly.monomial({1: 2}), fh.FieldPoly.monomial({2: 2}))
    assert fh.FieldPoly.loads(poly.dumps()) == poly
