import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from renorm import causal_order as co
from renorm import fields_hopf as fh

FLAT = co.CausalStructure(1, 0.0)

coord = st.floats(-3, 3, allow_nan=False)
point = st.tuples(coord, coord)


def configs(n):
    return st.lists(point, min_size=n, max_size=n)


def off_diagonal(cfg):
    pts = np.asarray(cfg)
    return all(np.linalg.norm(pts[i] - pts[j]) > 1e-3 for i in range(len(pts)) for j in range(i))


def euclid(x, y):
    d = np.asarray(x, float) - np.asarray(y, float)
    return 1.0 / (4 * math.pi**2 * float(d @ d))


@given(point)
def test_leq_is_reflexive(x):
    assert co.leq(FLAT, x, x)


@given(point, point, point)
def test_leq_is_transitive(x, y, z):
    if co.leq(FLAT, x, y) and co.leq(FLAT, y, z):
        assert co.leq(FLAT, x, z)


@given(point, point)
def test_leq_is_antisymmetric(x, y):
    assume(x != y)
    assert not (co.leq(FLAT, x, y) and co.leq(FLAT, y, x))


def test_light_cone_membership():
    assert co.leq(FLAT, (0, 0), (1, 1))
    assert co.leq(FLAT, (0, 0), (1, 0.5))
    assert not co.leq(FLAT, (0, 0), (1, 2))
    assert co.leq(co.CausalStructure(1, 0.5), (0, 0), (1, 1.1))
    assert not co.leq(co.CausalStructure(1, 0.5), (0, 0), (1, 1.2))


@pytest.mark.parametrize("n", [2, 3, 4, 5])
@settings(max_examples=100, deadline=None)
@given(data=st.data())
def test_every_configuration_has_an_admissible_region(n, data):
    cfg = data.draw(configs(n))
    assume(off_diagonal(cfg))
    regions = co.admissible_sets(FLAT, cfg)
    assert regions
    assert all(co.in_region(FLAT, cfg, I) for I in regions)


def test_proper_subsets_count():
    for n in range(2, 6):
        assert len(co.proper_subsets(n)) == 2**n - 2


def test_maximal_vertex_region_on_a_chain():
    cfg = [(0, 0), (1, 0), (3, 0.2)]
    assert co.maximal_vertex_region(FLAT, cfg) == frozenset({3})
    assert co.admissible_sets(FLAT, cfg) == [frozenset({3}), frozenset({2, 3})]


def test_hasse_groups_coincident_points():
    diagram = co.hasse(FLAT, [(0, 0), (1, 0), (2, 0), (1, 0)])
    assert diagram.decorations == ((1,), (2, 4), (3,))
    assert diagram.edges == ((0, 1), (1, 2))
    assert diagram.maximal_vertices() == [2]
    dot = diagram.to_dot()
    assert dot.startswith("digraph hasse {") and 'label="2,4"' in dot


def test_hasse_drops_implied_edges():
    # 1 <= 2 <= 3 implies 1 <= 3, which must not be drawn
    diagram = co.hasse(FLAT, [(0, 0), (1, 0.1), (2, 0.0)])
    assert (0, 2) not in diagram.edges


@pytest.mark.parametrize("n", [2, 3, 4])
@settings(max_examples=50, deadline=None)
@given(data=st.data())
def test_partition_of_unity(n, data):
    cfg = data.draw(configs(n))
    assume(off_diagonal(cfg))
    fam = co.PartitionFamily(FLAT.widened(0.5), n)
    values = fam.values(cfg)
    assert sum(values.values()) == pytest.approx(1.0, abs=1e-12)
    assert all(v >= 0 for v in values.values())
    for I, v in values.items():
        if v > 1e-12:
            assert co.in_region(fam.structure, cfg, I)


def test_partition_rejects_coincident_points():
    fam = co.PartitionFamily(FLAT.widened(0.5), 2)
    with pytest.raises(ValueError):
        fam.values([(0, 0), (0, 0)])


@pytest.mark.parametrize("n", [2, 3])
def test_recursion_matches_wick_amplitude(n):
    rng = np.random.default_rng(n)
    rec = co.CausalRecursion(co.CausalStructure(1, 0.5), euclid)
    cfg = rng.normal(size=(n, 2))
    mono = fh.FieldMonomial.from_dict({i: 2 for i in range(1, n + 1)})
    value = rec.t(mono, {i + 1: cfg[i] for i in range(n)})
    reference = fh.eval_amplitude(fh.vev([2] * n), cfg, euclid)
    assert value == pytest.approx(reference, rel=1e-10)
    for region_value in rec.region_values(mono, cfg).values():
        assert region_value == pytest.approx(value, rel=1e-10)
