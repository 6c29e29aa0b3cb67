import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from renorm import microlocal as ml
from renorm.checks import conoid_chart_cone, counterexample_cone
from renorm.wightman import MinkowskiForm, wf_qs_cone

CONES = {
    "sector": lambda: ml.sector_cone(0.3, 0.4, 1.5),
    "conoid": conoid_chart_cone,
    "counterexample": counterexample_cone,
    "circle conormal": lambda: ml.conormal(["x0**2+x1**2-0.25"], 2),
    "wf": lambda: wf_qs_cone(3),
    "sector sum": lambda: ml.cone_sum(ml.sector_cone(0.0, 0.3, 1.0), ml.sector_cone(1.0, 0.3, 1.0)),
}


@pytest.mark.parametrize("name", sorted(CONES))
@pytest.mark.parametrize("lam", [2.0, 10.0])
def test_cones_are_conic(name, lam):
    cone = CONES[name]()
    pts, covs = cone.sample(200, np.random.default_rng(1))
    assert all(cone.contains(x, xi) for x, xi in zip(pts, covs))
    assert all(cone.contains(x, lam * xi) for x, xi in zip(pts, covs))


def test_zero_covector_is_never_in_a_cone():
    assert not ml.sector_cone(0.0, 0.5, 1.0).contains([0.0, 0.1, 0.0], [0.0, 0.0, 0.0])


@settings(max_examples=200)
@given(
    st.floats(-1, 1),
    st.floats(1e-4, 1.0),
    # |k| below 1e-12 |xi| is snapped to zero as rounding noise, which is not scale invariant
    st.one_of(st.just(0.0), st.floats(1e-6, 2), st.floats(-2, -1e-6)),
    st.floats(0.1, 5.0),
    st.floats(1e-3, 1e3),
)
def test_landing_ratio_is_invariant_under_h_xi_rescaling(x, h, k, xi, lam):
    before = ml.landing_ratio(np.array([x, h]), np.array([k, xi]), 1)
    after = ml.landing_ratio(np.array([x, lam * h]), np.array([k, xi / lam]), 1)
    assert after == pytest.approx(before, rel=1e-12)


def test_counterexample_ratio_grows_like_inverse_root():
    # the covector (1, h^-1/2) over (0, h) has ratio h^-1/2
    for h in (1e-2, 1e-4, 1e-6):
        ratio = ml.landing_ratio(np.array([0.0, h]), np.array([1.0, h**-0.5]), 1)
        assert float(np.ravel(ratio)[0]) == pytest.approx(h**-0.5, rel=1e-12)


def test_soft_landing_verdicts():
    bad = ml.soft_landing_check(counterexample_cone(), 1, samples=3000, seed=2)
    assert not bad.holds and bad.witness is not None
    good = ml.soft_landing_check(ml.sector_cone(1.0, 0.3, 2.0), 1, samples=3000, seed=2)
    assert good.holds and good.delta <= 2.0 + 1e-9


def test_report_serializes():
    report = ml.soft_landing_check(ml.sector_cone(1.0, 0.3, 2.0), 1, samples=500, seed=0)
    data = report.to_dict()
    assert set(data) >= {"holds", "delta", "witness", "shell_max", "samples"}


def test_opposite_sectors_are_not_disjoint():
    cone = ml.sector_cone(0.5, 0.3, 1.0)
    flipped = ml.sector_cone(0.5 + math.pi, 0.3, 1.0)
    assert not ml.hormander_disjoint(cone, flipped, samples=200, seed=0)
    assert ml.hormander_disjoint(cone, cone, samples=200, seed=0)


def test_sum_of_disjoint_sectors_contains_fiber_sums():
    a = ml.sector_cone(0.0, 0.3, 1.0)
    b = ml.sector_cone(1.0, 0.3, 1.0)
    total = ml.cone_sum(a, b)
    rng = np.random.default_rng(3)
    pts, _ = a.sample(30, rng)
    for x in pts:
        u = a.fiber_sample(x, 1, rng)[0]
        v = b.fiber_sample(x, 1, rng)[0]
        assert total.contains(x, u + 0.7 * v)
        assert not total.contains(x, -(u + 0.7 * v))
    assert ml.soft_landing_check(total, 1, samples=800, seed=0).holds


def test_pullback_of_the_two_point_front_along_the_difference_map():
    """``F(x, y) = x - y`` sends the front into the conoid conormal or the diagonal conormal."""
    form = MinkowskiForm(3)
    rng = np.random.default_rng(5)
    pts, covs = wf_qs_cone(3).sample(600, rng)
    for z, xi in zip(pts, covs):
        y = rng.normal(size=4)
        x = y + z
        upstairs = np.concatenate([xi, -xi])  # F^* xi
        if np.linalg.norm(z) < 1e-12:
            # diagonal conormal: x = y and covector of the form (eta, -eta)
            assert np.allclose(x, y) and np.allclose(upstairs[:4], -upstairs[4:])
            continue
        # conoid conormal: Q(x - y) = 0 and covector parallel to d_{x,y} Q(x - y)
        assert abs(form.Q(z)) < 1e-10
        normal = np.concatenate([form.dQ(z), -form.dQ(z)])
        cos = abs(upstairs @ normal) / (np.linalg.norm(upstairs) * np.linalg.norm(normal))
        assert cos == pytest.approx(1.0, abs=1e-12)


def test_pullback_cone_matches_jacobian_transpose():
    base = ml.conormal(["x0**2+x1**2-0.25"], 2)
    shift = np.array([0.1, -0.2])
    cone = ml.pullback_cone(lambda z: z + shift, lambda z: np.eye(2), base, lambda y, rng: y - shift, 2)
    pts, covs = cone.sample(50, np.random.default_rng(0))
    for z, xi in zip(pts, covs):
        w = z + shift
        assert abs(w @ w - 0.25) < 1e-8
        assert abs(w[0] * xi[1] - w[1] * xi[0]) < 1e-8


CTX = ml.PolarizationContext()


def random_light_pair(rng):
    x2 = rng.normal(size=2)
    v = rng.uniform(0.1, 2.0) * np.array([1.0, rng.choice([-1.0, 1.0])])
    xi1 = -rng.uniform(0.1, 3.0) * np.array([v[0], -v[1]])
    return [x2 + v, x2], [xi1, -xi1]


def test_polarization_classification():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        x = rng.normal(size=2)
        eta = rng.normal(size=2)
        assert ml.is_polarized([x, x], [-eta, eta], CTX) == "weak"
        assert ml.is_polarized(*random_light_pair(rng), CTX) == "strict"


def test_polarization_is_closed_under_rescaling_reordering_and_padding():
    rng = np.random.default_rng(1)
    for _ in range(1000):
        if rng.random() < 0.5:
            points, covs = random_light_pair(rng)
        else:
            points, covs = [rng.normal(size=2), rng.normal(size=2)], [rng.normal(size=2), rng.normal(size=2)]
        verdict = ml.is_polarized(points, covs, CTX)
        scales = rng.uniform(0.1, 10.0, 2)
        assert ml.is_polarized(points, [s * c for s, c in zip(scales, covs)], CTX) == verdict
        assert ml.is_polarized(points[::-1], covs[::-1], CTX) == verdict
        # a point carrying only the zero covector drops out of the trace
        assert ml.is_polarized(points + [rng.normal(size=2)], covs + [np.zeros(2)], CTX) == verdict


def test_future_directed_covector_at_a_maximal_point_is_rejected():
    assert ml.is_polarized([[0.0, 0.0]], [[1.0, 0.2]], CTX) == "no"
    assert ml.is_polarized([[0.0, 0.0]], [[-1.0, 0.2]], CTX) == "strict"


def test_energy_cone_is_convex_and_salient():
    assert CTX.check_cone(samples=400, seed=0)


# ---------------------------------------------------------------------------
# Morse families
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("text,base", [("t0*x0", 1), ("t0*x0 + t1*x1", 2), ("t0*(x0**2 - x1**2)", 2)])
def test_phase_homogeneity(text, base):
    fiber = 2 if "t1" in text else 1
    S = ml.MorseFamily.from_string(text, base, fiber_dim=fiber)
    assert S.homogeneity_defect() < 1e-12


@pytest.mark.parametrize("text,base", [("t0*x0", 2), ("t0*(x0**2 + x1**2 - 0.25)", 2)])
def test_lagrangian_image_is_isotropic(text, base):
    S = ml.MorseFamily.from_string(text, base)
    crit = ml.morse_critical(S, seed=0)
    assert len(crit) > 0
    assert ml.isotropy_defect(S, crit) < 1e-6


def test_hyperplane_family_gives_its_conormal():
    S = ml.MorseFamily.from_string("t0*x0", 2)
    x, xi = ml.lagrange_map(S, ml.morse_critical(S, seed=0), np.random.default_rng(0))
    assert np.allclose(x[:, 0], 0.0, atol=1e-9)
    assert np.allclose(xi[:, 1], 0.0, atol=1e-9)
    assert ml.lagrange_residual(S, [0.0, 0.3], [2.0, 0.0]) < 1e-9
    assert ml.lagrange_residual(S, [0.2, 0.3], [2.0, 0.0]) > 1e-3


def test_morse_cube_has_seven_components():
    families = [ml.MorseFamily.from_string(f"t0*x{i}", 3) for i in range(3)]
    cube = ml.morse_sum(ml.morse_sum(families[0], families[1]), families[2])
    assert ml.component_count(cube) == 7


def test_zero_family_is_neutral():
    S = ml.MorseFamily.from_string("t0*x0", 2)
    assert ml.component_count(ml.morse_sum(S, ml.zero_family(2))) == ml.component_count(S)


def test_sum_with_itself_violates_the_transversality_condition():
    S = ml.MorseFamily.from_string("t0*x0", 1)
    with pytest.raises(ml.HormanderViolation):
        ml.morse_sum(S, S)
