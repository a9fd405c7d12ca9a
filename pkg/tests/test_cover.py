import math

import numpy as np
import pytest

from coorbit import cover as cv
from coorbit import matgroup as mg


def unit_ball(d=2):
    return cv.Ellipsoid(np.zeros(d), np.eye(d))


def euclid_shell(r0, r1, d=2):
    return cv.Shell(outer=cv.Ellipsoid(np.zeros(d), np.eye(d) / r1),
                    inner=cv.Ellipsoid(np.zeros(d), np.eye(d) / r0))


# ---------------------------------------------------------------------------
# membership


def test_membership_unit_ball_center():
    assert cv.membership(unit_ball(), np.zeros(2))


def test_membership_shell():
    sh = euclid_shell(1.0, 2.0)
    assert cv.membership(sh, np.array([1.5, 0.0]))
    assert not cv.membership(sh, np.array([0.5, 0.0]))


def test_membership_transformed_ellipsoid():
    # oracle: transform back and test |h^T xi| <= 1
    h = np.diag([2.0, 2.0])
    image = unit_ball().transformed(np.linalg.inv(h).T)
    xi = np.array([0.4, 0.0])
    assert cv.membership(image, xi) == (np.linalg.norm(h.T @ xi) <= 1.0)
    assert cv.membership(image, xi)
    assert not cv.membership(image, np.array([0.6, 0.0]))


def test_parallelotope_membership():
    box = cv.Parallelotope(np.array([1.0, 0.0]), np.diag([0.5, 2.0]))
    assert cv.membership(box, np.array([1.4, -1.9]))
    assert not cv.membership(box, np.array([1.6, 0.0]))


def test_shell_nesting_validated():
    with pytest.raises(cv.CoverConstructionError):
        cv.Shell(outer=cv.Ellipsoid(np.zeros(2), np.eye(2)),
                 inner=cv.Ellipsoid(np.zeros(2), np.eye(2) / 2.0))


def test_base_set_reference_point_checked():
    with pytest.raises(cv.CoverConstructionError):
        cv.BaseSet(geometry=euclid_shell(1.0, 2.0),
                   ref_point=np.array([0.1, 0.0]))


# ---------------------------------------------------------------------------
# intersection protocol


def test_intersects_self(dyadic_cover):
    el = dyadic_cover.elements[4]
    assert cv.intersects(el, el).intersecting


def test_intersects_budget_validated(dyadic_cover):
    with pytest.raises(ValueError):
        cv.intersects(dyadic_cover.elements[0], dyadic_cover.elements[1],
                      budget=16)


def test_disjoint_balls():
    a = unit_ball()
    b = cv.Ellipsoid(np.array([3.0, 0.0]), np.eye(2))
    assert cv.intersects(a, b) is cv.IntersectStatus.DISJOINT


def test_touching_balls_intersect():
    a = unit_ball()
    b = cv.Ellipsoid(np.array([1.999999, 0.0]), np.eye(2))
    assert cv.intersects(a, b) is cv.IntersectStatus.INTERSECTING


def test_ellipsoid_bisection_oracle():
    # oracle: dense boundary sampling of the minimum gauge
    rng = np.random.default_rng(2)
    for _ in range(20):
        Ma = rng.normal(size=(2, 2)) + 2.0 * np.eye(2)
        Mb = rng.normal(size=(2, 2)) + 2.0 * np.eye(2)
        ca = rng.uniform(-1.5, 1.5, 2)
        cb = rng.uniform(-1.5, 1.5, 2)
        ea, eb = cv.Ellipsoid(ca, Ma), cv.Ellipsoid(cb, Mb)
        ang = np.linspace(0, 2 * math.pi, 4000, endpoint=False)
        bnd = ca + np.linalg.solve(Ma, np.stack([np.cos(ang), np.sin(ang)]))\
            .T.reshape(-1, 2).T.T
        min_gauge = float(np.min(eb.gauge(bnd)))
        inside = float(eb.gauge(ca)[0]) <= 1.0 or float(ea.gauge(cb)[0]) <= 1.0
        expected = inside or min_gauge <= 1.0
        got = cv.intersects(ea, eb).intersecting
        if abs(min_gauge - 1.0) > 1e-3:  # skip razor-thin tangency
            assert got == expected


def test_sat_parallelotopes():
    a = cv.Parallelotope(np.zeros(2), np.eye(2))
    b = cv.Parallelotope(np.array([1.8, 0.0]), np.eye(2))
    c = cv.Parallelotope(np.array([2.3, 0.0]), np.eye(2))
    assert cv.intersects(a, b).intersecting
    assert not cv.intersects(a, c).intersecting
    # rotated diamond separated on a diagonal axis
    R = np.array([[1.0, -1.0], [1.0, 1.0]]) / math.sqrt(2)
    diamond = cv.Parallelotope(np.array([0.0, 2.5]), R)
    assert not cv.intersects(a, diamond).intersecting


def test_sat_3d_cross_axes():
    a = cv.Parallelotope(np.zeros(3), np.eye(3))
    b = cv.Parallelotope(np.array([1.5, 1.5, 0.0]), np.eye(3))
    assert cv.intersects(a, b).intersecting


def test_ellipsoid_vs_parallelotope():
    e = cv.Ellipsoid(np.zeros(2), np.eye(2))
    near = cv.Parallelotope(np.array([1.4, 0.0]), 0.5 * np.eye(2))
    far = cv.Parallelotope(np.array([2.1, 0.0]), 0.5 * np.eye(2))
    assert cv.intersects(e, near).intersecting
    assert not cv.intersects(e, far).intersecting
    corner = cv.Parallelotope(np.array([1.2, 1.2]), 0.5 * np.eye(2))
    # corner at (0.7, 0.7) has norm < 1: intersects
    assert cv.intersects(e, corner).intersecting


def test_dyadic_shells_sampled_protocol():
    # scaled copies of {1 <= |xi| <= 4} share the region around |xi| = 2
    sh0 = euclid_shell(1.0, 4.0)
    sh1 = euclid_shell(0.5, 2.0)
    st = cv.intersects(sh0, sh1, budget=512, force_sampled=True)
    assert st is cv.IntersectStatus.INTERSECTING_SAMPLED
    # oracle: radial intervals [1,4] and [0.5,2] overlap
    assert max(1.0, 0.5) <= min(4.0, 2.0)
    far = euclid_shell(0.05, 0.2)
    st2 = cv.intersects(sh0, far, budget=512, force_sampled=True)
    assert st2 in (cv.IntersectStatus.DISJOINT,
                   cv.IntersectStatus.DISJOINT_SAMPLED)


def test_sampled_never_contradicts_exact(dyadic_cover):
    els = dyadic_cover.elements
    for i in range(len(els)):
        for j in range(i, min(i + 4, len(els))):
            exact = cv.intersects(els[i], els[j], 512)
            sampled = cv.intersects(els[i], els[j], 2048, force_sampled=True)
            if exact is cv.IntersectStatus.DISJOINT:
                assert not sampled.intersecting
            if sampled.intersecting:
                assert exact.intersecting


def test_gauge_shell_oracle_diagonal():
    # oracle for diagonal gauges: the singular interval is the range of
    # per-axis ratios
    rng = np.random.default_rng(8)
    interval = (1.0, 3.0)
    for _ in range(100):
        d1 = rng.uniform(0.2, 5.0, size=3)
        d2 = rng.uniform(0.2, 5.0, size=3)
        ratios = d2 / d1
        expected = (ratios.min() < interval[1] / interval[0]) and \
                   (ratios.max() > interval[0] / interval[1])
        got = cv.gauge_shells_intersect(np.diag(d1), interval,
                                        np.diag(d2), interval)
        assert got == expected


def test_exact_symmetry_and_reflexivity(dyadic_cover):
    els = dyadic_cover.elements
    for i in range(len(els)):
        assert cv.intersects(els[i], els[i]).intersecting
        for j in range(len(els)):
            assert cv.intersects(els[i], els[j]).intersecting == \
                cv.intersects(els[j], els[i]).intersecting


# ---------------------------------------------------------------------------
# induced covers


def test_dyadic_cover_window4(dyadic_spec):
    cover = cv.build_induced_cover(dyadic_spec, 4,
                                   cv.CoverParams(ratio=4.0, inflate=1.0))
    assert len(cover) == 9
    for i in range(len(cover) - 1):
        assert cv.intersects(cover.elements[i], cover.elements[i + 1]) \
            is cv.IntersectStatus.INTERSECTING
    # coverage of the annulus {2^-4 <= |xi| <= 2^4}
    assert cover.r_min <= 2.0 ** -4 and cover.r_max >= 2.0 ** 4
    # oracle: the union of radial intervals 2^-k [1, 4] covers [2^-4, 2^4]
    intervals = sorted((2.0 ** -k, 2.0 ** -k * 4.0) for k in range(-4, 5))
    reach = intervals[0][0]
    for s, e in intervals:
        assert s <= reach
        reach = max(reach, e)
    assert intervals[0][0] <= 2.0 ** -4 and reach >= 2.0 ** 4


def test_scalar_similitude_matches_dyadic(dyadic_spec):
    par = cv.CoverParams(ratio=4.0, inflate=1.0, step=math.log(2.0))
    ca = cv.build_induced_cover(dyadic_spec, 4,
                                cv.CoverParams(ratio=4.0, inflate=1.0))
    cb = cv.build_induced_cover(mg.scalar_similitude(2), 4, par)
    assert np.allclose(ca.gauges(), cb.gauges(), rtol=1e-12)


def test_anisotropic_cover_axis_ratios():
    A = np.diag([3.0, 2.0, 2.0])
    cover = cv.build_induced_cover(mg.cyclic(A), 3)
    for el in cover.elements:
        k = el.index[0]
        sv = np.linalg.svd(np.asarray(el.geometry.outer.shape),
                           compute_uv=False)
        # oracle: singular values of A^{-kT} have spread (3/2)^|k|
        assert np.isclose(sv[0] / sv[-1], 1.5 ** abs(k), rtol=1e-9)


def test_linear_image_membership_invariant(dyadic_cover):
    rng = np.random.default_rng(4)
    pts = rng.uniform(-8, 8, size=(1000, 2))
    for el in dyadic_cover.elements[::3]:
        h_t = np.asarray(el.element.matrix).T
        lhs = el.geometry.contains(pts)
        rhs = cv.set_contains(dyadic_cover.base.geometry, pts @ h_t.T)
        assert np.array_equal(lhs, rhs)


def test_cover_rejects_inadmissible():
    with pytest.raises(cv.CoverConstructionError):
        cv.build_induced_cover(mg.one_parameter(np.diag([1.0, -1.0])), 4)


def test_cover_rejects_dimension_one():
    with pytest.raises(cv.CoverConstructionError):
        cv.build_induced_cover(mg.cyclic(np.array([[2.0]])), 4)


def test_cover_origin_excluded(dyadic_cover):
    for el in dyadic_cover.elements:
        assert el.rho_min > 0.0
        assert not cv.membership(el, np.zeros(2))


# ---------------------------------------------------------------------------
# neighbor counts


def test_self_counts_dyadic(dyadic_spec, dyadic_cover):
    tab = cv.neighbor_counts(dyadic_cover, dyadic_cover)
    inner = tab.counts_ab[tab.interior_a]
    assert tab.max_interior_ab == 3
    assert np.all(inner[1:-1] == 3)


def test_identical_covers_tables_symmetric(dyadic_cover):
    tab = cv.neighbor_counts(dyadic_cover, dyadic_cover)
    assert np.array_equal(tab.counts_ab, tab.counts_ba)
    assert np.array_equal(tab.matrix, tab.matrix.T)


def test_counterexample_counts_grow(counterexample_pair):
    spec_a, spec_b = counterexample_pair
    maxima = []
    for w in (8, 16, 32):
        ca = cv.build_induced_cover(spec_a, w)
        cb = cv.build_induced_cover(spec_b, w)
        tab = cv.neighbor_counts(ca, cb)
        maxima.append(tab.max_interior_ab)
        # oracle: diagonal ratio intervals decide each pair exactly
        da = np.array([3.0, 2.0, 2.0])
        db = np.array([2.0, 2.0, 3.0])
        for i, ea in enumerate(ca.elements[:: max(1, len(ca) // 6)]):
            k = ea.index[0]
            for j, eb in enumerate(cb.elements):
                m = eb.index[0]
                ratios = db ** m / da ** k
                a1, b1 = ca.q_interval
                a2, b2 = cb.q_interval
                expected = (ratios.min() < (b2 / a1) * (1 - 1e-9)) and \
                           (ratios.max() > (a2 / b1) * (1 + 1e-9))
                got = cv.gauge_shells_intersect(ea.gauge, ea.interval,
                                                eb.gauge, eb.interval)
                assert got == expected
    assert maxima[0] < maxima[1] < maxima[2]


def test_neighbor_stability_lemma(dyadic_spec):
    # interior counts and transfer norms equal at K and 2K
    A = np.diag([3.0, 2.0, 2.0])
    for spec in (dyadic_spec, mg.cyclic(A)):
        ck = cv.build_induced_cover(spec, 8)
        c2k = cv.build_induced_cover(spec, 16)
        tk = cv.neighbor_counts(ck, ck)
        t2k = cv.neighbor_counts(c2k, c2k)
        counts_k = {el.index: int(c) for el, c, keep in
                    zip(ck.elements, tk.counts_ab, tk.interior_a) if keep}
        counts_2k = {el.index: int(c) for el, c in
                     zip(c2k.elements, t2k.counts_ab)}
        assert counts_k and all(counts_2k[i] == c for i, c in counts_k.items())
        assert np.isclose(ck.max_transfer_norm, c2k.max_transfer_norm,
                          rtol=1e-9)


# ---------------------------------------------------------------------------
# properness and support diagnostics


def test_properness_dyadic(dyadic_spec):
    res = cv.properness_check(dyadic_spec, c_interval=(1.0, 4.0))
    assert res.bounded
    # oracle: 4^|k| <= 16 gives |k| <= 2
    assert sorted(i[0] for i in res.member_indices) == [-2, -1, 0, 1, 2]
    assert np.isclose(res.max_norm, 4.0)


def test_properness_trivial_group():
    spec = mg.discrete_fg([np.eye(2)])
    res = cv.properness_check(spec, c_interval=(1.0, 4.0), max_window=4)
    assert res.bounded
    assert all(not idx or max(abs(i) for i in idx) == 0
               for idx in res.member_indices)


def test_properness_hyperbolic_unbounded():
    # oracle: the flow preserves |xi_1 xi_2|, so shells keep meeting
    res = cv.properness_check(mg.one_parameter(np.diag([1.0, -1.0])),
                              c_interval=(1.0, 4.0))
    assert not res.bounded
    assert res.growth[-1] > res.growth[len(res.growth) // 2]


def test_divergence_interior_bump(dyadic_spec):
    f = cv.BumpFunction(center=np.array([1.5, 0.0]), radius=0.3)
    res = cv.support_divergence_test(dyadic_spec, (1.0, 4.0), f)
    assert not res.divergent
    assert res.value > 0.0
    # quadrature oracle: partial sums stabilized
    assert res.partials[-1] == pytest.approx(res.partials[-7], rel=1e-9)


def test_divergence_zero_function(dyadic_spec):
    f = cv.BumpFunction(center=np.array([1.5, 0.0]), radius=0.3, amplitude=0.0)
    res = cv.support_divergence_test(dyadic_spec, (1.0, 4.0), f)
    assert not res.divergent and res.value == 0.0


def test_divergence_origin_bump(dyadic_spec):
    # boundary point of the punctured plane: every deep scale contributes
    f = cv.BumpFunction(center=np.zeros(2), radius=0.5)
    res = cv.support_divergence_test(dyadic_spec, (1.0, 4.0), f)
    assert res.divergent


# ---------------------------------------------------------------------------
# connected hull


def annulus_region(p):
    r = np.linalg.norm(p)
    return 0.8 <= r <= 4.2


def test_hull_single_point():
    hull = cv.connected_hull([np.array([2.0, 0.0])], annulus_region)
    assert len(hull.balls) == 1 and not hull.paths


def test_hull_two_points_in_annulus():
    pts = [np.array([2.0, 0.0]), np.array([-2.0, 0.0])]
    hull = cv.connected_hull(pts, annulus_region, grid_size=64)
    assert len(hull.paths) == 1
    for q in hull.paths[0]:
        assert annulus_region(q)


def test_hull_disconnected_region_errors():
    region = lambda p: abs(float(p[0])) > 0.5
    with pytest.raises(cv.RegionDisconnectedOrTooTight):
        cv.connected_hull([np.array([1.0]), np.array([-1.0])], region,
                          grid_size=64)


# ---------------------------------------------------------------------------
# support equality


def test_support_equal_same_spec(dyadic_spec):
    res = cv.support_equality_test(dyadic_spec, dyadic_spec)
    assert res.equal


def test_support_equal_one_parameter_3d():
    a = mg.one_parameter(np.diag([math.log(3), math.log(2), math.log(2)]))
    b = mg.one_parameter(np.diag([math.log(2), math.log(2), math.log(3)]))
    res = cv.support_equality_test(a, b)
    assert res.equal


def test_support_unequal_stale_oracle():
    # a conjugate carrying the untransformed support oracle is caught:
    # the claimed supports disagree on a positive-measure wedge
    half = lambda xi: bool(xi[0] + xi[1] > 0)
    spec = mg.cyclic(2.0 * np.eye(2), support=half)
    theta = math.pi / 2.0
    R = np.array([[math.cos(theta), -math.sin(theta)],
                  [math.sin(theta), math.cos(theta)]])
    proper = mg.conjugate_spec(spec, R)
    stale = mg.GroupSpec(kind=proper.kind, dim=proper.dim,
                         matrix=proper.matrix, support=half,
                         freq_basis=proper.freq_basis)
    res = cv.support_equality_test(proper, stale)
    assert not res.equal
    assert res.witness is not None
    # oracle: the witness is a point the two claimed supports disagree on
    assert proper.support_contains(res.witness) != \
        stale.support_contains(res.witness)
