import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coorbit import matgroup as mg

ROT = np.array([[0.0, -1.0], [1.0, 0.0]])


def test_mat_exp_identity():
    assert np.allclose(mg.mat_exp(np.zeros((3, 3))), np.eye(3), atol=1e-14)


def test_mat_exp_diagonal():
    out = mg.mat_exp(np.diag([math.log(2.0), math.log(3.0)]))
    assert np.allclose(out, np.diag([2.0, 3.0]), rtol=1e-12)


def test_mat_exp_skew_is_orthogonal():
    for t in (-3.0, 0.7, 12.0):
        R = mg.mat_exp(t * ROT)
        assert abs(np.linalg.norm(R, 2) - 1.0) < 1e-12
        expected = np.array([[math.cos(t), -math.sin(t)],
                             [math.sin(t), math.cos(t)]])
        assert np.allclose(R, expected, atol=1e-12)


def test_mat_exp_eigendecomposition_accuracy():
    # diagonalizable input: compare against the eigendecomposition result
    rng = np.random.default_rng(3)
    V = rng.normal(size=(3, 3))
    lam = np.array([0.3, -0.5, 1.1])
    X = V @ np.diag(lam) @ np.linalg.inv(V)
    ref = V @ np.diag(np.exp(lam)) @ np.linalg.inv(V)
    got = mg.mat_exp(X)
    assert np.linalg.norm(got - ref, 2) <= 1e-10 * np.linalg.norm(ref, 2)


@settings(max_examples=40, deadline=None)
@given(st.floats(-10, 10), st.floats(-10, 10))
def test_mat_exp_homomorphism(s, t):
    X = np.array([[0.2, -1.0], [1.0, 0.1]])
    lhs = mg.mat_exp((s + t) * X)
    rhs = np.asarray(mg.mat_exp(s * X)) @ np.asarray(mg.mat_exp(t * X))
    assert np.linalg.norm(lhs - rhs, 2) <= 1e-8 * max(1.0, np.linalg.norm(lhs, 2))


def test_dual_action_identity():
    xi = np.array([1.0, -2.0])
    assert np.allclose(mg.dual_action(np.eye(2), xi), xi)


def test_dual_action_diagonal():
    out = mg.dual_action(np.diag([2.0, 2.0]), np.array([1.0, 0.0]))
    assert np.allclose(out, [0.5, 0.0])


def test_dual_action_repeated_multiplication_oracle():
    # oracle: k successive solves reproduce the k-th power action
    A = np.diag([3.0, 2.0, 2.0])
    e1 = np.eye(3)[0]
    for k in range(1, 7):
        oracle = e1.copy()
        for _ in range(k):
            oracle = np.linalg.solve(A.T, oracle)
        direct = mg.dual_action(np.linalg.matrix_power(A, k), e1)
        assert np.allclose(direct, oracle, rtol=1e-12)
        assert np.allclose(direct, [3.0 ** -k, 0.0, 0.0], rtol=1e-12)


def test_dual_action_singular_rejected():
    with pytest.raises(mg.GroupError):
        mg.dual_action(np.array([[1.0, 1.0], [1.0, 1.0]]), np.array([1.0, 0.0]))


def test_one_parameter_admissible_identity():
    res = mg.check_one_parameter_admissible(np.eye(3))
    assert res.admissible and res.sign == 1


def test_one_parameter_admissible_mixed_signs():
    res = mg.check_one_parameter_admissible(np.diag([1.0, -1.0]))
    assert not res.admissible
    assert res.witness is not None and res.witness.real < 0


def test_one_parameter_admissible_complex_pair():
    # oracle: characteristic polynomial roots of I + rot are 1 +- i
    X = np.eye(2) + ROT
    roots = np.roots([1.0, -2.0, 2.0])
    assert sorted(np.round(roots.real, 12)) == [1.0, 1.0]
    res = mg.check_one_parameter_admissible(X)
    assert res.admissible and res.sign == 1


def test_cyclic_admissible():
    assert mg.check_cyclic_admissible(2.0 * np.eye(2)).sign == 1
    assert mg.check_cyclic_admissible(0.5 * np.eye(2)).sign == -1
    assert not mg.check_cyclic_admissible(np.diag([2.0, 0.5])).admissible


def test_word_distance_cyclic():
    spec = mg.cyclic(2.0 * np.eye(2))
    W = mg.box_generating_set(1.0)
    g = mg.group_element(spec, (3,))
    h = mg.group_element(spec, (7,))
    assert mg.word_distance(spec, W, g, h) == 4.0
    assert mg.word_distance(spec, W, g, g) == 0.0


def test_word_distance_one_parameter_step():
    X = np.eye(2)
    spec = mg.one_parameter(X)
    W = mg.box_generating_set(0.5)
    g = mg.group_element(spec, (0.95,))
    h = mg.group_element(spec, (0.0,))
    assert mg.word_distance(spec, W, g, h) == math.ceil(0.95 / 0.5)


def test_word_distance_requires_coords():
    spec = mg.one_parameter(np.eye(2))
    W = mg.box_generating_set(0.5)
    bare = mg.GroupElement(matrix=np.eye(2))
    with pytest.raises(mg.GroupError):
        mg.word_distance(spec, W, bare, bare)


def _distance_matrix(spec, W, elements):
    n = len(elements)
    d = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            d[i, j] = mg.word_distance(spec, W, elements[i], elements[j])
    return d


def test_word_metric_axioms_on_window():
    # all triples from a 49-element window
    spec = mg.one_parameter(np.eye(2) + 0.3 * ROT)
    W = mg.box_generating_set(0.5)
    fam = mg.enumerate_family(spec, 24, step=0.37)
    d = _distance_matrix(spec, W, fam.elements)
    assert np.all(d >= 0)
    assert np.array_equal(d, d.T)
    assert np.all(np.diag(d) == 0)
    assert np.all(d[~np.eye(len(fam), dtype=bool)] > 0)
    # triangle inequality over all triples, via broadcasting
    assert np.all(d[:, None, :] <= d[:, :, None] + d[None, :, :] + 1e-12)


def test_word_metric_left_invariance_exact():
    spec = mg.abelian_flow([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])])
    W = mg.box_generating_set(0.5)
    rng = np.random.default_rng(5)
    for _ in range(50):
        g = mg.group_element(spec, rng.uniform(-3, 3, size=2))
        h = mg.group_element(spec, rng.uniform(-3, 3, size=2))
        z = rng.uniform(-3, 3, size=2)
        zg = mg.group_element(spec, z + np.asarray(g.coords))
        zh = mg.group_element(spec, z + np.asarray(h.coords))
        assert mg.word_distance(spec, W, g, h) == \
            mg.word_distance(spec, W, zg, zh)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.0, 12.0))
def test_generating_set_coarse_equivalence(x):
    # two box half-widths: d_{W'} <= ceil(delta/delta') * d_W
    delta, delta_p = 0.5, 0.2
    n_factor = math.ceil(delta / delta_p)
    d_w = math.ceil(x / delta - 1e-12) if x > 0 else 0
    d_wp = math.ceil(x / delta_p - 1e-12) if x > 0 else 0
    assert d_wp <= n_factor * d_w


def test_cayley_word_distance():
    a = np.array([[2.0, 0.0], [0.0, 1.0]])
    b = np.array([[1.0, 1.0], [0.0, 1.0]])
    spec = mg.discrete_fg([a, b])
    W = mg.list_generating_set(spec, [a, b], bfs_cap=6)
    e = mg.GroupElement(matrix=np.eye(2), coords=())
    ga = mg.GroupElement(matrix=a)
    gab = mg.GroupElement(matrix=a @ b)
    assert mg.word_distance(spec, W, e, ga) == 1.0
    assert mg.word_distance(spec, W, e, gab) == 2.0
    far = mg.GroupElement(matrix=np.linalg.matrix_power(b, 40))
    assert mg.word_distance(spec, W, e, far) == math.inf


def test_enumerate_family_cyclic(dyadic_spec):
    fam = mg.enumerate_family(dyadic_spec, 3)
    assert len(fam) == 7
    mats = [np.asarray(e.matrix) for e in fam.elements]
    assert np.allclose(mats[0], np.linalg.matrix_power(2.0 * np.eye(2), -3))


def test_enumerate_family_one_parameter_scalars():
    fam = mg.enumerate_family(mg.one_parameter(np.eye(2)), 2, step=1.0)
    for el, k in zip(fam.elements, range(-2, 3)):
        assert np.allclose(el.matrix, math.exp(k) * np.eye(2), rtol=1e-12)


def test_enumerate_family_flow_lattice():
    spec = mg.abelian_flow([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])])
    fam = mg.enumerate_family(spec, 1, step=1.0)
    assert len(fam) == 9
    el = dict(zip(fam.indices, fam.elements))[(1, -1)]
    assert np.allclose(el.matrix, np.diag([math.e, 1.0 / math.e]), rtol=1e-12)


def test_family_well_spread_invariants():
    spec = mg.one_parameter(np.eye(2))
    step = 0.4
    fam = mg.enumerate_family(spec, 10, step=step)
    coords = np.array([e.coords[0] for e in fam.elements])
    assert np.all(np.diff(coords) >= fam.discreteness - 1e-12)
    rng = np.random.default_rng(11)
    for t in rng.uniform(-10 * step, 10 * step, size=64):
        assert np.min(np.abs(coords - t)) <= fam.density / 2 + 1e-12


def test_conjugate_identity(dyadic_spec):
    out = mg.conjugate_spec(dyadic_spec, np.eye(2))
    assert np.allclose(out.matrix, dyadic_spec.matrix)


def test_conjugate_permutation_swap():
    swap = np.array([[0.0, 1.0], [1.0, 0.0]])
    out = mg.conjugate_spec(mg.cyclic(np.diag([2.0, 3.0])), swap)
    assert np.allclose(out.matrix, np.diag([3.0, 2.0]))


def test_conjugate_one_parameter_exp_oracle():
    # oracle: exp(t A^{-1} X A) = A^{-1} exp(tX) A
    X = np.array([[0.4, -1.0], [1.0, 0.2]])
    A = np.array([[1.0, 0.5], [-0.25, 2.0]])
    conj = mg.conjugate_spec(mg.one_parameter(X), A)
    A_inv = np.linalg.inv(A)
    for t in (-2.0, 0.3, 1.7):
        lhs = mg.mat_exp(t * np.asarray(conj.generator))
        rhs = A_inv @ np.asarray(mg.mat_exp(t * X)) @ A
        assert np.linalg.norm(lhs - rhs, 2) <= 1e-9 * np.linalg.norm(rhs, 2)


def test_conjugate_support_composition():
    quadrant = lambda xi: bool(xi[0] > 0 and xi[1] > 0)
    spec = mg.abelian_flow([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])],
                           support=quadrant)
    theta = math.pi / 2.0
    R = np.array([[math.cos(theta), -math.sin(theta)],
                  [math.sin(theta), math.cos(theta)]])
    conj = mg.conjugate_spec(spec, R)
    # new support is R^T(quadrant): e.g. rotating (1,1) by R^T lands inside
    assert conj.support_contains(R.T @ np.array([1.0, 1.0]))
    assert not conj.support_contains(np.array([1.0, 1.0])) or \
        quadrant(np.linalg.solve(R.T, np.array([1.0, 1.0])))


def test_haar_weight_constant():
    spec = mg.cyclic(2.0 * np.eye(2))
    for k in range(-3, 4):
        assert mg.haar_weight(spec, mg.group_element(spec, (k,))) == 1.0
    with pytest.raises(mg.GroupError):
        mg.haar_weight(spec, mg.GroupElement(matrix=np.eye(2)))


def test_haar_similitude_left_invariance():
    # sampled chart integrals shift-invariant within 1e-3
    spec = mg.similitude(2)
    step = 0.02
    ts = np.arange(-3.0, 3.0, step)
    angles = np.arange(0.0, 2.0 * math.pi, step)

    def bump(t, theta):
        # compact support in t keeps all mass inside the chart window
        core = np.clip(1.0 - (t / 1.5) ** 2, 0.0, None) ** 3
        return core * (1.0 + 0.5 * np.cos(theta))

    tt, aa = np.meshgrid(ts, angles, indexing="ij")
    base = np.sum(bump(tt, aa)) * step * step
    shifted = np.sum(bump(tt - 0.57, aa - 1.1)) * step * step
    assert abs(base - shifted) <= 1e-3 * abs(base)


def test_abelian_flow_commutation_enforced():
    with pytest.raises(mg.GroupError):
        mg.abelian_flow([np.array([[0.0, 1.0], [0.0, 0.0]]),
                         np.array([[0.0, 0.0], [1.0, 0.0]])])


def test_spec_validation():
    with pytest.raises(mg.GroupError):
        mg.similitude(4)
    with pytest.raises(mg.GroupError):
        mg.cyclic(np.zeros((2, 2)))
    with pytest.raises(mg.GroupError):
        mg.as_matrix(np.full((2, 2), np.nan))
    with pytest.raises(mg.GroupError):
        mg.as_matrix(np.eye(5))


def test_element_chart_consistency_enforced():
    spec = mg.cyclic(2.0 * np.eye(2))
    with pytest.raises(mg.GroupError):
        mg.element_from_matrix(spec, 3.0 * np.eye(2), coords=(1,))
    el = mg.element_from_matrix(spec, 4.0 * np.eye(2), coords=(2,))
    assert el.coords == (2.0,)
