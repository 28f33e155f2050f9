import itertools

import numpy as np
import pytest

from valfun import polyhedra as ph


# ---------------------------------------------------------------------------
# rank


def test_rank_identity():
    assert ph.rank(np.eye(3)) == 3


def test_rank_proportional_rows():
    assert ph.rank([[1.0, 2.0], [2.0, 4.0]]) == 1


def test_rank_dual_system_matrix_full_column_rank():
    # transposed Jacobian of the constrained adversarial example's dual
    # constraint system at its reference point; column rank must be 4
    M = np.array([
        [0.5, -0.25, 0.0, 0.0],
        [0.0, 0.5, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0],
        [0.0, -0.5, 0.0, 0.0],
        [-1.0, 0.0, 1.0, 0.0],
        [-1.0, 0.0, 0.0, 1.0],
    ])
    assert ph.rank(M) == 4


# ---------------------------------------------------------------------------
# lp_solve


def test_lp_simplex_max_on_unit_simplex():
    poly = ph.polyhedron(2, A=-np.eye(2), b=np.zeros(2), E=np.ones((1, 2)), c=[1.0])
    res = ph.lp_solve(poly, objective=[1.0, 0.0])
    assert res.status == "optimal"
    assert res.value == pytest.approx(1.0, abs=1e-9)


def test_lp_unbounded_ray():
    poly = ph.polyhedron(1, A=[[-1.0]], b=[0.0])
    res = ph.lp_solve(poly, objective=[1.0])
    assert res.status == "unbounded"
    assert res.ray[0] == pytest.approx(1.0)


def test_lp_empty():
    poly = ph.polyhedron(1, A=[[1.0], [-1.0]], b=[-1.0, -1.0])
    assert ph.lp_solve(poly).status == "empty"


def test_lp_feasibility_without_objective():
    poly = ph.polyhedron(2, A=[[1.0, 1.0]], b=[1.0])
    res = ph.lp_solve(poly)
    assert res.status == "feasible"
    assert poly.contains(res.point)


def test_lp_dual_certificate_complementary_slackness():
    rng = np.random.default_rng(42)
    worst = 0.0
    for _ in range(60):
        d = int(rng.integers(1, 4))
        A = np.vstack([np.eye(d), -np.eye(d), rng.normal(size=(2, d))])
        b = np.concatenate([
            rng.uniform(0.5, 2, d), rng.uniform(0.5, 2, d), rng.uniform(0.2, 1.5, 2)])
        obj = rng.normal(size=d)
        res = ph.lp_solve(ph.polyhedron(d, A=A, b=b), objective=obj)
        assert res.status == "optimal"
        y = res.dual_ineq
        stat = np.linalg.norm(A.T @ y - obj)
        dual_feas = max(0.0, float(-y.min()))
        cs = float(np.max(np.abs(y * (b - A @ res.point))))
        worst = max(worst, stat, dual_feas, cs)
    assert worst <= 1e-7


def test_lp_zero_dimensional():
    assert ph.lp_solve(ph.polyhedron(0)).status == "feasible"
    bad = ph.Polyhedron(np.zeros((0, 0)), np.zeros(0), np.zeros((1, 0)), np.array([1.0]))
    assert ph.lp_solve(bad).status == "empty"


# ---------------------------------------------------------------------------
# enumerate_generators


def test_generators_unit_interval():
    g = ph.enumerate_generators(ph.polyhedron(1, A=[[-1.0], [1.0]], b=[0.0, 1.0]))
    assert sorted(float(v[0]) for v in g.vertices) == pytest.approx([0.0, 1.0])
    assert not g.rays


def test_generators_halfline():
    g = ph.enumerate_generators(ph.polyhedron(1, A=[[-1.0]], b=[0.0]))
    assert len(g.vertices) == 1 and g.vertices[0][0] == pytest.approx(0.0)
    assert len(g.rays) == 1 and g.rays[0][0] == pytest.approx(1.0)


def test_generators_kink_dual_interval():
    # interval -4 - y <= u <= 1 - y at y = 0
    g = ph.enumerate_generators(ph.polyhedron(1, A=[[1.0], [-1.0]], b=[1.0, 4.0]))
    assert sorted(float(v[0]) for v in g.vertices) == pytest.approx([-4.0, 1.0])


def test_generators_random_box_corners():
    rng = np.random.default_rng(1)
    for d in (1, 2, 3, 4):
        lo = rng.uniform(-2, -0.5, d)
        hi = rng.uniform(0.5, 2, d)
        A = np.vstack([np.eye(d), -np.eye(d)])
        b = np.concatenate([hi, -lo])
        g = ph.enumerate_generators(ph.polyhedron(d, A=A, b=b))
        assert len(g.vertices) == 2 ** d
        assert not g.rays
        expected = {tuple(np.round(c, 9)) for c in itertools.product(*zip(lo, hi))}
        got = {tuple(np.round(v, 9)) for v in g.vertices}
        assert got == expected


def test_generators_empty_polyhedron():
    g = ph.enumerate_generators(ph.polyhedron(2, A=[[1.0, 0.0], [-1.0, 0.0]],
                                              b=[-1.0, -1.0]))
    assert g.is_empty()


def test_generators_cross_validate_hrep():
    rng = np.random.default_rng(2)
    for _ in range(40):
        d = int(rng.integers(1, 5))
        A = np.vstack([np.eye(d), -np.eye(d), rng.normal(size=(3, d))])
        b = np.concatenate([np.ones(2 * d), rng.uniform(-0.3, 1.0, 3)])
        poly = ph.polyhedron(d, A=A, b=b)
        g = ph.enumerate_generators(poly)
        for v in g.vertices:
            assert poly.contains(v, tol=1e-8)


def test_generators_dimension_guard():
    with pytest.raises(ph.DimensionTooLarge):
        ph.enumerate_generators(ph.polyhedron(9))


def test_generators_match_bruteforce_basis_enumeration():
    # smaller version of the acceptance sweep
    rng = np.random.default_rng(77)
    for _ in range(40):
        d = int(rng.integers(1, 5))
        A = np.vstack([np.eye(d), -np.eye(d)])
        b = np.ones(2 * d)
        for _ in range(int(rng.integers(0, 5))):
            a = rng.normal(size=d)
            a /= np.linalg.norm(a)
            A = np.vstack([A, a])
            b = np.concatenate([b, [rng.uniform(-0.5, 1.0)]])
        brute = _brute_vertices(A, b)
        g = ph.enumerate_generators(ph.polyhedron(d, A=A, b=b))
        assert len(brute) == len(g.vertices)
        for v in brute:
            assert any(np.linalg.norm(v - w) <= 1e-6 for w in g.vertices)


def _brute_vertices(A, b):
    k, d = A.shape
    verts = []
    for rows in itertools.combinations(range(k), d):
        M = A[list(rows)]
        if abs(np.linalg.det(M)) < 1e-10:
            continue
        z = np.linalg.solve(M, b[list(rows)])
        if np.max(A @ z - b) <= 1e-7:
            if all(np.linalg.norm(z - v) > 1e-6 for v in verts):
                verts.append(z)
    return verts


# ---------------------------------------------------------------------------
# hull membership


def test_hull_membership_symmetric():
    r = ph.hull_membership([0.0], [np.array([-1.0]), np.array([1.0])])
    assert r.inside
    assert np.allclose(r.weights, [0.5, 0.5])


def test_hull_membership_outside():
    r = ph.hull_membership([0.0, 0.0], [np.array([1.0, 0.0]), np.array([0.0, 1.0])])
    assert not r.inside


def test_hull_membership_kink_gradients():
    # 0 = 0.8 * 1 + 0.2 * (-4)
    r = ph.hull_membership([0.0], [np.array([1.0]), np.array([-4.0])], n_cap=1)
    assert r.inside
    assert np.allclose(r.weights, [0.8, 0.2], atol=1e-9)
    assert np.sum(r.weights > 1e-10) <= 2


def test_hull_membership_self():
    rng = np.random.default_rng(4)
    gens = [rng.normal(size=3) for _ in range(6)]
    for v in gens:
        r = ph.hull_membership(v, gens)
        assert r.inside


def test_caratheodory_support_cap():
    rng = np.random.default_rng(5)
    gens = [rng.normal(size=2) for _ in range(10)]
    target = np.mean(gens, axis=0)
    r = ph.hull_membership(target, gens, n_cap=2)
    assert r.inside
    assert np.sum(r.weights > 1e-10) <= 3
    recon = sum(w * g for w, g in zip(r.weights, gens))
    assert np.allclose(recon, target, atol=1e-8)


def test_conic_membership_with_rays():
    inside, slack = ph.conic_membership(
        [2.5, 0.0], [np.array([0.5, 0.0])], [np.array([1.0, 0.0])])
    assert inside and slack <= 1e-9
    inside, _ = ph.conic_membership(
        [-2.5, 0.0], [np.array([0.5, 0.0])], [np.array([1.0, 0.0])])
    assert not inside
