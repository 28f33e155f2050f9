import math

import numpy as np
import pytest

from valfun import model
from valfun.model import Box, Point


def test_builtin_registry():
    assert model.builtin_names() == ["gan2", "gan2c", "kink", "quad", "sqdist"]


def test_kink_dims():
    p = model.builtin("kink")
    assert (p.n, p.m, p.q) == (1, 1, 2)
    # -5 <= x + y <= 0 encoded as two inequalities
    g = p.g(np.array([-2.0]), np.array([-3.0]))
    assert g[0] == pytest.approx(-5.0)  # x + y
    assert g[1] == pytest.approx(0.0)   # -x - y - 5


def test_quad_unconstrained():
    p = model.builtin("quad")
    assert p.q == 0
    assert p.f(np.array([1.0, 2.0]), np.array([1.0, 2.0])) == pytest.approx(2.5)


def test_gan2_matches_displayed_formula():
    p = model.builtin("gan2")
    s = np.array([p.params["s1"], p.params["s2"]])
    z = np.array([p.params["z1"], p.params["z2"]])
    sbar = np.array([p.params["sbar1"], p.params["sbar2"]])
    rng = np.random.default_rng(0)
    for _ in range(20):
        x = rng.uniform(-2, 2, 2)
        y = rng.uniform(-2, 2, 2)
        direct = (
            y @ (x + z - sbar)
            - math.log(1 + math.exp(y @ (s - sbar)))
            - math.log(1 + math.exp(y @ (x + z - sbar)))
        )
        assert p.f(x, y) == pytest.approx(direct, rel=1e-13)


def test_parameter_override_and_immutability():
    p = model.builtin("gan2", params={"z1": 0.0})
    assert p.params["z1"] == 0.0
    p2 = model.builtin("gan2")
    assert p2.params["z1"] == 1.0


def test_eval_lagrangian_kink_interior():
    p = model.builtin("kink")
    le = model.eval_lagrangian(p, Point([-1.0], [0.0], [0.0, 0.0]), 1)
    assert le.value == pytest.approx(0.0)
    assert le.grad_y[0] == pytest.approx(0.0)  # x + 1 at x = -1
    assert le.hess_xy[0, 0] == pytest.approx(1.0)


def test_eval_lagrangian_r0_zero_multiplier():
    for name in model.builtin_names():
        p = model.builtin(name)
        le = model.eval_lagrangian(
            p, Point(np.zeros(p.n), np.full(p.m, 0.25), np.zeros(p.q)), 0)
        assert le.value == 0.0
        assert np.allclose(le.grad_x, 0.0)
        assert np.allclose(le.grad_y, 0.0)
        assert np.allclose(le.hess_yy, 0.0)


def test_gan2_dual_feasibility_line():
    # grad_y L vanishes exactly on the hyperplane y . (s - sbar) = 0
    p = model.builtin("gan2")
    xbar = np.array([-1.0, 1.0])
    for t in (-2.0, -0.3, 0.0, 1.7):
        le = model.eval_lagrangian(p, Point(xbar, np.array([t, 0.0])), 1)
        assert np.allclose(le.grad_y, 0.0, atol=1e-14)


def test_lagrangian_identity_l1_minus_l0():
    rng = np.random.default_rng(5)
    for name in model.builtin_names():
        p = model.builtin(name)
        for _ in range(25):
            pt = Point(rng.uniform(-1, 1, p.n), rng.uniform(-1, 1, p.m),
                       rng.uniform(0, 2, p.q))
            l1 = model.eval_lagrangian(p, pt, 1)
            l0 = model.eval_lagrangian(p, pt, 0)
            f = p.f(pt.x, pt.y)
            assert l1.value - l0.value == pytest.approx(f, abs=1e-12 * (1 + abs(f)))


def test_grad_y_lagrangian_assembly():
    rng = np.random.default_rng(6)
    for name in ("kink", "gan2c"):
        p = model.builtin(name)
        for _ in range(25):
            pt = Point(rng.uniform(-1, 1, p.n), rng.uniform(-1, 1, p.m),
                       rng.uniform(0, 2, p.q))
            le = model.eval_lagrangian(p, pt, 1)
            manual = p.grad_f_y(pt.x, pt.y) - p.jac_g_y(pt.x, pt.y) @ pt.lam
            assert np.allclose(le.grad_y, manual, atol=1e-13)


def test_hessian_symmetry():
    rng = np.random.default_rng(8)
    for name in model.builtin_names():
        p = model.builtin(name)
        for _ in range(10):
            pt = Point(rng.uniform(-1, 1, p.n), rng.uniform(-1, 1, p.m),
                       rng.uniform(0, 1, p.q))
            le = model.eval_lagrangian(p, pt, 1)
            assert np.max(np.abs(le.hess_yy - le.hess_yy.T)) <= 1e-10


def test_fd_check_on_builtins():
    rng = np.random.default_rng(9)
    for name in model.builtin_names():
        p = model.builtin(name)
        pt = Point(rng.uniform(-1, 1, p.n), rng.uniform(-1.5, 1.5, p.m))
        rep = model.fd_check(p, pt)
        assert rep.passed, (name, rep.max_rel_first, rep.max_rel_second)


def test_load_problem_errors():
    with pytest.raises(model.FormatError):
        model.load_problem("[objective]\nf = \"x1\"\n")  # missing dims
    with pytest.raises(model.FormatError):
        model.load_problem("[dims]\nn = 1\nm = 1\nq = 1\n[objective]\nf = \"x1\"\n")
    bad_box = """
[dims]
n = 1
m = 1
q = 0
[objective]
f = "x1*y1"
[y_search_box]
y1 = -inf, inf
"""
    with pytest.raises(model.FormatError):
        model.load_problem(bad_box)


def test_separability_structural_check():
    sep = """
[dims]
n = 1
m = 1
q = 1
[objective]
f = "y1 - y1^2 - x1^2"
[constraints]
g1 = "y1 - x1"
[y_search_box]
y1 = -4, 4
[flags]
separable_xy = true
concave_in_y = true
"""
    p = model.load_problem(sep)
    assert p.flags.separable_xy
    mixed = sep.replace('f = "y1 - y1^2 - x1^2"', 'f = "x1*y1 - y1^2"')
    with pytest.raises(model.FormatError):
        model.load_problem(mixed)


def test_box_facets():
    box = Box(np.array([0.0, -1.0]), np.array([1.0, np.inf]))
    assert box.active_facets(np.array([0.0, 0.5])) == ["lo", None]
    assert box.active_facets(np.array([1.0, -1.0])) == ["hi", "lo"]
    assert box.active_facets(np.array([0.5, 5.0])) == [None, None]
