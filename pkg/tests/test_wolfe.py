import numpy as np
import pytest

from valfun import model, valuefn as vf, wolfe
from valfun.model import Point, eval_lagrangian

XBAR = np.array([-1.0, 1.0])


def test_dual_value_quad_strong_duality():
    p = model.builtin("quad")
    res = wolfe.dual_value(p, [1.0, 2.0])
    assert res.value == pytest.approx(2.5, abs=1e-8)
    assert np.allclose(res.y, [1.0, 2.0], atol=1e-6)


def test_dual_value_kink_at_kkt_seed():
    p = model.builtin("kink")
    res = wolfe.dual_value(p, [-2.0])
    assert res.value == pytest.approx(3.0, abs=1e-8)
    assert res.kkt_residual <= 1e-8
    # the binding multiplier is lam2 = 1
    assert res.lam[1] == pytest.approx(1.0, abs=1e-6)


def test_dual_value_sqdist_zero():
    p = model.builtin("sqdist")
    res = wolfe.dual_value(p, [0.5, -0.5])
    assert res.value == pytest.approx(0.0, abs=1e-10)


def test_dual_minimizer_satisfies_constraints():
    for name, x in [("quad", [1.0, 2.0]), ("kink", [-2.0]), ("gan2", XBAR.tolist())]:
        p = model.builtin(name)
        res = wolfe.dual_value(p, x)
        le = eval_lagrangian(p, Point(np.asarray(x, dtype=float), res.y, res.lam), 1)
        assert np.linalg.norm(le.grad_y) <= 1e-6
        assert np.min(res.lam, initial=0.0) >= -1e-8


def test_dual_value_monotone_under_extra_seeds():
    p = model.builtin("kink")
    base = wolfe.dual_value(p, [-2.0])
    rng = np.random.default_rng(3)
    extra = [(rng.uniform(-4, 4, 1), rng.uniform(0, 3, 2)) for _ in range(4)]
    more = wolfe.dual_value(p, [-2.0], extra_seeds=extra)
    assert more.value <= base.value + 1e-12


def test_lagrangian_equals_objective_at_kkt_points():
    for name, x in [("kink", [-2.0]), ("kink", [0.5]), ("gan2c", XBAR.tolist())]:
        p = model.builtin(name)
        rep = vf.solve_inner(p, x)
        for y, lam in zip(rep.solutions, rep.multipliers):
            le = eval_lagrangian(p, Point(np.asarray(x, dtype=float), y, lam), 1)
            f = p.f(np.asarray(x, dtype=float), y)
            assert le.value == pytest.approx(f, abs=1e-8)


def test_weak_duality_kink():
    p = model.builtin("kink")
    rep = wolfe.check_weak_duality(p, [[-3.0], [-2.0], [0.0], [1.0]])
    assert rep.passed
    assert all(m >= -1e-6 for m in rep.margins)


def test_weak_duality_quad_random():
    p = model.builtin("quad")
    rng = np.random.default_rng(5)
    xs = [rng.uniform(-2, 2, 2) for _ in range(20)]
    rep = wolfe.check_weak_duality(p, xs)
    assert rep.passed
    assert min(rep.margins) >= -1e-6
    # strong duality for this concave quadratic: margins are essentially zero
    assert max(abs(m) for m in rep.margins) <= 1e-6


def test_weak_duality_gan2_grid():
    p = model.builtin("gan2")
    direction = np.array([0.0, 1.0])
    xs = [XBAR + t * direction for t in np.linspace(-0.2, 0.2, 9)]
    rep = wolfe.check_weak_duality(p, xs)
    assert rep.passed
    assert all(m is not None and m >= -1e-6 for m in rep.margins)


def test_weak_duality_requires_flag():
    doc = """
[dims]
n = 1
m = 1
q = 0
[objective]
f = "x1*y1 - y1^2"
[y_search_box]
y1 = -2, 2
"""
    p = model.load_problem(doc)
    with pytest.raises(ValueError):
        wolfe.check_weak_duality(p, [[0.0]])


def test_dual_problem_view():
    p = model.builtin("quad")
    d = wolfe.DualProblem(p)
    x = np.array([1.0, 2.0])
    assert d.objective(x, x, np.zeros(0)) == pytest.approx(2.5)
    res_grad, res_lam = d.constraint_residual(x, x, np.zeros(0))
    assert res_grad <= 1e-12 and res_lam == 0.0
