"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` to see the per-criterion
lines as they complete.
"""

import io
import itertools
import json
import math
import time

import numpy as np

from helpers import random_wolfe_instance
from valfun import cli, cq, model, multipliers as mu, polyhedra as ph
from valfun import stationarity as st, subdiff as sd, valuefn as vf, wolfe

XBAR = np.array([-1.0, 1.0])   # s - z for the builtin adversarial problems
SDIR = np.array([0.0, 1.0])    # s - sbar
YBAR = np.array([1.0, 0.0])

# class verdict quadruples collected while running criteria 3-10
HIERARCHY_RECORDS = []


def _record_classes(problem, x, y, lam):
    pt = model.Point(np.asarray(x, float), np.asarray(y, float),
                     np.asarray(lam, float))
    verdicts = {}
    for cls in ("s", "m", "c", "weak"):
        verdicts[cls] = st.find_mpec_multipliers(problem, pt, cls).holds
    HIERARCHY_RECORDS.append(verdicts)
    return verdicts


def _report(num, description, ok):
    print(f"{'PASS' if ok else 'FAIL'} criterion {num:2d}: {description}")
    assert ok, f"criterion {num} failed: {description}"


def test_criterion_01_gan_value():
    t0 = time.time()
    out = io.StringIO()
    code = cli.run(["value", "--problem", "gan2", "--x", "-1,1"], stdout=out)
    elapsed = time.time() - t0
    payload = json.loads(out.getvalue())
    value = payload["results"]["value"]
    ok = (code == 0 and abs(value + 2 * math.log(2)) <= 1e-6 and elapsed < 10.0)
    _report(1, f"gan2 value at s-z is -2 log 2 (err {abs(value + 2*math.log(2)):.1e}, "
               f"{elapsed:.2f}s)", ok)


def test_criterion_02_gan_solution_set():
    p = model.builtin("gan2")
    rep = vf.solve_inner(p, XBAR)
    worst = max(abs(float(y @ SDIR)) for y in rep.solutions)
    _report(2, f"all gan2 solutions satisfy |y.(s-sbar)| <= 1e-5 (worst {worst:.1e})",
            worst <= 1e-5)


def test_criterion_03_gan_wolfe_certificates():
    p = model.builtin("gan2")
    rep = vf.solve_inner(p, XBAR)
    distinct = []
    for y in rep.solutions:
        if all(np.linalg.norm(y - o) > 1e-3 for o in distinct):
            distinct.append(y)
    ok = len(distinct) >= 5
    checked = 0
    worst_u = 0.0
    worst_res = 0.0
    for y in distinct:
        res = st.check_wolfe_system(p, XBAR, y, np.zeros(0))
        if not res.holds:
            ok = False
            break
        hy = p.hess_f_yy(XBAR, y)
        nullspace_dim = p.m - ph.rank(hy)
        if nullspace_dim == 1:
            worst_u = max(worst_u, float(np.linalg.norm(res.u + y)))
        worst_res = max(worst_res, max(res.residuals.values()))
        checked += 1
        _record_classes(p, XBAR, y, np.zeros(0))
    ok = ok and checked >= 5 and worst_u <= 1e-6 and worst_res <= 1e-8
    _report(3, f"Wolfe system holds with u = -y at {checked} solutions "
               f"(|u+y| <= {worst_u:.1e}, residuals <= {worst_res:.1e})", ok)


def test_criterion_04_gan_nash_asymmetry():
    p = model.builtin("gan2")
    cert0 = st.certify_point(p, XBAR, np.zeros(2))
    holds_at_zero = cert0.systems["nash"].status == "holds"
    fails_off_zero = True
    for t in (1.0, -0.5, 0.1, 2.0):
        yb = np.array([t, 0.0])
        assert np.linalg.norm(yb) >= 0.1
        cert = st.certify_point(p, XBAR, yb)
        if cert.systems["nash"].status != "fails":
            fails_off_zero = False
        _record_classes(p, XBAR, yb, np.zeros(0))
    _report(4, "Nash holds only at the zero discriminator",
            holds_at_zero and fails_off_zero)


def test_criterion_05_constrained_gan_cq_contrast():
    p = model.builtin("gan2c")
    pt = model.Point(XBAR, YBAR, np.zeros(2))
    branch = cq.check_licq(p, pt, "mpec_branch")
    dual = cq.check_licq(p, pt, "dual_system")
    sig = mu.sigma_set(p, XBAR, YBAR, r=1).generators()
    singleton = (len(sig.vertices) == 1 and not sig.rays
                 and np.allclose(sig.vertices[0], 0.0, atol=1e-9))
    _record_classes(p, XBAR, YBAR, np.zeros(2))
    ok = (branch.verdict == "fails" and dual.verdict == "holds"
          and dual.evidence["rank"] == 4 and singleton)
    _report(5, "MPEC-LICQ fails, dual-system LICQ holds (rank 4), "
               "Sigma = {(0,0)}", ok)


def test_criterion_06_kink_solution_map():
    p = model.builtin("kink")
    ok = True
    for xv in (-3.0, -2.0, -0.5, 0.0, 1.0):
        expected = -xv if xv > -1 else -xv - 5.0
        rep = vf.solve_inner(p, [xv])
        if len(rep.solutions) != 1 or abs(rep.solutions[0][0] - expected) > 1e-5:
            ok = False
    rep = vf.solve_inner(p, [-1.0])
    ys = sorted(float(y[0]) for y in rep.solutions)
    spread_ok = (len(ys) >= 4 and abs(ys[0] + 4.0) <= 1e-5
                 and abs(ys[-1] - 1.0) <= 1e-5)
    for y in rep.solutions:
        _record_classes(p, np.array([-1.0]), y, np.zeros(2))
    _report(6, f"kink solution map matches the closed form; {len(ys)} clusters "
               f"span [{ys[0]:.6f}, {ys[-1]:.6f}] at the kink", ok and spread_ok)


def test_criterion_07_inclusion_at_kink():
    p = model.builtin("kink")
    est = sd.upper_estimate(p, [-1.0], "limiting")
    lo, hi = est.hull_interval()
    hull_ok = abs(lo + 4.0) <= 1e-4 and abs(hi - 1.0) <= 1e-4
    samples = vf.numeric_subdiff_oracle(p, [-1.0], radius=0.05, n_samples=200)
    smooth = [s for s in samples if s.smooth]
    inside = all(
        sd.estimate_contains(est, s.grad, tol=1e-4).verdict == "inside"
        for s in smooth
    )
    _report(7, f"all {len(smooth)} smooth oracle samples lie inside the "
               f"limiting estimate [{lo:.6f}, {hi:.6f}]",
            hull_ok and inside and len(smooth) > 0)


def test_criterion_08_weak_duality():
    ok = True
    margins = []
    p = model.builtin("kink")
    rep = wolfe.check_weak_duality(p, [[-3.0], [-2.0], [0.0], [1.0]])
    ok &= rep.passed and all(m is not None for m in rep.margins)
    margins += rep.margins
    p = model.builtin("quad")
    rng = np.random.default_rng(8)
    rep = wolfe.check_weak_duality(p, [rng.uniform(-2, 2, 2) for _ in range(20)])
    ok &= rep.passed and all(m is not None for m in rep.margins)
    margins += rep.margins
    p = model.builtin("gan2")
    xs = [XBAR + t * SDIR for t in np.linspace(-0.2, 0.2, 9)]
    rep = wolfe.check_weak_duality(p, xs)
    ok &= rep.passed and all(m is not None for m in rep.margins)
    margins += rep.margins
    _report(8, f"V <= V_D + 1e-6 on kink/quad/gan2 "
               f"(33 points, min margin {min(margins):.1e})", bool(ok))


def test_criterion_09_sosc_collapse():
    p = model.builtin("sqdist")
    rng = np.random.default_rng(17)
    ok = True
    for _ in range(20):
        x = rng.uniform(-2, 2, 2)
        for r in (0, 1):
            gens = mu.xi_set(p, x, x, np.zeros(0), r=r).generators()
            if (len(gens.vertices) != 1 or gens.rays
                    or not np.allclose(gens.vertices[0], 0.0, atol=1e-9)):
                ok = False
        est = sd.upper_estimate(p, x, "frechet", point=x)
        verts = est.all_vertices()
        if (len(verts) != 1 or est.all_rays()
                or np.linalg.norm(verts[0]) > 1e-8):
            ok = False
        _record_classes(p, x, x, np.zeros(0))
    _report(9, "SOSC collapse on sqdist: Xi^0 = Xi^1 = {0} and the "
               "single-point estimate is {0} = grad V", ok)


def test_criterion_10_conversion_soundness():
    rng = np.random.default_rng(31415)
    converted = 0
    for k in range(100):
        p, xbar, ybar, lam, _ = random_wolfe_instance(rng)
        res = st.check_wolfe_system(p, xbar, ybar, lam)
        assert res.holds, f"instance {k}: constructed system must be feasible"
        st.convert_wolfe_to_s(p, xbar, ybar, lam, res.u)  # raises on failure
        converted += 1
        if k % 10 == 0:
            _record_classes(p, xbar, ybar, lam)
    _report(10, f"Wolfe-to-S conversion verified on {converted}/100 "
                "randomized concave-quadratic instances", converted == 100)


def test_criterion_11_class_hierarchy():
    order = ("s", "m", "c", "weak")
    ok = len(HIERARCHY_RECORDS) > 0
    for rec in HIERARCHY_RECORDS:
        for stronger, weaker in zip(order, order[1:]):
            if rec[stronger] and not rec[weaker]:
                ok = False
    _report(11, f"S => M => C => weak monotone across {len(HIERARCHY_RECORDS)} "
                "recorded certificates", ok)


def test_criterion_12_polyhedral_kernel_oracle_equivalence():
    rng = np.random.default_rng(12345)
    ok = True
    for _ in range(200):
        d = int(rng.integers(1, 5))
        A = np.vstack([np.eye(d), -np.eye(d)])
        b = np.ones(2 * d)
        for _ in range(int(rng.integers(0, 7))):
            a = rng.normal(size=d)
            a /= np.linalg.norm(a)
            A = np.vstack([A, a])
            b = np.concatenate([b, [rng.uniform(-0.5, 1.0)]])
        brute = _brute_force_vertices(A, b)
        gens = ph.enumerate_generators(ph.polyhedron(d, A=A, b=b))
        if gens.rays or len(brute) != len(gens.vertices):
            ok = False
            break
        for v in brute:
            if not any(np.linalg.norm(v - w) <= 1e-6 for w in gens.vertices):
                ok = False
                break
    _report(12, "double description matches brute-force vertex enumeration "
                "on 200 random polytopes (d <= 4)", ok)


def _brute_force_vertices(A, b):
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
