"""Wolfe dual of the inner problem and the weak-duality check.

The dual minimizes L(x, y, lam) over grad_y L = 0, lam >= 0.  A local
penalized method can only certify an upper bound on the dual value, so the
reported number is labelled best-found; the weak duality test
V(x) <= V_D(x) + tol remains valid because V <= V_D <= best-found whenever
the primal value is grid-certified.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import exprlang
from .model import ParametricProblem, Point, eval_lagrangian
from .valuefn import DEFAULT_CONFIG, SolverConfig, _spd_solve, solve_inner

DUAL_GRAD_TOL = 1e-8
UNBOUNDED_GUARD = -1e8
PENALTY_ROUNDS = 6
PENALTY_GROWTH = 10.0


class NoConvergedStart(Exception):
    """No start reached grad_y L = 0 within tolerance."""


@dataclass
class DualProblem:
    """View of the Wolfe dual (D_x): variables (y, lam) in R^(m+q)."""

    problem: ParametricProblem

    def objective(self, x, y, lam):
        return eval_lagrangian(self.problem, Point(x, y, lam), 1).value

    def constraint_residual(self, x, y, lam):
        le = eval_lagrangian(self.problem, Point(x, y, lam), 1)
        return float(np.linalg.norm(le.grad_y)), float(max(0.0, -np.min(lam, initial=0.0)))


@dataclass
class DualValueResult:
    value: float
    y: np.ndarray
    lam: np.ndarray
    kkt_residual: float
    n_converged: int
    possibly_unbounded: bool = False
    label: str = "best-found"


def _polish_dual_feasibility(p, x, y, lam, iters=60):
    """Gauss-Newton on grad_y L(x, y, lam) = 0 over (y, lam >= 0).

    Clipping lam at zero can halve the residual instead of zeroing it, so
    the loop runs until the residual stops improving at ~1e-13.
    """
    y = y.copy()
    lam = np.clip(lam, 0.0, None)
    for _ in range(iters):
        le = eval_lagrangian(p, Point(x, y, lam), 1)
        r = le.grad_y
        nr = np.linalg.norm(r)
        if nr <= 1e-13:
            break
        # Jacobian of grad_y L wrt (y, lam)
        J = np.hstack([le.hess_yy, -le.jac_y_g]) if p.q else le.hess_yy
        JJt = J @ J.T + 1e-14 * np.eye(p.m)
        try:
            step = -J.T @ np.linalg.solve(JJt, r)
        except np.linalg.LinAlgError:
            break
        y2 = y + step[: p.m]
        lam2 = np.clip(lam + step[p.m:], 0.0, None) if p.q else lam
        le2 = eval_lagrangian(p, Point(x, y2, lam2), 1)
        if np.linalg.norm(le2.grad_y) >= nr * (1.0 - 1e-12):
            break
        y, lam = y2, lam2
    return y, lam


def _descend_penalized(p, x, y, lam, config):
    """Minimize L + mu |grad_y L|^2 over (y, lam >= 0), mu increasing."""
    box = p.y_search_box
    ylo = box.lo - (box.hi - box.lo)  # widened box keeps the local method sane
    yhi = box.hi + (box.hi - box.lo)
    lam_hi = 1e6
    mu = 10.0
    best_dip = 0.0
    for _ in range(PENALTY_ROUNDS):
        eta = 1.0
        for _ in range(config.max_iter):
            try:
                le = eval_lagrangian(p, Point(x, y, lam), 1)
            except exprlang.DomainError:
                break
            r = le.grad_y
            phi = le.value + mu * float(r @ r)
            grad_y_phi = le.grad_y + 2.0 * mu * (le.hess_yy @ r)
            if p.q:
                grad_l_phi = -le.g_values - 2.0 * mu * (le.jac_y_g.T @ r)
            else:
                grad_l_phi = np.zeros(0)
            gnorm2 = float(grad_y_phi @ grad_y_phi) + float(grad_l_phi @ grad_l_phi)
            if gnorm2 <= 1e-24 * (1.0 + phi * phi):
                break
            step = eta
            moved = False
            while step > 1e-16:
                y2 = np.clip(y - step * grad_y_phi, ylo, yhi)
                lam2 = np.clip(lam - step * grad_l_phi, 0.0, lam_hi) if p.q else lam
                try:
                    le2 = eval_lagrangian(p, Point(x, y2, lam2), 1)
                except exprlang.DomainError:
                    step *= 0.25
                    continue
                r2 = le2.grad_y
                phi2 = le2.value + mu * float(r2 @ r2)
                if phi2 < phi - 1e-16 * (1.0 + abs(phi)):
                    y, lam = y2, lam2
                    eta = min(step * 2.0, 1e4)
                    moved = True
                    best_dip = min(best_dip, phi2)
                    break
                step *= 0.25
            if not moved:
                break
        mu *= PENALTY_GROWTH
    return y, lam, best_dip


def dual_value(p: ParametricProblem, x, config: SolverConfig | None = None,
               solve_report=None, extra_seeds=None) -> DualValueResult:
    """Best-found value of the Wolfe dual at x.

    Seeds are the inner solver's KKT pairs, optional extra (y, lam) pairs,
    and random draws.  Each start is penalized-descended and then polished
    back onto grad_y L = 0; the minimum over converged starts is returned.
    """
    config = config or DEFAULT_CONFIG
    x = np.asarray(x, dtype=float)
    rng = np.random.default_rng(config.seed)

    seeds = []
    if solve_report is None:
        solve_report = solve_inner(p, x, config)
    for y, lam in zip(solve_report.solutions, solve_report.multipliers):
        seeds.append((np.asarray(y, dtype=float), np.asarray(lam, dtype=float)))
    for pair in extra_seeds or []:
        seeds.append((np.asarray(pair[0], dtype=float), np.asarray(pair[1], dtype=float)))
    for _ in range(max(1, config.n_starts)):
        seeds.append((p.y_search_box.sample(rng), rng.random(p.q) * 2.0))

    best = None
    n_converged = 0
    possibly_unbounded = False
    for y0, lam0 in seeds:
        y, lam, dip = _descend_penalized(p, x, y0.copy(), lam0.copy(), config)
        if dip < UNBOUNDED_GUARD:
            possibly_unbounded = True
        y, lam = _polish_dual_feasibility(p, x, y, lam)
        le = eval_lagrangian(p, Point(x, y, lam), 1)
        res = float(np.linalg.norm(le.grad_y))
        if res > DUAL_GRAD_TOL or np.min(lam, initial=0.0) < -1e-8:
            continue
        n_converged += 1
        if best is None or le.value < best[0]:
            best = (le.value, y, lam, res)

    if best is None:
        raise NoConvergedStart(
            f"no start satisfied |grad_y L| <= {DUAL_GRAD_TOL:.1e} at x = {x.tolist()}"
        )
    value, y, lam, res = best
    return DualValueResult(
        value=float(value), y=y, lam=lam, kkt_residual=res,
        n_converged=n_converged, possibly_unbounded=possibly_unbounded,
    )


@dataclass
class WeakDualityReport:
    xs: list
    primal_values: list
    dual_values: list
    margins: list  # V_D - V, should be >= -tol
    tol: float
    passed: bool
    notes: list = field(default_factory=list)


def check_weak_duality(p: ParametricProblem, xs, config: SolverConfig | None = None,
                       tol: float = 1e-6) -> WeakDualityReport:
    """Check V(x) <= V_D(x) + tol over a list of parameter points.

    Requires the concave_in_y flag (the hypothesis of weak duality); any
    negative margin beyond tolerance is a hard failure of solver or flags.
    """
    if not p.flags.concave_in_y:
        raise ValueError("weak duality requires the concave_in_y flag")
    config = config or DEFAULT_CONFIG
    primal, dual, margins, notes = [], [], [], []
    passed = True
    for x in xs:
        rep = solve_inner(p, x, config)
        v = rep.value
        try:
            d = dual_value(p, x, config, solve_report=rep)
        except NoConvergedStart:
            primal.append(v)
            dual.append(None)
            margins.append(None)
            notes.append(f"x = {np.asarray(x).tolist()}: dual has no converged start")
            continue
        primal.append(v)
        dual.append(d.value)
        margins.append(d.value - v)
        if d.value - v < -tol:
            passed = False
    return WeakDualityReport(
        xs=[np.asarray(x, dtype=float) for x in xs],
        primal_values=primal, dual_values=dual, margins=margins,
        tol=tol, passed=passed, notes=notes,
    )
