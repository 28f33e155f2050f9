"""Inner maximization: V(x), the approximate solution set, and the
finite-difference subgradient oracle.

Global inner maximization is undecidable in general; the approximate
solution set computed here is grid-seeded multi-start projected-gradient
ascent inside the finite search box.  Downstream certificates are validated
on problems where that surrogate is provably exact (concave in y, or the
solution is known in closed form).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import exprlang
from .model import DEFAULT_ACTIVITY_TOL, ParametricProblem


class NoFeasiblePoint(Exception):
    """The seed grid produced no point with g <= activity_tol."""


@dataclass(frozen=True)
class SolverConfig:
    n_starts: int = 8
    grid_density: int = 9
    max_iter: int = 300
    seed: int = 0
    cluster_tol: float = 1e-4
    value_tol: float = 1e-6
    max_clusters: int = 16
    activity_tol: float = DEFAULT_ACTIVITY_TOL
    stat_tol: float = 1e-9


DEFAULT_CONFIG = SolverConfig()


@dataclass
class SolveReport:
    x: np.ndarray
    value: float
    solutions: list
    kkt_residuals: list
    multipliers: list
    diagnostics: dict = field(default_factory=dict)


def _grid_seeds(box, density):
    axes = [np.linspace(box.lo[j], box.hi[j], density) for j in range(box.dim)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    if pts.shape[0] > 4096:
        pts = pts[:: pts.shape[0] // 4096 + 1]
    return pts


def _safe_f(p, x, y):
    try:
        v = p.f(x, y)
    except exprlang.DomainError:
        return -np.inf
    return v if np.isfinite(v) else -np.inf


def _spd_solve(H, rhs):
    """Solve H s = rhs for tiny SPD H without LAPACK overhead."""
    m = H.shape[0]
    if m == 1:
        return rhs / H[0, 0]
    if m == 2:
        det = H[0, 0] * H[1, 1] - H[0, 1] * H[1, 0]
        if det == 0.0:
            return rhs
        return np.array([
            (H[1, 1] * rhs[0] - H[0, 1] * rhs[1]) / det,
            (H[0, 0] * rhs[1] - H[1, 0] * rhs[0]) / det,
        ])
    return np.linalg.solve(H, rhs)


PROJ_TOL = 1e-10  # projection accuracy; well below stat_tol so pinned
# iterates do not creep on penalty slack


def _penalty_project(p, x, z, tol=PROJ_TOL):
    """Approximate projection of z onto {g(x, .) <= 0} within the search box.

    Damped Gauss-Newton on 0.5|w - z|^2 + mu * sum max(g_i, 0)^2, with mu
    growing geometrically until the violation drops below ``tol``.  The
    line search matters: undamped steps diverge on curved constraints.
    """
    box = p.y_search_box
    w = box.clip(z)
    g = p.g(x, w)
    if g.size == 0 or np.max(g) <= tol:
        return w
    eye = np.eye(p.m)

    def psi(w_, mu_):
        gv = np.clip(p.g(x, w_), 0.0, None)
        diff = w_ - z
        return 0.5 * float(diff @ diff) + mu_ * float(gv @ gv)

    # a penalty weight of order violation / tol pushes the residual below
    # tol in one solve for near-affine constraints
    mu = max(1e4, 4.0 * float(np.max(g)) / tol)
    for _ in range(4):
        val = psi(w, mu)
        for _ in range(30):
            g = p.g(x, w)
            viol = np.where(g > 0)[0]
            if viol.size == 0 or np.max(g) <= 0.5 * tol:
                break
            J = p.jac_g_y(x, w)[:, viol]
            r = g[viol]
            grad = (w - z) + 2.0 * mu * (J @ r)
            H = eye + 2.0 * mu * (J @ J.T)
            step = _spd_solve(H, -grad)
            if float(step @ step) <= 1e-30 * (1.0 + float(w @ w)):
                break
            t = 1.0
            improved = False
            while t > 1e-12:
                w2 = box.clip(w + t * step)
                val2 = psi(w2, mu)
                if val2 < val:
                    w, val = w2, val2
                    improved = True
                    break
                t *= 0.5
            if not improved:
                break
        g = p.g(x, w)
        if np.max(g) <= tol:
            return w
        mu *= 1e4
    return w


def _project(p, x, z, tol=PROJ_TOL):
    if p.q == 0:
        return p.y_search_box.clip(z)
    w = p.y_search_box.clip(z)
    try:
        if np.max(p.g(x, w)) <= tol:
            return w
    except exprlang.DomainError:
        pass
    return _penalty_project(p, x, w, tol)


def _restore_feasibility(p, x, y, iters=8):
    """Push tiny outward constraint violations (from the penalty projection)
    to ~1e-12 with Gauss-Newton steps; keeps the reported value from
    overshooting the true maximum."""
    if p.q == 0:
        return p.y_search_box.clip(y)
    w = y.copy()
    for _ in range(iters):
        g = p.g(x, w)
        viol = np.where(g > 1e-13)[0]
        if viol.size == 0:
            break
        J = p.jac_g_y(x, w)[:, viol]
        r = g[viol] + 1e-14
        try:
            delta = -J @ np.linalg.solve(J.T @ J + 1e-14 * np.eye(viol.size), r)
        except np.linalg.LinAlgError:
            break
        w2 = p.y_search_box.clip(w + delta)
        if np.max(p.g(x, w2)) >= np.max(g):
            break
        w = w2
    return w


def _ascend(p, x, y0, config):
    """Projected gradient ascent with step doubling and Armijo backtracking.
    Returns (y, f(y), iterations)."""
    y = _project(p, x, y0)
    fy = _safe_f(p, x, y)
    if not np.isfinite(fy):
        return y, fy, 0
    eta = 1.0
    it = 0
    stat2 = config.stat_tol ** 2
    stall = 0
    history = [fy]
    for it in range(1, config.max_iter + 1):
        try:
            grad = p.grad_f_y(x, y)
        except exprlang.DomainError:
            break
        if not np.all(np.isfinite(grad)):
            break
        step = max(eta, 1.0)
        moved = False
        while step > 1e-16:
            cand = _project(p, x, y + step * grad)
            move = cand - y
            move2 = float(move @ move)
            if step >= 1.0 and move2 <= stat2 * (1.0 + float(y @ y)):
                # natural residual at a unit-or-larger probe step is tiny
                return y, fy, it
            fc = _safe_f(p, x, cand)
            gain = fc - fy
            if gain > 1e-4 * float(grad @ move) and gain > 0.0:
                negligible = (gain <= 1e-14 * (1.0 + abs(fy))
                              or move2 <= 1e-16 * (1.0 + float(y @ y)))
                stall = stall + 1 if negligible else 0
                y, fy = cand, fc
                eta = min(step * 2.0, 1e3)
                moved = True
                break
            step *= 0.25
        history.append(fy)
        if not moved or stall >= 2:
            break
        if len(history) > 10 and fy - history[-11] <= 1e-12 * (1.0 + abs(fy)):
            break
    return y, fy, it


def _kkt_residual(p, x, y, activity_tol):
    """Stationarity residual and least-violation multipliers at y.

    q = 0: natural residual of the box-projected gradient.  q > 0: the
    minimum over lam >= 0 (supported on the active set) of the sup-norm
    stationarity defect, plus any feasibility violation.
    """
    from . import polyhedra  # local import to avoid a cycle at module load

    grad = p.grad_f_y(x, y)
    if p.q == 0:
        res = float(np.linalg.norm(p.y_search_box.clip(y + grad) - y))
        return res, np.zeros(0)
    g = p.g(x, y)
    active = [i for i in range(p.q) if g[i] >= -activity_tol]
    feas_viol = float(max(0.0, np.max(g)))
    if not active:
        return float(np.linalg.norm(grad)) + feas_viol, np.zeros(p.q)
    jy = p.jac_g_y(x, y)[:, active]
    k = len(active)
    nvar = k + 1  # lam_active, t
    A_rows = [
        np.hstack([jy, -np.ones((p.m, 1))]),
        np.hstack([-jy, -np.ones((p.m, 1))]),
        -np.eye(nvar),
    ]
    b_rows = [grad, -grad, np.zeros(nvar)]
    poly = polyhedra.Polyhedron(np.vstack(A_rows), np.concatenate(b_rows),
                                np.zeros((0, nvar)), np.zeros(0))
    obj = np.zeros(nvar)
    obj[-1] = -1.0
    res = polyhedra.lp_solve(poly, objective=obj)
    lam = np.zeros(p.q)
    if res.status == "optimal":
        t = float(res.point[-1])
        for idx, i in enumerate(active):
            lam[i] = max(0.0, float(res.point[idx]))
        return t + feas_viol, lam
    return float(np.linalg.norm(grad)) + feas_viol, lam


def _select_clusters(reps, max_clusters):
    """Keep at most max_clusters representatives, prioritizing coordinate
    extremes then spreading by farthest-point sampling."""
    if len(reps) <= max_clusters:
        return reps
    ys = np.array([r[0] for r in reps])
    chosen = []
    for j in range(ys.shape[1]):
        for idx in (int(np.argmin(ys[:, j])), int(np.argmax(ys[:, j]))):
            if idx not in chosen:
                chosen.append(idx)
    while len(chosen) < max_clusters:
        best_idx, best_dist = -1, -1.0
        for i in range(len(reps)):
            if i in chosen:
                continue
            dmin = min(np.linalg.norm(ys[i] - ys[j]) for j in chosen)
            if dmin > best_dist:
                best_dist, best_idx = dmin, i
        chosen.append(best_idx)
    chosen = chosen[:max_clusters]
    return [reps[i] for i in sorted(chosen)]


def solve_inner(p: ParametricProblem, x, config: SolverConfig | None = None) -> SolveReport:
    """Estimate V(x) and the maximizer set by multi-start projected ascent.

    Seeds are a uniform grid of the search box plus random starts; converged
    points within ``value_tol`` of the best value are clustered with merge
    radius ``cluster_tol``.  Deterministic for a fixed config.
    """
    config = config or DEFAULT_CONFIG
    x = np.asarray(x, dtype=float)
    if not p.x_domain.contains(x):
        raise ValueError("x outside the problem's x_domain")
    rng = np.random.default_rng(config.seed)

    seeds = list(_grid_seeds(p.y_search_box, config.grid_density))
    for _ in range(max(1, config.n_starts)):
        seeds.append(p.y_search_box.sample(rng))

    tol = config.activity_tol
    any_feasible = False
    for s in seeds:
        try:
            g = p.g(x, s)
        except exprlang.DomainError:
            continue
        if p.q == 0 or np.max(g) <= tol:
            any_feasible = True
            break
    if not any_feasible:
        # infeasible seeds are still projected below, but an entirely
        # infeasible grid means the feasible region eluded the search box
        raise NoFeasiblePoint(
            f"no grid seed satisfies g <= {tol:.1e} at x = {x.tolist()}"
        )

    # project the seeds first and drop duplicates; on constrained problems
    # many grid points collapse onto the same boundary point
    projected = []
    for s in seeds:
        try:
            w = _project(p, x, s)
        except exprlang.DomainError:
            continue
        if all(float((w - v) @ (w - v)) > 1e-12 for v in projected):
            projected.append(w)

    results = []
    total_iters = 0
    for s in projected:
        y, fy, its = _ascend(p, x, s, config)
        total_iters += its
        if not np.isfinite(fy):
            continue
        y = _restore_feasibility(p, x, y)
        results.append((y, _safe_f(p, x, y)))

    if not results:
        raise NoFeasiblePoint("no start converged to a finite value")

    best = max(fv for _, fv in results)
    near = [(y, fv) for y, fv in results if fv >= best - config.value_tol]
    near.sort(key=lambda t: (-t[1], tuple(np.round(t[0], 12))))

    reps = []
    for y, fv in near:
        if all(np.linalg.norm(y - ry) >= config.cluster_tol for ry, _ in reps):
            reps.append((y, fv))
    reps = _select_clusters(reps, config.max_clusters)

    solutions = [y for y, _ in reps]
    residuals = []
    multipliers = []
    for y in solutions:
        r, lam = _kkt_residual(p, x, y, tol)
        residuals.append(r)
        multipliers.append(lam)

    return SolveReport(
        x=x,
        value=float(best),
        solutions=solutions,
        kkt_residuals=residuals,
        multipliers=multipliers,
        diagnostics={
            "starts": len(seeds),
            "iterations": total_iters,
            "converged": len(results),
            "seed": config.seed,
        },
    )


def value(p: ParametricProblem, x, config: SolverConfig | None = None) -> float:
    return solve_inner(p, x, config).value


@dataclass
class OracleSample:
    x: np.ndarray
    grad: np.ndarray
    score: float
    smooth: bool


def numeric_subdiff_oracle(p: ParametricProblem, x, radius: float, n_samples: int,
                           h: float = 1e-5, config: SolverConfig | None = None,
                           seed: int | None = None) -> list[OracleSample]:
    """Sampled finite-difference gradients of V near x.

    At each of ``n_samples`` points in the radius-ball, estimates grad V by
    central differences of :func:`value` with step ``h``.  The smoothness
    score is the worst forward/backward disagreement; samples scoring above
    ``10 * h`` are flagged nonsmooth (and excluded from downstream inclusion
    tests).
    """
    if radius <= 0 or h <= 0:
        raise ValueError("radius and h must be positive")
    config = config or DEFAULT_CONFIG
    x = np.asarray(x, dtype=float)
    rng = np.random.default_rng(config.seed if seed is None else seed)
    n = p.n
    out = []
    for _ in range(n_samples):
        direction = rng.normal(size=n)
        direction /= np.linalg.norm(direction)
        xj = x + radius * rng.random() ** (1.0 / n) * direction
        xj = np.clip(xj, p.x_domain.lo, p.x_domain.hi)
        v0 = value(p, xj, config)
        grad = np.zeros(n)
        score = 0.0
        for k in range(n):
            e = np.zeros(n)
            e[k] = h
            vp = value(p, xj + e, config)
            vm = value(p, xj - e, config)
            grad[k] = (vp - vm) / (2.0 * h)
            fwd = (vp - v0) / h
            bwd = (v0 - vm) / h
            score = max(score, abs(fwd - bwd))
        out.append(OracleSample(x=xj, grad=grad, score=score, smooth=score <= 10.0 * h))
    return out


def smooth_gradients(samples):
    return [s.grad for s in samples if s.smooth]


def with_seed(config: SolverConfig, seed: int) -> SolverConfig:
    return replace(config, seed=seed)
