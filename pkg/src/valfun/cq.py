"""Constraint-qualification verdicts.

Three gradient families are supported for LICQ: the inner problem's active
constraints (gradients in y), the Wolfe-dual constraint system
grad_y L = 0, lam >= 0 (gradients in the joint (x, y, lam) space), and the
branch system of the KKT-reformulated minimax problem.  MFCQ is decided by
linear programming, and constant-rank behaviour is probed on samples only:
a neighborhood-quantified definition can honestly earn at most a
'holds_on_samples' verdict.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import polyhedra
from .model import DEFAULT_ACTIVITY_TOL, InfeasiblePoint, ParametricProblem, Point, eval_lagrangian
from .multipliers import DUAL_FEAS_TOL, index_partition

RANK_TOL = 1e-8
MAX_ACTIVE_FOR_SUBSETS = 12


class UnsupportedActiveSet(Exception):
    """Subset enumeration is capped at |I_g| <= 12 (4096 subsets)."""


@dataclass
class CQReport:
    kind: str
    verdict: str  # 'holds' | 'fails' | 'holds_on_samples'
    evidence: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)


def _null_combination(rows):
    """Nonzero xi with sum_i xi_i * rows[i] = 0 (unit norm), or None."""
    R = np.asarray(rows, dtype=float)
    if R.shape[0] == 0:
        return None
    u, s, _ = np.linalg.svd(R)
    smax = s[0] if s.size else 0.0
    if smax == 0.0:
        xi = np.zeros(R.shape[0])
        xi[0] = 1.0
        return xi
    rk = int(np.sum(s > RANK_TOL * smax))
    if rk >= R.shape[0]:
        return None
    xi = u[:, rk]
    return xi / np.linalg.norm(xi)


def _check_inner_feasible(p, x, y, tol):
    if p.q:
        g = p.g(x, y)
        if np.max(g) > tol:
            raise InfeasiblePoint(f"g violation {np.max(g):.3e} > {tol:.1e}")


def _dual_system_rows(p, x, y, lam):
    """Gradients (rows) of the system grad_y L = 0 plus active bounds
    lam_i = 0, with respect to the stacked variables (x, y, lam)."""
    le = eval_lagrangian(p, Point(x, y, lam), 1)
    N = p.n + p.m + p.q
    rows = []
    labels = []
    for k in range(p.m):
        row = np.zeros(N)
        row[: p.n] = le.hess_xy[:, k]
        row[p.n: p.n + p.m] = le.hess_yy[:, k]
        row[p.n + p.m:] = -le.jac_y_g[k, :]
        rows.append(row)
        labels.append(f"grad_y_L[{k+1}]")
    return rows, labels, le


def check_licq(p: ParametricProblem, pt: Point, system: str,
               activity_tol: float = DEFAULT_ACTIVITY_TOL) -> CQReport:
    """LICQ verdict for one of the three supported constraint systems.

    ``inner`` uses gradients in y of the active g_i; ``dual_system`` and
    ``mpec_branch`` use gradients in the joint (x, y, lam) variables.  The
    verdict holds iff the numerical rank equals the family size; a failure
    carries a unit-norm nonzero combination as witness.
    """
    x, y = pt.x, pt.y
    if system == "inner":
        _check_inner_feasible(p, x, y, activity_tol)
        active = p.active_set(x, y, activity_tol)
        jy = p.jac_g_y(x, y)
        rows = [jy[:, i] for i in active]
        labels = [f"grad_y g{i+1}" for i in active]
    elif system == "dual_system":
        lam = pt.lam if pt.lam is not None else np.zeros(p.q)
        le = eval_lagrangian(p, Point(x, y, lam), 1)
        if np.linalg.norm(le.grad_y) > DUAL_FEAS_TOL or np.min(lam, initial=0.0) < -1e-9:
            raise InfeasiblePoint("point is not feasible for the dual constraint system")
        rows, labels, le = _dual_system_rows(p, x, y, lam)
        N = p.n + p.m + p.q
        for i in range(p.q):
            if lam[i] <= activity_tol:
                row = np.zeros(N)
                row[p.n + p.m + i] = 1.0
                rows.append(row)
                labels.append(f"lam{i+1} = 0")
    elif system == "mpec_branch":
        lam = pt.lam if pt.lam is not None else np.zeros(p.q)
        le = eval_lagrangian(p, Point(x, y, lam), 1)
        comp_ok = (
            np.linalg.norm(le.grad_y) <= DUAL_FEAS_TOL
            and np.min(lam, initial=0.0) >= -1e-9
            and (p.q == 0 or np.max(le.g_values) <= activity_tol)
        )
        if not comp_ok:
            raise InfeasiblePoint("point is not feasible for the MPEC branch system")
        rows, labels, le = _dual_system_rows(p, x, y, lam)
        N = p.n + p.m + p.q
        i0p, ip0, i00 = index_partition(le.g_values, lam, activity_tol)
        for j, facet in enumerate(p.x_domain.active_facets(x)):
            if facet is not None:
                row = np.zeros(N)
                row[j] = 1.0
                rows.append(row)
                labels.append(f"x{j+1} box facet")
        for i in sorted(set(i0p) | set(i00)):
            row = np.zeros(N)
            row[: p.n] = le.jac_x_g[:, i]
            row[p.n: p.n + p.m] = le.jac_y_g[:, i]
            rows.append(row)
            labels.append(f"g{i+1} = 0")
        for i in sorted(set(ip0) | set(i00)):
            row = np.zeros(N)
            row[p.n + p.m + i] = 1.0
            rows.append(row)
            labels.append(f"lam{i+1} = 0")
    else:
        raise ValueError(f"unknown system {system!r}")

    size = len(rows)
    if size == 0:
        return CQReport(kind=f"licq_{system}", verdict="holds",
                        evidence={"family_size": 0, "rank": 0, "note": "empty family"},
                        tolerances={"rank_tol": RANK_TOL, "activity_tol": activity_tol})
    R = np.vstack(rows)
    rk = polyhedra.rank(R, tol=RANK_TOL)
    if rk == size:
        return CQReport(kind=f"licq_{system}", verdict="holds",
                        evidence={"family_size": size, "rank": rk, "labels": labels},
                        tolerances={"rank_tol": RANK_TOL, "activity_tol": activity_tol})
    xi = _null_combination(R)
    return CQReport(
        kind=f"licq_{system}", verdict="fails",
        evidence={"family_size": size, "rank": rk, "labels": labels,
                  "witness_combination": xi.tolist() if xi is not None else None},
        tolerances={"rank_tol": RANK_TOL, "activity_tol": activity_tol},
    )


def check_mfcq(p: ParametricProblem, x, y,
               activity_tol: float = DEFAULT_ACTIVITY_TOL) -> CQReport:
    """MFCQ fails iff some nonzero lam >= 0 supported on the active set has
    (grad_y g) lam = 0; decided by maximizing sum(lam) under sum(lam) <= 1."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    _check_inner_feasible(p, x, y, activity_tol)
    active = p.active_set(x, y, activity_tol)
    tols = {"activity_tol": activity_tol, "lp_tol": 1e-7}
    if not active:
        return CQReport(kind="mfcq", verdict="holds",
                        evidence={"note": "no active constraints"}, tolerances=tols)

    jy = p.jac_g_y(x, y)
    q = p.q
    E_rows = [jy]
    c_rows = [np.zeros(p.m)]
    for i in range(q):
        if i not in active:
            row = np.zeros(q)
            row[i] = 1.0
            E_rows.append(row[None, :])
            c_rows.append(np.zeros(1))
    A = np.vstack([-np.eye(q), np.ones((1, q))])
    b = np.concatenate([np.zeros(q), [1.0]])
    poly = polyhedra.Polyhedron(A, b, np.vstack(E_rows), np.concatenate(c_rows))
    obj = np.zeros(q)
    obj[active] = 1.0
    res = polyhedra.lp_solve(poly, objective=obj)
    if res.status == "optimal" and res.value > 1e-7:
        lam = np.clip(res.point, 0.0, None)
        lam = lam / np.linalg.norm(lam)
        return CQReport(
            kind="mfcq", verdict="fails",
            evidence={"witness_lambda": lam.tolist(),
                      "witness_residual": float(np.linalg.norm(jy @ lam))},
            tolerances=tols,
        )
    return CQReport(kind="mfcq", verdict="holds",
                    evidence={"lp_optimum": float(res.value) if res.status == "optimal" else 0.0},
                    tolerances=tols)


def check_crcq_sampled(p: ParametricProblem, x, y, radius: float, n_samples: int,
                       seed: int = 0,
                       activity_tol: float = DEFAULT_ACTIVITY_TOL) -> CQReport:
    """Constant-rank probe: every subset of the active family must keep its
    rank at ``n_samples`` uniform draws from the radius-ball around (x, y).

    The verdict is deliberately 'holds_on_samples', never 'holds'.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    _check_inner_feasible(p, x, y, activity_tol)
    active = p.active_set(x, y, activity_tol)
    tols = {"activity_tol": activity_tol, "rank_tol": RANK_TOL,
            "radius": radius, "n_samples": n_samples}
    if not active:
        return CQReport(kind="crcq_sampled", verdict="holds_on_samples",
                        evidence={"note": "no active constraints"}, tolerances=tols)
    if len(active) > MAX_ACTIVE_FOR_SUBSETS:
        raise UnsupportedActiveSet(
            f"active set of size {len(active)} exceeds the subset cap "
            f"({MAX_ACTIVE_FOR_SUBSETS})"
        )

    rng = np.random.default_rng(seed)
    dim = p.n + p.m
    subsets = []
    for mask in range(1, 2 ** len(active)):
        subsets.append([active[i] for i in range(len(active)) if mask >> i & 1])

    def ranks_at(xx, yy):
        jy = p.jac_g_y(xx, yy)
        return {tuple(s): polyhedra.rank(jy[:, s].T, tol=RANK_TOL) for s in subsets}

    base = ranks_at(x, y)
    for k in range(n_samples):
        direction = rng.normal(size=dim)
        direction /= np.linalg.norm(direction)
        rho = radius * rng.random() ** (1.0 / dim)
        dx = direction[: p.n] * rho
        dy = direction[p.n:] * rho
        sample_ranks = ranks_at(x + dx, y + dy)
        for s in subsets:
            key = tuple(s)
            if sample_ranks[key] != base[key]:
                return CQReport(
                    kind="crcq_sampled", verdict="fails",
                    evidence={
                        "witness_subset": [i + 1 for i in s],
                        "rank_center": base[key],
                        "rank_sample": sample_ranks[key],
                        "sample_x": (x + dx).tolist(),
                        "sample_y": (y + dy).tolist(),
                        "sample_index": k,
                    },
                    tolerances=tols,
                )
    return CQReport(kind="crcq_sampled", verdict="holds_on_samples",
                    evidence={"subsets_checked": len(subsets)}, tolerances=tols)
