"""Polyhedral multiplier sets of the inner problem and its Wolfe dual.

With the evaluation point fixed, complementarity resolves exactly: inactive
constraints force their multipliers to zero and active indices with positive
multiplier force their rows to equalities, so each set is a single
polyhedron rather than a disjunction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import polyhedra
from .model import DEFAULT_ACTIVITY_TOL, InfeasiblePoint, ParametricProblem, Point, eval_lagrangian

DUAL_FEAS_TOL = 1e-6
SNAP_TOL = 1e-9  # kill round-off in rows assembled from evaluated derivatives
BORDERLINE_FACTOR = 10.0


class NotDualFeasible(Exception):
    """(y, lam) does not satisfy grad_y L = 0, lam >= 0 within tolerance."""


@dataclass
class MultiplierSet:
    kind: str  # 'sigma' | 'm_set' | 'xi'
    r: int
    poly: polyhedra.Polyhedron
    active_set: list | None = None
    partition: tuple | None = None  # (I_0plus, I_plus0, I_00) when lam fixed
    activity_tol: float = DEFAULT_ACTIVITY_TOL
    warnings: list = field(default_factory=list)
    _generators: polyhedra.GeneratorSet | None = None

    def generators(self) -> polyhedra.GeneratorSet:
        if self._generators is None:
            self._generators = polyhedra.enumerate_generators(self.poly)
        return self._generators

    def is_empty(self):
        return polyhedra.lp_solve(self.poly).status == "empty"

    def contains(self, v, tol=1e-7):
        return self.poly.contains(v, tol=tol)


def _snap(arr, tol=SNAP_TOL):
    out = np.asarray(arr, dtype=float).copy()
    out[np.abs(out) < tol] = 0.0
    return out


def index_partition(g_values, lam, tol=DEFAULT_ACTIVITY_TOL):
    """Split constraint indices into (I_0plus, I_plus0, I_00) at (g, lam)."""
    i0p, ip0, i00 = [], [], []
    for i in range(len(g_values)):
        active = g_values[i] >= -tol
        positive = lam[i] > tol
        if active and positive:
            i0p.append(i)
        elif active:
            i00.append(i)
        else:
            ip0.append(i)
    return i0p, ip0, i00


def borderline_warnings(lam, tol=DEFAULT_ACTIVITY_TOL):
    out = []
    for i, v in enumerate(np.atleast_1d(lam)):
        if tol < v <= BORDERLINE_FACTOR * tol:
            out.append(
                f"BorderlineActivity: lam_{i+1} = {v:.3e} is within a decade "
                f"of the activity tolerance {tol:.1e}"
            )
    return out


def sigma_set(p: ParametricProblem, x, y, r: int = 1, beta_override=None,
              activity_tol: float = DEFAULT_ACTIVITY_TOL) -> MultiplierSet:
    """Multiplier polyhedron {lam : r grad_y f = (grad_y g) lam, lam >= 0,
    lam_i = 0 off the active set} at a feasible y.

    With ``beta_override`` the stationarity right-hand side r grad_y f is
    replaced by the given vector, which yields the generic multiplier set
    used by the stability analysis.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    g = p.g(x, y)
    if p.q and np.max(g) > activity_tol:
        raise InfeasiblePoint(f"g(x, y) has violation {np.max(g):.3e} > {activity_tol:.1e}")

    jy = p.jac_g_y(x, y)  # (m, q)
    if beta_override is not None:
        beta = np.asarray(beta_override, dtype=float).reshape(p.m)
        kind = "m_set"
    else:
        beta = r * p.grad_f_y(x, y)
        kind = "sigma"

    active = [i for i in range(p.q) if g[i] >= -activity_tol]
    E_rows = [_snap(jy).reshape(p.m, p.q)]  # (grad_y g) lam = beta
    c_rows = [_snap(beta)]
    for i in range(p.q):
        if i not in active:
            row = np.zeros(p.q)
            row[i] = 1.0
            E_rows.append(row[None, :])
            c_rows.append(np.zeros(1))
    E = np.vstack(E_rows)
    c = np.concatenate(c_rows)
    A = -np.eye(p.q)
    b = np.zeros(p.q)
    poly = polyhedra.Polyhedron(A, b, E, c)
    return MultiplierSet(kind=kind, r=r, poly=poly, active_set=active,
                         activity_tol=activity_tol)


def xi_set(p: ParametricProblem, x, y, lam, r: int,
           activity_tol: float = DEFAULT_ACTIVITY_TOL) -> MultiplierSet:
    """Dual-system multiplier polyhedron over u in R^m at a fixed (y, lam):

    hess_yy L(x, y, lam) u = 0, and per constraint i
      lam_i > tol:  -(grad_y g_i)^T u - r g_i = 0
      lam_i <= tol: -(grad_y g_i)^T u - r g_i >= 0.

    Zero is always a member when (y, lam) is feasible for the Wolfe dual.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    lam = np.asarray(lam, dtype=float).reshape(p.q)
    le = eval_lagrangian(p, Point(x, y, lam), 1)
    if np.min(lam, initial=0.0) < -1e-9:
        raise NotDualFeasible("lam has negative components")
    if np.linalg.norm(le.grad_y) > DUAL_FEAS_TOL:
        raise NotDualFeasible(
            f"grad_y L residual {np.linalg.norm(le.grad_y):.3e} > {DUAL_FEAS_TOL:.1e}"
        )

    g = le.g_values
    jy = le.jac_y_g
    E_rows = [_snap(le.hess_yy)]
    c_rows = [np.zeros(p.m)]
    A_rows = []
    b_rows = []
    for i in range(p.q):
        row = jy[:, i]
        if lam[i] > activity_tol:
            E_rows.append(_snap(-row)[None, :])
            c_rows.append(np.array([_snap(np.array([r * g[i]]))[0]]))
        else:
            A_rows.append(_snap(row)[None, :])  # (grad_y g_i)^T u <= -r g_i
            b_rows.append(np.array([_snap(np.array([-r * g[i]]))[0]]))
    E = np.vstack(E_rows)
    c = np.concatenate(c_rows)
    A = np.vstack(A_rows) if A_rows else np.zeros((0, p.m))
    b = np.concatenate(b_rows) if b_rows else np.zeros(0)
    poly = polyhedra.Polyhedron(A, b, E, c)
    part = index_partition(g, lam, activity_tol)
    return MultiplierSet(kind="xi", r=r, poly=poly, partition=part,
                         activity_tol=activity_tol,
                         warnings=borderline_warnings(lam, activity_tol))
