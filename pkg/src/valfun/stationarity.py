"""Stationarity-system certification for minimax candidates.

The systems are linear in their certificate variables once the point is
fixed, so each check is an LP: minimize the worst row residual t and accept
iff t falls below tolerance.  That keeps verdicts stable when the candidate
itself carries solver noise of order 1e-9.

Class hierarchy (S implies M implies C implies weak) is enforced by
construction: stronger multipliers are reused as witnesses for the weaker
classes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import numpy as np

from . import polyhedra
from .model import DEFAULT_ACTIVITY_TOL, ParametricProblem, Point, eval_lagrangian
from .multipliers import borderline_warnings, index_partition, sigma_set
from .valuefn import DEFAULT_CONFIG, solve_inner

SYSTEM_TOL = 1e-8
RESIDUAL_TOL = 1e-6
M_CLASS_EPS = 1e-8
PATTERN_LIMIT = 12
MPEC_CLASSES = ("weak", "c", "m", "s")


class NotKktPoint(Exception):
    pass


class NotMpecFeasible(Exception):
    pass


class PatternLimitExceeded(Exception):
    pass


class VerificationFailed(Exception):
    pass


@dataclass
class SystemVerdict:
    status: str  # 'holds' | 'fails' | 'not_applicable'
    multipliers: dict = field(default_factory=dict)
    residuals: dict = field(default_factory=dict)
    reason: str = ""


@dataclass
class StationarityCertificate:
    x: np.ndarray
    y: np.ndarray
    lam: np.ndarray | None
    systems: dict
    partition: dict
    tolerances: dict
    warnings: list = field(default_factory=list)

    def holds(self, name):
        v = self.systems.get(name)
        return v is not None and v.status == "holds"


# ---------------------------------------------------------------------------
# relaxed linear systems


class _LinearSystem:
    """Rows over variables z; equalities and inequalities, solved by
    minimizing the max residual t."""

    def __init__(self, nvar):
        self.nvar = nvar
        self.eq_rows = []
        self.eq_rhs = []
        self.ineq_rows = []
        self.ineq_rhs = []

    def eq(self, row, rhs):
        self.eq_rows.append(np.asarray(row, dtype=float))
        self.eq_rhs.append(float(rhs))

    def ineq(self, row, rhs):
        """row . z <= rhs"""
        self.ineq_rows.append(np.asarray(row, dtype=float))
        self.ineq_rhs.append(float(rhs))

    def solve(self, tol=SYSTEM_TOL):
        """Returns (feasible, z, worst_residual)."""
        nv = self.nvar + 1  # trailing slack t
        A_rows, b_rows = [], []
        for row, rhs in zip(self.eq_rows, self.eq_rhs):
            A_rows.append(np.concatenate([row, [-1.0]]))
            b_rows.append(rhs)
            A_rows.append(np.concatenate([-row, [-1.0]]))
            b_rows.append(-rhs)
        for row, rhs in zip(self.ineq_rows, self.ineq_rhs):
            A_rows.append(np.concatenate([row, [-1.0]]))
            b_rows.append(rhs)
        t_pos = np.zeros(nv)
        t_pos[-1] = -1.0
        A_rows.append(t_pos)
        b_rows.append(0.0)
        A = np.vstack(A_rows)
        b = np.asarray(b_rows)
        obj = np.zeros(nv)
        obj[-1] = -1.0
        res = polyhedra.lp_solve(
            polyhedra.Polyhedron(A, b, np.zeros((0, nv)), np.zeros(0)), objective=obj)
        if res.status != "optimal":
            return False, None, np.inf
        z = res.point[:-1]
        t = float(res.point[-1])
        return t <= tol, z, t


def _box_row_kind(facet):
    """Map a box facet tag to the sign of (expr + N_X) membership rows."""
    # 0 in expr + N_X(x): interior -> expr = 0; at the lower bound the
    # normal cone is nonpositive so expr >= 0; at the upper it is <= 0
    return {None: "eq", "lo": "ge", "hi": "le", "both": "free"}[facet]


def _add_box_rows(sys_, rows, rhs, facets):
    for j, facet in enumerate(facets):
        kind = _box_row_kind(facet)
        if kind == "eq":
            sys_.eq(rows[j], rhs[j])
        elif kind == "ge":
            sys_.ineq(-rows[j], -rhs[j])
        elif kind == "le":
            sys_.ineq(rows[j], rhs[j])


def _box_residuals(expr, facets):
    out = []
    for j, facet in enumerate(facets):
        kind = _box_row_kind(facet)
        if kind == "eq":
            out.append(abs(expr[j]))
        elif kind == "ge":
            out.append(max(0.0, -expr[j]))
        elif kind == "le":
            out.append(max(0.0, expr[j]))
        else:
            out.append(0.0)
    return out


def _check_kkt(p, x, y, lam, activity_tol):
    le = eval_lagrangian(p, Point(x, y, lam), 1)
    g = le.g_values
    problems = []
    if np.linalg.norm(le.grad_y) > RESIDUAL_TOL:
        problems.append(f"|grad_y L| = {np.linalg.norm(le.grad_y):.2e}")
    if p.q:
        if np.max(g) > activity_tol:
            problems.append(f"max g = {np.max(g):.2e}")
        if np.min(lam) < -1e-9:
            problems.append(f"min lam = {np.min(lam):.2e}")
        comp = np.abs(g * lam)
        if np.max(comp) > 10 * activity_tol:
            problems.append(f"complementarity defect = {np.max(comp):.2e}")
    return le, problems


# ---------------------------------------------------------------------------
# Wolfe-system optimality


@dataclass
class WolfeSystemResult:
    holds: bool
    u: np.ndarray | None = None
    residuals: dict = field(default_factory=dict)
    lp_slack: float | None = None


def check_wolfe_system(p: ParametricProblem, x, y, lam, boundary: bool = False,
                       activity_tol: float = DEFAULT_ACTIVITY_TOL,
                       tol: float = SYSTEM_TOL) -> WolfeSystemResult:
    """Solve for u in the dual-multiplier optimality system at (x, y, lam).

    Interior form: grad_x L + hess_xy L u = 0; boundary form replaces the
    x-rows by membership of the box normal cone.  Complementarity is
    resolved by the support of lam.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    lam = np.asarray(lam, dtype=float).reshape(p.q)
    le, problems = _check_kkt(p, x, y, lam, activity_tol)
    if problems:
        raise NotKktPoint("; ".join(problems))

    facets = p.x_domain.active_facets(x) if boundary else [None] * p.n
    sys_ = _LinearSystem(p.m)
    _add_box_rows(sys_, le.hess_xy, -le.grad_x, facets)
    for k in range(p.m):
        sys_.eq(le.hess_yy[k], 0.0)
    for i in range(p.q):
        row = -le.jac_y_g[:, i]
        if lam[i] > activity_tol:
            sys_.eq(row, le.g_values[i])
        else:
            sys_.ineq(-row, -le.g_values[i])
    feasible, u, slack = sys_.solve(tol)
    if not feasible:
        return WolfeSystemResult(holds=False, lp_slack=slack)

    res = _wolfe_residuals(le, u, lam, facets, activity_tol)
    return WolfeSystemResult(holds=True, u=u, residuals=res, lp_slack=slack)


def _wolfe_residuals(le, u, lam, facets, activity_tol):
    x_expr = le.grad_x + le.hess_xy @ u
    rows = _box_residuals(x_expr, facets)
    comp = []
    for i in range(lam.shape[0]):
        val = -float(le.jac_y_g[:, i] @ u) - le.g_values[i]
        if lam[i] > activity_tol:
            comp.append(abs(val))
        else:
            comp.append(max(0.0, -val))
    return {
        "x_rows": float(max(rows)) if rows else 0.0,
        "hess_yy_rows": float(np.max(np.abs(le.hess_yy @ u))) if le.hess_yy.size else 0.0,
        "complementarity": float(max(comp)) if comp else 0.0,
        "grad_y_L": float(np.linalg.norm(le.grad_y)),
    }


# ---------------------------------------------------------------------------
# MPEC stationarity


@dataclass
class MpecResult:
    holds: bool
    target: str
    u: np.ndarray | None = None
    alpha: np.ndarray | None = None
    beta: np.ndarray | None = None
    residuals: dict = field(default_factory=dict)
    pattern: tuple | None = None


def _mpec_base_system(p, le, lam, facets, free_alpha):
    """Rows of the weak-stationarity system over z = (u, alpha_free)."""
    m, n = p.m, p.n
    nf = len(free_alpha)
    sys_ = _LinearSystem(m + nf)

    def stack(u_part, alpha_part):
        row = np.zeros(m + nf)
        row[:m] = u_part
        for idx, i in enumerate(free_alpha):
            row[m + idx] = alpha_part[i]
        return row

    grad_f_x = le.grad_x + le.jac_x_g @ lam  # grad_x f
    # 0 in grad_x f + grad_x g alpha + hess_xy L u + N_X
    rows = [stack(le.hess_xy[j], le.jac_x_g[j]) for j in range(n)]
    rhs = [-grad_f_x[j] for j in range(n)]
    _add_box_rows(sys_, rows, rhs, facets)
    # grad_y f + grad_y g alpha + hess_yy L u = 0
    grad_f_y = le.grad_y + le.jac_y_g @ lam
    for k in range(m):
        sys_.eq(stack(le.hess_yy[k], le.jac_y_g[k]), -grad_f_y[k])
    return sys_


def find_mpec_multipliers(p: ParametricProblem, pt: Point, target_class: str,
                          activity_tol: float = DEFAULT_ACTIVITY_TOL,
                          eps_strict: float = M_CLASS_EPS,
                          tol: float = SYSTEM_TOL) -> MpecResult:
    """Decide ``target_class`` stationarity at an MPEC-feasible (x, y, lam).

    weak and S are single LPs; C and M enumerate sign patterns over the
    biactive set (one LP per pattern).  The M-class strict branch uses
    ``eps_strict`` in place of the strict inequality.  S-class multipliers
    are accepted as witnesses for every weaker class.
    """
    if target_class not in MPEC_CLASSES:
        raise ValueError(f"unknown target class {target_class!r}")
    x, y = pt.x, pt.y
    lam = pt.lam if pt.lam is not None else np.zeros(p.q)
    le, problems = _check_kkt(p, x, y, lam, activity_tol)
    if problems:
        raise NotMpecFeasible("; ".join(problems))

    i0p, ip0, i00 = index_partition(le.g_values, lam, activity_tol)
    if len(i00) > PATTERN_LIMIT and target_class in ("c", "m"):
        raise PatternLimitExceeded(f"|I_00| = {len(i00)} exceeds {PATTERN_LIMIT}")
    free_alpha = sorted(set(i0p) | set(i00))  # alpha_i = 0 on I_plus0
    facets = p.x_domain.active_facets(x)

    def build(extra):
        sys_ = _mpec_base_system(p, le, lam, facets, free_alpha)
        # beta_i = 0 on I_0plus: beta = -grad_y g^T u
        for i in i0p:
            row = np.zeros(p.m + len(free_alpha))
            row[: p.m] = le.jac_y_g[:, i]
            sys_.eq(row, 0.0)
        for kind, i, sign in extra:
            row = np.zeros(p.m + len(free_alpha))
            if kind == "alpha":
                row[p.m + free_alpha.index(i)] = 1.0
            else:  # beta_i = -(grad_y g_i)^T u
                row[: p.m] = -le.jac_y_g[:, i]
            if sign == "ge0":
                sys_.ineq(-row, 0.0)
            elif sign == "le0":
                sys_.ineq(row, 0.0)
            elif sign == "eq0":
                sys_.eq(row, 0.0)
            elif sign == "ge_eps":
                sys_.ineq(-row, -eps_strict)
        return sys_

    def attempt(extra, pattern=None):
        sys_ = build(extra)
        feasible, z, slack = sys_.solve(tol)
        if not feasible:
            return None
        u = z[: p.m]
        alpha = np.zeros(p.q)
        for idx, i in enumerate(free_alpha):
            alpha[i] = z[p.m + idx]
        beta = -le.jac_y_g.T @ u if p.q else np.zeros(0)
        res = _mpec_residuals(p, le, lam, u, alpha, beta, facets, (i0p, ip0, i00))
        return MpecResult(holds=True, target=target_class, u=u, alpha=alpha,
                          beta=beta, residuals=res, pattern=pattern)

    s_extra = [("alpha", i, "ge0") for i in i00] + [("beta", i, "ge0") for i in i00]

    if target_class == "weak":
        out = attempt([])
    elif target_class == "s":
        out = attempt(s_extra)
    elif target_class == "c":
        out = None
        for pattern in product(("pos", "neg"), repeat=len(i00)):
            extra = []
            for sgn, i in zip(pattern, i00):
                s = "ge0" if sgn == "pos" else "le0"
                extra.append(("alpha", i, s))
                extra.append(("beta", i, s))
            out = attempt(extra, pattern=pattern)
            if out is not None:
                break
    else:  # m: any S witness qualifies, then the three-way patterns
        out = attempt(s_extra, pattern=("s-witness",))
        if out is None:
            for pattern in product(("a0", "b0", "pp"), repeat=len(i00)):
                extra = []
                for sgn, i in zip(pattern, i00):
                    if sgn == "a0":
                        extra.append(("alpha", i, "eq0"))
                    elif sgn == "b0":
                        extra.append(("beta", i, "eq0"))
                    else:
                        extra.append(("alpha", i, "ge_eps"))
                        extra.append(("beta", i, "ge_eps"))
                out = attempt(extra, pattern=pattern)
                if out is not None:
                    break

    if out is None:
        return MpecResult(holds=False, target=target_class)
    return out


def _mpec_residuals(p, le, lam, u, alpha, beta, facets, partition):
    i0p, ip0, i00 = partition
    grad_f_x = le.grad_x + le.jac_x_g @ lam
    grad_f_y = le.grad_y + le.jac_y_g @ lam
    x_expr = grad_f_x + le.jac_x_g @ alpha + le.hess_xy @ u
    y_expr = grad_f_y + le.jac_y_g @ alpha + le.hess_yy @ u
    beta_def = beta + le.jac_y_g.T @ u if p.q else np.zeros(0)
    res = {
        "x_rows": float(max(_box_residuals(x_expr, facets), default=0.0)),
        "y_rows": float(np.max(np.abs(y_expr))) if y_expr.size else 0.0,
        "beta_definition": float(np.max(np.abs(beta_def))) if beta_def.size else 0.0,
        "alpha_on_plus0": float(max((abs(alpha[i]) for i in ip0), default=0.0)),
        "beta_on_0plus": float(max((abs(beta[i]) for i in i0p), default=0.0)),
        "grad_y_L": float(np.linalg.norm(le.grad_y)),
    }
    return res


def verify_mpec_class(p, pt, u, alpha, beta, target_class,
                      activity_tol=DEFAULT_ACTIVITY_TOL, tol=RESIDUAL_TOL,
                      eps_strict=M_CLASS_EPS):
    """Re-evaluate the stationarity rows at supplied multipliers.

    Returns (ok, residuals); raises nothing.  Used by the conversion path.
    """
    x, y = pt.x, pt.y
    lam = pt.lam if pt.lam is not None else np.zeros(p.q)
    le = eval_lagrangian(p, Point(x, y, lam), 1)
    i0p, ip0, i00 = index_partition(le.g_values, lam, activity_tol)
    facets = p.x_domain.active_facets(x)
    res = _mpec_residuals(p, le, lam, u, alpha, beta, facets, (i0p, ip0, i00))
    worst = max(res.values())
    ok = worst <= tol
    if target_class in ("c", "m", "s"):
        for i in i00:
            a, b = alpha[i], beta[i]
            if target_class == "s":
                good = a >= -tol and b >= -tol
            elif target_class == "c":
                good = a * b >= -tol * (1.0 + abs(a) + abs(b))
            else:
                good = (abs(a) <= tol or abs(b) <= tol
                        or (a >= eps_strict - tol and b >= eps_strict - tol))
            if not good:
                ok = False
                res[f"class_violation_i{i+1}"] = float(min(a, b))
    return ok, res


def convert_wolfe_to_s(p: ParametricProblem, x, y, lam, u,
                       activity_tol: float = DEFAULT_ACTIVITY_TOL):
    """Map a Wolfe-system certificate to S-stationarity multipliers
    (alpha = -lam, beta = -(grad_y g)^T u) and verify them."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    lam = np.asarray(lam, dtype=float).reshape(p.q)
    u = np.asarray(u, dtype=float).reshape(p.m)
    le = eval_lagrangian(p, Point(x, y, lam), 1)
    alpha = -lam
    beta = -le.jac_y_g.T @ u if p.q else np.zeros(0)
    ok, res = verify_mpec_class(
        p, Point(x, y, lam), u, alpha, beta, "s", activity_tol=activity_tol)
    if not ok:
        raise VerificationFailed(
            f"converted multipliers violate the S system: {res}")
    return alpha, beta, res


# ---------------------------------------------------------------------------
# aggregate certification


class NotInSolutionSet(Exception):
    pass


def _nash_verdict(p, x, y, activity_tol):
    grad_x = p.grad_f_x(x, y)
    facets = p.x_domain.active_facets(x)
    x_res = max(_box_residuals(grad_x, facets), default=0.0)

    if p.q == 0:
        on_box = any(f is not None for f in p.y_search_box.active_facets(y))
        if on_box:
            return SystemVerdict(
                status="not_applicable",
                reason="y sits on the search-box boundary; the box is a "
                       "solver device, not the feasible set",
            )
        y_res = float(np.linalg.norm(p.grad_f_y(x, y)))
        mult = {}
    else:
        sig = sigma_set(p, x, y, r=1, activity_tol=activity_tol)
        res = polyhedra.lp_solve(sig.poly)
        if res.status == "feasible":
            y_res = 0.0
            mult = {"inner_lambda": res.point.tolist()}
        else:
            # report the least-violation stationarity defect
            sys_ = _LinearSystem(p.q)
            jy = p.jac_g_y(x, y)
            gf = p.grad_f_y(x, y)
            active = p.active_set(x, y, activity_tol)
            for k in range(p.m):
                sys_.eq(jy[k], gf[k])
            for i in range(p.q):
                row = np.zeros(p.q)
                row[i] = -1.0
                sys_.ineq(row, 0.0)
                if i not in active:
                    sys_.eq(-row, 0.0)
            _, _, slack = sys_.solve(tol=np.inf)
            y_res = float(slack)
            mult = {}
    holds = x_res <= RESIDUAL_TOL and y_res <= RESIDUAL_TOL
    return SystemVerdict(
        status="holds" if holds else "fails",
        multipliers=mult,
        residuals={"x_rows": float(x_res), "y_rows": float(y_res)},
        reason="" if holds else "first-order Nash system violated",
    )


def _hull_caratheodory_verdict(p, x, solutions, activity_tol):
    grads = [p.grad_f_x(x, yv) for yv in solutions]
    facets = p.x_domain.active_facets(x)
    sys_ = _LinearSystem(len(grads))
    G = np.array(grads).T  # n x N
    rows = [G[j] for j in range(p.n)]
    rhs = [0.0] * p.n
    _add_box_rows(sys_, rows, rhs, facets)
    sys_.eq(np.ones(len(grads)), 1.0)
    for i in range(len(grads)):
        row = np.zeros(len(grads))
        row[i] = -1.0
        sys_.ineq(row, 0.0)
    feasible, w, slack = sys_.solve(SYSTEM_TOL)
    if not feasible:
        return SystemVerdict(
            status="fails",
            residuals={"lp_slack": float(slack)},
            reason="0 is outside the hull of solution gradients plus N_X",
        )
    w = np.clip(w, 0.0, None)
    if w.sum() > 0:
        w = w / w.sum()
    if p.n + 1 < len(w):
        w = polyhedra._caratheodory_reduce(np.array(grads), w, p.n + 1)
    support = [i for i in range(len(w)) if w[i] > 1e-10]
    combo = sum(w[i] * grads[i] for i in support)
    return SystemVerdict(
        status="holds",
        multipliers={
            "weights": w.tolist(),
            "support_solutions": [solutions[i].tolist() for i in support],
        },
        residuals={"x_rows": float(max(_box_residuals(combo, facets), default=0.0)),
                   "support_size": len(support)},
    )


def certify_point(p: ParametricProblem, x, y, config=None,
                  activity_tol: float = DEFAULT_ACTIVITY_TOL,
                  solve=None) -> StationarityCertificate:
    """Evaluate every applicable stationarity system at (x, y).

    y is re-verified against the inner solver's value before certifying.
    Holding verdicts carry multipliers and re-evaluated residuals; systems
    that do not apply record the reason.  No claim of local optimality is
    made: these are one-directional necessary systems.
    """
    config = config or DEFAULT_CONFIG
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    warnings = []

    rep = solve if solve is not None else solve_inner(p, x, config)
    fy = p.f(x, y)
    if p.q:
        gmax = float(np.max(p.g(x, y)))
        if gmax > activity_tol:
            raise NotInSolutionSet(f"candidate violates g by {gmax:.2e}")
    if fy < rep.value - max(10 * config.cluster_tol, 1e-6) * (1.0 + abs(rep.value)):
        raise NotInSolutionSet(
            f"f(x, y) = {fy:.9g} is below the solver value {rep.value:.9g}")

    systems = {}
    systems["nash"] = _nash_verdict(p, x, y, activity_tol)

    interior = all(f is None for f in p.x_domain.active_facets(x))
    sig = sigma_set(p, x, y, r=1, activity_tol=activity_tol)
    sig_gens = sig.generators()
    lam_vertices = sig_gens.vertices
    for ray in sig_gens.rays:
        warnings.append(
            f"unbounded multiplier direction {np.round(ray, 6).tolist()}; "
            "systems evaluated at Sigma vertices only")

    partition = {}
    lam0 = lam_vertices[0] if lam_vertices else None
    if lam0 is not None:
        i0p, ip0, i00 = index_partition(p.g(x, y), lam0, activity_tol)
        partition = {"I_0plus": [i + 1 for i in i0p],
                     "I_plus0": [i + 1 for i in ip0],
                     "I_00": [i + 1 for i in i00]}
        warnings.extend(borderline_warnings(lam0, activity_tol))

    def wolfe_entry(boundary):
        if not lam_vertices:
            return SystemVerdict(status="not_applicable",
                                 reason="no KKT multiplier at (x, y)")
        best = None
        for lv in lam_vertices:
            try:
                res = check_wolfe_system(
                    p, x, y, lv, boundary=boundary, activity_tol=activity_tol)
            except NotKktPoint as exc:
                return SystemVerdict(status="not_applicable", reason=str(exc))
            if res.holds:
                return SystemVerdict(
                    status="holds",
                    multipliers={"u": res.u.tolist(), "lam": np.asarray(lv).tolist()},
                    residuals=res.residuals,
                )
            best = res
        return SystemVerdict(
            status="fails",
            residuals={"lp_slack": best.lp_slack if best else None},
            reason="no u satisfies the system at any Sigma vertex",
        )

    if interior:
        systems["wolfe_interior"] = wolfe_entry(boundary=False)
        systems["wolfe_boundary"] = SystemVerdict(
            status="not_applicable", reason="x is interior to the domain box")
    else:
        systems["wolfe_boundary"] = wolfe_entry(boundary=True)
        systems["wolfe_interior"] = SystemVerdict(
            status="not_applicable", reason="x sits on a domain-box facet")

    # MPEC classes, strongest first, weaker classes inherit the witnesses
    mpec = {c: None for c in MPEC_CLASSES}
    if not lam_vertices:
        for c in MPEC_CLASSES:
            mpec[c] = SystemVerdict(status="not_applicable",
                                    reason="no KKT multiplier at (x, y)")
    else:
        for lv in lam_vertices:
            pt = Point(x, y, np.asarray(lv))
            found = {}
            try:
                for cls in ("s", "m", "c", "weak"):
                    res = find_mpec_multipliers(
                        p, pt, cls, activity_tol=activity_tol)
                    if res.holds:
                        found[cls] = res
                        break
            except (NotMpecFeasible, PatternLimitExceeded) as exc:
                for c in MPEC_CLASSES:
                    if mpec[c] is None:
                        mpec[c] = SystemVerdict(status="not_applicable", reason=str(exc))
                continue
            if found:
                top_cls, top = next(iter(found.items()))
                order = {"s": 3, "m": 2, "c": 1, "weak": 0}
                for c in MPEC_CLASSES:
                    if order[c] <= order[top_cls]:
                        mpec[c] = SystemVerdict(
                            status="holds",
                            multipliers={
                                "u": top.u.tolist(), "alpha": top.alpha.tolist(),
                                "beta": top.beta.tolist(),
                                "lam": np.asarray(lv).tolist(),
                                "witness_class": top_cls,
                            },
                            residuals=top.residuals,
                        )
                if top_cls == "s":
                    break
        for c in MPEC_CLASSES:
            if mpec[c] is None:
                mpec[c] = SystemVerdict(status="fails",
                                        reason="no multipliers found at any Sigma vertex")
    for c in MPEC_CLASSES:
        systems[f"mpec_{c}"] = mpec[c]

    systems["hull_caratheodory"] = _hull_caratheodory_verdict(
        p, x, rep.solutions, activity_tol)

    _assert_hierarchy(systems)
    return StationarityCertificate(
        x=x, y=y, lam=np.asarray(lam0) if lam0 is not None else None,
        systems=systems, partition=partition,
        tolerances={
            "activity_tol": activity_tol, "system_tol": SYSTEM_TOL,
            "residual_tol": RESIDUAL_TOL, "m_class_eps": M_CLASS_EPS,
        },
        warnings=warnings,
    )


def _assert_hierarchy(systems):
    order = ["mpec_s", "mpec_m", "mpec_c", "mpec_weak"]
    state = [systems[k].status for k in order]
    for stronger, weaker in zip(order, order[1:]):
        if systems[stronger].status == "holds" and systems[weaker].status == "fails":
            raise AssertionError(
                f"stationarity hierarchy violated: {stronger} holds but "
                f"{weaker} fails ({state})")
