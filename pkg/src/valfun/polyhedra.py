"""Dense polyhedral kernel: rank, LP, generator enumeration, hull tests.

Everything here is tolerance-based floating point; the sets that show up in
the sensitivity analysis live in dimension <= q or <= m, both tiny at desk
scale, so dense tableaus and the double description method are plenty.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

FEAS_TOL = 1e-8
PIVOT_TOL = 1e-10
MAX_PIVOTS = 10**6
DD_TOL = 1e-9


class CycleGuardExceeded(Exception):
    """Simplex pivot budget exhausted; signals numerical trouble."""


class DimensionTooLarge(Exception):
    """Generator enumeration is guarded to dimension <= 8."""


@dataclass
class Polyhedron:
    """{z : A z <= b, E z = c} in R^d (either block may be empty)."""

    A: np.ndarray
    b: np.ndarray
    E: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        self.A = np.asarray(self.A, dtype=float)
        self.E = np.asarray(self.E, dtype=float)
        self.b = np.asarray(self.b, dtype=float).reshape(-1)
        self.c = np.asarray(self.c, dtype=float).reshape(-1)
        if self.A.ndim == 1:
            self.A = self.A.reshape(1, -1) if self.A.size else self.A.reshape(0, self.E.shape[1] if self.E.ndim == 2 else 0)
        if self.E.ndim == 1:
            self.E = self.E.reshape(1, -1) if self.E.size else self.E.reshape(0, self.A.shape[1])
        if self.A.shape[0] != self.b.shape[0] or self.E.shape[0] != self.c.shape[0]:
            raise ValueError("row counts do not match right-hand sides")
        if self.A.shape[1] != self.E.shape[1]:
            raise ValueError("A and E column counts differ")
        for arr in (self.A, self.b, self.E, self.c):
            if not np.all(np.isfinite(arr)):
                raise ValueError("polyhedron data must be finite")

    @property
    def dim(self):
        return self.A.shape[1]

    def residuals(self, z):
        z = np.asarray(z, dtype=float)
        ineq = self.A @ z - self.b if self.A.shape[0] else np.zeros(0)
        eq = self.E @ z - self.c if self.E.shape[0] else np.zeros(0)
        return ineq, eq

    def contains(self, z, tol=FEAS_TOL):
        ineq, eq = self.residuals(z)
        ok_i = ineq.size == 0 or np.max(ineq) <= tol
        ok_e = eq.size == 0 or np.max(np.abs(eq)) <= tol
        return bool(ok_i and ok_e)


def empty_polyhedron_like(dim):
    return Polyhedron(np.zeros((0, dim)), np.zeros(0), np.zeros((0, dim)), np.zeros(0))


def polyhedron(dim, A=None, b=None, E=None, c=None):
    A = np.zeros((0, dim)) if A is None else np.asarray(A, dtype=float).reshape(-1, dim)
    E = np.zeros((0, dim)) if E is None else np.asarray(E, dtype=float).reshape(-1, dim)
    b = np.zeros(A.shape[0]) if b is None else np.asarray(b, dtype=float).reshape(-1)
    c = np.zeros(E.shape[0]) if c is None else np.asarray(c, dtype=float).reshape(-1)
    return Polyhedron(A, b, E, c)


@dataclass
class GeneratorSet:
    """V-representation: conv(vertices) + cone(rays); rays are unit length."""

    vertices: list = field(default_factory=list)
    rays: list = field(default_factory=list)

    def is_empty(self):
        return len(self.vertices) == 0


def rank(M, tol=1e-8):
    """Numerical rank; singular values below ``tol * sigma_max`` count as zero."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.sum(s > tol * s[0]))


def nullspace(M, tol=1e-8):
    """Orthonormal basis (columns) of the nullspace of M."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.shape[0] == 0:
        return np.eye(M.shape[1])
    u, s, vt = np.linalg.svd(M)
    smax = s[0] if s.size else 0.0
    r = int(np.sum(s > tol * smax)) if smax > 0 else 0
    return vt[r:].T


# ---------------------------------------------------------------------------
# two-phase simplex


@dataclass
class LpResult:
    status: str  # 'optimal' | 'feasible' | 'empty' | 'unbounded'
    point: np.ndarray | None = None
    value: float | None = None
    ray: np.ndarray | None = None
    dual_ineq: np.ndarray | None = None
    dual_eq: np.ndarray | None = None


class _Tableau:
    """Dense tableau for min c^T w, A w = b, w >= 0 with Bland's rule.

    The tableau drives pivoting only; final solutions, rays, and duals are
    recomputed from the original data via the terminal basis, which keeps
    accumulated pivot round-off out of the reported certificates.
    """

    def __init__(self, A, b):
        m, n = A.shape
        self.m, self.n = m, n
        # flip rows so b >= 0, then append artificials
        A = A.copy()
        b = b.copy()
        neg = b < 0
        A[neg] *= -1.0
        b[neg] *= -1.0
        self.A0 = np.hstack([A, np.eye(m)])
        self.b0 = b.copy()
        self.T = np.zeros((m + 1, n + m + 1))
        self.T[:m, :n] = A
        self.T[:m, n:n + m] = np.eye(m)
        self.T[:m, -1] = b
        self.basis = list(range(n, n + m))
        self.art_start = n
        self.pivots = 0

    def _basis_matrix(self):
        return self.A0[:, self.basis]

    def refined_solution(self):
        """Basic solution recomputed from the original data.

        Falls back to the raw tableau values when the terminal basis is
        numerically singular and the recomputation is the worse of the two.
        """
        B = self._basis_matrix()
        try:
            xB = np.linalg.solve(B, self.b0)
        except np.linalg.LinAlgError:
            xB = np.linalg.lstsq(B, self.b0, rcond=None)[0]
        w = np.zeros(self.n + self.m)
        w[self.basis] = xB

        def defect(vec):
            resid = float(np.max(np.abs(self.A0 @ vec - self.b0), initial=0.0))
            return resid + max(0.0, -float(np.min(vec, initial=0.0)))

        w_raw = self.solution()
        return w if defect(w) <= defect(w_raw) else w_raw

    def refined_duals(self, costs_full):
        """Row duals from B^T y = c_B using the original data."""
        B = self._basis_matrix()
        cB = costs_full[self.basis]
        try:
            return np.linalg.solve(B.T, cB)
        except np.linalg.LinAlgError:
            return np.linalg.lstsq(B.T, cB, rcond=None)[0]

    def refined_ray(self, enter):
        """Improving ray direction recomputed from the original data."""
        B = self._basis_matrix()
        col = self.A0[:, enter]
        try:
            dB = -np.linalg.solve(B, col)
        except np.linalg.LinAlgError:
            dB = -np.linalg.lstsq(B, col, rcond=None)[0]
        ray = np.zeros(self.n + self.m)
        ray[enter] = 1.0
        ray[self.basis] = dB
        return ray

    def _pivot(self, row, col):
        T = self.T
        piv = T[row, col]
        T[row] /= piv
        for r in range(T.shape[0]):
            if r != row and T[r, col] != 0.0:
                T[r] -= T[r, col] * T[row]
        self.basis[row] = col
        self.pivots += 1
        if self.pivots > MAX_PIVOTS:
            raise CycleGuardExceeded("simplex exceeded pivot budget")

    def run(self, allowed):
        """Bland simplex on the current cost row over ``allowed`` columns.
        Returns 'optimal' or ('unbounded', entering_col)."""
        T = self.T
        rel_tol = getattr(self, "pivot_rel_tol", 1e-9)
        while True:
            enter = -1
            for j in allowed:
                if T[-1, j] < -PIVOT_TOL:
                    enter = j
                    break
            if enter < 0:
                return "optimal", -1
            # pivots on entries that are round-off relative to the column
            # scale blow the tableau up; exclude them from the ratio test
            col = T[: self.m, enter]
            col_scale = float(np.max(np.abs(col))) if self.m else 0.0
            thresh = max(PIVOT_TOL, rel_tol * col_scale)
            leave = -1
            best = np.inf
            for i in range(self.m):
                a = T[i, enter]
                if a > thresh:
                    ratio = T[i, -1] / a
                    if ratio < best - 1e-12:
                        best = ratio
                        leave = i
                    elif ratio <= best + 1e-12 and leave >= 0 and \
                            self.basis[i] < self.basis[leave]:
                        leave = i  # Bland tie-break on the basis index
            if leave < 0:
                return "unbounded", enter
            self._pivot(leave, enter)

    def set_costs(self, costs):
        """Install a cost row (length n + m) and price out the basis."""
        T = self.T
        T[-1, :-1] = costs
        T[-1, -1] = 0.0
        for i, j in enumerate(self.basis):
            if T[-1, j] != 0.0:
                T[-1] -= T[-1, j] * T[i]

    def solution(self):
        w = np.zeros(self.n + self.m)
        for i, j in enumerate(self.basis):
            w[j] = self.T[i, -1]
        return w


def _solve_standard(A, b, costs):
    """min costs^T w s.t. A w = b, w >= 0.

    Returns (status, w, tab) with status in {'optimal', 'unbounded',
    'infeasible'}; on 'unbounded' w is the improving ray direction.
    Retries once with a stricter pivot threshold if the terminal basic
    solution fails verification.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float).reshape(-1)
    m, n = A.shape
    if m == 0:
        # no constraints: optimal at 0 unless some cost is negative
        w = np.zeros(n)
        neg = np.where(np.asarray(costs) < -PIVOT_TOL)[0]
        if neg.size:
            ray = np.zeros(n)
            ray[neg[0]] = 1.0
            return "unbounded", ray, None
        return "optimal", w, None

    for rel_tol in (1e-9, 1e-6):
        status, w, tab = _solve_standard_once(A, b, costs, rel_tol)
        if status != "optimal":
            return status, w, tab
        scale = 1.0 + float(np.max(np.abs(b)))
        if float(np.min(w)) >= -1e-8 * scale:
            return status, w, tab
    return status, w, tab


def _solve_standard_once(A, b, costs, rel_tol):
    m, n = A.shape
    tab = _Tableau(A, b)
    tab.pivot_rel_tol = rel_tol
    # phase 1: minimize the artificial sum
    phase1 = np.zeros(n + m)
    phase1[n:] = 1.0
    tab.set_costs(phase1)
    status, _ = tab.run(allowed=range(n))
    w1 = tab.refined_solution()
    phase1_value = float(np.sum(np.clip(w1[n:], 0.0, None)))
    if phase1_value > 1e-7:
        return "infeasible", None, tab
    # drive remaining artificials (basic at numerically zero level) out of
    # the basis; pivot on the largest eligible entry, never on round-off
    for i in range(tab.m):
        if tab.basis[i] >= n:
            row = tab.T[i, :n]
            j = int(np.argmax(np.abs(row)))
            if abs(row[j]) > 1e-7:
                tab._pivot(i, j)
            else:
                # redundant constraint: neutralize the row so later ratio
                # tests cannot pivot on its round-off entries
                tab.T[i, :n] = 0.0
                tab.T[i, -1] = 0.0
    # phase 2
    full = np.zeros(n + m)
    full[:n] = np.asarray(costs, dtype=float)
    tab.set_costs(full)
    allowed = [j for j in range(n)]
    status, enter = tab.run(allowed=allowed)
    if status == "unbounded":
        ray = tab.refined_ray(enter)
        return "unbounded", ray[:n], tab
    tab.final_duals = tab.refined_duals(full)
    return "optimal", tab.refined_solution()[:n], tab


def lp_solve(poly: Polyhedron, objective=None) -> LpResult:
    """Two-phase simplex over the polyhedron; maximizes ``objective``.

    With ``objective=None`` only feasibility is decided ('feasible'/'empty').
    The 'unbounded' status carries a feasible improving ray.
    """
    d = poly.dim
    k = poly.A.shape[0]
    l = poly.E.shape[0]

    if d == 0:
        ok = (k == 0 or np.max(poly.b) >= -FEAS_TOL) and (
            l == 0 or np.max(np.abs(poly.c)) <= FEAS_TOL
        )
        if not ok:
            return LpResult(status="empty")
        pt = np.zeros(0)
        if objective is None:
            return LpResult(status="feasible", point=pt)
        return LpResult(status="optimal", point=pt, value=0.0)

    # standard form variables: z = zp - zm, slacks s for inequalities
    nvar = 2 * d + k
    A = np.zeros((k + l, nvar))
    rhs = np.zeros(k + l)
    if k:
        A[:k, :d] = poly.A
        A[:k, d:2 * d] = -poly.A
        A[:k, 2 * d:] = np.eye(k)
        rhs[:k] = poly.b
    if l:
        A[k:, :d] = poly.E
        A[k:, d:2 * d] = -poly.E
        rhs[k:] = poly.c

    costs = np.zeros(nvar)
    if objective is not None:
        obj = np.asarray(objective, dtype=float).reshape(d)
        costs[:d] = -obj
        costs[d:2 * d] = obj

    status, w, tab = _solve_standard(A, rhs, costs)
    if status == "infeasible":
        return LpResult(status="empty")
    if status == "unbounded":
        ray = w[:d] - w[d:2 * d]
        nrm = np.linalg.norm(ray)
        if nrm > 0:
            ray = ray / nrm
        return LpResult(status="unbounded", ray=ray)
    z = w[:d] - w[d:2 * d]
    duals_i = duals_e = None
    if tab is not None and getattr(tab, "final_duals", None) is not None:
        # row duals of the internal min problem, flipped to the
        # maximization convention (A^T y_i + E^T y_e = objective,
        # y_i >= 0, complementary slackness)
        y = -tab.final_duals
        # rows were sign-flipped inside the tableau to make b >= 0; undo
        flip = np.ones(k + l)
        orig_b = np.concatenate([poly.b, poly.c]) if (k + l) else np.zeros(0)
        flip[orig_b < 0] = -1.0
        y = y * flip
        duals_i = y[:k]
        duals_e = y[k:]
    if objective is None:
        return LpResult(status="feasible", point=z, dual_ineq=duals_i, dual_eq=duals_e)
    return LpResult(
        status="optimal", point=z, value=float(np.dot(objective, z)),
        dual_ineq=duals_i, dual_eq=duals_e,
    )


# ---------------------------------------------------------------------------
# double description


def _dd_cone(M, tol=DD_TOL):
    """Generators of the pointed cone {v : M v <= 0}; M must have full
    column rank.  Returns unit rays."""
    M = np.asarray(M, dtype=float)
    nrows, d = M.shape
    # normalize rows
    norms = np.linalg.norm(M, axis=1)
    keep = norms > tol
    M = M[keep] / norms[keep, None]
    nrows = M.shape[0]

    # initial simplicial cone from d independent rows
    order = []
    rest = []
    R = np.zeros((0, d))
    for i in range(nrows):
        cand = np.vstack([R, M[i]])
        if rank(cand, tol=1e-10) > R.shape[0]:
            R = cand
            order.append(i)
        else:
            rest.append(i)
        if R.shape[0] == d:
            rest.extend(range(i + 1, nrows))
            break
    if R.shape[0] < d:
        raise ValueError("constraint matrix is rank deficient for DD")

    rays = [-col for col in np.linalg.inv(R).T]
    rays = [r / np.linalg.norm(r) for r in rays]
    processed = list(order)

    for idx in rest:
        row = M[idx]
        vals = [float(row @ r) for r in rays]
        neg = [i for i, v in enumerate(vals) if v < -tol]
        zero = [i for i, v in enumerate(vals) if abs(v) <= tol]
        pos = [i for i, v in enumerate(vals) if v > tol]
        if not pos:
            processed.append(idx)
            continue

        zero_sets = []
        for r in rays:
            zs = frozenset(j for j in processed if abs(M[j] @ r) <= tol)
            zero_sets.append(zs)

        new_rays = [rays[i] for i in neg + zero]
        new_sets = [zero_sets[i] for i in neg + zero]
        for ip in pos:
            for ineg in neg:
                common = zero_sets[ip] & zero_sets[ineg]
                adjacent = True
                for other in range(len(rays)):
                    if other in (ip, ineg):
                        continue
                    if common <= zero_sets[other]:
                        adjacent = False
                        break
                if not adjacent:
                    continue
                comb = vals[ip] * rays[ineg] - vals[ineg] * rays[ip]
                nrm = np.linalg.norm(comb)
                if nrm <= tol:
                    continue
                comb = comb / nrm
                new_rays.append(comb)
                new_sets.append(frozenset(j for j in processed if abs(M[j] @ comb) <= tol))
        processed.append(idx)
        # dedupe
        rays = []
        for r in new_rays:
            if all(np.linalg.norm(r - r2) > 1e-7 for r2 in rays):
                rays.append(r)
    return rays


def enumerate_generators(poly: Polyhedron) -> GeneratorSet:
    """V-representation via the double description method.

    Homogenizes to a cone in R^(d+1), splits off the lineality space, runs DD
    on the pointed remainder, and de-homogenizes.  Guarded to d <= 8.
    """
    d = poly.dim
    if d > 8:
        raise DimensionTooLarge(f"dimension {d} exceeds the desk-scale guard (8)")
    if d == 0:
        feasible = lp_solve(poly).status == "feasible"
        return GeneratorSet(vertices=[np.zeros(0)] if feasible else [], rays=[])

    k, l = poly.A.shape[0], poly.E.shape[0]
    rows = [np.hstack([poly.A, -poly.b[:, None]])] if k else []
    if l:
        rows.append(np.hstack([poly.E, -poly.c[:, None]]))
        rows.append(np.hstack([-poly.E, poly.c[:, None]]))
    t_row = np.zeros((1, d + 1))
    t_row[0, -1] = -1.0
    rows.append(t_row)
    M = np.vstack(rows)

    lin = nullspace(M, tol=1e-9)  # lineality directions (t component is 0)
    if lin.shape[1]:
        U = nullspace(lin.T, tol=1e-9)  # complement of the lineality space
    else:
        U = np.eye(d + 1)
    Mred = M @ U
    cone_rays = _dd_cone(Mred)
    w_rays = [U @ v for v in cone_rays]
    for j in range(lin.shape[1]):
        w_rays.append(lin[:, j])
        w_rays.append(-lin[:, j])

    vertices = []
    rays = []
    for w in w_rays:
        t = w[-1]
        if t > DD_TOL * max(1.0, np.linalg.norm(w[:d])):
            vertices.append(w[:d] / t)
        else:
            ray = w[:d]
            nrm = np.linalg.norm(ray)
            if nrm > 1e-9:
                rays.append(ray / nrm)

    def dedupe(points, tol):
        out = []
        for pt in points:
            if all(np.linalg.norm(pt - o) > tol for o in out):
                out.append(pt)
        return out

    vertices = dedupe(vertices, 1e-8)
    rays = dedupe(rays, 1e-6)
    gens = GeneratorSet(vertices=vertices, rays=rays)

    # cross-validate against the H-representation
    for v in gens.vertices:
        if not poly.contains(v, tol=1e-6 * max(1.0, float(np.linalg.norm(v)))):
            raise AssertionError("double description produced an infeasible vertex")
    for r in gens.rays:
        ineq = poly.A @ r if k else np.zeros(0)
        eq = poly.E @ r if l else np.zeros(0)
        if (ineq.size and np.max(ineq) > 1e-6) or (eq.size and np.max(np.abs(eq)) > 1e-6):
            raise AssertionError("double description produced an invalid ray")
    return gens


# ---------------------------------------------------------------------------
# convex hull membership


@dataclass
class HullResult:
    inside: bool
    weights: np.ndarray | None = None


def hull_membership(point, generators, n_cap=None, tol=FEAS_TOL) -> HullResult:
    """Decide point in conv(generators) by LP.

    When inside and ``n_cap`` is given, the returned weights are supported on
    at most ``n_cap + 1`` generators (basic feasible solutions already give
    at most d+1; the loop below is the standard support reduction).
    """
    G = np.array([np.asarray(g, dtype=float) for g in generators])
    if G.size == 0:
        raise ValueError("generator list must be nonempty")
    N, d = G.shape
    v = np.asarray(point, dtype=float).reshape(d)

    E = np.vstack([G.T, np.ones((1, N))])
    c = np.concatenate([v, [1.0]])
    poly = polyhedron(N, A=-np.eye(N), b=np.zeros(N), E=E, c=c)
    res = lp_solve(poly)
    if res.status != "feasible":
        return HullResult(inside=False)
    w = np.clip(res.point, 0.0, None)
    s = w.sum()
    if s > 0:
        w = w / s

    if n_cap is not None:
        w = _caratheodory_reduce(G, w, n_cap + 1)
    return HullResult(inside=True, weights=w)


def _caratheodory_reduce(G, w, max_support, tol=1e-10):
    w = w.copy()
    while True:
        support = np.where(w > tol)[0]
        if support.size <= max_support:
            break
        cols = np.vstack([G[support].T, np.ones((1, support.size))])
        ns = nullspace(cols, tol=1e-10)
        if ns.shape[1] == 0:
            break
        eta = ns[:, 0]
        # step until the first weight hits zero
        steps = [
            (w[support[i]] / -eta[i]) for i in range(len(eta)) if eta[i] < -tol
        ]
        if not steps:
            eta = -eta
            steps = [
                (w[support[i]] / -eta[i]) for i in range(len(eta)) if eta[i] < -tol
            ]
        if not steps:
            break
        t = min(steps)
        w[support] = np.clip(w[support] + t * eta, 0.0, None)
        s = w.sum()
        if s > 0:
            w /= s
    w[w <= tol] = 0.0
    s = w.sum()
    if s > 0:
        w /= s
    return w


def conic_membership(point, vertices, rays, tol=1e-6):
    """Decide point in conv(vertices) + cone(rays), within an L-inf slack.

    Minimizes the max row residual t; membership holds iff t <= tol.
    Returns (inside, slack).
    """
    V = [np.asarray(v, dtype=float) for v in vertices]
    R = [np.asarray(r, dtype=float) for r in rays]
    if not V:
        return False, np.inf
    d = V[0].shape[0]
    p = np.asarray(point, dtype=float).reshape(d)
    nv, nr = len(V), len(R)
    nvar = nv + nr + 1  # weights, ray coefficients, slack t

    # | V w + R mu - p |_inf <= t, sum w = 1, w >= 0, mu >= 0, minimize t
    Vm = np.array(V).T if nv else np.zeros((d, 0))
    Rm = np.array(R).T if nr else np.zeros((d, 0))
    A_rows = []
    b_rows = []
    for sign in (1.0, -1.0):
        blk = np.hstack([sign * Vm, sign * Rm, -np.ones((d, 1))])
        A_rows.append(blk)
        b_rows.append(sign * p)
    A_rows.append(-np.eye(nvar))
    b_rows.append(np.zeros(nvar))
    A = np.vstack(A_rows)
    b = np.concatenate(b_rows)
    E = np.zeros((1, nvar))
    E[0, :nv] = 1.0
    c = np.array([1.0])
    obj = np.zeros(nvar)
    obj[-1] = -1.0  # maximize -t == minimize t
    res = lp_solve(Polyhedron(A, b, E, c), objective=obj)
    if res.status != "optimal":
        return False, np.inf
    slack = float(res.point[-1])
    return slack <= tol, slack
