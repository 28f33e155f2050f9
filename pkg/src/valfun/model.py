"""Parametric maximization problems and their Lagrangian machinery.

A problem bundles an objective f(x, y), inequality constraints g(x, y) <= 0,
a parameter box for x, and a finite search box for y.  The search box is a
desk-scale device standing in for the compactness assumptions of the theory:
it bounds where the inner solver looks, it is not a constraint of the model.

Everything is immutable after load; evaluations are pure.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import exprlang
from .exprlang import DomainError  # noqa: F401  (re-exported convenience)

DEFAULT_ACTIVITY_TOL = 1e-6


class FormatError(Exception):
    """Problem document does not conform to the file format."""


class InfeasiblePoint(Exception):
    """A point violated the feasibility required by an operation."""


@dataclass(frozen=True)
class Box:
    """Per-coordinate closed interval box; bounds may be infinite."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float)
        hi = np.asarray(self.hi, dtype=float)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("box bounds must be 1-d arrays of equal length")
        if np.any(lo > hi):
            raise ValueError("box has lo > hi")

    @property
    def dim(self):
        return self.lo.shape[0]

    def is_finite(self):
        return bool(np.all(np.isfinite(self.lo)) and np.all(np.isfinite(self.hi)))

    def contains(self, v, tol=1e-9):
        v = np.asarray(v, dtype=float)
        return bool(np.all(v >= self.lo - tol) and np.all(v <= self.hi + tol))

    def clip(self, v):
        return np.clip(np.asarray(v, dtype=float), self.lo, self.hi)

    def sample(self, rng):
        lo = np.where(np.isfinite(self.lo), self.lo, -1e3)
        hi = np.where(np.isfinite(self.hi), self.hi, 1e3)
        return lo + rng.random(self.dim) * (hi - lo)

    def active_facets(self, v, tol=1e-8):
        """Per coordinate: 'lo', 'hi', 'both', or None (interior)."""
        v = np.asarray(v, dtype=float)
        out = []
        for j in range(self.dim):
            at_lo = np.isfinite(self.lo[j]) and v[j] <= self.lo[j] + tol
            at_hi = np.isfinite(self.hi[j]) and v[j] >= self.hi[j] - tol
            if at_lo and at_hi:
                out.append("both")
            elif at_lo:
                out.append("lo")
            elif at_hi:
                out.append("hi")
            else:
                out.append(None)
        return out


@dataclass(frozen=True)
class Flags:
    concave_in_y: bool = False
    separable_xy: bool = False
    restricted_sup_compactness_assumed: bool = False


@dataclass
class Point:
    """Candidate (x, y) with optional multiplier vector."""

    x: np.ndarray
    y: np.ndarray
    lam: np.ndarray | None = None

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if self.lam is not None:
            self.lam = np.asarray(self.lam, dtype=float)


@dataclass
class LagrangianEval:
    """Value and derivatives of L^r = r*f - g^T lam at one point.

    ``hess_xy`` has shape (n, m): entry (j, k) is d2 L / dx_j dy_k.
    ``jac_y_g`` has shape (m, q): column i is the y-gradient of g_i.
    """

    r: int
    value: float
    grad_x: np.ndarray
    grad_y: np.ndarray
    hess_yy: np.ndarray
    hess_xy: np.ndarray
    g_values: np.ndarray
    jac_y_g: np.ndarray
    jac_x_g: np.ndarray


def _mixes_xy(e, xnames, ynames):
    """True if some product/quotient/power node mixes x- and y-variables."""
    if isinstance(e, (exprlang.Prod, exprlang.Div, exprlang.Pow)):
        vs = exprlang.variables(e)
        if vs & xnames and vs & ynames:
            return True
    for child in _children(e):
        if _mixes_xy(child, xnames, ynames):
            return True
    return False


def _children(e):
    if isinstance(e, (exprlang.Neg, exprlang.Exp, exprlang.Log, exprlang.Sqrt)):
        return (e.arg,)
    if isinstance(e, exprlang.Sum):
        return e.terms
    if isinstance(e, exprlang.Prod):
        return e.factors
    if isinstance(e, exprlang.Div):
        return (e.num, e.den)
    if isinstance(e, exprlang.Pow):
        return (e.base,)
    return ()


class ParametricProblem:
    """Immutable problem instance with precompiled derivative evaluators."""

    def __init__(self, name, n, m, q, f_expr, g_exprs, x_domain, y_search_box,
                 params=None, flags=None):
        if n < 1 or m < 1 or q < 0:
            raise FormatError("dimensions must satisfy n, m >= 1 and q >= 0")
        if not y_search_box.is_finite() or np.any(y_search_box.hi <= y_search_box.lo):
            raise FormatError("y_search_box must be finite with positive volume")
        if x_domain.dim != n or y_search_box.dim != m:
            raise FormatError("box dimensions do not match n, m")
        self.name = name
        self.n = n
        self.m = m
        self.q = q
        self.params = dict(params or {})
        self.flags = flags or Flags()
        self.solver_defaults = {}
        self.xvars = [f"x{i+1}" for i in range(n)]
        self.yvars = [f"y{j+1}" for j in range(m)]
        self.x_domain = x_domain
        self.y_search_box = y_search_box

        sub = self.params
        self.f_expr = exprlang.substitute(f_expr, sub)
        self.g_exprs = tuple(exprlang.substitute(g, sub) for g in g_exprs)
        for e in (self.f_expr, *self.g_exprs):
            free = exprlang.variables(e) - set(self.xvars) - set(self.yvars)
            if free:
                raise FormatError(f"unbound names {sorted(free)} after parameter substitution")

        if self.flags.separable_xy:
            xs, ys = set(self.xvars), set(self.yvars)
            for e in (self.f_expr, *self.g_exprs):
                if _mixes_xy(e, xs, ys):
                    raise FormatError(
                        "separable_xy flag set but a product/quotient/power "
                        "node mixes x- and y-variables"
                    )

        self._compile_derivatives()

    def _compile_derivatives(self):
        order = self.xvars + self.yvars
        diff = exprlang.differentiate

        def comp(e):
            return exprlang.compile_expr(e, order)

        f = self.f_expr
        fx = [diff(f, v) for v in self.xvars]
        fy = [diff(f, v) for v in self.yvars]
        self._f = comp(f)
        self._fx = [comp(e) for e in fx]
        self._fy = [comp(e) for e in fy]
        self._fyy = [[comp(diff(fy[j], w)) for w in self.yvars] for j in range(self.m)]
        self._fxy = [[comp(diff(fx[j], w)) for w in self.yvars] for j in range(self.n)]

        self._g = []
        self._gx = []
        self._gy = []
        self._gyy = []
        self._gxy = []
        for g in self.g_exprs:
            gx = [diff(g, v) for v in self.xvars]
            gy = [diff(g, v) for v in self.yvars]
            self._g.append(comp(g))
            self._gx.append([comp(e) for e in gx])
            self._gy.append([comp(e) for e in gy])
            self._gyy.append([[comp(diff(gy[j], w)) for w in self.yvars] for j in range(self.m)])
            self._gxy.append([[comp(diff(gx[j], w)) for w in self.yvars] for j in range(self.n)])

    # -- raw evaluators (a = concatenated (x, y)) --

    def _args(self, x, y):
        a = np.empty(self.n + self.m)
        a[: self.n] = x
        a[self.n:] = y
        return a

    def f(self, x, y):
        return self._f(self._args(x, y))

    def grad_f_x(self, x, y):
        a = self._args(x, y)
        return np.array([fn(a) for fn in self._fx])

    def grad_f_y(self, x, y):
        a = self._args(x, y)
        return np.array([fn(a) for fn in self._fy])

    def hess_f_yy(self, x, y):
        a = self._args(x, y)
        H = np.array([[fn(a) for fn in row] for row in self._fyy])
        return 0.5 * (H + H.T)

    def hess_f_xy(self, x, y):
        a = self._args(x, y)
        return np.array([[fn(a) for fn in row] for row in self._fxy])

    def g(self, x, y):
        a = self._args(x, y)
        return np.array([fn(a) for fn in self._g])

    def jac_g_y(self, x, y):
        """(m, q): column i is the y-gradient of g_i."""
        a = self._args(x, y)
        if self.q == 0:
            return np.zeros((self.m, 0))
        return np.array([[fn(a) for fn in gy] for gy in self._gy]).T

    def jac_g_x(self, x, y):
        a = self._args(x, y)
        if self.q == 0:
            return np.zeros((self.n, 0))
        return np.array([[fn(a) for fn in gx] for gx in self._gx]).T

    def hess_g_yy(self, i, x, y):
        a = self._args(x, y)
        H = np.array([[fn(a) for fn in row] for row in self._gyy[i]])
        return 0.5 * (H + H.T)

    def hess_g_xy(self, i, x, y):
        a = self._args(x, y)
        return np.array([[fn(a) for fn in row] for row in self._gxy[i]])

    def active_set(self, x, y, tol=DEFAULT_ACTIVITY_TOL):
        g = self.g(x, y)
        return [i for i in range(self.q) if g[i] >= -tol]

    def with_params(self, params):
        """New immutable problem with updated parameter values."""
        merged = dict(self.params)
        merged.update(params)
        src = _BUILTIN_SOURCES.get(self.name)
        if src is None and hasattr(self, "_source"):
            src = self._source
        if src is None:
            raise FormatError("problem has no source document to reload from")
        return load_problem(src, params=merged)


def eval_lagrangian(p: ParametricProblem, pt: Point, r: int) -> LagrangianEval:
    """Evaluate L^r = r*f - g^T lam and its derivative blocks at ``pt``.

    ``pt.lam`` may be None only when q == 0 (treated as the empty vector).
    """
    if r not in (0, 1):
        raise ValueError("r must be 0 or 1")
    x, y = pt.x, pt.y
    if x.shape != (p.n,) or y.shape != (p.m,):
        raise ValueError("point dimensions do not match the problem")
    lam = pt.lam if pt.lam is not None else np.zeros(p.q)
    if lam.shape != (p.q,):
        raise ValueError("multiplier dimension does not match q")

    g = p.g(x, y)
    jy = p.jac_g_y(x, y)
    jx = p.jac_g_x(x, y)
    value = r * p.f(x, y) - float(g @ lam)
    grad_x = r * p.grad_f_x(x, y) - jx @ lam
    grad_y = r * p.grad_f_y(x, y) - jy @ lam
    hess_yy = r * p.hess_f_yy(x, y)
    hess_xy = r * p.hess_f_xy(x, y)
    for i in range(p.q):
        if lam[i] != 0.0:
            hess_yy = hess_yy - lam[i] * p.hess_g_yy(i, x, y)
            hess_xy = hess_xy - lam[i] * p.hess_g_xy(i, x, y)
    out = LagrangianEval(
        r=r, value=value, grad_x=grad_x, grad_y=grad_y,
        hess_yy=hess_yy, hess_xy=hess_xy,
        g_values=g, jac_y_g=jy, jac_x_g=jx,
    )
    if not all(np.all(np.isfinite(v)) for v in
               (value, grad_x, grad_y, hess_yy, hess_xy, g, jy, jx)):
        raise DomainError("non-finite value in Lagrangian evaluation")
    return out


@dataclass
class FdReport:
    max_rel_first: float
    max_rel_second: float
    passed: bool
    details: dict = field(default_factory=dict)


def fd_check(p: ParametricProblem, pt: Point, h1=1e-5, h2=1e-4, tol=1e-5) -> FdReport:
    """Compare symbolic first/second derivatives against central differences.

    Second derivatives are differenced from the symbolic gradients, which
    keeps the check independent of the symbolic Hessian path.  Passes iff the
    max relative discrepancy is <= ``tol``; failures are reported, not raised.
    """
    x, y = pt.x.copy(), pt.y.copy()

    def rel(a, b):
        return abs(a - b) / (1.0 + abs(a))

    worst1 = 0.0
    worst2 = 0.0
    funcs = [("f", p.f, p.grad_f_x, p.grad_f_y)]
    for i in range(p.q):
        funcs.append(
            (f"g{i+1}",
             lambda xx, yy, i=i: p.g(xx, yy)[i],
             lambda xx, yy, i=i: p.jac_g_x(xx, yy)[:, i],
             lambda xx, yy, i=i: p.jac_g_y(xx, yy)[:, i])
        )

    for _, fval, fgx, fgy in funcs:
        gx = fgx(x, y)
        gy = fgy(x, y)
        for j in range(p.n):
            xp, xm = x.copy(), x.copy()
            xp[j] += h1
            xm[j] -= h1
            worst1 = max(worst1, rel(gx[j], (fval(xp, y) - fval(xm, y)) / (2 * h1)))
        for j in range(p.m):
            yp, ym = y.copy(), y.copy()
            yp[j] += h1
            ym[j] -= h1
            worst1 = max(worst1, rel(gy[j], (fval(x, yp) - fval(x, ym)) / (2 * h1)))

    H = p.hess_f_yy(x, y)
    M = p.hess_f_xy(x, y)
    for k in range(p.m):
        yp, ym = y.copy(), y.copy()
        yp[k] += h2
        ym[k] -= h2
        col_y = (p.grad_f_y(x, yp) - p.grad_f_y(x, ym)) / (2 * h2)
        col_x = (p.grad_f_x(x, yp) - p.grad_f_x(x, ym)) / (2 * h2)
        for j in range(p.m):
            worst2 = max(worst2, rel(H[j, k], col_y[j]))
        for j in range(p.n):
            worst2 = max(worst2, rel(M[j, k], col_x[j]))

    return FdReport(
        max_rel_first=worst1,
        max_rel_second=worst2,
        passed=(worst1 <= tol and worst2 <= tol),
    )


# ---------------------------------------------------------------------------
# problem document format


def _parse_bound(tok):
    tok = tok.strip()
    if tok in ("inf", "+inf"):
        return np.inf
    if tok == "-inf":
        return -np.inf
    try:
        return float(tok)
    except ValueError:
        raise FormatError(f"bad bound {tok!r}") from None


def _parse_document(text):
    sections = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip().lower()
            sections.setdefault(current, [])
            continue
        if current is None:
            raise FormatError(f"line {lineno}: content before any section")
        if "=" not in line:
            raise FormatError(f"line {lineno}: expected key = value")
        key, val = line.split("=", 1)
        sections[current].append((key.strip(), val.strip()))
    return sections


def _unquote(v):
    v = v.strip()
    if len(v) >= 2 and v[0] == v[-1] and v[0] in "\"'":
        return v[1:-1]
    return v


def load_problem(document: str, name: str = "custom", params=None) -> ParametricProblem:
    """Load a problem from its key/value document.

    Sections: [dims] (n, m, q), [params], [objective] f = "...",
    [constraints] g1 = "..." ..., [x_domain] / [y_search_box] per-coordinate
    "lo,hi" ("inf" allowed; the search box must be finite), [flags].
    ``params`` overrides values from the [params] section.
    """
    sec = _parse_document(document)
    if "dims" not in sec:
        raise FormatError("missing [dims] section")
    dims = dict(sec["dims"])
    try:
        n, m, q = int(dims["n"]), int(dims["m"]), int(dims["q"])
    except (KeyError, ValueError) as exc:
        raise FormatError(f"bad [dims] section: {exc}") from None

    pvals = {}
    for k, v in sec.get("params", []):
        pvals[k] = float(v)
    if params:
        unknown = set(params) - set(pvals)
        if unknown:
            raise FormatError(f"unknown parameters {sorted(unknown)}")
        pvals.update({k: float(v) for k, v in params.items()})

    xnames = [f"x{i+1}" for i in range(n)]
    ynames = [f"y{j+1}" for j in range(m)]
    table = set(xnames) | set(ynames) | set(pvals)

    obj = dict(sec.get("objective", []))
    if "f" not in obj:
        raise FormatError("missing objective f")
    f_expr = exprlang.parse(_unquote(obj["f"]), table)

    cons = dict(sec.get("constraints", []))
    g_exprs = []
    for i in range(q):
        key = f"g{i+1}"
        if key not in cons:
            raise FormatError(f"missing constraint {key} (q = {q})")
        g_exprs.append(exprlang.parse(_unquote(cons[key]), table))
    extra = set(cons) - {f"g{i+1}" for i in range(q)}
    if extra:
        raise FormatError(f"constraints {sorted(extra)} exceed q = {q}")

    def read_box(section, names, default_lo, default_hi):
        entries = dict(sec.get(section, []))
        lo = np.full(len(names), default_lo, dtype=float)
        hi = np.full(len(names), default_hi, dtype=float)
        for j, nm in enumerate(names):
            if nm in entries:
                parts = entries[nm].split(",")
                if len(parts) != 2:
                    raise FormatError(f"{section}: {nm} needs 'lo,hi'")
                lo[j] = _parse_bound(parts[0])
                hi[j] = _parse_bound(parts[1])
        unknown = set(entries) - set(names)
        if unknown:
            raise FormatError(f"{section}: unknown coordinates {sorted(unknown)}")
        return Box(lo, hi)

    x_domain = read_box("x_domain", xnames, -np.inf, np.inf)
    y_box = read_box("y_search_box", ynames, -10.0, 10.0)

    fl = dict(sec.get("flags", []))
    def flag(key):
        return str(fl.get(key, "false")).strip().lower() in ("1", "true", "yes")
    flags = Flags(
        concave_in_y=flag("concave_in_y"),
        separable_xy=flag("separable_xy"),
        restricted_sup_compactness_assumed=flag("restricted_sup_compactness_assumed"),
    )

    solver_keys = {"n_starts": int, "grid_density": int, "max_iter": int,
                   "seed": int, "cluster_tol": float, "max_clusters": int}
    solver_defaults = {}
    for k, v in sec.get("solver", []):
        if k not in solver_keys:
            raise FormatError(f"[solver]: unknown key {k!r}")
        solver_defaults[k] = solver_keys[k](float(v))

    prob = ParametricProblem(
        name=name, n=n, m=m, q=q, f_expr=f_expr, g_exprs=g_exprs,
        x_domain=x_domain, y_search_box=y_box, params=pvals, flags=flags,
    )
    prob._source = document
    prob.solver_defaults = solver_defaults
    return prob


# ---------------------------------------------------------------------------
# builtin registry

_KINK_DOC = """
# max_y y*(x+1)  s.t.  -5 <= x + y <= 0
[dims]
n = 1
m = 1
q = 2
[objective]
f = "y1*(x1+1)"
[constraints]
g1 = "x1 + y1"
g2 = "0 - x1 - y1 - 5"
[x_domain]
x1 = -inf, inf
[y_search_box]
y1 = -8, 8
[flags]
concave_in_y = true
"""

_QUAD_DOC = """
# max_y x.y - |y|^2/2, unconstrained; V(x) = |x|^2/2 at y = x
[dims]
n = 2
m = 2
q = 0
[objective]
f = "x1*y1 + x2*y2 - (y1^2 + y2^2)/2"
[x_domain]
x1 = -3, 3
x2 = -3, 3
[y_search_box]
y1 = -5, 5
y2 = -5, 5
[flags]
concave_in_y = true
"""

_SQDIST_DOC = """
# max_y -|y-x|^2/2, unconstrained; V = 0 at y = x, SOSC holds everywhere
[dims]
n = 2
m = 2
q = 0
[objective]
f = "0 - ((y1-x1)^2 + (y2-x2)^2)/2"
[x_domain]
x1 = -3, 3
x2 = -3, 3
[y_search_box]
y1 = -5, 5
y2 = -5, 5
[flags]
concave_in_y = true
"""

_GAN2_F = (
    '"y1*(x1+z1-sbar1) + y2*(x2+z2-sbar2)'
    " - log(1 + exp(y1*(s1-sbar1) + y2*(s2-sbar2)))"
    ' - log(1 + exp(y1*(x1+z1-sbar1) + y2*(x2+z2-sbar2)))"'
)

_GAN2_DOC = f"""
# single-sample two-player adversarial game, n = m = 2
[dims]
n = 2
m = 2
q = 0
[params]
s1 = 0
s2 = 1
z1 = 1
z2 = 0
sbar1 = 0
sbar2 = 0
[objective]
f = {_GAN2_F}
[x_domain]
x1 = -4, 4
x2 = -4, 4
[y_search_box]
y1 = -3, 3
y2 = -3, 3
[flags]
concave_in_y = true
"""

_GAN2C_DOC = f"""
# gan2 with two inequality constraints on the discriminator parameters
[dims]
n = 2
m = 2
q = 2
[params]
s1 = 0
s2 = 1
z1 = 1
z2 = 0
sbar1 = 0
sbar2 = 0
[objective]
f = {_GAN2_F}
[constraints]
g1 = "(y1^2 + y2^2)/2 - 1/2"
g2 = "y1 - 1"
[x_domain]
x1 = -4, 4
x2 = -4, 4
[y_search_box]
y1 = -3, 3
y2 = -3, 3
[flags]
concave_in_y = true
"""

_BUILTIN_SOURCES = {
    "kink": _KINK_DOC,
    "quad": _QUAD_DOC,
    "sqdist": _SQDIST_DOC,
    "gan2": _GAN2_DOC,
    "gan2c": _GAN2C_DOC,
}


def builtin_names():
    return sorted(_BUILTIN_SOURCES)


def builtin(name: str, params=None) -> ParametricProblem:
    """Load a builtin problem, optionally overriding its parameters."""
    try:
        src = _BUILTIN_SOURCES[name]
    except KeyError:
        raise FormatError(f"unknown builtin problem {name!r}") from None
    return load_problem(src, name=name, params=params)
