"""Upper-estimate sets for the subdifferentials of the maximal value
function, as explicit generator sets in x-space.

Each piece is the affine image of a dual-multiplier polyhedron at one
(solution, multiplier) pair; union kinds keep the pieces separate so a
report can attribute every element of the estimate to the pair that
produced it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import polyhedra
from .model import DEFAULT_ACTIVITY_TOL, InfeasiblePoint, ParametricProblem, Point, eval_lagrangian
from .multipliers import sigma_set, xi_set
from .valuefn import DEFAULT_CONFIG, solve_inner

KINDS = (
    "frechet",
    "limiting",
    "horizon",
    "lipschitz_eqn1",
    "lipschitz_horizon_eqn2",
    "clarke_hull",
)


@dataclass
class EstimatePiece:
    y: np.ndarray | None
    lam: np.ndarray | None
    gens: polyhedra.GeneratorSet
    r: int | None = None


@dataclass
class EstimateSet:
    kind: str
    dim: int
    pieces: list
    provenance: dict = field(default_factory=dict)
    flags_used: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    def all_vertices(self):
        return [v for piece in self.pieces for v in piece.gens.vertices]

    def all_rays(self):
        return [r for piece in self.pieces for r in piece.gens.rays]

    def hull_interval(self):
        """1-d convenience: [min, max] over all piece vertices."""
        vs = [float(v[0]) for v in self.all_vertices()]
        return (min(vs), max(vs)) if vs else (np.nan, np.nan)


def _dedupe(points, tol):
    out = []
    for pt in points:
        if all(np.linalg.norm(pt - o) > tol for o in out):
            out.append(pt)
    return out


def _affine_image_piece(gens, base, M, include_offset=True, warnings=None, tag=""):
    """Map conv(V) + cone(R) through z -> base + M z (or M z alone)."""
    off = base if include_offset else np.zeros_like(base)
    verts = [off + M @ v for v in gens.vertices]
    rays = []
    for r in gens.rays:
        img = M @ r
        nrm = np.linalg.norm(img)
        if nrm > 1e-9:
            rays.append(img / nrm)
            if warnings is not None:
                warnings.append(
                    f"UnboundedEstimate: dual ray maps to nonzero x-space ray "
                    f"{np.round(img / nrm, 6).tolist()}{tag}"
                )
    if not verts and include_offset:
        verts = []
    return polyhedra.GeneratorSet(
        vertices=_dedupe(verts, 1e-9), rays=_dedupe(rays, 1e-7)
    )


def _sigma_vertex_pairs(p, x, y, activity_tol, warnings):
    """Vertices of Sigma(x, y); rays are reported, not expanded into pieces."""
    sig = sigma_set(p, x, y, r=1, activity_tol=activity_tol)
    gens = sig.generators()
    for ray in gens.rays:
        warnings.append(
            f"unbounded-multiplier piece skipped: Sigma ray "
            f"{np.round(ray, 6).tolist()} at y = {np.round(y, 6).tolist()}"
        )
    return gens.vertices


def upper_estimate(p: ParametricProblem, x, kind: str, solve=None,
                   point=None, lam=None, config=None,
                   activity_tol: float = DEFAULT_ACTIVITY_TOL) -> EstimateSet:
    """Upper-estimate generator set of the requested kind at x.

    frechet / lipschitz kinds use one designated solution (default: the
    solver's best); limiting / horizon / clarke_hull take unions over the
    retained solution clusters and the vertices of each multiplier set.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown estimate kind {kind!r}")
    x = np.asarray(x, dtype=float)
    config = config or DEFAULT_CONFIG
    warnings: list[str] = []

    if solve is None and (point is None or kind in ("limiting", "horizon", "clarke_hull")):
        solve = solve_inner(p, x, config)

    if point is not None:
        designated = [np.asarray(point, dtype=float)]
    else:
        designated = [np.asarray(solve.solutions[0], dtype=float)]
    union_ys = (
        [np.asarray(yv, dtype=float) for yv in solve.solutions]
        if solve is not None else designated
    )

    pieces = []
    provenance = {"kind": kind, "x": x.tolist(), "solutions_used": []}

    def xi_piece(yv, lv, r, include_offset):
        le = eval_lagrangian(p, Point(x, yv, lv), 1)
        xi = xi_set(p, x, yv, lv, r=r, activity_tol=activity_tol)
        gens = xi.generators()
        img = _affine_image_piece(
            gens, le.grad_x, le.hess_xy, include_offset=include_offset,
            warnings=warnings, tag=f" (y = {np.round(yv, 6).tolist()})",
        )
        return EstimatePiece(y=yv, lam=lv, gens=img, r=r)

    if kind in ("frechet", "limiting", "clarke_hull"):
        ys = designated if kind == "frechet" else union_ys
        for yv in ys:
            if lam is not None and kind == "frechet":
                lams = [np.asarray(lam, dtype=float)]
            else:
                lams = _sigma_vertex_pairs(p, x, yv, activity_tol, warnings)
            for lv in lams:
                pieces.append(xi_piece(yv, lv, 1, include_offset=True))
                provenance["solutions_used"].append(
                    {"y": yv.tolist(), "lam": np.asarray(lv).tolist()}
                )
        if kind == "clarke_hull":
            merged = polyhedra.GeneratorSet(
                vertices=_dedupe(
                    [v for pc in pieces for v in pc.gens.vertices], 1e-9),
                rays=_dedupe([r for pc in pieces for r in pc.gens.rays], 1e-7),
            )
            pieces = [EstimatePiece(y=None, lam=None, gens=merged, r=1)]
    elif kind == "horizon":
        for yv in union_ys:
            for lv in _sigma_vertex_pairs(p, x, yv, activity_tol, warnings):
                pieces.append(xi_piece(yv, lv, 0, include_offset=False))
                provenance["solutions_used"].append(
                    {"y": yv.tolist(), "lam": np.asarray(lv).tolist()}
                )
    elif kind == "lipschitz_eqn1":
        for yv in designated:
            sig = sigma_set(p, x, yv, r=1, activity_tol=activity_tol)
            gens = sig.generators()
            le = eval_lagrangian(p, Point(x, yv, np.zeros(p.q)), 1)
            # grad_x L is affine in lam with linear part -jac_x_g
            base = le.grad_x  # at lam = 0 this is grad_x f
            img = _affine_image_piece(
                gens, base, -le.jac_x_g, include_offset=True,
                warnings=warnings, tag=" (lipschitz_eqn1)",
            )
            pieces.append(EstimatePiece(y=yv, lam=None, gens=img, r=1))
            provenance["solutions_used"].append({"y": yv.tolist(), "lam": "Sigma vertices"})
    elif kind == "lipschitz_horizon_eqn2":
        for yv in designated:
            sig0 = sigma_set(p, x, yv, r=0, activity_tol=activity_tol)
            gens = sig0.generators()
            jx = p.jac_g_x(x, yv)
            img = _affine_image_piece(
                gens, np.zeros(p.n), jx, include_offset=True,
                warnings=warnings, tag=" (lipschitz_horizon_eqn2)",
            )
            pieces.append(EstimatePiece(y=yv, lam=None, gens=img, r=0))
            provenance["solutions_used"].append({"y": yv.tolist(), "lam": "Sigma^0 generators"})

    if kind == "horizon" and not any(
        pc.gens.vertices for pc in pieces
    ):
        # the image of 0 in Xi^0 is always present
        pieces.append(EstimatePiece(
            y=None, lam=None,
            gens=polyhedra.GeneratorSet(vertices=[np.zeros(p.n)], rays=[]), r=0,
        ))

    return EstimateSet(
        kind=kind, dim=p.n, pieces=pieces, provenance=provenance,
        flags_used={
            "concave_in_y": p.flags.concave_in_y,
            "separable_xy": p.flags.separable_xy,
            "restricted_sup_compactness_assumed":
                p.flags.restricted_sup_compactness_assumed,
        },
        warnings=warnings,
    )


@dataclass
class ContainsResult:
    verdict: str  # 'inside' | 'inside_hull_only' | 'outside'
    piece_index: int | None = None
    slack: float | None = None


def estimate_contains(e: EstimateSet, v, tol: float = 1e-6) -> ContainsResult:
    """Locate v relative to the estimate: inside some piece, inside only the
    convex hull of the union, or outside."""
    v = np.asarray(v, dtype=float).reshape(e.dim)
    best_slack = np.inf
    for idx, piece in enumerate(e.pieces):
        if not piece.gens.vertices:
            continue
        inside, slack = polyhedra.conic_membership(
            v, piece.gens.vertices, piece.gens.rays, tol=tol)
        best_slack = min(best_slack, slack)
        if inside:
            return ContainsResult(verdict="inside", piece_index=idx, slack=slack)
    verts = e.all_vertices()
    if verts:
        inside, slack = polyhedra.conic_membership(v, verts, e.all_rays(), tol=tol)
        if inside:
            return ContainsResult(verdict="inside_hull_only", slack=slack)
        best_slack = min(best_slack, slack)
    return ContainsResult(verdict="outside", slack=float(best_slack))


@dataclass
class SingularReport:
    holds: bool
    witness: dict | None = None
    images: list = field(default_factory=list)


def singular_condition_check(p: ParametricProblem, x, y,
                             activity_tol: float = DEFAULT_ACTIVITY_TOL,
                             tol: float = 1e-8) -> SingularReport:
    """Check that the r = 0 multiplier cone maps to {0} under grad_x g.

    This is the Lipschitz-continuity criterion of the single-solution
    estimates: holds iff every generator image has norm <= tol.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    g = p.g(x, y)
    if p.q and np.max(g) > activity_tol:
        raise InfeasiblePoint(f"g violation {np.max(g):.3e}")
    sig0 = sigma_set(p, x, y, r=0, activity_tol=activity_tol)
    gens = sig0.generators()
    jx = p.jac_g_x(x, y)
    images = []
    witness = None
    for kind, vecs in (("vertex", gens.vertices), ("ray", gens.rays)):
        for vec in vecs:
            img = jx @ vec
            images.append(img.tolist())
            if np.linalg.norm(img) > tol and witness is None:
                witness = {"generator_kind": kind, "lambda": vec.tolist(),
                           "image": img.tolist()}
    return SingularReport(holds=witness is None, witness=witness, images=images)
