"""Polyhedral upper estimates of the subdifferentials of V at a kink.

Each estimate piece is the affine image of a dual-multiplier polyhedron at
one (maximizer, multiplier) pair:

    frechet / limiting:  grad_x L + hess_xy L . u  over u with
                         hess_yy L u = 0 and the sign-resolved
                         complementarity rows,
    horizon:             hess_xy L . u over the r = 0 variant.

For the kink problem at x = -1 the union of limiting pieces is the exact
Clarke interval [-4, 1], and the horizon estimate collapses to {0}, which
certifies local Lipschitz continuity of V.
"""

import numpy as np

from valfun import model, subdiff, valuefn

p = model.builtin("kink")
x = [-1.0]

est = subdiff.upper_estimate(p, x, "limiting")
print(f"limiting estimate at x = -1: {len(est.pieces)} pieces")
for pc in est.pieces:
    vs = sorted(float(v[0]) for v in pc.gens.vertices)
    print(f"  piece at y = {float(pc.y[0]):+.4f}, lam = {pc.lam.tolist()}"
          f" -> interval [{vs[0]:+.4f}, {vs[-1]:+.4f}]")
lo, hi = est.hull_interval()
print(f"union hull: [{lo:.6f}, {hi:.6f}]   (one-sided slopes are -4 and 1)")

print()
hor = subdiff.upper_estimate(p, x, "horizon")
print("horizon estimate vertices:",
      sorted({round(float(v[0]), 9) for v in hor.all_vertices()}),
      "rays:", hor.all_rays())
print("horizon = {0} certifies a locally Lipschitz value function here.")

print()
print("Membership checks against finite-difference gradient samples:")
samples = valuefn.numeric_subdiff_oracle(p, x, radius=0.05, n_samples=24)
inside = 0
for s in samples:
    if not s.smooth:
        continue
    verdict = subdiff.estimate_contains(est, s.grad, tol=1e-4).verdict
    inside += verdict == "inside"
print(f"  {inside} of {sum(s.smooth for s in samples)} smooth samples lie "
      "inside the limiting estimate")

print()
print("Values clearly outside are rejected:")
for probe in (2.0, -4.5):
    print(f"  {probe:+.1f} ->", subdiff.estimate_contains(est, [probe]).verdict)

print()
rep = subdiff.singular_condition_check(p, x, [0.0])
print("singular-cone criterion (images of the r = 0 multiplier cone):",
      "holds" if rep.holds else f"fails with witness {rep.witness}")
