"""Constraint-qualification contrast on the constrained adversarial game.

``gan2c`` adds the constraints g1 = |y|^2/2 - 1/2 and g2 = y1 - 1 to the
game.  At the optimal pair (x*, (1, 0)) both constraints are active with
multiplier set {(0, 0)}, and the two branch-system rows for g1 and g2
coincide, so the KKT-reformulation LICQ (the stringent branch-system CQ)
fails.  The dual constraint system grad_y L = 0, lam >= 0 still satisfies
LICQ (its 6 x 4 transposed Jacobian has full column rank), so the sharper
dual-multiplier route certifies the point where the branch route cannot.
"""

import numpy as np

from valfun import cq, model, multipliers, stationarity

p = model.builtin("gan2c")
xbar = np.array([-1.0, 1.0])
ybar = np.array([1.0, 0.0])
lam = np.zeros(2)
pt = model.Point(xbar, ybar, lam)

sig = multipliers.sigma_set(p, xbar, ybar, r=1)
gens = sig.generators()
print("multiplier set Sigma(x*, y*):",
      [v.tolist() for v in gens.vertices], "rays:", gens.rays)

print()
branch = cq.check_licq(p, pt, "mpec_branch")
print(f"branch-system LICQ: {branch.verdict} "
      f"(rank {branch.evidence['rank']} of {branch.evidence['family_size']})")
print("  dependent rows:", [branch.evidence["labels"][i]
                            for i in range(len(branch.evidence["labels"]))
                            if abs(branch.evidence["witness_combination"][i]) > 1e-6])

dual = cq.check_licq(p, pt, "dual_system")
print(f"dual-system LICQ:   {dual.verdict} "
      f"(rank {dual.evidence['rank']} of {dual.evidence['family_size']})")

mfcq = cq.check_mfcq(p, xbar, ybar)
print(f"MFCQ for the inner constraints: {mfcq.verdict}")

crcq = cq.check_crcq_sampled(p, xbar, ybar, radius=0.1, n_samples=64, seed=3)
print(f"constant-rank probe: {crcq.verdict}", end="")
if crcq.verdict == "fails":
    ev = crcq.evidence
    print(f"  (subset {ev['witness_subset']} jumps rank "
          f"{ev['rank_center']} -> {ev['rank_sample']} at a nearby sample)")
else:
    print()

print()
print("Despite the failed branch-system CQ, the point is S-stationary:")
res = stationarity.find_mpec_multipliers(p, pt, "s")
print(f"  holds = {res.holds}, u = {np.round(res.u, 8).tolist()}, "
      f"alpha = {np.round(res.alpha, 8).tolist()}, "
      f"beta = {np.round(res.beta, 8).tolist()}")
print("  (u equals -y*, exactly the dual-system certificate.)")
