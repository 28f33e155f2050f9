"""Wolfe dual of the inner maximization and numerical weak duality.

For a concave-in-y inner problem, the dual minimizes the Lagrangian over
the stationarity manifold grad_y L = 0 with lam >= 0, and V(x) <= V_D(x)
holds pointwise.  The solver certifies the inequality numerically: the
reported dual value is a best-found upper bound on V_D, so a negative
margin beyond tolerance would expose a solver or flag error, never a
theorem violation.
"""

import numpy as np

from valfun import model, wolfe

print("Concave quadratic (strong duality, zero gap):")
p = model.builtin("quad")
for x in ([1.0, 2.0], [0.0, -1.0]):
    d = wolfe.dual_value(p, x)
    print(f"  x = {x}:  V_D <= {d.value:+.9f}  at y = {np.round(d.y, 6).tolist()},"
          f" |grad_y L| = {d.kkt_residual:.1e}")

print()
print("Kink problem (dual is exact at KKT seeds):")
p = model.builtin("kink")
d = wolfe.dual_value(p, [-2.0])
print(f"  x = -2:  V_D <= {d.value:+.9f}, multiplier lam = {np.round(d.lam, 6).tolist()}")
print("  V(-2) = 3, and the binding constraint carries lam_2 = 1.")

print()
print("Weak-duality margins V_D - V over small parameter sweeps:")
for name, xs in [
    ("kink", [[-3.0], [-2.0], [0.0], [1.0]]),
    ("quad", [[1.0, 2.0], [-0.5, 0.25], [2.0, -2.0]]),
]:
    p = model.builtin(name)
    rep = wolfe.check_weak_duality(p, xs)
    margins = ", ".join(f"{m:+.2e}" for m in rep.margins)
    print(f"  {name:5s}: passed = {rep.passed}   margins = [{margins}]")

print()
print("Adversarial game along the data direction (dual stays attainable):")
p = model.builtin("gan2")
xbar = np.array([-1.0, 1.0])
xs = [xbar + t * np.array([0.0, 1.0]) for t in np.linspace(-0.2, 0.2, 5)]
rep = wolfe.check_weak_duality(p, xs)
for x, v, dv in zip(rep.xs, rep.primal_values, rep.dual_values):
    print(f"  x = {np.round(x, 3).tolist()}:  V = {v:+.9f}   V_D <= {dv:+.9f}")
print(f"  all margins >= -1e-6: {rep.passed}")
