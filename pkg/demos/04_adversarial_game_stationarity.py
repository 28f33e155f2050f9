"""Stationarity certification on a two-player adversarial game.

The builtin ``gan2`` problem is a single-sample generator/discriminator
game with generator parameter x and discriminator parameter y.  At the
data-matching generator x* = s - z the inner maximizers form the whole
hyperplane {y : y . (s - sbar) = 0}, and the game value is -2 log 2.

The point of the example: the simultaneous (Nash) first-order system only
certifies the single solution pair (x*, 0), while the dual-multiplier
system certifies every pair (x*, y*) on the hyperplane via the closed-form
certificate u = -y*.
"""

import math

import numpy as np

from valfun import model, stationarity, valuefn

p = model.builtin("gan2")
s = np.array([p.params["s1"], p.params["s2"]])
z = np.array([p.params["z1"], p.params["z2"]])
sbar = np.array([p.params["sbar1"], p.params["sbar2"]])
xbar = s - z
print(f"generator optimum x* = s - z = {xbar.tolist()}")

rep = valuefn.solve_inner(p, xbar)
print(f"game value V(x*) = {rep.value:.12f}   (-2 log 2 = {-2 * math.log(2):.12f})")
print(f"{len(rep.solutions)} maximizer clusters; worst |y.(s-sbar)| = "
      f"{max(abs(float(y @ (s - sbar))) for y in rep.solutions):.2e}")

print()
print("Nash system vs dual-multiplier system across maximizers:")
for t in (0.0, 0.5, -1.5):
    yb = np.array([t, 0.0])
    cert = stationarity.certify_point(p, xbar, yb, solve=rep)
    nash = cert.systems["nash"].status
    wolfe_sys = cert.systems["wolfe_interior"]
    u = wolfe_sys.multipliers.get("u") if wolfe_sys.status == "holds" else None
    print(f"  y* = ({t:+.1f}, 0):  nash {nash:14s} dual-system {wolfe_sys.status}"
          + (f"  with u = {np.round(u, 8).tolist()} (= -y*)" if u else ""))

print()
print("The certificate u = -y* converts to S-stationarity multipliers:")
yb = np.array([0.5, 0.0])
res = stationarity.check_wolfe_system(p, xbar, yb, np.zeros(0))
alpha, beta, residuals = stationarity.convert_wolfe_to_s(
    p, xbar, yb, np.zeros(0), res.u)
print(f"  alpha = {alpha.tolist()}, beta = {beta.tolist()}, "
      f"worst residual = {max(residuals.values()):.2e}")

print()
print("Off the optimum the necessary systems fail, as they must:")
x_off = xbar + np.array([0.4, 0.0])
rep_off = valuefn.solve_inner(p, x_off)
y_off = rep_off.solutions[0]
cert = stationarity.certify_point(p, x_off, y_off, solve=rep_off)
print(f"  at x = {np.round(x_off, 3).tolist()}: nash {cert.systems['nash'].status}, "
      f"dual-system {cert.systems['wolfe_interior'].status}")
