"""
A periodically forced Kepler problem
====================================

Adding U(t, x) = eps cos(2 pi t / T) x_1 breaks rotation invariance, and no
closed form is left. The minimizer still exists in every winding class. As eps
shrinks it approaches the unforced minimizer, the (1, 2) rosette here.
"""

import math

from relkep import ProblemSpec, harmonic_forcing, minimize
from relkep.varsolver import hausdorff_node_distance

spec = ProblemSpec(8 * math.pi, 2)
base = minimize(spec, N=512)
print(f"unforced: action {base.action.total:.10f}")

for eps in (1e-1, 1e-2, 1e-3, 1e-4):
    U = harmonic_forcing(eps, spec.T, q=1)
    rep = minimize(spec, U, N=512)
    d = hausdorff_node_distance(rep.loop, base.loop, rotation=False)
    print(f"eps = {eps:7.0e}: action {rep.action.total:.10f} (forcing part {rep.action.forcing:+.2e}), "
          f"winding {rep.winding}, EL {rep.el_residual:.1e}, distance {d:.3e}")
