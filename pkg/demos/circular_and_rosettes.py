"""
Circular orbits, rosettes and their action levels
=================================================

For a period T and winding number k there is always one circular solution.
Non-circular "rosettes" of type (n, k) appear once T crosses the thresholds
u_n^k. This script walks through the worked case T = 8 pi, k = 2 in the
normalized units m = c = alpha = 1.
"""

import math

from relkep import ProblemSpec, action_spectrum, circular_action, circular_orbit, classify, rosette_orbit
from relkep.loops import discrete_action, radial_minima_count
from relkep.rosette import sample_loop

spec = ProblemSpec(8 * math.pi, 2)

# The circular solution: radius, angular speed and energy
circ = circular_orbit(spec)
print(f"circular: R = {circ.R:.6f}, omega = {circ.omega:.6f}, h = {circ.h:.6f}")
print(f"          speed = {circ.speed:.6f} (c = 1), action = {circular_action(spec):.6f}")

# Which rosettes exist? i_T counts the thresholds below T
rep = classify(spec)
print(f"\nthresholds u_n^2 for n = 1: {rep.rosette_thresholds}  ->  i_T = {rep.i_T}")

# The (1, 2) rosette: one pericentre per period, two turns around the origin
ros = rosette_orbit(spec, 1)
print(f"\nrosette (1,2): h = {ros.h:.10f}, L = {ros.L:.10f}")
print(f"  radial period T_h = {ros.T_h:.6f}, apsidal angle = {ros.delta_theta / math.pi:.6f} pi")
print(f"  r in [{ros.r_min:.6f}, {ros.r_max:.6f}], eccentricity E = {ros.ecc_E:.6f}")

# The closed-form level and the discrete action of the sampled orbit agree
loop = sample_loop(ros, 1024)
print(f"\naction: closed form {action_spectrum(spec)[0][1]:.12f}")
print(f"        sampled loop {discrete_action(spec.params, loop).total:.12f}")
print(f"        radial minima per period: {radial_minima_count(loop)}")

# The rosette sits strictly below the circle
print(f"\nI_1^2 < I_circ: {action_spectrum(spec)[0][1] < circular_action(spec)}")

# A longer period unlocks more rosettes; their levels increase with n
spec = ProblemSpec(1e4, 5)
print(f"\nT = 1e4, k = 5: i_T = {classify(spec).i_T}")
for n, level in action_spectrum(spec):
    print(f"  n = {n}: {level:.6f}")
print(f"  circular: {circular_action(spec):.6f}")
