"""
Morse index of the circular orbit across the thresholds
=======================================================

The circle's second variation is discretized on trigonometric polynomials and
its negative eigenvalues counted. The count jumps by two each time T crosses
a threshold u_n^k, where a new rosette family is born. Set RELKEP_THREADS to
run the sweep in parallel from the command line:

    RELKEP_THREADS=4 relkep sweep --k 3 --T-min 1 --T-max 1000 --count 40
"""

import numpy as np

from relkep import ProblemSpec, classify, conley_zehnder_formula, morse_index

k = 3
print("thresholds:", [f"{u:.4f}" for u in classify(ProblemSpec(1.0, k)).rosette_thresholds])
print(f"{'T':>10} {'i_T':>4} {'Galerkin':>9} {'formula':>8} {'nullity':>8}")
for T in np.geomspace(2.0, 200.0, 12):
    spec = ProblemSpec(float(T), k)
    rep = morse_index(spec, modes=64)
    print(f"{T:10.4f} {classify(spec).i_T:4d} {rep.index:9d} {conley_zehnder_formula(spec):8d} {rep.nullity:8d}")

# Exactly at a threshold the circle is degenerate: two extra null directions
u = classify(ProblemSpec(1.0, k)).rosette_thresholds[0]
rep = morse_index(ProblemSpec(u, k))
print(f"\nat T = u_1^3: index {rep.index}, nullity {rep.nullity}, caveat {rep.caveat}")

# The Galerkin count does not depend on the eigen-solver
spec = ProblemSpec(40.0, k)
print("LAPACK vs Jacobi:", morse_index(spec, modes=32).index, morse_index(spec, modes=32, method="jacobi").index)
