"""
Norm of the smoothing operator
==============================

The map g -> (A*A + aI)^{-1} A* g stays bounded by 1/(2 sqrt(a)) however
large A gets.  The scaled difference operator grows like 2n, which makes
this easy to see.
"""

import numpy as np

from shiftreg import RegParam, ShiftMode, oracle, problems, smoothing_op

a = 1e-2
print(f"a = {a}, bound 1/(2 sqrt a) = {0.5 / np.sqrt(a):.4f}")
print(f"{'n':>6} {'||A||':>10} {'||S||':>10}")
for n in (8, 32, 128, 512):
    A = problems.discretized_derivative(n).A
    print(f"{n:6d} {np.linalg.norm(A.entries, 2):10.2f} {oracle.smoothing_norm_exact(A, a):10.4f}")

# Plant a singular value at sqrt(a): the bound is reached exactly.
A = np.diag([np.sqrt(a), 5.0, 0.0])
print("planted sqrt(a):", oracle.smoothing_norm_exact(A, a))

# Measure the norm by applying the operator to a basis, for both shifts.
rng = np.random.default_rng(0)
A = rng.standard_normal((6, 4)) * 1e4
for mode in ShiftMode:
    p = RegParam(a, mode)
    S = np.column_stack([smoothing_op(A, p, e) for e in np.eye(6)])
    print(f"{mode.value:>9}: measured {np.linalg.norm(S, 2):.3e}, "
          f"exact {oracle.smoothing_norm_exact(A, p):.3e}, bound {p.norm_bound:.3e}")
