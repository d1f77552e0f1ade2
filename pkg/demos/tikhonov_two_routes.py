"""
Tikhonov minimizer two ways
===========================

(A*A + aI)^{-1} A* g and A* (AA* + aI)^{-1} g are the same vector.  The
second route factors an m x m matrix, which is cheaper when m < n.
"""

import numpy as np

from shiftreg import tikhonov_functional, tikhonov_minimizer, tikhonov_minimizer_via_Q

rng = np.random.default_rng(7)
A = rng.standard_normal((5, 40))
g = rng.standard_normal(5)
for a in (1.0, 1e-2, 1e-4):
    z1 = tikhonov_minimizer(A, a, g)
    z2 = tikhonov_minimizer_via_Q(A, a, g)
    print(f"a={a:g}: routes differ by {np.linalg.norm(z1 - z2):.2e}")

# Every perturbation raises the functional.
a = 1e-2
z = tikhonov_minimizer(A, a, g)
Fz = tikhonov_functional(A, a, g, z)
gains = [tikhonov_functional(A, a, g, z + 1e-2 * rng.standard_normal(40)) - Fz for _ in range(5)]
print("F(z) =", Fz, " increments:", np.array2string(np.array(gains), precision=3))
