"""
Imaginary shift for symmetric operators
=======================================

For Hermitian A, u_{n+1} = ia (A + iaI)^{-1} u_n + (A + iaI)^{-1} f
contracts each eigencomponent by a / sqrt(lam^2 + a^2).  The iterates are
complex and the imaginary part dies out with the error.
"""

import numpy as np

from shiftreg import problems, selfadjoint_iteration

P = problems.symmetric_singular(12, seed=0)
a = 0.5
lam = np.linalg.eigvalsh(P.A.entries)
print("eigenvalues:", np.array2string(lam, precision=3))
print("slowest factor:", np.max(a / np.hypot(lam[np.abs(lam) > 1e-12], a)))

trace = selfadjoint_iteration(P.A, a, P.f, max_steps=5000, tol=1e-13, y_ref=P.y)
real, imag = trace.realize()
print(f"{trace.steps} steps, error {np.linalg.norm(real - P.y):.2e}, imaginary part {imag:.2e}")
