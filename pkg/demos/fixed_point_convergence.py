"""
Fixed-point iteration on a rank-deficient system
================================================

u_{n+1} = a (A*A + aI)^{-1} u_n + (A*A + aI)^{-1} A* f converges to the
minimal-norm solution, and the error after n steps is known in closed form
from the singular values.
"""

import numpy as np

from shiftreg import fixed_point_iteration, oracle, problems

P = problems.rank_deficient(20, 15, 8, seed=0)
a = 0.1
sd = oracle.decompose(P.A)
print("singular values:", np.array2string(sd.singular_values, precision=3))

trace = fixed_point_iteration(P.A, a, P.f, max_steps=20000, tol=0.0, y_ref=P.y, record_every=2000)
pred = oracle.spectral_iteration_error(sd, a, -P.y, trace.indices)
print(f"{'n':>6} {'error':>12} {'predicted':>12}")
for n, e, q in zip(trace.indices, trace.errors, pred):
    print(f"{n:6d} {e:12.4e} {q:12.4e}")

# The slowest direction sets the pace.
q = a / (a + sd.singular_values[-1] ** 2)
print(f"slowest factor {q:.8f}: about {np.log(1e-6) / np.log(q):.0f} steps to reach 1e-6")
