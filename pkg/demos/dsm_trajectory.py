"""
Continuous regularization
=========================

u' = -u + (A*A + eps(t) I)^{-1} A* f with eps(t) = (1 + t)^{-p}.  The
RK4 trajectory is checked against the variation-of-constants integral, and
on noisy data the run is halted once the residual falls to 1.5 delta.
"""

import numpy as np

from shiftreg import DsmSchedule, add_noise, discrepancy_stop, dsm_duhamel, dsm_solve, problems

P = problems.rank_deficient(12, 10, 6, seed=0)
sched = DsmSchedule(eps0=1.0, p=0.5)
trace = dsm_solve(P.A, P.f, sched, t_max=50.0, h=0.01, y_ref=P.y, record_every=500)
for t, e in zip(trace.times, trace.errors):
    print(f"t={t:5.1f}  error {e:.4f}")

u10 = dsm_solve(P.A, P.f, sched, t_max=10.0, h=0.01).final
print("RK4 vs integral at t=10:", np.linalg.norm(u10 - dsm_duhamel(P.A, P.f, sched, t=10.0, quad_points=5001)))

# Noisy data: faster decay p = 1 so the residual level is reached in time.
sched = DsmSchedule(eps0=1.0, p=1.0)
for delta in (1e-2, 1e-3):
    data = add_noise(P.f, delta, seed=0)
    tr = dsm_solve(P.A, data.f_delta, sched, t_max=1e5, h=0.1, y_ref=P.y, record_every=1000,
                   stop_residual=1.5 * delta)
    stop = discrepancy_stop(tr, data, 1.5)
    print(f"delta={delta:g}: stop at t={stop.time:.1f}, error {tr.errors[stop.index]:.4f}")
