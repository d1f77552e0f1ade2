"""
Stopping the iteration on noisy data
====================================

With data error delta the iteration is stopped after n(delta) =
ceil(delta^{-1/2}) steps.  The stopped error shrinks with delta and stays
under delta (n + 1) / (2 sqrt a) plus the clean-data error.
"""

from shiftreg import noise_study, problems

P = problems.diagonal([2.0, 1.0, 0.0])
rows = noise_study(P, [1e-1, 1e-2, 1e-3, 1e-4], a=0.5, seed=0)
print(f"{'delta':>8} {'n':>5} {'error':>12} {'envelope':>12}")
for r in rows:
    print(f"{r['delta']:8.0e} {r['n_delta']:5d} {r['error_stopped']:12.4e} {r['envelope']:12.4e}")
