"""The real fourth-order schemes with four cycles.

With four cycles the order-4 schemes form a curve.  A multistart run with
the manifold polish switched on finds every local minimum of Err_4 on it;
the penalized search then slides the best one towards the uniform point.
"""

from trotterkit.optimizer import LMConfig, multistart, optimize_penalized
from trotterkit.errors import OptimizationError

config = LMConfig(n_starts=200, manifold_polish=True)
cat = multistart(4, 4, config)
print(f"{len(cat)} minima from 200 starts ({len(cat.failures)} starts failed)")
for c in cat.candidates:
    print(f"  {c.label:>6}  Err_4={c.err:.6e}  xbar={c.xbar:.4f}  seen {c.multiplicity}x")

best = cat.best
for r in (0.0, 0.01, 0.1, 1.0):
    try:
        c = optimize_penalized(4, 4, r, best.scheme, config)
    except OptimizationError as exc:
        print(f"r={r}: {exc}")
        continue
    print(f"r={r:<5} Err_4={c.err:.6e}  xbar={c.xbar:.4f}")
