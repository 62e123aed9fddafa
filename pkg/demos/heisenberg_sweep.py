"""Trotter error against cost on a six-site Heisenberg chain.

Writes heisenberg_sweep.csv next to this file and prints the fitted
log-log slope of each scheme, which should be close to minus its order.
"""

from pathlib import Path

from trotterkit.benchmarks import HeisenbergConfig, HeisenbergModel, cost_sweep
from trotterkit.benchmarks.results import write_table
from trotterkit.library import get_builtin

model = HeisenbergModel(HeisenbergConfig(L=6, t=10.0, grouping="local", rng_seed=0))
schemes = [get_builtin(n) for n in ("leapfrog", "forest-ruth-n4-q3", "paper-n4-q6",
                                     "yoshida-n6-q7", "paper-n6-q14")]
results = cost_sweep(schemes, model, model.config.costs)
for res in results:
    print(f"{res.scheme:>20}  order {res.order}  slope {res.slope:6.2f}  costs {res.window}")

rows = [r for res in results for r in res.records()]
print("wrote", write_table(rows, Path(__file__).with_name("heisenberg_sweep"), "csv"))
