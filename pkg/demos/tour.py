"""Bundled schemes, their error coefficients and figures of merit."""

import numpy as np

from trotterkit.error_functions import merit_report
from trotterkit.library import BUILTIN_NAMES, get_builtin
from trotterkit.scheme_core import compute_error_coefficients

for name in BUILTIN_NAMES:
    s = get_builtin(name)
    m = merit_report(s)
    print(f"{name:>20}  n={s.order}  q={s.q:>2}  Err={m.err_n:.4e}  Eff={m.eff_n:.4g}  xbar={m.xbar:.4f}")

# the degree-3 coefficients of plain leapfrog
co = compute_error_coefficients(get_builtin("leapfrog"))
print("\nleapfrog alpha, beta:", co.alpha, co.beta)
print("basis:", co.basis_id.split(";")[0])

# a fourth-order scheme kills degree 3 but not degree 5
co = compute_error_coefficients(get_builtin("forest-ruth-n4-q3"))
print("Forest-Ruth degree 3:", np.abs(co.degree(3)).max(), " degree 5:", np.abs(co.degree(5)).max())
