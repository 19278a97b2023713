"""Exact Gaussian moments against plain Monte Carlo.

For Q = (1/N) sum_ij xi_i xi_j f(X_i, X_j) with xi standard normal and X
uniform on the torus, E Q^2 has a closed form.  The same machinery gives the
second moment of the R statistic built from the noise coefficients.

    python3 demos/wick_moments.py
"""

import numpy as np

from stochvortex import SymmetricKernelSpec, e_k_eval, exact_r_second_moment, exact_second_moment

rng = np.random.default_rng(3)
a = (1, 2)
f = SymmetricKernelSpec.outer(a)
for N in (2, 8, 32):
    xi = rng.standard_normal((200_000, N))
    X = rng.random((200_000, N, 2))
    q = (xi * e_k_eval(a, X)).sum(1) ** 2 / N
    q2 = q ** 2
    print(f"N={N:3d}  exact {exact_second_moment(f, N):.4f}  "
          f"MC {q2.mean():.4f} +- {q2.std() / np.sqrt(len(q2)):.4f}")

print()
for l, m in (((1, 0), (0, 1)), ((1, 0), (1, 0))):
    for N in (4, 8, 16):
        r = exact_r_second_moment(l, m, N, N)
        print(f"l={l} m={m} n=N={N:2d}  E R^2 = {r.value:10.4f}  (route {r.method})")
