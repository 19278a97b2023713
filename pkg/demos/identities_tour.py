"""Check the noise identities and the Biot-Savart kernel by hand.

    python3 demos/identities_tour.py
"""

import numpy as np

from stochvortex import KernelConfig, c_coeff, eps_n, kernel_eval, lambda_set, sigma_k_eval

rng = np.random.default_rng(0)
x = rng.random((5, 2))

for n in (2, 4, 8, 16):
    ks = lambda_set(n)
    s = np.stack([sigma_k_eval(k, x) for k in ks])    # (L, 5, 2)
    cov = np.einsum("kpi,kpj->pij", s, s)
    target = 0.25 * eps_n(n) ** -2 * np.eye(2)
    l = (2, 1)
    c2 = sum(c_coeff(k, l) ** 2 for k in ks)
    print(f"n={n:2d}  eps_n={eps_n(n):.4f}  "
          f"|sum sigma sigma - I/(4 eps^2)| = {np.abs(cov - target).max():.1e}  "
          f"sum C^2 - |l|^2/(2 eps^2) = {c2 - 0.5 * eps_n(n) ** -2 * 5:+.1e}")

# near the origin the periodic kernel looks like the planar one, |K| ~ 1/(2 pi r)
for r in (0.1, 0.02, 0.005):
    pt = np.array([[r, 0.0]])
    k = kernel_eval(KernelConfig(), pt)[0]
    print(f"r={r:<6}  2 pi r |K| = {2 * np.pi * r * np.linalg.norm(k):.5f}")
print("odd symmetry K(-x) = -K(x):", np.array_equal(kernel_eval(KernelConfig(), -x), -kernel_eval(KernelConfig(), x)))
