"""A look at the reconstruction kernels themselves.

Tabulates a few pattern functions, checks the bi-orthogonality property
that makes the averaging estimator unbiased, and shows how the sup norms
grow with the indices (the quantity that governs how fast the truncation
dimension may grow with sample size).
"""

import numpy as np

from htomo import build_pattern_table, hoeffding_bound
from htomo.hermite import gauss_legendre_panels, hermite_basis

table = build_pattern_table(32)
print(f"table up to index {table.max_index}, grid of {table.grid.size} points "
      f"spanning |x| <= {table.x_max:.2f}")

print("\nf_00 samples:", np.round(table.pattern_function(0, 0, np.array([0.0, 0.5, 1.0, 2.0])), 4))
print("f_00 is even; its sup norm is", round(table.sup_norm(0, 0), 6))

# the defining property: averaging f_{k,j} against psi_m psi_n picks out (k,j)
nodes, weights = gauss_legendre_panels(-10.0, 10.0, panel=0.4)
basis = hermite_basis(nodes, 4)
print("\nbi-orthogonality integrals for offset j-k = 1 (rows m, columns (k,j)):")
for m in range(3):
    row = []
    for k in range(3):
        f = table.pattern_function(k, k + 1, nodes)
        row.append(np.sum(weights * f * basis[m] * basis[m + 1]))
    print("  ", np.round(row, 8))

print("\nsup-norm growth along the diagonal and up the last column:")
for k, j in ((0, 0), (4, 4), (16, 16), (0, 32), (4, 32), (8, 32)):
    print(f"  ||f_{k},{j}|| = {table.sup_norm(k, j):.4f}")

sums = {n: table.triangle_sum(n) for n in (8, 16, 32)}
print("\nsum of squared sup norms over the index triangle:")
for n, s in sums.items():
    print(f"  N={n:2d}: {s:10.1f}")
slope = np.polyfit(np.log(list(sums)), np.log(list(sums.values())), 1)[0]
print(f"log-log slope {slope:.2f}: the sum grows a bit faster than N^2, which is")
print("why N(n) must grow slower than n^(3/7) for the averaged estimator.")

print("\nconcentration bound P(||estimate - truth restriction||_2 >= 0.5):")
for n in (10 ** 3, 10 ** 4, 10 ** 5):
    print(f"  n={n:>6}: bound {hoeffding_bound(n, 4, 0.5, table=table):.3e}")
