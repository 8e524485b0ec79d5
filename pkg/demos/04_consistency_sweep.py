"""Reconstruction error against sample size: the consistency curves.

Runs both estimators over a small (n, seed) grid with the N = ceil(n^(1/3))
truncation rule and prints the median distances to the truth.  The same
grid is available from the command line as

    htomo sweep --state coherent:1.0 --ns 1000,10000 --seeds 1,2,3 \
                --methods pattern,mle --out sweep.csv
"""

import numpy as np

from htomo import (build_pattern_table, coherent, hellinger, hs_distance, pattern_estimate,
                   sample_homodyne, sieved_mle, state_density_pair)

truth = coherent(1.0, dim=20)
table = build_pattern_table(32)
seeds = range(5)

print(f"{'n':>7} {'N':>3} {'pattern hs':>11} {'mle hs':>8} {'mle hellinger':>14}")
for n in (1000, 4000, 16000):
    N = int(np.ceil(n ** (1 / 3) - 1e-9))
    pat, mle, hel = [], [], []
    for s in seeds:
        ds = sample_homodyne(truth, n, seed=1000 + s)
        pat.append(hs_distance(pattern_estimate(ds, N=N, table=table).estimate, truth))
        rep = sieved_mle(ds, N=N, table=table, restarts=2)
        mle.append(hs_distance(rep.estimate, truth))
        pair, spec = state_density_pair(rep.estimate, truth)
        hel.append(hellinger(pair, spec))
    print(f"{n:>7} {N:>3} {np.median(pat):>11.4f} {np.median(mle):>8.4f} "
          f"{np.median(hel):>14.4f}")

print("\nboth error curves shrink as n grows while the sieve dimension rises;")
print("the truncation rule keeps estimation noise and truncation bias balanced.")
