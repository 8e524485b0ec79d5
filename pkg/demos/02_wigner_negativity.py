"""Wigner functions: negativity of the single-photon state, Radon cross-check.

Writes wigner_fock1.csv (and a PNG when matplotlib is importable).
"""

import numpy as np

from htomo import (cat, fock, quadrature_density, radon_transform, vacuum, wigner_function,
                   write_wigner_csv)

w_vac = wigner_function(vacuum())
i0 = w_vac.q_axis.size // 2
print(f"vacuum:  W(0,0) = {w_vac.values[i0, i0]:+.6f}   (1/pi = {1/np.pi:.6f})")
print(f"         total mass = {w_vac.total_mass:.4f}")

w_f1 = wigner_function(fock(1), n_points=321)
i0 = w_f1.q_axis.size // 2
print(f"fock(1): W(0,0) = {w_f1.values[i0, i0]:+.6f}  (-1/pi = {-1/np.pi:.6f})")
print(f"         most negative value = {w_f1.values.min():+.6f}")

w_cat = wigner_function(cat(2.0, dim=32), n_points=321)
print(f"cat(2):  interference fringes reach {w_cat.values.min():+.4f} below zero")

# the Radon transform of W reproduces the quadrature density
print("\nRadon line integrals vs quadrature density, fock(1):")
for x in (0.0, 0.7, 1.4):
    r = radon_transform(w_f1, x, 0.9)
    p = quadrature_density(fock(1), x, 0.9)
    print(f"  x={x:3.1f}: radon {r.value:.5f}  density {p:.5f}  |diff| {abs(r.value-p):.2e}")

write_wigner_csv(w_f1, "wigner_fock1.csv")
print("\nwrote wigner_fock1.csv")

try:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    print("matplotlib not available; skipping PNG")
else:
    fig, axes = plt.subplots(1, 2, figsize=(9, 4))
    for ax, (w, title) in zip(axes, [(w_f1, "fock(1)"), (w_cat, "cat(2.0)")]):
        lim = np.abs(w.values).max()
        im = ax.pcolormesh(w.q_axis, w.p_axis, w.values.T, cmap="RdBu_r",
                           vmin=-lim, vmax=lim)
        ax.set_title(title)
        ax.set_xlabel("q")
        ax.set_ylabel("p")
        fig.colorbar(im, ax=ax)
    fig.tight_layout()
    fig.savefig("wigner_negativity.png", dpi=120)
    print("wrote wigner_negativity.png")
