"""Harmonic-oscillator eigenfunctions (Hermite functions).

The number-state wavefunctions are

    psi_k(x) = H_k(x) exp(-x^2/2) / (sqrt(pi) 2^k k!)^(1/2)

evaluated by the three-term recurrence on the *normalized* functions

    psi_0(x)     = pi^(-1/4) exp(-x^2/2)
    psi_1(x)     = sqrt(2) x psi_0(x)
    psi_{k+1}(x) = sqrt(2/(k+1)) x psi_k(x) - sqrt(k/(k+1)) psi_{k-1}(x)

which never forms the raw Hermite polynomials and stays accurate to
~1e-13 relative for k up to a few hundred. Derivatives come from the
ladder identity psi_k'(x) = x psi_k(x) - sqrt(2(k+1)) psi_{k+1}(x).
"""

from __future__ import annotations

import numpy as np

from .errors import DomainError

MAX_INDEX = 256


def hermite_basis(x, kmax: int) -> np.ndarray:
    """Evaluate psi_0..psi_kmax at the points x.

    Returns an array of shape (kmax+1, len(x)); x may be a scalar or 1-d.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty((kmax + 1, x.size))
    out[0] = np.pi ** -0.25 * np.exp(-0.5 * x * x)
    if kmax >= 1:
        out[1] = np.sqrt(2.0) * x * out[0]
    for k in range(1, kmax):
        out[k + 1] = np.sqrt(2.0 / (k + 1)) * x * out[k] - np.sqrt(k / (k + 1)) * out[k - 1]
    return out


def hermite_basis_with_derivatives(x, kmax: int) -> tuple[np.ndarray, np.ndarray]:
    """Evaluate psi_k and psi_k' for k = 0..kmax.

    The derivative ladder needs psi_{kmax+1}, so one extra row is computed
    internally and discarded.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    b = hermite_basis(x, kmax + 1)
    ks = np.arange(kmax + 1)[:, None]
    db = x[None, :] * b[:-1] - np.sqrt(2.0 * (ks + 1)) * b[1:]
    return b[:-1], db


def hermite_function(k: int, x, *, max_index: int = MAX_INDEX):
    """psi_k(x) for a single index k; x scalar or array.

    Raises DomainError for k outside [0, max_index] or non-finite x.
    """
    if not 0 <= k <= max_index:
        raise DomainError(f"index k={k} outside supported range [0, {max_index}]")
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("x must be finite")
    vals = hermite_basis(arr, k)[k]
    return float(vals[0]) if arr.ndim == 0 else vals.reshape(arr.shape)


def gauss_legendre_panels(a: float, b: float, panel: float = 0.5, order: int = 32):
    """Composite Gauss-Legendre nodes/weights covering [a, b].

    Panel width ~0.5 with 32 nodes resolves oscillations of wavelength
    down to ~0.3 (index a few hundred) to machine precision.
    """
    base_x, base_w = np.polynomial.legendre.leggauss(order)
    n_panels = max(1, int(np.ceil((b - a) / panel)))
    edges = np.linspace(a, b, n_panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (half[:, None] * base_x[None, :] + mid[:, None]).ravel()
    weights = (half[:, None] * base_w[None, :]).ravel()
    return nodes, weights
