"""Irregular (non-normalizable) solutions of the oscillator equation.

For each k the equation [-1/2 d^2/dx^2 + 1/2 x^2] u = (k + 1/2) u has,
besides the Hermite function psi_k, a second solution phi_k of opposite
parity that grows like x^(-k-1) exp(x^2/2) in the classically forbidden
region.  We integrate the equation outward from x = 0 with parity initial
data and fix the overall scale per k by the requirement

    integral  d/dx(psi_k(x) phi_k(x)) psi_k(x)^2 dx = 1

which is the diagonal case of the bi-orthogonality relations the pattern
functions must satisfy.  With this normalization the Wronskian
psi_k phi_k' - psi_k' phi_k comes out equal to 2 for every k (checked in
the test suite); we keep the quadrature-based normalization because it is
self-validating.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.integrate import solve_ivp

from .errors import DomainError, SaturationWarning
from .hermite import hermite_basis_with_derivatives, gauss_legendre_panels

# Values are clamped at this magnitude instead of overflowing; far beyond
# anything reachable inside the default domain |x| <= sqrt(2k+1)+5.
PHI_CAP = 1e280
_ODE_RTOL = 1e-12
_ODE_ATOL = 1e-14


def default_domain_limit(k: int) -> float:
    """Largest |x| the solver covers by default: turning point + 5."""
    return np.sqrt(2.0 * k + 1.0) + 5.0


def _solve_raw(k: int, x_end: float):
    """Integrate u'' = (x^2 - 2k - 1) u on [0, x_end] with parity initial data.

    Even k gives the odd solution (u(0)=0, u'(0)=1), odd k the even one.
    Integration stops early if |u| reaches PHI_CAP; the event position is
    returned so callers can clamp and flag.
    """

    def rhs(x, y):
        return (y[1], (x * x - 2.0 * k - 1.0) * y[0])

    def overflow(x, y):
        return abs(y[0]) - PHI_CAP

    overflow.terminal = True
    y0 = (0.0, 1.0) if k % 2 == 0 else (1.0, 0.0)
    sol = solve_ivp(rhs, (0.0, x_end), y0, method="DOP853", rtol=_ODE_RTOL,
                    atol=_ODE_ATOL, dense_output=True, events=overflow)
    if sol.status == -1:
        raise RuntimeError(f"irregular-solution integration failed for k={k}: {sol.message}")
    x_reached = sol.t[-1]
    saturated = sol.status == 1
    return sol, x_reached, saturated


@dataclass
class IrregularSolution:
    """Normalized phi_k with dense evaluation on [-x_limit, x_limit]."""

    k: int
    x_limit: float
    normalization: float
    saturated: bool
    _sol: object = field(repr=False)
    _x_reached: float = field(repr=False)

    def value_and_derivative(self, x):
        """(phi_k(x), phi_k'(x)) with parity extension to negative x."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if np.any(np.abs(x) > self.x_limit * (1 + 1e-12)):
            raise DomainError(
                f"|x| exceeds the solution domain [-{self.x_limit:g}, {self.x_limit:g}] for k={self.k}")
        ax = np.minimum(np.abs(x), self.x_limit)
        clipped = ax > self._x_reached
        vals = self._sol.sol(np.minimum(ax, self._x_reached))
        v, dv = vals[0].copy(), vals[1].copy()
        if np.any(clipped):
            # growth beyond the overflow event: report the cap, not inf
            warnings.warn(
                f"phi_{self.k} clamped at the overflow cap {PHI_CAP:g}", SaturationWarning,
                stacklevel=3)
            sgn = np.sign(v[clipped])
            v[clipped] = sgn * PHI_CAP / abs(self.normalization)
            dv[clipped] = sgn * PHI_CAP / abs(self.normalization)
        # parity: phi_k has parity (-1)^(k+1), its derivative the opposite
        par = (-1.0) ** (self.k + 1)
        sgn_v = np.where(x >= 0, 1.0, par)
        sgn_d = np.where(x >= 0, 1.0, -par)
        return self.normalization * sgn_v * v, self.normalization * sgn_d * dv

    def value(self, x):
        return self.value_and_derivative(x)[0]


@lru_cache(maxsize=None)
def _cached_solution(k: int, x_limit: float) -> IrregularSolution:
    sol, x_reached, saturated = _solve_raw(k, x_limit)
    # Normalization over the decaying factor psi_k^2: integrand is even.
    span = min(default_domain_limit(k), x_reached)
    nodes, weights = gauss_legendre_panels(0.0, span, panel=0.5, order=32)
    b, db = hermite_basis_with_derivatives(nodes, k)
    raw, draw = sol.sol(nodes)
    integral = 2.0 * np.sum(weights * (db[k] * raw + b[k] * draw) * b[k] ** 2)
    return IrregularSolution(k=k, x_limit=x_limit, normalization=1.0 / integral,
                             saturated=saturated, _sol=sol, _x_reached=x_reached)


def irregular_solution(k: int, x_limit: float | None = None) -> IrregularSolution:
    """Build (or fetch from cache) the normalized phi_k solver."""
    from .hermite import MAX_INDEX
    if not 0 <= k <= MAX_INDEX:
        raise DomainError(f"index k={k} outside supported range [0, {MAX_INDEX}]")
    if x_limit is None:
        x_limit = default_domain_limit(k)
    return _cached_solution(int(k), float(x_limit))


def irregular_wavefunction(k: int, x: float, x_limit: float | None = None) -> float:
    """phi_k(x), normalized so the diagonal bi-orthogonality relation holds.

    Raises DomainError when |x| lies beyond the solution domain
    (default sqrt(2k+1)+5, override with x_limit).  If the solution
    overflows inside the domain the value is clamped at PHI_CAP and a
    SaturationWarning is issued.
    """
    sol = irregular_solution(k, x_limit)
    return float(sol.value(x)[0])
