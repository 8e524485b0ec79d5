"""Finite-dimensional density matrices and quadrature densities.

States live in a truncated Fock basis: a D x D complex matrix rho with
rho = rho^dagger, rho >= 0 and Tr(rho) = 1.  The quadrature observable
at phase phi has density

    p_rho(x, phi) = sum_{j,k} rho_{j,k} psi_k(x) psi_j(x) e^{-i(j-k)phi}

with respect to dx x dphi/pi on R x [0, pi]; numerically it is evaluated
as u^dagger rho u with u_k = psi_k(x) e^{i k phi}, which is nonnegative
for any positive rho.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import gammainc

from .errors import DomainError, TruncationWarning
from .hermite import hermite_basis

_TAIL_WARN = 1e-8
_TAIL_ERROR = 1e-3


def _hermitized(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DomainError("matrix must be square")
    h = 0.5 * (m + m.conj().T)
    h.setflags(write=False)
    return h


@dataclass(frozen=True)
class HermitianMatrix:
    """A Hermitian matrix with no positivity/trace constraints.

    This is the output type of the raw pattern-averaging estimator, which
    is unbiased but need not be positive or normalized.
    """

    matrix: np.ndarray

    @classmethod
    def from_array(cls, m) -> "HermitianMatrix":
        return cls(matrix=_hermitized(m))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.matrix)[0])


@dataclass(frozen=True)
class DensityMatrix:
    """Physical state: Hermitian, PSD (eigenvalues >= -1e-10), trace 1 (+-1e-10).

    tail_mass records how much probability the Fock truncation discarded
    before renormalization, when the state came from a StateSpec.
    """

    matrix: np.ndarray
    tail_mass: float | None = None

    @classmethod
    def from_array(cls, m, tail_mass: float | None = None) -> "DensityMatrix":
        h = _hermitized(m)
        ev_min = float(np.linalg.eigvalsh(h)[0])
        if ev_min < -1e-10:
            raise DomainError(f"matrix is not positive semidefinite (min eigenvalue {ev_min:.3e})")
        tr = float(np.trace(h).real)
        if abs(tr - 1.0) > 1e-10:
            raise DomainError(f"trace {tr!r} deviates from 1 by more than 1e-10")
        return cls(matrix=h, tail_mass=tail_mass)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.matrix)[0])

    def as_hermitian(self) -> HermitianMatrix:
        return HermitianMatrix(matrix=self.matrix)


_KINDS = {"fock": 1, "coherent": 1, "thermal": 1, "squeezed_vacuum": 1, "cat": 1}


@dataclass(frozen=True)
class StateSpec:
    """Recipe for a canonical state: kind, parameters, truncation dimension."""

    kind: str
    params: tuple
    dim: int

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise DomainError(f"unknown state kind {self.kind!r}; "
                              f"choose one of {sorted(_KINDS)}")
        if len(self.params) != _KINDS[self.kind]:
            raise DomainError(f"{self.kind} takes {_KINDS[self.kind]} parameter(s), "
                              f"got {len(self.params)}")
        if self.dim < 1:
            raise DomainError("dim must be >= 1")
        for p in self.params:
            if not (np.isfinite(np.real(p)) and np.isfinite(np.imag(p))):
                raise DomainError("state parameters must be finite")
        if self.kind == "fock" and (int(self.params[0]) != self.params[0] or self.params[0] < 0):
            raise DomainError("fock takes a nonnegative integer photon number")
        if self.kind == "thermal" and (np.imag(self.params[0]) != 0 or self.params[0] < 0):
            raise DomainError("thermal mean photon number must be real and >= 0")
        if self.kind == "squeezed_vacuum" and np.imag(self.params[0]) != 0:
            raise DomainError("squeezing parameter must be real")

    def to_json_dict(self) -> dict:
        out_params = []
        for p in self.params:
            if isinstance(p, complex) or np.iscomplexobj(np.asarray(p)):
                out_params.append([float(np.real(p)), float(np.imag(p))])
            else:
                out_params.append(float(p) if not isinstance(p, int) else p)
        return {"kind": self.kind, "params": out_params, "dim": self.dim}

    @classmethod
    def from_json_dict(cls, d: dict) -> "StateSpec":
        params = tuple(complex(p[0], p[1]) if isinstance(p, list) else p for p in d["params"])
        if d["kind"] == "fock":
            params = (int(params[0].real if isinstance(params[0], complex) else params[0]),)
        return cls(kind=d["kind"], params=params, dim=int(d["dim"]))


def _diagonal_weight(kind: str, params: tuple, j: int) -> float:
    """Untruncated Fock occupation rho_jj for the given state family."""
    if kind == "fock":
        return 1.0 if j == int(params[0]) else 0.0
    if kind == "coherent":
        lam = abs(params[0]) ** 2
        if lam == 0.0:
            return 1.0 if j == 0 else 0.0
        return math.exp(-lam + j * math.log(lam) - math.lgamma(j + 1))
    if kind == "thermal":
        nbar = float(np.real(params[0]))
        if nbar == 0.0:
            return 1.0 if j == 0 else 0.0
        return nbar ** j / (1.0 + nbar) ** (j + 1)
    if kind == "squeezed_vacuum":
        r = float(np.real(params[0]))
        if j % 2 == 1:
            return 0.0
        m = j // 2
        t = math.tanh(abs(r))
        if t == 0.0:
            return 1.0 if j == 0 else 0.0
        logterm = (2 * m * math.log(t) + math.lgamma(2 * m + 1)
                   - 2 * m * math.log(2.0) - 2 * math.lgamma(m + 1))
        return math.exp(logterm) / math.cosh(r)
    if kind == "cat":
        alpha = complex(params[0])
        lam = abs(alpha) ** 2
        if j % 2 == 1:
            return 0.0
        norm = 2.0 * (1.0 + math.exp(-2.0 * lam))
        if lam == 0.0:
            return 4.0 / norm if j == 0 else 0.0
        return 4.0 * math.exp(-lam + j * math.log(lam) - math.lgamma(j + 1)) / norm
    raise DomainError(f"unknown state kind {kind!r}")


def truncation_tail(kind: str, params: tuple, dim: int) -> float:
    """Probability mass the truncation to `dim` Fock levels discards."""
    if kind == "coherent":
        lam = abs(params[0]) ** 2
        return float(gammainc(dim, lam)) if lam > 0 else 0.0
    if kind == "thermal":
        nbar = float(np.real(params[0]))
        return (nbar / (1.0 + nbar)) ** dim if nbar > 0 else 0.0
    head = sum(_diagonal_weight(kind, params, j) for j in range(dim))
    return max(0.0, 1.0 - head)


def minimal_dim(kind: str, params: tuple, tail_tol: float = _TAIL_ERROR) -> int:
    """Smallest truncation dimension with tail mass <= tail_tol."""
    d = 1
    while truncation_tail(kind, params, d) > tail_tol:
        d = d + 1 if d < 32 else int(d * 1.5)
        if d > 100_000:
            raise DomainError("no reasonable truncation reaches the requested tail")
    while d > 1 and truncation_tail(kind, params, d - 1) <= tail_tol:
        d -= 1
    return d


def _pure_coefficients(kind: str, params: tuple, dim: int) -> np.ndarray | None:
    """Fock coefficients for the pure families; None for mixed ones."""
    js = np.arange(dim)
    if kind == "fock":
        c = np.zeros(dim, dtype=complex)
        m = int(params[0])
        if m < dim:
            c[m] = 1.0
        return c
    if kind == "coherent":
        alpha = complex(params[0])
        return _coherent_coefficients(alpha, dim)
    if kind == "squeezed_vacuum":
        r = float(np.real(params[0]))
        c = np.zeros(dim, dtype=complex)
        c[0] = 1.0 / math.sqrt(math.cosh(r))
        for m in range(1, (dim - 1) // 2 + 1):
            # c_{2m} = -tanh(r) * sqrt((2m-1)/(2m)) * c_{2m-2}
            c[2 * m] = -math.tanh(r) * math.sqrt((2 * m - 1) / (2 * m)) * c[2 * m - 2]
        return c
    if kind == "cat":
        alpha = complex(params[0])
        c = _coherent_coefficients(alpha, dim) + _coherent_coefficients(-alpha, dim)
        norm = math.sqrt(2.0 * (1.0 + math.exp(-2.0 * abs(alpha) ** 2)))
        return c / norm
    return None


def _coherent_coefficients(alpha: complex, dim: int) -> np.ndarray:
    c = np.empty(dim, dtype=complex)
    c[0] = math.exp(-abs(alpha) ** 2 / 2.0)
    for j in range(1, dim):
        c[j] = c[j - 1] * alpha / math.sqrt(j)
    return c


def make_state(spec: StateSpec) -> DensityMatrix:
    """Truncated, trace-renormalized Fock matrix for the given recipe.

    The discarded tail mass is attached as tail_mass; > 1e-8 warns,
    > 1e-3 is refused with the minimal adequate dimension named.
    """
    tail = truncation_tail(spec.kind, spec.params, spec.dim)
    if tail > _TAIL_ERROR:
        need = minimal_dim(spec.kind, spec.params)
        raise DomainError(
            f"truncation too small: dim={spec.dim} leaves tail mass {tail:.3e} > {_TAIL_ERROR:g}; "
            f"use dim >= {need}")
    if tail > _TAIL_WARN:
        warnings.warn(f"truncation to dim={spec.dim} leaves tail mass {tail:.3e}",
                      TruncationWarning, stacklevel=2)
    coeffs = _pure_coefficients(spec.kind, spec.params, spec.dim)
    if coeffs is not None:
        m = np.outer(coeffs, coeffs.conj())
    else:
        m = np.diag([_diagonal_weight(spec.kind, spec.params, j) for j in range(spec.dim)]
                    ).astype(complex)
    tr = float(np.trace(m).real)
    if tr <= 0:
        raise DomainError("state has no mass inside the truncation")
    return DensityMatrix.from_array(m / tr, tail_mass=tail)


def vacuum(dim: int = 4) -> DensityMatrix:
    return make_state(StateSpec("fock", (0,), dim))


def fock(m: int, dim: int | None = None) -> DensityMatrix:
    return make_state(StateSpec("fock", (int(m),), dim if dim is not None else int(m) + 4))


def coherent(alpha: complex, dim: int | None = None) -> DensityMatrix:
    spec = StateSpec("coherent", (complex(alpha),),
                     dim if dim is not None else max(4, minimal_dim("coherent", (complex(alpha),), _TAIL_WARN)))
    return make_state(spec)


def thermal(mean_photons: float, dim: int | None = None) -> DensityMatrix:
    spec = StateSpec("thermal", (float(mean_photons),),
                     dim if dim is not None else max(4, minimal_dim("thermal", (float(mean_photons),), _TAIL_WARN)))
    return make_state(spec)


def squeezed_vacuum(r: float, dim: int | None = None) -> DensityMatrix:
    spec = StateSpec("squeezed_vacuum", (float(r),),
                     dim if dim is not None else max(4, minimal_dim("squeezed_vacuum", (float(r),), _TAIL_WARN)))
    return make_state(spec)


def cat(alpha: complex, dim: int | None = None) -> DensityMatrix:
    spec = StateSpec("cat", (complex(alpha),),
                     dim if dim is not None else max(4, minimal_dim("cat", (complex(alpha),), _TAIL_WARN)))
    return make_state(spec)


def _check_phase(phi: float) -> float:
    phi = float(phi)
    if not np.isfinite(phi) or phi < 0.0 or phi > np.pi:
        raise DomainError(f"phase {phi!r} outside [0, pi]")
    return phi


def quadrature_density(rho: DensityMatrix, x, phi: float):
    """p_rho(x, phi); x scalar or array, phi in [0, pi].

    Tiny negative values from rounding (> -1e-12) are clamped to 0.
    """
    if not isinstance(rho, DensityMatrix):
        raise DomainError("quadrature_density requires a physical DensityMatrix")
    phi = _check_phase(phi)
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    d = rho.dim
    b = hermite_basis(arr, d - 1)
    u = b * np.exp(1j * np.arange(d)[:, None] * phi)
    p = np.einsum("il,ij,jl->l", u.conj(), rho.matrix, u).real
    if p.min() < -1e-12:
        raise DomainError(f"density evaluated negative ({p.min():.3e}); state is not physical")
    p = np.maximum(p, 0.0)
    return float(p[0]) if np.ndim(x) == 0 else p.reshape(np.shape(x))


def density_fn(rho: DensityMatrix):
    """Vectorized p_rho(x_array, phi_array) -> (len(x), len(phi)) callable.

    Used by the metric quadratures; decomposes rho by diagonals so the
    phase dependence factorizes.
    """
    d = rho.dim
    # c_m(x) = sum_k rho[k+m, k] psi_k psi_{k+m} pairs with the phase e^{-i m phi}
    diags = [np.diagonal(rho.matrix, offset=-m) for m in range(d)]

    def evaluate(x, phis):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        phis = np.atleast_1d(np.asarray(phis, dtype=float))
        b = hermite_basis(x, d - 1)
        out = np.zeros((x.size, phis.size))
        c0 = np.einsum("k,kx,kx->x", diags[0].real, b, b)
        out += c0[:, None]
        for m in range(1, d):
            cm = np.einsum("k,kx,kx->x", diags[m], b[: d - m], b[m:])
            out += 2.0 * np.real(cm[:, None] * np.exp(-1j * m * phis)[None, :])
        return np.maximum(out, 0.0)

    return evaluate


def state_to_json_dict(state: DensityMatrix | HermitianMatrix) -> dict:
    """{dim, entries}: entries are [re, im] pairs in row-major order."""
    m = state.matrix
    entries = [[float(v.real), float(v.imag)] for v in m.ravel()]
    return {"dim": int(m.shape[0]), "entries": entries}


def state_from_json_dict(d: dict, physical: bool = True):
    dim = int(d["dim"])
    flat = np.array([complex(re, im) for re, im in d["entries"]], dtype=complex)
    m = flat.reshape(dim, dim)
    return DensityMatrix.from_array(m) if physical else HermitianMatrix.from_array(m)


def write_state_json(state, path) -> None:
    with open(path, "w") as fh:
        json.dump(state_to_json_dict(state), fh, sort_keys=True)
        fh.write("\n")


def read_state_json(path, physical: bool = True):
    with open(path) as fh:
        return state_from_json_dict(json.load(fh), physical=physical)
