"""Density-matrix reconstruction from homodyne data.

Two estimators over the N-dimensional number-state sieve:

  * pattern_estimate: entrywise empirical averages
        rho_hat[k, j] = mean_l f_{k,j}(X_l) e^{-i(j-k) Phi_l},  k <= j,
    Hermitian by construction but in general neither positive nor
    normalized (the report carries the constraint residuals).

  * sieved_mle: maximizes the log-likelihood sum_a log p_tau(X_a, Phi_a)
    over N x N density matrices, parametrized as tau = L L^dag / Tr(L L^dag)
    with L complex lower-triangular (real diagonal), so positivity and
    unit trace hold unconditionally.  Quasi-Newton (L-BFGS) ascent with
    multiple restarts; non-convergence returns the best iterate flagged,
    never raises.

The truncation rule N = ceil(n^(1/3)) satisfies every rate condition the
theory imposes on both estimators and is the default for both.

Detector efficiency eta in (1/2, 1) is handled by a three-step pipeline:
estimate the loss-degraded state from the raw data (which are distributed
exactly as ideal quadratures of it; the vacuum fixed-point Var(X') = 1/2
pins this down with no rescaling constant), then invert the binomial
photon-loss map.  The inverse diverges for eta <= 1/2 and is refused by
default.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import minimize
from scipy.special import gammaln

from .errors import DomainError
from .hermite import hermite_basis_with_derivatives
from .measurement import Dataset
from .metrics import hellinger, hs_distance, state_density_pair, trace_distance
from .patterns import PatternFunctionTable, default_table
from .states import DensityMatrix, HermitianMatrix, density_fn


# ---------------------------------------------------------------------------
# sieve selection


@dataclass(frozen=True)
class SieveConfig:
    """Truncation dimension N, the rule that produced it, and the sample count."""

    N: int
    rule: str
    n: int
    warning: str | None = None


def _ceil_cbrt(n: int) -> int:
    return max(1, int(np.ceil(n ** (1.0 / 3.0) - 1e-9)))


def _pattern_cap(n: int) -> int:
    return int(np.floor(n ** (3.0 / 7.0) + 1e-9))


def _mle_cap(n: int) -> int:
    return int(np.floor(np.sqrt(n / np.log(max(n, 3))) + 1e-9))


def choose_truncation(n: int, rule: str, N: int | None = None) -> SieveConfig:
    """Pick the sieve dimension for a sample of size n.

    pattern_rate and mle_rate both use N = ceil(n^(1/3)), clamped to the
    rate caps n^(3/7) resp. (n/log n)^(1/2) (and to at least 1).  For
    rule='fixed' the caller supplies N; cap violations are recorded as a
    warning on the config, not raised, so exploration stays possible.
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    if rule == "pattern_rate":
        return SieveConfig(N=max(1, min(_ceil_cbrt(n), _pattern_cap(n))), rule=rule, n=n)
    if rule == "mle_rate":
        return SieveConfig(N=max(1, min(_ceil_cbrt(n), _mle_cap(n))), rule=rule, n=n)
    if rule == "fixed":
        if N is None or N < 1:
            raise DomainError("rule='fixed' needs an explicit N >= 1")
        warning = None
        caps = []
        if N > _pattern_cap(n):
            caps.append(f"pattern-rate cap n^(3/7)={_pattern_cap(n)}")
        if N > _mle_cap(n):
            caps.append(f"mle-rate cap (n/log n)^(1/2)={_mle_cap(n)}")
        if caps:
            warning = f"N={N} exceeds the {' and '.join(caps)} at n={n}"
        return SieveConfig(N=int(N), rule=rule, n=n, warning=warning)
    raise DomainError(f"unknown truncation rule {rule!r}")


# ---------------------------------------------------------------------------
# reports


@dataclass(frozen=True)
class ConstraintResiduals:
    min_eigenvalue: float
    trace_error: float


@dataclass(frozen=True)
class DistancesToTruth:
    trace: float
    hs: float
    hellinger: float


@dataclass(frozen=True)
class EstimateReport:
    estimate: DensityMatrix | HermitianMatrix
    method: str
    sieve: SieveConfig
    constraint_residuals: ConstraintResiduals
    log_likelihood: float | None = None
    converged: bool | None = None
    distances_to_truth: DistancesToTruth | None = None
    estimate_meas: DensityMatrix | HermitianMatrix | None = None
    eta: float = 1.0


def _residuals(m) -> ConstraintResiduals:
    return ConstraintResiduals(min_eigenvalue=m.min_eigenvalue(),
                               trace_error=abs(m.trace - 1.0))


def _physical(estimate) -> DensityMatrix:
    return estimate if isinstance(estimate, DensityMatrix) else project_to_physical(estimate)


def _distances(estimate, truth: DensityMatrix) -> DistancesToTruth:
    """Trace/HS on the raw estimate; Hellinger between measurement densities
    (using the projected physical state when the estimate is not one)."""
    pair, spec = state_density_pair(_physical(estimate), truth)
    return DistancesToTruth(trace=trace_distance(estimate, truth),
                            hs=hs_distance(estimate, truth),
                            hellinger=hellinger(pair, spec))


# ---------------------------------------------------------------------------
# pattern-function averaging


def _require_ideal(ds: Dataset) -> None:
    if len(ds) == 0:
        raise DomainError("empty dataset")
    if ds.meta.eta != 1.0:
        raise DomainError(f"dataset carries eta={ds.meta.eta}; use estimate_with_efficiency")


def pattern_estimate(ds: Dataset, N: int | None = None,
                     table: PatternFunctionTable | None = None,
                     truth: DensityMatrix | None = None,
                     rule: str = "pattern_rate") -> EstimateReport:
    """Average the pattern functions over the data; unbiased per entry."""
    _require_ideal(ds)
    sieve = choose_truncation(len(ds), rule) if N is None \
        else choose_truncation(len(ds), "fixed", N=N)
    n_dim = sieve.N
    if table is None:
        table = default_table(n_dim - 1) if n_dim > 1 else default_table(1)
    if table.max_index < n_dim - 1:
        raise DomainError(f"pattern table max_index={table.max_index} cannot serve N={n_dim}")

    b, db = hermite_basis_with_derivatives(ds.x, n_dim - 1)
    phase = np.exp(-1j * np.outer(np.arange(n_dim), ds.phi))
    est = np.zeros((n_dim, n_dim), dtype=complex)
    for j in range(n_dim):
        pj, dpj = table.phi_at(j, ds.x)
        f = db[: j + 1] * pj[None, :] + b[: j + 1] * dpj[None, :]
        row = (f * phase[j::-1]).mean(axis=1)  # row k uses phase e^{-i(j-k)phi}
        est[: j + 1, j] = row
        est[j, : j + 1] = row.conjugate()
    out = HermitianMatrix.from_array(est)
    return EstimateReport(estimate=out, method="pattern", sieve=sieve,
                          constraint_residuals=_residuals(out),
                          distances_to_truth=_distances(out, truth) if truth else None)


def hoeffding_bound(n: int, N: int, a: float,
                    table: PatternFunctionTable | None = None) -> float:
    """N^2 exp(-n a^2 / sum_{k,j<N} ||f_{k,j}||_inf^2).

    Concentration bound on P(||rho_hat - rho^(N)||_2 >= a); informational
    and allowed to exceed 1.
    """
    if a <= 0:
        raise DomainError("a must be > 0")
    if n < 0:
        raise DomainError("n must be >= 0")
    if table is None:
        table = default_table(N - 1)
    s = table.square_sum(N)
    return float(N * N * math.exp(-n * a * a / s))


# ---------------------------------------------------------------------------
# sieved maximum likelihood


def _pack_size(n_dim: int) -> int:
    return n_dim * n_dim  # real diag + re/im of strict lower triangle


def _unpack(theta: np.ndarray, n_dim: int, rows, cols) -> np.ndarray:
    L = np.zeros((n_dim, n_dim), dtype=complex)
    L[np.arange(n_dim), np.arange(n_dim)] = theta[:n_dim]
    n_off = rows.size
    L[rows, cols] = theta[n_dim: n_dim + n_off] + 1j * theta[n_dim + n_off:]
    return L


def _pack(L: np.ndarray, n_dim: int, rows, cols) -> np.ndarray:
    theta = np.empty(_pack_size(n_dim))
    theta[:n_dim] = np.real(np.diag(L))
    n_off = rows.size
    theta[n_dim: n_dim + n_off] = np.real(L[rows, cols])
    theta[n_dim + n_off:] = np.imag(L[rows, cols])
    return theta


def _mle_objective(theta, U, n_dim, rows, cols):
    """Negative mean log-likelihood and its gradient in the packed coordinates."""
    n = U.shape[1]
    L = _unpack(theta, n_dim, rows, cols)
    W = L.conj().T @ U                                   # columns L^dag u_a
    pt = np.einsum("ij,ij->j", W.conj(), W).real
    np.maximum(pt, 1e-300, out=pt)
    tr = np.einsum("ij,ij->", L.conj(), L).real
    value = np.log(pt).mean() - np.log(tr)
    G = (U / pt[None, :]) @ W.conj().T / n - L / tr      # Wirtinger d/dL*
    grad = np.empty_like(theta)
    grad[:n_dim] = 2.0 * np.real(np.diag(G))
    n_off = rows.size
    grad[n_dim: n_dim + n_off] = 2.0 * np.real(G[rows, cols])
    grad[n_dim + n_off:] = 2.0 * np.imag(G[rows, cols])
    return -value, -grad


def _init_factors(kind: str, n_dim: int, ds: Dataset, table, rng) -> np.ndarray:
    if kind == "mixed":
        return np.eye(n_dim, dtype=complex) / np.sqrt(n_dim)
    if kind == "pattern":
        rep = pattern_estimate(ds, N=n_dim, table=table)
        rho0 = project_to_physical(rep.estimate).matrix
        blend = 0.99 * rho0 + 0.01 * np.eye(n_dim) / n_dim
        return np.linalg.cholesky(blend)
    if kind == "random":
        L = rng.standard_normal((n_dim, n_dim)) + 1j * rng.standard_normal((n_dim, n_dim))
        L = np.tril(L)
        L[np.arange(n_dim), np.arange(n_dim)] = 0.3 + np.abs(np.diag(L).real)
        return L / np.sqrt((np.abs(L) ** 2).sum())
    raise DomainError(f"unknown init strategy {kind!r}")


def sieved_mle(ds: Dataset, N: int | None = None, max_iters: int = 2000,
               tol: float = 1e-6, restarts: int = 3,
               table: PatternFunctionTable | None = None,
               truth: DensityMatrix | None = None,
               rule: str = "mle_rate") -> EstimateReport:
    """Maximum likelihood over the N-dimensional sieve.

    Restarts are initialized at (1) the maximally mixed state, (2) the
    projected pattern estimate, (3) seeded random factors, in that order;
    they are independent and the best final likelihood wins.  Convergence
    means the max-norm of the mean-log-likelihood gradient fell below tol
    within max_iters iterations; otherwise the best iterate is returned
    with converged=False.
    """
    _require_ideal(ds)
    sieve = choose_truncation(len(ds), rule) if N is None \
        else choose_truncation(len(ds), "fixed", N=N)
    n_dim = sieve.N
    n = len(ds)

    b, _ = hermite_basis_with_derivatives(ds.x, n_dim - 1)
    U = b * np.exp(1j * np.outer(np.arange(n_dim), ds.phi))
    rows, cols = np.tril_indices(n_dim, k=-1)

    strategies = ["mixed", "pattern", "random"]
    if restarts < 1:
        raise DomainError("restarts must be >= 1")
    plan = [strategies[i] if i < 3 else "random" for i in range(restarts)]

    best = None
    converged = False
    for idx, kind in enumerate(plan):
        rng = np.random.Generator(np.random.Philox(
            np.random.SeedSequence(entropy=(ds.meta.seed & 0xFFFFFFFFFFFF, idx, 0x4D4C45))))
        if kind == "pattern" and table is None and n_dim > 48:
            kind = "mixed"  # avoid building a giant default table implicitly
        L0 = _init_factors(kind, n_dim, ds, table, rng)
        theta0 = _pack(L0, n_dim, rows, cols)
        res = minimize(_mle_objective, theta0, args=(U, n_dim, rows, cols),
                       jac=True, method="L-BFGS-B",
                       options={"maxiter": max_iters, "gtol": tol, "ftol": 0.0,
                                "maxcor": 20})
        g_inf = float(np.abs(res.jac).max())
        if g_inf < tol:
            converged = True
        if best is None or res.fun < best[0]:
            best = (res.fun, res.x)

    L = _unpack(best[1], n_dim, rows, cols)
    rho = L @ L.conj().T
    rho /= np.trace(rho).real
    out = DensityMatrix.from_array(rho)
    log_lik = -float(best[0]) * n
    return EstimateReport(estimate=out, method="mle", sieve=sieve,
                          constraint_residuals=_residuals(out),
                          log_likelihood=log_lik, converged=converged,
                          distances_to_truth=_distances(out, truth) if truth else None)


def log_likelihood(ds: Dataset, rho: DensityMatrix) -> float:
    """sum_a log p_rho(X_a, Phi_a); shared by tests and diagnostics."""
    d = rho.dim
    b, _ = hermite_basis_with_derivatives(ds.x, d - 1)
    U = b * np.exp(1j * np.outer(np.arange(d), ds.phi))
    p = np.einsum("ia,ij,ja->a", U.conj(), rho.matrix, U).real
    return float(np.log(np.maximum(p, 1e-300)).sum())


# ---------------------------------------------------------------------------
# efficiency: binomial loss map and its inverse


def _bernoulli_apply(m: np.ndarray, t: float, s: float) -> tuple[np.ndarray, float]:
    """out[j,k] = sum_p sqrt(C(j+p,j) C(k+p,k)) t^((j+k)/2) s^p m[j+p,k+p].

    Forward loss uses (t, s) = (eta, 1-eta); the inverse substitutes
    eta -> 1/eta, making s negative and the series alternating.  Returns
    the transform and the magnitude of the largest term that touched the
    input's outermost retained diagonal (a truncation-tail indicator).
    """
    d = m.shape[0]
    lg = gammaln(np.arange(2 * d + 1))
    j = np.arange(d)
    half_pow = t ** (0.5 * j)            # t^(j/2), combined pairwise below
    out = np.zeros_like(m, dtype=complex)
    tail = 0.0
    for p in range(d):
        size = d - p
        jj = np.arange(size)
        # sqrt(C(j+p, j)) for the row and column indices
        root_binom = np.exp(0.5 * (lg[jj + p + 1] - lg[jj + 1] - lg[p + 1]))
        coeff = (root_binom * half_pow[:size])[:, None] * (root_binom * half_pow[:size])[None, :]
        term = (s ** p) * coeff * m[p:, p:]
        out[:size, :size] += term
        if size >= 1:
            edge = max(np.abs(term[-1, :]).max(), np.abs(term[:, -1]).max())
            if p > 0:
                tail = max(tail, float(edge))
    return out, tail


def bernoulli_transform(state, eta: float, direction: str = "forward",
                        allow_divergent: bool = False, return_tail: bool = False):
    """Binomial photon-loss map on matrix elements, or its inverse.

    direction='forward' requires 0 < eta < 1 and models each photon
    surviving with probability eta; it preserves trace and positivity.
    direction='inverse' substitutes eta -> 1/eta; for eta <= 1/2 the
    resulting power series in (1 - 1/eta) diverges with dimension, so it
    is refused unless allow_divergent=True.  The output has the input's
    dimension; with return_tail=True the truncation-tail indicator is
    returned alongside.
    """
    if direction not in ("forward", "inverse"):
        raise DomainError("direction must be 'forward' or 'inverse'")
    if not 0.0 < eta < 1.0:
        raise DomainError(f"eta={eta!r} outside (0, 1)")
    if direction == "inverse" and eta <= 0.5 and not allow_divergent:
        raise DomainError(
            f"inverse with eta={eta:g} <= 1/2 refused: the series in (1 - 1/eta) diverges, "
            "obstructing reconstruction; pass allow_divergent=True to experiment anyway")
    wrapper = type(state) if isinstance(state, (DensityMatrix, HermitianMatrix)) else None
    m = state.matrix if wrapper else np.asarray(state, dtype=complex)
    if direction == "forward":
        out, tail = _bernoulli_apply(m, eta, 1.0 - eta)
    else:
        inv = 1.0 / eta
        out, tail = _bernoulli_apply(m, inv, 1.0 - inv)
    if wrapper is DensityMatrix:
        try:
            result = DensityMatrix.from_array(out)
        except DomainError:
            # the inverse map is not completely positive; fall back honestly
            result = HermitianMatrix.from_array(out)
    elif wrapper is HermitianMatrix:
        result = HermitianMatrix.from_array(out)
    else:
        result = out
    return (result, tail) if return_tail else result


def estimate_with_efficiency(ds: Dataset, N: int | None = None, method: str = "pattern",
                             table: PatternFunctionTable | None = None,
                             truth: DensityMatrix | None = None,
                             **mle_opts) -> EstimateReport:
    """Reconstruct through detector loss eta in (1/2, 1).

    The degraded samples X' = sqrt(eta) X + sqrt((1-eta)/2) Y are already
    distributed as ideal quadratures of the loss-transformed state (no
    rescaling constant appears: the vacuum fixed point Var(X') = 1/2 and
    the end-to-end closure test pin the constant to 1).  So: estimate the
    degraded state from the raw samples, then invert the binomial loss
    map.  The report carries both the degraded and corrected estimates.
    """
    if len(ds) == 0:
        raise DomainError("empty dataset")
    eta = ds.meta.eta
    if eta == 1.0:
        raise DomainError("dataset eta is 1 (or metadata was missing); "
                          "use pattern_estimate or sieved_mle directly")
    if not 0.5 < eta < 1.0:
        raise DomainError(
            f"eta={eta:g} outside (1/2, 1): reconstruction through the inverse loss map "
            "diverges for eta <= 1/2 and is refused")
    ideal = Dataset(x=ds.x.copy(), phi=ds.phi.copy(), meta=replace(ds.meta, eta=1.0))
    if method == "pattern":
        meas_report = pattern_estimate(ideal, N=N, table=table)
    elif method == "mle":
        meas_report = sieved_mle(ideal, N=N, table=table, **mle_opts)
    else:
        raise DomainError(f"unknown method {method!r}")
    corrected = bernoulli_transform(meas_report.estimate, eta, "inverse")
    return EstimateReport(estimate=corrected, method=method, sieve=meas_report.sieve,
                          constraint_residuals=_residuals(corrected),
                          log_likelihood=meas_report.log_likelihood,
                          converged=meas_report.converged,
                          distances_to_truth=_distances(corrected, truth) if truth else None,
                          estimate_meas=meas_report.estimate, eta=eta)


# ---------------------------------------------------------------------------
# projection onto the physical set


def _simplex_projection(v: np.ndarray) -> np.ndarray:
    """Euclidean projection of v onto {w >= 0, sum w = 1}."""
    u = np.sort(v)[::-1]
    cumulative = np.cumsum(u)
    idx = np.arange(1, v.size + 1)
    mask = u - (cumulative - 1.0) / idx > 0
    k = int(idx[mask][-1])
    theta = (cumulative[k - 1] - 1.0) / k
    return np.maximum(v - theta, 0.0)


def project_to_physical(m: HermitianMatrix | DensityMatrix) -> DensityMatrix:
    """Nearest density matrix in Frobenius norm: project the spectrum
    onto the probability simplex and reassemble."""
    if isinstance(m, DensityMatrix):
        return m
    mat = m.matrix if isinstance(m, HermitianMatrix) else HermitianMatrix.from_array(m).matrix
    evals, evecs = np.linalg.eigh(mat)
    w = _simplex_projection(evals)
    out = (evecs * w[None, :]) @ evecs.conj().T
    out /= np.trace(out).real
    return DensityMatrix.from_array(out)
