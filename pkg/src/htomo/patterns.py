"""Pattern functions f_{k,j}(x) = d/dx (psi_k(x) phi_j(x)) and their tables.

A table holds, for all index pairs 0 <= k <= j <= max_index,

  * samples of f_{k,j} on a uniform grid covering [-x_max, x_max] with
    x_max = sqrt(2*max_index+1) + 5 and spacing 2*x_max/grid_points,
  * sup norms ||f_{k,j}||_inf from a dense scan refined (8x by default)
    over the band of turning points sqrt(2k+1), where the maxima live,
    with a parabolic peak correction so the reported sup never falls
    below the grid maximum and is stable under grid refinement.

Derivatives are exact: psi_k' comes from the ladder relation
psi_k' = x psi_k - sqrt(2(k+1)) psi_{k+1} and phi_j' is the second
component of the integrated oscillator equation; no finite differences.
Off-grid evaluation uses cubic interpolation of phi_j and phi_j' (error
budget ~1e-6) combined with exactly recomputed psi_k.

Tables are immutable once built and safe for concurrent readers.
"""

from __future__ import annotations

import threading
import zlib
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import DomainError
from .hermite import hermite_basis_with_derivatives
from .irregular import irregular_solution

_MAGIC = b"HTPT"
_VERSION = 1


def _pair_index(k: int, j: int, n: int) -> int:
    # row-major over the upper triangle of an (n+1)x(n+1) index square
    return k * (n + 1) - k * (k - 1) // 2 + (j - k)


def _parabolic_peak(ys: np.ndarray, i: int, lo: int, hi: int) -> float:
    """Vertex value of the parabola through ys[i-1:i+2]; ys sampled uniformly.

    Only applied when i is interior to [lo, hi) and a strict local max, in
    which case the vertex value is >= ys[i].
    """
    if i <= lo or i >= hi - 1:
        return ys[i]
    ym, y0, yp = ys[i - 1], ys[i], ys[i + 1]
    denom = 2.0 * y0 - ym - yp
    if denom <= 0.0 or y0 < ym or y0 < yp:
        return ys[i]
    return y0 + (yp - ym) ** 2 / (8.0 * denom)


@dataclass
class PatternFunctionTable:
    max_index: int
    grid: np.ndarray
    values: np.ndarray      # (n_pairs, len(grid)) f_{k,j} samples, k <= j
    sup_norms: np.ndarray   # (N+1, N+1) symmetric, defined on the triangle
    phi: np.ndarray         # (N+1, len(grid)) irregular solutions
    dphi: np.ndarray        # (N+1, len(grid)) their derivatives
    x_max: float
    grid_points: int
    refine_factor: int
    _splines: dict = field(default_factory=dict, repr=False)
    _spline_lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def _check_pair(self, k: int, j: int) -> None:
        if k < 0 or j < k:
            raise DomainError(f"pattern functions are tabulated for 0 <= k <= j; got k={k}, j={j}"
                              " (use conjugate symmetry for the lower triangle)")
        if j > self.max_index:
            raise DomainError(f"index j={j} exceeds table max_index={self.max_index}")

    def f_values(self, k: int, j: int) -> np.ndarray:
        """Tabulated f_{k,j} on self.grid."""
        self._check_pair(k, j)
        return self.values[_pair_index(k, j, self.max_index)]

    def sup_norm(self, k: int, j: int) -> float:
        self._check_pair(k, j)
        return float(self.sup_norms[k, j])

    def triangle_sum(self, n: int) -> float:
        """Sum of ||f_{k,j}||_inf^2 over 0 <= k <= j <= n."""
        if n > self.max_index:
            raise DomainError(f"n={n} exceeds table max_index={self.max_index}")
        tri = np.triu(self.sup_norms[: n + 1, : n + 1] ** 2)
        return float(tri.sum())

    def square_sum(self, n: int) -> float:
        """Sum of ||f_{k,j}||_inf^2 over the full square 0 <= k, j < n."""
        if n - 1 > self.max_index:
            raise DomainError(f"n-1={n - 1} exceeds table max_index={self.max_index}")
        sq = self.sup_norms[:n, :n] ** 2
        return float(sq.sum())

    def phi_spline(self, j: int):
        """Cubic interpolants of (phi_j, phi_j') on [0, x_max]; built lazily."""
        with self._spline_lock:
            if j not in self._splines:
                half = self.grid.size // 2
                xs = self.grid[half:]
                self._splines[j] = (CubicSpline(xs, self.phi[j, half:]),
                                    CubicSpline(xs, self.dphi[j, half:]))
            return self._splines[j]

    def phi_at(self, j: int, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(phi_j, phi_j') at arbitrary points inside the grid, by interpolation."""
        x = np.asarray(x, dtype=float)
        if np.any(np.abs(x) > self.x_max):
            raise DomainError(f"|x| exceeds the table span {self.x_max:g}")
        s, sd = self.phi_spline(j)
        par = (-1.0) ** (j + 1)
        sgn = np.where(x >= 0, 1.0, par)
        return sgn * s(np.abs(x)), np.where(x >= 0, 1.0, -par) * sd(np.abs(x))

    def pattern_function(self, k: int, j: int, x):
        """f_{k,j}(x) at arbitrary x (scalar or array) inside the grid span."""
        self._check_pair(k, j)
        arr = np.atleast_1d(np.asarray(x, dtype=float))
        b, db = hermite_basis_with_derivatives(arr, k)
        pj, dpj = self.phi_at(j, arr)
        out = db[k] * pj + b[k] * dpj
        return float(out[0]) if np.ndim(x) == 0 else out


def build_pattern_table(max_index: int, grid_points: int = 4096,
                        refine_factor: int = 8) -> PatternFunctionTable:
    """Tabulate all pattern functions with indices up to max_index.

    Cost is dominated by max_index+1 ODE integrations and the refined
    sup-norm scan; ~30 s for max_index=64 at the default resolution.
    """
    if max_index < 0:
        raise DomainError("max_index must be >= 0")
    n = int(max_index)
    x_max = float(np.sqrt(2.0 * n + 1.0) + 5.0)
    grid = np.linspace(-x_max, x_max, grid_points + 1)

    psi, dpsi = hermite_basis_with_derivatives(grid, n)
    phi = np.empty((n + 1, grid.size))
    dphi = np.empty_like(phi)
    sols = []
    for j in range(n + 1):
        sol = irregular_solution(j, x_limit=x_max)
        sols.append(sol)
        phi[j], dphi[j] = sol.value_and_derivative(grid)

    n_pairs = (n + 1) * (n + 2) // 2
    values = np.empty((n_pairs, grid.size))
    for k in range(n + 1):
        base = _pair_index(k, k, n)
        values[base: base + (n + 1 - k)] = dpsi[k] * phi[k:] + psi[k] * dphi[k:]

    # Refined scan band: turning points sqrt(2k+1) each widened by
    # 2*max(k,1)^(-1/6); their union is a single band starting below the
    # first turning point.  |f_{k,j}| is even, so x >= 0 suffices.
    widths = 2.0 * np.maximum(np.arange(n + 1), 1) ** (-1.0 / 6.0)
    turning = np.sqrt(2.0 * np.arange(n + 1) + 1.0)
    band_hi = min(float((turning + widths).max()), x_max)
    h_fine = (2.0 * x_max / grid_points) / refine_factor
    fine = np.arange(0.0, band_hi + h_fine, h_fine)
    psi_f, dpsi_f = hermite_basis_with_derivatives(fine, n)
    phi_f = np.empty((n + 1, fine.size))
    dphi_f = np.empty_like(phi_f)
    for j in range(n + 1):
        phi_f[j], dphi_f[j] = sols[j].value_and_derivative(fine)

    sup = np.zeros((n + 1, n + 1))
    for k in range(n + 1):
        base = _pair_index(k, k, n)
        f_fine = np.abs(dpsi_f[k] * phi_f[k:] + psi_f[k] * dphi_f[k:])
        grid_max = np.abs(values[base: base + (n + 1 - k)]).max(axis=1)
        fine_arg = f_fine.argmax(axis=1)
        for idx, j in enumerate(range(k, n + 1)):
            peak = _parabolic_peak(f_fine[idx], int(fine_arg[idx]), 0, fine.size)
            s = max(float(grid_max[idx]), float(f_fine[idx, fine_arg[idx]]), peak)
            sup[k, j] = s
            sup[j, k] = s

    return PatternFunctionTable(max_index=n, grid=grid, values=values, sup_norms=sup,
                                phi=phi, dphi=dphi, x_max=x_max,
                                grid_points=int(grid_points),
                                refine_factor=int(refine_factor))


def save_pattern_table(table: PatternFunctionTable, path) -> None:
    """Binary cache: versioned header, little-endian f8 payload, CRC32 trailer.

    f_{k,j} samples are recomputed on load from phi/dphi (deterministic),
    keeping the file an order of magnitude smaller than the full table.
    """
    n = table.max_index
    header = (_MAGIC + np.array([_VERSION, n, table.grid_points, table.refine_factor],
                                dtype="<u4").tobytes()
              + np.array([table.x_max], dtype="<f8").tobytes())
    payload = b"".join(arr.astype("<f8", copy=False).tobytes()
                       for arr in (table.grid, table.phi, table.dphi, table.sup_norms))
    crc = np.array([zlib.crc32(payload)], dtype="<u4").tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)
        fh.write(crc)


def load_pattern_table(path) -> PatternFunctionTable:
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] != _MAGIC:
        raise DomainError(f"{path}: not a pattern-table cache (bad magic)")
    version, n, grid_points, refine = np.frombuffer(raw[4:20], dtype="<u4")
    if version != _VERSION:
        raise DomainError(f"{path}: unsupported cache version {version}")
    x_max = float(np.frombuffer(raw[20:28], dtype="<f8")[0])
    payload = raw[28:-4]
    crc_stored = int(np.frombuffer(raw[-4:], dtype="<u4")[0])
    if zlib.crc32(payload) != crc_stored:
        raise DomainError(f"{path}: checksum mismatch, cache is corrupt")
    g = int(grid_points) + 1
    expect = g + 2 * (n + 1) * g + (n + 1) ** 2
    data = np.frombuffer(payload, dtype="<f8")
    if data.size != expect:
        raise DomainError(f"{path}: payload size mismatch")
    grid = data[:g].copy()
    off = g
    phi = data[off: off + (n + 1) * g].reshape(n + 1, g).copy()
    off += (n + 1) * g
    dphi = data[off: off + (n + 1) * g].reshape(n + 1, g).copy()
    off += (n + 1) * g
    sup = data[off:].reshape(n + 1, n + 1).copy()

    psi, dpsi = hermite_basis_with_derivatives(grid, n)
    n_pairs = (n + 1) * (n + 2) // 2
    values = np.empty((n_pairs, g))
    for k in range(n + 1):
        base = _pair_index(k, k, n)
        values[base: base + (n + 1 - k)] = dpsi[k] * phi[k:] + psi[k] * dphi[k:]
    return PatternFunctionTable(max_index=int(n), grid=grid, values=values, sup_norms=sup,
                                phi=phi, dphi=dphi, x_max=x_max,
                                grid_points=int(grid_points), refine_factor=int(refine))


_default_table: PatternFunctionTable | None = None
_default_lock = threading.Lock()


def default_table(min_index: int = 8) -> PatternFunctionTable:
    """Shared table grown on demand to the next power of two >= min_index."""
    global _default_table
    with _default_lock:
        if _default_table is None or _default_table.max_index < min_index:
            size = 8
            while size < min_index:
                size *= 2
            _default_table = build_pattern_table(size)
        return _default_table


def pattern_function(k: int, j: int, x, table: PatternFunctionTable | None = None):
    """f_{k,j}(x); builds/reuses the shared table when none is given."""
    if table is None:
        table = default_table(max(j, k))
    return table.pattern_function(k, j, x)


def pattern_sup_norm(k: int, j: int, table: PatternFunctionTable | None = None) -> float:
    if table is None:
        table = default_table(max(j, k))
    return table.sup_norm(k, j)


def pattern_norm_triangle_sum(n: int, table: PatternFunctionTable | None = None) -> float:
    if table is None:
        table = default_table(n)
    return table.triangle_sum(n)
