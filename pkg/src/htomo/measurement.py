"""Homodyne measurement simulation and dataset persistence.

Each observation is a pair (x, phi): the phase is drawn uniformly from
[0, pi] and x from the conditional quadrature density p_rho(. , phi) by
rejection sampling under a Gaussian envelope N(0, D/2 + 1), whose scale
dominates the quadrature variance of any D-level state.

All randomness flows through numpy's counter-based Philox4x64-10 bit
generator so that fixtures are reproducible across platforms: a dataset
is a deterministic function of (seed, n, worker_count), and worker
chunks derive their streams from SeedSequence(seed).spawn(worker_count).

Datasets persist as CSV with a JSON metadata header line prefixed '#';
floats are written with repr() so round trips are byte-identical.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, replace
from typing import Iterator, NamedTuple

import numpy as np

from .errors import DatasetFormatError, DomainError, MetadataWarning, SamplingError
from .hermite import hermite_basis
from .states import DensityMatrix, StateSpec

_MAX_ROUNDS = 1000


class Sample(NamedTuple):
    x: float
    phi: float


@dataclass(frozen=True)
class DatasetMeta:
    seed: int
    n: int
    eta: float = 1.0
    source: StateSpec | None = None


@dataclass(frozen=True)
class Dataset:
    x: np.ndarray
    phi: np.ndarray
    meta: DatasetMeta

    def __post_init__(self):
        if self.x.shape != self.phi.shape or self.x.ndim != 1:
            raise DomainError("x and phi must be 1-d arrays of equal length")
        if self.meta.n != self.x.size:
            raise DomainError("meta.n disagrees with the number of samples")
        self.x.setflags(write=False)
        self.phi.setflags(write=False)

    def __len__(self) -> int:
        return self.x.size

    def __getitem__(self, i: int) -> Sample:
        return Sample(float(self.x[i]), float(self.phi[i]))

    @property
    def samples(self) -> Iterator[Sample]:
        return (Sample(float(a), float(b)) for a, b in zip(self.x, self.phi))


def _envelope(rho: DensityMatrix):
    """(sigma, c) with c * N(0, sigma^2) >= p_rho(x | phi) everywhere.

    c is set by scanning the density/envelope ratio on a dense (x, phi)
    grid and inflating by 5%.
    """
    d = rho.dim
    sigma = np.sqrt(d / 2.0 + 1.0)
    x_hi = np.sqrt(2.0 * d) + 6.0
    xs = np.linspace(-x_hi, x_hi, 2049)
    env = np.exp(-xs ** 2 / (2.0 * sigma ** 2)) / np.sqrt(2.0 * np.pi * sigma ** 2)
    b = hermite_basis(xs, d - 1)
    ratio_max = 0.0
    edge_max = 0.0
    for phi in np.linspace(0.0, np.pi, 33):
        u = b * np.exp(1j * np.arange(d)[:, None] * phi)
        p = np.einsum("il,ij,jl->l", u.conj(), rho.matrix, u).real
        ratio = p / env
        ratio_max = max(ratio_max, float(ratio.max()))
        edge_max = max(edge_max, float(max(ratio[0], ratio[-1])))
    if edge_max > ratio_max * 1e-6:
        raise SamplingError("envelope scan window too narrow; density/envelope ratio "
                            f"has not decayed at the boundary (edge ratio {edge_max:.3e})")
    return sigma, ratio_max * 1.05


def _conditional_sample(rho: DensityMatrix, phis: np.ndarray, rng,
                        sigma: float, c: float) -> np.ndarray:
    """Draw x_i ~ p_rho(. , phis[i]) by vectorized rejection."""
    d = rho.dim
    ks = np.arange(d)[:, None]
    xs = np.empty(phis.size)
    pending = np.arange(phis.size)
    proposed = accepted = 0
    for _ in range(_MAX_ROUNDS):
        if pending.size == 0:
            return xs
        prop = rng.normal(0.0, sigma, pending.size)
        uni = rng.uniform(0.0, 1.0, pending.size)
        b = hermite_basis(prop, d - 1)
        u = b * np.exp(1j * ks * phis[pending][None, :])
        dens = np.einsum("il,ij,jl->l", u.conj(), rho.matrix, u).real
        env = c * np.exp(-prop ** 2 / (2.0 * sigma ** 2)) / np.sqrt(2.0 * np.pi * sigma ** 2)
        acc = uni * env <= dens
        xs[pending[acc]] = prop[acc]
        pending = pending[~acc]
        proposed += acc.size
        accepted += int(acc.sum())
        if proposed > 200 and accepted < 0.01 * proposed:
            break
    raise SamplingError(
        f"rejection envelope failure: acceptance {accepted}/{proposed} "
        f"({(accepted / max(proposed, 1)):.2%}) with c={c:.3g}, sigma={sigma:.3g}")


def sample_homodyne(rho: DensityMatrix, n: int, seed: int, workers: int = 1,
                    source: StateSpec | None = None) -> Dataset:
    """Simulate n ideal homodyne observations from rho.

    Output is a deterministic function of (seed, n, workers); the default
    workers=1 is the fixture configuration.
    """
    if n < 0:
        raise DomainError("n must be >= 0")
    if workers < 1:
        raise DomainError("workers must be >= 1")
    meta = DatasetMeta(seed=int(seed), n=int(n), eta=1.0, source=source)
    if n == 0:
        return Dataset(x=np.empty(0), phi=np.empty(0), meta=meta)
    sigma, c = _envelope(rho)
    streams = np.random.SeedSequence(int(seed)).spawn(workers)
    sizes = [n // workers + (1 if i < n % workers else 0) for i in range(workers)]
    xs, phis = [], []
    for size, stream in zip(sizes, streams):
        if size == 0:
            continue
        rng = np.random.Generator(np.random.Philox(stream))
        ph = rng.uniform(0.0, np.pi, size)
        xs.append(_conditional_sample(rho, ph, rng, sigma, c))
        phis.append(ph)
    return Dataset(x=np.concatenate(xs), phi=np.concatenate(phis), meta=meta)


def sample_quadrature(rho: DensityMatrix, phi0: float, n: int, seed: int) -> np.ndarray:
    """n draws of x from the fixed-phase density p_rho(. , phi0)."""
    if not 0.0 <= phi0 <= np.pi:
        raise DomainError("phi0 must lie in [0, pi]")
    sigma, c = _envelope(rho)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))
    return _conditional_sample(rho, np.full(int(n), float(phi0)), rng, sigma, c)


def apply_efficiency(ds: Dataset, eta: float, seed: int) -> Dataset:
    """Detector-loss noise: x -> sqrt(eta) x + sqrt((1-eta)/2) g, g ~ N(0,1).

    Only ideal datasets (meta.eta == 1) may be degraded, and only once.
    """
    if not 0.0 < eta < 1.0:
        raise DomainError(f"eta={eta!r} outside (0, 1)")
    if ds.meta.eta != 1.0:
        raise DomainError(f"dataset already carries eta={ds.meta.eta}; refusing to degrade twice")
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))
    g = rng.standard_normal(len(ds))
    x = np.sqrt(eta) * ds.x + np.sqrt((1.0 - eta) / 2.0) * g
    return Dataset(x=x, phi=ds.phi.copy(), meta=replace(ds.meta, eta=float(eta)))


def _meta_to_json(meta: DatasetMeta) -> str:
    d = {"seed": meta.seed, "n": meta.n, "eta": meta.eta,
         "source": meta.source.to_json_dict() if meta.source else None}
    return json.dumps(d, sort_keys=True)


def write_dataset(ds: Dataset, path) -> None:
    with open(path, "w") as fh:
        fh.write("# " + _meta_to_json(ds.meta) + "\n")
        fh.write("x,phi\n")
        for xv, pv in zip(ds.x, ds.phi):
            fh.write(f"{float(xv)!r},{float(pv)!r}\n")


def read_dataset(path) -> Dataset:
    """Load a dataset CSV; validates finiteness and phi in [0, pi].

    A missing metadata header is tolerated (eta defaults to 1) with a
    warning; malformed rows are rejected with their line number.
    """
    with open(path) as fh:
        lines = fh.read().splitlines()
    meta_dict = None
    start = 0
    if lines and lines[0].startswith("#"):
        try:
            meta_dict = json.loads(lines[0][1:].strip())
        except json.JSONDecodeError as exc:
            raise DatasetFormatError(f"line 1: bad metadata JSON ({exc})") from None
        start = 1
    else:
        warnings.warn("dataset has no metadata header; assuming eta=1",
                      MetadataWarning, stacklevel=2)
    if start < len(lines) and lines[start].strip() == "x,phi":
        start += 1
    xs, phis = [], []
    for lineno, line in enumerate(lines[start:], start=start + 1):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise DatasetFormatError(f"line {lineno}: expected 'x,phi', got {line!r}")
        try:
            xv, pv = float(parts[0]), float(parts[1])
        except ValueError:
            raise DatasetFormatError(f"line {lineno}: non-numeric field in {line!r}") from None
        if not (np.isfinite(xv) and np.isfinite(pv)):
            raise DatasetFormatError(f"line {lineno}: non-finite sample")
        if not 0.0 <= pv <= np.pi:
            raise DatasetFormatError(f"line {lineno}: phi={pv!r} outside [0, pi]")
        xs.append(xv)
        phis.append(pv)
    if meta_dict is None:
        meta = DatasetMeta(seed=0, n=len(xs), eta=1.0, source=None)
    else:
        source = StateSpec.from_json_dict(meta_dict["source"]) if meta_dict.get("source") else None
        meta = DatasetMeta(seed=int(meta_dict.get("seed", 0)), n=len(xs),
                           eta=float(meta_dict.get("eta", 1.0)), source=source)
        if meta_dict.get("n") not in (None, len(xs)):
            raise DatasetFormatError(
                f"metadata n={meta_dict['n']} disagrees with {len(xs)} data rows")
    return Dataset(x=np.array(xs, dtype=float), phi=np.array(phis, dtype=float), meta=meta)
