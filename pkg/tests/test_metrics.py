import numpy as np
import pytest

from htomo import (DensityMatrix, DensityPair, DomainError, QuadratureSpec, fock, hellinger,
                   hs_distance, kl_divergence, spec_for_states, state_density_pair,
                   total_variation, trace_distance, vacuum)
from htomo.hermite import gauss_legendre_panels
from htomo.states import density_fn, quadrature_density

from conftest import BASE_SEED, random_density


def gaussian_pair(m1, m2, s=0.3):
    """Two phase-independent Gaussian densities (normalized under dx x dphi/pi)."""
    def make(mu):
        def f(x, phis):
            g = np.exp(-((x - mu) ** 2) / (2 * s * s)) / np.sqrt(2 * np.pi * s * s)
            return np.repeat(g[:, None], len(phis), axis=1)
        return f
    return DensityPair(p=make(m1), q=make(m2))


def test_trace_distance_examples():
    assert trace_distance(vacuum(), vacuum()) == 0.0
    assert trace_distance(fock(0, dim=2), fock(1, dim=2)) == pytest.approx(2.0, abs=1e-12)
    a = DensityMatrix.from_array(np.diag([0.7, 0.3]).astype(complex))
    b = DensityMatrix.from_array(np.diag([0.3, 0.7]).astype(complex))
    assert trace_distance(a, b) == pytest.approx(0.8, abs=1e-12)


def test_hs_distance_examples():
    assert hs_distance(vacuum(), vacuum()) == 0.0
    assert hs_distance(fock(0, dim=2), fock(1, dim=2)) == pytest.approx(np.sqrt(2.0), abs=1e-12)


def test_dimension_padding():
    assert trace_distance(fock(0, dim=2), fock(0, dim=6)) == 0.0


def test_hs_below_trace_on_random_pairs():
    rng = np.random.default_rng(BASE_SEED)
    for _ in range(100):
        d = int(rng.integers(2, 7))
        a, b = random_density(rng, d), random_density(rng, d)
        assert hs_distance(a, b) <= trace_distance(a, b) + 1e-12


def test_total_variation_identical_and_disjoint():
    spec = QuadratureSpec(x_max=10.0)
    same = gaussian_pair(0.0, 0.0)
    assert total_variation(same, spec) == pytest.approx(0.0, abs=1e-12)
    far = gaussian_pair(-4.0, 4.0)
    assert total_variation(far, spec) == pytest.approx(2.0, abs=1e-6)
    assert hellinger(far, spec) == pytest.approx(np.sqrt(2.0), abs=1e-6)
    assert hellinger(same, spec) == 0.0


def test_total_variation_refinement_convergence():
    pair, spec = state_density_pair(vacuum(), fock(1))
    coarse = total_variation(pair, spec)
    fine = total_variation(pair, QuadratureSpec(x_max=spec.x_max, nx=2048, nphi=256))
    assert coarse == pytest.approx(fine, abs=1e-4)


def test_hellinger_tv_ordering_on_random_states():
    rng = np.random.default_rng(BASE_SEED + 1)
    for _ in range(50):
        d = int(rng.integers(2, 7))
        a = DensityMatrix.from_array(random_density(rng, d))
        b = DensityMatrix.from_array(random_density(rng, d))
        pair, spec = state_density_pair(a, b)
        tv = total_variation(pair, spec)
        h = hellinger(pair, spec)
        assert 0.5 * tv <= h + 1e-9
        assert h <= np.sqrt(tv) + 1e-9


def test_measurement_map_contracts_distances():
    rng = np.random.default_rng(BASE_SEED + 2)
    for _ in range(50):
        d = int(rng.integers(2, 7))
        a = DensityMatrix.from_array(random_density(rng, d))
        b = DensityMatrix.from_array(random_density(rng, d))
        pair, spec = state_density_pair(a, b)
        assert total_variation(pair, spec) <= trace_distance(a, b) + 1e-6
        assert hellinger(pair, spec) <= np.sqrt(trace_distance(a, b)) + 1e-6


def test_symmetry_and_triangle_inequality():
    rng = np.random.default_rng(BASE_SEED + 3)
    for _ in range(20):
        d = 4
        a = DensityMatrix.from_array(random_density(rng, d))
        b = DensityMatrix.from_array(random_density(rng, d))
        c = DensityMatrix.from_array(random_density(rng, d))
        for dist in (trace_distance, hs_distance):
            assert dist(a, b) == pytest.approx(dist(b, a), abs=1e-12)
            assert dist(a, c) <= dist(a, b) + dist(b, c) + 1e-8
        spec = spec_for_states(a, b, c)
        fa, fb, fc = density_fn(a), density_fn(b), density_fn(c)
        for dist in (total_variation, hellinger):
            ab = dist(DensityPair(fa, fb), spec)
            ba = dist(DensityPair(fb, fa), spec)
            ac = dist(DensityPair(fa, fc), spec)
            bc = dist(DensityPair(fb, fc), spec)
            assert ab == pytest.approx(ba, abs=1e-8)
            assert ac <= ab + bc + 1e-8


def test_unnormalized_density_rejected():
    spec = QuadratureSpec(x_max=8.0)
    bad = DensityPair(p=lambda x, ph: np.ones((len(x), len(ph))),
                      q=density_fn(vacuum()))
    with pytest.raises(DomainError, match="normalization"):
        total_variation(bad, spec)


def test_kl_divergence_diagnostic():
    pair, spec = state_density_pair(vacuum(), fock(1))
    assert kl_divergence(DensityPair(pair.p, pair.p), spec) == pytest.approx(0.0, abs=1e-10)
    assert kl_divergence(pair, spec) > 0.0


def test_density_pair_normalization_invariant():
    # the module quadrature integrates each state's density to 1 within 1e-6
    from htomo.metrics import quadrature_nodes
    rho = fock(3, dim=8)
    spec = spec_for_states(rho)
    xg, wx, pg, wp = quadrature_nodes(spec)
    mass = float((density_fn(rho)(xg, pg) * wx[:, None] * wp[None, :]).sum())
    assert mass == pytest.approx(1.0, abs=1e-6)
