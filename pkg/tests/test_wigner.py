import numpy as np
import pytest
from scipy.linalg import expm

from htomo import (DomainError, coherent, fock, quadrature_density, radon_consistency,
                   radon_transform, thermal, vacuum, wigner_function, write_wigner_csv)
from htomo.wigner import characteristic_function, _displacement_element_block


def test_displacement_elements_against_expm_oracle():
    # matrix exponential in a much larger space so truncation cannot leak in
    dim_big, dim = 60, 6
    a = np.diag(np.sqrt(np.arange(1.0, dim_big)), 1)
    for beta in (0.3 + 0.2j, 1.5 - 0.7j, 2.0 + 2.0j):
        oracle = expm(beta * a.conj().T - np.conjugate(beta) * a)[:dim, :dim]
        got = np.empty((dim, dim), complex)
        for m in range(dim):
            for n in range(dim):
                got[m, n] = _displacement_element_block(m, n, np.array(beta))
        assert np.abs(got - oracle).max() < 1e-12


def test_vacuum_characteristic_function_is_gaussian():
    u = np.linspace(-6, 6, 41)
    chi = characteristic_function(vacuum(), u, u)
    want = np.exp(-(u[:, None] ** 2 + u[None, :] ** 2) / 4.0)
    assert np.abs(chi - want).max() < 1e-12


def oracle_wigner_origin(chi_fn, u_max=14.0, n=1201):
    """Independent 2-d trapezoid inversion of an analytic characteristic fn."""
    u = np.linspace(-u_max, u_max, n)
    du = u[1] - u[0]
    grid = chi_fn(u[:, None], u[None, :])
    return grid.sum() * du * du / (2 * np.pi) ** 2


def test_vacuum_origin_value():
    w = wigner_function(vacuum())
    i0 = w.q_axis.size // 2
    assert w.q_axis[i0] == 0.0
    oracle = oracle_wigner_origin(lambda u, v: np.exp(-(u ** 2 + v ** 2) / 4.0))
    assert abs(oracle - 1 / np.pi) < 1e-6
    assert w.values[i0, i0] == pytest.approx(1 / np.pi, abs=1e-4)


def test_fock1_origin_is_negative():
    w = wigner_function(fock(1, dim=2))
    i0 = w.q_axis.size // 2
    oracle = oracle_wigner_origin(
        lambda u, v: np.exp(-(u ** 2 + v ** 2) / 4.0) * (1.0 - (u ** 2 + v ** 2) / 2.0))
    assert abs(oracle + 1 / np.pi) < 1e-6
    assert w.values[i0, i0] == pytest.approx(-1 / np.pi, abs=1e-4)
    assert w.values.min() < 0  # negativity witnessed


@pytest.mark.parametrize("rho", [vacuum(), fock(1), coherent(1.0, dim=20), thermal(0.5, dim=20)])
def test_normalization(rho):
    w = wigner_function(rho)
    assert w.total_mass == pytest.approx(1.0, abs=2e-2)


def test_values_are_real_arrays():
    w = wigner_function(vacuum())
    assert w.values.dtype == np.float64


def test_grid_too_small_names_required_span():
    with pytest.raises(DomainError, match="at least"):
        wigner_function(coherent(1.0, dim=20), q_max=3.0)


def test_marginal_reproduces_quadrature_density():
    rho = coherent(1.0, dim=20)
    w = wigner_function(rho, n_points=321)
    dq = w.p_axis[1] - w.p_axis[0]
    marginal = w.values.sum(axis=1) * dq
    dens = quadrature_density(rho, w.q_axis, 0.0)
    assert np.abs(marginal - dens).max() < 5e-3


def test_radon_matches_density_at_origin():
    w = wigner_function(vacuum(), n_points=321)
    r = radon_transform(w, 0.0, 0.0)
    assert r.value == pytest.approx(np.pi ** -0.5, abs=1e-3)
    assert not r.leaked


def test_radon_rotation_invariance_for_vacuum():
    w = wigner_function(vacuum(), n_points=321)
    v0 = radon_transform(w, 0.7, 0.0).value
    v90 = radon_transform(w, 0.7, np.pi / 2).value
    assert abs(v0 - v90) < 1e-6


def test_radon_fock1_vanishes_at_origin():
    w = wigner_function(fock(1), n_points=321)
    for phi in (0.0, 0.6, 1.9):
        assert abs(radon_transform(w, 0.0, phi).value) < 2e-3


@pytest.mark.parametrize("rho", [vacuum(), fock(1), coherent(1.0, dim=10)])
def test_radon_consistency_probe_grid(rho):
    w = wigner_function(rho, n_points=385)
    xs = np.linspace(-2.5, 2.5, 9)
    phis = np.linspace(0.0, np.pi * 0.95, 5)
    assert radon_consistency(w, rho, xs, phis) < 5e-3


def test_radon_line_outside_grid():
    w = wigner_function(vacuum(), n_points=65)
    with pytest.raises(DomainError, match="does not intersect"):
        radon_transform(w, 100.0, 0.0)


def test_radon_leak_flag_on_unresolved_mass():
    # a synthetic grid whose values have not decayed at the boundary
    from htomo.wigner import WignerGrid
    q = np.linspace(-2, 2, 41)
    vals = np.full((41, 41), 1.0 / 16.0)
    flagged = radon_transform(WignerGrid(q, q.copy(), vals), 0.0, 0.0)
    assert flagged.leaked
    assert flagged.leak_estimate > 1e-3


def test_wigner_csv(tmp_path):
    w = wigner_function(vacuum(), n_points=33)
    path = tmp_path / "w.csv"
    write_wigner_csv(w, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "q,p,W"
    assert len(lines) == 1 + 33 * 33
