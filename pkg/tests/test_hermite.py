import mpmath
import numpy as np
import pytest

from htomo import DomainError, hermite_basis, hermite_basis_with_derivatives, hermite_function
from htomo.hermite import gauss_legendre_panels


def mp_hermite_function(k, x, dps=60):
    """High-precision oracle: H_k(x) e^{-x^2/2} / sqrt(sqrt(pi) 2^k k!)."""
    with mpmath.workdps(dps):
        xm = mpmath.mpf(x)
        val = mpmath.hermite(k, xm) * mpmath.e ** (-xm * xm / 2)
        norm = mpmath.sqrt(mpmath.sqrt(mpmath.pi) * mpmath.mpf(2) ** k * mpmath.factorial(k))
        return float(val / norm)


def test_ground_state_value():
    assert hermite_function(0, 0.0) == pytest.approx(np.pi ** -0.25, rel=1e-12)


def test_first_excited_is_odd():
    assert hermite_function(1, 0.0) == 0.0


def test_second_excited_at_origin():
    # H_2(0) = -2, so psi_2(0) = -2 / sqrt(sqrt(pi) * 4 * 2)
    exact = -2.0 / np.sqrt(np.sqrt(np.pi) * 8.0)
    assert exact == pytest.approx(-0.5311259)
    assert hermite_function(2, 0.0) == pytest.approx(exact, rel=1e-10)


@pytest.mark.parametrize("k,x", [(1, 0.3), (8, 2.0), (32, -5.5), (64, 10.0),
                                 (128, 20.0), (128, -13.7), (100, 0.1)])
def test_matches_high_precision_oracle(k, x):
    want = mp_hermite_function(k, x)
    got = hermite_function(k, x)
    assert got == pytest.approx(want, rel=1e-10)


def test_orthonormality_by_quadrature():
    nodes, weights = gauss_legendre_panels(-12.0, 12.0, panel=0.4)
    b = hermite_basis(nodes, 20)
    gram = (b * weights) @ b.T
    assert np.abs(gram - np.eye(21)).max() < 1e-8


def test_derivative_ladder_matches_central_differences():
    xs = np.linspace(-6.0, 6.0, 41)
    h = 1e-5
    for k in (0, 3, 10):
        _, db = hermite_basis_with_derivatives(xs, k)
        fd = (hermite_function(k, xs + h) - hermite_function(k, xs - h)) / (2 * h)
        assert np.abs(db[k] - fd).max() < 1e-6


def test_oscillator_equation_residual():
    # five-point second derivative; residual relative to the local scale
    xs = np.linspace(-4.0, 4.0, 100)
    h = 1e-3
    for k in (0, 5, 12, 20):
        stencil = np.array([-2, -1, 0, 1, 2]) * h
        vals = np.stack([hermite_function(k, xs + s) for s in stencil])
        d2 = (-vals[0] + 16 * vals[1] - 30 * vals[2] + 16 * vals[3] - vals[4]) / (12 * h * h)
        resid = -0.5 * d2 + 0.5 * xs * xs * vals[2] - (k + 0.5) * vals[2]
        scale = np.abs(vals[2]).max()
        assert np.abs(resid).max() / scale < 1e-6


def test_index_domain_errors():
    with pytest.raises(DomainError):
        hermite_function(257, 0.0)
    with pytest.raises(DomainError):
        hermite_function(-1, 0.0)
    with pytest.raises(DomainError):
        hermite_function(3, np.nan)
    with pytest.raises(DomainError):
        hermite_function(3, np.inf)
