import math

import numpy as np
import pytest

from specgap.errors import DomainError, IntegrationError, QuadratureOrderError
from specgap.quadrature import (
    IntegralEstimate,
    QuadratureGrid,
    gauss_hermite_grid,
    integrate,
    legendre_rule,
    monte_carlo_integrate,
    radial_rule,
    sphere_grid,
    sphere_measure,
)


def test_one_point_hermite_rule():
    g = gauss_hermite_grid(1, 1)
    assert g.nodes.shape == (1, 1)
    assert g.nodes[0, 0] == 0.0
    assert g.weights[0] == pytest.approx(math.sqrt(math.pi), rel=1e-15)


@pytest.mark.parametrize("dim", [1, 2, 3])
def test_hermite_mass_and_second_moment(dim):
    g = gauss_hermite_grid(6, dim)
    assert integrate(g, lambda v: np.ones(len(v))).value == pytest.approx(math.pi ** (dim / 2), rel=1e-14)
    m2 = integrate(g, lambda v: (v * v).sum(axis=1)).value
    assert m2 == pytest.approx(dim / 2 * math.pi ** (dim / 2), rel=1e-13)


def test_zero_integrand_has_zero_error():
    est = integrate(gauss_hermite_grid(5, 3), lambda v: np.zeros(len(v)), estimate_error=True)
    assert est.value == 0.0 and est.error == 0.0


def test_hermite_order_limits():
    with pytest.raises((QuadratureOrderError, DomainError)):
        gauss_hermite_grid(0, 3)
    with pytest.raises(QuadratureOrderError):
        gauss_hermite_grid(10_000, 1)


def test_embedded_error_estimate_is_small_for_polynomials():
    g = gauss_hermite_grid(8, 2)
    est = integrate(g, lambda v: v[:, 0] ** 4 * v[:, 1] ** 2, estimate_error=True)
    # 3/4 sqrt(pi) * 1/2 sqrt(pi)
    assert est.value == pytest.approx(3 / 8 * math.pi, rel=1e-13)
    assert est.error < 1e-12


def test_non_finite_integrand_names_the_node():
    g = gauss_hermite_grid(3, 1)
    with pytest.raises(IntegrationError, match="node"), np.errstate(divide="ignore"):
        integrate(g, lambda v: 1.0 / v[:, 0])


@pytest.mark.parametrize("dim,expected", [(1, 2.0), (2, 2 * math.pi), (3, 4 * math.pi)])
def test_sphere_measure(dim, expected):
    assert sphere_measure(dim) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize("dim", [2, 3])
def test_sphere_grid_integrates_polynomials(dim):
    g = sphere_grid(dim, 6)
    assert g.weights.sum() == pytest.approx(sphere_measure(dim), rel=1e-14)
    assert np.allclose(np.linalg.norm(g.nodes, axis=1), 1.0)
    # <x_1^2> over the sphere is |S|/dim
    assert integrate(g, lambda x: x[:, 0] ** 2).value == pytest.approx(sphere_measure(dim) / dim, rel=1e-13)
    assert abs(integrate(g, lambda x: x[:, 0] ** 3).value) < 1e-14


def test_radial_rule_moments():
    # int_0^inf r^(N-1+gamma) exp(-r^2) dr = Gamma((N+gamma)/2) / 2
    for dim, gamma in [(3, 0.0), (3, 1.0), (2, 0.5)]:
        r, w = radial_rule(8, dim, gamma)
        assert w.sum() == pytest.approx(0.5 * math.gamma((dim + gamma) / 2), rel=1e-13)
        assert np.dot(w, r**2) == pytest.approx(0.5 * math.gamma((dim + gamma) / 2 + 1), rel=1e-13)


def test_legendre_rule_interval():
    x, w = legendre_rule(5, 0.0, math.pi)
    assert np.dot(w, np.sin(x)) == pytest.approx(2.0, rel=1e-6)
    assert x.min() > 0 and x.max() < math.pi


def test_grid_json_round_trip():
    g = gauss_hermite_grid(4, 2)
    back = QuadratureGrid.from_json(g.to_json())
    assert np.array_equal(back.nodes, g.nodes) and np.array_equal(back.weights, g.weights)


def test_integral_estimate_arithmetic():
    a = IntegralEstimate(1.0, 0.1) + IntegralEstimate(2.0, 0.2)
    assert a.value == 3.0 and a.error == pytest.approx(0.3)
    s = IntegralEstimate(2.0, 0.5).scaled(-3.0)
    assert s.value == -6.0 and s.error == 1.5


def test_monte_carlo_constant_is_exact():
    est = monte_carlo_integrate(3, lambda v: np.ones(len(v)), 1000, seed=1)
    assert est.value == pytest.approx(math.pi**1.5, rel=1e-15)
    assert est.error == 0.0


def test_monte_carlo_odd_moment_and_second_moment():
    odd = monte_carlo_integrate(3, lambda v: v[:, 0], 100_000, seed=3)
    assert abs(odd.value) <= 4 * odd.error
    m2 = monte_carlo_integrate(3, lambda v: (v * v).sum(axis=1), 1_000_000, seed=5)
    assert abs(m2.value - 1.5 * math.pi**1.5) <= 4 * m2.error


def test_monte_carlo_is_bit_reproducible():
    f = lambda v: np.cos(v).prod(axis=1)  # noqa: E731
    a = monte_carlo_integrate(2, f, 150_000, seed=11)
    b = monte_carlo_integrate(2, f, 150_000, seed=11)
    c = monte_carlo_integrate(2, f, 150_000, seed=12)
    assert (a.value, a.error) == (b.value, b.error)
    assert a.value != c.value


def test_monte_carlo_rejects_non_finite():
    with pytest.raises(IntegrationError):
        monte_carlo_integrate(1, lambda v: np.full(len(v), np.nan), 10, seed=0)
