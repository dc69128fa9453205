import math
from dataclasses import replace

import numpy as np
import pytest

from specgap.dissipation import (
    Grids,
    boltzmann_form,
    d_boltzmann,
    d_boltzmann_omega,
    d_landau,
    fitted_order,
    grazing_sweep,
    k_defect,
    post_collision,
    projection_transverse,
)
from specgap.errors import DomainError, ResolutionError
from specgap.functions import sonine_basis
from specgap.kernels import ConstantAngular, ConstantKernel, GrazingAngular, Mollifier, PowerLawKernel

ONE = ConstantAngular(1.0)

# raw-weight (M = exp(-|v|^2)) values for h = v1 v2, derived by hand from
# Gaussian moments: the l=2 eigenvalue 2 pi (Boltzmann, unit mass) and 12 (Landau)
# times ||v1 v2||^2 = pi^(3/2)/4 and the pi^(3/2) rescaling of eigenvalues
D_BO_V1V2 = math.pi**4 / 2
D_LA_V1V2 = 3 * math.pi**3


def test_post_collision_examples():
    w = np.array([0.3, -1.0, 2.0])
    p = post_collision(w, w, [0.0, 0.0, 1.0])
    assert np.allclose(p.v_prime, w) and np.allclose(p.v_star_prime, w)
    v, vs = np.array([1.0, 2.0, 0.5]), np.array([-1.0, 0.0, 0.5])
    k = (v - vs) / np.linalg.norm(v - vs)
    p = post_collision(v, vs, k)
    assert np.allclose(p.v_prime, v) and np.allclose(p.v_star_prime, vs)
    p = post_collision([1, 0, 0], [-1, 0, 0], [0, 1, 0])
    assert np.allclose(p.v_prime, [0, 1, 0]) and np.allclose(p.v_star_prime, [0, -1, 0])
    with pytest.raises(DomainError):
        post_collision(v, vs, [1.0, 1.0, 0.0])


def test_post_collision_conserves_momentum_and_energy(rng):
    for _ in range(20):
        v, vs = rng.normal(size=3), rng.normal(size=3)
        s = rng.normal(size=3)
        p = post_collision(v, vs, s / np.linalg.norm(s))
        assert np.allclose(p.v_prime + p.v_star_prime, v + vs)
        assert math.isclose(p.v_prime @ p.v_prime + p.v_star_prime @ p.v_star_prime, v @ v + vs @ vs)


def test_k_defect_vanishes_on_invariants(invariants, rng):
    v, vs = rng.normal(size=3), rng.normal(size=3)
    pair = post_collision(v, vs, np.array([0.6, 0.0, 0.8]))
    for h in invariants:
        assert k_defect(h, pair) < 1e-26


def test_projection_transverse():
    z = np.array([1.0, 0.0, 0.0])
    assert np.allclose(projection_transverse(z, 3 * z), 0)
    assert np.allclose(projection_transverse(z, [0, 2, 5]), [0, 2, 5])
    assert np.allclose(projection_transverse(z, [1, 1, 0]), [0, 1, 0])
    with pytest.raises(DomainError):
        projection_transverse([0, 0, 0], [1, 0, 0])


@pytest.mark.parametrize("gamma", [0.0, 1.0, 2.0])
def test_invariants_are_in_both_null_spaces(invariants, gamma):
    phi = PowerLawKernel(gamma)
    g = Grids.for_degree(2).doubled()
    for h in invariants:
        assert abs(d_boltzmann(h, phi, ONE, g).value) <= 1e-8
        assert abs(d_landau(h, phi, g).value) <= 1e-8


def test_boltzmann_v1v2_maxwell_molecules(v1v2):
    est = d_boltzmann(v1v2, ConstantKernel(1.0), ONE, estimate_error=True)
    assert est.value == pytest.approx(D_BO_V1V2, rel=1e-12)
    assert est.error < 1e-9


def test_landau_v1v2_maxwell_molecules(v1v2):
    est = d_landau(v1v2, ConstantKernel(1.0), estimate_error=True)
    assert est.value == pytest.approx(D_LA_V1V2, rel=1e-12)


def test_sigma_and_omega_representations_agree(v1v2):
    for phi in (ConstantKernel(1.0), PowerLawKernel(1.0)):
        a = d_boltzmann(v1v2, phi, ONE).value
        b = d_boltzmann_omega(v1v2, phi, ONE).value
        assert a == pytest.approx(b, rel=1e-10)


def test_omega_representation_with_grazing_kernel(v1v2):
    b = GrazingAngular(0.3, Mollifier(), 3)
    g = Grids.for_degree(2).with_polar(32)
    assert d_boltzmann(v1v2, ConstantKernel(1.0), b, g).value == pytest.approx(
        d_boltzmann_omega(v1v2, ConstantKernel(1.0), b, g).value, rel=1e-8
    )


def test_doubled_grid_converges_for_hard_spheres(v1v2):
    phi = PowerLawKernel(1.0)
    base = d_boltzmann(v1v2, phi, ONE).value
    # the centre rule is already exact here; refine the relative and angular rules
    fine_grids = replace(Grids.for_degree(2).doubled(), velocity=4)
    fine = d_boltzmann(v1v2, phi, ONE, fine_grids, method="quadrature").value
    assert base == pytest.approx(fine, rel=1e-12)


def test_auto_switches_to_monte_carlo_on_large_grids(v1v2):
    big = Grids(velocity=24, radial=3, sphere=4, polar=16, azimuth=6)
    est = d_boltzmann(v1v2, ConstantKernel(1.0), ONE, big, samples=20_000, seed=1)
    assert est.error > 0
    assert abs(est.value - D_BO_V1V2) <= 5 * est.error


def test_monte_carlo_agrees_and_is_reproducible(v1v2):
    phi = PowerLawKernel(1.0)
    exact = d_boltzmann(v1v2, phi, ONE).value
    mc = d_boltzmann(v1v2, phi, ONE, method="monte-carlo", samples=200_000, seed=3)
    assert abs(mc.value - exact) <= 4 * mc.error
    again = d_boltzmann(v1v2, phi, ONE, method="monte-carlo", samples=200_000, seed=3)
    assert (again.value, again.error) == (mc.value, mc.error)
    exact_la = d_landau(v1v2, phi).value
    mc_la = d_landau(v1v2, phi, method="monte-carlo", samples=200_000, seed=4)
    assert abs(mc_la.value - exact_la) <= 4 * mc_la.error


def test_form_polarization_matches_dissipation():
    basis = sonine_basis(3, 3, "paper-raw")
    phi = PowerLawKernel(1.0)
    g = Grids.for_degree(3)
    A = boltzmann_form(basis, phi, ONE, g, degree=3)
    for i, j in [(5, 9), (4, 17), (12, 19)]:
        f, h = basis.function(basis.indices[i]), basis.function(basis.indices[j])
        pol = 0.25 * (d_boltzmann(f + h, phi, ONE, g).value - d_boltzmann(f - h, phi, ONE, g).value)
        assert A[i, j] == pytest.approx(pol, rel=1e-9, abs=1e-10)
        assert A[i, i] == pytest.approx(d_boltzmann(f, phi, ONE, g).value, rel=1e-10)


def test_dissipation_is_quadratic(v1v2):
    phi = PowerLawKernel(0.5)
    assert d_boltzmann(v1v2.scaled(3.0), phi, ONE).value == pytest.approx(9 * d_boltzmann(v1v2, phi, ONE).value, rel=1e-12)
    assert d_landau(v1v2.scaled(-2.0), phi).value == pytest.approx(4 * d_landau(v1v2, phi).value, rel=1e-12)


def test_grazing_sweep_v1v2_converges(v1v2):
    table = grazing_sweep(v1v2, ConstantKernel(1.0), Mollifier(), [0.4, 0.2, 0.1, 0.05])
    errs = [r[3] for r in table.rows]
    assert all(b < a for a, b in zip(errs, errs[1:]))
    assert table.fitted_order >= 0.8
    csv = table.to_csv()
    assert csv.splitlines()[0] == "eps,d_boltzmann,c_times_d_landau,rel_error"
    assert csv.rstrip().splitlines()[-1].startswith("# fitted_order=")


def test_grazing_sweep_invariant_gives_zero_columns(invariants):
    table = grazing_sweep(invariants[-1], ConstantKernel(1.0), Mollifier(), [0.4, 0.2])
    for _, dbo, dla, _ in table.rows:
        assert abs(dbo) < 1e-9 and abs(dla) < 1e-9


def test_grazing_limit_is_linear_in_the_second_moment(v1v2):
    bump = Mollifier("bump")
    uni = Mollifier("uniform")
    a = grazing_sweep(v1v2, ConstantKernel(1.0), bump, [0.02]).rows[0]
    b = grazing_sweep(v1v2, ConstantKernel(1.0), uni, [0.02]).rows[0]
    ratio = uni.second_moment / bump.second_moment
    assert b[2] / a[2] == pytest.approx(ratio, rel=1e-12)
    assert b[1] / a[1] == pytest.approx(ratio, rel=2e-3)


def test_grazing_sweep_refusals(v1v2):
    with pytest.raises(ResolutionError, match="polar"):
        grazing_sweep(v1v2, ConstantKernel(1.0), Mollifier(), [0.2, 0.1], Grids.for_degree(2).with_polar(8))
    with pytest.raises(DomainError):
        grazing_sweep(v1v2, ConstantKernel(1.0), Mollifier(), [0.1, 0.2])


def test_fitted_order_of_exact_power_law():
    eps = [0.4, 0.2, 0.1]
    assert fitted_order(eps, [3 * e**1.5 for e in eps]) == pytest.approx(1.5)
    assert fitted_order(eps, [0, 0, 0]) is None
