import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from specgap.dissipation import Grids, d_boltzmann, d_landau
from specgap.errors import EmptyComplementError
from specgap.functions import BasisIndex
from specgap.kernels import ConstantAngular, ConstantKernel, GrazingAngular, Mollifier, PowerLawKernel
from specgap.spectral import (
    GalerkinSystem,
    assemble_boltzmann,
    assemble_landau,
    basis_eval,
    bobylev_lambda0,
    gap_analysis,
    lambda0_sweep,
    spectral_gap,
)

ONE = ConstantAngular(1.0)
MAXWELL = ConstantKernel(1.0)


@pytest.fixture(scope="module")
def maxwell_t4():
    return assemble_boltzmann(MAXWELL, ONE, 4)


@pytest.fixture(scope="module")
def hard_spheres_t4():
    return assemble_boltzmann(PowerLawKernel(1.0), ONE, 4)


def test_basis_eval_constant_and_linear():
    val, grad = basis_eval(BasisIndex(0, 0, 0), np.array([0.3, -0.2, 1.0]))
    assert val == pytest.approx(1.0) and np.allclose(grad, 0)
    vals, grads = basis_eval(BasisIndex(0, 1, 0), np.eye(3))
    assert np.count_nonzero(np.abs(vals) > 1e-12) == 1


def test_maxwell_gap_at_low_truncations(maxwell_t4):
    assert spectral_gap(assemble_boltzmann(MAXWELL, ONE, 2)) == pytest.approx(2 * math.pi, rel=1e-12)
    res = gap_analysis(maxwell_t4)
    assert res.gap == pytest.approx(4 * math.pi / 3, rel=1e-12)
    assert res.multiplets[0][1] == 4


def test_normalization_covariance(maxwell_t4):
    raw = assemble_boltzmann(MAXWELL, ONE, 4, normalization="paper-raw")
    assert spectral_gap(raw) / spectral_gap(maxwell_t4) == pytest.approx(math.pi**1.5, rel=1e-12)


def test_gap_is_linear_in_the_angular_constant(maxwell_t4):
    scaled = assemble_boltzmann(MAXWELL, ConstantAngular(2.5), 4)
    assert spectral_gap(scaled) == pytest.approx(2.5 * spectral_gap(maxwell_t4), rel=1e-12)


def test_landau_maxwell_gap():
    res = gap_analysis(assemble_landau(MAXWELL, 4))
    assert res.gap == pytest.approx(8.0, rel=1e-12)
    assert res.gap >= 2 * math.pi


def test_truncation_one_has_empty_complement():
    with pytest.raises(EmptyComplementError):
        gap_analysis(assemble_boltzmann(MAXWELL, ONE, 1))


def test_system_diagnostics(hard_spheres_t4):
    d = hard_spheres_t4.diagnostics()
    assert d["asymmetry"] < 1e-13
    assert d["min_eigenvalue"] > -1e-10 * d["norm"]
    assert d["invariant_rows"] < 1e-12
    assert d["gram_deviation"] < 1e-12


def test_rayleigh_quotient_of_eigenfunctions(hard_spheres_t4):
    res = gap_analysis(hard_spheres_t4)
    g = Grids.for_degree(4)
    for k in (0, 3, 7):
        f = res.eigenfunction(k)
        # unit-mass dissipation is pi^(-3) times the raw one; eigenfunctions have unit norm
        rq = d_boltzmann(f, PowerLawKernel(1.0), ONE, g, method="quadrature").value / math.pi**3
        assert rq == pytest.approx(res.eigenvalues[k], rel=1e-9)


def test_landau_rayleigh_quotient():
    res = gap_analysis(assemble_landau(PowerLawKernel(2.0), 4))
    f = res.eigenfunction(0)
    rq = d_landau(f, PowerLawKernel(2.0), Grids.for_degree(4), method="quadrature").value / math.pi**3
    assert rq == pytest.approx(res.gap, rel=1e-9)


@settings(max_examples=20, deadline=None)
@given(st.lists(st.floats(-1, 1, allow_nan=False), min_size=30, max_size=30))
def test_rayleigh_quotients_bounded_by_gap(maxwell_t4, coeffs):
    c = np.zeros(len(maxwell_t4.basis))
    c[: len(coeffs)] = coeffs
    c[maxwell_t4.basis.invariant_mask] = 0.0
    norm2 = c @ maxwell_t4.G @ c
    if norm2 < 1e-8:
        return
    rq = c @ maxwell_t4.A @ c / norm2
    assert rq >= spectral_gap(maxwell_t4) * (1 - 1e-10)


def test_system_json_round_trip(maxwell_t4):
    back = GalerkinSystem.from_json(maxwell_t4.to_json())
    assert np.array_equal(back.A, maxwell_t4.A) and np.array_equal(back.G, maxwell_t4.G)
    assert spectral_gap(back) == spectral_gap(maxwell_t4)


def test_two_dimensional_maxwell_gap_is_positive():
    res = gap_analysis(assemble_boltzmann(MAXWELL, ONE, 4, dim=2))
    assert res.gap > 0


def test_bobylev_lambda0():
    assert bobylev_lambda0(ONE) == pytest.approx(4 * math.pi / 3, abs=1e-12)
    assert bobylev_lambda0(ConstantAngular(0.5)) == pytest.approx(2 * math.pi / 3, rel=1e-14)


def test_lambda0_agrees_with_galerkin_gap_for_constant_b(maxwell_t4):
    assert bobylev_lambda0(ONE) == pytest.approx(spectral_gap(maxwell_t4), rel=1e-12)


def test_lambda0_sweep_tends_to_grazing_limit():
    j = Mollifier("bump")
    table = lambda0_sweep(j, [0.4, 0.2, 0.1, 0.05])
    errs = [r[3] for r in table.rows]
    assert all(b < a for a, b in zip(errs, errs[1:]))
    assert table.fitted_order >= 0.8
    assert table.rows[0][2] == pytest.approx(2 * math.pi * j.second_moment)


def test_grazing_lambda0_matches_galerkin_gap():
    b = GrazingAngular(0.3, Mollifier(), 3)
    gap = spectral_gap(assemble_boltzmann(MAXWELL, b, 4))
    assert gap == pytest.approx(bobylev_lambda0(b), rel=1e-9)
