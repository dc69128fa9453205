"""Galerkin discretization of the linearized operators and spectral gaps.

The basis is the Maxwellian eigenbasis (Sonine polynomials times solid
harmonics).  The dissipation matrix ``A`` and the Gram matrix ``G`` are
assembled in one of two conventions for the reference Maxwellian:

* ``paper-raw``: ``M = exp(-|v|^2)`` (mass ``pi^(N/2)``),
* ``unit-mass``: ``M = exp(-|v|^2) / pi^(N/2)``.

Rescaling ``M`` by ``c`` rescales the dissipation by ``c^2`` and the norm by
``c``, so every eigenvalue of ``(A, G)`` moves by the same factor ``c``:
raw eigenvalues are ``pi^(N/2)`` times unit-mass ones.  The Maxwell-molecule
eigenvalue ``4 pi / 3`` for ``b = 1`` is a unit-mass value.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg

from .dissipation import Grids, boltzmann_form, fitted_order, landau_form
from .errors import DomainError, EmptyComplementError, SpecgapError
from .functions import (
    NORMALIZATIONS,
    BasisExpansion,
    BasisIndex,
    SonineBasis,
    sonine_basis,
    weight_scale,
)
from .kernels import AngularKernel, GrazingAngular, KineticKernel, Mollifier

logger = logging.getLogger(__name__)

__all__ = [
    "BasisIndex",
    "GalerkinSystem",
    "GapResult",
    "basis_eval",
    "assemble_boltzmann",
    "assemble_landau",
    "spectral_gap",
    "gap_analysis",
    "bobylev_lambda0",
    "lambda0_sweep",
    "Lambda0Table",
    "MULTIPLET_TOL",
]

MULTIPLET_TOL = 1e-8
MAX_TRUNCATION = 10


def basis_eval(idx: BasisIndex, v, dim: int = 3, normalization: str = "unit-mass"):
    """Value and gradient of the normalized basis function ``idx`` at ``v``.

    ``v`` is one point or an ``(n, dim)`` array; returns ``(values, gradients)``.
    """
    basis = sonine_basis(dim, idx.degree, normalization)
    f = basis.function(idx)
    pts = np.atleast_2d(np.asarray(v, dtype=float))
    val, grad = f.value(pts), f.gradient(pts)
    if np.ndim(v) == 1:
        return float(val[0]), grad[0]
    return val, grad


@dataclass
class GalerkinSystem:
    A: np.ndarray
    G: np.ndarray
    basis: SonineBasis
    normalization: str
    grid_meta: dict = field(default_factory=dict)
    operator: str = "boltzmann"

    @property
    def indices(self) -> tuple[BasisIndex, ...]:
        return self.basis.indices

    def diagnostics(self) -> dict:
        A, G = self.A, self.G
        scale = max(np.linalg.norm(A), 1e-300)
        inv = self.basis.invariant_mask
        return {
            "asymmetry": float(np.linalg.norm(A - A.T) / scale),
            "min_eigenvalue": float(np.linalg.eigvalsh(0.5 * (A + A.T))[0]),
            "norm": float(np.linalg.norm(A)),
            "invariant_rows": float(np.abs(A[inv]).max() / scale) if inv.any() else 0.0,
            "gram_deviation": float(np.abs(G - np.eye(len(G))).max()),
        }

    def to_json(self) -> dict:
        return {
            "operator": self.operator,
            "normalization": self.normalization,
            "dim": self.basis.dim,
            "truncation": self.basis.truncation,
            "basis": [i.to_json() for i in self.indices],
            "A": self.A.tolist(),
            "G": self.G.tolist(),
            "grid_meta": self.grid_meta,
        }

    @classmethod
    def from_json(cls, data: dict) -> "GalerkinSystem":
        basis = sonine_basis(int(data["dim"]), int(data["truncation"]), data["normalization"])
        if [i.to_json() for i in basis.indices] != [list(x) for x in data["basis"]]:
            raise DomainError("basis listing does not match the stored truncation")
        return cls(
            np.asarray(data["A"], dtype=float),
            np.asarray(data["G"], dtype=float),
            basis,
            data["normalization"],
            dict(data.get("grid_meta", {})),
            data.get("operator", "boltzmann"),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_json())


def _check_truncation(truncation: int) -> None:
    if not 0 <= truncation <= MAX_TRUNCATION:
        raise DomainError(f"truncation must lie in [0, {MAX_TRUNCATION}], got {truncation}")


def assemble_boltzmann(
    phi: KineticKernel,
    b: AngularKernel,
    truncation: int,
    grids: Grids | None = None,
    *,
    dim: int = 3,
    normalization: str = "unit-mass",
) -> GalerkinSystem:
    """Galerkin matrices of the Boltzmann dissipation form.

    Entries are the symmetric bilinear form ``D(phi_i, phi_j)``, the same
    number polarization ``(D(phi_i + phi_j) - D(phi_i - phi_j)) / 4`` gives,
    computed in a single quadrature pass over cached basis values.
    """
    _check_truncation(truncation)
    if normalization not in NORMALIZATIONS:
        raise DomainError(f"unknown normalization {normalization!r}")
    grids = grids or Grids.for_degree(truncation)
    if isinstance(b, GrazingAngular):
        grids = grids.with_polar(max(grids.polar, 32))
    basis = sonine_basis(dim, truncation, normalization)
    A = weight_scale(dim, normalization) ** 2 * boltzmann_form(basis, phi, b, grids, degree=truncation)
    meta = {"grids": grids.to_json(), "phi": phi.to_json(), "b": b.to_json()}
    return GalerkinSystem(A, basis.gram(), basis, normalization, meta, "boltzmann")


def assemble_landau(
    phi: KineticKernel,
    truncation: int,
    grids: Grids | None = None,
    *,
    dim: int = 3,
    normalization: str = "unit-mass",
) -> GalerkinSystem:
    """Galerkin matrices of the Landau dissipation form."""
    _check_truncation(truncation)
    if normalization not in NORMALIZATIONS:
        raise DomainError(f"unknown normalization {normalization!r}")
    grids = grids or Grids.for_degree(truncation)
    basis = sonine_basis(dim, truncation, normalization)
    A = weight_scale(dim, normalization) ** 2 * landau_form(basis, phi, grids)
    meta = {"grids": grids.to_json(), "phi": phi.to_json()}
    return GalerkinSystem(A, basis.gram(), basis, normalization, meta, "landau")


@dataclass
class GapResult:
    gap: float
    eigenvalues: np.ndarray
    vectors: np.ndarray  # basis coefficients, one column per eigenvalue
    multiplets: list  # [(value, multiplicity), ...] in increasing order
    basis: SonineBasis

    def eigenfunction(self, k: int = 0) -> BasisExpansion:
        return BasisExpansion(self.basis, self.vectors[:, k], name=f"eigenfunction {k}")

    def to_json(self) -> dict:
        return {
            "gap": self.gap,
            "multiplets": [[v, m] for v, m in self.multiplets],
        }


def _multiplets(values: np.ndarray, tol: float = MULTIPLET_TOL) -> list[tuple[float, int]]:
    out: list[list] = []
    for v in values:
        if out and abs(v - out[-1][0]) <= tol * max(abs(out[-1][0]), 1.0):
            out[-1][1] += 1
        else:
            out.append([float(v), 1])
    return [(v, m) for v, m in out]


def gap_analysis(system: GalerkinSystem) -> GapResult:
    """Generalized eigenproblem of ``(A, G)`` on the G-orthogonal complement of the invariants."""
    A = 0.5 * (system.A + system.A.T)
    G = 0.5 * (system.G + system.G.T)
    try:
        scipy.linalg.cholesky(G)
    except np.linalg.LinAlgError as exc:
        raise SpecgapError(f"Gram matrix is not positive definite: {exc}") from None
    inv = system.basis.invariant_mask
    U = np.eye(len(G))[:, inv]
    Z = scipy.linalg.null_space((G @ U).T)
    if Z.shape[1] == 0:
        raise EmptyComplementError(
            f"truncation {system.basis.truncation} leaves nothing beyond the collision invariants"
        )
    Az = Z.T @ A @ Z
    Gz = Z.T @ G @ Z
    vals, vecs = scipy.linalg.eigh(0.5 * (Az + Az.T), 0.5 * (Gz + Gz.T))
    diag = system.diagnostics()
    if diag["min_eigenvalue"] < -1e-8 * diag["norm"]:
        logger.warning("dissipation matrix is not positive semidefinite: %s", diag)
    return GapResult(float(vals[0]), vals, Z @ vecs, _multiplets(vals), system.basis)


def spectral_gap(system: GalerkinSystem) -> float:
    return gap_analysis(system).gap


# --------------------------------------------------------------------------- lambda_0


def bobylev_lambda0(b: AngularKernel, order: int = 64) -> float:
    """``pi int_0^pi sin^3(theta) b(theta) dtheta`` (N=3), via the kernel's own polar rule."""
    theta, w = b.polar_rule(order, 3)
    return float(math.pi * np.dot(w, np.sin(theta) ** 2))


@dataclass
class Lambda0Table:
    rows: list  # (eps, lambda0, limit, rel_error)
    fitted_order: float | None
    mollifier: str
    columns: tuple = ("eps", "lambda0", "limit", "rel_error")

    def to_csv(self) -> str:
        lines = [",".join(self.columns)]
        lines += [",".join(repr(float(x)) for x in row) for row in self.rows]
        order = "nan" if self.fitted_order is None else repr(self.fitted_order)
        lines.append(f"# mollifier={self.mollifier}")
        lines.append(f"# fitted_order={order}")
        return "\n".join(lines) + "\n"


def lambda0_sweep(j: Mollifier, eps_list: Sequence[float], order: int = 64) -> Lambda0Table:
    """``|lambda_0(b_eps)|`` against its grazing limit ``2 pi int j chi^2``."""
    eps = [float(e) for e in eps_list]
    if any(b >= a for a, b in zip(eps, eps[1:])) or any(e <= 0 for e in eps):
        raise DomainError("eps list must be positive and strictly decreasing")
    limit = 2.0 * math.pi * j.second_moment
    rows = []
    for e in eps:
        lam = bobylev_lambda0(GrazingAngular(e, j, 3), order)
        rows.append((e, lam, limit, abs(lam - limit) / limit))
    return Lambda0Table(rows, fitted_order(eps, [r[3] for r in rows]), j.name)
