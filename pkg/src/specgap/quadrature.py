"""Quadrature rules for the Gaussian weight, spheres and radial integrals.

All velocity rules carry the weight ``exp(-|v|^2)`` (unnormalized), so an
integrand passed to :func:`integrate` is always "the rest of the formula".
"""
from __future__ import annotations

import functools
import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial.hermite import hermgauss
from numpy.polynomial.legendre import leggauss
from scipy.special import roots_genlaguerre

from .errors import DomainError, IntegrationError, QuadratureOrderError

logger = logging.getLogger(__name__)

MAX_HERMITE_ORDER = 64
MC_CHUNK = 1 << 16

__all__ = [
    "QuadratureGrid",
    "IntegralEstimate",
    "gauss_hermite_grid",
    "sphere_grid",
    "radial_rule",
    "legendre_rule",
    "integrate",
    "monte_carlo_integrate",
    "sphere_measure",
]


def sphere_measure(dim: int) -> float:
    """Surface measure of the unit sphere S^{dim-1} in R^dim (|S^0| = 2)."""
    if dim < 1:
        raise DomainError(f"dimension must be >= 1, got {dim}")
    return 2.0 * math.pi ** (dim / 2) / math.gamma(dim / 2)


@dataclass(frozen=True, eq=False)
class QuadratureGrid:
    nodes: np.ndarray
    weights: np.ndarray
    kind: str
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.weights)

    @property
    def dim(self) -> int:
        return self.nodes.shape[1]

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "meta": dict(self.meta),
            "nodes": self.nodes.tolist(),
            "weights": self.weights.tolist(),
        }

    @classmethod
    def from_json(cls, data: dict) -> "QuadratureGrid":
        return cls(
            nodes=_frozen(np.asarray(data["nodes"], dtype=float)),
            weights=_frozen(np.asarray(data["weights"], dtype=float)),
            kind=data["kind"],
            meta=dict(data.get("meta", {})),
        )

    def lower(self) -> "QuadratureGrid | None":
        """The next-lower-order rule of the same family, if there is one."""
        order = self.meta.get("order")
        if order is None or order <= 1:
            return None
        if self.kind == "gauss-hermite-tensor":
            return gauss_hermite_grid(order - 1, self.dim)
        if self.kind == "sphere-product":
            return sphere_grid(self.dim, order - 1)
        return None


@dataclass(frozen=True)
class IntegralEstimate:
    value: float
    error: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.error) and self.error >= 0):
            raise ValueError(f"error estimate must be finite and >= 0, got {self.error}")

    def __add__(self, other: "IntegralEstimate") -> "IntegralEstimate":
        return IntegralEstimate(self.value + other.value, self.error + other.error)

    def scaled(self, factor: float) -> "IntegralEstimate":
        return IntegralEstimate(self.value * factor, self.error * abs(factor))

    def to_json(self) -> dict:
        return {"value": self.value, "error": self.error}


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@functools.lru_cache(maxsize=None)
def _hermite_1d(order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = hermgauss(order)
    return _frozen(x), _frozen(w)


@functools.lru_cache(maxsize=None)
def gauss_hermite_grid(order: int, dim: int) -> QuadratureGrid:
    """Tensor Gauss-Hermite rule for weight exp(-|v|^2) on R^dim.

    Exact for polynomials of per-axis degree <= 2*order - 1.
    """
    if order < 1:
        raise DomainError(f"order must be >= 1, got {order}")
    if order > MAX_HERMITE_ORDER:
        raise QuadratureOrderError(
            f"Gauss-Hermite order {order} exceeds supported maximum {MAX_HERMITE_ORDER}"
        )
    if dim not in (1, 2, 3):
        raise DomainError(f"Gauss-Hermite grids support dim in {{1, 2, 3}}, got {dim}")
    x, w = _hermite_1d(order)
    mesh = np.meshgrid(*([x] * dim), indexing="ij")
    wmesh = np.meshgrid(*([w] * dim), indexing="ij")
    nodes = np.stack([m.ravel() for m in mesh], axis=-1)
    weights = np.prod(np.stack([m.ravel() for m in wmesh], axis=-1), axis=-1)
    return QuadratureGrid(
        _frozen(nodes), _frozen(weights), "gauss-hermite-tensor", {"order": order, "dim": dim}
    )


@functools.lru_cache(maxsize=None)
def sphere_grid(dim: int, order: int) -> QuadratureGrid:
    """Product rule on S^{dim-1}.

    dim=3: Gauss-Legendre in cos(theta) times ``2*order`` uniform azimuths,
    exact for spherical harmonics of degree <= 2*order - 1.
    dim=2: ``2*order`` uniform angles with weights ``pi/order``.
    """
    if order < 1:
        raise DomainError(f"order must be >= 1, got {order}")
    if dim == 2:
        phi = np.pi * (np.arange(2 * order) + 0.5) / order
        nodes = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
        weights = np.full(2 * order, np.pi / order)
    elif dim == 3:
        t, wt = leggauss(order)
        phi = np.pi * (np.arange(2 * order) + 0.5) / order
        st = np.sqrt(1.0 - t**2)
        nodes = np.stack(
            [
                np.outer(st, np.cos(phi)).ravel(),
                np.outer(st, np.sin(phi)).ravel(),
                np.repeat(t, 2 * order),
            ],
            axis=-1,
        )
        weights = np.repeat(wt, 2 * order) * (np.pi / order)
    else:
        raise DomainError(f"sphere rules exist only for dim in {{2, 3}}, got {dim}")
    return QuadratureGrid(_frozen(nodes), _frozen(weights), "sphere-product", {"order": order, "dim": dim})


@functools.lru_cache(maxsize=None)
def radial_rule(order: int, dim: int, gamma: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights for ``int_0^inf rho^(dim-1+gamma) exp(-rho^2) g(rho) drho``.

    Generalized Gauss-Laguerre in ``t = rho^2``; exact when ``g`` is a
    polynomial in ``rho^2`` of degree <= 2*order - 1.
    """
    if order < 1:
        raise DomainError(f"order must be >= 1, got {order}")
    alpha = (dim - 2 + gamma) / 2.0
    if alpha <= -1:
        raise DomainError(f"radial weight not integrable for dim={dim}, gamma={gamma}")
    t, w = roots_genlaguerre(order, alpha)
    return _frozen(np.sqrt(t)), _frozen(0.5 * w)


@functools.lru_cache(maxsize=None)
def legendre_rule(order: int, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes/weights on [a, b]."""
    x, w = leggauss(order)
    half = 0.5 * (b - a)
    return _frozen(a + half * (x + 1.0)), _frozen(half * w)


def _check_finite(values: np.ndarray, nodes: np.ndarray) -> None:
    bad = ~np.isfinite(values)
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise IntegrationError(f"integrand is {values[i]} at node {i}: {nodes[i].tolist()}")


def integrate(
    grid: QuadratureGrid,
    f: Callable[[np.ndarray], np.ndarray],
    *,
    estimate_error: bool = False,
) -> IntegralEstimate:
    """Sum of ``w_i f(x_i)``; ``f`` receives the (n, dim) node array.

    With ``estimate_error`` the error is ``|Q_order - Q_{order-1}|`` when the
    grid family has an embedded lower rule, otherwise 0.
    """
    values = np.asarray(f(grid.nodes), dtype=float).reshape(len(grid))
    _check_finite(values, grid.nodes)
    value = float(np.dot(grid.weights, values))
    error = 0.0
    if estimate_error:
        lower = grid.lower()
        if lower is not None:
            lv = np.asarray(f(lower.nodes), dtype=float).reshape(len(lower))
            _check_finite(lv, lower.nodes)
            error = abs(value - float(np.dot(lower.weights, lv)))
    return IntegralEstimate(value, error)


def monte_carlo_integrate(
    dim: int,
    f: Callable[[np.ndarray], np.ndarray],
    samples: int,
    seed: int,
) -> IntegralEstimate:
    """Monte Carlo estimate of ``int f(v) exp(-|v|^2) dv`` over R^dim.

    Samples are drawn in fixed-size chunks, chunk ``i`` from a generator keyed
    by ``(seed, i)``, and chunk sums are combined with ``math.fsum``; the
    result is bit-identical for a given ``(seed, samples)``.
    """
    if samples < 2:
        raise DomainError(f"need at least 2 samples, got {samples}")
    mass = math.pi ** (dim / 2)
    sums: list[float] = []
    sqsums: list[float] = []
    done = 0
    chunk = 0
    while done < samples:
        n = min(MC_CHUNK, samples - done)
        rng = np.random.default_rng([seed, chunk])
        v = rng.standard_normal((n, dim)) * math.sqrt(0.5)
        fv = np.asarray(f(v), dtype=float).reshape(n)
        _check_finite(fv, v)
        sums.append(float(np.sum(fv)))
        sqsums.append(float(np.sum(fv * fv)))
        done += n
        chunk += 1
    mean = math.fsum(sums) / samples
    var = max(math.fsum(sqsums) / samples - mean * mean, 0.0) * samples / (samples - 1)
    logger.info("monte carlo: dim=%d samples=%d seed=%d", dim, samples, seed)
    return IntegralEstimate(mass * mean, mass * math.sqrt(var / samples))
