"""Test functions ``h`` on velocity space and the Sonine x spherical-harmonic basis.

Polynomials are stored densely over a list of monomial exponents, which makes
values and exact gradients a pair of small matrix products.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np
from numpy.polynomial import legendre as npleg
from numpy.polynomial import polynomial as nppoly
from scipy.special import binom

from .errors import DomainError
from .quadrature import gauss_hermite_grid

__all__ = [
    "NORMALIZATIONS",
    "monomial_exponents",
    "monomials",
    "monomial_gradients",
    "TestFunction",
    "PolynomialFunction",
    "BasisExpansion",
    "Closure",
    "collision_invariants",
    "BasisIndex",
    "SonineBasis",
    "sonine_basis",
    "weight_scale",
]

NORMALIZATIONS = ("paper-raw", "unit-mass")


def weight_scale(dim: int, normalization: str) -> float:
    """Factor ``c`` with reference Maxwellian ``M = c * exp(-|v|^2)``."""
    if normalization == "paper-raw":
        return 1.0
    if normalization == "unit-mass":
        return math.pi ** (-dim / 2)
    raise DomainError(f"unknown normalization {normalization!r}; expected one of {NORMALIZATIONS}")


# --------------------------------------------------------------------------- monomials


@functools.lru_cache(maxsize=None)
def monomial_exponents(dim: int, degree: int) -> np.ndarray:
    """Exponents of all monomials of total degree <= ``degree``, graded order."""
    if dim < 1 or degree < 0:
        raise DomainError(f"bad monomial space dim={dim}, degree={degree}")
    out = []
    for d in range(degree + 1):
        out.extend(_compositions(d, dim))
    e = np.array(out, dtype=np.int64).reshape(-1, dim)
    e.setflags(write=False)
    return e


def _compositions(total: int, parts: int) -> list[tuple[int, ...]]:
    if parts == 1:
        return [(total,)]
    res = []
    for first in range(total, -1, -1):
        res.extend((first,) + rest for rest in _compositions(total - first, parts - 1))
    return res


def _powers(points: np.ndarray, top: int) -> np.ndarray:
    # (n, dim, top + 1) table of x_a ** k
    pw = np.empty(points.shape + (top + 1,))
    pw[..., 0] = 1.0
    for k in range(1, top + 1):
        pw[..., k] = pw[..., k - 1] * points
    return pw


def monomials(points: np.ndarray, exps: np.ndarray) -> np.ndarray:
    """``(n, K)`` matrix of ``x^e`` for every point and exponent row."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    top = int(exps.max()) if exps.size else 0
    pw = _powers(points, top)
    out = pw[:, 0, exps[:, 0]]
    for a in range(1, exps.shape[1]):
        out = out * pw[:, a, exps[:, a]]
    return out


def monomial_gradients(points: np.ndarray, exps: np.ndarray) -> np.ndarray:
    """``(n, K, dim)`` array of the partial derivatives of each monomial."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    n, dim = points.shape
    top = int(exps.max()) if exps.size else 0
    pw = _powers(points, top)
    out = np.empty((n, exps.shape[0], dim))
    for a in range(dim):
        g = exps[:, a].astype(float)[None, :] * pw[:, a, np.maximum(exps[:, a] - 1, 0)]
        for b in range(dim):
            if b != a:
                g = g * pw[:, b, exps[:, b]]
        out[:, :, a] = g
    return out


def derivative_coefficients(exps: np.ndarray, coeffs: np.ndarray, axis: int) -> np.ndarray:
    """Coefficients (same exponent list) of ``d/dx_axis`` of the given polynomials."""
    index = {tuple(e): i for i, e in enumerate(exps.tolist())}
    out = np.zeros_like(coeffs, dtype=float)
    for i, e in enumerate(exps.tolist()):
        if e[axis] == 0:
            continue
        lowered = list(e)
        lowered[axis] -= 1
        out[index[tuple(lowered)]] += e[axis] * coeffs[i]
    return out


# --------------------------------------------------------------------------- test functions


class TestFunction:
    """A function ``h`` in ``L^2(M)`` with an exact gradient."""

    __test__ = False  # not a pytest class

    dim: int
    #: total polynomial degree, or None when unknown
    degree: int | None = None

    def value(self, v: np.ndarray) -> np.ndarray:  # pragma: no cover - abstract
        raise NotImplementedError

    def gradient(self, v: np.ndarray) -> np.ndarray:  # pragma: no cover - abstract
        raise NotImplementedError

    def __call__(self, v):
        return self.value(v)

    def scaled(self, alpha: float) -> "TestFunction":  # pragma: no cover - abstract
        raise NotImplementedError

    def _check(self, v) -> np.ndarray:
        v = np.atleast_2d(np.asarray(v, dtype=float))
        if v.shape[-1] != self.dim:
            raise DomainError(f"expected points in R^{self.dim}, got shape {v.shape}")
        return v


class PolynomialFunction(TestFunction):
    """``h(v) = sum_k c_k v^(e_k)``."""

    def __init__(self, dim: int, exps: np.ndarray, coeffs: np.ndarray, name: str | None = None):
        exps = np.asarray(exps, dtype=np.int64).reshape(-1, dim)
        coeffs = np.asarray(coeffs, dtype=float).reshape(len(exps))
        self.dim = dim
        self.exps = exps
        self.coeffs = coeffs
        self.name = name
        nz = np.abs(coeffs) > 0
        self.degree = int(exps[nz].sum(axis=1).max()) if nz.any() else 0
        self._grad = np.stack([derivative_coefficients(exps, coeffs, a) for a in range(dim)], axis=-1)

    @classmethod
    def from_terms(cls, dim: int, terms: Mapping[tuple, float], name: str | None = None):
        degree = max((sum(e) for e in terms), default=0)
        exps = monomial_exponents(dim, degree)
        index = {tuple(e): i for i, e in enumerate(exps.tolist())}
        c = np.zeros(len(exps))
        for e, val in terms.items():
            if len(e) != dim:
                raise DomainError(f"exponent {e} does not match dim={dim}")
            c[index[tuple(e)]] += val
        return cls(dim, exps, c, name=name)

    def value(self, v):
        v = self._check(v)
        return monomials(v, self.exps) @ self.coeffs

    def gradient(self, v):
        v = self._check(v)
        return monomials(v, self.exps) @ self._grad

    def scaled(self, alpha):
        return PolynomialFunction(self.dim, self.exps, alpha * self.coeffs, name=self.name)

    def __add__(self, other: "PolynomialFunction") -> "PolynomialFunction":
        if other.dim != self.dim:
            raise DomainError("dimension mismatch")
        degree = max(self.degree, other.degree)
        exps = monomial_exponents(self.dim, degree)
        return PolynomialFunction(
            self.dim, exps, _regrid(self, exps) + _regrid(other, exps)
        )

    def __sub__(self, other):
        return self + other.scaled(-1.0)

    def __repr__(self):
        label = self.name or f"degree {self.degree}"
        return f"PolynomialFunction({label}, dim={self.dim})"


def _regrid(p: PolynomialFunction, exps: np.ndarray) -> np.ndarray:
    index = {tuple(e): i for i, e in enumerate(exps.tolist())}
    out = np.zeros(len(exps))
    for e, c in zip(p.exps.tolist(), p.coeffs):
        if c != 0:
            out[index[tuple(e)]] += c
    return out


class BasisExpansion(PolynomialFunction):
    """``h = sum_i a_i phi_i`` over a :class:`SonineBasis`."""

    def __init__(self, basis: "SonineBasis", coefficients, name: str | None = None):
        coefficients = np.asarray(coefficients, dtype=float).reshape(len(basis))
        self.basis = basis
        self.coefficients = coefficients
        super().__init__(basis.dim, basis.exps, basis.coeffs @ coefficients, name=name)

    def scaled(self, alpha):
        return BasisExpansion(self.basis, alpha * self.coefficients, name=self.name)

    def __repr__(self):
        return f"BasisExpansion({self.name or 'h'}, {self.basis!r})"


class Closure(TestFunction):
    """User-supplied ``h`` and ``grad h``; both receive an ``(n, dim)`` array."""

    def __init__(
        self,
        value: Callable[[np.ndarray], np.ndarray],
        gradient: Callable[[np.ndarray], np.ndarray],
        dim: int,
        degree: int | None = None,
        name: str | None = None,
    ):
        self.dim = dim
        self._value = value
        self._gradient = gradient
        self.degree = degree
        self.name = name

    def value(self, v):
        v = self._check(v)
        return np.asarray(self._value(v), dtype=float).reshape(len(v))

    def gradient(self, v):
        v = self._check(v)
        return np.asarray(self._gradient(v), dtype=float).reshape(len(v), self.dim)

    def scaled(self, alpha):
        f, g = self._value, self._gradient
        return Closure(lambda v: alpha * f(v), lambda v: alpha * g(v), self.dim, self.degree, self.name)

    def __repr__(self):
        return f"Closure({self.name or 'h'}, dim={self.dim})"


def collision_invariants(dim: int) -> list[PolynomialFunction]:
    """``1, v_1, ..., v_N, |v|^2`` as polynomials."""
    zero = (0,) * dim
    out = [PolynomialFunction.from_terms(dim, {zero: 1.0}, name="1")]
    for a in range(dim):
        e = [0] * dim
        e[a] = 1
        out.append(PolynomialFunction.from_terms(dim, {tuple(e): 1.0}, name=f"v{a + 1}"))
    sq = {}
    for a in range(dim):
        e = [0] * dim
        e[a] = 2
        sq[tuple(e)] = 1.0
    out.append(PolynomialFunction.from_terms(dim, sq, name="|v|^2"))
    return out


# --------------------------------------------------------------------------- basis


@dataclass(frozen=True, order=True)
class BasisIndex:
    n: int
    l: int
    m: int

    def __post_init__(self):
        if self.n < 0 or self.l < 0 or abs(self.m) > self.l:
            raise DomainError(f"invalid basis index {self}")

    @property
    def degree(self) -> int:
        return 2 * self.n + self.l

    @property
    def is_invariant(self) -> bool:
        return (self.n, self.l) in ((0, 0), (0, 1), (1, 0))

    def to_json(self) -> list:
        return [self.n, self.l, self.m]


# dict polynomials {exponent tuple: coefficient}, only used while building the basis


def _pmul(p: dict, q: dict) -> dict:
    out: dict = {}
    for ea, ca in p.items():
        for eb, cb in q.items():
            e = tuple(x + y for x, y in zip(ea, eb))
            out[e] = out.get(e, 0.0) + ca * cb
    return out


def _padd(p: dict, q: dict, scale: float = 1.0) -> dict:
    out = dict(p)
    for e, c in q.items():
        out[e] = out.get(e, 0.0) + scale * c
    return out


def _unit(dim: int, axis: int, power: int) -> dict:
    e = [0] * dim
    e[axis] = power
    return {tuple(e): 1.0}


def _r2_power(dim: int, j: int) -> dict:
    r2: dict = {}
    for a in range(dim):
        r2 = _padd(r2, _unit(dim, a, 2))
    out = {(0,) * dim: 1.0}
    for _ in range(j):
        out = _pmul(out, r2)
    return out


def _xiy_power(dim: int, m: int) -> tuple[dict, dict]:
    """Real and imaginary parts of ``(x + i y)^m``."""
    re: dict = {}
    im: dict = {}
    for k in range(m + 1):
        e = [0] * dim
        e[0], e[1] = m - k, k
        c = math.comb(m, k)
        if k % 2 == 0:
            re[tuple(e)] = c * (-1) ** (k // 2)
        else:
            im[tuple(e)] = c * (-1) ** ((k - 1) // 2)
    return re, im


def _solid_harmonic(dim: int, l: int, m: int) -> dict:
    if dim == 2:
        re, im = _xiy_power(2, l)
        return re if m >= 0 else im
    am = abs(m)
    re, im = _xiy_power(3, am)
    trig = re if m >= 0 else im
    # r^(l-|m|) P_l^(|m|)(z / r) as a polynomial in z and r^2
    dp = nppoly.polyder(npleg.leg2poly([0] * l + [1]), am) if l >= am else np.zeros(1)
    zpart: dict = {}
    for k, c in enumerate(dp):
        if c == 0 or (l - am - k) % 2:
            continue
        term = _pmul(_unit(3, 2, k), _r2_power(3, (l - am - k) // 2))
        zpart = _padd(zpart, term, c)
    return _pmul(trig, zpart)


def _laguerre(dim: int, n: int, alpha: float) -> dict:
    out: dict = {}
    for k in range(n + 1):
        c = (-1) ** k * binom(n + alpha, n - k) / math.factorial(k)
        out = _padd(out, _r2_power(dim, k), c)
    return out


def _basis_indices(dim: int, truncation: int) -> list[BasisIndex]:
    out = []
    for d in range(truncation + 1):
        for l in range(d % 2, d + 1, 2):
            n = (d - l) // 2
            if dim == 3:
                ms = list(range(-l, l + 1))
            else:
                ms = [0] if l == 0 else [l, -l]
            out.extend(BasisIndex(n, l, m) for m in ms)
    return out


class SonineBasis:
    """``L_n^(l + N/2 - 1)(|v|^2) * Y_lm(v)`` for ``2n + l <= truncation``.

    ``Y_lm`` are real solid harmonics (for N=2, ``m = +l`` is the cosine and
    ``m = -l`` the sine).  Functions are normalized to unit ``L^2(M)`` norm
    with ``M`` the reference Maxwellian of the given normalization; order is by
    degree ``2n + l``, then ``l``, then ``m``.
    """

    def __init__(self, dim: int, truncation: int, normalization: str = "unit-mass"):
        if dim not in (2, 3):
            raise DomainError(f"the basis is built for dim in {{2, 3}}, got {dim}")
        if truncation < 0:
            raise DomainError(f"truncation must be >= 0, got {truncation}")
        scale = weight_scale(dim, normalization)
        self.dim = dim
        self.truncation = truncation
        self.normalization = normalization
        self.indices = tuple(_basis_indices(dim, truncation))
        self.exps = monomial_exponents(dim, truncation)
        pos = {tuple(e): i for i, e in enumerate(self.exps.tolist())}
        coeffs = np.zeros((len(self.exps), len(self.indices)))
        for col, idx in enumerate(self.indices):
            radial = _laguerre(dim, idx.n, idx.l + dim / 2 - 1)
            for e, c in _pmul(radial, _solid_harmonic(dim, idx.l, idx.m)).items():
                coeffs[pos[e], col] += c
        grid = gauss_hermite_grid(truncation + 1, dim)
        vals = monomials(grid.nodes, self.exps) @ coeffs
        norms = np.sqrt(scale * (grid.weights @ vals**2))
        coeffs /= norms
        coeffs.setflags(write=False)
        self.coeffs = coeffs
        self._grad = np.stack(
            [derivative_coefficients(self.exps, coeffs, a) for a in range(dim)], axis=-1
        )

    def __len__(self) -> int:
        return len(self.indices)

    def __repr__(self):
        return f"SonineBasis(dim={self.dim}, truncation={self.truncation}, {self.normalization})"

    @property
    def invariant_mask(self) -> np.ndarray:
        return np.array([i.is_invariant for i in self.indices])

    def position(self, idx: BasisIndex) -> int:
        return self.indices.index(idx)

    def evaluate(self, v: np.ndarray) -> np.ndarray:
        """``(n, len(basis))`` values."""
        return monomials(v, self.exps) @ self.coeffs

    def gradient(self, v: np.ndarray) -> np.ndarray:
        """``(n, len(basis), dim)`` gradients."""
        mono = monomials(v, self.exps)
        K, nb, dim = self._grad.shape
        return (mono @ self._grad.reshape(K, nb * dim)).reshape(-1, nb, dim)

    def gram(self, order: int | None = None) -> np.ndarray:
        grid = gauss_hermite_grid(order or self.truncation + 1, self.dim)
        vals = self.evaluate(grid.nodes)
        return weight_scale(self.dim, self.normalization) * ((vals.T * grid.weights) @ vals)

    def function(self, idx: BasisIndex) -> BasisExpansion:
        c = np.zeros(len(self))
        c[self.position(idx)] = 1.0
        return BasisExpansion(self, c, name=f"phi{idx.to_json()}")

    def expansion(self, coefficients: Sequence[float], name: str | None = None) -> BasisExpansion:
        return BasisExpansion(self, coefficients, name=name)


@functools.lru_cache(maxsize=None)
def sonine_basis(dim: int, truncation: int, normalization: str = "unit-mass") -> SonineBasis:
    return SonineBasis(dim, truncation, normalization)
