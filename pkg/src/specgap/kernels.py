"""Collision kernels ``B = b(theta) * Phi(|v - v_*|)`` and their structural constants.

Kinetic kernels ``Phi`` and angular kernels ``b`` are immutable; ``b`` is a
function of the deviation angle ``theta`` in [0, pi].
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DomainError, HypothesisViolation
from .quadrature import legendre_rule, sphere_measure

__all__ = [
    "KineticKernel",
    "PowerLawKernel",
    "ConstantKernel",
    "TabulatedKernel",
    "KineticLowerBound",
    "AngularKernel",
    "ConstantAngular",
    "TabulatedAngular",
    "GrazingAngular",
    "Mollifier",
    "eval_phi",
    "eval_b",
    "eval_b_tilde",
    "monotone_envelope",
    "lower_bound_params",
    "compute_c_b",
    "c_Nj",
    "b_tilde_is_nonincreasing",
    "phi_from_json",
    "angular_from_json",
    "kernel_from_json",
]

_ANGLE_TOL = 1e-12


# --------------------------------------------------------------------------- kinetic


class KineticKernel:
    """Radial part ``Phi(r)`` of the collision kernel."""

    #: exponent ``g`` such that ``Phi(r) / r**g`` is smooth; used to build
    #: radial rules that integrate power laws exactly.
    gamma_hint: float = 0.0

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r < 0):
            raise DomainError("Phi is defined for r >= 0 only")
        return self._eval(r)

    def _eval(self, r: np.ndarray) -> np.ndarray:  # pragma: no cover - abstract
        raise NotImplementedError

    def reduced(self, r: np.ndarray) -> np.ndarray:
        """``Phi(r) / r**gamma_hint`` (exactly 1 for pure power laws)."""
        if self.gamma_hint == 0.0:
            return self(r)
        return self(r) / np.asarray(r, dtype=float) ** self.gamma_hint

    def to_json(self) -> dict:  # pragma: no cover - abstract
        raise NotImplementedError


@dataclass(frozen=True)
class PowerLawKernel(KineticKernel):
    gamma: float

    def __post_init__(self):
        if not self.gamma >= 0:
            raise DomainError(f"only hard potentials (gamma >= 0) are supported, got {self.gamma}")

    @property
    def gamma_hint(self) -> float:
        return float(self.gamma)

    def _eval(self, r):
        if self.gamma == 0:
            return np.ones_like(r)
        return r**self.gamma

    def reduced(self, r):
        return np.ones_like(np.asarray(r, dtype=float))

    def to_json(self) -> dict:
        return {"type": "power", "gamma": float(self.gamma)}


@dataclass(frozen=True)
class ConstantKernel(KineticKernel):
    value: float

    def __post_init__(self):
        if not (math.isfinite(self.value) and self.value >= 0):
            raise DomainError(f"constant kernel must be finite and >= 0, got {self.value}")

    def _eval(self, r):
        return np.full_like(r, self.value)

    def to_json(self) -> dict:
        return {"type": "constant", "value": float(self.value)}


@dataclass(frozen=True)
class TabulatedKernel(KineticKernel):
    """Piecewise-linear ``Phi``; clamps to the end values outside the grid."""

    r: tuple
    values: tuple

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if r.ndim != 1 or r.shape != v.shape or len(r) < 1:
            raise DomainError("tabulated kernel needs matching 1-D r and values")
        if np.any(np.diff(r) <= 0) or r[0] < 0:
            raise DomainError("tabulated r-grid must be increasing and non-negative")
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise DomainError("tabulated kernel values must be finite and >= 0")
        object.__setattr__(self, "r", tuple(float(x) for x in r))
        object.__setattr__(self, "values", tuple(float(x) for x in v))

    def _eval(self, r):
        return np.interp(r, self.r, self.values)

    def to_json(self) -> dict:
        return {"type": "tabulated", "r": list(self.r), "values": list(self.values)}


def eval_phi(kernel: KineticKernel, r: float) -> float:
    if r < 0:
        raise DomainError(f"Phi(r) requires r >= 0, got {r}")
    return float(kernel(r))


def monotone_envelope(kernel: KineticKernel) -> KineticKernel:
    """Largest non-decreasing minorant ``inf_{r' >= r} Phi(r')``."""
    if isinstance(kernel, (PowerLawKernel, ConstantKernel)):
        return kernel
    if not isinstance(kernel, TabulatedKernel):
        raise TypeError(f"unsupported kernel type {type(kernel).__name__}")
    r = list(kernel.r)
    v = list(kernel.values)
    # sweep right to left; on a linear piece the envelope is min(Phi, running min),
    # which may need a breakpoint where the piece crosses the running minimum
    out_r = [r[-1]]
    out_v = [v[-1]]
    running = v[-1]
    for i in range(len(r) - 2, -1, -1):
        r0, r1, v0, v1 = r[i], r[i + 1], v[i], v[i + 1]
        if v0 > running and v1 < running:
            cross = r0 + (running - v0) * (r1 - r0) / (v1 - v0)
            out_r.append(cross)
            out_v.append(running)
        running = min(running, v0)
        out_r.append(r0)
        out_v.append(running)
    pairs = sorted(zip(out_r, out_v))
    rr, vv = [], []
    for x, y in pairs:
        if rr and x - rr[-1] <= 1e-15 * max(1.0, abs(x)):
            vv[-1] = min(vv[-1], y)
            continue
        rr.append(x)
        vv.append(y)
    return TabulatedKernel(tuple(rr), tuple(vv))


@dataclass(frozen=True)
class KineticLowerBound:
    R: float
    c_phi: float

    def __post_init__(self):
        if self.R < 0:
            raise DomainError("R must be >= 0")
        if not self.c_phi > 0:
            raise HypothesisViolation(f"c_phi must be > 0, got {self.c_phi}")


def lower_bound_params(kernel: KineticKernel, R: float) -> KineticLowerBound:
    """``c_phi = inf_{r >= R} Phi(r)``; exact for all three kernel families."""
    if R < 0:
        raise DomainError(f"R must be >= 0, got {R}")
    if isinstance(kernel, PowerLawKernel):
        c = 1.0 if kernel.gamma == 0 else R**kernel.gamma
    elif isinstance(kernel, ConstantKernel):
        c = kernel.value
    elif isinstance(kernel, TabulatedKernel):
        knots = [v for x, v in zip(kernel.r, kernel.values) if x > R]
        c = min([float(kernel(R))] + knots)
    else:
        grid = R + np.linspace(0.0, 50.0, 20001)
        c = float(np.min(kernel(grid)))
    if not c > 0:
        raise HypothesisViolation(
            f"Phi is not bounded below by a positive constant on [{R}, inf) (inf = {c})"
        )
    return KineticLowerBound(float(R), float(c))


# --------------------------------------------------------------------------- mollifier


def _bump_shape(chi):
    x = 2.0 * np.asarray(chi, dtype=float) / np.pi
    return (1.0 - x * x) ** 2


def _uniform_shape(chi):
    return np.ones_like(np.asarray(chi, dtype=float))


_MOLLIFIER_SHAPES: dict[str, Callable] = {"bump": _bump_shape, "uniform": _uniform_shape}
_MOLLIFIER_ORDER = 64


@dataclass(frozen=True)
class Mollifier:
    """Non-increasing profile ``j`` on [0, pi/2] with unit mass.

    ``normalization`` is the raw mass of ``shape``; ``second_moment`` is
    ``int j(chi) chi^2 dchi`` of the normalized profile.
    """

    name: str = "bump"
    shape: Callable = field(default=None, repr=False, compare=False)
    normalization: float = field(init=False, compare=False)
    second_moment: float = field(init=False, compare=False)

    support = (0.0, math.pi / 2)

    def __post_init__(self):
        shape = self.shape
        if shape is None:
            try:
                shape = _MOLLIFIER_SHAPES[self.name]
            except KeyError:
                raise DomainError(f"unknown mollifier {self.name!r}") from None
            object.__setattr__(self, "shape", shape)
        x, w = legendre_rule(_MOLLIFIER_ORDER, *self.support)
        s = np.asarray(shape(x), dtype=float)
        if np.any(s < 0):
            raise DomainError("mollifier shape must be non-negative")
        mass = float(np.dot(w, s))
        if not mass > 0:
            raise DomainError("mollifier shape has zero mass")
        object.__setattr__(self, "normalization", mass)
        object.__setattr__(self, "second_moment", float(np.dot(w, s * x * x)) / mass)

    def __call__(self, chi):
        chi = np.asarray(chi, dtype=float)
        inside = (chi >= 0) & (chi <= self.support[1])
        return np.where(inside, np.asarray(self.shape(np.clip(chi, 0, self.support[1]))) / self.normalization, 0.0)

    def mass(self) -> float:
        x, w = legendre_rule(_MOLLIFIER_ORDER, *self.support)
        return float(np.dot(w, self(x)))

    def is_nonincreasing(self, samples: int = 2001) -> bool:
        v = self(np.linspace(*self.support, samples))
        return bool(np.all(np.diff(v) <= 1e-14 * max(1.0, float(v.max()))))


# --------------------------------------------------------------------------- angular


class AngularKernel:
    """Angular part ``b(theta)``, theta in [0, pi]."""

    def __call__(self, theta):
        theta = np.asarray(theta, dtype=float)
        if np.any(theta < -_ANGLE_TOL) or np.any(theta > np.pi + _ANGLE_TOL):
            raise DomainError("theta must lie in [0, pi]")
        return self._eval(np.clip(theta, 0.0, np.pi))

    def _eval(self, theta):  # pragma: no cover - abstract
        raise NotImplementedError

    def breakpoints(self) -> tuple[float, ...]:
        """Points of [0, pi] between which ``b`` is smooth; the last one closes the support."""
        return (0.0, math.pi)

    def b_tilde(self, theta, dim: int):
        """``2^(N-1) sin^(N-2)(theta/2) b(theta)``."""
        theta = np.asarray(theta, dtype=float)
        return 2.0 ** (dim - 1) * np.sin(0.5 * theta) ** (dim - 2) * self(theta)

    def polar_rule(self, order: int, dim: int) -> tuple[np.ndarray, np.ndarray]:
        """Rule for ``int_0^pi b(theta) sin^(N-2)(theta) g(theta) dtheta``.

        Composite Gauss-Legendre in theta over the breakpoints, ``order``
        nodes per piece.
        """
        thetas, weights = [], []
        bp = self.breakpoints()
        for a, c in zip(bp[:-1], bp[1:]):
            x, w = legendre_rule(order, a, c)
            thetas.append(x)
            weights.append(w * self._weight(x, dim))
        return np.concatenate(thetas), np.concatenate(weights)

    def _weight(self, theta, dim):
        return self(theta) * np.sin(theta) ** (dim - 2)

    def to_json(self) -> dict:  # pragma: no cover - abstract
        raise NotImplementedError


@dataclass(frozen=True)
class ConstantAngular(AngularKernel):
    value: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.value) and self.value >= 0):
            raise DomainError(f"constant b must be finite and >= 0, got {self.value}")

    def _eval(self, theta):
        return np.full_like(theta, self.value)

    def polar_rule(self, order, dim):
        if dim == 3:
            # Gauss-Legendre in cos(theta): exact for polynomials in cos(theta)
            t, w = legendre_rule(order, -1.0, 1.0)
            return np.arccos(t), self.value * w
        # midpoint rule in theta: exact for cos(k theta), k < 2*order
        theta = np.pi * (np.arange(order) + 0.5) / order
        return theta, np.full(order, self.value * np.pi / order)

    def to_json(self) -> dict:
        return {"type": "constant", "value": float(self.value)}


@dataclass(frozen=True)
class TabulatedAngular(AngularKernel):
    """Piecewise-linear ``b`` on a theta grid covering [0, pi]."""

    theta: tuple
    values: tuple

    def __post_init__(self):
        t = np.asarray(self.theta, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.ndim != 1 or t.shape != v.shape or len(t) < 2:
            raise DomainError("tabulated b needs matching 1-D theta and values")
        if np.any(np.diff(t) <= 0) or t[0] < 0 or t[-1] > np.pi + _ANGLE_TOL:
            raise DomainError("tabulated theta-grid must be increasing within [0, pi]")
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise DomainError("tabulated b values must be finite and >= 0")
        object.__setattr__(self, "theta", tuple(float(x) for x in t))
        object.__setattr__(self, "values", tuple(float(x) for x in v))

    def _eval(self, theta):
        return np.interp(theta, self.theta, self.values)

    def breakpoints(self):
        pts = sorted(set((0.0,) + tuple(min(x, math.pi) for x in self.theta) + (math.pi,)))
        return tuple(pts)

    def polar_rule(self, order, dim):
        pieces = len(self.breakpoints()) - 1
        return super().polar_rule(max(3, -(-order // pieces)), dim)

    def to_json(self) -> dict:
        return {"type": "tabulated", "theta": list(self.theta), "values": list(self.values)}


@dataclass(frozen=True)
class GrazingAngular(AngularKernel):
    """``b_eps(theta) = j_eps(theta) / (eps^2 sin^(N-2)(theta/2))``, ``j_eps = j(theta/eps)/eps``."""

    eps: float
    mollifier: Mollifier = field(default_factory=Mollifier)
    dim: int = 3

    def __post_init__(self):
        if not self.eps > 0:
            raise DomainError(f"eps must be > 0, got {self.eps}")
        if self.dim < 2:
            raise DomainError("grazing kernels need dim >= 2")

    @property
    def support_end(self) -> float:
        return min(self.eps * self.mollifier.support[1], math.pi)

    def j_eps(self, theta):
        return self.mollifier(np.asarray(theta, dtype=float) / self.eps) / self.eps

    def _eval(self, theta):
        with np.errstate(divide="ignore", invalid="ignore"):
            s = np.sin(0.5 * theta) ** (self.dim - 2)
            out = self.j_eps(theta) / (self.eps**2 * s)
        return np.where(theta > self.support_end, 0.0, out)

    def b_tilde(self, theta, dim=None):
        dim = self.dim if dim is None else dim
        if dim != self.dim:
            raise DomainError(f"grazing kernel built for dim={self.dim}, asked for dim={dim}")
        theta = np.asarray(theta, dtype=float)
        if np.any(theta < -_ANGLE_TOL) or np.any(theta > np.pi + _ANGLE_TOL):
            raise DomainError("theta must lie in [0, pi]")
        return 2.0 ** (dim - 1) * self.j_eps(theta) / self.eps**2

    def breakpoints(self):
        return (0.0, self.support_end)

    def _weight(self, theta, dim):
        if dim != self.dim:
            raise DomainError(f"grazing kernel built for dim={self.dim}, asked for dim={dim}")
        # b sin^(N-2) theta = j_eps (2 cos(theta/2))^(N-2) / eps^2, no 0/0 at theta = 0
        return self.j_eps(theta) * (2.0 * np.cos(0.5 * theta)) ** (dim - 2) / self.eps**2

    def to_json(self) -> dict:
        return {"type": "grazing", "eps": float(self.eps), "mollifier": self.mollifier.name, "dim": self.dim}


def eval_b(angular: AngularKernel, theta: float) -> float:
    if not (-_ANGLE_TOL <= theta <= math.pi + _ANGLE_TOL):
        raise DomainError(f"theta must lie in [0, pi], got {theta}")
    return float(angular(theta))


def eval_b_tilde(angular: AngularKernel, theta: float, dim: int = 3) -> float:
    if not (-_ANGLE_TOL <= theta <= math.pi + _ANGLE_TOL):
        raise DomainError(f"theta must lie in [0, pi], got {theta}")
    return float(angular.b_tilde(theta, dim))


def b_tilde_is_nonincreasing(angular: AngularKernel, dim: int = 3, samples: int = 4001) -> bool:
    theta = np.linspace(0.0, np.pi, samples)
    bt = angular.b_tilde(theta, dim)
    if not np.all(np.isfinite(bt)):
        return False
    return bool(np.all(np.diff(bt) <= 1e-12 * max(1.0, float(np.max(np.abs(bt))))))


# --------------------------------------------------------------------------- c_b


def _min_overlap_circle(angular: AngularKernel, alpha: float, order: int) -> float:
    """``int_{S^1} min(b(angle to 0), b(angle to alpha))``."""

    def wrapped(psi):
        d = np.abs(psi) % (2 * np.pi)
        return np.minimum(d, 2 * np.pi - d)

    cuts = {-np.pi, np.pi, 0.0, alpha, alpha - np.pi, 0.5 * alpha, 0.5 * alpha - np.pi}
    for t in angular.breakpoints():
        cuts.update({t, -t, alpha + t, alpha - t})
    pts = sorted(c for c in cuts if -np.pi <= c <= np.pi)
    total = 0.0
    for a, c in zip(pts[:-1], pts[1:]):
        if c - a < 1e-15:
            continue
        x, w = legendre_rule(order, a, c)
        total += float(np.dot(w, np.minimum(angular(wrapped(x)), angular(wrapped(x - alpha)))))
    return total


def _min_overlap_sphere(angular: AngularKernel, alpha: float, order: int) -> float:
    """``int_{S^2} min(b(theta_13), b(theta_23))`` with sigma_1, sigma_2 at angle ``alpha``.

    Polar axis along sigma_1 - sigma_2 so that the bisecting plane (where the
    two arguments swap order) is the equator; each hemisphere is integrated by
    Gauss-Legendre in cos times a uniform azimuth.
    """
    s1 = np.array([0.0, 0.0, 1.0])
    s2 = np.array([np.sin(alpha), 0.0, np.cos(alpha)])
    d = s1 - s2
    nd = np.linalg.norm(d)
    if nd < 1e-14:
        e3 = s1
    else:
        e3 = d / nd
    e1 = np.cross(e3, [0.0, 1.0, 0.0])
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(e3, e1)
    nphi = 4 * order
    phi = 2 * np.pi * (np.arange(nphi) + 0.5) / nphi
    total = 0.0
    for lo, hi in ((-1.0, 0.0), (0.0, 1.0)):
        t, wt = legendre_rule(order, lo, hi)
        st = np.sqrt(1 - t * t)
        pts = (
            (st[:, None] * np.cos(phi))[..., None] * e1
            + (st[:, None] * np.sin(phi))[..., None] * e2
            + t[:, None, None] * e3
        )
        c1 = np.clip(pts @ s1, -1.0, 1.0)
        c2 = np.clip(pts @ s2, -1.0, 1.0)
        vals = np.minimum(angular(np.arccos(c1)), angular(np.arccos(c2)))
        total += float(wt @ vals.sum(axis=1)) * (2 * np.pi / nphi)
    return total


def compute_c_b(angular: AngularKernel, dim: int = 3, resolution: int = 64, order: int = 64) -> float:
    """``inf_{sigma1, sigma2} int min(b(sigma1.sigma3), b(sigma2.sigma3)) dsigma3``.

    By rotation invariance the infimum runs over the single angle between
    sigma1 and sigma2; it is scanned on ``resolution`` points of [0, pi] and
    refined locally around the best scan point.  Returns the smallest value
    seen.
    """
    if dim not in (2, 3):
        raise DomainError(f"c_b is computed for dim in {{2, 3}}, got {dim}")
    if resolution < 16:
        raise DomainError(f"resolution must be >= 16, got {resolution}")
    overlap = _min_overlap_sphere if dim == 3 else _min_overlap_circle

    def f(a):
        return overlap(angular, float(a), order)

    alphas = np.linspace(0.0, np.pi, resolution)
    vals = np.array([f(a) for a in alphas])
    best = int(np.argmin(vals))
    lo = alphas[max(best - 1, 0)]
    hi = alphas[min(best + 1, resolution - 1)]
    c_b = float(vals[best])
    if hi > lo:
        res = minimize_scalar(f, bounds=(lo, hi), method="bounded", options={"xatol": 1e-10})
        c_b = min(c_b, float(res.fun))
    scale = sphere_measure(dim) * max(1.0, float(np.max(np.abs(angular(alphas)))))
    if c_b <= 1e-12 * scale:
        raise HypothesisViolation(f"c_b = {c_b:.3e}: the angular kernel does not satisfy c_b > 0")
    return c_b


def c_Nj(mollifier: Mollifier, dim: int) -> float:
    """Grazing-limit constant ``2^(N-5) |S^(N-2)| / (N-1) * int j chi^2``."""
    if dim < 2:
        raise DomainError(f"dimension must be >= 2, got {dim}")
    return 2.0 ** (dim - 5) * sphere_measure(dim - 1) / (dim - 1) * mollifier.second_moment


# --------------------------------------------------------------------------- JSON


def phi_from_json(data: dict) -> KineticKernel:
    kind = data.get("type")
    if kind == "power":
        return PowerLawKernel(float(data["gamma"]))
    if kind == "constant":
        return ConstantKernel(float(data["value"]))
    if kind == "tabulated":
        return TabulatedKernel(tuple(data["r"]), tuple(data["values"]))
    raise DomainError(f"unknown kinetic kernel type {kind!r}")


def angular_from_json(data: dict, dim: int = 3) -> AngularKernel:
    kind = data.get("type")
    if kind == "constant":
        return ConstantAngular(float(data.get("value", 1.0)))
    if kind == "grazing":
        return GrazingAngular(
            float(data["eps"]), Mollifier(data.get("mollifier", "bump")), int(data.get("dim", dim))
        )
    if kind == "tabulated":
        return TabulatedAngular(tuple(data["theta"]), tuple(data["values"]))
    if kind == "linear":
        # b(theta) = theta, exact as a two-point table
        return TabulatedAngular((0.0, math.pi), (0.0, math.pi))
    raise DomainError(f"unknown angular kernel type {kind!r}")


def kernel_from_json(data: dict, dim: int = 3) -> tuple[KineticKernel, AngularKernel]:
    """``{"phi": {...}, "b": {...}}`` -> ``(phi, b)``; ``b`` defaults to constant 1."""
    phi = phi_from_json(data["phi"])
    b = angular_from_json(data.get("b", {"type": "constant", "value": 1.0}), dim)
    return phi, b
