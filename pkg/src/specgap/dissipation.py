"""Linearized Boltzmann and Landau entropy dissipation functionals.

All integrals use the unnormalized Maxwellian ``M = exp(-|v|^2)``.  Pairs
``(v, v_*)`` are written in centre-of-mass form ``v = W + r s``,
``v_* = W - r s`` with ``s`` on the unit sphere, so that
``dv dv_* = 2^N r^(N-1) dr ds dW`` and ``M M_* = exp(-2|W|^2 - 2 r^2)``.
The ``W`` integral is a scaled Gauss-Hermite rule and the ``r`` integral a
generalized Gauss-Laguerre rule that absorbs ``|v - v_*|^gamma``; for
polynomial ``h`` and power-law ``Phi`` every rule is exact once the orders of
:meth:`Grids.for_degree` are met.
"""
from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import asdict, dataclass, replace
from typing import Callable, Iterable, Sequence

import numpy as np
from numpy.polynomial import legendre as npleg

from .errors import DomainError, IntegrationError, ResolutionError
from .functions import TestFunction
from .kernels import (
    AngularKernel,
    GrazingAngular,
    KineticKernel,
    Mollifier,
    c_Nj,
)
from .quadrature import (
    IntegralEstimate,
    gauss_hermite_grid,
    legendre_rule,
    monte_carlo_integrate,
    radial_rule,
    sphere_grid,
    sphere_measure,
)

logger = logging.getLogger(__name__)

__all__ = [
    "CollisionPair",
    "Grids",
    "post_collision",
    "k_defect",
    "projection_transverse",
    "d_boltzmann",
    "d_boltzmann_omega",
    "d_landau",
    "boltzmann_form",
    "landau_form",
    "cmcv_form",
    "GrazingTable",
    "grazing_sweep",
    "fitted_order",
    "MC_THRESHOLD",
    "MC_SAMPLES",
]

MC_THRESHOLD = 10**7
MC_SAMPLES = 10**6
MIN_GRAZING_POLAR = 32
_CHUNK_POINTS = 1 << 16
_DIAGONAL = 1e-12

Evaluator = Callable[[np.ndarray], np.ndarray]


# --------------------------------------------------------------------------- kinematics


@dataclass(frozen=True)
class CollisionPair:
    v: np.ndarray
    v_star: np.ndarray
    v_prime: np.ndarray
    v_star_prime: np.ndarray


def post_collision(v, v_star, sigma) -> CollisionPair:
    """Post-collisional velocities in the sigma-representation."""
    v = np.asarray(v, dtype=float)
    v_star = np.asarray(v_star, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if abs(np.linalg.norm(sigma) - 1.0) > 1e-12:
        raise DomainError(f"sigma must be a unit vector, |sigma| = {np.linalg.norm(sigma)}")
    centre = 0.5 * (v + v_star)
    half = 0.5 * np.linalg.norm(v - v_star)
    return CollisionPair(v, v_star, centre + half * sigma, centre - half * sigma)


def k_defect(h: TestFunction, pair: CollisionPair) -> float:
    """Squared collisional defect ``[h' + h'_* - h - h_*]^2``."""
    pts = np.stack([pair.v_prime, pair.v_star_prime, pair.v, pair.v_star])
    hv = h.value(pts)
    return float((hv[0] + hv[1] - hv[2] - hv[3]) ** 2)


def projection_transverse(z, u) -> np.ndarray:
    """``u - (u.z / |z|^2) z``."""
    z = np.asarray(z, dtype=float)
    u = np.asarray(u, dtype=float)
    zz = float(z @ z)
    if zz == 0.0:
        raise DomainError("projection onto z^perp is undefined for z = 0")
    return u - (u @ z / zz) * z


# --------------------------------------------------------------------------- grids


@dataclass(frozen=True)
class Grids:
    """Rule orders: velocity (Gauss-Hermite per axis), radial (Laguerre),
    sphere (product rule), polar (deviation angle), azimuth (around the
    pre-collisional direction)."""

    velocity: int = 10
    radial: int = 8
    sphere: int = 8
    polar: int = 16
    azimuth: int = 16

    def __post_init__(self):
        for name, val in asdict(self).items():
            if int(val) != val or val < 1:
                raise DomainError(f"grid order {name} must be a positive integer, got {val}")

    @classmethod
    def for_degree(cls, degree: int, margin: int = 1) -> "Grids":
        """Smallest orders exact for polynomial ``h`` of total degree ``degree``
        (plus ``margin``, which keeps :meth:`lowered` exact as well)."""
        d, m = int(degree), int(margin)
        return cls(d + 1 + m, d // 2 + 1 + m, d + 1 + m, max(d + 1 + m, 16), 2 * d + 1 + m)

    def lowered(self) -> "Grids":
        return Grids(*(max(1, x - 1) for x in asdict(self).values()))

    def doubled(self) -> "Grids":
        return Grids(*(2 * x for x in asdict(self).values()))

    def with_polar(self, order: int) -> "Grids":
        return replace(self, polar=order)

    def to_json(self) -> dict:
        return asdict(self)


def _default_grids(h: TestFunction | None) -> Grids:
    if h is not None and h.degree is not None:
        return Grids.for_degree(h.degree)
    return Grids()


def _centre_rule(order: int, dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Rule for ``int exp(-2|W|^2) f(W) dW``."""
    g = gauss_hermite_grid(order, dim)
    return g.nodes / math.sqrt(2.0), g.weights / 2.0 ** (dim / 2)


def _relative_rule(order: int, dim: int, phi: KineticKernel, extra: int = 0):
    """Rule for ``int_0^inf r^(N-1+extra) exp(-2 r^2) Phi(2r) g(r) dr``."""
    gh = float(phi.gamma_hint)
    rho, w = radial_rule(order, dim, gh + extra)
    r = rho / math.sqrt(2.0)
    factor = 2.0 ** ((gh - dim - extra) / 2.0)
    weights = w * factor * np.asarray(phi.reduced(2.0 * r), dtype=float)
    return r, weights


def _check_values(values: np.ndarray, points: np.ndarray, what: str) -> None:
    bad = ~np.isfinite(values)
    if bad.any():
        flat = np.flatnonzero(bad.reshape(len(points), -1).any(axis=1))[0]
        raise IntegrationError(f"{what} is not finite at node {points[flat].tolist()}")


def _eval(f: Evaluator, points: np.ndarray, what: str = "h") -> np.ndarray:
    out = np.asarray(f(points), dtype=float)
    _check_values(out, points, what)
    return out


def _frame(s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal vectors spanning ``s^perp`` for each row of ``s`` (N=3)."""
    a = np.zeros_like(s)
    use_x = np.abs(s[:, 2]) > 0.9
    a[~use_x, 2] = 1.0
    a[use_x, 0] = 1.0
    e1 = a - np.sum(a * s, axis=1, keepdims=True) * s
    e1 /= np.linalg.norm(e1, axis=1, keepdims=True)
    e2 = np.cross(s, e1)
    return e1, e2


# --------------------------------------------------------------------------- Boltzmann, sigma form


def _node_count_sigma(grids: Grids, dim: int, b: AngularKernel) -> int:
    theta, _ = b.polar_rule(grids.polar, dim)
    az = grids.azimuth if dim == 3 else 2
    return (
        grids.velocity**dim * grids.radial * len(sphere_grid(dim, grids.sphere)) * len(theta) * az
    )


def _check_grazing_resolution(b: AngularKernel, grids: Grids) -> None:
    if isinstance(b, GrazingAngular) and grids.polar < MIN_GRAZING_POLAR:
        raise ResolutionError(
            f"polar order {grids.polar} cannot resolve b_eps (eps={b.eps}); "
            f"use a polar order >= {MIN_GRAZING_POLAR}, e.g. grids.with_polar({MIN_GRAZING_POLAR})"
        )


def _d_boltzmann_sigma(h: TestFunction, phi: KineticKernel, b: AngularKernel, grids: Grids) -> float:
    dim = h.dim
    W, wW = _centre_rule(grids.velocity, dim)
    r, wr = _relative_rule(grids.radial, dim, phi)
    sph = sphere_grid(dim, grids.sphere)
    s2, ws = sph.nodes, sph.weights
    theta, wt = b.polar_rule(grids.polar, dim)
    if dim == 3:
        phis = 2.0 * np.pi * (np.arange(grids.azimuth) + 0.5) / grids.azimuth
        wphi = np.full(grids.azimuth, 2.0 * np.pi / grids.azimuth)
        e1, e2 = _frame(s2)
        # (ns, nt, nphi, 3)
        ring = np.cos(phis)[:, None] * e1[:, None, :] + np.sin(phis)[:, None] * e2[:, None, :]
        s1 = (
            np.cos(theta)[None, :, None, None] * s2[:, None, None, :]
            + np.sin(theta)[None, :, None, None] * ring[:, None, :, :]
        )
    elif dim == 2:
        wphi = np.ones(2)
        perp = np.stack([-s2[:, 1], s2[:, 0]], axis=1)
        signs = np.array([1.0, -1.0])
        s1 = (
            np.cos(theta)[None, :, None, None] * s2[:, None, None, :]
            + np.sin(theta)[None, :, None, None] * signs[None, None, :, None] * perp[:, None, None, :]
        )
    else:
        raise DomainError(f"Boltzmann quadrature supports dim in {{2, 3}}, got {dim}")
    ang_w = ws[:, None, None] * wt[None, :, None] * wphi[None, None, :]
    s1 = s1.reshape(-1, dim)
    n_ang = len(s1)
    per_s2 = ang_w.shape[1] * ang_w.shape[2]

    partial = []
    for iw in range(len(W)):
        total = 0.0
        for ir in range(len(r)):
            base_p = W[iw] + r[ir] * s2
            base_m = W[iw] - r[ir] * s2
            hb = _eval(h.value, base_p) + _eval(h.value, base_m)
            acc = 0.0
            for start in range(0, n_ang, _CHUNK_POINTS):
                stop = min(start + _CHUNK_POINTS, n_ang)
                blk = s1[start:stop]
                a = _eval(h.value, W[iw] + r[ir] * blk) + _eval(h.value, W[iw] - r[ir] * blk)
                idx = np.arange(start, stop) // per_s2
                k = (a - hb[idx]) ** 2
                acc += float(ang_w.reshape(-1)[start:stop] @ k)
            total += wr[ir] * acc
        partial.append(wW[iw] * total)
    return 2.0**dim / 4.0 * math.fsum(partial)


def _d_boltzmann_mc(h, phi, b, samples: int, seed: int) -> IntegralEstimate:
    dim = h.dim
    smeas = sphere_measure(dim)

    def f(x):
        v, vs, g = x[:, :dim], x[:, dim : 2 * dim], x[:, 2 * dim :]
        sigma = g / np.linalg.norm(g, axis=1, keepdims=True)
        z = v - vs
        nz = np.linalg.norm(z, axis=1)
        centre = 0.5 * (v + vs)
        vp = centre + 0.5 * nz[:, None] * sigma
        vsp = centre - 0.5 * nz[:, None] * sigma
        with np.errstate(invalid="ignore", divide="ignore"):
            cos_t = np.where(nz > _DIAGONAL, np.sum(z * sigma, axis=1) / nz, 1.0)
        theta = np.arccos(np.clip(cos_t, -1.0, 1.0))
        k = (h.value(vp) + h.value(vsp) - h.value(v) - h.value(vs)) ** 2
        return 0.25 * smeas * phi(nz) * b(theta) * k

    est = monte_carlo_integrate(3 * dim, f, samples, seed)
    logger.info("d_boltzmann: monte carlo with %d samples, seed %d", samples, seed)
    return est.scaled(math.pi ** (-dim / 2))


def d_boltzmann(
    h: TestFunction,
    phi: KineticKernel,
    b: AngularKernel,
    grids: Grids | None = None,
    *,
    method: str = "auto",
    estimate_error: bool = False,
    samples: int = MC_SAMPLES,
    seed: int = 0,
) -> IntegralEstimate:
    """Boltzmann dissipation ``(1/4) iiint Phi b M M_* [h' + h'_* - h - h_*]^2``.

    The sigma integral is taken around each pre-collisional direction with
    the angular kernel's own polar rule (so ``b`` enters as a weight) and a
    uniform azimuth.  ``method`` is ``"quadrature"``, ``"monte-carlo"`` or
    ``"auto"`` (Monte Carlo above ``MC_THRESHOLD`` nodes).
    """
    grids = grids or _default_grids(h)
    _check_grazing_resolution(b, grids)
    if method not in ("auto", "quadrature", "monte-carlo"):
        raise DomainError(f"unknown method {method!r}")
    if method == "auto":
        method = "monte-carlo" if _node_count_sigma(grids, h.dim, b) > MC_THRESHOLD else "quadrature"
    if method == "monte-carlo":
        return _d_boltzmann_mc(h, phi, b, samples, seed)
    value = _d_boltzmann_sigma(h, phi, b, grids)
    error = 0.0
    if estimate_error:
        error = abs(value - _d_boltzmann_sigma(h, phi, b, grids.lowered()))
    return IntegralEstimate(value, error)


# --------------------------------------------------------------------------- Boltzmann, omega form


def _d_boltzmann_omega(h, phi, b, grids: Grids) -> float:
    dim = 3
    sph = sphere_grid(dim, grids.sphere)
    omegas, wom = sph.nodes, sph.weights
    e1s, e2s = _frame(omegas)
    s_nodes, s_w = _hermite_line(grids.velocity)
    p_grid = gauss_hermite_grid(grids.velocity, 2)
    rho, wrho = radial_rule(grids.radial, dim, float(phi.gamma_hint))
    wrho = wrho * 2.0 ** (phi.gamma_hint / 2) * np.asarray(phi.reduced(math.sqrt(2.0) * rho))
    # deviation angle nodes over the breakpoints of b, then the two alpha branches
    th, wth = [], []
    bp = b.breakpoints()
    for a0, a1 in zip(bp[:-1], bp[1:]):
        x, w = legendre_rule(grids.polar, a0, a1)
        th.append(x)
        wth.append(w)
    theta = np.concatenate(th)
    w_alpha = 0.5 * np.cos(0.5 * theta) * b.b_tilde(theta, dim) * np.concatenate(wth)
    cos_a = np.concatenate([np.sin(0.5 * theta), -np.sin(0.5 * theta)])
    sin_a = np.concatenate([np.cos(0.5 * theta), np.cos(0.5 * theta)])
    w_alpha = np.concatenate([w_alpha, w_alpha])
    beta = 2.0 * np.pi * (np.arange(grids.azimuth) + 0.5) / grids.azimuth
    w_beta = 2.0 * np.pi / grids.azimuth

    # inner weights over (s, P, rho, alpha, beta), independent of omega
    ws_full = (
        s_w[:, None, None, None, None]
        * p_grid.weights[None, :, None, None, None]
        * wrho[None, None, :, None, None]
        * w_alpha[None, None, None, :, None]
        * w_beta
    )
    shape = (len(s_nodes), len(p_grid), len(rho), len(cos_a), len(beta))
    ws_full = np.broadcast_to(ws_full, shape).reshape(-1)
    S = s_nodes[:, None, None, None, None]
    t = (rho[:, None] * cos_a[None, :])[None, None, :, :, None]
    q = (rho[:, None] * sin_a[None, :])[None, None, :, :, None]
    r1 = np.broadcast_to((S + t) / math.sqrt(2.0), shape).reshape(-1)
    r2 = np.broadcast_to((S - t) / math.sqrt(2.0), shape).reshape(-1)
    # in-plane coordinates of P and Q in the (e1, e2) frame
    p1 = np.broadcast_to(p_grid.nodes[:, 0][None, :, None, None, None], shape).reshape(-1)
    p2 = np.broadcast_to(p_grid.nodes[:, 1][None, :, None, None, None], shape).reshape(-1)
    q1 = np.broadcast_to(q * np.cos(beta), shape).reshape(-1)
    q2 = np.broadcast_to(q * np.sin(beta), shape).reshape(-1)
    a1, a2 = (p1 + q1) / math.sqrt(2.0), (p2 + q2) / math.sqrt(2.0)
    b1, b2 = (p1 - q1) / math.sqrt(2.0), (p2 - q2) / math.sqrt(2.0)

    partial = []
    for iw in range(len(omegas)):
        om, e1, e2 = omegas[iw], e1s[iw], e2s[iw]
        acc = 0.0
        for start in range(0, len(ws_full), _CHUNK_POINTS):
            sl = slice(start, min(start + _CHUNK_POINTS, len(ws_full)))
            V1 = a1[sl, None] * e1 + a2[sl, None] * e2
            V2 = b1[sl, None] * e1 + b2[sl, None] * e2
            R1 = r1[sl, None] * om
            R2 = r2[sl, None] * om
            k = (
                _eval(h.value, R2 + V1)
                + _eval(h.value, R1 + V2)
                - _eval(h.value, R1 + V1)
                - _eval(h.value, R2 + V2)
            ) ** 2
            acc += float(ws_full[sl] @ k)
        partial.append(wom[iw] * acc)
    return math.fsum(partial) / 8.0


def _hermite_line(order: int) -> tuple[np.ndarray, np.ndarray]:
    g = gauss_hermite_grid(order, 1)
    return g.nodes[:, 0], g.weights


def d_boltzmann_omega(
    h: TestFunction,
    phi: KineticKernel,
    b: AngularKernel,
    grids: Grids | None = None,
    *,
    estimate_error: bool = False,
) -> IntegralEstimate:
    """Boltzmann dissipation in the omega-representation (N=3 only).

    ``v' = v - (z.w) w``, ``v'_* = v_* + (z.w) w`` with ``w`` over the whole
    sphere (each deviation covered twice) and angular weight ``b_tilde``.
    For fixed ``w`` the velocities split as ``v = r1 w + V1``,
    ``v_* = r2 w + V2``; the rotated pairs ``(r1 +- r2)/sqrt2`` and
    ``(V1 +- V2)/sqrt2`` carry independent Gaussian weights, and the
    relative part is taken in polar form around ``w``.  ``grids.sphere`` is
    the order of the ``w`` rule, which needs ``2*degree + 1`` for exactness.
    """
    if h.dim != 3:
        raise DomainError("the omega-representation is implemented for dim = 3")
    if grids is None:
        base = _default_grids(h)
        grids = replace(base, sphere=2 * (h.degree or 4) + 2)
    _check_grazing_resolution(b, grids)
    value = _d_boltzmann_omega(h, phi, b, grids)
    error = abs(value - _d_boltzmann_omega(h, phi, b, grids.lowered())) if estimate_error else 0.0
    return IntegralEstimate(value, error)


# --------------------------------------------------------------------------- bilinear forms


def _as_evaluator(h) -> tuple[Evaluator, Evaluator, int]:
    """Value/gradient evaluators returning one column per function."""
    if isinstance(h, TestFunction):
        return (
            lambda p: h.value(p)[:, None],
            lambda p: h.gradient(p)[:, None, :],
            h.dim,
        )
    return h.evaluate, h.gradient, h.dim  # a SonineBasis or compatible object


def _node_batches(W, wW, r, wr, per_node: int):
    pairs = [(i, j) for i in range(len(W)) for j in range(len(r))]
    size = max(1, _CHUNK_POINTS // max(per_node, 1))
    for start in range(0, len(pairs), size):
        batch = pairs[start : start + size]
        iw = np.array([p[0] for p in batch])
        ir = np.array([p[1] for p in batch])
        yield W[iw], r[ir], wW[iw] * wr[ir]


def _funk_hecke_kernel(b: AngularKernel, dim: int, nodes: np.ndarray, weights: np.ndarray, degree: int, polar: int):
    """``2 bhat_0 diag(w) - 2 w_p w_q b_L(s_p . s_q)`` with ``L = degree``."""
    theta, wt = b.polar_rule(polar, dim)
    ct = np.cos(theta)
    smeas = sphere_measure(dim)
    lower = sphere_measure(dim - 1)
    gram = np.clip(nodes @ nodes.T, -1.0, 1.0)
    kern = np.zeros_like(gram)
    bhat0 = lower * float(np.sum(wt))
    for ell in range(degree + 1):
        if dim == 3:
            coef = np.zeros(ell + 1)
            coef[-1] = 1.0
            bhat = lower * float(wt @ npleg.legval(ct, coef))
            kern += (2 * ell + 1) / smeas * bhat * npleg.legval(gram, coef)
        else:
            bhat = lower * float(wt @ np.cos(ell * theta))
            mult = 1.0 if ell == 0 else 2.0
            kern += mult / smeas * bhat * np.cos(ell * np.arccos(gram))
    return 2.0 * bhat0 * np.diag(weights) - 2.0 * (weights[:, None] * kern * weights[None, :])


def boltzmann_form(h, phi: KineticKernel, b: AngularKernel, grids: Grids, degree: int | None = None) -> np.ndarray:
    """Matrix of the Boltzmann dissipation bilinear form over the functions of ``h``.

    ``h`` is a :class:`TestFunction` (1x1 result) or a basis.  Uses
    ``int int b(s1.s2) (a(s1) - a(s2))^2 = 2 bhat_0 int a^2 - 2 int int b a a``
    with ``a(s) = h(W + r s) + h(W - r s)`` and the cross term through the
    Funk-Hecke truncation of ``b`` at ``degree`` (exact for polynomials of at
    most that degree).
    """
    _check_grazing_resolution(b, grids)
    value, _, dim = _as_evaluator(h)
    if degree is None:
        degree = getattr(h, "degree", None)
        if degree is None:
            degree = getattr(h, "truncation")
    W, wW = _centre_rule(grids.velocity, dim)
    r, wr = _relative_rule(grids.radial, dim, phi)
    sph = sphere_grid(dim, grids.sphere)
    s, ws = sph.nodes, sph.weights
    ns = len(s)
    K = _funk_hecke_kernel(b, dim, s, ws, degree, grids.polar)
    A = None
    for Wb, rb, cb in _node_batches(W, wW, r, wr, 2 * ns):
        pts = Wb[:, None, :] + rb[:, None, None] * s[None, :, :]
        mpts = Wb[:, None, :] - rb[:, None, None] * s[None, :, :]
        a = _eval(value, pts.reshape(-1, dim)) + _eval(value, mpts.reshape(-1, dim))
        m = a.shape[1]
        a = a.reshape(len(cb), ns, m)
        Ka = np.matmul(K, a)
        contrib = (a * cb[:, None, None]).reshape(-1, m).T @ Ka.reshape(-1, m)
        A = contrib if A is None else A + contrib
    A = 2.0**dim / 4.0 * A
    return 0.5 * (A + A.T)


def landau_form(h, phi: KineticKernel, grids: Grids) -> np.ndarray:
    """Matrix of the Landau dissipation bilinear form.

    ``(1/2) iint Phi |z|^2 <P_z (grad h_i - grad h_i*), P_z (grad h_j - grad h_j*)> M M_*``
    with ``P_z`` the projection on ``z^perp``, ``z = v - v_*``.
    """
    _, grad, dim = _as_evaluator(h)
    W, wW = _centre_rule(grids.velocity, dim)
    r, wr = _relative_rule(grids.radial, dim, phi, extra=2)
    sph = sphere_grid(dim, grids.sphere)
    s, ws = sph.nodes, sph.weights
    ns = len(s)
    A = None
    for Wb, rb, cb in _node_batches(W, wW, r, wr, 2 * ns):
        pts = (Wb[:, None, :] + rb[:, None, None] * s[None, :, :]).reshape(-1, dim)
        mpts = (Wb[:, None, :] - rb[:, None, None] * s[None, :, :]).reshape(-1, dim)
        g = _eval(grad, pts, "grad h") - _eval(grad, mpts, "grad h")
        m = g.shape[1]
        # layout (node, sphere point, component, function) so one product covers all components
        g = np.ascontiguousarray(g.reshape(len(cb), ns, m, dim).transpose(0, 1, 3, 2))
        sg = np.einsum("npdi,pd->npi", g, s)
        proj = g - s[None, :, :, None] * sg[:, :, None, :]
        wproj = proj * (cb[:, None] * ws[None, :])[:, :, None, None]
        contrib = wproj.reshape(-1, m).T @ proj.reshape(-1, m)
        A = contrib if A is None else A + contrib
    # (2r)^2 is in the radial rule as 4 r^2
    A = 2.0**dim / 2.0 * 4.0 * A
    return 0.5 * (A + A.T)


def cmcv_form(h, gamma: float, grids: Grids) -> np.ndarray:
    """Matrix of ``iint (xi(x) - xi(y))^2 |x - y|^gamma M(x) M(y)``."""
    from .kernels import PowerLawKernel

    value, _, dim = _as_evaluator(h)
    W, wW = _centre_rule(grids.velocity, dim)
    r, wr = _relative_rule(grids.radial, dim, PowerLawKernel(gamma))
    sph = sphere_grid(dim, grids.sphere)
    s, ws = sph.nodes, sph.weights
    ns = len(s)
    A = None
    for Wb, rb, cb in _node_batches(W, wW, r, wr, 2 * ns):
        pts = (Wb[:, None, :] + rb[:, None, None] * s[None, :, :]).reshape(-1, dim)
        mpts = (Wb[:, None, :] - rb[:, None, None] * s[None, :, :]).reshape(-1, dim)
        d = _eval(value, pts) - _eval(value, mpts)
        m = d.shape[1]
        d = d.reshape(len(cb), ns, m)
        wd = d * (cb[:, None] * ws[None, :])[:, :, None]
        contrib = wd.reshape(-1, m).T @ d.reshape(-1, m)
        A = contrib if A is None else A + contrib
    A = 2.0**dim * A
    return 0.5 * (A + A.T)


# --------------------------------------------------------------------------- Landau


def _d_landau_mc(h: TestFunction, phi: KineticKernel, samples: int, seed: int) -> IntegralEstimate:
    dim = h.dim

    def f(x):
        v, vs = x[:, :dim], x[:, dim:]
        z = v - vs
        zz = np.sum(z * z, axis=1)
        g = h.gradient(v) - h.gradient(vs)
        safe = zz > _DIAGONAL**2
        with np.errstate(invalid="ignore", divide="ignore"):
            pg2 = np.sum(g * g, axis=1) - np.where(safe, np.sum(g * z, axis=1) ** 2 / zz, 0.0)
        out = 0.5 * phi(np.sqrt(zz)) * zz * pg2
        return np.where(safe, out, 0.0)

    logger.info("d_landau: monte carlo with %d samples, seed %d", samples, seed)
    return monte_carlo_integrate(2 * dim, f, samples, seed)


def d_landau(
    h: TestFunction,
    phi: KineticKernel,
    grids: Grids | None = None,
    *,
    method: str = "auto",
    estimate_error: bool = False,
    samples: int = MC_SAMPLES,
    seed: int = 0,
) -> IntegralEstimate:
    """Landau dissipation ``(1/2) iint Phi |z|^2 |P_(z^perp)(grad h - grad h_*)|^2 M M_*``."""
    grids = grids or _default_grids(h)
    if method not in ("auto", "quadrature", "monte-carlo"):
        raise DomainError(f"unknown method {method!r}")
    if method == "auto":
        nodes = grids.velocity**h.dim * grids.radial * len(sphere_grid(h.dim, grids.sphere))
        method = "monte-carlo" if nodes > MC_THRESHOLD else "quadrature"
    if method == "monte-carlo":
        return _d_landau_mc(h, phi, samples, seed)
    value = float(landau_form(h, phi, grids)[0, 0])
    error = 0.0
    if estimate_error:
        error = abs(value - float(landau_form(h, phi, grids.lowered())[0, 0]))
    return IntegralEstimate(value, error)


# --------------------------------------------------------------------------- grazing limit


@dataclass
class GrazingTable:
    rows: list  # (eps, d_boltzmann, c_times_d_landau, rel_error)
    fitted_order: float | None
    mollifier: str
    second_moment: float
    columns: tuple = ("eps", "d_boltzmann", "c_times_d_landau", "rel_error")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([repr(float(x)) for x in row])
        order = "nan" if self.fitted_order is None else repr(float(self.fitted_order))
        buf.write(f"# mollifier={self.mollifier} second_moment={self.second_moment!r}\n")
        buf.write(f"# fitted_order={order}\n")
        return buf.getvalue()


def fitted_order(eps: Sequence[float], errors: Sequence[float]) -> float | None:
    """Least-squares slope of ``log(error)`` against ``log(eps)``."""
    e = np.asarray(eps, dtype=float)
    r = np.asarray(errors, dtype=float)
    ok = r > 0
    if ok.sum() < 2:
        return None
    slope, _ = np.polyfit(np.log(e[ok]), np.log(r[ok]), 1)
    return float(slope)


def _relative(a: float, b: float, scale: float) -> float:
    if abs(b) <= 1e-300 and abs(a) <= 1e-12 * max(scale, 1.0):
        return 0.0
    return abs(a - b) / abs(b)


def grazing_sweep(
    h: TestFunction,
    phi: KineticKernel,
    j: Mollifier,
    eps_list: Iterable[float],
    grids: Grids | None = None,
) -> GrazingTable:
    """Compare ``D_Bo(b_eps)`` with ``c_(N,j) D_La`` along a decreasing eps list."""
    eps = [float(e) for e in eps_list]
    if not eps or any(e <= 0 for e in eps):
        raise DomainError("eps values must be positive")
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise DomainError("eps list must be strictly decreasing")
    if grids is None:
        base = _default_grids(h)
        grids = base.with_polar(max(base.polar, MIN_GRAZING_POLAR))
    if grids.polar < MIN_GRAZING_POLAR:
        raise ResolutionError(
            f"polar order {grids.polar} cannot resolve b_eps; grazing sweeps need a polar "
            f"order >= {MIN_GRAZING_POLAR} (the polar rule lives on the support [0, eps*pi/2])"
        )
    dim = h.dim
    c = c_Nj(j, dim)
    dla = d_landau(h, phi, grids, method="quadrature").value
    target = c * dla
    rows = []
    for e in eps:
        dbo = d_boltzmann(h, phi, GrazingAngular(e, j, dim), grids, method="quadrature").value
        rows.append((e, dbo, target, _relative(dbo, target, abs(dbo))))
    order = fitted_order([r[0] for r in rows], [r[3] for r in rows])
    return GrazingTable(rows, order, j.name, j.second_moment)
