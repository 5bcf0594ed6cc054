"""Neumann Poisson problem on the slab and its high-order normal-derivative identities.

On the slab a cosine-type field automatically has zero normal derivative at
``x3 = 0`` and ``x3 = L``, so solving ``-Delta p = v`` is a modal division.
Normal derivatives of ``p`` are traded for tangential ones through

    d3^(2k+2) p = (-Lap')^(k+1) p - sum_{j=0..k} d3^(2j) (-Lap')^(k-j) v

where ``Lap' = d11 + d22``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .fields import SpectralField
from .multiindex import MultiIndex

DEFAULT_DEPTH = 2.0 * np.pi
MEAN_TOL = 1e-12
DIV_TOL = 1e-8


@dataclass(frozen=True)
class NeumannSolution:
    pressure: SpectralField
    source: SpectralField
    h2_constant: float


def _laplacian_symbol(f: SpectralField) -> np.ndarray:
    return sum(k**2 for k in f.kgrid())


def _check_scalar(f: SpectralField, name: str) -> None:
    if f.ncomp != 1:
        raise ValueError(f"{name} must be a scalar field")


def solve(v: SpectralField) -> NeumannSolution:
    """Mean-zero solution of ``-Delta p = v`` with ``dp/dn = 0`` on the faces.

    Works on the slab (cosine-type ``v``) and on the periodic box.
    """
    _check_scalar(v, "source")
    if v.geometry == "slab" and v.parity != (1,):
        raise ValueError("slab source must be cosine-type (even in x3)")
    scale = max(1.0, float(np.max(np.abs(v.coeffs))))
    resid = abs(complex(v.mean()[0]))
    if resid > MEAN_TOL * scale:
        raise ValueError(f"source is not mean-zero (mean = {resid:.3e}); the Neumann problem is not solvable")
    k2 = _laplacian_symbol(v)
    inv = np.zeros_like(k2)
    nz = k2 > 0
    inv[nz] = 1.0 / k2[nz]
    p = v.with_coeffs(v.coeffs * inv[None])
    return NeumannSolution(p, v, h2_constant(v))


def h2_constant(v: SpectralField) -> float:
    """Largest tangential-normal multiplier ``|k_i kappa_3| / |k|^2`` over the mode grid."""
    k = v.kgrid()
    if v.dim < 3:
        return 0.0
    k2 = _laplacian_symbol(v)
    nz = k2 > 0
    out = 0.0
    for i in (0, 1):
        m = np.abs(k[i] * k[2]) * np.ones(k2.shape)
        out = max(out, float(np.max(m[nz] / k2[nz])) if nz.any() else 0.0)
    return out


def negative_laplacian(p: SpectralField) -> SpectralField:
    return p.with_coeffs(p.coeffs * _laplacian_symbol(p)[None])


def pressure_source(u: SpectralField, div_tol: float = DIV_TOL) -> SpectralField:
    """``sum_ij d_j u_i d_i u_j`` on the grid, 2/3-dealiased and projected to mean zero."""
    d = u.dim
    if u.ncomp != d:
        raise ValueError("pressure source needs a velocity with dim components")
    if u.geometry == "slab" and u.parity != (1, 1, -1):
        raise ValueError("slab velocity must have cosine-type u1, u2 and sine-type u3")
    grad = u.gradient_coeffs()  # [i, j] = d_j u_i
    axes = tuple(range(2, grad.ndim))
    n = np.prod(u.shape)
    g = np.fft.ifftn(grad, axes=axes).real * n
    gscale = float(np.sqrt(np.sum(np.abs(grad) ** 2))) or 1.0
    div = u.divergence()
    dnorm = float(np.sqrt(np.sum(np.abs(div.coeffs) ** 2)))
    if dnorm > div_tol * gscale:
        raise ValueError(f"velocity is not divergence-free (relative |div u| = {dnorm / gscale:.3e})")
    src = np.einsum("ij...,ji...->...", g, g)
    c = np.fft.fftn(src) / n
    out = SpectralField(c[None], u.geometry, u.depth, (1,) if u.geometry == "slab" else None, u.time)
    out = out.dealiased()
    c = np.array(out.coeffs)
    c[(0,) * c.ndim] = 0.0
    return out.with_coeffs(c)


def _tangential_multiplier(f: SpectralField, a1: int, a2: int) -> np.ndarray:
    k1, k2 = f.kgrid()[:2]
    return (1j * k1) ** a1 * (1j * k2) ** a2


def d3_recursion(p: SpectralField, v: SpectralField, alpha) -> SpectralField:
    """``d3 d^alpha p`` built from tangential derivatives of ``p`` and derivatives of ``v``.

    For ``alpha3 = 2k+1``:
    ``(-Lap')^(k+1) d^alpha' p + sum_j (-1)^(k-j+1) d3^(2j) Lap'^(k-j) d^alpha' v``;
    for ``alpha3 = 2k+2`` the same expression with one more ``d3`` on every term.
    """
    alpha = MultiIndex.of(alpha)
    if alpha.a3 < 1:
        raise ValueError("the normal recursion needs alpha3 >= 1")
    if p.dim != 3 or v.dim != 3:
        raise ValueError("the normal recursion is three dimensional")
    k1, k2, k3 = p.kgrid()
    lap_t = -(k1**2 + k2**2)  # symbol of Lap'
    k = (alpha.a3 - 1) // 2
    extra = alpha.a3 % 2 == 0
    tang = _tangential_multiplier(p, alpha.a1, alpha.a2)
    mp = (-lap_t) ** (k + 1) * tang
    mv = np.zeros(np.broadcast_shapes(k1.shape, k2.shape, k3.shape), dtype=complex)
    for j in range(k + 1):
        mv = mv + (-1) ** (k - j + 1) * (1j * k3) ** (2 * j) * lap_t ** (k - j) * tang
    if extra:
        mp = mp * (1j * k3)
        mv = mv * (1j * k3)
    c = p.coeffs * mp[None] + v.coeffs * mv[None]
    flip = -1 if (alpha.a3 + 1) % 2 else 1
    par = None if p.parity is None else tuple(q * flip for q in p.parity)
    return p.with_coeffs(c, par)


def direct_d3(p: SpectralField, alpha) -> SpectralField:
    alpha = MultiIndex.of(alpha)
    return p.derivative((alpha.a1, alpha.a2, alpha.a3 + 1))


def relative_error(a: SpectralField, b: SpectralField) -> float:
    nb = b.l2_norm()
    diff = (a - b).l2_norm()
    return diff / nb if nb > 0 else diff


# -- estimate probes ----------------------------------------------------------

WHICH = {"d3": (0, 0, 1), "d1": (1, 0, 2), "d2": (0, 1, 2)}


def beta_set(alpha, which: str) -> Iterator[tuple[MultiIndex, int]]:
    """Multi-indices of the right-hand sum with their weights ``C(s+t, s)``.

    ``d3``: ``beta' - alpha' = (2s, 2t)``; ``d1``: ``(2s+1, 2t)``;
    ``d2``: ``(2s, 2t+1)``; always ``|beta| = |alpha| - 1``.
    """
    alpha = MultiIndex.of(alpha)
    if which not in WHICH:
        raise ValueError(f"which must be one of {sorted(WHICH)}")
    e1, e2, need = WHICH[which]
    if alpha.a3 < need:
        raise ValueError(f"{which} probe needs alpha3 >= {need}")
    budget = alpha.a3 - need  # = 2s + 2t + beta3
    for s in range(budget // 2 + 1):
        for t in range((budget - 2 * s) // 2 + 1):
            b = MultiIndex(alpha.a1 + 2 * s + e1, alpha.a2 + 2 * t + e2, budget - 2 * s - 2 * t)
            yield b, math.comb(s + t, s)


@dataclass(frozen=True)
class EstimateProbe:
    lhs: float
    rhs_sum: float

    @property
    def ratio(self) -> float:
        return self.lhs / self.rhs_sum if self.rhs_sum > 0 else 0.0


def _l2(f: SpectralField, alpha) -> float:
    from .gevrey import derivative_l2_norm

    return derivative_l2_norm(f, alpha)


def estimate_probe_53(p: SpectralField, v: SpectralField, alpha, which: str = "d3") -> EstimateProbe:
    """Both sides of the weighted normal-derivative estimate (without its constant)."""
    alpha = MultiIndex.of(alpha)
    terms = list(beta_set(alpha, which))
    e = {"d3": (0, 0, 1), "d1": (1, 0, 0), "d2": (0, 1, 0)}[which]
    lhs = _l2(p, alpha + MultiIndex(*e))
    rhs = math.fsum(w * _l2(v, b) for b, w in terms)
    return EstimateProbe(lhs, rhs)


def remark52_probe(p: SpectralField, v: SpectralField, alpha_t) -> tuple[float, float]:
    """``||d_i d3 d^alpha' p|| / ||d^alpha' v||`` for ``i = 1, 2`` (``nan`` if undefined)."""
    a1, a2 = alpha_t[:2]
    den = _l2(v, (a1, a2, 0))
    if den == 0:
        return (math.nan, math.nan)
    r1 = _l2(p, (a1 + 1, a2, 1)) / den
    r2 = _l2(p, (a1, a2 + 1, 1)) / den
    return (r1, r2)
