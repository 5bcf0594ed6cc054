"""Finite-truncation probes of the commutator and pressure estimates.

Both sides of each estimate are evaluated for a band-limited velocity and the
ratio ``lhs / (group1 + group2 * ||u||_Y)`` is reported as an empirical
implied constant.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from functools import lru_cache

import numpy as np

from .fields import SpectralField
from .gevrey import power_moments, seminorm_table, x_norm
from .multiindex import MultiIndex, multi_binom, multi_indices, sub_indices, weight
from .neumann import pressure_source, solve

PARTIAL_ORDERS = (10, 15, 20)


@dataclass(frozen=True)
class ProbeReport:
    which: str
    m_max: int
    tau: float
    s: float
    lhs: float
    group1: float
    group2: float
    y_norm: float
    implied_constant: float
    tail_ratio: float
    converged: bool

    def as_row(self) -> dict:
        return asdict(self)


def _gevrey_factor(m: int, tau: float, s: float) -> float:
    return math.exp((m - 3) * math.log(tau) - s * math.lgamma(m - 2))


def _tail(terms: list[float]) -> float:
    total = math.fsum(terms)
    return terms[-1] / total if total > 0 else 0.0


def _grid_derivatives(u: SpectralField, order: int) -> dict[MultiIndex, np.ndarray]:
    """Real grid values of ``d^gamma u`` for every ``|gamma| <= order``."""
    axes = tuple(range(1, u.coeffs.ndim))
    n = np.prod(u.shape)
    out = {}
    for m in range(order + 1):
        for g in multi_indices(m):
            c = u.coeffs * u.derivative_multiplier(g)[None]
            out[g] = np.fft.ifftn(c, axes=axes).real * n
    return out


def _sup_seminorms(D: dict, upto: int) -> list[float]:
    out = []
    for m in range(upto + 1):
        acc = 0.0
        for a in multi_indices(m):
            acc += weight(a) * float(np.sum(np.max(np.abs(D[a]).reshape(D[a].shape[0], -1), axis=1)))
        out.append(acc)
    return out


def _groups(table, sup, tau, s, Xt, pressure=False):
    u1, u2, u3 = sup[1], sup[2], sup[3]
    g1 = u1 * table[3] + u2 * table[2] + tau * u2 * table[3]
    if pressure:
        g1 += tau**2 * u3 * table[3]
    g2 = tau * u1 + tau**2 * u2 + tau**3 * u3 + tau**1.5 * Xt
    return g1, g2


def _sup_table(u: SpectralField) -> list[float]:
    """``|u|_{m,inf}`` for ``m <= 3`` on a 2x oversampled grid."""
    fine = u.padded([2 * n for n in u.shape])
    return _sup_seminorms(_grid_derivatives(fine, 3), 3)


def _report(which, lhs_terms, m_max, tau, s, table, sup, pressure):
    lhs = math.fsum(lhs_terms)
    xr = x_norm(table, tau)
    g1, g2 = _groups(table, sup, tau, s, xr.x_norm, pressure)
    den = g1 + g2 * xr.y_norm
    implied = lhs / den if den > 0 else 0.0
    tail = _tail(lhs_terms) if lhs_terms else 0.0
    return ProbeReport(which, m_max, tau, s, lhs, g1, g2, xr.y_norm, implied, tail, tail < 0.5)


try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is optional
    njit = None


def _pair_sq_norms_py(D, left_idx, right_idx):
    left = D[left_idx]  # (n, j, P)
    right = np.stack([D[right_idx[:, j]] for j in range(right_idx.shape[1])], axis=2)  # (n, i, j, P)
    prod = np.einsum("nj...,nij...->ni...", left, right)
    return np.sum(prod.reshape(len(left_idx), -1) ** 2, axis=1)


if njit is not None:

    @njit(cache=True)
    def _pair_sq_norms(D, left_idx, right_idx):  # pragma: no cover - compiled
        n, d = right_idx.shape
        P = D.shape[2]
        out = np.zeros(n)
        for q in range(n):
            b = left_idx[q]
            acc = 0.0
            for p in range(P):
                for i in range(d):
                    v = 0.0
                    for j in range(d):
                        v += D[b, j, p] * D[right_idx[q, j], i, p]
                    acc += v * v
            out[q] = acc
        return out

else:  # pragma: no cover
    _pair_sq_norms = _pair_sq_norms_py


@lru_cache(maxsize=None)
def _leibniz_pairs(m: int, d: int):
    """Flattened ``(alpha, beta)`` pairs of order ``m`` as indices into the ``gamma`` table.

    Returns ``(coef, left, right)`` where ``right[:, j]`` indexes
    ``(alpha - beta) + e_j``.
    """
    index = _gamma_index(m + 1)
    unit = [MultiIndex(*(1 if i == j else 0 for i in range(3))) for j in range(d)]
    coef, left, right = [], [], []
    for a in multi_indices(m):
        if d == 2 and a.a3:
            continue
        for b in sub_indices(a):
            if b.order == 0 or (d == 2 and b.a3):
                continue
            coef.append(weight(a) * multi_binom(a, b))
            left.append(index[b])
            right.append([index[(a - b) + e] for e in unit])
    return (np.array(coef, dtype=float), np.array(left, dtype=np.int64), np.array(right, dtype=np.int64).reshape(-1, d))


@lru_cache(maxsize=None)
def _gamma_index(order: int) -> dict:
    return {g: i for i, g in enumerate(g for m in range(order + 1) for g in multi_indices(m))}


def commutator_terms(u: SpectralField, m_max: int, tau: float, s: float = 1.0) -> list[float]:
    """Per-order terms ``m = 3..m_max`` of the truncated commutator sum.

    The field is moved to the smallest grid holding ``4 K + 1`` points per
    axis, where every product ``d^beta u . grad d^(alpha-beta) u`` is alias
    free and its L2 norm (Euclidean over components) is exact grid quadrature.
    """
    if u.ncomp != u.dim:
        raise ValueError("commutator probe needs a velocity field")
    if not np.any(u.coeffs):
        return [0.0] * (m_max - 2)
    w = u.compact(4)
    Dd = _grid_derivatives(w, m_max + 1)
    index = _gamma_index(m_max + 1)
    D = np.empty((len(index), w.ncomp, int(np.prod(w.shape))))
    for g, i in index.items():
        D[i] = Dd[g].reshape(w.ncomp, -1)
    del Dd
    cell = w.volume / np.prod(w.shape)
    terms = []
    for m in range(3, m_max + 1):
        coef, left, right = _leibniz_pairs(m, w.dim)
        sq = _pair_sq_norms(D, left, right) * cell
        terms.append(math.fsum(coef * np.sqrt(sq)) * _gevrey_factor(m, tau, s))
    return terms


def commutator_probe(u: SpectralField, tau: float, s: float = 1.0, m_max: int = 15, orders=None):
    """Commutator-estimate report at ``m_max`` (or one report per entry of ``orders``)."""
    top = m_max if orders is None else max(orders)
    terms = commutator_terms(u, top, tau, s)
    table_full = seminorm_table(u, top, s)
    sup = _sup_table(u.compact(2))
    reports = []
    for mm in ([m_max] if orders is None else orders):
        table = seminorm_table(u, mm, s) if mm != top else table_full
        reports.append(_report("commutator", terms[: mm - 2], mm, tau, s, table, sup, False))
    return reports[0] if orders is None else reports


def pressure_terms(p: SpectralField, m_max: int, tau: float, s: float = 1.0) -> list[float]:
    """Terms of ``sum M_alpha ||grad d^alpha p|| tau^(m-3)/(m-3)!^s`` over ``alpha3 != 0``."""
    mom, ks = power_moments(p, m_max + 1)
    vol = p.volume
    terms = []
    for m in range(3, m_max + 1):
        acc = 0.0
        for a in normal_indices(m):
            sq = mom[0, a.a1 + 1, a.a2, a.a3] + mom[0, a.a1, a.a2 + 1, a.a3] + mom[0, a.a1, a.a2, a.a3 + 1]
            acc += weight(a) * math.sqrt(vol * sq) * ks ** (m + 1)
        terms.append(acc * _gevrey_factor(m, tau, s))
    return terms


def normal_indices(m: int):
    """Multi-indices of order ``m`` with a nonzero normal component."""
    return (a for a in multi_indices(m) if a.a3 != 0)


def slab_pressure(u: SpectralField) -> SpectralField:
    """Neumann pressure of a slip-compatible velocity, on an alias-free grid."""
    w = u.compact(6)
    return solve(pressure_source(w)).pressure


def pressure_probe(u: SpectralField, tau: float, s: float = 1.0, m_max: int = 15, orders=None, p: SpectralField | None = None):
    """Pressure-estimate report; ``p`` defaults to the Neumann pressure of ``u``."""
    if u.geometry != "slab":
        raise ValueError("pressure probe runs on the slab")
    top = m_max if orders is None else max(orders)
    if p is None:
        p = slab_pressure(u) if np.any(u.coeffs) else None
    terms = [0.0] * (top - 2) if p is None else pressure_terms(p, top, tau, s)
    sup = _sup_table(u.compact(2))
    reports = []
    for mm in ([m_max] if orders is None else orders):
        table = seminorm_table(u, mm, s)
        reports.append(_report("pressure", terms[: mm - 2], mm, tau, s, table, sup, True))
    return reports[0] if orders is None else reports


def probe_family(n: int = 64, count: int = 10, band: int = 3, tau0: float = 0.5, slab: bool = False, seed: int = 0):
    """Seeded family of band-limited analytic velocities on ``n^3`` grids."""
    from .fields import random_slip_field, random_solenoidal_torus

    rng = np.random.default_rng(seed)
    seeds = rng.integers(0, 2**31, size=count)
    if slab:
        return [random_slip_field(n, band=band, tau=tau0, seed=int(sd)) for sd in seeds]
    return [random_solenoidal_torus(n, band=band, tau=tau0, seed=int(sd)) for sd in seeds]
