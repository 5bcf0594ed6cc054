"""Binomial-weighted Sobolev semi-norms, Gevrey norms and radius estimates.

The semi-norm of order ``m`` is ``|v|_m = sum_{|alpha|=m} M_alpha ||d^alpha v||``
with ``M_alpha = C(a1 + a2, a1)``. For vector fields every norm in this module
is taken componentwise and the components are summed (recorded as
``meta["vector_norm"]``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .fields import SpectralField
from .multiindex import MultiIndex, multi_indices, weight

VECTOR_NORM_CONVENTION = "componentwise-sum"
DEFAULT_M_MAX = 24
FLOOR_REL = 1e-13


def _kscale(v: SpectralField) -> float:
    kmax = max(float(np.max(np.abs(v.wavenumbers(ax)))) for ax in range(v.dim))
    return max(kmax, 1.0)


def _scaled_powers(v: SpectralField, order: int) -> list[np.ndarray]:
    """Per axis ``(order+1, n)`` table of ``(k/kscale)^(2a)``."""
    ks = _kscale(v)
    out = []
    for ax in range(v.dim):
        q = (v.wavenumbers(ax) / ks) ** 2
        out.append(q[None, :] ** np.arange(order + 1)[:, None])
    return out


def power_moments(v: SpectralField, order: int, power: np.ndarray | None = None):
    """Scaled moments ``mom[c, a1, a2, a3] = sum_k prod_j (k_j/ks)^(2 a_j) |c_k|^2``.

    Returns ``(mom, ks)``; the true moment is ``mom * ks**(2|alpha|)``. 2D
    fields get zero moments for ``a3 > 0`` (no x3 dependence).
    """
    p = np.abs(v.coeffs) ** 2 if power is None else power
    V = _scaled_powers(v, order)
    mom = p
    for ax in range(v.dim):
        # contract the leading spatial axis; the new power axis goes last
        mom = np.tensordot(mom, V[ax], axes=([1], [1]))
    if v.dim == 2:
        full = np.zeros(mom.shape + (order + 1,))
        full[..., 0] = mom
        mom = full
    return mom, _kscale(v)


def log_derivative_l2_norms(v: SpectralField, alpha) -> np.ndarray:
    """Per-component ``log ||d^alpha v_c||`` (``-inf`` for zero)."""
    alpha = MultiIndex.of(alpha)
    if v.dim == 2 and alpha.a3 > 0:
        return np.full(v.ncomp, -np.inf)
    ks = _kscale(v)
    w = np.ones((1,) * v.dim)
    for ax, k in enumerate(v.kgrid()):
        if alpha[ax]:
            w = w * (k / ks) ** (2 * alpha[ax])
    axes = tuple(range(1, v.coeffs.ndim))
    s = np.sum(w[None] * np.abs(v.coeffs) ** 2, axis=axes)
    with np.errstate(divide="ignore"):
        return 0.5 * (np.log(v.volume) + np.log(s)) + alpha.order * math.log(ks)


def derivative_l2_norm(v: SpectralField, alpha, log: bool = False) -> float:
    """``||d^alpha v||_{L^2}`` by Parseval (componentwise sum for vectors).

    With ``log=True`` the natural log is returned, which never overflows.
    """
    logs = log_derivative_l2_norms(v, alpha)
    finite = logs[np.isfinite(logs)]
    if finite.size == 0:
        return -math.inf if log else 0.0
    top = finite.max()
    total_log = top + math.log(float(np.sum(np.exp(finite - top))))
    if log:
        return total_log
    if total_log > 709.0:
        raise OverflowError(f"||d^{tuple(alpha)} v|| overflows float64; use log=True")
    return math.exp(total_log)


def sobolev_norm(v: SpectralField, r: float = 5.0) -> float:
    """``(vol * sum (1+|k|^2)^r |c_k|^2)^(1/2)``, Euclidean over components."""
    w = (1.0 + v.k_magnitude() ** 2) ** r
    return float(np.sqrt(v.volume * np.sum(w[None] * np.abs(v.coeffs) ** 2)))


@dataclass(frozen=True)
class SeminormTable:
    s: float
    m_max: int
    l2_seminorms: np.ndarray
    sup_seminorms: np.ndarray | None = None
    floor_order: int | None = None
    meta: dict = field(default_factory=dict)

    def __getitem__(self, m: int) -> float:
        return float(self.l2_seminorms[m])

    def sup(self, m: int) -> float:
        if self.sup_seminorms is None or m >= len(self.sup_seminorms):
            raise ValueError(f"sup semi-norm of order {m} was not computed")
        return float(self.sup_seminorms[m])

    @classmethod
    def synthetic(cls, values, s: float = 1.0) -> "SeminormTable":
        values = np.asarray(values, dtype=float)
        return cls(s, len(values) - 1, values)

    def to_csv_rows(self):
        yield ("m", "l2_seminorm", "sup_seminorm")
        for m in range(self.m_max + 1):
            sup = "" if self.sup_seminorms is None or m >= len(self.sup_seminorms) else repr(float(self.sup_seminorms[m]))
            yield (m, repr(float(self.l2_seminorms[m])), sup)


def _seminorms_from_moments(v, mom, ks, m_max):
    out = np.zeros(m_max + 1)
    vol = v.volume
    for m in range(m_max + 1):
        acc = 0.0
        for a in multi_indices(m):
            acc += weight(a) * float(np.sum(np.sqrt(vol * mom[:, a.a1, a.a2, a.a3])))
        out[m] = acc * ks**m
    return out


def sup_derivative_norms(v: SpectralField, alpha, oversample: int = 2) -> float:
    """Grid max of ``|d^alpha v|`` on an oversampled grid, summed over components."""
    g = v.derivative(alpha).to_grid(oversample=oversample)
    axes = tuple(range(1, g.ndim))
    return float(np.sum(np.max(np.abs(g), axis=axes)))


def sup_seminorm(v: SpectralField, m: int, oversample: int = 2) -> float:
    return sum(weight(a) * sup_derivative_norms(v, a, oversample) for a in multi_indices(m) if not (v.dim == 2 and a.a3))


def seminorm_table(
    v: SpectralField,
    m_max: int = DEFAULT_M_MAX,
    s: float = 1.0,
    with_sup: bool | int = False,
    floor_rel: float = FLOOR_REL,
) -> SeminormTable:
    """Semi-norms ``|v|_m`` for ``m = 0..m_max``.

    ``with_sup`` may be ``True`` (all orders) or an int bounding the highest
    sup order computed, since each sup order needs one inverse transform per
    multi-index. ``floor_order`` is the first ``m`` at which modes at the
    rounding floor (``|c_k| <= floor_rel * max|c|``) contribute at least as
    much as the resolved modes.
    """
    if m_max < 0:
        raise ValueError("m_max must be >= 0")
    if s < 1:
        raise ValueError("Gevrey index s must be >= 1")
    amp = np.abs(v.coeffs)
    top = amp.max() if amp.size else 0.0
    p = amp**2
    mom, ks = power_moments(v, m_max, p)
    total = _seminorms_from_moments(v, mom, ks, m_max)
    floor_order = None
    floor_mask = (amp <= floor_rel * top) & (amp > 0)
    if np.any(floor_mask):
        fl = _seminorms_from_moments(v, power_moments(v, m_max, np.where(floor_mask, p, 0.0))[0], ks, m_max)
        resolved = _seminorms_from_moments(v, power_moments(v, m_max, np.where(floor_mask, 0.0, p))[0], ks, m_max)
        hit = np.nonzero(fl >= resolved)[0]
        floor_order = int(hit[0]) if hit.size else None
    sup = None
    if with_sup is not False:
        top_m = m_max if with_sup is True else min(int(with_sup), m_max)
        sup = np.array([sup_seminorm(v, m) for m in range(top_m + 1)])
    meta = {"vector_norm": VECTOR_NORM_CONVENTION, "components": v.ncomp}
    return SeminormTable(float(s), m_max, total, sup, floor_order, meta)


@dataclass(frozen=True)
class GevreyNormResult:
    tau: float
    x_norm: float
    y_norm: float
    tail_ratio: float
    term_ratio: float
    converged: bool


def _log_fact(n: float) -> float:
    return math.lgamma(n + 1.0)


def gevrey_terms(table: SeminormTable, tau: float):
    """Per-order terms of the X and Y series (index ``m`` from 3 on)."""
    s = table.s
    x_terms, y_terms = [], []
    for m in range(3, table.m_max + 1):
        v = float(table.l2_seminorms[m])
        if v == 0.0:
            x_terms.append(0.0)
            y_terms.append(0.0)
            continue
        lx = math.log(v) + (m - 3) * math.log(tau) - s * _log_fact(m - 3)
        x_terms.append(math.exp(lx))
        if m >= 4:
            ly = math.log(v) + math.log(m - 3) + (m - 4) * math.log(tau) - s * _log_fact(m - 3)
            y_terms.append(math.exp(ly))
        else:
            y_terms.append(0.0)
    return x_terms, y_terms


def x_norm(table: SeminormTable, tau: float) -> GevreyNormResult:
    """Truncated ``||v||_{X_tau}`` and ``||v||_{Y_tau}`` with convergence diagnostics.

    ``tail_ratio`` is the last X term over the partial sum; ``term_ratio`` the
    last term over the one before. The result counts as converged when both
    are below one and the table is not floor-dominated at ``m_max``.
    """
    if tau <= 0:
        raise ValueError("tau must be positive")
    xt, yt = gevrey_terms(table, tau)
    X = math.fsum(xt)
    Y = math.fsum(yt)
    last = xt[-1] if xt else 0.0
    tail = last / X if X > 0 else 0.0
    prev = xt[-2] if len(xt) >= 2 else 0.0
    if prev > 0:
        term_ratio = last / prev
    else:
        term_ratio = 0.0 if last == 0 else math.inf
    floor_ok = table.floor_order is None or table.floor_order > table.m_max
    return GevreyNormResult(tau, X, Y, tail, term_ratio, tail < 1 and term_ratio < 1 and floor_ok)


def max_tau_for_budget(table: SeminormTable, M0: float, rtol: float = 1e-13) -> float:
    """Largest ``tau`` with a converged ``||v||_{X_tau} <= M0``.

    Returns ``math.inf`` when the table has no entries beyond order 3, so
    every ``tau`` qualifies.
    """
    if table.m_max >= 3 and M0 <= table[3]:
        raise ValueError(f"budget M0={M0} must exceed |v|_3={table[3]}")
    if table.m_max < 4 or not np.any(table.l2_seminorms[4:]):
        return math.inf

    def ok(t):
        r = x_norm(table, t)
        return r.converged and r.x_norm <= M0

    lo, hi = 0.0, 1.0
    if ok(hi):
        while ok(hi):
            lo, hi = hi, hi * 2.0
            if hi > 1e12:
                return math.inf
    else:
        while not ok(hi / 2.0):
            hi /= 2.0
            if hi < 1e-300:
                return 0.0
        lo = hi / 2.0
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo


@dataclass(frozen=True)
class ShellSpectrum:
    shell: np.ndarray  # integer shell index
    k: np.ndarray  # |k| of the mode realising the shell maximum
    amplitude: np.ndarray  # shell maximum of |c_k| over modes and components


def shell_max_spectrum(v: SpectralField) -> ShellSpectrum:
    amp = np.max(np.abs(v.coeffs), axis=0).ravel()
    kmag = v.k_magnitude().ravel() * np.ones(amp.shape)
    shell = np.rint(kmag).astype(int)
    order = np.lexsort((amp, shell))
    sh_sorted = shell[order]
    last = np.nonzero(np.diff(np.append(sh_sorted, sh_sorted[-1] + 1)))[0]
    pick = order[last]
    return ShellSpectrum(shell[pick], kmag[pick], amp[pick])


def fit_radius(v: SpectralField, fit_window=(1.0, math.inf), floor_rel: float = 1e3 * np.finfo(float).eps) -> float:
    """Exponential decay rate of the shell-max spectrum.

    Least-squares slope of ``log(max_{shell} |c_k|)`` against ``|k|`` over the
    shells with ``fit_window[0] <= shell <= fit_window[1]``; shells below
    ``floor_rel * max|c|`` are dropped. Returns minus the slope.
    """
    spec = shell_max_spectrum(v)
    top = spec.amplitude.max()
    lo, hi = fit_window
    use = (spec.shell >= lo) & (spec.shell <= hi) & (spec.amplitude > floor_rel * top)
    if np.count_nonzero(use) < 3:
        raise ValueError(f"fit window {fit_window} holds {np.count_nonzero(use)} populated shells; need >= 3")
    slope, _ = np.polyfit(spec.k[use], np.log(spec.amplitude[use]), 1)
    return float(-slope)
