"""Test flows: a 2D periodic pseudo-spectral Euler solver and the exact shear flow.

The shear flow ``u = (A sin(kf x2), 0, sin(kg (x1 - t A sin(kf x2))))`` solves
the 3D Euler equations with zero pressure. Its third component has the
Jacobi-Anger expansion in ``x2`` with Bessel coefficients ``J_n(kg t A)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterator

import numpy as np
from scipy.special import jv

from .fields import SpectralField, random_field, trig_field

TAIL_TOL = 1e-14
CFL = 0.5


class ResolutionError(ValueError):
    """Requested grid cannot hold the field to the required tail tolerance."""


# -- 2D Euler -----------------------------------------------------------------


@dataclass(frozen=True)
class EulerState2D:
    vorticity: SpectralField
    time: float = 0.0
    dealias: bool = True
    meta: dict = field(default_factory=dict)

    @property
    def resolution(self) -> int:
        return self.vorticity.shape[0]

    def velocity(self) -> SpectralField:
        return velocity_from_vorticity(self.vorticity)


def _inverse_laplacian(w: SpectralField) -> np.ndarray:
    k2 = sum(k**2 for k in w.kgrid())
    inv = np.zeros_like(k2)
    nz = k2 > 0
    inv[nz] = 1.0 / k2[nz]
    return inv


def velocity_from_vorticity(w: SpectralField) -> SpectralField:
    """``u = (d2 psi, -d1 psi)`` with ``-Lap psi = omega``."""
    if w.dim != 2 or w.ncomp != 1:
        raise ValueError("2D scalar vorticity expected")
    psi = w.coeffs[0] * _inverse_laplacian(w)
    k1, k2 = w.kgrid()
    return w.with_coeffs(np.stack([1j * k2 * psi, -1j * k1 * psi]))


def _advection_rhs(wh: np.ndarray, proto: SpectralField, mask: np.ndarray | None) -> np.ndarray:
    k1, k2 = proto.kgrid()
    psi = wh * _inverse_laplacian(proto)
    n = wh.size
    u1 = np.fft.ifft2(1j * k2 * psi).real * n
    u2 = np.fft.ifft2(-1j * k1 * psi).real * n
    w1 = np.fft.ifft2(1j * k1 * wh).real * n
    w2 = np.fft.ifft2(1j * k2 * wh).real * n
    adv = np.fft.fft2(u1 * w1 + u2 * w2) / n
    if mask is not None:
        adv = adv * mask
    return -adv


def max_velocity(state: EulerState2D) -> float:
    u = state.velocity().to_grid()
    return float(np.max(np.sqrt(np.sum(u**2, axis=0))))


def cfl_dt(state: EulerState2D, cfl: float = CFL) -> float:
    umax = max_velocity(state)
    dx = 2.0 * np.pi / state.resolution
    return math.inf if umax == 0 else cfl * dx / umax


def euler_step(state: EulerState2D, dt: float, cfl: float = CFL) -> EulerState2D:
    """One classical RK4 step of ``d_t omega + u . grad omega = 0``."""
    limit = cfl_dt(state, cfl)
    if dt > limit * (1 + 1e-12):
        raise ValueError(f"dt={dt:.4g} violates the CFL bound {limit:.4g}")
    w = state.vorticity
    mask = w.dealias_mask() if state.dealias else None
    c = w.coeffs[0] * (mask if mask is not None else 1.0)
    k1 = _advection_rhs(c, w, mask)
    k2 = _advection_rhs(c + 0.5 * dt * k1, w, mask)
    k3 = _advection_rhs(c + 0.5 * dt * k2, w, mask)
    k4 = _advection_rhs(c + dt * k3, w, mask)
    c = c + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    t = state.time + dt
    return replace(state, vorticity=replace(w.with_coeffs(c[None]), time=t), time=t)


def run_euler(state: EulerState2D, t_final: float, snap_every: float, dt: float | None = None, cfl: float = CFL) -> Iterator[EulerState2D]:
    """Yield the state at ``t = 0, snap_every, 2 snap_every, ... <= t_final``.

    Each snapshot interval is split into equal substeps no larger than ``dt``
    (default: 0.9 times the CFL step of the interval's initial state, leaving
    room for the velocity to grow within the interval).
    """
    n_snaps = int(round(t_final / snap_every))
    yield state
    for i in range(n_snaps):
        target = (i + 1) * snap_every
        span = target - state.time
        h = dt if dt is not None else 0.9 * cfl_dt(state, cfl)
        nsub = max(1, math.ceil(span / h - 1e-9))
        for _ in range(nsub):
            state = euler_step(state, span / nsub, cfl)
        state = replace(state, time=target, vorticity=replace(state.vorticity, time=target))
        yield state


def taylor_green(n: int) -> EulerState2D:
    """Steady ``omega = 2 cos x1 cos x2`` (streamfunction ``cos x1 cos x2``)."""
    w = trig_field([(1.0, (1, 1), "cos"), (1.0, (1, -1), "cos")], (n, n))
    return EulerState2D(w, meta={"init": "taylor-green"})


def random_analytic(n: int, seed: int = 0, tau0: float = 0.5) -> EulerState2D:
    """Gaussian modal vorticity with envelope ``exp(-tau0 |k|)``, unit rms."""
    w = random_field((n, n), tau=tau0, seed=seed)
    rms = w.l2_norm() / math.sqrt(w.volume)
    w = w.scaled(1.0 / rms)
    return EulerState2D(w, meta={"init": f"random-analytic:{seed}", "tau0": tau0})


def energy(state: EulerState2D) -> float:
    return 0.5 * state.velocity().euclidean_l2_norm() ** 2


def enstrophy(state: EulerState2D) -> float:
    return 0.5 * state.vorticity.l2_norm() ** 2


def vorticity_lp(state: EulerState2D, p: float) -> float:
    g = state.vorticity.to_grid(oversample=2)
    cell = state.vorticity.volume / g[0].size
    return float((np.sum(np.abs(g) ** p) * cell) ** (1.0 / p))


def grad_sup_from_field(u: SpectralField, oversample: int = 2) -> float:
    """Max over an oversampled grid of ``max_ij |d_j u_i|``."""
    grad = u.gradient_coeffs()
    shape = tuple(n * oversample for n in u.shape)
    g = u.with_coeffs(grad.reshape((-1,) + u.shape)).padded(shape).to_grid()
    return float(np.max(np.abs(g)))


# -- shear flow ---------------------------------------------------------------


@dataclass(frozen=True)
class ShearFlow:
    amplitude: float = 1.0
    kf: int = 1
    kg: int = 1

    def velocity(self, x1, x2, x3, t):
        f = self.amplitude * np.sin(self.kf * x2)
        return np.stack(np.broadcast_arrays(f, 0.0 * x1, np.sin(self.kg * (x1 - t * f))))

    def gradient(self, x1, x2, t):
        """Nonzero gradient entries ``(d2 u1, d1 u3, d2 u3)``."""
        A, kf, kg = self.amplitude, self.kf, self.kg
        c = np.cos(kg * (x1 - t * A * np.sin(kf * x2)))
        return (A * kf * np.cos(kf * x2) + 0 * x1, kg * c, -kg * t * A * kf * np.cos(kf * x2) * c)


def bessel_cutoff(z: float, tol: float = TAIL_TOL) -> int:
    """Smallest ``K > |z|`` with ``|J_K(z)| < tol`` (the tail decays monotonically beyond)."""
    K = int(math.ceil(abs(z))) + 1
    while abs(jv(K, z)) >= tol:
        K += 1
    return K


def shear_snapshot(flow: ShearFlow, t: float, K_max: int | None = None) -> SpectralField:
    """Exact modal coefficients of the shear flow at time ``t`` on ``T^3``."""
    z = flow.kg * t * flow.amplitude
    if K_max is None:
        K_max = bessel_cutoff(z) if z else 0
    elif z and abs(jv(K_max, z)) >= TAIL_TOL:
        raise ResolutionError(f"|J_{K_max}({z:g})| = {abs(jv(K_max, z)):.2e} exceeds {TAIL_TOL:g}")
    n1 = max(4, 2 * flow.kg + 2)
    n2 = max(4, 2 * K_max * flow.kf + 2)
    n2 += n2 % 2
    shape = (n1, n2, 4)
    u1 = trig_field([(flow.amplitude, (0, flow.kf, 0), "sin")], shape).coeffs[0]
    u3 = np.zeros(shape, dtype=complex)
    for n in range(-K_max, K_max + 1):
        j = jv(n, z) if z else float(n == 0)
        if j == 0:
            continue
        u3[flow.kg % n1, (-n * flow.kf) % n2, 0] += j / 2j
        u3[-flow.kg % n1, (n * flow.kf) % n2, 0] -= j / 2j
    c = np.stack([u1, np.zeros(shape, dtype=complex), u3])
    return SpectralField(c, time=t, meta={"flow": "shear", "K_max": K_max})


def shear_radius_exact(flow: ShearFlow, t: float, M0: float = math.e) -> float:
    """Strip half-width on which ``|u| <= M0``: ``asinh(log M0 / (t A kg)) / kf``."""
    if M0 <= 1:
        raise ValueError("M0 must exceed 1")
    if t <= 0:
        return math.inf
    return math.asinh(math.log(M0) / (t * flow.amplitude * flow.kg)) / flow.kf


def shear_grad_sup(flow: ShearFlow, t: float, n: int = 256) -> float:
    x = np.arange(n) * (2 * np.pi / n)
    x1, x2 = np.meshgrid(x, x, indexing="ij")
    return float(max(np.max(np.abs(e)) for e in flow.gradient(x1, x2, t)))


def grad_sup_norm(obj, t: float | None = None) -> float:
    """``||grad u||_inf`` (max-entry convention) for an Euler state, a field or the shear flow."""
    if isinstance(obj, ShearFlow):
        return shear_grad_sup(obj, 0.0 if t is None else t)
    if isinstance(obj, EulerState2D):
        return grad_sup_from_field(obj.velocity())
    return grad_sup_from_field(obj)
