"""Radius-of-analyticity bookkeeping along a flow trajectory.

Given samples of ``||grad u||_inf`` and ``||u||_{H^r}`` this module forms

* ``G(t) = exp(C int_0^t ||grad u||_inf)`` (stored as ``log G``),
* ``M(t) = ||u0||_X + C_tau0 int_0^t ||u||_{H^r}^2``,
* the radius ODE ``tau' = -C tau ||grad u|| - C tau^(3/2) (C'_tau0 ||u||_{H^r} + M)``,
* the closed-form candidate ``G^(-1/2) (tau0^(-1/2) + C int (C' Hr + M) / G)^(-1/2)``,
* the lower bound ``G^(-1/2) / (C0 (1 + t))``.
"""
from __future__ import annotations

import bisect
import csv
import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy.integrate import cumulative_trapezoid

CSV_COLUMNS = ("t", "grad_sup", "Hr", "G", "M", "tau_ode", "tau_paper", "tau_lower", "tau_measured", "cond2_residual")


@dataclass(frozen=True)
class RadiusParams:
    C: float = 1.0
    s: float = 1.0
    r: float = 5.0
    tau0: float = 1.0
    u0_Hr: float = 0.0
    u0_X: float = 0.0

    def __post_init__(self):
        if self.C <= 0 or self.tau0 <= 0:
            raise ValueError("C and tau0 must be positive")
        if self.r <= 4.5:
            raise ValueError("Sobolev index r must exceed 9/2")
        if self.s < 1:
            raise ValueError("Gevrey index s must be >= 1")
        if self.u0_Hr < 0 or self.u0_X < 0:
            raise ValueError("initial norms must be non-negative")

    @property
    def C_tau0(self) -> float:
        return 1.0 + self.tau0**2

    @property
    def C_tau0_prime(self) -> float:
        return self.tau0**0.5 + self.tau0**1.5


def _empty():
    return np.zeros(0)


@dataclass(frozen=True)
class RadiusTrajectory:
    t: np.ndarray = field(default_factory=_empty)
    grad_sup: np.ndarray = field(default_factory=_empty)
    Hr: np.ndarray = field(default_factory=_empty)
    log_G: np.ndarray = field(default_factory=_empty)
    M: np.ndarray = field(default_factory=_empty)
    tau_measured: np.ndarray | None = None
    tau_ode: np.ndarray | None = None
    tau_paper: np.ndarray | None = None
    tau_lower: np.ndarray | None = None
    cond2_residual: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.t)

    @property
    def G(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            return np.exp(self.log_G)

    def write_csv(self, path) -> None:
        n = len(self)
        cols = {
            "t": self.t,
            "grad_sup": self.grad_sup,
            "Hr": self.Hr,
            "G": self.G,
            "M": self.M,
            "tau_ode": self.tau_ode,
            "tau_paper": self.tau_paper,
            "tau_lower": self.tau_lower,
            "tau_measured": self.tau_measured,
            "cond2_residual": self.cond2_residual,
        }
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_COLUMNS)
            for i in range(n):
                w.writerow([_cell(cols[c], i) for c in CSV_COLUMNS])


def _cell(col, i) -> str:
    if col is None or np.isnan(col[i]):
        return ""
    return repr(float(col[i]))


def read_samples(path):
    """Columns of a diagnostics or trajectory CSV as float arrays (blank -> nan)."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValueError(f"{path}: no samples")
    return {k: np.array([float(r[k]) if r[k] not in ("", None) else math.nan for r in rows]) for k in rows[0]}


# -- G and M ------------------------------------------------------------------


def _check_times(t: np.ndarray) -> None:
    if t.size and np.any(np.diff(t) <= 0):
        raise ValueError("sample times must be strictly increasing")


def build_trajectory(t, grad_sup, Hr, params: RadiusParams, tau_measured=None) -> RadiusTrajectory:
    """``G`` and ``M`` by trapezoidal quadrature over the given samples."""
    t = np.asarray(t, dtype=float)
    grad_sup = np.asarray(grad_sup, dtype=float)
    Hr = np.asarray(Hr, dtype=float)
    _check_times(t)
    if t.size == 0:
        return RadiusTrajectory()
    log_G = params.C * cumulative_trapezoid(grad_sup, t, initial=0.0)
    M = params.u0_X + params.C_tau0 * cumulative_trapezoid(Hr**2, t, initial=0.0)
    tm = None if tau_measured is None else np.asarray(tau_measured, dtype=float)
    return RadiusTrajectory(t, grad_sup, Hr, log_G, M, tm)


def accumulate_G(traj: RadiusTrajectory, sample, params: RadiusParams) -> RadiusTrajectory:
    """Append one ``(t, grad_sup, Hr[, tau_measured])`` sample, extending ``G`` and ``M``."""
    t, g, h = (float(x) for x in sample[:3])
    tm = float(sample[3]) if len(sample) > 3 and sample[3] is not None else math.nan
    if len(traj) == 0:
        lg, M = 0.0, params.u0_X
    else:
        t_prev = traj.t[-1]
        if t <= t_prev:
            raise ValueError(f"sample time {t} does not follow {t_prev}")
        dt = t - t_prev
        lg = traj.log_G[-1] + params.C * 0.5 * dt * (traj.grad_sup[-1] + g)
        M = traj.M[-1] + params.C_tau0 * 0.5 * dt * (traj.Hr[-1] ** 2 + h**2)
    prev_tm = traj.tau_measured if traj.tau_measured is not None else np.full(len(traj), math.nan)
    return replace(
        traj,
        t=np.append(traj.t, t),
        grad_sup=np.append(traj.grad_sup, g),
        Hr=np.append(traj.Hr, h),
        log_G=np.append(traj.log_G, lg),
        M=np.append(traj.M, M),
        tau_measured=np.append(prev_tm, tm),
        tau_ode=None,
        tau_paper=None,
        tau_lower=None,
        cond2_residual=None,
    )


# -- radius ODE ---------------------------------------------------------------


def _as_function(t: np.ndarray, f) -> Callable[[float], float]:
    if callable(f):
        return f
    xs = t.tolist()
    ys = np.broadcast_to(np.asarray(f, dtype=float), t.shape).tolist()
    last = len(xs) - 1

    # scalar linear interpolation; np.interp costs far more per call here
    def interp(s: float) -> float:
        i = min(max(bisect.bisect_right(xs, s) - 1, 0), last - 1) if last else 0
        if not last:
            return ys[0]
        w = (s - xs[i]) / (xs[i + 1] - xs[i])
        return ys[i] + w * (ys[i + 1] - ys[i])

    return interp


def integrate_tau_ode(t, a, b, tau0: float, max_increment: float = 0.02) -> np.ndarray:
    """RK4 for ``tau' = -a(t) tau - b(t) tau^(3/2)`` reported at the times ``t``.

    ``a`` and ``b`` are callables or arrays sampled at ``t`` (linearly
    interpolated). The state is ``l = log tau``, so
    ``l' = -a - b exp(l/2)`` and positivity holds by construction. Each sample
    interval is cut into adaptive substeps with ``h (|a| + |b| tau^(1/2)) <=
    max_increment`` evaluated at both ends of the substep.
    """
    t = np.asarray(t, dtype=float)
    _check_times(t)
    if tau0 <= 0:
        raise ValueError("tau0 must be positive")
    fa, fb = _as_function(t, a), _as_function(t, b)

    def rhs(s, l):
        return -fa(s) - fb(s) * math.exp(0.5 * l)

    def rate(s, l):
        return abs(fa(s)) + abs(fb(s)) * math.exp(0.5 * l)

    out = np.empty_like(t)
    l = math.log(tau0)
    out[0] = tau0
    for i in range(1, len(t)):
        s, t1 = t[i - 1], t[i]
        while s < t1:
            h = min(t1 - s, max_increment / max(rate(s, l), 1e-300))
            # the coefficients may grow across the substep
            while h * rate(s + h, l) > max_increment and h > 1e-12 * (t1 - t[i - 1]):
                h *= 0.5
            if t1 - s - h < 1e-12 * (t1 - t[i - 1]):
                h = t1 - s
            k1 = rhs(s, l)
            k2 = rhs(s + 0.5 * h, l + 0.5 * h * k1)
            k3 = rhs(s + 0.5 * h, l + 0.5 * h * k2)
            k4 = rhs(s + h, l + h * k3)
            l_new = l + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
            if not math.isfinite(l_new):
                raise FloatingPointError(f"radius ODE step at t={s:.6g} left the finite range")
            l, s = l_new, (t1 if h == t1 - s else s + h)
        out[i] = math.exp(l)
    return out


def ode_coefficients(traj: RadiusTrajectory, params: RadiusParams):
    a = params.C * traj.grad_sup
    b = params.C * (params.C_tau0_prime * traj.Hr + traj.M)
    return a, b


def tau_ode(traj: RadiusTrajectory, params: RadiusParams) -> np.ndarray:
    a, b = ode_coefficients(traj, params)
    return integrate_tau_ode(traj.t, a, b, params.tau0)


def bernoulli_tau(t, a: float, b: float, tau0: float) -> np.ndarray:
    """Closed form for constant ``a, b`` via ``w = tau^(-1/2)``."""
    t = np.asarray(t, dtype=float)
    w0 = tau0**-0.5
    if a == 0:
        w = w0 + 0.5 * b * t
    else:
        w = (w0 + b / a) * np.exp(0.5 * a * t) - b / a
    return w**-2.0


def tau_paper_formula(traj: RadiusTrajectory, params: RadiusParams) -> np.ndarray:
    """Direct evaluation of the closed-form candidate (not a solution of the ODE in general)."""
    C = params.C
    integrand = (params.C_tau0_prime * traj.Hr + traj.M) * np.exp(-traj.log_G)
    inner = params.tau0**-0.5 + C * cumulative_trapezoid(integrand, traj.t, initial=0.0)
    return np.exp(-0.5 * traj.log_G) * inner**-0.5


def C0_constant(params: RadiusParams, horizon: float) -> float:
    """Smallest ``C0`` with ``a + b t + c t^2 <= C0 (1+t)^2`` on ``[0, horizon]``.

    ``a = tau0^(-1/2)``, ``b = C (C' ||u0||_Hr + ||u0||_X)`` and
    ``c = C C_tau0 ||u0||_Hr^2 / 2`` come from integrating the initial-data
    bound in time.
    """
    a = params.tau0**-0.5
    b = params.C * (params.C_tau0_prime * params.u0_Hr + params.u0_X)
    c = 0.5 * params.C * params.C_tau0 * params.u0_Hr**2

    def f(t):
        return (a + b * t + c * t * t) / (1 + t) ** 2

    cands = [0.0, float(horizon)]
    if 2 * c != b:
        ts = (2 * a - b) / (2 * c - b)
        if 0 < ts < horizon:
            cands.append(ts)
    return max(f(t) for t in cands)


def lower_bound(traj: RadiusTrajectory, params: RadiusParams, horizon: float | None = None) -> np.ndarray:
    """``G^(-1/2) / (C0 (1+t))`` with ``C0`` fitted on ``[0, horizon]``.

    Time is measured from the first sample, which carries the initial data.
    """
    elapsed = traj.t - traj.t[0]
    T = elapsed[-1] if horizon is None else horizon
    C0 = C0_constant(params, T)
    return np.exp(-0.5 * traj.log_G) / (C0 * (1.0 + elapsed))


def condition2_residuals(tau, traj: RadiusTrajectory, params: RadiusParams) -> np.ndarray:
    """Per-sample ``tau' + C tau ||grad u|| + C tau^(3/2) (C' Hr + M)``; ``tau'`` by second-order differences."""
    tau = np.asarray(tau, dtype=float)
    if len(tau) < 3:
        raise ValueError("condition check needs at least 3 samples")
    dtau = np.gradient(tau, traj.t, edge_order=2)
    a, b = ode_coefficients(traj, params)
    return dtau + a * tau + b * tau**1.5


def check_condition2(tau, traj: RadiusTrajectory, params: RadiusParams) -> float:
    """Largest residual; ``<= 0`` means the sufficient condition holds at every sample."""
    return float(np.max(condition2_residuals(tau, traj, params)))


def track(traj: RadiusTrajectory, params: RadiusParams, horizon: float | None = None) -> RadiusTrajectory:
    """Fill the ODE, closed-form and lower-bound columns and the ODE residuals."""
    to = tau_ode(traj, params)
    res = condition2_residuals(to, traj, params) if len(traj) >= 3 else np.full(len(traj), math.nan)
    return replace(
        traj,
        tau_ode=to,
        tau_paper=tau_paper_formula(traj, params),
        tau_lower=lower_bound(traj, params, horizon),
        cond2_residual=res,
    )
