import math

import mpmath
import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from eulerradius import flows
from eulerradius.fields import trig_field

PI = math.pi


def test_taylor_green_velocity():
    st_ = flows.taylor_green(16)
    u = st_.velocity().to_grid()
    x = np.arange(16) * 2 * PI / 16
    x1, x2 = np.meshgrid(x, x, indexing="ij")
    np.testing.assert_allclose(u[0], -np.cos(x1) * np.sin(x2), atol=1e-14)
    np.testing.assert_allclose(u[1], np.sin(x1) * np.cos(x2), atol=1e-14)


def test_taylor_green_invariants_closed_form():
    s = flows.taylor_green(16)
    assert flows.energy(s) == pytest.approx(PI**2, rel=1e-14)
    assert flows.enstrophy(s) == pytest.approx(2 * PI**2, rel=1e-14)
    assert flows.vorticity_lp(s, 2) == pytest.approx(s.vorticity.l2_norm(), rel=1e-12)
    assert flows.grad_sup_norm(s) == pytest.approx(1.0, abs=1e-14)


def test_taylor_green_is_steady():
    s0 = flows.taylor_green(32)
    s = s0
    for _ in range(100):
        s = flows.euler_step(s, 0.01)
    err = (s.vorticity - s0.vorticity).l2_norm() / s0.vorticity.l2_norm()
    assert err < 1e-6
    assert s.time == pytest.approx(1.0)


def test_random_analytic_conserves_invariants():
    s0 = flows.random_analytic(64, seed=1)
    assert s0.vorticity.l2_norm() / math.sqrt(s0.vorticity.volume) == pytest.approx(1.0, rel=1e-14)
    e0, z0 = flows.energy(s0), flows.enstrophy(s0)
    snaps = list(flows.run_euler(s0, 0.5, 0.25, dt=0.01))
    assert [round(x.time, 12) for x in snaps] == [0.0, 0.25, 0.5]
    s = snaps[-1]
    assert abs(flows.energy(s) - e0) / e0 / 0.5 < 1e-8
    assert abs(flows.enstrophy(s) - z0) / z0 / 0.5 < 1e-8


def test_default_substeps_respect_cfl():
    s0 = flows.random_analytic(32, seed=2)
    snaps = list(flows.run_euler(s0, 0.2, 0.1))
    assert len(snaps) == 3


def test_cfl_violation_raises():
    s = flows.random_analytic(32, seed=0)
    with pytest.raises(ValueError, match="CFL"):
        flows.euler_step(s, 10 * flows.cfl_dt(s))


def test_velocity_needs_2d_scalar():
    with pytest.raises(ValueError):
        flows.velocity_from_vorticity(trig_field([(1.0, (1, 0, 0), "cos")], (4, 4, 4)))


# -- shear flow --------------------------------------------------------------------------


def test_shear_flow_solves_euler_symbolically():
    x1, x2, x3, t, A = sp.symbols("x1 x2 x3 t A")
    u = [A * sp.sin(x2), sp.Integer(0), sp.sin(x1 - t * A * sp.sin(x2))]
    x = (x1, x2, x3)
    assert sp.simplify(sum(sp.diff(u[i], x[i]) for i in range(3))) == 0
    for i in range(3):
        acc = sp.diff(u[i], t) + sum(u[j] * sp.diff(u[i], x[j]) for j in range(3))
        assert sp.simplify(acc) == 0


def test_shear_snapshot_matches_pointwise_velocity():
    flow = flows.ShearFlow()
    for t in (0.0, 1.0, 7.5):
        u = flows.shear_snapshot(flow, t)
        g = u.to_grid()
        axes = [np.arange(n) * 2 * PI / n for n in u.shape]
        X = np.meshgrid(*axes, indexing="ij")
        np.testing.assert_allclose(g, flow.velocity(*X, t), atol=1e-13)


def test_shear_bessel_coefficients():
    u = flows.shear_snapshot(flows.ShearFlow(), 1.0)
    c = u.coeffs[2]
    n2 = u.shape[1]
    # u3 = sin(x1 - sin x2) = Im(e^{ix1} sum_n J_n(1) e^{-i n x2})
    for n in range(8):
        assert abs(c[1, (-n) % n2, 0]) * 2 == pytest.approx(abs(float(mpmath.besselj(n, 1))), abs=1e-15)
    assert abs(c[1, 0, 0]) * 2 == pytest.approx(0.7652, abs=1e-4)
    assert abs(c[1, -1, 0]) * 2 == pytest.approx(0.4401, abs=1e-4)


def test_shear_resolution_error():
    with pytest.raises(flows.ResolutionError):
        flows.shear_snapshot(flows.ShearFlow(), 20.0, K_max=10)


@settings(max_examples=30)
@given(st.floats(0.1, 200.0))
def test_bessel_cutoff_property(z):
    K = flows.bessel_cutoff(z)
    assert K > z
    assert abs(float(mpmath.besselj(K, z))) < flows.TAIL_TOL


def test_shear_gradient_sup():
    flow = flows.ShearFlow()
    assert flows.grad_sup_norm(flow, 0.0) == pytest.approx(1.0, abs=1e-14)
    assert flows.grad_sup_norm(flow, 10.0) == pytest.approx(10.0, abs=1e-12)
    # grid evaluation of the snapshot agrees with the closed-form gradient
    u = flows.shear_snapshot(flow, 3.0)
    assert flows.grad_sup_norm(u) == pytest.approx(flows.grad_sup_norm(flow, 3.0), rel=1e-12)


def test_shear_radius_values():
    flow = flows.ShearFlow()
    assert flows.shear_radius_exact(flow, 1.0) == pytest.approx(math.asinh(1.0), rel=1e-15)
    assert flows.shear_radius_exact(flow, 1.0) == pytest.approx(0.8814, abs=1e-4)
    assert flows.shear_radius_exact(flow, 1e4) == pytest.approx(1e-4, rel=1e-8)
    assert flows.shear_radius_exact(flow, 0.0) == math.inf
    with pytest.raises(ValueError):
        flows.shear_radius_exact(flow, 1.0, M0=1.0)


def test_shear_radius_is_strip_width():
    # on |Im x2| <= r the phase x1 - t sin(x2) reaches imaginary part t sinh r
    flow, t, M0 = flows.ShearFlow(), 2.0, math.e
    r = flows.shear_radius_exact(flow, t, M0)
    assert t * math.sinh(r) == pytest.approx(math.log(M0), rel=1e-14)
