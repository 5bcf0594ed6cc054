"""Implied constants of the commutator and pressure estimates at finite truncation.

The left sides are truncated Gevrey-weighted double sums; the right sides are
products of low-order semi-norms. Their ratio should settle as the truncation
grows, and it must not change when the field is rescaled.

    python demos/probe_constants.py
"""

from eulerradius import probes

tau = 0.3
u = probes.probe_family(n=32, count=1, band=3, seed=0)[0]
w = probes.probe_family(n=32, count=1, band=3, slab=True, seed=0)[0]

for name, fn, f in (("commutator", probes.commutator_probe, u), ("pressure", probes.pressure_probe, w)):
    reps = fn(f, tau, orders=(6, 10, 14))
    print(name)
    for r in reps:
        print(f"  m_max={r.m_max:2d} lhs={r.lhs:.4e} implied={r.implied_constant:.6e} tail={r.tail_ratio:.2e}")
    big = fn(f.scaled(10.0), tau, m_max=10)
    print(f"  u -> 10u at m_max=10: implied={big.implied_constant:.6e}")
