"""Pressure in a slab with Neumann faces, and the normal-derivative recursion.

We draw a random band-limited source, solve -Laplace p = v with d3 p = 0 on the
faces, then rebuild pure normal derivatives of p from tangential data and the
source, comparing with direct spectral differentiation.

    python demos/neumann_pressure.py
"""

import numpy as np

from eulerradius import multiindex as mi
from eulerradius import neumann as nm
from eulerradius.fields import random_field, slab_shape

v = random_field(slab_shape(32), 1, "slab", 2 * np.pi, (1,), band=6, tau=0.3, seed=1)
sol = nm.solve(v)
p = sol.pressure
print(f"||D^2 p|| / ||v|| = {sol.h2_constant:.4f}")

for alpha in [(0, 0, 1), (1, 2, 3), (0, 0, 6), (2, 2, 4)]:
    err = nm.relative_error(nm.d3_recursion(p, v, alpha), nm.direct_d3(p, alpha))
    print(f"alpha={alpha}: recursion vs direct relative error {err:.1e}")

print("\nweighted estimate ratio, max over multi-indices of each order:")
for m in range(1, 8):
    r = max(
        nm.estimate_probe_53(p, v, a, w).ratio
        for a in mi.multi_indices(m)
        for w, (_, _, need) in nm.WHICH.items()
        if a.a3 >= need
    )
    print(f"  |alpha|={m}: {r:.4f}")

top = max(max(nm.remark52_probe(p, v, (a1, m - a1))) for m in range(5) for a1 in range(m + 1))
print(f"\ntangential multiplier ratio max: {top:.4f} (bounded by 1/2)")
