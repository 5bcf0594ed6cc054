"""Exact-arithmetic tour of the combinatorial inequalities.

Every ratio below is a Fraction, so "holds" means holds exactly.

    python demos/lemma_tour.py
"""

import random

from eulerradius import multiindex as mi

alpha, beta = mi.MultiIndex(3, 2, 4), mi.MultiIndex(1, 1, 2)
print("M_alpha =", mi.weight(alpha), " C(alpha, beta) =", mi.multi_binom(alpha, beta))
print("choose ratio for", tuple(alpha), tuple(beta), "=", mi.choose_ratio(alpha, beta))

bad = mi.verify_choose_lemma(10)
print(f"choose lemma up to |alpha| = 10: {len(bad)} violations")

rng = random.Random(0)
x, y = mi.random_coefficient_map(3, rng), mi.random_coefficient_map(4, rng)
print("product identity m=7, j=3:", mi.product_identity_sides(7, 3, x, y))

table = mi.star_sum_table(100)
for variant in mi.STAR_VARIANTS:
    s = mi.star_sup(100, variant, table)
    print(f"star ratio sup ({variant}): {s.sup} attained at (b1, b2, m) = {s.argmax}")

for n in (1, 10, 1000):
    b = mi.stirling_bounds(n)
    print(f"Stirling n={n}: {b}")
