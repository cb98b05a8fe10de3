"""Lower bounds on entanglement cost for the standard function families.

Run: python3 demos/bound_table.py
"""
from fractions import Fraction

from nlqcbounds.boolfn import make_family, negate, support_pattern
from nlqcbounds.cli import TABLE_HEAD, row_cells, bound_table, render_text
from nlqcbounds.patternrank import triangular_bound

# the whole table, n = 1..4
rows = bound_table(ns=(1, 2, 3, 4))
print(render_text(TABLE_HEAD, [row_cells(r) for r in rows]))

# every bound is a quarter-log of a pattern rank; EQ is full rank by its diagonal
for n in (1, 2, 3, 4):
    r = triangular_bound(support_pattern(make_family("EQ", n))).lower_bound
    print(f"EQ n={n}: rank >= {r}, FR0 >= {Fraction(n, 4)}")

# GT's negation x < y is strictly upper triangular, so its rank is one short
for n in (1, 2, 3, 4):
    r = triangular_bound(support_pattern(negate(make_family("GT", n)))).lower_bound
    print(f"NOT GT n={n}: rank certificate {r} (2^n = {2 ** n})")

# f-BB84 loses a quarter ebit against routing
(eq5,) = bound_table(("EQ",), (5,))
print("EQ n=5 fBB84 bound:", eq5.fbb84)
