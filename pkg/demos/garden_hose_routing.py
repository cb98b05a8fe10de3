"""Route a qubit by teleportation through Bell pairs and inspect the structure matrix.

Run: python3 demos/garden_hose_routing.py
"""
import numpy as np

from nlqcbounds.boolfn import make_family
from nlqcbounds.frouting import (
    decoupling_grid,
    omega1_check,
    rank_bound,
    structure_matrix,
    verify_decomposition,
    verify_routing,
)
from nlqcbounds.nlqc import entanglement_cost, fixture_strategy, garden_hose_compile, resource_schmidt_rank

np.set_printoptions(precision=4, suppress=True)

s = fixture_strategy("eq_n2")
f = make_family("EQ", 2)
print(f"strategy {s.name}: {s.pipes} pipes, computes EQ: {s.function() == f}")
print("route for x=01, y=01:", s.trace("01", "01"))
print("route for x=01, y=10:", s.trace("01", "10"))

p = garden_hose_compile(s)
rep = verify_routing(p, f)
print("eps0, eps1:", rep.eps0, rep.eps1)

# R decouples from Bob's systems exactly when f = 0
print("decoupling gaps\n", decoupling_grid(p))

G = structure_matrix(p, f)
print("structure matrix\n", G.G)
print("support matches f:", G.pattern_matches)

rb = rank_bound(G, "FR0")
d_e = resource_schmidt_rank(p)
print(f"rank {rb.numerical_rank}, bound {rb.bound_ebits} ebits, cost {entanglement_cost(p)} ebits")
print("rank <= d_E^4:", verify_decomposition(G, d_e))

# Bob must hold at least one ebit for any non-constant row
r = omega1_check(p, f, 0)
print(f"S(E_B) = {r.entropy_r:.6f}, checks hold: {r.ok}")
