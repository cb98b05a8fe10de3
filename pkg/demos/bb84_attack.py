"""f-BB84: both parties must answer the referee's measurement in basis H^f(x,y).

Run: python3 demos/bb84_attack.py
"""
import numpy as np

from nlqcbounds.boolfn import make_family
from nlqcbounds.fbb84 import bb84_zoo, garden_hose_bb84, rank_bound_bb84, structure_matrix_bb84, verify_bb84
from nlqcbounds.nlqc import fixture_strategy, random_protocol

np.set_printoptions(precision=4, suppress=True)

# measure and broadcast wins whenever the basis is computational
bp = bb84_zoo("constant0", 1)
print("constant0 vs f=0\n", verify_bb84(bp, make_family("ZERO", 1)).success)
print("constant0 vs f=1\n", verify_bb84(bp, make_family("ONE", 1)).success)

# route Q per EQ, measure on arrival and share the outcomes
f = make_family("EQ", 2)
hose = garden_hose_bb84(fixture_strategy("eq_n2"))
rep = verify_bb84(hose, f)
print("garden-hose EQ worst success:", rep.worst)
G = structure_matrix_bb84(hose.protocol, f)
print("structure matrix\n", G.G)
print("bound:", rank_bound_bb84(G).bound_ebits, "ebits")

# one Bell pair caps the rank at 2 * 2^4
rng = np.random.default_rng(0)
ranks = [rank_bound_bb84(structure_matrix_bb84(random_protocol(rng, 6, d_e=2))).numerical_rank
         for _ in range(20)]
print("random 1-ebit protocols at n=6, ranks:", sorted(ranks))
