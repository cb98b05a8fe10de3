"""Rank lower bounds from zero patterns alone.

Run: python3 demos/pattern_rank.py
"""
import numpy as np

from nlqcbounds.boolfn import make_family, support_pattern
from nlqcbounds.patternrank import brute_force_min_rank, family_bound, triangular_bound

# DISJ is anti-triangular: walking down from any 1 stays in zeros
pat = support_pattern(make_family("DISJ", 2)).pattern.astype(int)
print(pat)
cert = family_bound("DISJ", 2)
print(cert.to_text())

# the complement of the identity forces only rank 2: signs can cancel
jmi = ~np.eye(3, dtype=bool)
print("J - I: triangular", triangular_bound(jmi).lower_bound, "grid search", brute_force_min_rank(jmi))

# IP has no triangular structure to exploit
try:
    family_bound("IP", 2)
except Exception as e:
    print(type(e).__name__, e)
