"""Classical CDS, the one-time-pad lift to quantum secrets, and routing as CDQS.

Run: python3 demos/cds_pipeline.py
"""
from nlqcbounds.boolfn import make_family
from nlqcbounds.cds import (
    brute_force_cds_search,
    cds_to_cdqs,
    format_cds,
    fr_to_cdqs,
    parallel_repeat,
    randomness_bound,
    verify_cdqs,
    verify_cds,
)
from nlqcbounds.nlqc import fixture_strategy, garden_hose_compile

AND = make_family("AND", 1)
c = brute_force_cds_search(AND, k=1, randomness_bits=1, message_bits=1)
print(format_cds(c))
print(verify_cds(c, AND))

# no shared randomness, no privacy
print("EQ with 0 random bits:", brute_force_cds_search(make_family("EQ", 1), 1, 0, 1))

# two copies hide two classical bits, enough to pad one qubit
q = cds_to_cdqs(parallel_repeat(c, 2))
rep = verify_cdqs(q, AND)
print(f"CDQS for AND: correctness <= {rep.correct_upper:.2e}, security <= {rep.secure_upper:.2e}")

# a perfect routing protocol is already a CDQS scheme
f = make_family("EQ", 1)
q = fr_to_cdqs(garden_hose_compile(fixture_strategy("eq_n1")), f)
print("routing as CDQS perfect:", verify_cdqs(q, f).perfect())

for fam in ("EQ", "NEQ", "GT"):
    b = randomness_bound(make_family(fam, 4))
    print(f"{fam} n=4: ppCDS >= {b.pp_bits:.4f} bits, pcCDS >= {b.pc_bits:.4f} bits")
