from itertools import product

import numpy as np
import pytest

from nlqcbounds.boolfn import make_family, negate, support_pattern
from nlqcbounds.errors import ConfigError, SizeError, UnsupportedError
from nlqcbounds.patternrank import (
    RankCertificate,
    brute_force_min_rank,
    family_bound,
    grid_upper_bound,
    triangular_bound,
    verify_certificate,
)


def test_triangular_examples():
    eq = support_pattern(make_family("EQ", 2))
    c = triangular_bound(eq)
    assert c.lower_bound == 4 and c.method == "diagonal"
    gt = triangular_bound(support_pattern(make_family("GT", 2)))
    assert gt.lower_bound == 4 and gt.method == "triangular-submatrix"
    assert triangular_bound(np.ones((3, 3), dtype=bool)).lower_bound == 1
    assert triangular_bound(np.zeros((2, 2), dtype=bool)).lower_bound == 0


def test_certificates_verify():
    pat = support_pattern(make_family("DISJ", 3))
    c = triangular_bound(pat)
    assert verify_certificate(pat, c)
    bad = RankCertificate(c.lower_bound, c.method, c.rows, tuple(reversed(c.cols)))
    assert not verify_certificate(pat, bad)


def test_certificate_text_roundtrip():
    c = family_bound("NEQ", 2)
    assert RankCertificate.from_text(c.to_text()) == c
    with pytest.raises(ConfigError):
        RankCertificate.from_text("method diagonal\n")


def test_brute_force_examples():
    assert brute_force_min_rank(np.eye(2, dtype=bool)) == 2
    assert brute_force_min_rank(np.array([[1, 1], [1, 0]], dtype=bool)) == 2
    assert brute_force_min_rank(np.ones((3, 3), dtype=bool)) == 1
    assert brute_force_min_rank(np.zeros((3, 3), dtype=bool)) == 0
    with pytest.raises(SizeError):
        brute_force_min_rank(np.ones((9, 9), dtype=bool))


def test_brute_force_finds_sign_cancellation():
    # J - I on 3x3 has rank 3 as 0/1 but a grid matrix with that support has rank 2
    pat = ~np.eye(3, dtype=bool)
    assert grid_upper_bound(pat) == 3
    assert brute_force_min_rank(pat) == 2
    assert triangular_bound(pat).lower_bound == 2


def test_all_2x2_patterns_agree():
    for bits in product((0, 1), repeat=4):
        pat = np.array(bits, dtype=bool).reshape(2, 2)
        assert triangular_bound(pat).lower_bound == brute_force_min_rank(pat)


@pytest.mark.parametrize("fam", ["EQ", "GT", "LT", "DISJ", "NEQ", "INT"])
@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_family_bounds_full(fam, n):
    c = family_bound(fam, n)
    assert c.lower_bound == 2 ** n
    pat = support_pattern(make_family(fam, n))
    if c.negated:
        pat = support_pattern(negate(make_family(fam, n)))
    assert verify_certificate(pat, c)


def test_ip_is_unsupported():
    with pytest.raises(UnsupportedError):
        family_bound("IP", 2)
    with pytest.raises(ConfigError):
        family_bound("XOR", 2)


def test_large_pattern_uses_restarts():
    pat = support_pattern(make_family("DISJ", 5))
    assert triangular_bound(pat).lower_bound == 32
