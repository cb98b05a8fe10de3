import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from nlqcbounds.boolfn import TruthTable, negate, support_pattern
from nlqcbounds.cds import format_cds, parse_cds, parallel_repeat, scheme_from_functions, verify_cds
from nlqcbounds.fbb84 import structure_matrix_bb84
from nlqcbounds.frouting import rank_bound, soundness, structure_matrix, structure_value
from nlqcbounds.nlqc import M0P, M1P, compute_mid_state, random_protocol, reduced_grid
from nlqcbounds.patternrank import brute_force_min_rank, grid_upper_bound, triangular_bound, verify_certificate
from nlqcbounds.qmath import (
    SubsystemLayout,
    conditional_entropy,
    continuity_bound,
    fidelity,
    partial_trace,
    random_density_matrix,
    random_pure_state,
    mutual_information,
    trace_distance,
    von_neumann_entropy,
)

seeds = st.integers(0, 2 ** 32 - 1)
FAST = settings(max_examples=40, deadline=None)
SLOW = settings(max_examples=10, deadline=None)


@FAST
@given(seeds, st.integers(1, 3), st.integers(1, 3))
def test_partial_trace_is_trace_preserving_and_psd(seed, da, db):
    rng = np.random.default_rng(seed)
    lay = SubsystemLayout.of(("A", da), ("B", db), ("C", 2))
    rho = random_density_matrix(rng, lay)
    red = partial_trace(rho, ("A", "C"))
    assert abs(np.trace(red.data) - 1) < 1e-12
    assert red.eigenvalues().min() > -1e-12
    np.testing.assert_allclose(partial_trace(red, ("A",)).data, partial_trace(rho, ("A",)).data, atol=1e-13)


@FAST
@given(seeds, st.integers(2, 4))
def test_fuchs_van_de_graaf(seed, d):
    rng = np.random.default_rng(seed)
    lay = SubsystemLayout.of(("A", d))
    rho, sigma = random_density_matrix(rng, lay), random_density_matrix(rng, lay)
    F, T = fidelity(rho, sigma), trace_distance(rho, sigma)
    assert 1 - F <= T + 1e-9
    assert T <= np.sqrt(1 - F ** 2) + 1e-9


@FAST
@given(seeds, st.integers(2, 3), st.integers(1, 3))
def test_conditional_entropy_continuity(seed, da, db):
    rng = np.random.default_rng(seed)
    lay = SubsystemLayout.of(("A", da), ("B", db))
    rho, sigma = random_density_matrix(rng, lay), random_density_matrix(rng, lay)
    eps = trace_distance(rho, sigma)
    diff = abs(conditional_entropy(rho, "A", "B") - conditional_entropy(sigma, "A", "B"))
    assert diff <= continuity_bound(min(eps, 1.0), da) + 1e-9


@FAST
@given(seeds)
def test_entropy_bounds_and_subadditivity(seed):
    rng = np.random.default_rng(seed)
    lay = SubsystemLayout.of(("A", 2), ("B", 3))
    rho = random_density_matrix(rng, lay)
    s = von_neumann_entropy(rho)
    assert -1e-12 <= s <= np.log2(6) + 1e-12
    assert mutual_information(rho, "A", "B") >= -1e-10


@FAST
@given(seeds)
def test_structure_value_nonnegative_and_zero_on_products(seed):
    rng = np.random.default_rng(seed)
    lay = SubsystemLayout.of(("R", 2), ("S", 3))
    rho = random_density_matrix(rng, lay).data
    assert structure_value(rho, 2) >= -1e-14
    sigma = random_density_matrix(rng, SubsystemLayout.of(("S", 3))).data
    assert abs(structure_value(np.kron(np.eye(2) / 2, sigma), 2)) < 1e-14


@SLOW
@given(seeds, st.integers(1, 2))
def test_routing_rank_decomposition_and_soundness(seed, n):
    p = random_protocol(np.random.default_rng(seed), n, d_e=2)
    G = structure_matrix(p)
    rb = rank_bound(G)
    assert rb.numerical_rank <= 16
    assert soundness(p, rb)
    assert structure_matrix_bb84(p).G.min() >= -1e-12


@SLOW
@given(seeds)
def test_reduced_grid_matches_mid_state(seed):
    p = random_protocol(np.random.default_rng(seed), 1, d_e=2)
    lay, grid = reduced_grid(p, (M0P,), (M1P,))
    x, y = seed % 2, (seed >> 1) % 2
    direct = compute_mid_state(p, x, y).reduced(lay.labels)
    np.testing.assert_allclose(grid[x, y], direct.data, atol=1e-12)


patterns = st.integers(1, 4).flatmap(
    lambda r: st.integers(1, 4).flatmap(lambda c: arrays(bool, (r, c))))


@settings(max_examples=60, deadline=None)
@given(patterns)
def test_triangular_bound_is_sound(pat):
    cert = triangular_bound(pat)
    assert verify_certificate(pat, cert)
    if min(pat.shape) <= 3 or grid_upper_bound(pat) <= 3:
        assert cert.lower_bound <= brute_force_min_rank(pat)


@settings(max_examples=60, deadline=None)
@given(arrays(bool, (4, 4)), st.permutations(range(4)), st.permutations(range(4)))
def test_triangular_bound_permutation_invariant(pat, pr, pc):
    a = triangular_bound(pat).lower_bound
    b = triangular_bound(pat[np.ix_(pr, pc)]).lower_bound
    assert a == b == triangular_bound(pat.T).lower_bound


@FAST
@given(arrays(np.uint8, (4, 4), elements=st.integers(0, 1)))
def test_negation_complements_support(t):
    f = TruthTable(2, t)
    assert negate(negate(f)) == f
    assert np.array_equal(support_pattern(negate(f)).pattern, ~support_pattern(f).pattern)


@FAST
@given(seeds)
def test_cds_text_roundtrip_and_repeat(seed):
    rng = np.random.default_rng(seed)
    m0 = rng.integers(0, 2, (2, 2, 2))
    m1 = rng.integers(0, 3, (2, 2))
    c = scheme_from_functions(1, 1, 1, 2, 3, lambda x, s, r: m0[x, s, r], lambda y, r: m1[y, r])
    d = parse_cds(format_cds(c))
    assert np.array_equal(d.m0, c.m0) and np.array_equal(d.m1, c.m1) and np.array_equal(d.dec, c.dec)
    f = TruthTable(1, rng.integers(0, 2, (2, 2)))
    rep, rep2 = verify_cds(c, f), verify_cds(parallel_repeat(c, 2), f)
    # two copies fail at least as often, and leak at least as much
    assert rep2.eps >= rep.eps - 1e-12 and rep2.delta >= rep.delta - 1e-12
    assert 0 <= rep.tv <= 1


@FAST
@given(seeds)
def test_mixed_and_pure_entropies_agree(seed):
    rng = np.random.default_rng(seed)
    lay = SubsystemLayout.of(("A", 2), ("B", 4))
    psi = random_pure_state(rng, lay)
    assert abs(von_neumann_entropy(psi.reduced(("A",))) - von_neumann_entropy(psi.reduced(("B",)))) < 1e-10
