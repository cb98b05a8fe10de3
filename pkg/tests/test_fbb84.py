import numpy as np
import pytest

from nlqcbounds.boolfn import make_family
from nlqcbounds.errors import ConfigError
from nlqcbounds.fbb84 import (
    Bb84Pair,
    BB84Protocol,
    bb84_zoo,
    garden_hose_bb84,
    load_bb84,
    post_measurement_states,
    rank_bound_bb84,
    referee_projector,
    save_bb84,
    structure_function_bb84,
    structure_matrix_bb84,
    verify_bb84,
)
from nlqcbounds.nlqc import compute_mid_state, fixture_strategy, zoo_protocol
from nlqcbounds.frouting import StructureMatrix


def test_referee_projectors():
    np.testing.assert_allclose(referee_projector(0, 0), np.diag([1, 0]))
    np.testing.assert_allclose(referee_projector(1, 0), np.full((2, 2), 0.5), atol=1e-15)
    np.testing.assert_allclose(referee_projector(1, 0) + referee_projector(1, 1), np.eye(2), atol=1e-15)
    with pytest.raises(ConfigError):
        referee_projector(2, 0)


@pytest.mark.parametrize("fam", ["EQ", "ZERO", "ONE"])
def test_constant0_broadcast_wins_when_basis_is_computational(fam):
    bp = bb84_zoo("constant0", 1)
    f = make_family("ZERO", 1)
    rep = verify_bb84(bp, f)
    assert rep.perfect(1e-12)
    G = structure_matrix_bb84(bp.protocol, f)
    assert np.abs(G.G).max() <= 1e-12


def test_constant0_fails_in_hadamard_basis():
    rep = verify_bb84(bb84_zoo("constant0", 1), make_family("ONE", 1))
    np.testing.assert_allclose(rep.success, 0.5, atol=1e-12)


def test_discard_guesses():
    rep = verify_bb84(bb84_zoo("discard", 1), make_family("EQ", 1))
    np.testing.assert_allclose(rep.success, 0.5, atol=1e-12)


@pytest.mark.parametrize("name", ["eq_n1", "eq_n1_hose", "eq_n2"])
def test_garden_hose_bb84_perfect(name):
    s = fixture_strategy(name)
    bp = garden_hose_bb84(s)
    f = make_family("EQ", s.n)
    assert verify_bb84(bp, f).perfect(1e-9)
    G = structure_matrix_bb84(bp.protocol, f)
    assert G.pattern_matches


def test_post_measurement_states_product():
    p = zoo_protocol("discard", make_family("EQ", 1))
    m = compute_mid_state(p, 0, 0)
    pair = post_measurement_states(m, "M")
    sigma = m.reduced(("M0", "M1")).data
    np.testing.assert_allclose(pair.rho0, sigma / 2, atol=1e-14)
    np.testing.assert_allclose(pair.rho1, sigma / 2, atol=1e-14)


def test_post_measurement_states_entangled():
    p = zoo_protocol("constant1", make_family("ONE", 1))
    m = compute_mid_state(p, 0, 0)
    pair = post_measurement_states(m, "M'")
    np.testing.assert_allclose(pair.rho0, np.diag([0.5, 0]), atol=1e-14)
    np.testing.assert_allclose(pair.rho1, np.diag([0, 0.5]), atol=1e-14)
    assert pair.overlap == pytest.approx(0, abs=1e-14)
    # the M side is one-dimensional, so its halves are 1/2 each
    assert structure_function_bb84(m) == pytest.approx(0.25, abs=1e-14)


def test_overlap_arithmetic():
    assert Bb84Pair(np.eye(2) / 4, np.eye(2) / 4).overlap == pytest.approx(1 / 8)
    assert Bb84Pair(np.diag([1, 0]), np.diag([0, 1])).overlap == 0


def test_rank_bound_bb84_examples():
    assert rank_bound_bb84(np.eye(8)).bound_ebits == pytest.approx(0.5)
    assert rank_bound_bb84(np.eye(2)).bound_ebits == 0
    rb = rank_bound_bb84(np.zeros((2, 2)))
    assert rb.degenerate
    G = StructureMatrix(1, np.eye(2), "fbb84", "M+M'")
    assert rank_bound_bb84(G, d_e=1).decomposition_ok


def test_structure_matrix_matches_pointwise():
    bp = garden_hose_bb84(fixture_strategy("eq_n1_hose"))
    G = structure_matrix_bb84(bp.protocol)
    for x in range(2):
        for y in range(2):
            g = structure_function_bb84(compute_mid_state(bp.protocol, x, y))
            assert G.G[x, y] == pytest.approx(g, abs=1e-12)


def test_missing_povm_is_config_error():
    bp = bb84_zoo("constant0", 1)
    povms = dict(bp.alice_povms)
    povms.pop((0, 0))
    with pytest.raises(ConfigError):
        BB84Protocol(bp.protocol, povms, bp.bob_povms)


def test_bb84_json_roundtrip(tmp_path):
    bp = garden_hose_bb84(fixture_strategy("eq_n1"))
    path = tmp_path / "bb.json"
    save_bb84(bp, path)
    back = load_bb84(path)
    f = make_family("EQ", 1)
    np.testing.assert_allclose(verify_bb84(back, f).success, verify_bb84(bp, f).success, atol=1e-12)
